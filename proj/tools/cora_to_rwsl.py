#!/usr/bin/env python3
"""Convert the LINQS Cora release (cora.content, cora.cites) to rwsl inputs.

Writes edges.txt, features.txt and labels.txt with nodes renumbered 0..N-1 in
the order of cora.content and classes numbered by sorted name.
"""

import argparse
import os


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("src", help="directory holding cora.content and cora.cites")
    ap.add_argument("dst", help="output directory")
    args = ap.parse_args()

    ids, feats, names = [], [], []
    with open(os.path.join(args.src, "cora.content")) as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            ids.append(parts[0])
            feats.append(parts[1:-1])
            names.append(parts[-1])
    index = {pid: i for i, pid in enumerate(ids)}
    classes = {c: i for i, c in enumerate(sorted(set(names)))}

    edges = set()
    skipped = 0
    with open(os.path.join(args.src, "cora.cites")) as f:
        for line in f:
            parts = line.split()
            if len(parts) != 2:
                continue
            if parts[0] not in index or parts[1] not in index:
                skipped += 1
                continue
            u, v = index[parts[0]], index[parts[1]]
            if u != v:
                edges.add((min(u, v), max(u, v)))

    os.makedirs(args.dst, exist_ok=True)
    with open(os.path.join(args.dst, "edges.txt"), "w") as f:
        f.writelines(f"{u} {v}\n" for u, v in sorted(edges))
    with open(os.path.join(args.dst, "features.txt"), "w") as f:
        f.writelines(" ".join(row) + "\n" for row in feats)
    with open(os.path.join(args.dst, "labels.txt"), "w") as f:
        f.writelines(f"{classes[c]}\n" for c in names)
    print(f"{len(ids)} nodes, {len(edges)} edges, {len(feats[0])} features, {len(classes)} classes"
          + (f", {skipped} citations to unknown papers dropped" if skipped else ""))


if __name__ == "__main__":
    main()
