#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "rwsl/common.hpp"

namespace rwsl {

/// Undirected graph in compressed sparse row form.
///
/// Each undirected edge {u, v} is stored twice (u->v and v->u). Rows are
/// sorted and free of duplicates. After augment_self_loops() every row also
/// lists its own node exactly once and degree() returns the augmented degree.
struct CsrGraph {
    std::size_t n_nodes = 0;
    std::size_t n_edges = 0;  // undirected, self-loops excluded
    std::vector<std::size_t> row_offsets{0};
    std::vector<NodeId> col_indices;
    bool self_loops_added = false;

    std::size_t degree(NodeId u) const { return row_offsets[u + 1] - row_offsets[u]; }

    std::span<const NodeId> neighbors(NodeId u) const {
        return {col_indices.data() + row_offsets[u], degree(u)};
    }

    std::size_t degree_sum() const { return col_indices.size(); }

    /// Throws ContractViolation if any structural invariant is broken.
    void validate() const;

    /// Structural fingerprint used to key caches of derived data.
    std::uint64_t fingerprint() const;

    bool operator==(const CsrGraph&) const = default;
};

using Edge = std::pair<NodeId, NodeId>;

/// Builds a symmetric, deduplicated graph. Self-loops in the input are dropped.
CsrGraph build_graph(std::size_t n_nodes, std::span<const Edge> edges);

/// Reads whitespace-separated "u v" pairs, one per line, 0-based ids.
/// Blank lines and lines starting with '#' or '%' are skipped.
CsrGraph load_edge_list(const std::filesystem::path& path, std::size_t n_nodes);

/// Writes each undirected edge once as "u v" with u < v.
void save_edge_list(const CsrGraph& g, const std::filesystem::path& path);

CsrGraph augment_self_loops(const CsrGraph& g);

/// R-MAT generator (PaRMAT default quadrant probabilities a=0.45, b=c=0.22,
/// d=0.11). Samples until round(edge_factor * n_nodes) distinct undirected
/// edges exist, capped at n(n-1)/2. Deterministic in the seed.
CsrGraph rmat_generate(std::size_t n_nodes, double edge_factor, std::uint64_t seed);

/// Dense feature matrix, one row per node; values separated by whitespace
/// and/or commas.
FeatureMatrix load_features(const std::filesystem::path& path);
void save_features(const FeatureMatrix& x, const std::filesystem::path& path);

/// Uniform [0,1) features for synthetic benchmarks.
FeatureMatrix random_features(std::size_t n_rows, std::size_t n_cols, std::uint64_t seed);

LabelVector load_labels(const std::filesystem::path& path);
void save_labels(const LabelVector& labels, const std::filesystem::path& path);

}  // namespace rwsl
