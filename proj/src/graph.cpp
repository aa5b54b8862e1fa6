#include "rwsl/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>

namespace rwsl {

int count_classes(const LabelVector& labels) {
    int k = 0;
    for (int l : labels) {
        if (l < 0) throw RangeError("negative label " + std::to_string(l));
        k = std::max(k, l + 1);
    }
    return k;
}

void CsrGraph::validate() const {
    require(row_offsets.size() == n_nodes + 1, "row_offsets must have n_nodes+1 entries");
    require(row_offsets.front() == 0, "row_offsets must start at 0");
    require(row_offsets.back() == col_indices.size(), "row_offsets must end at nnz");
    std::size_t self = 0;
    for (NodeId u = 0; u < n_nodes; ++u) {
        require(row_offsets[u] <= row_offsets[u + 1], "row_offsets must be non-decreasing");
        auto nb = neighbors(u);
        bool has_self = false;
        for (std::size_t i = 0; i < nb.size(); ++i) {
            require(nb[i] < n_nodes, "neighbor id out of range");
            if (i > 0) require(nb[i - 1] < nb[i], "rows must be sorted and duplicate-free");
            if (nb[i] == u) {
                has_self = true;
                ++self;
            } else {
                auto back = neighbors(nb[i]);
                require(std::binary_search(back.begin(), back.end(), u), "adjacency must be symmetric");
            }
        }
        require(has_self == self_loops_added, "self-loop presence must match self_loops_added");
    }
    require(col_indices.size() - self == 2 * n_edges, "n_edges must count each undirected edge once");
}

std::uint64_t CsrGraph::fingerprint() const {
    // FNV-1a over the CSR arrays.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    mix(n_nodes);
    mix(n_edges);
    mix(self_loops_added ? 1 : 0);
    for (auto o : row_offsets) mix(o);
    for (auto c : col_indices) mix(c);
    return h;
}

CsrGraph build_graph(std::size_t n_nodes, std::span<const Edge> edges) {
    std::vector<std::size_t> counts(n_nodes + 1, 0);
    for (auto [u, v] : edges) {
        if (u >= n_nodes || v >= n_nodes) throw RangeError("edge endpoint out of range");
        if (u == v) continue;
        ++counts[u + 1];
        ++counts[v + 1];
    }
    for (std::size_t i = 0; i < n_nodes; ++i) counts[i + 1] += counts[i];

    std::vector<NodeId> cols(counts[n_nodes]);
    std::vector<std::size_t> cursor(counts.begin(), counts.end() - 1);
    for (auto [u, v] : edges) {
        if (u == v) continue;
        cols[cursor[u]++] = v;
        cols[cursor[v]++] = u;
    }

    CsrGraph g;
    g.n_nodes = n_nodes;
    g.row_offsets.assign(n_nodes + 1, 0);
    g.col_indices.reserve(cols.size());
    for (std::size_t u = 0; u < n_nodes; ++u) {
        auto first = cols.begin() + static_cast<std::ptrdiff_t>(counts[u]);
        auto last = cols.begin() + static_cast<std::ptrdiff_t>(counts[u + 1]);
        std::sort(first, last);
        last = std::unique(first, last);
        g.col_indices.insert(g.col_indices.end(), first, last);
        g.row_offsets[u + 1] = g.col_indices.size();
    }
    g.n_edges = g.col_indices.size() / 2;
    return g;
}

namespace {

std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool is_separator(char c) { return c == ' ' || c == '\t' || c == ',' || c == '\r'; }

// Splits on whitespace and commas.
template <typename Fn>
bool for_each_token(std::string_view line, Fn&& fn) {
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_separator(line[i])) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && !is_separator(line[j])) ++j;
        if (!fn(line.substr(i, j - i))) return false;
        i = j;
    }
    return true;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

}  // namespace

CsrGraph load_edge_list(const std::filesystem::path& path, std::size_t n_nodes) {
    auto in = open_input(path);
    std::vector<Edge> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto s = trim(line);
        if (s.empty() || s.front() == '#' || s.front() == '%') continue;
        std::uint64_t ids[2];
        int n = 0;
        bool ok = for_each_token(s, [&](std::string_view tok) {
            if (n >= 2 || !parse_number(tok, ids[n])) return false;
            ++n;
            return true;
        });
        if (!ok || n != 2) throw ParseError("malformed edge line in " + path.string(), lineno);
        if (ids[0] >= n_nodes || ids[1] >= n_nodes) {
            throw RangeError("node id >= " + std::to_string(n_nodes) + " at line " + std::to_string(lineno));
        }
        edges.emplace_back(static_cast<NodeId>(ids[0]), static_cast<NodeId>(ids[1]));
    }
    return build_graph(n_nodes, edges);
}

void save_edge_list(const CsrGraph& g, const std::filesystem::path& path) {
    auto out = open_output(path);
    for (NodeId u = 0; u < g.n_nodes; ++u) {
        for (NodeId v : g.neighbors(u)) {
            if (u < v) out << u << ' ' << v << '\n';
        }
    }
}

CsrGraph augment_self_loops(const CsrGraph& g) {
    if (g.self_loops_added) throw ContractViolation("graph already has self-loops");
    CsrGraph a;
    a.n_nodes = g.n_nodes;
    a.n_edges = g.n_edges;
    a.self_loops_added = true;
    a.row_offsets.assign(g.n_nodes + 1, 0);
    a.col_indices.reserve(g.col_indices.size() + g.n_nodes);
    for (NodeId u = 0; u < g.n_nodes; ++u) {
        auto nb = g.neighbors(u);
        auto pos = std::lower_bound(nb.begin(), nb.end(), u);
        a.col_indices.insert(a.col_indices.end(), nb.begin(), pos);
        a.col_indices.push_back(u);
        a.col_indices.insert(a.col_indices.end(), pos, nb.end());
        a.row_offsets[u + 1] = a.col_indices.size();
    }
    return a;
}

CsrGraph rmat_generate(std::size_t n_nodes, double edge_factor, std::uint64_t seed) {
    if (n_nodes < 2) throw ContractViolation("rmat_generate needs at least 2 nodes");
    if (!(edge_factor > 0)) throw ContractViolation("edge_factor must be positive");

    constexpr double a = 0.45, b = 0.22, c = 0.22;
    int scale = 0;
    while ((std::size_t{1} << scale) < n_nodes) ++scale;

    const double max_edges = 0.5 * static_cast<double>(n_nodes) * static_cast<double>(n_nodes - 1);
    const auto target = static_cast<std::size_t>(std::min(std::llround(edge_factor * static_cast<double>(n_nodes)),
                                                          static_cast<long long>(max_edges)));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(target * 2);
    std::vector<Edge> edges;
    edges.reserve(target);

    while (edges.size() < target) {
        std::uint64_t u = 0, v = 0;
        for (int level = 0; level < scale; ++level) {
            double p = unit(rng);
            u <<= 1;
            v <<= 1;
            if (p < a) {
            } else if (p < a + b) {
                v |= 1;
            } else if (p < a + b + c) {
                u |= 1;
            } else {
                u |= 1;
                v |= 1;
            }
        }
        if (u >= n_nodes || v >= n_nodes || u == v) continue;
        if (u > v) std::swap(u, v);
        if (seen.insert((u << 32) | v).second) {
            edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
        }
    }
    return build_graph(n_nodes, edges);
}

FeatureMatrix load_features(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<double> values;
    std::size_t n_cols = 0, n_rows = 0, lineno = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        auto s = trim(line);
        if (s.empty() || s.front() == '#') continue;
        std::size_t cols = 0;
        bool ok = for_each_token(s, [&](std::string_view tok) {
            double v;
            if (!parse_number(tok, v) || !std::isfinite(v)) return false;
            values.push_back(v);
            ++cols;
            return true;
        });
        if (!ok) throw ParseError("malformed or non-finite feature value in " + path.string(), lineno);
        if (n_rows == 0) n_cols = cols;
        if (cols != n_cols) throw ParseError("inconsistent column count in " + path.string(), lineno);
        ++n_rows;
    }
    FeatureMatrix x(n_rows, n_cols);
    std::copy(values.begin(), values.end(), x.data());
    return x;
}

void save_features(const FeatureMatrix& x, const std::filesystem::path& path) {
    auto out = open_output(path);
    out.precision(17);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (j) out << ' ';
            out << x(i, j);
        }
        out << '\n';
    }
}

FeatureMatrix random_features(std::size_t n_rows, std::size_t n_cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    FeatureMatrix x(n_rows, n_cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = unit(rng);
    return x;
}

LabelVector load_labels(const std::filesystem::path& path) {
    auto in = open_input(path);
    LabelVector labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto s = trim(line);
        if (s.empty() || s.front() == '#') continue;
        int v;
        if (!parse_number(s, v)) throw ParseError("malformed label in " + path.string(), lineno);
        if (v < 0) throw RangeError("negative label at line " + std::to_string(lineno));
        labels.push_back(v);
    }
    return labels;
}

void save_labels(const LabelVector& labels, const std::filesystem::path& path) {
    auto out = open_output(path);
    for (int l : labels) out << l << '\n';
}

}  // namespace rwsl
