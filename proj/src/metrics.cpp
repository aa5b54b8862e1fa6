#include "rwsl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace rwsl {

namespace {

void check_lengths(const LabelVector& pred, const LabelVector& truth) {
    if (pred.size() != truth.size()) {
        throw ContractViolation("label vectors differ in length: " + std::to_string(pred.size()) + " vs " +
                                std::to_string(truth.size()));
    }
}

void check_graph(const CsrGraph& g, const LabelVector& assignment) {
    if (g.self_loops_added) throw ContractViolation("graph metrics need the graph without self-loops");
    if (assignment.size() != g.n_nodes) throw ContractViolation("assignment length != n_nodes");
    if (g.n_edges == 0) throw ContractViolation("graph metrics are undefined for a graph without edges");
}

double entropy(const std::vector<double>& counts, double n) {
    double h = 0.0;
    for (double c : counts) {
        if (c > 0.0) h -= (c / n) * std::log(c / n);
    }
    return h;
}

// True iff the two labelings induce the same partition.
bool same_partition(const LabelVector& a, const LabelVector& b) {
    std::vector<int> fwd(static_cast<std::size_t>(count_classes(a)), -1);
    std::vector<int> back(static_cast<std::size_t>(count_classes(b)), -1);
    for (std::size_t i = 0; i < a.size(); ++i) {
        int& f = fwd[a[i]];
        int& r = back[b[i]];
        if (f == -1 && r == -1) {
            f = b[i];
            r = a[i];
        } else if (f != b[i] || r != a[i]) {
            return false;
        }
    }
    return true;
}

__int128 choose2(std::int64_t n) { return static_cast<__int128>(n) * (n - 1) / 2; }

}  // namespace

MetricReport MetricReport::from_values(const std::vector<double>& v) {
    require(v.size() == 6, "MetricReport needs six values");
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

std::string MetricReport::to_json() const {
    nlohmann::ordered_json j;
    const auto v = values();
    for (std::size_t i = 0; i < v.size(); ++i) j[kFieldNames[i]] = v[i];
    return j.dump(2);
}

std::string MetricReport::csv_header() {
    std::string s;
    for (std::size_t i = 0; i < 6; ++i) s += (i ? "," : "") + std::string(kFieldNames[i]);
    return s;
}

std::string MetricReport::csv_row() const {
    std::ostringstream os;
    os.precision(17);
    const auto v = values();
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weight) {
    const std::size_t n = weight.size();
    for (const auto& row : weight) require(row.size() == n, "assignment matrix must be square");
    if (n == 0) return {};
    double wmax = 0.0;
    for (const auto& row : weight) {
        for (double w : row) wmax = std::max(wmax, w);
    }

    // Shortest augmenting path Hungarian method on cost = wmax - weight,
    // 1-based potentials.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = (wmax - weight[i0 - 1][j - 1]) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (std::size_t j = 1; j <= n; ++j) {
        if (p[j] != 0) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
    }
    return row_to_col;
}

std::vector<std::vector<double>> confusion_matrix(const LabelVector& pred, const LabelVector& truth) {
    check_lengths(pred, truth);
    const auto kp = static_cast<std::size_t>(count_classes(pred));
    const auto kt = static_cast<std::size_t>(count_classes(truth));
    std::vector<std::vector<double>> c(kp, std::vector<double>(kt, 0.0));
    for (std::size_t i = 0; i < pred.size(); ++i) c[pred[i]][truth[i]] += 1.0;
    return c;
}

std::vector<int> best_cluster_mapping(const LabelVector& pred, const LabelVector& truth) {
    const auto c = confusion_matrix(pred, truth);
    const std::size_t kp = c.size();
    const std::size_t kt = c.empty() ? 0 : c.front().size();
    const std::size_t n = std::max(kp, kt);
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < kp; ++i) {
        for (std::size_t j = 0; j < kt; ++j) w[i][j] = c[i][j];
    }
    const auto match = max_weight_assignment(w);
    std::vector<int> mapping(kp, -1);
    for (std::size_t i = 0; i < kp; ++i) {
        if (match[i] >= 0 && static_cast<std::size_t>(match[i]) < kt) mapping[i] = match[i];
    }
    return mapping;
}

double accuracy(const LabelVector& pred, const LabelVector& truth) {
    check_lengths(pred, truth);
    if (pred.empty()) return 0.0;
    const auto mapping = best_cluster_mapping(pred, truth);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += mapping[pred[i]] == truth[i];
    return static_cast<double>(hit) / static_cast<double>(pred.size());
}

double nmi(const LabelVector& pred, const LabelVector& truth) {
    check_lengths(pred, truth);
    if (pred.empty()) return 0.0;
    if (same_partition(pred, truth)) return 1.0;
    const auto c = confusion_matrix(pred, truth);
    const double n = static_cast<double>(pred.size());
    std::vector<double> a(c.size(), 0.0), b(c.front().size(), 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            a[i] += c[i][j];
            b[j] += c[i][j];
        }
    }
    const double ha = entropy(a, n), hb = entropy(b, n);
    if (ha <= 0.0 || hb <= 0.0) return 0.0;
    double mi = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (c[i][j] > 0.0) mi += (c[i][j] / n) * std::log(n * c[i][j] / (a[i] * b[j]));
        }
    }
    return std::clamp(mi / (0.5 * (ha + hb)), 0.0, 1.0);
}

double ari(const LabelVector& pred, const LabelVector& truth) {
    check_lengths(pred, truth);
    if (pred.size() < 2) throw ContractViolation("ari needs at least two samples");
    const auto c = confusion_matrix(pred, truth);
    std::vector<std::int64_t> a(c.size(), 0), b(c.front().size(), 0);
    __int128 sum_ij = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            const auto nij = static_cast<std::int64_t>(c[i][j]);
            a[i] += nij;
            b[j] += nij;
            sum_ij += choose2(nij);
        }
    }
    __int128 sa = 0, sb = 0;
    for (auto x : a) sa += choose2(x);
    for (auto x : b) sb += choose2(x);
    const __int128 total = choose2(static_cast<std::int64_t>(pred.size()));
    // Scaled by 2 * C(n,2) so everything stays integral.
    const __int128 num = 2 * (sum_ij * total - sa * sb);
    const __int128 den = (sa + sb) * total - 2 * sa * sb;
    if (den == 0) return same_partition(pred, truth) ? 1.0 : 0.0;
    return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

double macro_f1(const LabelVector& pred, const LabelVector& truth) {
    check_lengths(pred, truth);
    if (pred.empty()) return 0.0;
    const auto mapping = best_cluster_mapping(pred, truth);
    const auto kt = static_cast<std::size_t>(count_classes(truth));
    std::vector<double> tp(kt, 0.0), predicted(kt, 0.0), actual(kt, 0.0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int m = mapping[pred[i]];
        actual[truth[i]] += 1.0;
        if (m >= 0) {
            predicted[m] += 1.0;
            if (m == truth[i]) tp[m] += 1.0;
        }
    }
    double sum = 0.0;
    std::size_t classes = 0;
    for (std::size_t c = 0; c < kt; ++c) {
        if (actual[c] == 0.0) continue;
        ++classes;
        const double denom = predicted[c] + actual[c];
        if (tp[c] > 0.0) sum += 2.0 * tp[c] / denom;
    }
    return classes ? sum / static_cast<double>(classes) : 0.0;
}

namespace {

struct ClusterEdgeStats {
    std::vector<double> internal;  // undirected internal edges
    std::vector<double> volume;
    std::vector<double> cut;
    std::vector<std::size_t> size;
};

ClusterEdgeStats edge_stats(const CsrGraph& g, const LabelVector& assignment) {
    const auto k = static_cast<std::size_t>(count_classes(assignment));
    ClusterEdgeStats s{std::vector<double>(k, 0.0), std::vector<double>(k, 0.0), std::vector<double>(k, 0.0),
                       std::vector<std::size_t>(k, 0)};
    for (NodeId u = 0; u < g.n_nodes; ++u) {
        const int cu = assignment[u];
        ++s.size[cu];
        s.volume[cu] += static_cast<double>(g.degree(u));
        for (NodeId v : g.neighbors(u)) {
            if (assignment[v] == cu) {
                s.internal[cu] += 0.5;
            } else {
                s.cut[cu] += 1.0;
            }
        }
    }
    return s;
}

}  // namespace

double modularity(const CsrGraph& g, const LabelVector& assignment) {
    check_graph(g, assignment);
    const auto s = edge_stats(g, assignment);
    const double m = static_cast<double>(g.n_edges);
    double q = 0.0;
    for (std::size_t c = 0; c < s.volume.size(); ++c) {
        const double frac = s.volume[c] / (2.0 * m);
        q += s.internal[c] / m - frac * frac;
    }
    return q;
}

double conductance(const CsrGraph& g, const LabelVector& assignment) {
    check_graph(g, assignment);
    const auto s = edge_stats(g, assignment);
    const double total_volume = 2.0 * static_cast<double>(g.n_edges);
    double sum = 0.0;
    std::size_t clusters = 0;
    for (std::size_t c = 0; c < s.volume.size(); ++c) {
        if (s.size[c] == 0) continue;
        ++clusters;
        const double denom = std::min(s.volume[c], total_volume - s.volume[c]);
        if (denom > 0.0) sum += s.cut[c] / denom;
    }
    return clusters ? sum / static_cast<double>(clusters) : 0.0;
}

MetricReport evaluate(const CsrGraph& g, const LabelVector& pred, const LabelVector& truth) {
    MetricReport r;
    r.accuracy = accuracy(pred, truth);
    r.nmi = nmi(pred, truth);
    r.ari = ari(pred, truth);
    r.macro_f1 = macro_f1(pred, truth);
    r.modularity = modularity(g, pred);
    r.conductance = conductance(g, pred);
    return r;
}

}  // namespace rwsl
