#include "rwsl/gpr_filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace rwsl {

void FilterConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ContractViolation("alpha must be in (0,1)");
    if (!(r >= 0.0 && r <= 1.0)) throw ContractViolation("r must be in [0,1]");
    if (!(r_max > 0.0)) throw ContractViolation("r_max must be positive");
    if (n_walks < 1) throw ContractViolation("n_walks must be >= 1");
}

std::size_t walk_budget(double r_max, double scale) {
    if (!(r_max > 0.0) || !(scale > 0.0)) throw ContractViolation("walk budget needs positive r_max and scale");
    return static_cast<std::size_t>(std::ceil(scale / r_max));
}

namespace {

void check_inputs(const CsrGraph& g, const FeatureMatrix& x) {
    if (!g.self_loops_added) throw ContractViolation("propagation requires a self-loop augmented graph");
    if (static_cast<std::size_t>(x.rows()) != g.n_nodes) {
        throw ContractViolation("feature rows (" + std::to_string(x.rows()) + ") != graph nodes (" +
                                std::to_string(g.n_nodes) + ")");
    }
}

// Precomputed d^{r-1} and d^{-r} so repeated steps skip the pow calls.
class Propagator {
public:
    Propagator(const CsrGraph& g, double r) : g_(g), left_(g.n_nodes), right_(g.n_nodes) {
        for (NodeId u = 0; u < g.n_nodes; ++u) {
            const double d = static_cast<double>(g.degree(u));
            left_[u] = std::pow(d, r - 1.0);
            right_[u] = std::pow(d, -r);
        }
    }

    void apply(const FeatureMatrix& x, FeatureMatrix& y) const {
        y.resize(x.rows(), x.cols());
        const auto n = static_cast<std::ptrdiff_t>(g_.n_nodes);
#pragma omp parallel for schedule(dynamic, 64)
        for (std::ptrdiff_t u = 0; u < n; ++u) {
            auto row = y.row(u);
            row.setZero();
            for (NodeId v : g_.neighbors(static_cast<NodeId>(u))) row.noalias() += right_[v] * x.row(v);
            row *= left_[u];
        }
    }

private:
    const CsrGraph& g_;
    std::vector<double> left_;
    std::vector<double> right_;
};

}  // namespace

FeatureMatrix propagate_step(const CsrGraph& g, const FeatureMatrix& x, double r) {
    check_inputs(g, x);
    FeatureMatrix y;
    Propagator(g, r).apply(x, y);
    return y;
}

std::vector<double> ppr_weights(double alpha, std::size_t hops) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ContractViolation("alpha must be in (0,1)");
    std::vector<double> w(hops + 1);
    double decay = 1.0;
    for (auto& wl : w) {
        wl = alpha * decay;
        decay *= 1.0 - alpha;
    }
    return w;
}

FeatureMatrix filter_exact(const CsrGraph& g, const FeatureMatrix& x, const FilterConfig& cfg) {
    cfg.validate();
    check_inputs(g, x);
    const auto w = ppr_weights(cfg.alpha, cfg.hops);
    Propagator step(g, cfg.r);

    FeatureMatrix acc = w[0] * x;
    FeatureMatrix cur = x;
    FeatureMatrix next;
    for (std::size_t l = 1; l <= cfg.hops; ++l) {
        step.apply(cur, next);
        acc.noalias() += w[l] * next;
        cur.swap(next);
    }
    return acc;
}

FeatureMatrix filter_randomwalk(const CsrGraph& g, const FeatureMatrix& x, const FilterConfig& cfg,
                                std::uint64_t seed) {
    cfg.validate();
    check_inputs(g, x);
    if (cfg.r != 0.5) throw UnsupportedConfig("random-walk estimator supports r = 0.5 only");

    const std::size_t n = g.n_nodes;
    std::vector<double> sqrt_deg(n);
    for (NodeId u = 0; u < n; ++u) sqrt_deg[u] = std::sqrt(static_cast<double>(g.degree(u)));

    FeatureMatrix out = FeatureMatrix::Zero(x.rows(), x.cols());
    const double inv_walks = 1.0 / static_cast<double>(cfg.n_walks);

#pragma omp parallel
    {
        std::vector<std::uint32_t> hits(n, 0);
        std::vector<NodeId> touched;
#pragma omp for schedule(dynamic, 16)
        for (std::ptrdiff_t su = 0; su < static_cast<std::ptrdiff_t>(n); ++su) {
            const auto u = static_cast<NodeId>(su);
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(u), 0x9e3779b9u};
            std::mt19937_64 rng(seq);
            std::geometric_distribution<std::uint64_t> length(cfg.alpha);

            for (std::size_t w = 0; w < cfg.n_walks; ++w) {
                NodeId cur = u;
                for (auto steps = length(rng); steps > 0; --steps) {
                    auto nb = g.neighbors(cur);
                    cur = nb[std::uniform_int_distribution<std::size_t>(0, nb.size() - 1)(rng)];
                }
                if (hits[cur]++ == 0) touched.push_back(cur);
            }

            // Sorted so the floating-point sum order is fixed.
            std::sort(touched.begin(), touched.end());
            auto row = out.row(su);
            for (NodeId v : touched) {
                const double share = static_cast<double>(hits[v]) * inv_walks;
                row.noalias() += (share * sqrt_deg[u] / sqrt_deg[v]) * x.row(v);
                hits[v] = 0;
            }
            touched.clear();
        }
    }
    return out;
}

std::uint64_t matrix_fingerprint(const Matrix& m) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix_bytes = [&h](const void* p, std::size_t len) {
        auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    const std::int64_t dims[2] = {m.rows(), m.cols()};
    mix_bytes(dims, sizeof dims);
    mix_bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    return h;
}

namespace {

constexpr char kCacheMagic[8] = {'R', 'W', 'S', 'L', 'F', 'C', '0', '2'};

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
bool get(std::istream& in, T& v) {
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}

bool read_key(std::istream& in, FilterCacheKey& key) {
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) return false;
    std::uint32_t method_len = 0;
    if (!get(in, method_len) || method_len > 64) return false;
    key.method.resize(method_len);
    if (!in.read(key.method.data(), method_len)) return false;
    std::uint64_t hops = 0, walks = 0;
    bool ok = get(in, key.alpha) && get(in, hops) && get(in, key.r) && get(in, key.r_max) && get(in, walks) &&
              get(in, key.seed) && get(in, key.graph_hash) && get(in, key.feature_hash);
    key.hops = hops;
    key.n_walks = walks;
    return ok;
}

}  // namespace

void save_filter_cache(const std::filesystem::path& path, const FilterCacheKey& key, const FeatureMatrix& x) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(kCacheMagic, sizeof kCacheMagic);
    put(out, static_cast<std::uint32_t>(key.method.size()));
    out.write(key.method.data(), static_cast<std::streamsize>(key.method.size()));
    put(out, key.alpha);
    put(out, static_cast<std::uint64_t>(key.hops));
    put(out, key.r);
    put(out, key.r_max);
    put(out, static_cast<std::uint64_t>(key.n_walks));
    put(out, key.seed);
    put(out, key.graph_hash);
    put(out, key.feature_hash);
    put(out, static_cast<std::uint64_t>(x.rows()));
    put(out, static_cast<std::uint64_t>(x.cols()));
    out.write(reinterpret_cast<const char*>(x.data()), static_cast<std::streamsize>(sizeof(double) * x.size()));
    if (!out) throw Error("short write to " + path.string());
}

std::optional<FilterCacheKey> read_filter_cache_key(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    FilterCacheKey key;
    if (!read_key(in, key)) return std::nullopt;
    return key;
}

std::optional<FeatureMatrix> load_filter_cache(const std::filesystem::path& path, const FilterCacheKey& key) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    FilterCacheKey stored;
    if (!read_key(in, stored) || !(stored == key)) return std::nullopt;
    std::uint64_t rows = 0, cols = 0;
    if (!get(in, rows) || !get(in, cols)) return std::nullopt;
    FeatureMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (!in.read(reinterpret_cast<char*>(x.data()), static_cast<std::streamsize>(sizeof(double) * x.size()))) {
        return std::nullopt;
    }
    return x;
}

}  // namespace rwsl
