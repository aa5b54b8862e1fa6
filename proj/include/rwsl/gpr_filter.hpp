#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "rwsl/common.hpp"
#include "rwsl/graph.hpp"

namespace rwsl {

enum class WeightScheme { Ppr };

/// Parameters of the personalized-PageRank feature filter
///   P = sum_{l=0}^{hops} alpha (1-alpha)^l T^l X,   T = D^{r-1} A D^{-r}
/// on the self-loop augmented graph.
struct FilterConfig {
    double alpha = 0.1;
    std::size_t hops = 16;
    double r = 0.4;       // convolution coefficient ("rrz")
    double r_max = 1e-5;  // approximation threshold of the walk estimator
    std::size_t n_walks = 100000;
    WeightScheme weight_scheme = WeightScheme::Ppr;

    void validate() const;
};

/// Walk budget implied by an approximation threshold: ceil(scale / r_max).
std::size_t walk_budget(double r_max, double scale = 1.0);

/// One sparse pass y = D^{r-1} A D^{-r} x over an augmented graph.
FeatureMatrix propagate_step(const CsrGraph& g, const FeatureMatrix& x, double r);

/// Truncated PPR filter by iterated propagation; O(hops * nnz * cols).
FeatureMatrix filter_exact(const CsrGraph& g, const FeatureMatrix& x, const FilterConfig& cfg);

/// Monte-Carlo estimate of the untruncated PPR filter for r = 0.5.
///
/// For r = 0.5, T^l = D^{1/2} (D^{-1}A)^l D^{-1/2}, so
///   P_u = sqrt(d_u) * E[x_V / sqrt(d_V)]
/// where V is the endpoint of a walk from u that stops with probability alpha
/// before each step. Each node runs cfg.n_walks walks from its own RNG stream
/// seeded by (seed, node), so the output does not depend on thread count.
FeatureMatrix filter_randomwalk(const CsrGraph& g, const FeatureMatrix& x, const FilterConfig& cfg,
                                std::uint64_t seed);

/// [w_0, ..., w_hops] with w_l = alpha (1-alpha)^l.
std::vector<double> ppr_weights(double alpha, std::size_t hops);

/// Mass dropped by truncating after `hops`: sum_{l>hops} w_l = (1-alpha)^{hops+1}.
inline double ppr_tail(double alpha, std::size_t hops) {
    return std::pow(1.0 - alpha, static_cast<double>(hops) + 1.0);
}

struct PprEigenResponse {
    double ppr_eigenvalue;        // alpha / (1 - (1-alpha)(1 - lambda_sym))
    double ppr_laplacian_eigenvalue;  // 1 - ppr_eigenvalue
};

/// Response of the infinite-hop PPR filter to a normalized-Laplacian
/// eigenvalue lambda_sym in [0, 2).
PprEigenResponse ppr_eigen_response(double lambda_sym, double alpha);

/// Smallest l0 <= l_max such that w_l(alpha1) > w_l(alpha2) for every l in
/// (l0, l_max]. Throws VerificationFailure if no such l0 < l_max exists.
std::size_t verify_claim1(double alpha1, double alpha2, std::size_t l_max);

/// True iff for every lambda and every adjacent pair alpha_k < alpha_{k+1},
/// the PPR Laplacian eigenvalue at alpha_k strictly exceeds the one at
/// alpha_{k+1}.
bool verify_claim2(const std::vector<double>& alphas, const std::vector<double>& lambdas);

struct SpectralReport {
    double alpha = 0.0;
    std::size_t hops = 0;
    std::vector<double> eigenvalues_gcn;          // of T = D^{-1/2} A D^{-1/2}, ascending
    std::vector<double> eigenvalues_ppr_closed;   // closed form applied to eigenvalues_gcn
    std::vector<double> eigenvalues_ppr_direct;   // of the accumulated S, ascending
    double max_abs_gap = 0.0;
};

constexpr std::size_t kDefaultDenseEigenLimit = 3000;

/// Dense eigen-analysis of the symmetric PPR filter on an augmented graph.
/// S is accumulated column-block-wise via propagate_step on the identity, then
/// both T and S are diagonalized.
SpectralReport spectral_report(const CsrGraph& g, double alpha, std::size_t hops,
                               std::size_t dense_limit = kDefaultDenseEigenLimit);

// Filtered-feature cache. The header stores every input that determines the
// output so that a stale file is never reused.
struct FilterCacheKey {
    std::string method;  // "exact" or "randomwalk"
    double alpha = 0.0;
    std::size_t hops = 0;
    double r = 0.0;
    double r_max = 0.0;
    std::size_t n_walks = 0;
    std::uint64_t seed = 0;
    std::uint64_t graph_hash = 0;
    std::uint64_t feature_hash = 0;

    bool operator==(const FilterCacheKey&) const = default;
};

std::uint64_t matrix_fingerprint(const Matrix& m);

void save_filter_cache(const std::filesystem::path& path, const FilterCacheKey& key, const FeatureMatrix& x);

/// nullopt when the file is missing, unreadable, or built from a different key.
std::optional<FeatureMatrix> load_filter_cache(const std::filesystem::path& path, const FilterCacheKey& key);

/// Reads the header only.
std::optional<FilterCacheKey> read_filter_cache_key(const std::filesystem::path& path);

}  // namespace rwsl
