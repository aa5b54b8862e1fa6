#pragma once

#include <cstdint>
#include <vector>

#include "rwsl/common.hpp"

namespace rwsl {

/// Centroids, soft distributions, target and hard labels of one clustering run.
struct ClusterState {
    std::size_t n_clusters = 0;
    Matrix centroids;  // K x dim
    Matrix p_z;        // N x K, from the encoder embedding
    Matrix p_h;        // N x K, from the co-train network
    Matrix target;     // N x K
    LabelVector assignments;
};

struct KMeansOptions {
    std::size_t max_iters = 300;
    std::size_t n_init = 10;  // restarts; the lowest objective wins
    double tol = 1e-10;       // relative objective change that ends a restart
};

struct KMeansResult {
    Matrix centroids;
    LabelVector assignment;
    double objective = 0.0;  // within-cluster sum of squares
    std::vector<double> objective_history;  // of the winning restart
};

/// k-means++ seeding followed by Lloyd iterations. Empty clusters are
/// re-seeded at the point farthest from its centroid. Ties go to the lowest
/// cluster index.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& opt = {});

double within_cluster_ss(const Matrix& points, const LabelVector& assignment, const Matrix& centroids);

/// Student-t soft assignment
///   p_ij ∝ (1 + ||z_i - mu_j||^2 / v)^(-(v+1)/2).
Matrix soft_assign(const Matrix& z, const Matrix& centroids, double v);

struct TargetDistribution {
    Matrix t;
    std::size_t dead_clusters = 0;  // columns with zero soft frequency
};

/// Sharpened target t_ij ∝ p_ij^2 / f_j with f_j = sum_i p_ij. A column with
/// f_j = 0 is dropped from the normalization and gets t_ij = 0.
TargetDistribution target_distribution(const Matrix& p);

/// Same sharpening for a subset of rows, given the soft frequencies f of the
/// full assignment matrix.
TargetDistribution target_from_frequencies(const Matrix& p, const Eigen::RowVectorXd& f);

/// Per-row argmax, ties to the lowest index.
LabelVector hard_assign(const Matrix& p);

struct StudentKl {
    double loss = 0.0;
    Matrix q;               // soft assignment
    Matrix grad_z;          // d loss / d z
    Matrix grad_centroids;  // d loss / d mu
};

/// Row-averaged KL(T || soft_assign(z, mu, v)) with gradients for both the
/// embedding and the centroids.
StudentKl student_t_kl(const Matrix& z, const Matrix& centroids, double v, const Matrix& target);

}  // namespace rwsl
