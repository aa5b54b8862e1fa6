#include "rwsl/clustering.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "rwsl/nn.hpp"

namespace rwsl {

namespace {

double sq_dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
    return (a.row(i) - b.row(j)).squaredNorm();
}

// Returns the objective; ties go to the lower index.
double assign_points(const Matrix& points, const Matrix& centroids, LabelVector& assignment,
                     std::vector<double>& dist) {
    const auto n = points.rows();
    const auto k = centroids.rows();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double d = sq_dist(points, i, centroids, j);
            if (d < best) {
                best = d;
                arg = static_cast<int>(j);
            }
        }
        assignment[i] = arg;
        dist[i] = best;
    }
    double total = 0.0;
    for (double d : dist) total += d;
    return total;
}

Matrix kmeanspp_seed(const Matrix& points, std::size_t k, std::mt19937_64& rng) {
    const auto n = points.rows();
    Matrix c(static_cast<Eigen::Index>(k), points.cols());
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    c.row(0) = points.row(pick(rng));
    std::vector<double> d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = sq_dist(points, i, c, 0);
    for (std::size_t j = 1; j < k; ++j) {
        double total = 0.0;
        for (double d : d2) total += d;
        Eigen::Index chosen = 0;
        if (total > 0.0) {
            double target = std::uniform_real_distribution<double>(0.0, total)(rng);
            chosen = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                target -= d2[i];
                if (target < 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        c.row(static_cast<Eigen::Index>(j)) = points.row(chosen);
        for (Eigen::Index i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist(points, i, c, static_cast<Eigen::Index>(j)));
        }
    }
    return c;
}

KMeansResult lloyd(const Matrix& points, Matrix centroids, const KMeansOptions& opt) {
    const auto n = points.rows();
    const auto k = centroids.rows();
    KMeansResult res;
    res.assignment.assign(static_cast<std::size_t>(n), 0);
    std::vector<double> dist(n);
    double prev = std::numeric_limits<double>::infinity();

    for (std::size_t it = 0; it < opt.max_iters; ++it) {
        double obj = assign_points(points, centroids, res.assignment, dist);

        std::vector<std::size_t> counts(k, 0);
        Matrix sums = Matrix::Zero(k, points.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(res.assignment[i]) += points.row(i);
            ++counts[res.assignment[i]];
        }
        // Re-seed empty clusters at the currently worst-served point.
        for (Eigen::Index j = 0; j < k; ++j) {
            if (counts[j] > 0) continue;
            Eigen::Index far = 0;
            for (Eigen::Index i = 1; i < n; ++i) {
                if (dist[i] > dist[far]) far = i;
            }
            const int from = res.assignment[far];
            if (counts[from] <= 1) continue;
            sums.row(from) -= points.row(far);
            --counts[from];
            sums.row(j) = points.row(far);
            counts[j] = 1;
            res.assignment[far] = static_cast<int>(j);
            obj -= dist[far];
            dist[far] = 0.0;
        }
        for (Eigen::Index j = 0; j < k; ++j) {
            if (counts[j] > 0) centroids.row(j) = sums.row(j) / static_cast<double>(counts[j]);
        }
        res.objective_history.push_back(obj);
        if (std::isfinite(prev) && prev - obj <= opt.tol * std::max(1.0, prev)) break;
        prev = obj;
    }
    res.centroids = std::move(centroids);
    res.objective = within_cluster_ss(points, res.assignment, res.centroids);
    return res;
}

}  // namespace

double within_cluster_ss(const Matrix& points, const LabelVector& assignment, const Matrix& centroids) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) total += sq_dist(points, i, centroids, assignment[i]);
    return total;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& opt) {
    if (k == 0) throw ContractViolation("kmeans needs k >= 1");
    if (k > static_cast<std::size_t>(points.rows())) {
        throw ContractViolation("kmeans: k=" + std::to_string(k) + " exceeds point count " +
                                std::to_string(points.rows()));
    }
    if (opt.max_iters < 1) throw ContractViolation("kmeans needs max_iters >= 1");
    std::mt19937_64 rng(seed);
    KMeansResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for (std::size_t run = 0; run < std::max<std::size_t>(1, opt.n_init); ++run) {
        auto res = lloyd(points, kmeanspp_seed(points, k, rng), opt);
        if (res.objective < best.objective) best = std::move(res);
    }
    return best;
}

Matrix soft_assign(const Matrix& z, const Matrix& centroids, double v) {
    if (z.cols() != centroids.cols()) throw ContractViolation("soft_assign: embedding and centroid dims differ");
    if (!(v > 0.0)) throw ContractViolation("soft_assign: v must be positive");
    const double power = -(v + 1.0) / 2.0;
    Matrix q(z.rows(), centroids.rows());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
            q(i, j) = power * std::log1p(sq_dist(z, i, centroids, j) / v);
        }
    }
    // log-domain normalization; far-away points would underflow otherwise.
    return row_softmax(q);
}

TargetDistribution target_from_frequencies(const Matrix& p, const Eigen::RowVectorXd& f) {
    require(f.size() == p.cols(), "target_from_frequencies: frequency vector has the wrong length");
    TargetDistribution out;
    Eigen::RowVectorXd inv_f = Eigen::RowVectorXd::Zero(p.cols());
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        if (f(j) > 0.0) {
            inv_f(j) = 1.0 / f(j);
        } else {
            ++out.dead_clusters;
        }
    }
    out.t.resize(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        out.t.row(i) = p.row(i).cwiseAbs2().cwiseProduct(inv_f);
        const double s = out.t.row(i).sum();
        if (s > 0.0) out.t.row(i) /= s;
    }
    return out;
}

TargetDistribution target_distribution(const Matrix& p) {
    return target_from_frequencies(p, p.colwise().sum());
}

LabelVector hard_assign(const Matrix& p) {
    LabelVector labels(static_cast<std::size_t>(p.rows()));
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        Eigen::Index arg = 0;
        for (Eigen::Index j = 1; j < p.cols(); ++j) {
            if (p(i, j) > p(i, arg)) arg = j;
        }
        labels[i] = static_cast<int>(arg);
    }
    return labels;
}

StudentKl student_t_kl(const Matrix& z, const Matrix& centroids, double v, const Matrix& target) {
    StudentKl out;
    out.q = soft_assign(z, centroids, v);
    out.loss = kl_divergence(target, out.q).loss;

    // d loss / d s_ij = (q_ij - t_ij)/N for s = log-kernel; d s_ij / d dist_ij
    // = -(v+1) / (2 (v + dist_ij)); d dist_ij / d z_i = 2 (z_i - mu_j).
    const double n = static_cast<double>(z.rows());
    out.grad_z = Matrix::Zero(z.rows(), z.cols());
    out.grad_centroids = Matrix::Zero(centroids.rows(), centroids.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
            const Eigen::RowVectorXd diff = z.row(i) - centroids.row(j);
            const double coef = -(out.q(i, j) - target(i, j)) / n * (v + 1.0) / (v + diff.squaredNorm());
            out.grad_z.row(i) += coef * diff;
            out.grad_centroids.row(j) -= coef * diff;
        }
    }
    return out;
}

}  // namespace rwsl
