#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "rwsl/gpr_filter.hpp"

namespace rwsl {

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ContractViolation("alpha must be in (0,1)");
}

// Closed form in terms of an eigenvalue of T; the denominator
// alpha + (1-alpha)(1-lambda_gcn) is >= alpha for lambda_gcn <= 1.
double ppr_from_gcn(double lambda_gcn, double alpha) {
    return alpha / (1.0 - (1.0 - alpha) * lambda_gcn);
}

std::vector<double> ascending_eigenvalues(const Matrix& m) {
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error("symmetric eigendecomposition failed");
    const auto& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

}  // namespace

PprEigenResponse ppr_eigen_response(double lambda_sym, double alpha) {
    check_alpha(alpha);
    if (!(lambda_sym >= 0.0 && lambda_sym < 2.0)) throw ContractViolation("lambda_sym must be in [0,2)");
    // alpha / (1 - (1-alpha)(1-lambda)) rewritten so that the Laplacian-side
    // value does not suffer cancellation for small lambda.
    const double denom = alpha + (1.0 - alpha) * lambda_sym;
    return {alpha / denom, (1.0 - alpha) * lambda_sym / denom};
}

std::size_t verify_claim1(double alpha1, double alpha2, std::size_t l_max) {
    check_alpha(alpha1);
    check_alpha(alpha2);
    if (!(alpha1 < alpha2)) throw ContractViolation("verify_claim1 needs alpha1 < alpha2");

    // Log weights; alpha^l underflows long before l_max = 5000.
    const double la1 = std::log(alpha1), lq1 = std::log1p(-alpha1);
    const double la2 = std::log(alpha2), lq2 = std::log1p(-alpha2);
    std::size_t last_fail = 0;  // l = 0 always fails since alpha1 < alpha2
    for (std::size_t l = 1; l <= l_max; ++l) {
        const double dl = static_cast<double>(l);
        if (!(la1 + dl * lq1 > la2 + dl * lq2)) last_fail = l;
    }
    if (last_fail >= l_max) {
        throw VerificationFailure("no weight crossover for alphas " + std::to_string(alpha1) + " < " +
                                  std::to_string(alpha2) + " within l_max=" + std::to_string(l_max));
    }
    return last_fail;
}

bool verify_claim2(const std::vector<double>& alphas, const std::vector<double>& lambdas) {
    for (double a : alphas) check_alpha(a);
    if (!std::is_sorted(alphas.begin(), alphas.end())) throw ContractViolation("alphas must be ascending");
    for (double lam : lambdas) {
        if (!(lam > 0.0 && lam < 2.0)) throw ContractViolation("lambdas must lie in (0,2)");
    }
    for (double lam : lambdas) {
        for (std::size_t k = 0; k + 1 < alphas.size(); ++k) {
            const double lo = ppr_eigen_response(lam, alphas[k]).ppr_laplacian_eigenvalue;
            const double hi = ppr_eigen_response(lam, alphas[k + 1]).ppr_laplacian_eigenvalue;
            if (!(lo > hi)) return false;
        }
    }
    return true;
}

SpectralReport spectral_report(const CsrGraph& g, double alpha, std::size_t hops, std::size_t dense_limit) {
    check_alpha(alpha);
    if (!g.self_loops_added) throw ContractViolation("spectral_report requires an augmented graph");
    if (g.n_nodes > dense_limit) {
        throw SizeError("graph has " + std::to_string(g.n_nodes) + " nodes; dense eigen limit is " +
                        std::to_string(dense_limit));
    }
    const auto n = static_cast<Eigen::Index>(g.n_nodes);

    Matrix t = Matrix::Zero(n, n);
    for (NodeId u = 0; u < g.n_nodes; ++u) {
        const double du = static_cast<double>(g.degree(u));
        for (NodeId v : g.neighbors(u)) t(u, v) = 1.0 / std::sqrt(du * static_cast<double>(g.degree(v)));
    }

    FilterConfig cfg;
    cfg.alpha = alpha;
    cfg.hops = hops;
    cfg.r = 0.5;
    const Matrix s = filter_exact(g, Matrix::Identity(n, n), cfg);

    SpectralReport rep;
    rep.alpha = alpha;
    rep.hops = hops;
    rep.eigenvalues_gcn = ascending_eigenvalues(t);
    rep.eigenvalues_ppr_direct = ascending_eigenvalues(s);
    rep.eigenvalues_ppr_closed.reserve(rep.eigenvalues_gcn.size());
    // The closed form is increasing in the T eigenvalue, so ascending order is kept.
    for (double lam : rep.eigenvalues_gcn) rep.eigenvalues_ppr_closed.push_back(ppr_from_gcn(lam, alpha));
    for (std::size_t i = 0; i < rep.eigenvalues_gcn.size(); ++i) {
        rep.max_abs_gap =
            std::max(rep.max_abs_gap, std::abs(rep.eigenvalues_ppr_closed[i] - rep.eigenvalues_ppr_direct[i]));
    }
    return rep;
}

}  // namespace rwsl
