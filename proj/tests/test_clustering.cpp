#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>

#include "gradcheck.hpp"
#include "rwsl/clustering.hpp"

using namespace rwsl;
using namespace rwsl::test;

namespace {

// Minimum within-cluster sum of squares over every labeling with no empty cluster.
double exhaustive_optimum(const Matrix& x, std::size_t k) {
    const auto n = static_cast<std::size_t>(x.rows());
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= k;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t code = 0; code < total; ++code) {
        LabelVector lab(n);
        std::size_t c = code;
        for (std::size_t i = 0; i < n; ++i, c /= k) lab[i] = static_cast<int>(c % k);
        Matrix mu = Matrix::Zero(static_cast<Eigen::Index>(k), x.cols());
        std::vector<int> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            mu.row(lab[i]) += x.row(static_cast<Eigen::Index>(i));
            ++count[static_cast<std::size_t>(lab[i])];
        }
        if (std::count(count.begin(), count.end(), 0) > 0) continue;
        for (std::size_t j = 0; j < k; ++j) mu.row(static_cast<Eigen::Index>(j)) /= count[j];
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) sse += (x.row(static_cast<Eigen::Index>(i)) - mu.row(lab[i])).squaredNorm();
        best = std::min(best, sse);
    }
    return best;
}

}  // namespace

TEST_CASE("kmeans reaches the exhaustive optimum on tiny inputs") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        std::mt19937_64 rng(seed);
        const Matrix x = gaussian(7, 2, rng);
        for (std::size_t k : {2u, 3u}) {
            KMeansOptions opt;
            opt.n_init = 20;
            const auto res = kmeans(x, k, seed, opt);
            CAPTURE(seed);
            CAPTURE(k);
            CHECK(res.objective == doctest::Approx(exhaustive_optimum(x, k)).epsilon(1e-10));
            CHECK(res.objective == doctest::Approx(within_cluster_ss(x, res.assignment, res.centroids)));
        }
    }
}

TEST_CASE("kmeans objective history never increases") {
    std::mt19937_64 rng(3);
    const Matrix x = gaussian(300, 4, rng);
    const auto res = kmeans(x, 5, 1);
    REQUIRE(res.objective_history.size() >= 2);
    for (std::size_t i = 1; i < res.objective_history.size(); ++i) {
        CHECK(res.objective_history[i] <= res.objective_history[i - 1] + 1e-9);
    }
}

TEST_CASE("kmeans separates well-separated blobs and is seeded") {
    std::mt19937_64 rng(8);
    Matrix x = gaussian(60, 2, rng, 0.1);
    for (int i = 20; i < 40; ++i) x(i, 0) += 10.0;
    for (int i = 40; i < 60; ++i) x(i, 1) += 10.0;
    const auto res = kmeans(x, 3, 4);
    for (int block = 0; block < 3; ++block) {
        for (int i = 1; i < 20; ++i) CHECK(res.assignment[block * 20 + i] == res.assignment[block * 20]);
    }
    CHECK(res.assignment[0] != res.assignment[20]);
    CHECK(res.assignment[20] != res.assignment[40]);
    CHECK(kmeans(x, 3, 4).assignment == res.assignment);
}

TEST_CASE("kmeans edge cases") {
    std::mt19937_64 rng(1);
    const Matrix x = gaussian(4, 2, rng);
    CHECK_THROWS_AS(kmeans(x, 5, 0), ContractViolation);
    CHECK_THROWS_AS(kmeans(x, 0, 0), ContractViolation);
    CHECK(kmeans(x, 4, 0).objective == doctest::Approx(0.0));

    // Duplicated points still yield K non-empty clusters.
    Matrix dup(5, 1);
    dup << 0, 0, 0, 0, 1;
    const auto res = kmeans(dup, 2, 0);
    CHECK(res.objective == doctest::Approx(0.0));
}

TEST_CASE("soft assignment matches the Student-t kernel") {
    Matrix z(2, 2), mu(3, 2);
    z << 0, 0, 1, 2;
    mu << 0, 1, 2, 2, -1, 0;
    for (double v : {1.0, 2.5}) {
        const Matrix q = soft_assign(z, mu, v);
        for (int i = 0; i < 2; ++i) {
            double norm = 0.0;
            std::vector<double> k(3);
            for (int j = 0; j < 3; ++j) {
                k[j] = std::pow(1.0 + (z.row(i) - mu.row(j)).squaredNorm() / v, -(v + 1.0) / 2.0);
                norm += k[j];
            }
            for (int j = 0; j < 3; ++j) CHECK(q(i, j) == doctest::Approx(k[j] / norm).epsilon(1e-14));
        }
    }
}

TEST_CASE("soft assignment stays finite far from every centroid") {
    Matrix z(1, 2), mu(2, 2);
    z << 1e8, 1e8;
    mu << 0, 0, 1, 1;
    const Matrix q = soft_assign(z, mu, 1.0);
    CHECK(q.allFinite());
    CHECK(q.row(0).sum() == doctest::Approx(1.0));
}

TEST_CASE("argmax is invariant to a common distance scale") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix z = gaussian(10, 3, rng);
        const Matrix mu = gaussian(4, 3, rng);
        const double c = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
        CHECK(hard_assign(soft_assign(z, mu, 1.0)) == hard_assign(soft_assign(c * z, c * mu, 1.0)));
    }
}

TEST_CASE("target distribution") {
    Matrix p(3, 2);
    p << 0.9, 0.1, 0.6, 0.4, 0.2, 0.8;
    const auto td = target_distribution(p);
    CHECK(td.dead_clusters == 0);
    const double f0 = 1.7, f1 = 1.3;
    for (int i = 0; i < 3; ++i) {
        const double a = p(i, 0) * p(i, 0) / f0, b = p(i, 1) * p(i, 1) / f1;
        CHECK(td.t(i, 0) == doctest::Approx(a / (a + b)).epsilon(1e-15));
        CHECK(td.t.row(i).sum() == doctest::Approx(1.0));
    }

    SUBCASE("dead column") {
        Matrix d(2, 3);
        d << 0.5, 0.5, 0.0, 0.2, 0.8, 0.0;
        const auto dt = target_distribution(d);
        CHECK(dt.dead_clusters == 1);
        CHECK(dt.t.col(2).norm() == 0.0);
        CHECK(is_row_stochastic(dt.t));
    }
    SUBCASE("row subsets with global frequencies equal the full target") {
        std::mt19937_64 rng(5);
        const Matrix q = random_stochastic(20, 4, rng);
        const auto full = target_distribution(q);
        const Eigen::RowVectorXd f = q.colwise().sum();
        const auto part = target_from_frequencies(q.middleRows(5, 7), f);
        CHECK(part.t == full.t.middleRows(5, 7));
    }
}

TEST_CASE("hard assignment ties go to the lowest index") {
    Matrix p(3, 3);
    p << 0.4, 0.4, 0.2, 0.2, 0.4, 0.4, 1.0 / 3, 1.0 / 3, 1.0 / 3;
    CHECK(hard_assign(p) == LabelVector{0, 1, 0});
}

TEST_CASE("Student-t KL gradients match finite differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const double v = seed % 2 ? 1.0 : 3.0;
        CAPTURE(seed);
        CHECK(gradcheck_student_kl(6, 3, 4, v, seed) < 1e-6);
    }
}

TEST_CASE("randomized distribution invariants") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 20, k = 1 + rng() % 6, d = 1 + rng() % 5;
        const double scale = std::exp(std::uniform_real_distribution<double>(-3.0, 6.0)(rng));
        const Matrix z = gaussian(n, d, rng, scale);
        const Matrix mu = gaussian(k, d, rng, scale);
        const double v = std::uniform_real_distribution<double>(0.2, 5.0)(rng);
        const Matrix q = soft_assign(z, mu, v);
        const auto t = target_distribution(q);
        CHECK(is_row_stochastic(q, 1e-6));
        CHECK(is_row_stochastic(t.t, 1e-6));
        CHECK(kl_divergence(t.t, q).loss >= 0.0);
    }
}

TEST_CASE("kmeans examples") {
    std::mt19937_64 rng(12);
    const Matrix x = gaussian(30, 3, rng);
    const auto one = kmeans(x, 1, 0);
    CHECK((one.centroids.row(0) - x.colwise().mean()).norm() < 1e-12);

    Matrix clouds = gaussian(40, 2, rng, 0.5);
    clouds.bottomRows(20).array() += 10.0;
    const auto two = kmeans(clouds, 2, 1);
    for (int i = 0; i < 40; ++i) CHECK(two.assignment[i] == two.assignment[i < 20 ? 0 : 20]);
    CHECK(two.assignment[0] != two.assignment[20]);

    // 20 points; the exhaustive check runs on a 12-point subsample.
    const Matrix pts = gaussian(20, 2, rng);
    const Matrix sub = pts.topRows(12);
    const auto km = kmeans(sub, 3, 5);
    CHECK(km.objective <= 1.05 * exhaustive_optimum(sub, 3));
    CHECK(kmeans(pts, 3, 5).assignment == kmeans(pts, 3, 5).assignment);
}

TEST_CASE("soft assignment examples") {
    Matrix z(1, 1), mu1(1, 1), mu2(2, 1);
    z << 0.0;
    mu1 << 3.0;
    mu2 << 0.0, 1.0;
    CHECK(soft_assign(z, mu1, 1.0)(0, 0) == 1.0);
    const Matrix q = soft_assign(z, mu2, 1.0);
    CHECK(q(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(q(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    Matrix sym(2, 1);
    sym << -1.0, 1.0;
    const Matrix e = soft_assign(z, sym, 2.0);
    CHECK(e(0, 0) == 0.5);
    CHECK(e(0, 1) == 0.5);
}

TEST_CASE("target distribution examples") {
    const Matrix uniform = Matrix::Constant(4, 3, 1.0 / 3.0);
    CHECK((target_distribution(uniform).t - uniform).norm() < 1e-15);

    Matrix onehot(3, 2);
    onehot << 1, 0, 0, 1, 1, 0;
    CHECK(target_distribution(onehot).t == onehot);

    Matrix p(2, 2);
    p << 0.8, 0.2, 0.4, 0.6;
    const double a = 0.64 / 1.2, b = 0.04 / 0.8;
    CHECK(target_distribution(p).t(0, 0) == doctest::Approx(a / (a + b)).epsilon(1e-15));
    CHECK(target_distribution(p).t(0, 0) == doctest::Approx(0.9143).epsilon(1e-4));

    // Equal frequencies: the unique row maximum is sharpened.
    Matrix bal(2, 2);
    bal << 0.7, 0.3, 0.3, 0.7;
    const Matrix t = target_distribution(bal).t;
    CHECK(t(0, 0) >= 0.7);
    CHECK(t(1, 1) >= 0.7);
}

TEST_CASE("hard assignment examples") {
    Matrix tie(1, 2);
    tie << 0.5, 0.5;
    CHECK(hard_assign(tie) == LabelVector{0});
    CHECK(hard_assign(Matrix::Identity(3, 3)) == LabelVector{0, 1, 2});

    std::mt19937_64 rng(13);
    const Matrix p = random_stochastic(50, 5, rng);
    const auto got = hard_assign(p);
    for (int i = 0; i < 50; ++i) {
        int best = 0;
        for (int j = 1; j < 5; ++j) {
            if (p(i, j) > p(i, best)) best = j;
        }
        CHECK(got[i] == best);
    }
}
