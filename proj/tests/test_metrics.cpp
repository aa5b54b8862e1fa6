#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rwsl/metrics.hpp"
#include "test_util.hpp"

using namespace rwsl;
using namespace rwsl::test;

namespace {

const LabelVector kTruth{0, 0, 0, 1, 1, 1, 2, 2, 2, 2};
const LabelVector kPred{1, 1, 0, 0, 2, 2, 2, 2, 2, 0};

CsrGraph karate() {
    const std::vector<Edge> e{
        {0, 1},   {0, 2},   {0, 3},   {0, 4},   {0, 5},   {0, 6},   {0, 7},   {0, 8},   {0, 10},  {0, 11},
        {0, 12},  {0, 13},  {0, 17},  {0, 19},  {0, 21},  {0, 31},  {1, 2},   {1, 3},   {1, 7},   {1, 13},
        {1, 17},  {1, 19},  {1, 21},  {1, 30},  {2, 3},   {2, 7},   {2, 8},   {2, 9},   {2, 13},  {2, 27},
        {2, 28},  {2, 32},  {3, 7},   {3, 12},  {3, 13},  {4, 6},   {4, 10},  {5, 6},   {5, 10},  {5, 16},
        {6, 16},  {8, 30},  {8, 32},  {8, 33},  {9, 33},  {13, 33}, {14, 32}, {14, 33}, {15, 32}, {15, 33},
        {18, 32}, {18, 33}, {19, 33}, {20, 32}, {20, 33}, {22, 32}, {22, 33}, {23, 25}, {23, 27}, {23, 29},
        {23, 32}, {23, 33}, {24, 25}, {24, 27}, {24, 31}, {25, 31}, {26, 29}, {26, 33}, {27, 33}, {28, 31},
        {28, 33}, {29, 32}, {29, 33}, {30, 32}, {30, 33}, {31, 32}, {31, 33}, {32, 33}};
    return build_graph(34, e);
}

const LabelVector kClubs{0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0,
                         0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};

CsrGraph two_triangles() {
    const std::vector<Edge> e{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}};
    return build_graph(6, e);
}

}  // namespace

TEST_CASE("label metrics match scikit-learn") {
    // sklearn normalized_mutual_info_score, adjusted_rand_score; accuracy and
    // macro F1 after linear_sum_assignment relabeling.
    CHECK(nmi(kPred, kTruth) == doctest::Approx(0.39915022881533163).epsilon(1e-12));
    CHECK(ari(kPred, kTruth) == doctest::Approx(0.1366906474820144).epsilon(1e-12));
    CHECK(accuracy(kPred, kTruth) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(macro_f1(kPred, kTruth) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("graph metrics match networkx on the karate club") {
    const auto g = karate();
    CHECK(modularity(g, kClubs) == doctest::Approx(0.3582347140039448).epsilon(1e-12));
    CHECK(conductance(g, kClubs) == doctest::Approx(0.14666666666666667).epsilon(1e-12));
}

TEST_CASE("accuracy equals brute force over relabelings") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng() % 7;
        const int kp = 1 + static_cast<int>(rng() % 3), kt = 1 + static_cast<int>(rng() % 3);
        LabelVector p(n), t(n);
        for (auto& v : p) v = static_cast<int>(rng() % static_cast<unsigned>(kp));
        for (auto& v : t) v = static_cast<int>(rng() % static_cast<unsigned>(kt));
        CHECK(accuracy(p, t) == doctest::Approx(brute_accuracy(p, t)).epsilon(1e-15));
    }
}

TEST_CASE("hungarian matching equals enumeration") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 6;
        std::vector<std::vector<double>> w(n, std::vector<double>(n));
        for (auto& row : w) for (auto& x : row) x = u(rng);
        const auto match = max_weight_assignment(w);
        double got = 0.0;
        for (std::size_t i = 0; i < n; ++i) got += w[i][static_cast<std::size_t>(match[i])];
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = -1e300;
        do {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += w[i][static_cast<std::size_t>(perm[i])];
            best = std::max(best, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
        CHECK(got == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("label permutation invariance") {
    const LabelVector renamed{2, 2, 1, 1, 0, 0, 0, 0, 0, 1};
    CHECK(nmi(renamed, kTruth) == doctest::Approx(nmi(kPred, kTruth)).epsilon(1e-14));
    CHECK(ari(renamed, kTruth) == doctest::Approx(ari(kPred, kTruth)).epsilon(1e-14));
    CHECK(accuracy(renamed, kTruth) == accuracy(kPred, kTruth));
    CHECK(nmi(kTruth, kTruth) == doctest::Approx(1.0));
    CHECK(ari(kTruth, kTruth) == doctest::Approx(1.0));
}

TEST_CASE("closed-form corner cases") {
    CHECK(ari({0, 0, 1, 1}, {0, 1, 0, 1}) == -0.5);
    CHECK(modularity(two_triangles(), {0, 0, 0, 1, 1, 1}) == 0.5);
    CHECK(conductance(two_triangles(), {0, 0, 0, 1, 1, 1}) == 0.0);
    // One vertex split off a triangle pair: cut 2, volumes 2 and 10.
    CHECK(conductance(two_triangles(), {1, 0, 0, 0, 0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("more clusters than classes") {
    const LabelVector truth{0, 0, 1, 1};
    const LabelVector pred{0, 1, 2, 2};
    CHECK(accuracy(pred, truth) == doctest::Approx(0.75));
    const auto map = best_cluster_mapping(pred, truth);
    CHECK(std::count(map.begin(), map.end(), -1) == 1);
}

TEST_CASE("preconditions") {
    CHECK_THROWS_AS(accuracy({0, 1}, {0}), ContractViolation);
    CHECK_THROWS_AS(ari({0}, {0}), ContractViolation);
    CHECK_THROWS_AS(modularity(augment_self_loops(two_triangles()), LabelVector(6, 0)), ContractViolation);
    CHECK_THROWS_AS(modularity(two_triangles(), LabelVector(5, 0)), ContractViolation);
    CHECK_THROWS_AS(conductance(build_graph(3, std::vector<Edge>{}), LabelVector(3, 0)), ContractViolation);
}

TEST_CASE("report serialization") {
    const auto r = evaluate(two_triangles(), {0, 0, 0, 1, 1, 1}, {1, 1, 1, 0, 0, 0});
    CHECK(r.accuracy == 1.0);
    CHECK(MetricReport::from_values(r.values()).values() == r.values());
    CHECK(MetricReport::csv_header() == "accuracy,nmi,ari,macro_f1,modularity,conductance");
    CHECK(r.to_json().find("\"modularity\"") != std::string::npos);
}

TEST_CASE("label metric examples") {
    CHECK(accuracy(kTruth, kTruth) == 1.0);
    CHECK(accuracy({2, 2, 0, 0, 1}, {0, 0, 1, 1, 2}) == 1.0);
    CHECK(accuracy({0, 0, 1, 1}, {0, 1, 1, 1}) == 0.75);

    CHECK(nmi({0, 0, 0, 0}, {0, 0, 1, 1}) == 0.0);
    CHECK(nmi({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(0.0));
    CHECK(ari(kTruth, kTruth) == 1.0);

    CHECK(macro_f1(kTruth, kTruth) == 1.0);
    CHECK(macro_f1({0, 0, 1, 1}, {0, 1, 1, 1}) == doctest::Approx(11.0 / 15.0).epsilon(1e-15));
    // Every node in one cluster: class 0 gets F1 = 2*0.5*1/(1.5), class 1 gets 0.
    CHECK(macro_f1({0, 0, 0, 0}, {0, 0, 1, 1}) == doctest::Approx((2.0 / 3.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("ARI is centered for random labelings") {
    std::mt19937_64 rng(21);
    double sum = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        LabelVector p(1000), t(1000);
        for (auto& v : p) v = static_cast<int>(rng() % 5);
        for (auto& v : t) v = static_cast<int>(rng() % 5);
        sum += ari(p, t);
    }
    CHECK(std::abs(sum / 100.0) < 0.005);
}

TEST_CASE("graph metric examples") {
    const auto tri = two_triangles();
    CHECK(modularity(tri, LabelVector(6, 0)) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(conductance(tri, LabelVector(6, 0)) == 0.0);

    const std::vector<Edge> pe{{0, 1}, {1, 2}, {2, 3}};
    const auto path = build_graph(4, pe);
    // Singletons: -sum d_i^2 / (2m)^2 with degrees 1,2,2,1 and m = 3.
    CHECK(modularity(path, {0, 1, 2, 3}) == doctest::Approx(-10.0 / 36.0).epsilon(1e-15));

    const std::vector<Edge> ce{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    CHECK(conductance(build_graph(4, ce), {0, 0, 1, 1}) == doctest::Approx(0.5).epsilon(1e-15));
}
