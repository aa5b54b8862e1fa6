// Acceptance gate: one PASS/FAIL line per criterion.
// Exit status: 0 all selected criteria pass, 1 any failure, 77 nothing failed
// but a criterion could not run (missing data).

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "rwsl/bench.hpp"
#include "rwsl/gpr_filter.hpp"
#include "rwsl/metrics.hpp"
#include "rwsl/pipeline.hpp"
#include "test_util.hpp"

using namespace rwsl;
using namespace rwsl::test;
namespace fs = std::filesystem;

namespace {

enum class Verdict { Pass, Fail, NotRun };

struct Outcome {
    Verdict verdict;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Verdict::Pass : Verdict::Fail, std::move(detail)}; }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean_abs(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().mean(); }

CsrGraph path3() {
    const std::vector<Edge> e{{0, 1}, {1, 2}};
    return build_graph(3, e);
}

const fs::path kFixture = fs::path(RWSL_TEST_DATA) / "two_cliques";

RunConfig fixture_run(std::uint64_t seed) {
    RunConfig c;
    c.data.edges = kFixture / "edges.txt";
    c.data.features = kFixture / "features.txt";
    c.data.labels = kFixture / "labels.txt";
    c.train = fixture_train_config(seed);
    return c;
}

Outcome filter_oracle() {
    Stopwatch sw;
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    std::size_t max_n = 0;
    for (int i = 0; i < 10; ++i) {
        const std::size_t n = 50 + rng() % 451;
        const std::size_t dims = 1 + rng() % 16;
        const CsrGraph raw = i % 2 ? rmat_generate(n, 4.0, rng()) : random_graph(n, 4.0 / static_cast<double>(n), rng());
        const auto g = augment_self_loops(raw);
        const Matrix x = random_matrix(n, dims, rng());
        FilterConfig cfg;
        cfg.alpha = std::uniform_real_distribution<double>(0.05, 0.5)(rng);
        cfg.hops = 4 + rng() % 29;
        cfg.r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        worst = std::max(worst, rel_frobenius(filter_exact(g, x, cfg), dense_filter(g, x, cfg.alpha, cfg.hops, cfg.r)));
        max_n = std::max(max_n, n);
    }
    const double t = sw.seconds();
    return verdict(worst < 1e-10 && t < 10.0,
                   fmt("10 graphs up to %zu nodes, worst relative error %.2e (< 1e-10), %.2f s (< 10 s)", max_n, worst,
                       t));
}

Outcome random_walk() {
    struct Case {
        const char* name;
        CsrGraph g;
        Matrix x;
    };
    std::vector<Case> cases;
    cases.push_back({"3-node path", augment_self_loops(path3()), random_matrix(3, 2, 1)});
    cases.push_back({"100-node R-MAT", augment_self_loops(rmat_generate(100, 4.0, 7)), random_matrix(100, 4, 2)});

    bool ok = true;
    std::ostringstream detail;
    for (const auto& c : cases) {
        FilterConfig exact_cfg;
        exact_cfg.alpha = 0.2;
        exact_cfg.hops = 100;
        exact_cfg.r = 0.5;
        const Matrix want = filter_exact(c.g, c.x, exact_cfg);

        // Errors are averaged over seeds before taking the ratio; per-seed
        // ratios on 6 entries are heavy-tailed.
        FilterConfig rw = exact_cfg;
        double sum1 = 0.0, sum4 = 0.0, worst_mae = 0.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            rw.n_walks = 100000;
            const double e1 = mean_abs(filter_randomwalk(c.g, c.x, rw, seed), want);
            rw.n_walks = 400000;
            sum4 += mean_abs(filter_randomwalk(c.g, c.x, rw, seed + 1000), want);
            sum1 += e1;
            worst_mae = std::max(worst_mae, e1);
        }
        const double ratio = sum1 / sum4;
        ok = ok && worst_mae <= 0.02 && ratio >= 1.6 && ratio <= 2.5;
        detail << fmt("%s: worst MAE %.2e (<= 0.02), 4x-walk error ratio %.3f (in [1.6, 2.5]); ", c.name, worst_mae,
                      ratio);
    }
    return verdict(ok, detail.str());
}

Outcome spectral() {
    std::vector<std::pair<std::string, CsrGraph>> graphs;
    graphs.emplace_back("path3", path3());
    graphs.emplace_back("two cliques", load_edge_list(kFixture / "edges.txt", 10));
    graphs.emplace_back("ER-200", random_graph(200, 0.03, 5));
    graphs.emplace_back("R-MAT-500", rmat_generate(500, 6.0, 3));
    graphs.emplace_back("ER-500", random_graph(500, 0.01, 6));
    const double bound = ppr_tail(0.1, 100) + 1e-8;
    double worst = 0.0;
    for (const auto& [name, g] : graphs) {
        worst = std::max(worst, spectral_report(augment_self_loops(g), 0.1, 100).max_abs_gap);
    }
    return verdict(worst <= bound, fmt("%zu graphs up to 500 nodes, worst eigenvalue gap %.3e (<= %.3e)", graphs.size(),
                                       worst, bound));
}

Outcome claims() {
    Stopwatch sw;
    const std::vector<double> alphas{0.05, 0.1, 0.3, 0.5, 0.7, 0.9};
    std::size_t found = 0, pairs = 0;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        for (std::size_t j = i + 1; j < alphas.size(); ++j) {
            ++pairs;
            try {
                verify_claim1(alphas[i], alphas[j], 5000);
                ++found;
            } catch (const VerificationFailure&) {
            }
        }
    }
    bool c2 = false;
    try {
        c2 = verify_claim2(grid(0.05, 0.95, 0.01), grid(0.01, 1.99, 0.01));
    } catch (const VerificationFailure&) {
    }
    const double t = sw.seconds();
    return verdict(found == pairs && c2 && t < 5.0,
                   fmt("crossover found for %zu/%zu pairs, alpha x lambda grid ordering %s, %.3f s (< 5 s)", found,
                       pairs, c2 ? "holds" : "violated", t));
}

Outcome gradients() {
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 100; ++i) worst = std::max(worst, gradcheck_mlp(random_mlp_case(5000 + i)));
    return verdict(worst < 1e-4, fmt("100 random networks, worst relative error %.2e (< 1e-4)", worst));
}

Outcome distributions() {
    std::mt19937_64 rng(77);
    double worst_row = 0.0, min_kl = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 50, k = 1 + rng() % 10, d = 1 + rng() % 8;
        const double scale = std::exp(std::uniform_real_distribution<double>(-4.0, 8.0)(rng));
        const Matrix z = gaussian(n, d, rng, scale);
        const Matrix mu = gaussian(k, d, rng, scale);
        const double v = std::exp(std::uniform_real_distribution<double>(-2.0, 2.0)(rng));
        const Matrix q = soft_assign(z, mu, v);
        const Matrix t = target_distribution(q).t;
        for (const Matrix* m : {&q, &t}) {
            worst_row = std::max(worst_row, (m->rowwise().sum().array() - 1.0).abs().maxCoeff());
            if (m->minCoeff() < 0.0 || !m->allFinite()) worst_row = std::numeric_limits<double>::infinity();
        }
        min_kl = std::min(min_kl, kl_divergence(t, q).loss);
    }
    return verdict(worst_row <= 1e-6 && min_kl >= 0.0,
                   fmt("1000 calls, worst row-sum deviation %.2e (<= 1e-6), min KL %.3g (>= 0)", worst_row, min_kl));
}

// Truth labelings in restricted-growth form: accuracy is invariant under
// renaming truth classes, so these cover every truth labeling.
void canonical_labelings(std::size_t n, int k, LabelVector& cur, int used, std::vector<LabelVector>& out) {
    if (cur.size() == n) {
        out.push_back(cur);
        return;
    }
    for (int c = 0; c <= std::min(used, k - 1); ++c) {
        cur.push_back(c);
        canonical_labelings(n, k, cur, std::max(used, c + 1), out);
        cur.pop_back();
    }
}

Outcome metric_oracles() {
    std::size_t checked = 0, mismatched = 0;
    for (std::size_t n = 1; n <= 8; ++n) {
        std::vector<LabelVector> truths;
        LabelVector cur;
        canonical_labelings(n, 3, cur, 0, truths);
        std::size_t total = 1;
        for (std::size_t i = 0; i < n; ++i) total *= 3;
        for (std::size_t code = 0; code < total; ++code) {
            const LabelVector pred = decode_labels(code, n, 3);
            for (const auto& t : truths) {
                ++checked;
                if (accuracy(pred, t) != brute_accuracy(pred, t)) ++mismatched;
            }
        }
    }
    const std::vector<Edge> tri{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}};
    const double q = modularity(build_graph(6, tri), {0, 0, 0, 1, 1, 1});
    const double a = ari({0, 0, 1, 1}, {0, 1, 0, 1});
    return verdict(mismatched == 0 && q == 0.5 && a == -0.5,
                   fmt("accuracy matches exhaustive mapping on %zu/%zu labeling pairs, two-triangle modularity %.17g, "
                       "independent ARI %.17g",
                       checked - mismatched, checked, q, a));
}

Outcome fixture() {
    Stopwatch sw;
    const auto cfg = fixture_run(0);
    const auto data = load_dataset(cfg.data);
    bool ok = true;
    std::ostringstream detail;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto c = fixture_run(seed);
        const auto m = run_pipeline(data, c).metrics.mean;
        ok = ok && m.accuracy == 1.0 && m.conductance == 0.0 && std::abs(m.nmi - 1.0) < 1e-12;
        detail << fmt("seed %llu acc %.4f cond %.4f nmi %.4f; ", static_cast<unsigned long long>(seed), m.accuracy,
                      m.conductance, m.nmi);
    }
    const double t = sw.seconds();
    detail << fmt("%.2f s (< 30 s)", t);
    return verdict(ok && t < 30.0, detail.str());
}

Outcome cora() {
    fs::path dir;
    if (const char* env = std::getenv("RWSL_CORA_DIR")) dir = env;
    else dir = fs::path(RWSL_SOURCE_DIR) / "data" / "cora";
    RunConfig cfg;
    cfg.data.edges = dir / "edges.txt";
    cfg.data.features = dir / "features.txt";
    cfg.data.labels = dir / "labels.txt";
    for (const auto& p : {cfg.data.edges, cfg.data.features, cfg.data.labels}) {
        if (!fs::exists(p)) {
            return {Verdict::NotRun, "Cora files not found under " + dir.string() +
                                         " (set RWSL_CORA_DIR; tools/cora_to_rwsl.py converts the LINQS release)"};
        }
    }
    Stopwatch sw;
    const auto data = load_dataset(cfg.data);
    const auto k = static_cast<std::size_t>(count_classes(data.labels));
    std::vector<double> acc, nmis, base;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RunConfig c = cfg;
        c.train.seed = seed;
        const auto m = run_pipeline(data, c).metrics.mean;
        acc.push_back(m.accuracy);
        nmis.push_back(m.nmi);
        KMeansOptions km;
        km.n_init = c.train.kmeans_n_init;
        base.push_back(accuracy(kmeans(data.features, k, seed, km).assignment, data.labels));
    }
    const double a = median(acc), n = median(nmis), b = median(base), t = sw.seconds();
    return verdict(a >= 0.55 && n >= 0.40 && a - b >= 0.15 && t < 900.0,
                   fmt("median accuracy %.4f (>= 0.55), NMI %.4f (>= 0.40), raw K-means %.4f (margin %.1f points, "
                       ">= 15), %.0f s (< 900 s)",
                       a, n, b, 100.0 * (a - b), t));
}

Outcome scalability() {
    BenchConfig bc;
    bc.sizes = {10000, 30000, 100000};
    bc.edge_factor = 20.0;
    bc.feat_dim = 100;
    bc.epochs = 5;
    const auto rows = bench_scalability(bc);
    std::vector<double> n, t, logn, logm;
    std::ostringstream detail;
    bool ok = true;
    for (const auto& r : rows) {
        ok = ok && r.ok;
        n.push_back(static_cast<double>(r.n_nodes));
        t.push_back(r.train_s);
        logn.push_back(std::log(static_cast<double>(r.n_nodes)));
        // Floor at 1 MiB so a near-zero growth does not dominate the log fit.
        logm.push_back(std::log(std::max(r.train_peak_mb, 1.0)));
        detail << fmt("n=%zu train %.2f s loop peak %.1f MiB stage peak %.1f MiB; ", r.n_nodes, r.train_s,
                      r.train_peak_mb, r.train_stage_peak_mb);
    }
    if (!ok) return {Verdict::Fail, detail.str() + "a size failed"};
    const auto fit = fit_linear(n, t);
    const auto mem = fit_linear(logn, logm);
    const double growth = std::max(rows.back().train_peak_mb, 1.0) / std::max(rows.front().train_peak_mb, 1.0);
    const double size_ratio = n.back() / n.front();
    detail << fmt("time R^2 %.4f (>= 0.95), memory log-log slope %.3f (< 1), growth x%.2f for x%.0f nodes", fit.r2,
                  mem.slope, growth, size_ratio);
    return verdict(fit.r2 >= 0.95 && mem.slope < 1.0 && growth < size_ratio, detail.str());
}

Outcome epsilon_sweep() {
    auto cfg = fixture_run(0);
    cfg.repeat = 10;
    const auto data = load_dataset(cfg.data);
    const std::vector<double> values{0.0, 0.2, 0.5, 0.8, 1.0};
    SweepResult sw;
    try {
        sw = sweep_epsilon(data, cfg, values);
    } catch (const std::exception& e) {
        return {Verdict::Fail, std::string("sweep raised: ") + e.what()};
    }
    TempDir dir("acceptance_sweep");
    save_sweep_csv(dir / "sweep_epsilon.csv", sw);

    std::ifstream in(dir / "sweep_epsilon.csv");
    std::string line;
    std::getline(in, line);
    const bool header_ok = line == "epsilon,metric,mean,std,n_runs,std_valid";
    std::size_t rows = 0, bad_cells = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::stringstream ss(line);
        std::string cell;
        std::size_t cells = 0;
        while (std::getline(ss, cell, ',')) {
            ++cells;
            if (cell.empty() || cell == "nan" || cell == "-nan" || cell == "inf") ++bad_cells;
        }
        if (cells != 6) ++bad_cells;
    }
    bool spread = true;
    for (const auto& s : sw.summaries) spread = spread && s.std_valid && s.runs.size() == 10;
    const std::size_t want = values.size() * 6;
    return verdict(header_ok && rows == want && bad_cells == 0 && spread,
                   fmt("%zu/%zu rows, %zu empty or non-finite cells, 10 repeats per value %s", rows, want, bad_cells,
                       spread ? "recorded" : "missing"));
}

const std::vector<std::pair<const char*, std::function<Outcome()>>>& criteria() {
    static const std::vector<std::pair<const char*, std::function<Outcome()>>> list{
        {"filter oracle equivalence", filter_oracle},
        {"random-walk estimator", random_walk},
        {"spectral closed form", spectral},
        {"alpha claims", claims},
        {"gradient correctness", gradients},
        {"distribution invariants", distributions},
        {"metric oracles", metric_oracles},
        {"separable fixture end to end", fixture},
        {"Cora reproduction", cora},
        {"scalability shape", scalability},
        {"epsilon sweep harness", epsilon_sweep},
    };
    return list;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> selected;
    app.add_option("--criterion,-c", selected, "Criterion numbers to run (default: all)")
        ->check(CLI::Range(1, static_cast<int>(criteria().size())));
    CLI11_PARSE(app, argc, argv);
    if (selected.empty()) {
        selected.resize(criteria().size());
        std::iota(selected.begin(), selected.end(), 1);
    }

    bool failed = false, skipped = false;
    for (int id : selected) {
        const auto& [name, run] = criteria()[static_cast<std::size_t>(id - 1)];
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {Verdict::Fail, std::string("raised: ") + e.what()};
        }
        const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "NOT RUN";
        std::printf("[%s] criterion %d (%s): %s\n", tag, id, name, o.detail.c_str());
        std::fflush(stdout);
        failed = failed || o.verdict == Verdict::Fail;
        skipped = skipped || o.verdict == Verdict::NotRun;
    }
    if (failed) return 1;
    return skipped ? 77 : 0;
}
