#include "rwsl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace rwsl {

namespace {

double status_field_mb(const char* field) {
    std::ifstream in("/proc/self/status");
    std::string line;
    const std::string key = std::string(field) + ":";
    while (std::getline(in, line)) {
        if (line.rfind(key, 0) == 0) {
            std::istringstream is(line.substr(key.size()));
            double kb = 0.0;
            is >> kb;
            return kb / 1024.0;
        }
    }
    return 0.0;
}

void release_free_heap() {
#if defined(__GLIBC__)
    malloc_trim(0);
#endif
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

double current_rss_mb() { return status_field_mb("VmRSS"); }
double peak_rss_mb() { return status_field_mb("VmHWM"); }

bool reset_peak_rss() {
    std::ofstream out("/proc/self/clear_refs");
    if (!out) return false;
    out << "5";
    out.flush();
    return static_cast<bool>(out);
}

BenchConfig::BenchConfig() {
    train.architecture = {64, 32, 16};
    train.pretrain_n_epochs = 0;
    train.kmeans_n_init = 1;
    train.learning_rate = 1e-3;
}

std::vector<BenchRow> bench_scalability(const BenchConfig& cfg) {
    if (!std::is_sorted(cfg.sizes.begin(), cfg.sizes.end())) throw ContractViolation("bench sizes must be ascending");
    if (cfg.repetitions < 1) throw ContractViolation("bench needs at least one repetition");
    for (auto n : cfg.sizes) {
        if (n > kDeskScaleNodeLimit && !cfg.allow_large) {
            throw ContractViolation("size " + std::to_string(n) + " exceeds the desk-scale limit of " +
                                    std::to_string(kDeskScaleNodeLimit) + " nodes; pass allow_large to run it");
        }
    }
    TrainConfig tc = cfg.train;
    tc.n_epochs = cfg.epochs;
    tc.seed = cfg.seed;

    std::vector<BenchRow> rows;
    for (auto n : cfg.sizes) {
        BenchRow row;
        row.n_nodes = n;
        try {
            const CsrGraph g = rmat_generate(n, cfg.edge_factor, cfg.seed);
            const Matrix x = random_features(n, cfg.feat_dim, cfg.seed + 1);
            const CsrGraph aug = augment_self_loops(g);
            row.n_edges = g.n_edges;

            std::vector<double> filter_t, train_t, total_t;
            for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
                auto t0 = std::chrono::steady_clock::now();
                const Matrix xf = filter_exact(aug, x, cfg.filter);
                filter_t.push_back(seconds_since(t0));

                release_free_heap();
                reset_peak_rss();
                const double stage_base = current_rss_mb();
                double stage_peak = 0.0, loop_base = 0.0, loop_peak = 0.0;
                auto on_phase = [&](TrainPhase phase) {
                    if (phase == TrainPhase::CoTrainBegin) {
                        stage_peak = std::max(stage_peak, peak_rss_mb() - stage_base);
                        release_free_heap();
                        reset_peak_rss();
                        loop_base = current_rss_mb();
                    } else {
                        loop_peak = peak_rss_mb() - loop_base;
                    }
                };
                t0 = std::chrono::steady_clock::now();
                const auto tr = train_rwsl(g, xf, x, cfg.n_clusters, tc, on_phase);
                train_t.push_back(seconds_since(t0));
                stage_peak = std::max(stage_peak, peak_rss_mb() - stage_base);
                total_t.push_back(filter_t.back() + train_t.back());
                row.train_peak_mb = std::max(row.train_peak_mb, loop_peak);
                row.train_stage_peak_mb = std::max(row.train_stage_peak_mb, stage_peak);
            }
            row.filter_s = median(filter_t);
            row.train_s = median(train_t);
            row.total_s = median(total_t);
        } catch (const std::bad_alloc&) {
            row.ok = false;
            row.error = "out of memory";
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void save_bench_csv(const std::filesystem::path& path, const std::vector<BenchRow>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out.precision(10);
    out << "n_nodes,filter_s,train_s,total_s,n_edges,train_loop_peak_mb,train_stage_peak_mb,status,error\n";
    for (const auto& r : rows) {
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << r.n_nodes << "," << r.filter_s << "," << r.train_s << "," << r.total_s << "," << r.n_edges << ","
            << r.train_peak_mb << "," << r.train_stage_peak_mb << "," << (r.ok ? "ok" : "failed") << "," << err
            << "\n";
    }
    if (!out) throw Error("short write to " + path.string());
}

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "fit_linear needs two or more paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0.0, "fit_linear needs at least two distinct x values");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
    }
    f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : (ss_res == 0.0 ? 1.0 : 0.0);
    return f;
}

}  // namespace rwsl
