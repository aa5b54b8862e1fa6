// rwsl: command-line front end for filtering, training, evaluation, sweeps,
// the scalability benchmark and the spectral report.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rwsl/bench.hpp"
#include "rwsl/pipeline.hpp"

namespace fs = std::filesystem;
using namespace rwsl;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

enum class KeyType { Real, Count, Text };

struct ConfigKey {
    const char* key;
    KeyType type;
    const char* help;
};

constexpr ConfigKey kKeys[] = {
    {"edges", KeyType::Text, "edge list, one 'u v' pair per line"},
    {"features", KeyType::Text, "feature matrix, one row per node"},
    {"labels", KeyType::Text, "ground-truth labels, one per line"},
    {"n_nodes", KeyType::Count, "node count (default: feature rows)"},
    {"n_clusters", KeyType::Count, "number of clusters K (default: distinct labels)"},
    {"repeat", KeyType::Count, "runs with seeds seed..seed+repeat-1"},
    {"filter_method", KeyType::Text, "exact | randomwalk"},
    {"alpha", KeyType::Real, "teleport probability"},
    {"hops", KeyType::Count, "truncation depth of the exact filter"},
    {"rrz", KeyType::Real, "convolution coefficient r"},
    {"r_max", KeyType::Real, "approximation threshold of the walk estimator"},
    {"n_walks", KeyType::Count, "walks per node (default: ceil(walk_scale / r_max))"},
    {"walk_scale", KeyType::Real, "walk budget multiplier"},
    {"learning_rate", KeyType::Real, "co-training learning rate"},
    {"pretrain_lr", KeyType::Real, "autoencoder pretraining learning rate"},
    {"n_epochs", KeyType::Count, "co-training iterations"},
    {"pretrain_n_epochs", KeyType::Count, "pretraining epochs"},
    {"batch_size", KeyType::Count, "mini-batch rows"},
    {"beta", KeyType::Real, "weight of KL(T||P_H)"},
    {"gamma", KeyType::Real, "weight of KL(T||P_Z)"},
    {"epsilon", KeyType::Real, "balance coefficient of the layer mixing"},
    {"v", KeyType::Real, "Student-t degrees of freedom"},
    {"update_p", KeyType::Count, "target refresh period"},
    {"dropout_rate", KeyType::Real, "dropout on hidden layers"},
    {"weight_decay", KeyType::Real, "AdamW weight decay"},
    {"seed", KeyType::Count, "base random seed"},
    {"ae_input", KeyType::Text, "filtered | raw autoencoder input"},
    {"architecture", KeyType::Text, "encoder widths, e.g. 512-2048-32"},
    {"kmeans_n_init", KeyType::Count, "K-means restarts for centroid init"},
};

int exit_code(Stage s) {
    switch (s) {
        case Stage::Config: return 2;
        case Stage::Load: return 3;
        case Stage::Filter: return 4;
        case Stage::Pretrain: return 5;
        case Stage::Train: return 6;
        case Stage::Evaluate: return 7;
        case Stage::Write: return 8;
    }
    return 1;
}

std::string dashed(std::string s) {
    for (auto& c : s) {
        if (c == '_') c = '-';
    }
    return s;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part.empty()) continue;
        std::size_t pos = 0;
        const double v = std::stod(part, &pos);
        if (pos != part.size()) throw ContractViolation("not a number: " + part);
        out.push_back(v);
    }
    return out;
}

/// Config file + flag overrides shared by every subcommand.
struct ConfigOptions {
    std::string config_path;
    std::string out;
    std::map<std::string, std::string> raw;
    std::map<std::string, CLI::Option*> opts;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "JSON config or a previous run's manifest.json")
            ->check(CLI::ExistingFile);
        app->add_option("-o,--out", out, "output directory");
        for (const auto& k : kKeys) {
            opts[k.key] = app->add_option("--" + dashed(k.key), raw[k.key], k.help);
        }
    }

    RunConfig resolve(RunMode mode, RunConfig cfg = {}) const {
        return run_stage(Stage::Config, [&] {
            if (!config_path.empty()) cfg = load_config(config_path, std::move(cfg));
            json overrides = json::object();
            for (const auto& k : kKeys) {
                if (opts.at(k.key)->count() == 0) continue;
                const std::string& v = raw.at(k.key);
                try {
                    switch (k.type) {
                        case KeyType::Real: overrides[k.key] = std::stod(v); break;
                        case KeyType::Count: overrides[k.key] = std::stoull(v); break;
                        case KeyType::Text: overrides[k.key] = v; break;
                    }
                } catch (const std::logic_error&) {
                    throw ContractViolation("--" + dashed(k.key) + ": cannot parse '" + v + "'");
                }
            }
            if (!out.empty()) overrides["out"] = out;
            cfg = config_from_json(overrides, std::move(cfg));
            cfg.mode = mode;
            cfg.validate();
            return cfg;
        });
    }
};

void require_out(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw StageError(Stage::Config, "--out is required");
    run_stage(Stage::Write, [&] { return fs::create_directories(cfg.out_dir); });
}

Dataset load(const RunConfig& cfg) {
    return run_stage(Stage::Load, [&] { return load_dataset(cfg.data); });
}

void print_summary(const RepeatSummary& s) {
    const auto mean = s.mean.values();
    const auto sd = s.std.values();
    for (std::size_t i = 0; i < mean.size(); ++i) {
        std::printf("%-12s %.4f", MetricReport::kFieldNames[i], mean[i]);
        if (s.std_valid) std::printf(" +- %.4f", sd[i]);
        std::printf("\n");
    }
    if (!s.std_valid) std::printf("(std not reported: fewer than two runs)\n");
}

std::size_t cluster_count(const RunConfig& cfg, const Dataset& d) {
    if (cfg.n_clusters) return cfg.n_clusters;
    if (d.labels.empty()) throw StageError(Stage::Config, "pass --n-clusters or --labels");
    return static_cast<std::size_t>(count_classes(d.labels));
}

int cmd_filter(const ConfigOptions& co) {
    const auto cfg = co.resolve(RunMode::Pipeline);
    require_out(cfg);
    const auto data = load(cfg);
    const Matrix xf = run_stage(Stage::Filter, [&] { return compute_filtered(data, cfg, cfg.train.seed); });
    run_stage(Stage::Write, [&] {
        write_manifest(cfg, {cfg.train.seed}, {"features.filtered.bin"});
        return 0;
    });
    std::printf("filtered %ld x %ld -> %s\n", static_cast<long>(xf.rows()), static_cast<long>(xf.cols()),
                (cfg.out_dir / "features.filtered.bin").c_str());
    return 0;
}

int cmd_pretrain(const ConfigOptions& co) {
    const auto cfg = co.resolve(RunMode::Pipeline);
    require_out(cfg);
    const auto data = load(cfg);
    const Matrix xf = run_stage(Stage::Filter, [&] { return compute_filtered(data, cfg, cfg.train.seed); });
    const Matrix& x_ae = cfg.train.ae_input == AutoencoderInput::Raw ? data.features : xf;
    auto pre = run_stage(Stage::Pretrain, [&] { return pretrain_autoencoder(x_ae, cfg.train); });
    run_stage(Stage::Write, [&] {
        Checkpoint ckpt;
        ckpt.models = {{"encoder", pre.ae.encoder}, {"decoder", pre.ae.decoder}};
        ckpt.optimizers = {{"autoencoder", pre.optimizer}};
        save_checkpoint(cfg.out_dir / "pretrain.bin", ckpt);
        std::ofstream out(cfg.out_dir / "pretrain_loss.csv");
        out.precision(17);
        out << "epoch,l_mse\n";
        for (std::size_t i = 0; i < pre.loss_history.size(); ++i) out << i << "," << pre.loss_history[i] << "\n";
        out.close();
        write_manifest(cfg, {cfg.train.seed}, {"features.filtered.bin", "pretrain.bin", "pretrain_loss.csv"});
        return 0;
    });
    std::printf("pretrain loss %.6g -> %.6g\n", pre.initial_loss,
                pre.loss_history.empty() ? pre.initial_loss : pre.loss_history.back());
    return 0;
}

int cmd_train(const ConfigOptions& co) {
    const auto cfg = co.resolve(RunMode::Pipeline);
    require_out(cfg);
    const auto data = load(cfg);
    const auto k = cluster_count(cfg, data);
    const Matrix xf = run_stage(Stage::Filter, [&] { return compute_filtered(data, cfg, cfg.train.seed); });
    auto tr = run_stage(Stage::Train, [&] { return train_rwsl(data.graph, xf, data.features, k, cfg.train); });
    run_stage(Stage::Write, [&] {
        save_labels(tr.assignments, cfg.out_dir / "assignments.txt");
        save_loss_csv(cfg.out_dir / "loss.csv", tr.loss_history);
        save_checkpoint(cfg.out_dir / "checkpoint.bin", tr.checkpoint);
        write_manifest(cfg, {cfg.train.seed},
                       {"features.filtered.bin", "assignments.txt", "loss.csv", "checkpoint.bin"});
        return 0;
    });
    std::printf("trained %zu iterations, final loss %.6g\n", tr.loss_history.size(),
                tr.loss_history.empty() ? 0.0 : tr.loss_history.back().total);
    return 0;
}

int cmd_eval(const ConfigOptions& co, const std::string& pred_path) {
    const auto cfg = co.resolve(RunMode::Pipeline);
    require_out(cfg);
    if (cfg.data.edges.empty() || cfg.data.labels.empty()) {
        throw StageError(Stage::Config, "eval needs --edges and --labels");
    }
    const auto [g, pred, truth] = run_stage(Stage::Load, [&] {
        auto p = load_labels(pred_path);
        auto t = load_labels(cfg.data.labels);
        const auto n = cfg.data.n_nodes ? cfg.data.n_nodes : p.size();
        return std::tuple{load_edge_list(cfg.data.edges, n), std::move(p), std::move(t)};
    });
    const auto report = run_stage(Stage::Evaluate, [&] { return evaluate(g, pred, truth); });
    run_stage(Stage::Write, [&] {
        std::ofstream(cfg.out_dir / "metrics.json") << report.to_json() << "\n";
        std::ofstream(cfg.out_dir / "metrics.csv") << MetricReport::csv_header() << "\n" << report.csv_row() << "\n";
        ordered_json extra;
        extra["predictions"] = fs::absolute(pred_path).string();
        extra["predictions_hash"] = file_hash(pred_path);
        write_manifest(cfg, {}, {"metrics.json", "metrics.csv"}, extra);
        return 0;
    });
    print_summary(summarize({report}));
    return 0;
}

int cmd_pipeline(const ConfigOptions& co) {
    const auto cfg = co.resolve(RunMode::Pipeline);
    require_out(cfg);
    const auto res = run_pipeline(cfg);
    print_summary(res.metrics);
    return 0;
}

int cmd_sweep(const ConfigOptions& co, bool alpha, const std::string& values) {
    const auto cfg = co.resolve(alpha ? RunMode::SweepAlpha : RunMode::SweepEpsilon);
    require_out(cfg);
    const auto vals = run_stage(Stage::Config, [&] { return parse_list(values); });
    const auto data = load(cfg);
    const auto sweep = alpha ? sweep_alpha(data, cfg, vals) : sweep_epsilon(data, cfg, vals);
    const std::string name = alpha ? "sweep_alpha.csv" : "sweep_epsilon.csv";
    run_stage(Stage::Write, [&] {
        save_sweep_csv(cfg.out_dir / name, sweep);
        ordered_json extra;
        extra["values"] = vals;
        std::vector<std::uint64_t> seeds;
        for (std::size_t r = 0; r < cfg.repeat; ++r) seeds.push_back(cfg.train.seed + r);
        write_manifest(cfg, seeds, {name}, extra);
        return 0;
    });
    for (std::size_t i = 0; i < sweep.values.size(); ++i) {
        std::printf("%s=%g accuracy %.4f nmi %.4f\n", sweep.parameter.c_str(), sweep.values[i],
                    sweep.summaries[i].mean.accuracy, sweep.summaries[i].mean.nmi);
    }
    return 0;
}

struct BenchOptions {
    std::string sizes = "10000,30000,100000";
    double edge_factor = 20.0;
    std::size_t feat_dim = 100;
    std::size_t epochs = 5;
    std::size_t repetitions = 3;
    bool allow_large = false;
};

int cmd_bench(const ConfigOptions& co, const BenchOptions& bo) {
    BenchConfig bc;
    RunConfig base;
    base.train = bc.train;
    const auto cfg = co.resolve(RunMode::Bench, base);
    require_out(cfg);
    run_stage(Stage::Config, [&] {
        for (double s : parse_list(bo.sizes)) bc.sizes.push_back(static_cast<std::size_t>(s));
        return 0;
    });
    bc.edge_factor = bo.edge_factor;
    bc.feat_dim = bo.feat_dim;
    bc.epochs = bo.epochs;
    bc.repetitions = bo.repetitions;
    bc.allow_large = bo.allow_large;
    bc.seed = cfg.train.seed;
    bc.filter = cfg.filter;
    bc.train = cfg.train;
    if (cfg.n_clusters) bc.n_clusters = cfg.n_clusters;
    const auto rows = run_stage(Stage::Config, [&] { return bench_scalability(bc); });
    run_stage(Stage::Write, [&] {
        save_bench_csv(cfg.out_dir / "bench.csv", rows);
        ordered_json extra;
        extra["bench"] = {{"sizes", bc.sizes},           {"edge_factor", bc.edge_factor},
                          {"feat_dim", bc.feat_dim},     {"epochs", bc.epochs},
                          {"repetitions", bc.repetitions}, {"architecture", format_architecture(bc.train.architecture)}};
        write_manifest(cfg, {bc.seed}, {"bench.csv"}, extra);
        return 0;
    });
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
        if (r.ok) {
            std::printf("n=%zu edges=%zu filter %.3fs train %.3fs total %.3fs train-loop peak %.1f MiB\n", r.n_nodes,
                        r.n_edges, r.filter_s, r.train_s, r.total_s, r.train_peak_mb);
            xs.push_back(static_cast<double>(r.n_nodes));
            ys.push_back(r.train_s);
        } else {
            std::printf("n=%zu FAILED: %s\n", r.n_nodes, r.error.c_str());
        }
    }
    if (xs.size() >= 2) std::printf("linear fit of train_s vs n: R^2 = %.4f\n", fit_linear(xs, ys).r2);
    for (const auto& r : rows) {
        if (!r.ok) return exit_code(Stage::Train);
    }
    return 0;
}

int cmd_spectral(const ConfigOptions& co, const std::string& alphas, std::size_t hops, std::size_t limit) {
    auto cfg = co.resolve(RunMode::Spectral);
    require_out(cfg);
    if (cfg.data.edges.empty()) throw StageError(Stage::Config, "spectral needs --edges");
    const auto al = run_stage(Stage::Config, [&] { return parse_list(alphas); });
    const CsrGraph g = run_stage(Stage::Load, [&] {
        std::size_t n = cfg.data.n_nodes;
        if (n == 0 && !cfg.data.features.empty()) n = static_cast<std::size_t>(load_features(cfg.data.features).rows());
        if (n == 0) throw ContractViolation("pass --n-nodes or --features to fix the node count");
        return load_edge_list(cfg.data.edges, n);
    });
    const auto sum = run_stage(Stage::Evaluate, [&] { return run_spectral(g, al, hops, cfg.out_dir, limit); });
    run_stage(Stage::Write, [&] {
        ordered_json extra;
        extra["spectral"] = {{"alphas", al}, {"hops", hops}};
        write_manifest(cfg, {}, {"eigen_gcn.csv", "eigen_ppr.csv", "claims.txt"}, extra);
        return 0;
    });
    bool ok = sum.claim2;
    for (const auto& r : sum.reports) {
        std::printf("alpha=%g: %zu eigenvalues, max |closed - direct| = %.3g\n", r.alpha, r.eigenvalues_gcn.size(),
                    r.max_abs_gap);
    }
    for (const auto& [pair, l0] : sum.claim1) {
        if (l0) {
            std::printf("claim1 alpha1=%g alpha2=%g crossover l0=%zu PASS\n", pair.first, pair.second, *l0);
        } else {
            std::printf("claim1 alpha1=%g alpha2=%g FAIL\n", pair.first, pair.second);
            ok = false;
        }
    }
    std::printf("claim2 %s\n", sum.claim2 ? "PASS" : "FAIL");
    return ok ? 0 : exit_code(Stage::Evaluate);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attributed graph clustering with PageRank-filtered features"};
    app.require_subcommand(1);

    std::map<std::string, ConfigOptions> co;
    auto sub = [&](const char* name, const char* help) {
        auto* s = app.add_subcommand(name, help);
        co[name].attach(s);
        return s;
    };

    sub("filter", "compute and cache the filtered features");
    sub("pretrain", "pretrain the autoencoder");
    sub("train", "co-train and write cluster assignments");
    std::string pred_path;
    sub("eval", "score assignments against labels")
        ->add_option("--pred", pred_path, "assignments file")
        ->required()
        ->check(CLI::ExistingFile);
    sub("pipeline", "filter, train and evaluate, repeated over seeds");
    std::string alpha_values = "0.05,0.1,0.2,0.4,0.8";
    sub("sweep-alpha", "metrics across teleport probabilities")->add_option("--values", alpha_values, "alpha list");
    std::string eps_values = "0.0,0.2,0.5,0.8,1.0";
    sub("sweep-epsilon", "metrics across balance coefficients")->add_option("--values", eps_values, "epsilon list");

    BenchOptions bo;
    auto* bench = sub("bench", "training time versus graph size on R-MAT graphs");
    bench->add_option("--sizes", bo.sizes, "ascending node counts");
    bench->add_option("--edge-factor", bo.edge_factor, "edges per node");
    bench->add_option("--feat-dim", bo.feat_dim, "random feature width");
    bench->add_option("--epochs", bo.epochs, "co-training iterations");
    bench->add_option("--repetitions", bo.repetitions, "timed repetitions per size (median reported)");
    bench->add_flag("--allow-large", bo.allow_large, "permit sizes above the desk-scale limit");

    std::string spec_alphas = "0.05,0.1,0.2";
    std::size_t spec_hops = 100;
    std::size_t spec_limit = kDefaultDenseEigenLimit;
    auto* spectral = sub("spectral", "eigenvalues of the filter and claim checks");
    spectral->add_option("--alphas", spec_alphas, "alpha list");
    spectral->add_option("--spectral-hops", spec_hops, "hops of the accumulated filter");
    spectral->add_option("--dense-limit", spec_limit, "largest graph diagonalized densely");

    CLI11_PARSE(app, argc, argv);

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        const auto& o = co.at(name);
        if (name == "filter") return cmd_filter(o);
        if (name == "pretrain") return cmd_pretrain(o);
        if (name == "train") return cmd_train(o);
        if (name == "eval") return cmd_eval(o, pred_path);
        if (name == "pipeline") return cmd_pipeline(o);
        if (name == "sweep-alpha") return cmd_sweep(o, true, alpha_values);
        if (name == "sweep-epsilon") return cmd_sweep(o, false, eps_values);
        if (name == "bench") return cmd_bench(o, bo);
        if (name == "spectral") return cmd_spectral(o, spec_alphas, spec_hops, spec_limit);
    } catch (const StageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code(e.stage());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
