#include "rwsl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace rwsl {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::Config: return "config";
        case Stage::Load: return "load";
        case Stage::Filter: return "filter";
        case Stage::Pretrain: return "pretrain";
        case Stage::Train: return "train";
        case Stage::Evaluate: return "eval";
        case Stage::Write: return "write";
    }
    return "unknown";
}

namespace {

const char* method_name(FilterMethod m) { return m == FilterMethod::Exact ? "exact" : "randomwalk"; }

const char* mode_name(RunMode m) {
    switch (m) {
        case RunMode::Pipeline: return "pipeline";
        case RunMode::SweepAlpha: return "sweep-alpha";
        case RunMode::SweepEpsilon: return "sweep-epsilon";
        case RunMode::Bench: return "bench";
        case RunMode::Spectral: return "spectral";
    }
    return "pipeline";
}

RunMode parse_mode(const std::string& s) {
    for (auto m : {RunMode::Pipeline, RunMode::SweepAlpha, RunMode::SweepEpsilon, RunMode::Bench, RunMode::Spectral}) {
        if (s == mode_name(m)) return m;
    }
    throw ContractViolation("unknown mode '" + s + "'");
}

void require_file(const fs::path& p, const char* what) {
    if (!p.empty() && !fs::is_regular_file(p)) {
        throw ContractViolation(std::string(what) + " file not found: " + p.string());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("short write to " + path.string());
}

ordered_json metrics_object(const MetricReport& m) { return ordered_json::parse(m.to_json()); }

}  // namespace

void RunConfig::validate() const {
    filter.validate();
    train.validate();
    if (repeat < 1) throw ContractViolation("repeat must be >= 1");
    if (!(walk_scale > 0.0)) throw ContractViolation("walk_scale must be positive");
    if (n_clusters == 1) throw ContractViolation("n_clusters must be 0 (from labels) or >= 2");
    require_file(data.edges, "edge list");
    require_file(data.features, "feature");
    require_file(data.labels, "label");
}

ordered_json to_json(const RunConfig& cfg) {
    ordered_json j;
    j["mode"] = mode_name(cfg.mode);
    j["edges"] = cfg.data.edges.string();
    j["features"] = cfg.data.features.string();
    j["labels"] = cfg.data.labels.string();
    j["n_nodes"] = cfg.data.n_nodes;
    j["out"] = cfg.out_dir.string();
    j["repeat"] = cfg.repeat;
    j["n_clusters"] = cfg.n_clusters;
    j["filter_method"] = method_name(cfg.filter_method);
    j["alpha"] = cfg.filter.alpha;
    j["hops"] = cfg.filter.hops;
    j["rrz"] = cfg.filter.r;
    j["r_max"] = cfg.filter.r_max;
    j["n_walks"] = cfg.filter.n_walks;
    j["walk_scale"] = cfg.walk_scale;
    const auto& t = cfg.train;
    j["learning_rate"] = t.learning_rate;
    j["pretrain_lr"] = t.pretrain_lr;
    j["n_epochs"] = t.n_epochs;
    j["pretrain_n_epochs"] = t.pretrain_n_epochs;
    j["batch_size"] = t.batch_size;
    j["beta"] = t.beta;
    j["gamma"] = t.gamma_loss;
    j["epsilon"] = t.epsilon_mix;
    j["v"] = t.v_dof;
    j["update_p"] = t.update_p;
    j["dropout_rate"] = t.dropout_rate;
    j["weight_decay"] = t.weight_decay;
    j["seed"] = t.seed;
    j["ae_input"] = t.ae_input == AutoencoderInput::Filtered ? "filtered" : "raw";
    j["architecture"] = format_architecture(t.architecture);
    j["kmeans_n_init"] = t.kmeans_n_init;
    return j;
}

RunConfig config_from_json(const json& j_in, RunConfig cfg) {
    const json& j = j_in.contains("config") && j_in["config"].is_object() ? j_in["config"] : j_in;
    if (!j.is_object()) throw ContractViolation("config must be a JSON object");

    for (const auto& [key, val] : j.items()) {
        try {
            auto& t = cfg.train;
            if (key == "mode") cfg.mode = parse_mode(val.get<std::string>());
            else if (key == "edges") cfg.data.edges = val.get<std::string>();
            else if (key == "features") cfg.data.features = val.get<std::string>();
            else if (key == "labels") cfg.data.labels = val.get<std::string>();
            else if (key == "n_nodes") cfg.data.n_nodes = val.get<std::size_t>();
            else if (key == "out") cfg.out_dir = val.get<std::string>();
            else if (key == "repeat") cfg.repeat = val.get<std::size_t>();
            else if (key == "n_clusters") cfg.n_clusters = val.get<std::size_t>();
            else if (key == "filter_method") {
                const auto m = val.get<std::string>();
                if (m == "exact") cfg.filter_method = FilterMethod::Exact;
                else if (m == "randomwalk") cfg.filter_method = FilterMethod::RandomWalk;
                else throw ContractViolation("filter_method must be exact or randomwalk");
            }
            else if (key == "alpha") cfg.filter.alpha = val.get<double>();
            else if (key == "hops") cfg.filter.hops = val.get<std::size_t>();
            else if (key == "rrz") cfg.filter.r = val.get<double>();
            else if (key == "r_max") cfg.filter.r_max = val.get<double>();
            else if (key == "n_walks") cfg.filter.n_walks = val.get<std::size_t>();
            else if (key == "walk_scale") cfg.walk_scale = val.get<double>();
            else if (key == "learning_rate") t.learning_rate = val.get<double>();
            else if (key == "pretrain_lr") t.pretrain_lr = val.get<double>();
            else if (key == "n_epochs") t.n_epochs = val.get<std::size_t>();
            else if (key == "pretrain_n_epochs") t.pretrain_n_epochs = val.get<std::size_t>();
            else if (key == "batch_size") t.batch_size = val.get<std::size_t>();
            else if (key == "beta") t.beta = val.get<double>();
            else if (key == "gamma") t.gamma_loss = val.get<double>();
            else if (key == "epsilon") t.epsilon_mix = val.get<double>();
            else if (key == "v") t.v_dof = val.get<double>();
            else if (key == "update_p") t.update_p = val.get<std::size_t>();
            else if (key == "dropout_rate") t.dropout_rate = val.get<double>();
            else if (key == "weight_decay") t.weight_decay = val.get<double>();
            else if (key == "seed") t.seed = val.get<std::uint64_t>();
            else if (key == "ae_input") {
                const auto m = val.get<std::string>();
                if (m == "filtered") t.ae_input = AutoencoderInput::Filtered;
                else if (m == "raw") t.ae_input = AutoencoderInput::Raw;
                else throw ContractViolation("ae_input must be filtered or raw");
            }
            else if (key == "architecture") {
                if (val.is_string()) {
                    t.architecture = parse_architecture(val.get<std::string>());
                } else {
                    t.architecture = val.get<std::vector<std::size_t>>();
                }
            }
            else if (key == "kmeans_n_init") t.kmeans_n_init = val.get<std::size_t>();
            else throw ContractViolation("unknown config key '" + key + "'");
        } catch (const json::exception& e) {
            throw ContractViolation("config key '" + key + "': " + e.what());
        }
    }
    if (!j.contains("n_walks") && (j.contains("r_max") || j.contains("walk_scale"))) {
        cfg.filter.n_walks = walk_budget(cfg.filter.r_max, cfg.walk_scale);
    }
    return cfg;
}

RunConfig load_config(const fs::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed config " + path.string() + ": " + e.what(), 0);
    }
    return config_from_json(j, std::move(base));
}

Dataset load_dataset(const DatasetPaths& paths) {
    if (paths.features.empty()) throw ContractViolation("a feature file is required");
    if (paths.edges.empty()) throw ContractViolation("an edge list is required");
    Dataset d;
    d.features = load_features(paths.features);
    const auto n = paths.n_nodes ? paths.n_nodes : static_cast<std::size_t>(d.features.rows());
    if (static_cast<std::size_t>(d.features.rows()) != n) {
        throw ContractViolation("feature file has " + std::to_string(d.features.rows()) + " rows, expected " +
                                std::to_string(n));
    }
    d.graph = load_edge_list(paths.edges, n);
    if (!paths.labels.empty()) {
        d.labels = load_labels(paths.labels);
        if (d.labels.size() != n) {
            throw ContractViolation("label file has " + std::to_string(d.labels.size()) + " entries, expected " +
                                    std::to_string(n));
        }
    }
    return d;
}

Matrix compute_filtered(const Dataset& data, const RunConfig& cfg, std::uint64_t seed) {
    const bool walk = cfg.filter_method == FilterMethod::RandomWalk;
    const CsrGraph aug = augment_self_loops(data.graph);

    FilterCacheKey key;
    key.method = method_name(cfg.filter_method);
    key.alpha = cfg.filter.alpha;
    key.hops = walk ? 0 : cfg.filter.hops;
    key.r = cfg.filter.r;
    key.r_max = walk ? cfg.filter.r_max : 0.0;
    key.n_walks = walk ? cfg.filter.n_walks : 0;
    key.seed = walk ? seed : 0;
    key.graph_hash = data.graph.fingerprint();
    key.feature_hash = matrix_fingerprint(data.features);

    fs::path cache;
    if (!cfg.out_dir.empty()) {
        cache = cfg.out_dir / "features.filtered.bin";
        if (auto hit = load_filter_cache(cache, key)) return std::move(*hit);
    }
    Matrix out = walk ? filter_randomwalk(aug, data.features, cfg.filter, seed)
                      : filter_exact(aug, data.features, cfg.filter);
    if (!cache.empty()) save_filter_cache(cache, key, out);
    return out;
}

RepeatSummary summarize(const std::vector<MetricReport>& runs) {
    RepeatSummary s;
    s.runs = runs;
    if (runs.empty()) return s;
    const std::size_t k = runs.front().values().size();
    std::vector<double> mean(k, 0.0), sd(k, 0.0);
    for (const auto& r : runs) {
        const auto v = r.values();
        for (std::size_t i = 0; i < k; ++i) mean[i] += v[i];
    }
    for (auto& m : mean) m /= static_cast<double>(runs.size());
    s.std_valid = runs.size() >= 2;
    if (s.std_valid) {
        for (const auto& r : runs) {
            const auto v = r.values();
            for (std::size_t i = 0; i < k; ++i) sd[i] += (v[i] - mean[i]) * (v[i] - mean[i]);
        }
        for (auto& x : sd) x = std::sqrt(x / static_cast<double>(runs.size() - 1));
    }
    s.mean = MetricReport::from_values(mean);
    s.std = MetricReport::from_values(sd);
    return s;
}

PipelineResult run_pipeline(const Dataset& data, const RunConfig& cfg) {
    run_stage(Stage::Config, [&] {
        cfg.validate();
        if (data.labels.empty()) throw ContractViolation("the pipeline needs ground-truth labels for evaluation");
        return 0;
    });
    const std::size_t k = cfg.n_clusters ? cfg.n_clusters : static_cast<std::size_t>(count_classes(data.labels));
    if (!cfg.out_dir.empty()) {
        run_stage(Stage::Write, [&] { return fs::create_directories(cfg.out_dir); });
    }

    PipelineResult res;
    std::vector<MetricReport> runs;
    Matrix filtered;
    TrainResult first;
    for (std::size_t rep = 0; rep < cfg.repeat; ++rep) {
        const std::uint64_t seed = cfg.train.seed + rep;
        res.seeds.push_back(seed);
        if (rep == 0 || cfg.filter_method == FilterMethod::RandomWalk) {
            filtered = run_stage(Stage::Filter, [&] { return compute_filtered(data, cfg, seed); });
        }
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        auto tr = run_stage(Stage::Train, [&] { return train_rwsl(data.graph, filtered, data.features, k, tc); });
        runs.push_back(run_stage(Stage::Evaluate, [&] { return evaluate(data.graph, tr.assignments, data.labels); }));
        if (rep == 0) first = std::move(tr);
    }
    res.metrics = summarize(runs);
    res.assignments = first.assignments;
    res.loss_history = first.loss_history;

    if (cfg.out_dir.empty()) return res;
    run_stage(Stage::Write, [&] {
        const fs::path& out = cfg.out_dir;
        save_labels(first.assignments, out / "assignments.txt");
        save_loss_csv(out / "loss.csv", first.loss_history);
        save_checkpoint(out / "checkpoint.bin", first.checkpoint);

        ordered_json mj;
        mj["n_runs"] = runs.size();
        mj["seeds"] = res.seeds;
        mj["mean"] = metrics_object(res.metrics.mean);
        mj["std"] = metrics_object(res.metrics.std);
        mj["std_valid"] = res.metrics.std_valid;
        mj["runs"] = ordered_json::array();
        for (const auto& r : runs) mj["runs"].push_back(metrics_object(r));
        write_text(out / "metrics.json", mj.dump(2) + "\n");

        std::ostringstream csv;
        csv << "run,seed," << MetricReport::csv_header() << "\n";
        for (std::size_t i = 0; i < runs.size(); ++i) csv << i << "," << res.seeds[i] << "," << runs[i].csv_row() << "\n";
        csv << "mean,," << res.metrics.mean.csv_row() << "\n";
        csv << "std,," << res.metrics.std.csv_row() << "\n";
        write_text(out / "metrics.csv", csv.str());

        ordered_json extra;
        extra["metrics_mean"] = metrics_object(res.metrics.mean);
        write_manifest(cfg, res.seeds,
                       {"assignments.txt", "loss.csv", "checkpoint.bin", "metrics.json", "metrics.csv",
                        "features.filtered.bin"},
                       extra);
        return 0;
    });
    return res;
}

PipelineResult run_pipeline(const RunConfig& cfg) {
    run_stage(Stage::Config, [&] {
        cfg.validate();
        return 0;
    });
    const Dataset data = run_stage(Stage::Load, [&] { return load_dataset(cfg.data); });
    return run_pipeline(data, cfg);
}

void save_sweep_csv(const fs::path& path, const SweepResult& sweep) {
    std::ostringstream os;
    os.precision(17);
    os << sweep.parameter << ",metric,mean,std,n_runs,std_valid\n";
    for (std::size_t i = 0; i < sweep.values.size(); ++i) {
        const auto& s = sweep.summaries.at(i);
        const auto mean = s.mean.values();
        const auto sd = s.std.values();
        for (std::size_t m = 0; m < mean.size(); ++m) {
            os << sweep.values[i] << "," << MetricReport::kFieldNames[m] << "," << mean[m] << "," << sd[m] << ","
               << s.runs.size() << "," << (s.std_valid ? 1 : 0) << "\n";
        }
    }
    write_text(path, os.str());
}

namespace {

template <typename Set>
SweepResult sweep(const Dataset& data, const RunConfig& cfg, const char* name, const std::vector<double>& values,
                  Set&& set) {
    SweepResult out;
    out.parameter = name;
    for (double v : values) {
        RunConfig point = cfg;
        point.out_dir.clear();
        set(point, v);
        out.values.push_back(v);
        out.summaries.push_back(run_pipeline(data, point).metrics);
    }
    return out;
}

}  // namespace

SweepResult sweep_epsilon(const Dataset& data, const RunConfig& cfg, const std::vector<double>& values) {
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) throw ContractViolation("epsilon values must lie in [0,1]");
    }
    return sweep(data, cfg, "epsilon", values, [](RunConfig& c, double v) { c.train.epsilon_mix = v; });
}

SweepResult sweep_alpha(const Dataset& data, const RunConfig& cfg, const std::vector<double>& values) {
    for (double v : values) {
        if (!(v > 0.0 && v < 1.0)) throw ContractViolation("alpha values must lie in (0,1)");
    }
    return sweep(data, cfg, "alpha", values, [](RunConfig& c, double v) { c.filter.alpha = v; });
}

std::vector<double> grid(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw ContractViolation("grid needs lo <= hi and a positive step");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> out;
    out.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
    return out;
}

SpectralSummary run_spectral(const CsrGraph& g, const std::vector<double>& alphas, std::size_t hops,
                             const fs::path& out_dir, std::size_t dense_limit) {
    if (alphas.empty()) throw ContractViolation("spectral analysis needs at least one alpha");
    const CsrGraph aug = augment_self_loops(g);
    SpectralSummary sum;
    for (double a : alphas) sum.reports.push_back(spectral_report(aug, a, hops, dense_limit));

    std::set<double> sorted(alphas.begin(), alphas.end());
    const std::vector<double> uniq(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < uniq.size(); ++i) {
        for (std::size_t j = i + 1; j < uniq.size(); ++j) {
            std::optional<std::size_t> l0;
            try {
                l0 = verify_claim1(uniq[i], uniq[j], 5000);
            } catch (const VerificationFailure&) {
            }
            sum.claim1.push_back({{uniq[i], uniq[j]}, l0});
        }
    }

    // Standard grid plus the requested alphas and the graph's own nonzero
    // Laplacian eigenvalues (a zero eigenvalue maps to 0 for every alpha).
    auto a_grid = grid(0.05, 0.95, 0.01);
    a_grid.insert(a_grid.end(), uniq.begin(), uniq.end());
    std::sort(a_grid.begin(), a_grid.end());
    a_grid.erase(std::unique(a_grid.begin(), a_grid.end()), a_grid.end());
    auto l_grid = grid(0.01, 1.99, 0.01);
    for (double e : sum.reports.front().eigenvalues_gcn) {
        const double lam = 1.0 - e;
        if (lam > 1e-9 && lam < 2.0) l_grid.push_back(lam);
    }
    sum.claim2 = verify_claim2(a_grid, l_grid);

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ostringstream gcn;
        gcn.precision(17);
        gcn << "index,eigenvalue,lambda_sym\n";
        const auto& ev = sum.reports.front().eigenvalues_gcn;
        for (std::size_t i = 0; i < ev.size(); ++i) gcn << i << "," << ev[i] << "," << 1.0 - ev[i] << "\n";
        write_text(out_dir / "eigen_gcn.csv", gcn.str());

        std::ostringstream ppr;
        ppr.precision(17);
        ppr << "alpha,index,lambda_sym,closed,direct,abs_gap\n";
        for (const auto& r : sum.reports) {
            for (std::size_t i = 0; i < r.eigenvalues_gcn.size(); ++i) {
                ppr << r.alpha << "," << i << "," << 1.0 - r.eigenvalues_gcn[i] << "," << r.eigenvalues_ppr_closed[i]
                    << "," << r.eigenvalues_ppr_direct[i] << ","
                    << std::abs(r.eigenvalues_ppr_closed[i] - r.eigenvalues_ppr_direct[i]) << "\n";
            }
        }
        write_text(out_dir / "eigen_ppr.csv", ppr.str());

        std::ostringstream claims;
        for (const auto& [pair, l0] : sum.claim1) {
            claims << "claim1 alpha1=" << pair.first << " alpha2=" << pair.second << " ";
            if (l0) {
                claims << "l0=" << *l0 << " PASS\n";
            } else {
                claims << "no crossover below 5000 FAIL\n";
            }
        }
        claims << "claim2 alphas=" << a_grid.size() << " lambdas=" << l_grid.size() << " "
               << (sum.claim2 ? "PASS" : "FAIL") << "\n";
        write_text(out_dir / "claims.txt", claims.str());
    }
    return sum;
}

void write_manifest(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                    const std::vector<std::string>& artifacts, const ordered_json& extra) {
    ordered_json manifest;
    manifest["config"] = to_json(cfg);
    manifest["seeds"] = seeds;
    manifest["inputs"] = ordered_json::object();
    for (const auto& [name, p] : {std::pair{"edges", cfg.data.edges}, std::pair{"features", cfg.data.features},
                                  std::pair{"labels", cfg.data.labels}}) {
        if (!p.empty() && fs::exists(p)) manifest["inputs"][name] = file_hash(p);
    }
    manifest["artifacts"] = ordered_json::object();
    for (const auto& name : artifacts) {
        if (fs::exists(cfg.out_dir / name)) manifest["artifacts"][name] = file_hash(cfg.out_dir / name);
    }
    if (extra.is_object()) {
        for (const auto& [k, v] : extra.items()) manifest[k] = v;
    }
    write_text(cfg.out_dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string file_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace rwsl
