#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwsl/gpr_filter.hpp"
#include "rwsl/graph.hpp"
#include "rwsl/metrics.hpp"
#include "rwsl/trainer.hpp"

namespace rwsl {

enum class FilterMethod { Exact, RandomWalk };
enum class RunMode { Pipeline, SweepAlpha, SweepEpsilon, Bench, Spectral };

enum class Stage { Config, Load, Filter, Pretrain, Train, Evaluate, Write };
const char* stage_name(Stage s);

/// Failure of one pipeline stage; what() is prefixed with the stage name.
class StageError : public Error {
public:
    StageError(Stage stage, const std::string& what)
        : Error(std::string(stage_name(stage)) + ": " + what), stage_(stage) {}
    Stage stage() const { return stage_; }

private:
    Stage stage_;
};

/// Runs fn, re-raising any non-stage exception as a StageError for `stage`.
template <typename Fn>
auto run_stage(Stage stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

struct DatasetPaths {
    std::filesystem::path edges;
    std::filesystem::path features;
    std::filesystem::path labels;  // optional for unsupervised runs
    std::size_t n_nodes = 0;       // 0: taken from the feature row count
};

/// Fully resolved settings of one CLI invocation.
///
/// Serialized as a flat JSON object of hyperparameter keys (learning_rate,
/// n_epochs, v, beta, gamma, dropout_rate, weight_decay, update_p, pretrain_lr,
/// pretrain_n_epochs, alpha, r_max, rrz, architecture, ...) and artifact keys
/// (edges, features, labels, out, ...).
struct RunConfig {
    DatasetPaths data;
    FilterConfig filter;
    FilterMethod filter_method = FilterMethod::Exact;
    double walk_scale = 1.0;  // n_walks = ceil(walk_scale / r_max) unless n_walks is given
    TrainConfig train;
    std::size_t n_clusters = 0;  // 0: number of distinct labels
    std::filesystem::path out_dir;
    std::size_t repeat = 1;
    RunMode mode = RunMode::Pipeline;

    /// Checks parameter ranges and that every referenced input file exists.
    void validate() const;
};

nlohmann::ordered_json to_json(const RunConfig& cfg);

/// Applies the keys present in `j` on top of `base`. A manifest is accepted
/// too: its "config" member is used. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

struct Dataset {
    CsrGraph graph;  // without self-loops
    Matrix features;
    LabelVector labels;
};

Dataset load_dataset(const DatasetPaths& paths);

/// Filtered features for the configured method (cached under out_dir when set).
Matrix compute_filtered(const Dataset& data, const RunConfig& cfg, std::uint64_t seed);

struct RepeatSummary {
    std::vector<MetricReport> runs;
    MetricReport mean;
    MetricReport std;
    bool std_valid = false;  // false when fewer than two repeats
};

RepeatSummary summarize(const std::vector<MetricReport>& runs);

struct PipelineResult {
    RepeatSummary metrics;
    std::vector<std::uint64_t> seeds;
    LabelVector assignments;  // of the first repeat
    std::vector<LossRecord> loss_history;
};

/// filter -> pretrain -> co-train -> metrics, repeated with seeds
/// seed, seed+1, ... . When out_dir is set, writes metrics.json, metrics.csv,
/// manifest.json, the filtered-feature cache and, for the first repeat,
/// loss.csv, assignments.txt and checkpoint.bin.
PipelineResult run_pipeline(const Dataset& data, const RunConfig& cfg);
PipelineResult run_pipeline(const RunConfig& cfg);

struct SweepResult {
    std::string parameter;
    std::vector<double> values;
    std::vector<RepeatSummary> summaries;
};

/// Long-format CSV: <parameter>,metric,mean,std,n_runs,std_valid.
void save_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep);

SweepResult sweep_epsilon(const Dataset& data, const RunConfig& cfg, const std::vector<double>& values);
SweepResult sweep_alpha(const Dataset& data, const RunConfig& cfg, const std::vector<double>& values);

struct SpectralSummary {
    std::vector<SpectralReport> reports;
    std::vector<std::pair<std::pair<double, double>, std::optional<std::size_t>>> claim1;  // (a1,a2) -> l0
    bool claim2 = false;
};

/// Eigen-analysis of the filter for each alpha plus claim checks over the
/// alpha pairs and the standard grids. Writes eigen_gcn.csv, eigen_ppr.csv and
/// claims.txt under out_dir when set.
SpectralSummary run_spectral(const CsrGraph& g, const std::vector<double>& alphas, std::size_t hops,
                             const std::filesystem::path& out_dir, std::size_t dense_limit = kDefaultDenseEigenLimit);

/// Evenly spaced grid lo, lo+step, ..., hi (inclusive, rounded to 1e-9).
std::vector<double> grid(double lo, double hi, double step);

/// manifest.json under cfg.out_dir: resolved config, seeds, input hashes, the
/// hashes of the listed artifacts that exist, and `extra` merged at top level.
void write_manifest(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                    const std::vector<std::string>& artifacts, const nlohmann::ordered_json& extra = {});

/// FNV-1a of a file's bytes, hex encoded.
std::string file_hash(const std::filesystem::path& path);

}  // namespace rwsl
