#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rwsl/gpr_filter.hpp"
#include "rwsl/trainer.hpp"

namespace rwsl {

constexpr std::size_t kDeskScaleNodeLimit = 100000;

struct BenchConfig {
    std::vector<std::size_t> sizes;
    double edge_factor = 20.0;
    std::size_t feat_dim = 100;
    std::size_t epochs = 5;
    std::size_t repetitions = 3;
    std::size_t n_clusters = 7;
    std::uint64_t seed = 0;
    bool allow_large = false;  // sizes above kDeskScaleNodeLimit
    FilterConfig filter;
    TrainConfig train;

    BenchConfig();
};

struct BenchRow {
    std::size_t n_nodes = 0;
    std::size_t n_edges = 0;
    double filter_s = 0.0;  // medians over repetitions
    double train_s = 0.0;
    double total_s = 0.0;
    double train_peak_mb = 0.0;        // peak RSS growth over the co-training loop
    double train_stage_peak_mb = 0.0;  // same over the whole call, including init and final inference
    bool ok = true;
    std::string error;
};

/// Per size: R-MAT graph and uniform features (untimed), then the filter and a
/// short co-training run, each timed separately. A failing size yields a
/// row with ok = false and the remaining sizes still run.
std::vector<BenchRow> bench_scalability(const BenchConfig& cfg);

void save_bench_csv(const std::filesystem::path& path, const std::vector<BenchRow>& rows);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

/// Resident set size and its high-water mark, in MiB (Linux /proc).
double current_rss_mb();
double peak_rss_mb();
/// Returns false when the kernel refuses the reset.
bool reset_peak_rss();

}  // namespace rwsl
