#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rwsl/clustering.hpp"
#include "rwsl/common.hpp"
#include "rwsl/graph.hpp"
#include "rwsl/nn.hpp"

namespace rwsl {

enum class AutoencoderInput { Filtered, Raw };

struct TrainConfig {
    double learning_rate = 1e-4;
    double pretrain_lr = 1e-4;
    std::size_t n_epochs = 100;
    std::size_t pretrain_n_epochs = 30;
    std::size_t batch_size = 256;
    double beta = 0.01;        // weight of KL(T || P_H)
    double gamma_loss = 0.1;   // weight of KL(T || P_Z)
    double epsilon_mix = 0.2;  // share of the encoder representation in co-train layers
    double v_dof = 1.0;
    std::size_t update_p = 1;  // target refresh period, in iterations
    double dropout_rate = 0.01;
    double weight_decay = 0.01;
    std::uint64_t seed = 0;
    AutoencoderInput ae_input = AutoencoderInput::Filtered;
    std::vector<std::size_t> architecture{512, 2048, 32};  // encoder widths after the input
    std::size_t kmeans_n_init = 20;

    void validate() const;
};

/// Parses "512-2048-32".
std::vector<std::size_t> parse_architecture(const std::string& spec);
std::string format_architecture(const std::vector<std::size_t>& dims);

struct AutoEncoder {
    MlpModel encoder;  // input -> ... -> bottleneck (linear)
    MlpModel decoder;  // mirror image, linear output
};

/// Symmetric autoencoder for `input_dim` features and the given encoder widths.
AutoEncoder make_autoencoder(std::size_t input_dim, const std::vector<std::size_t>& architecture, Rng& rng);

/// Inference-mode forward of `model` over all rows, `batch` rows at a time.
Matrix forward_batched(const MlpModel& model, const Matrix& x, std::size_t batch);

struct PretrainResult {
    AutoEncoder ae;
    double initial_loss = 0.0;         // full-data reconstruction loss before training
    std::vector<double> loss_history;  // mean batch loss per epoch
    AdamWState optimizer;
};

/// Mini-batch AdamW on the reconstruction loss. `rng` drives initialization,
/// shuffling and dropout.
PretrainResult pretrain_autoencoder(const Matrix& x_in, const TrainConfig& cfg, Rng& rng);
PretrainResult pretrain_autoencoder(const Matrix& x_in, const TrainConfig& cfg);

struct LossRecord {
    std::size_t iteration = 0;
    double mse = 0.0;
    double kl_h = 0.0;
    double kl_z = 0.0;
    double total = 0.0;
};

void save_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& history);

/// Named models, optimizer states and generator state of a training run.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;
    std::vector<std::pair<std::string, MlpModel>> models;
    std::vector<std::pair<std::string, AdamWState>> optimizers;
    Matrix centroids;
    std::string rng_state;

    const MlpModel& model(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainResult {
    LabelVector assignments;
    Matrix p_h;
    Matrix p_z;
    Matrix z_final;
    Matrix centroids;
    std::vector<LossRecord> loss_history;
    std::vector<double> pretrain_loss;
    double pretrain_initial_loss = 0.0;
    std::size_t dead_cluster_events = 0;
    LabelVector kmeans_init;  // K-means labels on the pretrained embedding
    Checkpoint checkpoint;
};

enum class TrainPhase { CoTrainBegin, CoTrainEnd };
using PhaseCallback = std::function<void(TrainPhase)>;

/// Self-supervised co-training of the autoencoder and the clustering network.
///
/// 1. pretrain the autoencoder on the filtered or raw features;
/// 2. K-means on the bottleneck initializes the centroids;
/// 3. every `update_p` iterations, the target T is refreshed from the encoder
///    and centroids as they stand at the start of the iteration (only the soft
///    frequencies are kept; batch rows of T are rebuilt on demand);
/// 4. per mini-batch, the co-train network sees the filtered features and
///    blends each hidden layer with the matching encoder layer, taken from that
///    same start-of-iteration encoder (equivalent to slicing a cached
///    full-data pass, without holding it in memory);
/// 5. loss = MSE + beta KL(T||P_H) + gamma KL(T||P_Z), one AdamW step for the
///    autoencoder and centroids and one for the co-train network;
/// 6. final labels are argmax P_H.
TrainResult train_rwsl(const CsrGraph& g, const Matrix& x_filtered, const Matrix& x_raw, std::size_t n_clusters,
                       const TrainConfig& cfg, const PhaseCallback& on_phase = {});

}  // namespace rwsl
