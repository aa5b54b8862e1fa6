#include "rwsl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rwsl {

void TrainConfig::validate() const {
    auto check = [](bool ok, const char* what) {
        if (!ok) throw ContractViolation(std::string("invalid train config: ") + what);
    };
    check(learning_rate > 0.0, "learning_rate must be positive");
    check(pretrain_lr > 0.0, "pretrain_lr must be positive");
    check(batch_size >= 1, "batch_size must be >= 1");
    check(beta >= 0.0, "beta must be >= 0");
    check(gamma_loss >= 0.0, "gamma must be >= 0");
    check(epsilon_mix >= 0.0 && epsilon_mix <= 1.0, "epsilon must be in [0,1]");
    check(v_dof > 0.0, "v must be positive");
    check(update_p >= 1, "update_p must be >= 1");
    check(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate must be in [0,1)");
    check(weight_decay >= 0.0, "weight_decay must be >= 0");
    check(!architecture.empty(), "architecture must list at least one layer");
    for (auto w : architecture) check(w >= 1, "architecture widths must be >= 1");
}

std::vector<std::size_t> parse_architecture(const std::string& spec) {
    std::vector<std::size_t> dims;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, '-')) {
        std::size_t pos = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(part, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != part.size() || v == 0) throw ContractViolation("bad architecture '" + spec + "'");
        dims.push_back(v);
    }
    if (dims.empty()) throw ContractViolation("empty architecture");
    return dims;
}

std::string format_architecture(const std::vector<std::size_t>& dims) {
    std::string s;
    for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "-" : "") + std::to_string(dims[i]);
    return s;
}

AutoEncoder make_autoencoder(std::size_t input_dim, const std::vector<std::size_t>& architecture, Rng& rng) {
    std::vector<std::size_t> enc{input_dim};
    enc.insert(enc.end(), architecture.begin(), architecture.end());
    std::vector<std::size_t> dec(enc.rbegin(), enc.rend());
    AutoEncoder ae;
    ae.encoder = MlpModel::glorot(enc, OutputActivation::Linear, rng);
    ae.decoder = MlpModel::glorot(dec, OutputActivation::Linear, rng);
    return ae;
}

namespace {

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
    return out;
}

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

template <typename Fn>
void for_each_batch(std::span<const std::size_t> order, std::size_t batch, Fn&& fn) {
    for (std::size_t start = 0; start < order.size(); start += batch) {
        fn(order.subspan(start, std::min(batch, order.size() - start)));
    }
}

// Every layer output of the encoder: hidden activations then the bottleneck.
std::vector<Matrix> encoder_layers(const MlpModel& encoder, const Matrix& x, Rng& rng) {
    auto st = mlp_forward(encoder, x, 0.0, false, rng);
    std::vector<Matrix> out = std::move(st.hidden);
    out.push_back(std::move(st.output));
    return out;
}

std::vector<Matrix*> concat(std::vector<Matrix*> a, const std::vector<Matrix*>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<const Matrix*> concat(std::vector<const Matrix*> a, const std::vector<const Matrix*>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

void check_finite(double loss, const char* stage) {
    if (!std::isfinite(loss)) {
        throw DivergenceError(std::string(stage) + ": loss became non-finite (learning rate too high?)");
    }
}

}  // namespace

Matrix forward_batched(const MlpModel& model, const Matrix& x, std::size_t batch) {
    Rng unused(0);
    Matrix out(x.rows(), static_cast<Eigen::Index>(model.output_dim()));
    for (Eigen::Index start = 0; start < x.rows(); start += static_cast<Eigen::Index>(batch)) {
        const auto len = std::min<Eigen::Index>(static_cast<Eigen::Index>(batch), x.rows() - start);
        out.middleRows(start, len) = mlp_forward(model, x.middleRows(start, len), 0.0, false, unused).output;
    }
    return out;
}

PretrainResult pretrain_autoencoder(const Matrix& x_in, const TrainConfig& cfg, Rng& rng) {
    cfg.validate();
    if (x_in.rows() == 0) throw ContractViolation("pretrain_autoencoder: no rows");
    PretrainResult res;
    res.ae = make_autoencoder(static_cast<std::size_t>(x_in.cols()), cfg.architecture, rng);
    AutoEncoder& ae = res.ae;

    const std::size_t eval_batch = std::max<std::size_t>(cfg.batch_size, 1024);
    res.initial_loss =
        mse_loss(x_in, forward_batched(ae.decoder, forward_batched(ae.encoder, x_in, eval_batch), eval_batch)).loss;

    const AdamWOptions opt{cfg.pretrain_lr, cfg.weight_decay};
    for (std::size_t epoch = 0; epoch < cfg.pretrain_n_epochs; ++epoch) {
        const auto order = shuffled(static_cast<std::size_t>(x_in.rows()), rng);
        double sum = 0.0;
        std::size_t batches = 0;
        for_each_batch(order, cfg.batch_size, [&](std::span<const std::size_t> idx) {
            const Matrix xb = gather_rows(x_in, idx);
            auto enc = mlp_forward(ae.encoder, xb, cfg.dropout_rate, true, rng);
            auto dec = mlp_forward(ae.decoder, enc.output, cfg.dropout_rate, true, rng);
            auto mse = mse_loss(xb, dec.output);
            check_finite(mse.loss, "pretrain");
            auto dg = mlp_backward(ae.decoder, dec, mse.grad);
            auto eg = mlp_backward(ae.encoder, enc, dg.input);
            auto params = concat(ae.encoder.parameters(), ae.decoder.parameters());
            auto grads = concat(eg.flat(), dg.flat());
            adamw_step(params, grads, res.optimizer, opt);
            ++ae.encoder.version;
            ++ae.decoder.version;
            sum += mse.loss;
            ++batches;
        });
        res.loss_history.push_back(sum / static_cast<double>(batches));
    }
    if (!ae.encoder.parameters_finite() || !ae.decoder.parameters_finite()) {
        throw DivergenceError("pretrain: parameters became non-finite");
    }
    return res;
}

PretrainResult pretrain_autoencoder(const Matrix& x_in, const TrainConfig& cfg) {
    Rng rng(cfg.seed);
    return pretrain_autoencoder(x_in, cfg, rng);
}

void save_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& history) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out.precision(17);
    out << "iteration,l_mse,l_h,l_z,l_tot\n";
    for (const auto& r : history) {
        out << r.iteration << ',' << r.mse << ',' << r.kl_h << ',' << r.kl_z << ',' << r.total << '\n';
    }
}

TrainResult train_rwsl(const CsrGraph& g, const Matrix& x_filtered, const Matrix& x_raw, std::size_t n_clusters,
                       const TrainConfig& cfg, const PhaseCallback& on_phase) {
    cfg.validate();
    if (n_clusters < 2) throw ContractViolation("train_rwsl needs at least 2 clusters");
    if (static_cast<std::size_t>(x_filtered.rows()) != g.n_nodes) {
        throw ContractViolation("filtered features are not row-aligned with the graph");
    }
    const bool use_raw = cfg.ae_input == AutoencoderInput::Raw;
    if (use_raw && (x_raw.rows() != x_filtered.rows() || x_raw.cols() != x_filtered.cols())) {
        throw ContractViolation("raw features must match the filtered features' shape");
    }
    const Matrix& x_ae = use_raw ? x_raw : x_filtered;
    const auto n = static_cast<std::size_t>(x_filtered.rows());
    const std::size_t eval_batch = std::max<std::size_t>(cfg.batch_size, 1024);

    Rng rng(cfg.seed);
    TrainResult res;

    auto pre = pretrain_autoencoder(x_ae, cfg, rng);
    res.pretrain_loss = pre.loss_history;
    res.pretrain_initial_loss = pre.initial_loss;
    AutoEncoder ae = std::move(pre.ae);

    const Matrix z0 = forward_batched(ae.encoder, x_ae, eval_batch);
    KMeansOptions km_opt;
    km_opt.n_init = cfg.kmeans_n_init;
    auto km = kmeans(z0, n_clusters, rng(), km_opt);
    Matrix centroids = std::move(km.centroids);
    res.kmeans_init = std::move(km.assignment);

    std::vector<std::size_t> dnn_dims{static_cast<std::size_t>(x_filtered.cols())};
    dnn_dims.insert(dnn_dims.end(), cfg.architecture.begin(), cfg.architecture.end());
    dnn_dims.push_back(n_clusters);
    MlpModel dnn = MlpModel::glorot(dnn_dims, OutputActivation::Linear, rng);

    // Fresh optimizers for the co-training phase.
    AdamWState ae_opt_state, dnn_opt_state;
    const AdamWOptions opt{cfg.learning_rate, cfg.weight_decay};

    if (on_phase) on_phase(TrainPhase::CoTrainBegin);
    // The target is never materialized for all rows: the update stores the
    // encoder, the centroids and the soft frequencies f, and each batch
    // rebuilds its own target rows from them.
    MlpModel target_encoder;
    Matrix target_centroids;
    Eigen::RowVectorXd target_freq;
    std::vector<std::size_t> order(n);
    for (std::size_t iter = 0; iter < cfg.n_epochs; ++iter) {
        const MlpModel snapshot = ae.encoder;
        const bool refresh = iter % cfg.update_p == 0;
        if (refresh) {
            target_encoder = snapshot;
            target_centroids = centroids;
            target_freq = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(n_clusters));
            for (Eigen::Index start = 0; start < static_cast<Eigen::Index>(n); start += static_cast<Eigen::Index>(eval_batch)) {
                const auto len = std::min<Eigen::Index>(static_cast<Eigen::Index>(eval_batch), static_cast<Eigen::Index>(n) - start);
                const Matrix zb = mlp_forward(target_encoder, x_ae.middleRows(start, len), 0.0, false, rng).output;
                target_freq += soft_assign(zb, target_centroids, cfg.v_dof).colwise().sum();
            }
            res.dead_cluster_events += static_cast<std::size_t>((target_freq.array() <= 0.0).count());
        }

        LossRecord rec;
        rec.iteration = iter;
        std::size_t batches = 0;
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for_each_batch(order, cfg.batch_size, [&](std::span<const std::size_t> idx) {
            const Matrix xb_ae = gather_rows(x_ae, idx);
            const Matrix xb_f = use_raw ? gather_rows(x_filtered, idx) : xb_ae;

            const auto z_layers = encoder_layers(snapshot, xb_ae, rng);
            const Matrix zt = refresh
                                  ? z_layers.back()
                                  : mlp_forward(target_encoder, xb_ae, 0.0, false, rng).output;
            const Matrix tb = target_from_frequencies(soft_assign(zt, target_centroids, cfg.v_dof), target_freq).t;
            const Mixing mixing{z_layers, cfg.epsilon_mix};

            auto enc = mlp_forward(ae.encoder, xb_ae, cfg.dropout_rate, true, rng);
            auto dec = mlp_forward(ae.decoder, enc.output, cfg.dropout_rate, true, rng);
            auto mse = mse_loss(xb_ae, dec.output);
            auto kl_z = student_t_kl(enc.output, centroids, cfg.v_dof, tb);
            auto co = mlp_forward(dnn, xb_f, cfg.dropout_rate, true, rng, &mixing);
            auto kl_h = softmax_kl(tb, co.output);

            const double total = mse.loss + cfg.beta * kl_h.loss + cfg.gamma_loss * kl_z.loss;
            check_finite(total, "train");

            auto dg = mlp_backward(ae.decoder, dec, mse.grad);
            auto eg = mlp_backward(ae.encoder, enc, dg.input + cfg.gamma_loss * kl_z.grad_z);
            const Matrix centroid_grad = cfg.gamma_loss * kl_z.grad_centroids;
            auto cg = mlp_backward(dnn, co, cfg.beta * kl_h.grad);

            auto ae_params = concat(ae.encoder.parameters(), ae.decoder.parameters());
            ae_params.push_back(&centroids);
            auto ae_grads = concat(eg.flat(), dg.flat());
            ae_grads.push_back(&centroid_grad);
            adamw_step(ae_params, ae_grads, ae_opt_state, opt);
            auto dnn_params = dnn.parameters();
            auto dnn_grads = cg.flat();
            adamw_step(dnn_params, dnn_grads, dnn_opt_state, opt);
            ++ae.encoder.version;
            ++ae.decoder.version;
            ++dnn.version;

            rec.mse += mse.loss;
            rec.kl_h += kl_h.loss;
            rec.kl_z += kl_z.loss;
            rec.total += total;
            ++batches;
        });
        const double nb = static_cast<double>(batches);
        rec.mse /= nb;
        rec.kl_h /= nb;
        rec.kl_z /= nb;
        rec.total /= nb;
        res.loss_history.push_back(rec);
    }
    if (on_phase) on_phase(TrainPhase::CoTrainEnd);
    if (!ae.encoder.parameters_finite() || !ae.decoder.parameters_finite() || !dnn.parameters_finite() ||
        !centroids.allFinite()) {
        throw DivergenceError("train: parameters became non-finite");
    }

    // Final distributions, inference mode, batch by batch.
    res.z_final = forward_batched(ae.encoder, x_ae, eval_batch);
    res.p_z = soft_assign(res.z_final, centroids, cfg.v_dof);
    res.p_h.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_clusters));
    for (Eigen::Index start = 0; start < static_cast<Eigen::Index>(n); start += static_cast<Eigen::Index>(eval_batch)) {
        const auto len = std::min<Eigen::Index>(static_cast<Eigen::Index>(eval_batch), static_cast<Eigen::Index>(n) - start);
        const auto z_layers = encoder_layers(ae.encoder, x_ae.middleRows(start, len), rng);
        const Mixing mixing{z_layers, cfg.epsilon_mix};
        res.p_h.middleRows(start, len) =
            row_softmax(mlp_forward(dnn, x_filtered.middleRows(start, len), 0.0, false, rng, &mixing).output);
    }
    res.assignments = hard_assign(res.p_h);
    res.centroids = centroids;

    std::ostringstream rng_state;
    rng_state << rng;
    res.checkpoint.models = {{"encoder", std::move(ae.encoder)}, {"decoder", std::move(ae.decoder)}, {"dnn", std::move(dnn)}};
    res.checkpoint.optimizers = {{"autoencoder", std::move(ae_opt_state)}, {"dnn", std::move(dnn_opt_state)}};
    res.checkpoint.centroids = std::move(centroids);
    res.checkpoint.rng_state = rng_state.str();
    return res;
}

}  // namespace rwsl
