#include "rwsl/nn.hpp"

#include <algorithm>
#include <cmath>

namespace rwsl {

MlpModel MlpModel::glorot(const std::vector<std::size_t>& dims, OutputActivation output, Rng& rng) {
    if (dims.size() < 2) throw ContractViolation("an MLP needs at least input and output dims");
    MlpModel m;
    m.layer_dims = dims;
    m.output = output;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const auto in = static_cast<Eigen::Index>(dims[l]);
        const auto out = static_cast<Eigen::Index>(dims[l + 1]);
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Matrix w(in, out);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
        m.weights.push_back(std::move(w));
        m.biases.push_back(Matrix::Zero(1, out));
    }
    return m;
}

void MlpModel::validate() const {
    require(layer_dims.size() >= 2, "MLP needs at least two layer dims");
    require(weights.size() + 1 == layer_dims.size() && biases.size() == weights.size(),
            "layer count does not match layer_dims");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        require(static_cast<std::size_t>(weights[l].rows()) == layer_dims[l] &&
                    static_cast<std::size_t>(weights[l].cols()) == layer_dims[l + 1],
                "weight " + std::to_string(l) + " shape does not match layer_dims");
        require(biases[l].rows() == 1 && static_cast<std::size_t>(biases[l].cols()) == layer_dims[l + 1],
                "bias " + std::to_string(l) + " shape does not match layer_dims");
    }
}

bool MlpModel::parameters_finite() const {
    for (const auto* p : parameters()) {
        if (!p->allFinite()) return false;
    }
    return true;
}

std::vector<Matrix*> MlpModel::parameters() {
    std::vector<Matrix*> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.push_back(&weights[l]);
        out.push_back(&biases[l]);
    }
    return out;
}

std::vector<const Matrix*> MlpModel::parameters() const {
    std::vector<const Matrix*> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.push_back(&weights[l]);
        out.push_back(&biases[l]);
    }
    return out;
}

std::vector<const Matrix*> MlpGradients::flat() const {
    std::vector<const Matrix*> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.push_back(&weights[l]);
        out.push_back(&biases[l]);
    }
    return out;
}

Matrix row_softmax(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double mx = logits.row(i).maxCoeff();
        p.row(i) = (logits.row(i).array() - mx).exp().matrix();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

ForwardState mlp_forward(const MlpModel& m, const Matrix& x, double dropout, bool training, Rng& rng,
                         const Mixing* mixing) {
    if (static_cast<std::size_t>(x.cols()) != m.input_dim()) {
        throw ContractViolation("input has " + std::to_string(x.cols()) + " columns, model expects " +
                                std::to_string(m.input_dim()));
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ContractViolation("dropout must be in [0,1)");
    const std::size_t n_hidden = m.n_layers() - 1;
    if (mixing) {
        require(mixing->sources.size() >= n_hidden, "mixing needs one source per hidden layer");
        require(mixing->epsilon >= 0.0 && mixing->epsilon <= 1.0, "mixing epsilon must be in [0,1]");
    }

    ForwardState s;
    s.input = x;
    s.model_version = m.version;
    s.mixed = mixing != nullptr;
    s.mix_epsilon = mixing ? mixing->epsilon : 0.0;
    const bool drop = training && dropout > 0.0;
    std::bernoulli_distribution keep(1.0 - dropout);
    const double scale = drop ? 1.0 / (1.0 - dropout) : 1.0;

    const Matrix* h = &s.input;
    for (std::size_t l = 0; l < m.n_layers(); ++l) {
        Matrix pre = (*h) * m.weights[l];
        pre.rowwise() += m.biases[l].row(0);
        s.pre.push_back(std::move(pre));
        const Matrix& z = s.pre.back();
        if (l + 1 == m.n_layers()) {
            s.output = m.output == OutputActivation::Softmax ? row_softmax(z) : z;
            break;
        }
        Matrix a = z.cwiseMax(0.0);
        if (drop) {
            Matrix mask(a.rows(), a.cols());
            for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : 0.0;
            a.array() *= mask.array();
            s.masks.push_back(std::move(mask));
        }
        if (mixing) {
            const Matrix& src = mixing->sources[l];
            require(src.rows() == a.rows() && src.cols() == a.cols(),
                    "mixing source " + std::to_string(l) + " shape mismatch");
            a = (1.0 - mixing->epsilon) * a + mixing->epsilon * src;
        }
        s.hidden.push_back(std::move(a));
        h = &s.hidden.back();
    }
    return s;
}

MlpGradients mlp_backward(const MlpModel& m, const ForwardState& s, const Matrix& output_grad) {
    if (s.model_version != m.version || s.pre.size() != m.n_layers()) {
        throw ContractViolation("forward state is stale: model changed since the forward pass");
    }
    if (output_grad.rows() != s.output.rows() || output_grad.cols() != s.output.cols()) {
        throw ContractViolation("output gradient shape mismatch");
    }

    Matrix g;
    if (m.output == OutputActivation::Softmax) {
        // Softmax Jacobian-vector product: p * (g - <g, p>).
        const Eigen::VectorXd dot = (output_grad.array() * s.output.array()).rowwise().sum();
        g = s.output.array() * (output_grad.array().colwise() - dot.array());
    } else {
        g = output_grad;
    }

    MlpGradients grads;
    grads.weights.resize(m.n_layers());
    grads.biases.resize(m.n_layers());
    for (std::size_t li = m.n_layers(); li-- > 0;) {
        const Matrix& in = li == 0 ? s.input : s.hidden[li - 1];
        grads.weights[li].noalias() = in.transpose() * g;
        grads.biases[li] = g.colwise().sum();
        Matrix dh = g * m.weights[li].transpose();
        if (li == 0) {
            grads.input = std::move(dh);
            break;
        }
        const std::size_t h = li - 1;
        if (s.mixed) dh *= 1.0 - s.mix_epsilon;
        if (!s.masks.empty()) dh.array() *= s.masks[h].array();
        dh.array() *= (s.pre[h].array() > 0.0).cast<double>();
        g = std::move(dh);
    }
    return grads;
}

void adamw_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads, AdamWState& state,
                const AdamWOptions& opt) {
    require(params.size() == grads.size(), "adamw_step: params and grads differ in count");
    if (state.first_moment.empty()) {
        for (const Matrix* p : params) {
            state.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
            state.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
        }
    }
    require(state.first_moment.size() == params.size(), "adamw_step: optimizer state does not match params");

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(opt.beta1, t);
    const double bc2 = 1.0 - std::pow(opt.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& p = *params[i];
        const Matrix& g = *grads[i];
        require(p.rows() == g.rows() && p.cols() == g.cols(), "adamw_step: gradient shape mismatch");
        Matrix& m1 = state.first_moment[i];
        Matrix& m2 = state.second_moment[i];
        p *= 1.0 - opt.lr * opt.weight_decay;
        m1 = opt.beta1 * m1 + (1.0 - opt.beta1) * g;
        m2 = opt.beta2 * m2 + (1.0 - opt.beta2) * g.cwiseAbs2();
        p.array() -= opt.lr * (m1.array() / bc1) / ((m2.array() / bc2).sqrt() + opt.eps);
    }
}

LossAndGrad mse_loss(const Matrix& target, const Matrix& reconstruction) {
    if (target.rows() != reconstruction.rows() || target.cols() != reconstruction.cols()) {
        throw ContractViolation("mse_loss: shape mismatch");
    }
    const double n = static_cast<double>(target.rows());
    LossAndGrad out;
    Matrix diff = reconstruction - target;
    out.loss = diff.squaredNorm() / (2.0 * n);
    out.grad = diff / n;
    return out;
}

bool is_row_stochastic(const Matrix& p, double tol) {
    if ((p.array() < 0.0).any() || !p.allFinite()) return false;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        if (std::abs(p.row(i).sum() - 1.0) > tol) return false;
    }
    return true;
}

LossAndGrad kl_divergence(const Matrix& t, const Matrix& p) {
    if (t.rows() != p.rows() || t.cols() != p.cols()) throw ContractViolation("kl_divergence: shape mismatch");
    if (!is_row_stochastic(t) || !is_row_stochastic(p)) {
        throw ContractViolation("kl_divergence: rows must be probability distributions");
    }
    const double n = static_cast<double>(t.rows());
    LossAndGrad out;
    out.grad = Matrix::Zero(p.rows(), p.cols());
    double total = 0.0;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.cols(); ++j) {
            const double tij = t(i, j);
            const double pij = std::max(p(i, j), kProbabilityFloor);
            if (tij > 0.0) total += tij * std::log(tij / pij);
            if (p(i, j) >= kProbabilityFloor) out.grad(i, j) = -tij / (pij * n);
        }
    }
    // Rounding can push a zero divergence a few ulps below zero.
    out.loss = std::max(total / n, 0.0);
    return out;
}

LossAndGrad softmax_kl(const Matrix& t, const Matrix& logits) {
    if (t.rows() != logits.rows() || t.cols() != logits.cols()) throw ContractViolation("softmax_kl: shape mismatch");
    Matrix p = row_softmax(logits);
    LossAndGrad out = kl_divergence(t, p);
    out.grad = (p - t) / static_cast<double>(t.rows());
    return out;
}

}  // namespace rwsl
