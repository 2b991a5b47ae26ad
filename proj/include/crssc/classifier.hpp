// ============================================================================
// classifier.hpp - feed-forward softmax classifier with exact gradients
//
// A small MLP (rectifier hidden layers, softmax output) plus an SGD-with-
// momentum optimizer. Everything is a free function over explicit state so
// the trainer can evaluate samples independently and apply updates serially.
// Mini-batches are evaluated as one matrix (one sample per row).
// ============================================================================
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace crssc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Per-layer weight matrices (fan_out x fan_in) and bias vectors.
struct GradientSet {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};

// Classifier parameters plus the momentum buffer.
struct ModelState {
    std::vector<std::size_t> layer_dims;
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    GradientSet velocity;

    std::size_t num_layers() const noexcept { return weights.size(); }
    std::size_t input_dim() const noexcept { return layer_dims.front(); }
    std::size_t num_classes() const noexcept { return layer_dims.back(); }
};

struct Prediction {
    std::vector<double> probs;

    std::size_t num_classes() const noexcept { return probs.size(); }
    std::size_t argmax() const noexcept {
        return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    }
    double max_prob() const noexcept { return *std::max_element(probs.begin(), probs.end()); }
};

inline constexpr double kLogClamp = 1e-12;
inline constexpr double kDistributionTolerance = 1e-6;

// Exact (bitwise) equality of shapes and values.
template <typename T>
bool identical(const std::vector<T>& a, const std::vector<T>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols() || !(a[i].array() == b[i].array()).all())
            return false;
    return true;
}

inline bool identical(const GradientSet& a, const GradientSet& b) {
    return identical(a.weights, b.weights) && identical(a.biases, b.biases);
}

inline bool identical(const ModelState& a, const ModelState& b) {
    return a.layer_dims == b.layer_dims && identical(a.weights, b.weights) && identical(a.biases, b.biases) &&
           identical(a.velocity, b.velocity);
}

namespace detail {

inline void check_dims(std::span<const std::size_t> dims) {
    if (dims.size() < 2)
        throw std::invalid_argument("layer_dims: need at least an input and an output dimension");
    for (std::size_t d : dims)
        if (d == 0) throw std::invalid_argument("layer_dims: every dimension must be positive");
}

inline void check_input(const ModelState& model, std::size_t width) {
    if (width != model.input_dim())
        throw std::invalid_argument("features: expected " + std::to_string(model.input_dim()) +
                                    " values, got " + std::to_string(width));
}

// Row-wise softmax with max-subtraction.
inline void softmax_rows(Matrix& z) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        row.array() -= row.maxCoeff();
        row = row.array().exp().matrix();
        row /= row.sum();
    }
}

// acts[0] = input, acts[l+1] = output of layer l (post-rectifier for hidden
// layers, raw logits for the last one). One sample per row.
inline std::vector<Matrix> forward_trace(const ModelState& model, const Matrix& inputs) {
    std::vector<Matrix> acts;
    acts.reserve(model.num_layers() + 1);
    acts.push_back(inputs);
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        Matrix out = acts.back() * model.weights[l].transpose();
        out.rowwise() += model.biases[l].transpose();
        if (l + 1 < model.num_layers()) out = out.cwiseMax(0.0);
        acts.push_back(std::move(out));
    }
    return acts;
}

inline Matrix row_matrix(std::span<const double> x) {
    return Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

inline std::vector<double> to_vector(const auto& row) {
    std::vector<double> v(static_cast<std::size_t>(row.size()));
    for (Eigen::Index i = 0; i < row.size(); ++i) v[static_cast<std::size_t>(i)] = row(i);
    return v;
}

}  // namespace detail

inline GradientSet zero_gradients(std::span<const std::size_t> layer_dims) {
    GradientSet g;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const auto out = static_cast<Eigen::Index>(layer_dims[l + 1]);
        const auto in = static_cast<Eigen::Index>(layer_dims[l]);
        g.weights.push_back(Matrix::Zero(out, in));
        g.biases.push_back(Vector::Zero(out));
    }
    return g;
}

// Weights ~ N(0, 1/fan_in) filled row by row; biases and velocity zero.
inline ModelState init_model(std::span<const std::size_t> layer_dims, std::uint64_t seed) {
    detail::check_dims(layer_dims);
    ModelState m;
    m.layer_dims.assign(layer_dims.begin(), layer_dims.end());
    std::mt19937_64 rng(seed);
    m.velocity = zero_gradients(layer_dims);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(layer_dims[l])));
        Matrix w = m.velocity.weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
        m.weights.push_back(std::move(w));
        m.biases.push_back(m.velocity.biases[l]);
    }
    return m;
}

inline ModelState init_model(std::initializer_list<std::size_t> layer_dims, std::uint64_t seed) {
    return init_model(std::span<const std::size_t>(layer_dims.begin(), layer_dims.size()), seed);
}

// Class probabilities for every row of `inputs`.
inline Matrix forward_batch(const ModelState& model, const Matrix& inputs) {
    detail::check_input(model, static_cast<std::size_t>(inputs.cols()));
    Matrix probs = std::move(detail::forward_trace(model, inputs).back());
    detail::softmax_rows(probs);
    return probs;
}

inline Prediction forward(const ModelState& model, std::span<const double> features) {
    detail::check_input(model, features.size());
    const Matrix probs = forward_batch(model, detail::row_matrix(features));
    return Prediction{detail::to_vector(probs.row(0))};
}

inline Prediction softmax(std::span<const double> logits) {
    Matrix z = detail::row_matrix(logits);
    detail::softmax_rows(z);
    return Prediction{detail::to_vector(z.row(0))};
}

inline void check_distribution(std::span<const double> target, std::size_t k, const char* name = "target") {
    if (target.size() != k)
        throw std::invalid_argument(std::string(name) + ": expected " + std::to_string(k) + " entries, got " +
                                    std::to_string(target.size()));
    double sum = 0.0;
    for (double t : target) {
        if (!(t >= -kDistributionTolerance))
            throw std::invalid_argument(std::string(name) + ": negative or non-finite entry");
        sum += t;
    }
    if (std::abs(sum - 1.0) > kDistributionTolerance)
        throw std::invalid_argument(std::string(name) + ": entries must sum to 1");
}

// -sum_j target_j * log(max(probs_j, 1e-12))
inline double cross_entropy(const Prediction& pred, std::span<const double> target) {
    check_distribution(target, pred.num_classes());
    double loss = 0.0;
    for (std::size_t j = 0; j < target.size(); ++j)
        if (target[j] != 0.0) loss -= target[j] * std::log(std::max(pred.probs[j], kLogClamp));
    return loss;
}

// Gradient of sum_i scale * cross_entropy(forward(inputs_i), targets_i).
// With scale = 1/B this is the mean-loss gradient of the batch. The
// probabilities of the forward pass are written to `probs_out` if given.
inline GradientSet batch_gradient(const ModelState& model, const Matrix& inputs, const Matrix& targets,
                                  double scale, Matrix* probs_out = nullptr) {
    detail::check_input(model, static_cast<std::size_t>(inputs.cols()));
    if (targets.rows() != inputs.rows() || targets.cols() != static_cast<Eigen::Index>(model.num_classes()))
        throw std::invalid_argument("targets: expected one distribution over K classes per input row");
    for (Eigen::Index r = 0; r < targets.rows(); ++r) {
        const Eigen::RowVectorXd row = targets.row(r);
        check_distribution(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                           model.num_classes());
    }
    auto acts = detail::forward_trace(model, inputs);
    Matrix delta = acts.back();
    detail::softmax_rows(delta);
    if (probs_out) *probs_out = delta;
    delta = (delta - targets) * scale;

    GradientSet g;
    g.weights.resize(model.num_layers());
    g.biases.resize(model.num_layers());
    for (std::size_t l = model.num_layers(); l-- > 0;) {
        g.weights[l].noalias() = delta.transpose() * acts[l];
        g.biases[l] = delta.colwise().sum().transpose();
        if (l == 0) break;
        // Back through W, then the rectifier of layer l-1 (subgradient 0 at 0).
        Matrix prev = delta * model.weights[l];
        prev.array() *= (acts[l].array() > 0.0).cast<double>();
        delta = std::move(prev);
    }
    return g;
}

inline GradientSet backward(const ModelState& model, std::span<const double> features,
                            std::span<const double> target) {
    detail::check_input(model, features.size());
    check_distribution(target, model.num_classes());
    return batch_gradient(model, detail::row_matrix(features), detail::row_matrix(target), 1.0);
}

// velocity <- momentum * velocity + grad (+ weight_decay * W for weights only)
// theta    <- theta - lr * velocity
inline void sgd_step(ModelState& model, const GradientSet& grads, double lr, double momentum,
                     double weight_decay) {
    if (!(lr > 0.0)) throw std::invalid_argument("lr: must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum: must be in [0,1)");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay: must be non-negative");
    if (grads.weights.size() != model.num_layers() || grads.biases.size() != model.num_layers())
        throw std::invalid_argument("grads: layer count does not match model");
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        if (grads.weights[l].rows() != model.weights[l].rows() || grads.weights[l].cols() != model.weights[l].cols() ||
            grads.biases[l].size() != model.biases[l].size())
            throw std::invalid_argument("grads: shape does not match model");
        if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite())
            throw std::domain_error("grads: non-finite gradient entry");
    }
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        Matrix& vw = model.velocity.weights[l];
        vw = momentum * vw + (grads.weights[l] + weight_decay * model.weights[l]);
        model.weights[l] -= lr * vw;
        Vector& vb = model.velocity.biases[l];
        vb = momentum * vb + grads.biases[l];
        model.biases[l] -= lr * vb;
    }
}

}  // namespace crssc
