#pragma once
// Feed-forward binary classifier: ReLU hidden layers, clamped sigmoid output,
// mean binary cross-entropy loss with exact backpropagation.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace lifelong {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

// Output probabilities are clamped to [kProbClamp, 1 - kProbClamp]; the clamp is
// part of the network, so gradients vanish where it is active.
inline constexpr double kProbClamp = 1e-7;

/// One affine layer. `weights` is fan_in x fan_out so a batch (rows = samples)
/// maps as `batch * weights + bias^T`.
template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weights;
  Vector<Scalar> bias;

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
           a.bias.size() == b.bias.size() && a.weights == b.weights && a.bias == b.bias;
  }
};

/// Parameters, gradients and optimizer moments all share this shape.
template <typename Scalar>
using LayerStack = std::vector<DenseLayer<Scalar>>;

template <typename Scalar>
LayerStack<Scalar> zeros_like(const LayerStack<Scalar>& layers) {
  LayerStack<Scalar> out;
  out.reserve(layers.size());
  for (const auto& l : layers) {
    out.push_back({Matrix<Scalar>::Zero(l.weights.rows(), l.weights.cols()),
                   Vector<Scalar>::Zero(l.bias.size())});
  }
  return out;
}

template <typename Scalar>
bool same_shape(const LayerStack<Scalar>& a, const LayerStack<Scalar>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].weights.rows() != b[i].weights.rows() || a[i].weights.cols() != b[i].weights.cols() ||
        a[i].bias.size() != b[i].bias.size()) {
      return false;
    }
  }
  return true;
}

template <typename Scalar>
bool all_finite(const LayerStack<Scalar>& layers) {
  for (const auto& l : layers) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

inline void check_layer_sizes(const std::vector<Eigen::Index>& sizes) {
  if (sizes.size() < 2) {
    throw std::invalid_argument("layer sizes need an input and an output entry");
  }
  for (auto s : sizes) {
    if (s < 1) throw std::invalid_argument("layer sizes must be positive");
  }
  if (sizes.back() != 1) {
    throw std::invalid_argument("output layer width must be 1, got " + std::to_string(sizes.back()));
  }
}

template <typename Scalar = double>
class Mlp {
 public:
  Mlp() = default;

  Mlp(std::vector<Eigen::Index> layer_sizes, LayerStack<Scalar> layers, std::uint64_t version = 0)
      : layer_sizes_(std::move(layer_sizes)), layers_(std::move(layers)), version_(version) {
    check_layer_sizes(layer_sizes_);
    if (layers_.size() + 1 != layer_sizes_.size()) {
      throw std::invalid_argument("layer count does not match layer sizes");
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].weights.rows() != layer_sizes_[i] ||
          layers_[i].weights.cols() != layer_sizes_[i + 1] ||
          layers_[i].bias.size() != layer_sizes_[i + 1]) {
        throw std::invalid_argument("parameter shapes do not chain at layer " + std::to_string(i));
      }
    }
  }

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  /// Draws come from a mt19937_64 seeded with `seed`, layer by layer, row-major.
  static Mlp init(const std::vector<Eigen::Index>& layer_sizes, std::uint64_t seed) {
    check_layer_sizes(layer_sizes);
    std::mt19937_64 rng(seed);
    LayerStack<Scalar> layers;
    for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
      const auto fan_in = layer_sizes[i];
      const auto fan_out = layer_sizes[i + 1];
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      DenseLayer<Scalar> layer{Matrix<Scalar>(fan_in, fan_out), Vector<Scalar>::Zero(fan_out)};
      for (Eigen::Index r = 0; r < fan_in; ++r) {
        for (Eigen::Index c = 0; c < fan_out; ++c) layer.weights(r, c) = static_cast<Scalar>(dist(rng));
      }
      layers.push_back(std::move(layer));
    }
    return Mlp(layer_sizes, std::move(layers), 0);
  }

  static Mlp zeros(const std::vector<Eigen::Index>& layer_sizes) {
    check_layer_sizes(layer_sizes);
    LayerStack<Scalar> layers;
    for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
      layers.push_back({Matrix<Scalar>::Zero(layer_sizes[i], layer_sizes[i + 1]),
                        Vector<Scalar>::Zero(layer_sizes[i + 1])});
    }
    return Mlp(layer_sizes, std::move(layers), 0);
  }

  const std::vector<Eigen::Index>& layer_sizes() const { return layer_sizes_; }
  Eigen::Index input_dim() const { return layer_sizes_.empty() ? 0 : layer_sizes_.front(); }
  const LayerStack<Scalar>& layers() const { return layers_; }
  LayerStack<Scalar>& layers() { return layers_; }
  std::uint64_t version() const { return version_; }
  void set_version(std::uint64_t v) { version_ = v; }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    return a.version_ == b.version_ && a.layer_sizes_ == b.layer_sizes_ && a.layers_ == b.layers_;
  }

 private:
  std::vector<Eigen::Index> layer_sizes_;
  LayerStack<Scalar> layers_;
  std::uint64_t version_ = 0;
};

namespace detail {

template <typename Scalar>
void check_batch(const Mlp<Scalar>& model, Eigen::Index cols) {
  if (model.layers().empty()) throw std::invalid_argument("model has no layers");
  if (cols != model.input_dim()) {
    throw std::invalid_argument("batch has " + std::to_string(cols) + " columns, model expects " +
                                std::to_string(model.input_dim()));
  }
}

// Pre-activations of every layer plus the clamped output probabilities.
template <typename Scalar>
struct ForwardCache {
  std::vector<Matrix<Scalar>> activations;  // activations[0] is the input batch
  std::vector<Matrix<Scalar>> pre;          // pre[l] = activations[l] * W_l + b_l
  Vector<Scalar> prob;
  std::vector<bool> clamped;
};

template <typename Scalar>
ForwardCache<Scalar> forward_cached(const Mlp<Scalar>& model, const Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>& batch) {
  check_batch(model, batch.cols());
  ForwardCache<Scalar> cache;
  const auto& layers = model.layers();
  cache.activations.reserve(layers.size());
  cache.pre.reserve(layers.size());
  cache.activations.emplace_back(batch);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix<Scalar> z = cache.activations.back() * layers[l].weights;
    z.rowwise() += layers[l].bias.transpose();
    cache.pre.push_back(std::move(z));
    if (l + 1 < layers.size()) cache.activations.push_back(cache.pre.back().cwiseMax(Scalar(0)));
  }
  const auto& logits = cache.pre.back();
  const auto n = logits.rows();
  cache.prob.resize(n);
  cache.clamped.assign(static_cast<std::size_t>(n), false);
  const Scalar lo = static_cast<Scalar>(kProbClamp);
  const Scalar hi = Scalar(1) - lo;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar p = Scalar(1) / (Scalar(1) + std::exp(-logits(i, 0)));
    if (p < lo || p > hi) {
      cache.prob(i) = p < lo ? lo : hi;
      cache.clamped[static_cast<std::size_t>(i)] = true;
    } else {
      cache.prob(i) = p;
    }
  }
  return cache;
}

// Backpropagates d(objective)/d(output logits) through the network.
template <typename Scalar>
std::pair<LayerStack<Scalar>, Matrix<Scalar>> backward(const Mlp<Scalar>& model, const ForwardCache<Scalar>& cache,
                                                        Matrix<Scalar> delta, bool want_param_grads) {
  const auto& layers = model.layers();
  LayerStack<Scalar> grads(want_param_grads ? layers.size() : 0);
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (want_param_grads) {
      grads[l].weights = cache.activations[l].transpose() * delta;
      grads[l].bias = delta.colwise().sum().transpose();
    }
    Matrix<Scalar> upstream = delta * layers[l].weights.transpose();
    if (l > 0) {
      delta = (upstream.array() * (cache.pre[l - 1].array() > Scalar(0)).template cast<Scalar>()).matrix();
    } else {
      delta = std::move(upstream);
    }
  }
  return {std::move(grads), std::move(delta)};
}

}  // namespace detail

/// Output probabilities, one per batch row.
template <typename Scalar>
Vector<Scalar> forward(const Mlp<Scalar>& model, const Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>& batch) {
  return detail::forward_cached(model, batch).prob;
}

/// label = 1 iff output >= threshold.
template <typename Scalar>
std::vector<int> predict_labels(const Mlp<Scalar>& model, const Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>& batch,
                                double threshold = 0.5) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("threshold must lie in (0, 1)");
  }
  const auto prob = forward(model, batch);
  std::vector<int> labels(static_cast<std::size_t>(prob.size()));
  for (Eigen::Index i = 0; i < prob.size(); ++i) {
    labels[static_cast<std::size_t>(i)] = static_cast<double>(prob(i)) >= threshold ? 1 : 0;
  }
  return labels;
}

template <typename Scalar>
struct LossAndGrad {
  Scalar loss{};
  LayerStack<Scalar> grads;
  Matrix<Scalar> input_grad;  // d(mean output)/d(batch), empty unless requested
};

/// Mean BCE over the batch and its exact gradient. When `with_input_grad` is set,
/// also returns the gradient of the mean output probability w.r.t. every input entry.
template <typename Scalar>
LossAndGrad<Scalar> loss_and_grad(const Mlp<Scalar>& model, const Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>& batch,
                                  const Eigen::Ref<const Vector<std::type_identity_t<Scalar>>>& labels, bool with_input_grad = true) {
  const auto n = batch.rows();
  if (n == 0) throw std::invalid_argument("empty batch");
  if (labels.size() != n) throw std::invalid_argument("label count does not match batch rows");
  if (!batch.allFinite()) throw std::invalid_argument("batch contains NaN or Inf");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels(i) != Scalar(0) && labels(i) != Scalar(1)) throw std::invalid_argument("labels must be 0 or 1");
  }
  const auto cache = detail::forward_cached(model, batch);
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);

  LossAndGrad<Scalar> out;
  Matrix<Scalar> delta(n, 1);
  Matrix<Scalar> out_delta(n, 1);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar p = cache.prob(i);
    const Scalar y = labels(i);
    total -= y * std::log(p) + (Scalar(1) - y) * std::log(Scalar(1) - p);
    const bool clamped = cache.clamped[static_cast<std::size_t>(i)];
    delta(i, 0) = clamped ? Scalar(0) : (p - y) * inv_n;
    out_delta(i, 0) = clamped ? Scalar(0) : p * (Scalar(1) - p) * inv_n;
  }
  out.loss = total * inv_n;
  out.grads = detail::backward(model, cache, std::move(delta), true).first;
  if (with_input_grad) out.input_grad = detail::backward(model, cache, std::move(out_delta), false).second;
  return out;
}

/// Mean BCE only.
template <typename Scalar>
Scalar bce_loss(const Mlp<Scalar>& model, const Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>& batch,
                const Eigen::Ref<const Vector<std::type_identity_t<Scalar>>>& labels) {
  const auto prob = forward(model, batch);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < prob.size(); ++i) {
    total -= labels(i) * std::log(prob(i)) + (Scalar(1) - labels(i)) * std::log(Scalar(1) - prob(i));
  }
  return prob.size() == 0 ? Scalar(0) : total / static_cast<Scalar>(prob.size());
}

}  // namespace lifelong
