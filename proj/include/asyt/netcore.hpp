#pragma once

// Fixed-graph MLP engine: forward propagation, loss, and backpropagation.
// Batches are stored one sample per row.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "asyt/errors.hpp"

namespace asyt {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class ActivationKind { identity, relu, sigmoid_like, tanh_saturating, softmax };
enum class LossKind { cross_entropy, squared_error };

std::string_view to_string(ActivationKind kind);
ActivationKind parse_activation(std::string_view name);

struct NetworkSpec {
  std::vector<int> layer_sizes;
  ActivationKind hidden_activation = ActivationKind::relu;
  ActivationKind output_activation = ActivationKind::softmax;
  bool clip_to_fan_in = true;

  /// Number of weight layers (one less than the number of neuron layers).
  int depth() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int fan_in(int layer) const { return layer_sizes[layer]; }
  int fan_out(int layer) const { return layer_sizes[layer + 1]; }
  int inputs() const { return layer_sizes.front(); }
  int outputs() const { return layer_sizes.back(); }
  ActivationKind activation(int layer) const {
    return layer + 1 == depth() ? output_activation : hidden_activation;
  }
  /// Non-input neurons (M) and hidden layers (N).
  int neurons() const;
  int hidden_layers() const { return depth() - 1; }

  void validate() const;
  /// Stable textual form, e.g. "784-256-256-10/relu/softmax/clip".
  std::string describe() const;
};

inline int NetworkSpec::neurons() const {
  int m = 0;
  for (std::size_t i = 1; i < layer_sizes.size(); ++i) m += layer_sizes[i];
  return m;
}

inline void NetworkSpec::validate() const {
  if (layer_sizes.size() < 2) throw DimensionError("network needs at least 2 layers");
  for (int n : layer_sizes)
    if (n < 1) throw DimensionError("layer sizes must be positive");
  if (hidden_activation == ActivationKind::softmax)
    throw DimensionError("softmax is only allowed at the output layer");
}

template <typename Scalar>
struct LayerParams {
  Matrix<Scalar> weight;  // out x in
  Vector<Scalar> bias;    // out
};

/// Parameters (or gradients, which share the shape) for every weight layer.
template <typename Scalar>
struct ParamSet {
  std::vector<LayerParams<Scalar>> layers;

  static ParamSet zeros(const NetworkSpec& spec) {
    ParamSet p;
    p.layers.resize(spec.depth());
    for (int l = 0; l < spec.depth(); ++l) {
      p.layers[l].weight = Matrix<Scalar>::Zero(spec.fan_out(l), spec.fan_in(l));
      p.layers[l].bias = Vector<Scalar>::Zero(spec.fan_out(l));
    }
    return p;
  }

  std::size_t size() const { return layers.size(); }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
    return n;
  }
  bool same_shape(const ParamSet& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].weight.rows() != other.layers[l].weight.rows() ||
          layers[l].weight.cols() != other.layers[l].weight.cols() ||
          layers[l].bias.size() != other.layers[l].bias.size())
        return false;
    }
    return true;
  }
  bool all_finite() const {
    for (const auto& layer : layers)
      if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
    return true;
  }
  /// Weights and biases of all layers concatenated, layer by layer.
  Vector<Scalar> flatten() const {
    Vector<Scalar> out(static_cast<Eigen::Index>(scalar_count()));
    Eigen::Index at = 0;
    for (const auto& layer : layers) {
      out.segment(at, layer.weight.size()) = layer.weight.reshaped();
      at += layer.weight.size();
      out.segment(at, layer.bias.size()) = layer.bias;
      at += layer.bias.size();
    }
    return out;
  }
  template <typename Other>
  ParamSet<Other> cast() const {
    ParamSet<Other> out;
    out.layers.resize(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
      out.layers[l].weight = layers[l].weight.template cast<Other>();
      out.layers[l].bias = layers[l].bias.template cast<Other>();
    }
    return out;
  }
  bool operator==(const ParamSet& other) const {
    if (!same_shape(other)) return false;
    for (std::size_t l = 0; l < layers.size(); ++l)
      if (layers[l].weight != other.layers[l].weight || layers[l].bias != other.layers[l].bias)
        return false;
    return true;
  }
};

template <typename Scalar>
using GradSet = ParamSet<Scalar>;

template <typename Scalar>
void check_matching(const ParamSet<Scalar>& a, const ParamSet<Scalar>& b) {
  if (!a.same_shape(b)) throw DimensionError("parameter collections differ in shape");
}

/// Per-layer record of a forward pass. activations[0] is the input batch;
/// pre_activations[l] is the unclipped net output of weight layer l.
template <typename Scalar>
struct ForwardRecord {
  std::vector<Matrix<Scalar>> activations;
  std::vector<Matrix<Scalar>> pre_activations;

  const Matrix<Scalar>& prediction() const { return activations.back(); }
};

// ---------------------------------------------------------------------------
// Element-wise pieces

/// Clamps every entry into [0, fan_in].
template <typename Derived>
auto clip_net_output(const Eigen::MatrixBase<Derived>& z, int fan_in) {
  using Scalar = typename Derived::Scalar;
  return z.cwiseMax(Scalar(0)).cwiseMin(Scalar(fan_in)).eval();
}

namespace detail {

// Rescaled logistic mapping [0, A] onto [0, 1].
template <typename Scalar>
struct SigmoidLike {
  Scalar slope, center, lo, span;
  explicit SigmoidLike(int fan_in)
      : slope(Scalar(8) / Scalar(fan_in)), center(Scalar(fan_in) / Scalar(2)) {
    lo = logistic(-slope * center);
    span = logistic(slope * center) - lo;
  }
  static Scalar logistic(Scalar x) { return Scalar(1) / (Scalar(1) + std::exp(-x)); }
  Scalar value(Scalar z) const { return (logistic(slope * (z - center)) - lo) / span; }
  Scalar derivative(Scalar z) const {
    Scalar s = logistic(slope * (z - center));
    return slope * s * (Scalar(1) - s) / span;
  }
};

}  // namespace detail

template <typename Scalar>
Matrix<Scalar> softmax_rows(const Matrix<Scalar>& z) {
  Matrix<Scalar> out = z.colwise() - z.rowwise().maxCoeff();
  out = out.array().exp();
  Vector<Scalar> sums = out.rowwise().sum();
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) /= sums(r);
  return out;
}

template <typename Scalar>
Matrix<Scalar> apply_activation(ActivationKind kind, const Matrix<Scalar>& z, int fan_in) {
  switch (kind) {
    case ActivationKind::identity:
      return z;
    case ActivationKind::relu:
      return z.cwiseMax(Scalar(0));
    case ActivationKind::sigmoid_like: {
      detail::SigmoidLike<Scalar> s(fan_in);
      return z.unaryExpr([&](Scalar v) { return s.value(v); });
    }
    case ActivationKind::tanh_saturating: {
      const Scalar a = Scalar(fan_in);
      return z.unaryExpr([a](Scalar v) { return a * std::tanh(v / a); });
    }
    case ActivationKind::softmax:
      return softmax_rows(z);
  }
  throw DimensionError("unknown activation");
}

/// Element-wise derivative g'(z). Softmax is only ever paired with
/// cross-entropy, where the output error is already dL/dz, so it is 1 here.
template <typename Scalar>
Matrix<Scalar> activation_derivative(ActivationKind kind, const Matrix<Scalar>& z, int fan_in) {
  switch (kind) {
    case ActivationKind::identity:
    case ActivationKind::softmax:
      return Matrix<Scalar>::Ones(z.rows(), z.cols());
    case ActivationKind::relu:
      return (z.array() > Scalar(0)).template cast<Scalar>();
    case ActivationKind::sigmoid_like: {
      detail::SigmoidLike<Scalar> s(fan_in);
      return z.unaryExpr([&](Scalar v) { return s.derivative(v); });
    }
    case ActivationKind::tanh_saturating: {
      const Scalar a = Scalar(fan_in);
      return z.unaryExpr([a](Scalar v) {
        Scalar t = std::tanh(v / a);
        return Scalar(1) - t * t;
      });
    }
  }
  throw DimensionError("unknown activation");
}

/// Upper bound of an activation's range given clipped inputs in [0, A].
double activation_ceiling(ActivationKind kind, int fan_in);

// ---------------------------------------------------------------------------
// Layer and network

/// z = a W^T + b for a batch a (rows are samples).
template <typename Scalar>
Matrix<Scalar> layer_transform(const LayerParams<Scalar>& layer, const Matrix<Scalar>& input) {
  if (input.cols() != layer.weight.cols())
    throw DimensionError("layer input width " + std::to_string(input.cols()) + " != fan-in " +
                         std::to_string(layer.weight.cols()));
  Matrix<Scalar> z = input * layer.weight.transpose();
  z.rowwise() += layer.bias.transpose();
  return z;
}

/// Clip (when enabled) and apply the layer's activation to a raw net output.
template <typename Scalar>
Matrix<Scalar> activate_layer(const NetworkSpec& spec, int layer, const Matrix<Scalar>& z) {
  const int fan_in = spec.fan_in(layer);
  if (spec.clip_to_fan_in)
    return apply_activation<Scalar>(spec.activation(layer), clip_net_output(z, fan_in), fan_in);
  return apply_activation<Scalar>(spec.activation(layer), z, fan_in);
}

template <typename Scalar>
void check_params(const NetworkSpec& spec, const ParamSet<Scalar>& params) {
  if (static_cast<int>(params.size()) != spec.depth())
    throw DimensionError("parameter set has " + std::to_string(params.size()) +
                         " layers, spec expects " + std::to_string(spec.depth()));
  for (int l = 0; l < spec.depth(); ++l) {
    const auto& layer = params.layers[l];
    if (layer.weight.rows() != spec.fan_out(l) || layer.weight.cols() != spec.fan_in(l) ||
        layer.bias.size() != spec.fan_out(l))
      throw DimensionError("layer " + std::to_string(l) + " parameter shape mismatch");
  }
}

template <typename Scalar>
ForwardRecord<Scalar> forward(const NetworkSpec& spec, const ParamSet<Scalar>& params,
                              const Matrix<Scalar>& input) {
  check_params(spec, params);
  if (input.cols() != spec.inputs())
    throw DimensionError("input has " + std::to_string(input.cols()) + " features, expected " +
                         std::to_string(spec.inputs()));
  if (!input.allFinite()) throw NumericError("non-finite input");
  ForwardRecord<Scalar> record;
  record.activations.reserve(spec.depth() + 1);
  record.pre_activations.reserve(spec.depth());
  record.activations.push_back(input);
  for (int l = 0; l < spec.depth(); ++l) {
    record.pre_activations.push_back(layer_transform(params.layers[l], record.activations.back()));
    record.activations.push_back(activate_layer(spec, l, record.pre_activations.back()));
    if (!record.activations.back().allFinite())
      throw NumericError("non-finite activation in layer " + std::to_string(l));
  }
  return record;
}

// ---------------------------------------------------------------------------
// Loss

inline constexpr double kLogEpsilon = 1e-12;

template <typename Scalar>
void check_targets(const Matrix<Scalar>& prediction, const Matrix<Scalar>& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
    throw DimensionError("prediction and target shapes differ");
  if (prediction.rows() == 0) throw DimensionError("empty batch");
}

/// Mean over the batch of -sum(y log(p + eps)).
template <typename Scalar>
double cross_entropy_loss(const Matrix<Scalar>& prediction, const Matrix<Scalar>& target) {
  check_targets(prediction, target);
  const auto logp = (prediction.template cast<double>().array() + kLogEpsilon).log();
  return -(target.template cast<double>().array() * logp).sum() /
         static_cast<double>(prediction.rows());
}

/// Mean over the batch of 0.5 * ||a - y||^2; the hand-checkable debug loss.
template <typename Scalar>
double squared_error_loss(const Matrix<Scalar>& prediction, const Matrix<Scalar>& target) {
  check_targets(prediction, target);
  return 0.5 * (prediction - target).template cast<double>().squaredNorm() /
         static_cast<double>(prediction.rows());
}

template <typename Scalar>
double loss(LossKind kind, const Matrix<Scalar>& prediction, const Matrix<Scalar>& target) {
  return kind == LossKind::cross_entropy ? cross_entropy_loss(prediction, target)
                                         : squared_error_loss(prediction, target);
}

template <typename Scalar>
double loss(const Matrix<Scalar>& prediction, const Matrix<Scalar>& target) {
  return cross_entropy_loss(prediction, target);
}

/// Output-layer error (p - y) / batch. For softmax + cross-entropy this is
/// dL/dz_out; for squared error it is dL/da_out.
template <typename Scalar>
Matrix<Scalar> output_delta(const Matrix<Scalar>& prediction, const Matrix<Scalar>& target) {
  check_targets(prediction, target);
  return (prediction - target) / Scalar(prediction.rows());
}

// ---------------------------------------------------------------------------
// Backpropagation

namespace detail {

template <typename Scalar>
Matrix<Scalar> local_slope(const NetworkSpec& spec, int layer, const Matrix<Scalar>& z) {
  const int fan_in = spec.fan_in(layer);
  if (!spec.clip_to_fan_in) return activation_derivative<Scalar>(spec.activation(layer), z, fan_in);
  const Scalar top = Scalar(fan_in);
  Matrix<Scalar> slope =
      activation_derivative<Scalar>(spec.activation(layer), clip_net_output(z, fan_in), fan_in);
  return slope.cwiseProduct(
      z.unaryExpr([top](Scalar v) { return (v > Scalar(0) && v < top) ? Scalar(1) : Scalar(0); }));
}

}  // namespace detail

/// Backpropagate an output error through a forward record. The record must
/// come from a forward pass with the same parameters.
template <typename Scalar>
GradSet<Scalar> backprop(const NetworkSpec& spec, const ParamSet<Scalar>& params,
                         const ForwardRecord<Scalar>& record, const Matrix<Scalar>& delta_out) {
  check_params(spec, params);
  const int depth = spec.depth();
  if (static_cast<int>(record.pre_activations.size()) != depth ||
      static_cast<int>(record.activations.size()) != depth + 1)
    throw DimensionError("forward record does not match spec depth");
  const auto& out = record.pre_activations.back();
  if (delta_out.rows() != out.rows() || delta_out.cols() != out.cols())
    throw DimensionError("output error shape mismatch");

  GradSet<Scalar> grads;
  grads.layers.resize(depth);
  Matrix<Scalar> dz = delta_out.cwiseProduct(detail::local_slope(spec, depth - 1, out));
  for (int l = depth - 1; l >= 0; --l) {
    grads.layers[l].weight.noalias() = dz.transpose() * record.activations[l];
    grads.layers[l].bias = dz.colwise().sum().transpose();
    if (l > 0) {
      Matrix<Scalar> upstream = dz * params.layers[l].weight;
      dz = upstream.cwiseProduct(detail::local_slope(spec, l - 1, record.pre_activations[l - 1]));
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Helpers shared by the trainer and tests

template <typename Scalar>
Matrix<Scalar> one_hot_matrix(const std::vector<int>& labels, int classes) {
  Matrix<Scalar> out = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes)
      throw ParameterError("label " + std::to_string(labels[i]) + " outside [0, " +
                           std::to_string(classes) + ")");
    out(static_cast<Eigen::Index>(i), labels[i]) = Scalar(1);
  }
  return out;
}

template <typename Scalar>
std::vector<int> argmax_rows(const Matrix<Scalar>& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Eigen::Index c = 0;
    m.row(r).maxCoeff(&c);
    out[static_cast<std::size_t>(r)] = static_cast<int>(c);
  }
  return out;
}

}  // namespace asyt
