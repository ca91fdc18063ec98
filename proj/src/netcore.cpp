#include "asyt/netcore.hpp"

#include <sstream>

namespace asyt {

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::identity: return "identity";
    case ActivationKind::relu: return "relu";
    case ActivationKind::sigmoid_like: return "sigmoid_like";
    case ActivationKind::tanh_saturating: return "tanh_saturating";
    case ActivationKind::softmax: return "softmax";
  }
  return "unknown";
}

ActivationKind parse_activation(std::string_view name) {
  for (auto kind : {ActivationKind::identity, ActivationKind::relu, ActivationKind::sigmoid_like,
                    ActivationKind::tanh_saturating, ActivationKind::softmax})
    if (to_string(kind) == name) return kind;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

double activation_ceiling(ActivationKind kind, int fan_in) {
  switch (kind) {
    case ActivationKind::sigmoid_like:
    case ActivationKind::softmax:
      return 1.0;
    case ActivationKind::tanh_saturating:
      return fan_in * std::tanh(1.0);
    default:
      return fan_in;
  }
}

std::string NetworkSpec::describe() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) out << (i ? "-" : "") << layer_sizes[i];
  out << '/' << to_string(hidden_activation) << '/' << to_string(output_activation)
      << (clip_to_fan_in ? "/clip" : "/noclip");
  return out.str();
}

}  // namespace asyt
