#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string_view>
#include <type_traits>

#include "asyt/netcore.hpp"

namespace asyt {

/// 64-bit FNV-1a, used for content hashes in file headers and reports.
class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
    requires std::is_arithmetic_v<T>
  void value(T v) {
    bytes(&v, sizeof v);
  }
  void text(std::string_view s) {
    value<std::uint64_t>(s.size());
    bytes(s.data(), s.size());
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t hash_spec(const NetworkSpec& spec) {
  Fnv1a h;
  h.text(spec.describe());
  return h.digest();
}

template <typename Scalar>
std::uint64_t hash_params(const ParamSet<Scalar>& params) {
  Fnv1a h;
  for (const auto& layer : params.layers) {
    h.bytes(layer.weight.data(), sizeof(Scalar) * static_cast<std::size_t>(layer.weight.size()));
    h.bytes(layer.bias.data(), sizeof(Scalar) * static_cast<std::size_t>(layer.bias.size()));
  }
  return h.digest();
}

}  // namespace asyt
