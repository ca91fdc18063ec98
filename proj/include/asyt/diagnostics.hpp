#pragma once

// Update-alignment metrics, the readout cost model of truncated versus
// encapsulated networks, and stress/sweep harnesses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "asyt/errors.hpp"
#include "asyt/netcore.hpp"
#include "asyt/trainer.hpp"

namespace asyt {

// ---------------------------------------------------------------------------
// Alignment

/// Angle in degrees between two flattened update vectors.
template <typename Scalar>
double alignment_angle(const Vector<Scalar>& a, const Vector<Scalar>& b) {
  if (a.size() != b.size()) throw DimensionError("alignment_angle: length mismatch");
  const double na = a.template cast<double>().norm();
  const double nb = b.template cast<double>().norm();
  if (na == 0.0 || nb == 0.0) throw UndefinedAngleError("alignment_angle: zero vector");
  const double c = std::clamp(a.template cast<double>().dot(b.template cast<double>()) / (na * nb), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

template <typename Scalar>
double alignment_angle(const ParamSet<Scalar>& a, const ParamSet<Scalar>& b) {
  check_matching(a, b);
  return alignment_angle(a.flatten(), b.flatten());
}

/// ||b|| / ||a|| over the flattened sets (Frobenius norms).
template <typename Scalar>
double magnitude_ratio(const ParamSet<Scalar>& a, const ParamSet<Scalar>& b) {
  check_matching(a, b);
  const double na = a.flatten().template cast<double>().norm();
  if (na == 0.0) throw UndefinedAngleError("magnitude_ratio: zero reference");
  return b.flatten().template cast<double>().norm() / na;
}

/// Per-layer angles (weights and bias of a layer flattened together).
template <typename Scalar>
std::vector<double> layer_angles(const ParamSet<Scalar>& a, const ParamSet<Scalar>& b) {
  check_matching(a, b);
  std::vector<double> out;
  for (std::size_t l = 0; l < a.size(); ++l) {
    ParamSet<Scalar> la, lb;
    la.layers = {a.layers[l]};
    lb.layers = {b.layers[l]};
    const auto fa = la.flatten();
    const auto fb = lb.flatten();
    out.push_back(fa.norm() == 0 || fb.norm() == 0 ? std::numeric_limits<double>::quiet_NaN()
                                                   : alignment_angle(fa, fb));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cost model

enum class AccessMode { truncated, encapsulated };

struct CostModelInput {
  long neurons = 0;         // M, every non-input neuron
  long outputs = 0;         // P
  long hidden_layers = 0;   // N
  double photonic_power_w = 1.0;
  double interface_time_s = 1e-6;
  double propagation_time_s = 1e-9;
  AccessMode mode = AccessMode::encapsulated;

  void validate() const;
};

/// Readout/rewrite operations per sample: 2M - P truncated, P encapsulated.
long access_count(long neurons, long outputs, AccessMode mode);
/// N + 1 truncated, 1 encapsulated.
long access_timesteps(long hidden_layers, AccessMode mode);
double min_energy(double photonic_power_w, double extraction_time_s);
/// access_count * T_interface + timesteps * T_prop.
double extraction_time(const CostModelInput& input);

// ---------------------------------------------------------------------------
// Harnesses

/// Monte Carlo estimate of P(angle(pseudo, digital) >= 90 deg) for random
/// weight vectors uniform in the bounded tunable range [-1, 1] whose
/// distorted copy deviates by at most `distortion_fraction` of that range.
double alignment_break_probability(double distortion_fraction, long trials, std::uint64_t seed,
                                   int dimension = 64);

struct SweepRow {
  double level_or_step = 0.0;
  std::string method;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double angle_deg = 0.0;
  double magnitude_ratio = 0.0;
};

/// Trains AsyT at each sigma level and reports AsyT, ideal BP (the digital
/// twin) and in-silico BP (the twin deployed on the device) rows per level.
/// The digital trajectory does not depend on the device, so one run per
/// level yields all three. Every level scales the same device draw.
std::vector<SweepRow> distortion_sweep(const std::vector<double>& levels, const TrainConfig& config,
                                       const NetworkSpec& spec, const TrainTest& data,
                                       std::uint64_t device_seed, double snr_db,
                                       const DeviceOptions& device_options = {},
                                       std::vector<TrainReport>* reports = nullptr);

/// Rows for one finished AsyT run: asyt, ideal_bp and in_silico_bp.
std::vector<SweepRow> rows_from_report(double level, const TrainReport& report);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

}  // namespace asyt
