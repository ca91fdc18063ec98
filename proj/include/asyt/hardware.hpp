#pragma once

// Emulation of the photonic processing modules: the MZI estimation profile,
// per-device transmission curves, control quantization, the layer-level
// distortion model and encapsulated forward propagation.

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <vector>

#include "asyt/netcore.hpp"
#include "asyt/rng.hpp"

namespace asyt {

using Real = float;

// ---------------------------------------------------------------------------
// Estimation profile

/// Theory-derived control-to-transmission curve T(V) = (1 + cos(2 gamma V^2)) / 2.
struct EstimationProfile {
  double v_max = 32.0;
  /// Default puts the end of the first branch (phase pi) at v_max.
  double gamma = std::numbers::pi / (2.0 * 32.0 * 32.0);
  int quant_levels = 100;

  /// Voltage at which the first branch reaches T = 0.
  double branch_end() const { return std::sqrt(std::numbers::pi / (2.0 * gamma)); }
  /// Voltage of control grid point k, k in [0, quant_levels).
  double grid_voltage(int k) const { return branch_end() * k / (quant_levels - 1); }

  bool operator==(const EstimationProfile&) const = default;
};

double estimation_profile_transmission(const EstimationProfile& profile, double volts);

/// Smallest voltage on the quantized control grid whose transmission is
/// nearest to `target`.
double profile_inverse(const EstimationProfile& profile, double target);

/// Snap to the nearest of `levels` uniform points over [lo, hi].
double quantize_value(double value, double lo, double hi, int levels);

template <typename Derived>
auto quantize_controls(const Eigen::MatrixBase<Derived>& values, double lo, double hi,
                       int levels) {
  using Scalar = typename Derived::Scalar;
  return values
      .unaryExpr([=](Scalar v) { return static_cast<Scalar>(quantize_value(v, lo, hi, levels)); })
      .eval();
}

// ---------------------------------------------------------------------------
// Device calibration

/// Spread constants that make sigma_level = 1 reproduce the target mismatch.
struct DeviceCalibration {
  /// Worst-case |T_device - T_profile| over the control range at the 99th
  /// percentile of the MZI population (the worst of ~100 cells).
  double sigma_phy_target = 0.25;
  /// Relative gamma spread (std of dgamma / gamma) at sigma_level 1.
  double mzi_gamma_rel_std = 0.0;
  /// Phase offset spread (radians) at sigma_level 1.
  double mzi_phase_std = 0.0;
  /// Fraction of MZI variance shared by every cell on one PPM.
  double tile_shared_fraction = 0.5;
  /// Per-connection gain and offset spreads (weight units) of the fitted
  /// map w' = (1 + p)(w + n). The transform mode aggregates them per neuron.
  double p_sys_std = 0.0;
  double n_init_std = 0.0;
};

/// Mean optical intensity assumed when aggregating per-connection offsets
/// into a neuron-level offset.
inline constexpr double kMidRangeIntensity = 0.5;

/// Neuron-level spreads of the transform mode for a layer of fan-in
/// `fan_in`: the gain spread is the per-connection one, the offset is the
/// sum of fan_in + 1 independent connection offsets at mid-range input.
double output_gain_std(const DeviceCalibration& cal);
double output_offset_std(const DeviceCalibration& cal, int fan_in);

/// Fixed ratio between the phase-offset spread and the relative gamma spread.
inline constexpr double kPhaseToGammaSpread = 0.5;
inline constexpr int kDeviationGridPoints = 1001;
inline constexpr double kCalibrationQuantile = 0.99;

/// Calibrated constants for the default profile and a 0.25 target; the
/// test suite re-fits them with `calibrate_devices`.
const DeviceCalibration& default_calibration();

/// Fits the MZI spread so the population deviation statistic equals the
/// target, then regresses the layer-level multiplicative/additive spreads.
DeviceCalibration calibrate_devices(const EstimationProfile& profile, double target,
                                    std::uint64_t seed, int population = 4000);

/// max over the control range of |T_device(V) - T_profile(V)| for one cell.
double mzi_deviation(const EstimationProfile& profile, double gamma_offset, double phase_offset);

/// Quantile of the per-cell deviation over a population.
double deviation_statistic(const EstimationProfile& profile, const std::vector<double>& gamma_offsets,
                           const std::vector<double>& phase_offsets,
                           double quantile = kCalibrationQuantile);

// ---------------------------------------------------------------------------
// Tiling

struct TilePlacement {
  int row0, col0, rows, cols;
};

struct TilingPlan {
  int rows = 0;
  int cols = 0;
  int ppm_dim = 0;
  std::vector<TilePlacement> tiles;

  /// Tile that owns entry (r, c).
  int tile_of(int r, int c) const;
};

/// Row-major partition of a rows x cols connection into ppm_dim blocks.
TilingPlan plan_tiling(int rows, int cols, int ppm_dim);

// ---------------------------------------------------------------------------
// Device model

enum class FidelityMode { transform, component };

/// One weight layer of a realized device. p_sys and n_init act on the
/// layer's net output (one entry per neuron). The per-cell matrices are
/// out x (in + 1); the last column belongs to the bias channel.
struct DeviceLayer {
  Vector<Real> p_sys;
  Vector<Real> n_init;
  Matrix<Real> mzi_gamma;  // absolute gamma offset per cell (rad / V^2)
  Matrix<Real> mzi_phase;  // phase offset per cell (rad)

  bool operator==(const DeviceLayer& o) const {
    auto same = [](const auto& a, const auto& b) {
      return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
    };
    return same(p_sys, o.p_sys) && same(n_init, o.n_init) && same(mzi_gamma, o.mzi_gamma) &&
           same(mzi_phase, o.mzi_phase);
  }
};

struct DeviceModel {
  std::uint64_t spec_hash = 0;
  std::uint64_t seed = 0;
  double sigma_level = 0.0;
  double snr_db = std::numeric_limits<double>::infinity();
  int ppm_dim = 0;
  EstimationProfile profile;
  std::vector<DeviceLayer> layers;

  int mzi_count() const;
  /// Transmission of cell `index` (layer-major, row-major, bias column last).
  double transmission(int index, double volts) const;
  bool operator==(const DeviceModel&) const = default;
};

struct DeviceOptions {
  int ppm_dim = 0;  // 0: one PPM per layer
  EstimationProfile profile{};
  const DeviceCalibration* calibration = nullptr;  // default_calibration() when null
};

DeviceModel sample_device(std::uint64_t seed, const NetworkSpec& spec, double sigma_level,
                          double snr_db, const DeviceOptions& options = {});

double device_transmission(const DeviceModel& device, int mzi_index, double volts);

/// Shifts the systematic terms by `magnitude` standard units (a hard
/// perturbation event). Deterministic in `seed`.
DeviceModel inject_perturbation(const DeviceModel& device, double magnitude, std::uint64_t seed,
                                const DeviceCalibration* calibration = nullptr);

std::uint64_t hash_device(const DeviceModel& device);

void save_device(const DeviceModel& device, const std::filesystem::path& path);
DeviceModel load_device(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Physical propagation

struct PhysicalOptions {
  FidelityMode mode = FidelityMode::transform;
  /// Component mode: weights in [-weight_range, weight_range] are encoded as
  /// transmissions t = (w / range + 1) / 2.
  double weight_range = 1.0;
  /// Component mode: quantize each layer's optical input to the profile levels.
  bool quantize_signals = true;
};

/// Weight and bias actually realized by the device for the given controls.
/// In transform mode the controls are exact and the distortion acts on the
/// net output instead.
LayerParams<Real> realized_layer(const DeviceModel& device, int layer,
                                 const LayerParams<Real>& params, const PhysicalOptions& options);

/// Raw (pre-clip) noisy net output of one physical layer. Transform mode:
/// (1 + p_sys) * (z + n_init) + noise per neuron. Component mode: z from the
/// realized cells plus noise. `noise` may be null, which disables the random
/// term.
Matrix<Real> physical_net_output(const DeviceModel& device, int layer, const NetworkSpec& spec,
                                 const LayerParams<Real>& params, const Matrix<Real>& input,
                                 Rng* noise, const PhysicalOptions& options = {});

Matrix<Real> physical_layer_forward(const DeviceModel& device, int layer, const NetworkSpec& spec,
                                    const LayerParams<Real>& params, const Matrix<Real>& input,
                                    Rng* noise, const PhysicalOptions& options = {});

/// Encapsulated propagation: returns only the P output values per sample.
Matrix<Real> physical_network_forward(const DeviceModel& device, const NetworkSpec& spec,
                                      const ParamSet<Real>& params, const Matrix<Real>& input,
                                      Rng* noise, const PhysicalOptions& options = {});

struct ProbeResult {
  /// Noisy readouts of every non-input layer (M scalars per sample).
  std::vector<Matrix<Real>> activations;
  int scalars_per_sample() const;
};

/// Privileged intermediate readout for truncated-architecture baselines.
/// Every layer boundary becomes a readout-and-rewrite interface whose noise
/// (at readout_snr_db) propagates onward.
ProbeResult probe_intermediate(const DeviceModel& device, const NetworkSpec& spec,
                               const ParamSet<Real>& params, const Matrix<Real>& input, Rng* noise,
                               double readout_snr_db, const PhysicalOptions& options = {});

/// Adds zero-mean Gaussian noise whose per-element variance is the mean
/// signal power divided by 10^(snr_db / 10).
void add_snr_noise(Matrix<Real>& signal, double snr_db, Rng& rng);

}  // namespace asyt
