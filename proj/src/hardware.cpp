#include "asyt/hardware.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "asyt/binary_io.hpp"
#include "asyt/hash.hpp"

namespace asyt {

namespace {

constexpr double kRangeSlack = 1e-9;

void check_profile(const EstimationProfile& p) {
  if (!(p.gamma > 0) || !(p.v_max > 0) || p.quant_levels < 2)
    throw ParameterError("estimation profile needs gamma > 0, v_max > 0, levels >= 2");
  if (p.branch_end() > p.v_max * (1 + kRangeSlack))
    throw ControlRangeError("first transmission branch exceeds the control range");
}

double cosine_transmission(double gamma, double phase, double volts) {
  return 0.5 * (1.0 + std::cos(2.0 * gamma * volts * volts + phase));
}

}  // namespace

double estimation_profile_transmission(const EstimationProfile& profile, double volts) {
  if (!(volts >= 0.0) || volts > profile.v_max * (1 + kRangeSlack))
    throw ControlRangeError("control voltage " + std::to_string(volts) + " outside [0, " +
                            std::to_string(profile.v_max) + "]");
  return cosine_transmission(profile.gamma, 0.0, volts);
}

double profile_inverse(const EstimationProfile& profile, double target) {
  check_profile(profile);
  const double t = std::clamp(target, 0.0, 1.0);
  const int last = profile.quant_levels - 1;
  // Continuous inverse on the first branch, then search its grid neighbours.
  const double phase = std::acos(std::clamp(2.0 * t - 1.0, -1.0, 1.0));
  const double v_star = std::sqrt(phase / (2.0 * profile.gamma));
  const int k_star = static_cast<int>(std::floor(v_star / profile.branch_end() * last));
  int best = -1;
  double best_err = std::numeric_limits<double>::infinity();
  for (int k = std::max(0, k_star - 1); k <= std::min(last, k_star + 2); ++k) {
    const double err = std::abs(cosine_transmission(profile.gamma, 0.0, profile.grid_voltage(k)) - t);
    if (err < best_err) {
      best_err = err;
      best = k;
    }
  }
  return profile.grid_voltage(best);
}

double quantize_value(double value, double lo, double hi, int levels) {
  if (levels < 2) throw ParameterError("quantization needs at least 2 levels");
  if (!(hi > lo)) return lo;
  // Scale before dividing so exact midpoints such as 0.5 * 99 stay exact.
  const double k = std::round((std::clamp(value, lo, hi) - lo) * (levels - 1) / (hi - lo));
  return lo + k * (hi - lo) / (levels - 1);
}

// ---------------------------------------------------------------------------
// Calibration

double mzi_deviation(const EstimationProfile& profile, double gamma_offset, double phase_offset) {
  double worst = 0.0;
  for (int i = 0; i < kDeviationGridPoints; ++i) {
    const double v = profile.v_max * i / (kDeviationGridPoints - 1);
    const double dev = std::clamp(cosine_transmission(profile.gamma + gamma_offset, phase_offset, v), 0.0, 1.0);
    worst = std::max(worst, std::abs(dev - cosine_transmission(profile.gamma, 0.0, v)));
  }
  return worst;
}

double deviation_statistic(const EstimationProfile& profile,
                           const std::vector<double>& gamma_offsets,
                           const std::vector<double>& phase_offsets, double quantile) {
  if (gamma_offsets.size() != phase_offsets.size() || gamma_offsets.empty())
    throw DimensionError("deviation population is empty or ragged");
  std::vector<double> devs(gamma_offsets.size());
  for (std::size_t i = 0; i < devs.size(); ++i)
    devs[i] = mzi_deviation(profile, gamma_offsets[i], phase_offsets[i]);
  std::sort(devs.begin(), devs.end());
  const double pos = quantile * static_cast<double>(devs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(devs.size() - 1, lo + 1);
  return devs[lo] + (pos - static_cast<double>(lo)) * (devs[hi] - devs[lo]);
}

DeviceCalibration calibrate_devices(const EstimationProfile& profile, double target,
                                    std::uint64_t seed, int population) {
  check_profile(profile);
  Rng rng(stream_seed(seed, Stream::device, 0xCA11));
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> xi_gamma(static_cast<std::size_t>(population));
  std::vector<double> xi_phase(xi_gamma.size());
  for (std::size_t i = 0; i < xi_gamma.size(); ++i) {
    xi_gamma[i] = unit(rng);
    xi_phase[i] = unit(rng);
  }
  auto offsets = [&](double kappa) {
    std::pair<std::vector<double>, std::vector<double>> out;
    for (std::size_t i = 0; i < xi_gamma.size(); ++i) {
      out.first.push_back(profile.gamma * kappa * xi_gamma[i]);
      out.second.push_back(kPhaseToGammaSpread * kappa * xi_phase[i]);
    }
    return out;
  };
  auto statistic = [&](double kappa) {
    auto [g, p] = offsets(kappa);
    return deviation_statistic(profile, g, p);
  };

  double lo = 0.0, hi = 0.05;
  while (statistic(hi) < target) hi *= 2.0;
  for (int iter = 0; iter < 40; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (statistic(mid) < target ? lo : hi) = mid;
  }
  DeviceCalibration cal;
  cal.sigma_phy_target = target;
  cal.mzi_gamma_rel_std = 0.5 * (lo + hi);
  cal.mzi_phase_std = kPhaseToGammaSpread * cal.mzi_gamma_rel_std;

  // Regress each cell's realized weight map w' = (1 + p)(w + n) over the
  // encodable range to obtain the layer-level spreads.
  auto [gammas, phases] = offsets(cal.mzi_gamma_rel_std);
  constexpr int kWeightGrid = 41;
  double sum_p2 = 0.0, sum_n2 = 0.0;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 0; k < kWeightGrid; ++k) {
      const double w = -1.0 + 2.0 * k / (kWeightGrid - 1);
      const double v = profile_inverse(profile, 0.5 * (w + 1.0));
      const double x = 2.0 * cosine_transmission(profile.gamma, 0.0, v) - 1.0;
      const double y =
          2.0 * std::clamp(cosine_transmission(profile.gamma + gammas[i], phases[i], v), 0.0, 1.0) - 1.0;
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = kWeightGrid;
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    sum_p2 += (slope - 1.0) * (slope - 1.0);
    sum_n2 += (intercept / slope) * (intercept / slope);
  }
  cal.p_sys_std = std::sqrt(sum_p2 / static_cast<double>(gammas.size()));
  cal.n_init_std = std::sqrt(sum_n2 / static_cast<double>(gammas.size()));
  return cal;
}

const DeviceCalibration& default_calibration() {
  static const DeviceCalibration cal = [] {
    DeviceCalibration c;
    c.sigma_phy_target = 0.25;
    c.mzi_gamma_rel_std = 0.098417556812864848;
    c.mzi_phase_std = kPhaseToGammaSpread * c.mzi_gamma_rel_std;
    c.p_sys_std = 0.065465430686459838;
    c.n_init_std = 0.13493854989182305;
    return c;
  }();
  return cal;
}

double output_gain_std(const DeviceCalibration& cal) { return cal.p_sys_std; }

double output_offset_std(const DeviceCalibration& cal, int fan_in) {
  return cal.n_init_std * kMidRangeIntensity * std::sqrt(static_cast<double>(fan_in) + 1.0);
}

// ---------------------------------------------------------------------------
// Tiling

int TilingPlan::tile_of(int r, int c) const {
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const auto& t = tiles[i];
    if (r >= t.row0 && r < t.row0 + t.rows && c >= t.col0 && c < t.col0 + t.cols)
      return static_cast<int>(i);
  }
  throw IndexError("entry outside tiling plan");
}

TilingPlan plan_tiling(int rows, int cols, int ppm_dim) {
  if (ppm_dim < 1) throw ParameterError("PPM dimension must be at least 1");
  if (rows < 1 || cols < 1) throw DimensionError("connection must be non-empty");
  TilingPlan plan{rows, cols, ppm_dim, {}};
  for (int r = 0; r < rows; r += ppm_dim)
    for (int c = 0; c < cols; c += ppm_dim)
      plan.tiles.push_back({r, c, std::min(ppm_dim, rows - r), std::min(ppm_dim, cols - c)});
  return plan;
}

// ---------------------------------------------------------------------------
// Device model

int DeviceModel::mzi_count() const {
  int n = 0;
  for (const auto& l : layers) n += static_cast<int>(l.mzi_gamma.size());
  return n;
}

double DeviceModel::transmission(int index, double volts) const {
  if (index < 0) throw IndexError("negative MZI index");
  for (const auto& l : layers) {
    const int n = static_cast<int>(l.mzi_gamma.size());
    if (index < n) {
      const int r = index / static_cast<int>(l.mzi_gamma.cols());
      const int c = index % static_cast<int>(l.mzi_gamma.cols());
      if (!(volts >= 0.0) || volts > profile.v_max * (1 + kRangeSlack))
        throw ControlRangeError("control voltage outside range");
      return std::clamp(
          cosine_transmission(profile.gamma + l.mzi_gamma(r, c), l.mzi_phase(r, c), volts), 0.0, 1.0);
    }
    index -= n;
  }
  throw IndexError("MZI index beyond device");
}

double device_transmission(const DeviceModel& device, int mzi_index, double volts) {
  return device.transmission(mzi_index, volts);
}

DeviceModel sample_device(std::uint64_t seed, const NetworkSpec& spec, double sigma_level,
                          double snr_db, const DeviceOptions& options) {
  spec.validate();
  if (!(sigma_level >= 0.0)) throw ParameterError("sigma level must be non-negative");
  check_profile(options.profile);
  const DeviceCalibration& cal = options.calibration ? *options.calibration : default_calibration();

  DeviceModel dev;
  dev.spec_hash = hash_spec(spec);
  dev.seed = seed;
  dev.sigma_level = sigma_level;
  dev.snr_db = snr_db;
  dev.ppm_dim = options.ppm_dim;
  dev.profile = options.profile;

  const double share = std::clamp(cal.tile_shared_fraction, 0.0, 1.0);
  const double gamma_std = options.profile.gamma * cal.mzi_gamma_rel_std * sigma_level;
  const double phase_std = cal.mzi_phase_std * sigma_level;
  std::normal_distribution<double> unit(0.0, 1.0);

  for (int l = 0; l < spec.depth(); ++l) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(Stream::device),
                               static_cast<std::uint64_t>(l)}));
    const int rows = spec.fan_out(l);
    const int cols = spec.fan_in(l) + 1;
    DeviceLayer layer;
    const int ppm = options.ppm_dim > 0 ? options.ppm_dim : std::max(rows, cols - 1);
    const TilingPlan plan = plan_tiling(rows, cols - 1, ppm);
    std::vector<std::pair<double, double>> shared(plan.tiles.size());
    for (auto& s : shared) s = {unit(rng), unit(rng)};

    layer.p_sys.resize(rows);
    layer.n_init.resize(rows);
    fill_gaussian(layer.p_sys, rng, output_gain_std(cal) * sigma_level);
    fill_gaussian(layer.n_init, rng, output_offset_std(cal, cols - 1) * sigma_level);

    layer.mzi_gamma.resize(rows, cols);
    layer.mzi_phase.resize(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        // The bias channel rides on the first column block of its row.
        const auto& s = shared[static_cast<std::size_t>(plan.tile_of(r, c == cols - 1 ? 0 : c))];
        const double xg = std::sqrt(share) * s.first + std::sqrt(1.0 - share) * unit(rng);
        const double xp = std::sqrt(share) * s.second + std::sqrt(1.0 - share) * unit(rng);
        layer.mzi_gamma(r, c) = static_cast<Real>(gamma_std * xg);
        layer.mzi_phase(r, c) = static_cast<Real>(phase_std * xp);
      }
    }
    dev.layers.push_back(std::move(layer));
  }
  return dev;
}

DeviceModel inject_perturbation(const DeviceModel& device, double magnitude, std::uint64_t seed,
                                const DeviceCalibration* calibration) {
  if (magnitude == 0.0) return device;
  const DeviceCalibration& cal = calibration ? *calibration : default_calibration();
  DeviceModel out = device;
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(Stream::perturbation), l}));
    auto& layer = out.layers[l];
    auto shift = [&](auto& m, double stddev) {
      Matrix<Real> delta(m.rows(), m.cols());
      fill_gaussian(delta, rng, stddev * magnitude);
      m += delta;
    };
    const int fan_in = static_cast<int>(layer.mzi_gamma.cols()) - 1;
    shift(layer.p_sys, output_gain_std(cal));
    shift(layer.n_init, output_offset_std(cal, fan_in));
    shift(layer.mzi_gamma, device.profile.gamma * cal.mzi_gamma_rel_std);
    shift(layer.mzi_phase, cal.mzi_phase_std);
  }
  return out;
}

std::uint64_t hash_device(const DeviceModel& device) {
  Fnv1a h;
  h.value(device.spec_hash);
  h.value(device.seed);
  h.value(device.sigma_level);
  h.value(device.snr_db);
  h.value(device.ppm_dim);
  auto add = [&h](const auto& m) { h.bytes(m.data(), sizeof(Real) * static_cast<std::size_t>(m.size())); };
  for (const auto& l : device.layers) {
    add(l.p_sys);
    add(l.n_init);
    add(l.mzi_gamma);
    add(l.mzi_phase);
  }
  return h.digest();
}

// ---------------------------------------------------------------------------
// Serialization

namespace {
constexpr std::string_view kDeviceMagic = "ASYTDEV1";
}

void save_device(const DeviceModel& device, const std::filesystem::path& path) {
  BinaryWriter w;
  w.magic(kDeviceMagic);
  w.put<std::uint64_t>(device.spec_hash);
  w.put<std::uint64_t>(device.seed);
  w.put<double>(device.sigma_level);
  w.put<double>(device.snr_db);
  w.put<std::int32_t>(device.ppm_dim);
  w.put<double>(device.profile.v_max);
  w.put<double>(device.profile.gamma);
  w.put<std::int32_t>(device.profile.quant_levels);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(device.layers.size()));
  for (const auto& l : device.layers) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.mzi_gamma.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.mzi_gamma.cols()));
    w.put_f32(l.p_sys.transpose());
    w.put_f32(l.n_init.transpose());
    // Per-cell (dgamma, phase) pairs, row-major.
    for (Eigen::Index r = 0; r < l.mzi_gamma.rows(); ++r)
      for (Eigen::Index c = 0; c < l.mzi_gamma.cols(); ++c) {
        w.put<float>(l.mzi_gamma(r, c));
        w.put<float>(l.mzi_phase(r, c));
      }
  }
  w.commit(path);
}

DeviceModel load_device(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic(kDeviceMagic);
  DeviceModel d;
  d.spec_hash = r.get<std::uint64_t>();
  d.seed = r.get<std::uint64_t>();
  d.sigma_level = r.get<double>();
  d.snr_db = r.get<double>();
  d.ppm_dim = r.get<std::int32_t>();
  d.profile.v_max = r.get<double>();
  d.profile.gamma = r.get<double>();
  d.profile.quant_levels = r.get<std::int32_t>();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    DeviceLayer l;
    l.p_sys = r.get_f32<Real>(rows, 1);
    l.n_init = r.get_f32<Real>(rows, 1);
    l.mzi_gamma.resize(rows, cols);
    l.mzi_phase.resize(rows, cols);
    for (std::uint32_t y = 0; y < rows; ++y)
      for (std::uint32_t x = 0; x < cols; ++x) {
        l.mzi_gamma(y, x) = r.get<float>();
        l.mzi_phase(y, x) = r.get<float>();
      }
    d.layers.push_back(std::move(l));
  }
  if (!r.at_end()) throw FormatError(path.string() + ": trailing bytes after device payload");
  return d;
}

// ---------------------------------------------------------------------------
// Physical propagation

namespace {

void check_device_layer(const DeviceModel& device, int layer, const LayerParams<Real>& params) {
  if (layer < 0 || layer >= static_cast<int>(device.layers.size()))
    throw IndexError("device has no layer " + std::to_string(layer));
  const auto& d = device.layers[static_cast<std::size_t>(layer)];
  if (d.p_sys.size() != params.weight.rows() || d.n_init.size() != params.weight.rows() ||
      d.mzi_gamma.rows() != params.weight.rows() || d.mzi_gamma.cols() != params.weight.cols() + 1)
    throw DimensionError("device layer " + std::to_string(layer) + " does not match parameters");
}

Real realize_cell(const DeviceModel& device, Real gamma_offset, Real phase_offset, Real w,
                  double range) {
  const double t = 0.5 * (std::clamp(static_cast<double>(w) / range, -1.0, 1.0) + 1.0);
  const double v = profile_inverse(device.profile, t);
  const double realized = std::clamp(
      cosine_transmission(device.profile.gamma + gamma_offset, phase_offset, v), 0.0, 1.0);
  return static_cast<Real>(range * (2.0 * realized - 1.0));
}

}  // namespace

LayerParams<Real> realized_layer(const DeviceModel& device, int layer,
                                 const LayerParams<Real>& params, const PhysicalOptions& options) {
  check_device_layer(device, layer, params);
  const auto& d = device.layers[static_cast<std::size_t>(layer)];
  const Eigen::Index in = params.weight.cols();
  LayerParams<Real> out;
  if (options.mode == FidelityMode::transform) return params;
  out.weight.resize(params.weight.rows(), in);
  out.bias.resize(params.bias.size());
  for (Eigen::Index r = 0; r < params.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < in; ++c)
      out.weight(r, c) = realize_cell(device, d.mzi_gamma(r, c), d.mzi_phase(r, c),
                                      params.weight(r, c), options.weight_range);
    out.bias(r) = realize_cell(device, d.mzi_gamma(r, in), d.mzi_phase(r, in), params.bias(r),
                               options.weight_range);
  }
  return out;
}

void add_snr_noise(Matrix<Real>& signal, double snr_db, Rng& rng) {
  if (std::isinf(snr_db) || signal.size() == 0) return;
  const double power = signal.template cast<double>().squaredNorm() / static_cast<double>(signal.size());
  const double stddev = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  Matrix<Real> noise(signal.rows(), signal.cols());
  fill_gaussian(noise, rng, stddev);
  signal += noise;
}

namespace {

Matrix<Real> optical_input(const NetworkSpec& spec, int layer, const Matrix<Real>& input,
                           const DeviceModel& device, const PhysicalOptions& options) {
  if (options.mode != FidelityMode::component || !options.quantize_signals) return input;
  const double ceiling =
      layer == 0 ? 1.0 : activation_ceiling(spec.activation(layer - 1), spec.fan_in(layer - 1));
  return quantize_controls(input, 0.0, ceiling, device.profile.quant_levels);
}

}  // namespace

Matrix<Real> physical_net_output(const DeviceModel& device, int layer, const NetworkSpec& spec,
                                 const LayerParams<Real>& params, const Matrix<Real>& input,
                                 Rng* noise, const PhysicalOptions& options) {
  const LayerParams<Real> realized = realized_layer(device, layer, params, options);
  Matrix<Real> z = layer_transform(realized, optical_input(spec, layer, input, device, options));
  // Neuron-level gain and offset act in both modes; component-mode weights
  // are in units of weight_range, so the offset is too.
  const auto& d = device.layers[static_cast<std::size_t>(layer)];
  const Real offset_scale =
      options.mode == FidelityMode::component ? static_cast<Real>(options.weight_range) : Real(1);
  z.rowwise() += offset_scale * d.n_init.transpose();
  z.array().rowwise() *= (d.p_sys.array() + Real(1)).transpose();
  if (noise) add_snr_noise(z, device.snr_db, *noise);
  return z;
}

Matrix<Real> physical_layer_forward(const DeviceModel& device, int layer, const NetworkSpec& spec,
                                    const LayerParams<Real>& params, const Matrix<Real>& input,
                                    Rng* noise, const PhysicalOptions& options) {
  return activate_layer(spec, layer, physical_net_output(device, layer, spec, params, input, noise, options));
}

Matrix<Real> physical_network_forward(const DeviceModel& device, const NetworkSpec& spec,
                                      const ParamSet<Real>& params, const Matrix<Real>& input,
                                      Rng* noise, const PhysicalOptions& options) {
  check_params(spec, params);
  if (device.spec_hash != hash_spec(spec)) throw ConsistencyError("device was sampled for another network");
  if (input.cols() != spec.inputs()) throw DimensionError("physical input width mismatch");
  Matrix<Real> a = input;
  for (int l = 0; l < spec.depth(); ++l)
    a = physical_layer_forward(device, l, spec, params.layers[static_cast<std::size_t>(l)], a, noise, options);
  return a;
}

int ProbeResult::scalars_per_sample() const {
  int n = 0;
  for (const auto& a : activations) n += static_cast<int>(a.cols());
  return n;
}

ProbeResult probe_intermediate(const DeviceModel& device, const NetworkSpec& spec,
                               const ParamSet<Real>& params, const Matrix<Real>& input, Rng* noise,
                               double readout_snr_db, const PhysicalOptions& options) {
  check_params(spec, params);
  if (device.spec_hash != hash_spec(spec)) throw ConsistencyError("device was sampled for another network");
  ProbeResult out;
  Matrix<Real> a = input;
  for (int l = 0; l < spec.depth(); ++l) {
    a = physical_layer_forward(device, l, spec, params.layers[static_cast<std::size_t>(l)], a, noise, options);
    if (noise) add_snr_noise(a, readout_snr_db, *noise);
    out.activations.push_back(a);
  }
  return out;
}

}  // namespace asyt
