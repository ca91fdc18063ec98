#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <type_traits>

#include "asyt/hardware.hpp"
#include "asyt/hash.hpp"

using namespace asyt;

namespace {

using Mr = Matrix<Real>;

Mr uniform(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  return Mr::NullaryExpr(r, c, [&]() { return static_cast<Real>(u(rng)); });
}

ParamSet<Real> random_params(const NetworkSpec& spec, std::mt19937_64& rng, double scale) {
  auto p = ParamSet<Real>::zeros(spec);
  for (auto& l : p.layers) {
    l.weight = uniform(l.weight.rows(), l.weight.cols(), rng, -scale, scale);
    l.bias = uniform(l.bias.size(), 1, rng, 0.0, scale);
  }
  return p;
}

// Direct evaluation of the cosine curve, independent of the library.
double curve(double gamma, double phase, double v) {
  return 0.5 * (1.0 + std::cos(2.0 * gamma * v * v + phase));
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("asyt_test_" + name);
}

const NetworkSpec kIrisSpec{{4, 4, 3}, ActivationKind::sigmoid_like, ActivationKind::softmax, true};

}  // namespace

TEST_CASE("estimation profile values") {
  EstimationProfile p;
  CHECK(estimation_profile_transmission(p, 0.0) == 1.0);
  const double v_pi = std::sqrt(std::numbers::pi / (2.0 * p.gamma));
  const double v_half = std::sqrt(std::numbers::pi / (4.0 * p.gamma));
  CHECK(estimation_profile_transmission(p, v_pi) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(estimation_profile_transmission(p, v_half) == doctest::Approx(0.5));
  CHECK(v_pi == doctest::Approx(p.v_max));
  CHECK_THROWS_AS(estimation_profile_transmission(p, -1.0), ControlRangeError);
  CHECK_THROWS_AS(estimation_profile_transmission(p, p.v_max + 1.0), ControlRangeError);
  for (int i = 0; i <= 100; ++i) {
    const double t = estimation_profile_transmission(p, p.v_max * i / 100.0);
    CHECK(t >= 0.0);
    CHECK(t <= 1.0);
  }
}

TEST_CASE("profile inverse endpoints and grid optimality") {
  EstimationProfile p;
  CHECK(profile_inverse(p, 1.0) == 0.0);
  CHECK(profile_inverse(p, 0.0) == doctest::Approx(std::sqrt(std::numbers::pi / (2.0 * p.gamma))));

  std::vector<double> grid_t;
  for (int k = 0; k < p.quant_levels; ++k) grid_t.push_back(curve(p.gamma, 0.0, p.grid_voltage(k)));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double t = u(rng);
    const double v = profile_inverse(p, t);
    const double err = std::abs(curve(p.gamma, 0.0, v) - t);
    double best = 1.0;
    for (double g : grid_t) best = std::min(best, std::abs(g - t));
    CHECK(err == doctest::Approx(best).epsilon(1e-12));
    // Bracketing grid points on the decreasing branch.
    auto it = std::lower_bound(grid_t.rbegin(), grid_t.rend(), t);
    const double above = it == grid_t.rend() ? 1.0 : *it;
    const double below = it == grid_t.rbegin() ? 0.0 : *(it - 1);
    CHECK(err <= 0.5 * (above - below) + 1e-12);
  }
}

TEST_CASE("quantization grid") {
  CHECK(quantize_value(0.0, 0.0, 1.0, 100) == 0.0);
  CHECK(quantize_value(1.0, 0.0, 1.0, 100) == 1.0);
  CHECK(quantize_value(0.5, 0.0, 1.0, 100) == doctest::Approx(50.0 / 99.0));
  CHECK(quantize_value(-2.0, -2.0, 3.0, 7) == -2.0);
  CHECK_THROWS_AS(quantize_value(0.5, 0.0, 1.0, 1), ParameterError);
  std::mt19937_64 rng(9);
  Mr x = uniform(20, 20, rng, -1.0, 1.0);
  Mr q = quantize_controls(x, -1.0, 1.0, 100);
  CHECK(quantize_controls(q, -1.0, 1.0, 100) == q);
  CHECK((q - x).cwiseAbs().maxCoeff() <= 1.0 / 99.0 + 1e-6);
}

TEST_CASE("device transmission") {
  EstimationProfile prof;
  auto dev = sample_device(4, kIrisSpec, 0.0, INFINITY);
  for (int i = 0; i <= 50; ++i) {
    const double v = prof.v_max * i / 50.0;
    CHECK(device_transmission(dev, 0, v) == doctest::Approx(estimation_profile_transmission(prof, v)));
  }
  auto noisy = sample_device(4, kIrisSpec, 1.0, INFINITY);
  CHECK(noisy.mzi_count() == 4 * 5 + 3 * 5);
  // A nonzero phase offset moves T(0) off 1; zero phase keeps it.
  CHECK(std::abs(device_transmission(noisy, 0, 0.0) - curve(0, noisy.layers[0].mzi_phase(0, 0), 0)) < 1e-9);
  auto zero_phase = noisy;
  for (auto& l : zero_phase.layers) l.mzi_phase.setZero();
  for (int i = 0; i < zero_phase.mzi_count(); ++i) CHECK(device_transmission(zero_phase, i, 0.0) == 1.0);
  CHECK_THROWS_AS(device_transmission(noisy, noisy.mzi_count(), 1.0), IndexError);
  CHECK_THROWS_AS(device_transmission(noisy, -1, 1.0), IndexError);
}

TEST_CASE("sampled device worst-case deviation matches the calibration target") {
  const auto& cal = default_calibration();
  std::vector<double> dg, dp;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto dev = sample_device(1000 + s, kIrisSpec, 1.0, INFINITY);
    for (const auto& l : dev.layers)
      for (Eigen::Index i = 0; i < l.mzi_gamma.size(); ++i) {
        dg.push_back(l.mzi_gamma.data()[i]);
        dp.push_back(l.mzi_phase.data()[i]);
      }
  }
  const double stat = deviation_statistic(EstimationProfile{}, dg, dp);
  CHECK(stat == doctest::Approx(cal.sigma_phy_target).epsilon(0.05));

  // Independent per-cell oracle for one cell.
  EstimationProfile prof;
  double worst = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double v = prof.v_max * i / 4000.0;
    worst = std::max(worst, std::abs(std::clamp(curve(prof.gamma + dg[0], dp[0], v), 0.0, 1.0) -
                                     curve(prof.gamma, 0.0, v)));
  }
  CHECK(mzi_deviation(prof, dg[0], dp[0]) == doctest::Approx(worst).epsilon(0.01));
}

TEST_CASE("calibration re-fit reproduces the built-in constants") {
  const auto fit = calibrate_devices(EstimationProfile{}, 0.25, 2024);
  const auto& cal = default_calibration();
  CHECK(fit.mzi_gamma_rel_std == doctest::Approx(cal.mzi_gamma_rel_std).epsilon(0.05));
  CHECK(fit.p_sys_std == doctest::Approx(cal.p_sys_std).epsilon(0.05));
  CHECK(fit.n_init_std == doctest::Approx(cal.n_init_std).epsilon(0.05));
  CHECK(fit.mzi_phase_std == doctest::Approx(kPhaseToGammaSpread * fit.mzi_gamma_rel_std));
}

TEST_CASE("device sampling contract") {
  auto zero = sample_device(8, kIrisSpec, 0.0, 10.0);
  for (const auto& l : zero.layers) {
    CHECK(l.p_sys.isZero());
    CHECK(l.n_init.isZero());
  }
  CHECK(sample_device(8, kIrisSpec, 1.0, 10.0) == sample_device(8, kIrisSpec, 1.0, 10.0));
  CHECK(hash_device(sample_device(8, kIrisSpec, 1.0, 10.0)) ==
        hash_device(sample_device(8, kIrisSpec, 1.0, 10.0)));
  CHECK_THROWS_AS(sample_device(8, kIrisSpec, -1.0, 10.0), ParameterError);

  const auto a = sample_device(1, kIrisSpec, 1.0, 10.0);
  const auto b = sample_device(2, kIrisSpec, 1.0, 10.0);
  CHECK(a.layers[0].p_sys != b.layers[0].p_sys);

  // Sample statistics over 200 devices against the configured spreads.
  const NetworkSpec wide{{16, 32, 10}};
  const auto& cal = default_calibration();
  double gain2 = 0.0, off2 = 0.0;
  long n = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    auto d = sample_device(500 + s, wide, 1.0, INFINITY);
    gain2 += d.layers[0].p_sys.cast<double>().squaredNorm();
    off2 += d.layers[0].n_init.cast<double>().squaredNorm();
    n += d.layers[0].p_sys.size();
  }
  CHECK(std::sqrt(gain2 / n) == doctest::Approx(cal.p_sys_std).epsilon(0.10));
  CHECK(std::sqrt(off2 / n) ==
        doctest::Approx(cal.n_init_std * kMidRangeIntensity * std::sqrt(17.0)).epsilon(0.10));
}

TEST_CASE("layer distortion structure") {
  std::mt19937_64 rng(12);
  const NetworkSpec spec{{5, 4, 3}, ActivationKind::identity, ActivationKind::identity, false};
  auto params = random_params(spec, rng, 1.0);
  Mr x = uniform(7, 5, rng);

  auto dev = sample_device(3, spec, 0.0, INFINITY);
  Mr digital = layer_transform(params.layers[0], x);
  CHECK(physical_layer_forward(dev, 0, spec, params.layers[0], x, nullptr) == digital);

  dev.layers[0].p_sys.setConstant(Real(0.1));
  Mr scaled = physical_net_output(dev, 0, spec, params.layers[0], x, nullptr);
  CHECK((scaled - Real(1.1) * digital).cwiseAbs().maxCoeff() < 1e-5);

  dev.layers[0].n_init.setConstant(Real(0.2));
  Mr shifted = physical_net_output(dev, 0, spec, params.layers[0], x, nullptr);
  Mr expected = (Real(1.1) * (digital.array() + Real(0.2))).matrix();
  CHECK((shifted - expected).cwiseAbs().maxCoeff() < 1e-5);

  // Systematic terms are frozen: noiseless passes repeat exactly.
  auto one_sigma = sample_device(5, spec, 1.0, 10.0);
  CHECK(physical_network_forward(one_sigma, spec, params, x, nullptr) ==
        physical_network_forward(one_sigma, spec, params, x, nullptr));
}

TEST_CASE("physical outputs stay inside the clip range") {
  std::mt19937_64 rng(14);
  const NetworkSpec spec{{6, 5, 4}, ActivationKind::identity, ActivationKind::identity, true};
  auto params = random_params(spec, rng, 3.0);
  auto dev = sample_device(15, spec, 2.0, 3.0);
  Rng noise(1);
  Mr a = uniform(50, 6, rng);
  for (int l = 0; l < spec.depth(); ++l) {
    a = physical_layer_forward(dev, l, spec, params.layers[l], a, &noise);
    CHECK(a.minCoeff() >= 0.0f);
    CHECK(a.maxCoeff() <= static_cast<Real>(spec.fan_in(l)));
  }
}

TEST_CASE("zero distortion physical forward equals the digital forward") {
  std::mt19937_64 rng(15);
  for (const auto& spec : {kIrisSpec, NetworkSpec{{8, 6, 5, 4}}}) {
    auto params = random_params(spec, rng, 1.0);
    auto dev = sample_device(2, spec, 0.0, INFINITY);
    Mr x = uniform(10, spec.inputs(), rng);
    Rng noise(3);
    Mr phys = physical_network_forward(dev, spec, params, x, &noise);
    Mr dig = forward(spec, params, x).prediction();
    CHECK((phys - dig).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("encapsulated forward exposes only the output layer") {
  static_assert(std::is_same_v<decltype(physical_network_forward(
                                   std::declval<const DeviceModel&>(), std::declval<const NetworkSpec&>(),
                                   std::declval<const ParamSet<Real>&>(), std::declval<const Mr&>(),
                                   nullptr)),
                               Mr>);
  std::mt19937_64 rng(16);
  for (const auto& spec : {kIrisSpec, NetworkSpec{{8, 4, 4}}, NetworkSpec{{12, 9, 7, 6, 5}}}) {
    auto params = random_params(spec, rng, 1.0);
    auto dev = sample_device(7, spec, 1.0, 10.0);
    Rng noise(4);
    Mr out = physical_network_forward(dev, spec, params, uniform(3, spec.inputs(), rng), &noise);
    CHECK(out.cols() == spec.outputs());
    CHECK(out.rows() == 3);
  }
}

TEST_CASE("one sigma device changes the output") {
  std::mt19937_64 rng(17);
  auto params = random_params(kIrisSpec, rng, 4.0);
  auto dev = sample_device(11, kIrisSpec, 1.0, INFINITY);
  Mr x = uniform(40, 4, rng);
  Mr phys = physical_network_forward(dev, kIrisSpec, params, x, nullptr);
  Mr dig = forward(kIrisSpec, params, x).prediction();
  CHECK((phys - dig).cwiseAbs().mean() > 0.0);

  PhysicalOptions comp{FidelityMode::component, 4.0, true};
  Mr phys_c = physical_network_forward(dev, kIrisSpec, params, x, nullptr, comp);
  CHECK((phys_c - dig).cwiseAbs().mean() > 0.0);
}

TEST_CASE("component mode on a perfect device reproduces weights up to quantization") {
  std::mt19937_64 rng(18);
  auto params = random_params(kIrisSpec, rng, 4.0);
  auto dev = sample_device(1, kIrisSpec, 0.0, INFINITY);
  PhysicalOptions comp{FidelityMode::component, 4.0, true};
  for (int l = 0; l < kIrisSpec.depth(); ++l) {
    auto r = realized_layer(dev, l, params.layers[l], comp);
    // Worst transmission gap of the 100-level voltage grid is near the
    // middle of the branch: about pi / 99 in phase, so 4 * pi / 99 * 2 / 2.
    const double bound = 4.0 * std::numbers::pi / 99.0;
    CHECK((r.weight - params.layers[l].weight).cwiseAbs().maxCoeff() <= bound);
    CHECK((r.bias - params.layers[l].bias).cwiseAbs().maxCoeff() <= bound);
  }
  PhysicalOptions transform;
  CHECK(realized_layer(dev, 0, params.layers[0], transform).weight == params.layers[0].weight);
}

TEST_CASE("empirical SNR of the random term") {
  const NetworkSpec spec{{6, 5}, ActivationKind::identity, ActivationKind::identity, false};
  std::mt19937_64 rng(19);
  auto params = random_params(spec, rng, 1.0);
  auto dev = sample_device(6, spec, 0.0, 10.0);
  Mr x = uniform(8, 6, rng);
  Mr clean = physical_net_output(dev, 0, spec, params.layers[0], x, nullptr);
  Rng noise(20);
  double signal = 0.0, err = 0.0;
  for (int pass = 0; pass < 10000; ++pass) {
    Mr noisy = physical_net_output(dev, 0, spec, params.layers[0], x, &noise);
    signal += clean.cast<double>().squaredNorm();
    err += (noisy - clean).cast<double>().squaredNorm();
  }
  CHECK(10.0 * std::log10(signal / err) == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("intermediate probe") {
  std::mt19937_64 rng(21);
  const NetworkSpec spec{{5, 6, 4, 3}};
  auto params = random_params(spec, rng, 1.0);
  auto dev = sample_device(2, spec, 0.0, INFINITY);
  Mr x = uniform(4, 5, rng);
  Rng noise(1);
  auto probe = probe_intermediate(dev, spec, params, x, &noise, INFINITY);
  auto rec = forward(spec, params, x);
  CHECK(probe.scalars_per_sample() == spec.neurons());
  for (int l = 0; l < spec.depth(); ++l)
    CHECK((probe.activations[l] - rec.activations[l + 1]).cwiseAbs().maxCoeff() <= 1e-9);

  auto p1 = probe_intermediate(dev, spec, params, x, &noise, 10.0);
  auto p2 = probe_intermediate(dev, spec, params, x, &noise, 10.0);
  CHECK(p1.activations[0] != p2.activations[0]);
}

TEST_CASE("tiling plans") {
  auto two = plan_tiling(8, 4, 4);
  REQUIRE(two.tiles.size() == 2);
  for (const auto& t : two.tiles) {
    CHECK(t.rows == 4);
    CHECK(t.cols == 4);
  }
  CHECK(plan_tiling(4, 4, 4).tiles.size() == 1);

  auto six = plan_tiling(10, 7, 4);
  CHECK(six.tiles.size() == 6);
  std::vector<int> cover(70, 0);
  for (const auto& t : six.tiles) {
    CHECK(t.rows <= 4);
    CHECK(t.cols <= 4);
    for (int r = t.row0; r < t.row0 + t.rows; ++r)
      for (int c = t.col0; c < t.col0 + t.cols; ++c) ++cover[r * 7 + c];
  }
  CHECK(std::all_of(cover.begin(), cover.end(), [](int k) { return k == 1; }));
  CHECK_THROWS_AS(plan_tiling(4, 4, 0), ParameterError);

  // Summing tile partial products reproduces the full connection.
  std::mt19937_64 rng(22);
  Mr w = uniform(10, 7, rng, -1, 1);
  Mr x = uniform(5, 7, rng);
  Mr acc = Mr::Zero(5, 10);
  for (const auto& t : six.tiles)
    acc.middleCols(t.row0, t.rows) +=
        x.middleCols(t.col0, t.cols) * w.block(t.row0, t.col0, t.rows, t.cols).transpose();
  CHECK((acc - x * w.transpose()).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("tiled device shares variance within a PPM") {
  const NetworkSpec spec{{8, 4, 4}, ActivationKind::sigmoid_like};
  DeviceOptions opts;
  opts.ppm_dim = 4;
  // Cells on one PPM correlate; cells on different PPMs do not.
  double same = 0.0, cross = 0.0, var = 0.0;
  for (std::uint64_t s = 0; s < 400; ++s) {
    auto d = sample_device(s, spec, 1.0, INFINITY, opts);
    const auto& g = d.layers[0].mzi_gamma;
    same += double(g(0, 0)) * g(1, 1);
    cross += double(g(0, 0)) * g(1, 5);
    var += double(g(0, 0)) * g(0, 0);
  }
  CHECK(same / var == doctest::Approx(0.5).epsilon(0.4));
  CHECK(std::abs(cross / var) < 0.2);
}

TEST_CASE("perturbation events") {
  auto dev = sample_device(9, kIrisSpec, 1.0, 10.0);
  CHECK(inject_perturbation(dev, 0.0, 5) == dev);
  auto shocked = inject_perturbation(dev, 1.0, 5);
  CHECK_FALSE(shocked == dev);
  CHECK(shocked == inject_perturbation(dev, 1.0, 5));
  CHECK(hash_device(shocked) != hash_device(dev));
}

TEST_CASE("device file round trip") {
  DeviceOptions opts;
  opts.ppm_dim = 4;
  auto dev = sample_device(31, NetworkSpec{{8, 4, 4}}, 1.5, 12.0, opts);
  const auto path = temp_file("device.bin");
  save_device(dev, path);
  auto back = load_device(path);
  CHECK(back == dev);
  CHECK(hash_device(back) == hash_device(dev));

  {
    std::ifstream in(path, std::ios::binary);
    std::string magic(8, '\0');
    in.read(magic.data(), 8);
    CHECK(magic == "ASYTDEV1");
  }
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 3);
  CHECK_THROWS_AS(load_device(path), IoError);
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTADEVICE0000000000000000";
  }
  CHECK_THROWS_AS(load_device(path), FormatError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_device(path), IoError);
}

TEST_CASE("device must match the network") {
  auto dev = sample_device(1, kIrisSpec, 1.0, 10.0);
  const NetworkSpec other{{4, 5, 3}};
  auto params = ParamSet<Real>::zeros(other);
  CHECK_THROWS_AS(physical_network_forward(dev, other, params, Mr::Zero(1, 4), nullptr), ConsistencyError);
}
