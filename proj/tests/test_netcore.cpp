#include "doctest.h"

#include <cmath>
#include <random>

#include "asyt/netcore.hpp"

using namespace asyt;

namespace {

using Md = Matrix<double>;

NetworkSpec random_spec(std::mt19937_64& rng, ActivationKind hidden, bool clip) {
  std::uniform_int_distribution<int> width(1, 8);
  std::uniform_int_distribution<int> depth(1, 3);
  NetworkSpec spec;
  const int d = depth(rng);
  spec.layer_sizes.push_back(width(rng));
  for (int i = 0; i < d; ++i) spec.layer_sizes.push_back(std::max(2, width(rng) * 3 / 4));
  spec.hidden_activation = hidden;
  spec.clip_to_fan_in = clip;
  return spec;
}

ParamSet<double> random_params(const NetworkSpec& spec, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  auto p = ParamSet<double>::zeros(spec);
  for (auto& layer : p.layers) {
    layer.weight = layer.weight.unaryExpr([&](double) { return u(rng); });
    layer.bias = layer.bias.unaryExpr([&](double) { return u(rng) + 0.5; });
  }
  return p;
}

Md random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return Md::NullaryExpr(r, c, [&]() { return u(rng); });
}

double loss_of(const NetworkSpec& spec, const ParamSet<double>& p, const Md& x, const Md& y) {
  return cross_entropy_loss(forward(spec, p, x).prediction(), y);
}

// Smallest distance of any hidden or output net value from a kink.
double kink_margin(const NetworkSpec& spec, const ParamSet<double>& p, const Md& x) {
  auto rec = forward(spec, p, x);
  double m = 1e9;
  for (int l = 0; l < spec.depth(); ++l) {
    const auto& z = rec.pre_activations[l];
    for (double v : z.reshaped()) {
      m = std::min(m, std::abs(v));
      if (spec.clip_to_fan_in) m = std::min(m, std::abs(v - spec.fan_in(l)));
    }
  }
  return m;
}

}  // namespace

TEST_CASE("identity layer hand values") {
  NetworkSpec spec{{1, 1}, ActivationKind::identity, ActivationKind::identity, false};
  ParamSet<double> p = ParamSet<double>::zeros(spec);
  p.layers[0].weight(0, 0) = 1.0;
  Md x(1, 1);
  x << 2.0;
  auto rec = forward(spec, p, x);
  CHECK(rec.pre_activations[0](0, 0) == 2.0);
  CHECK(rec.prediction()(0, 0) == 2.0);

  // Squared error against 0: dL/dW = delta * a = 2 * 2.
  Md y = Md::Zero(1, 1);
  auto g = backprop(spec, p, rec, output_delta(rec.prediction(), y));
  CHECK(g.layers[0].weight(0, 0) == doctest::Approx(4.0));
  CHECK(squared_error_loss(rec.prediction(), y) == doctest::Approx(2.0));
}

TEST_CASE("softmax values") {
  Md z = Md::Zero(1, 2);
  Md a = softmax_rows(z);
  CHECK(a(0, 0) == doctest::Approx(0.5));
  CHECK(a(0, 1) == doctest::Approx(0.5));

  std::mt19937_64 rng(5);
  Md big = random_matrix(200, 7, rng, -300.0, 300.0);
  Md s = softmax_rows(big);
  for (Eigen::Index r = 0; r < s.rows(); ++r) CHECK(std::abs(s.row(r).sum() - 1.0) < 1e-6);
}

TEST_CASE("random net outputs are distributions") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    NetworkSpec spec{{5, 6, 4, 3}, ActivationKind::relu, ActivationKind::softmax, true};
    auto p = random_params(spec, rng, 1.0);
    auto out = forward(spec, p, random_matrix(9, 5, rng, 0.0, 1.0)).prediction();
    for (Eigen::Index r = 0; r < out.rows(); ++r) CHECK(std::abs(out.row(r).sum() - 1.0) < 1e-6);
  }
}

TEST_CASE("loss values") {
  Md y(1, 4);
  y << 0, 0, 1, 0;
  CHECK(cross_entropy_loss(y, y) <= 1e-10);
  Md uniform = Md::Constant(1, 4, 0.25);
  CHECK(cross_entropy_loss(uniform, y) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
  Md p2(1, 2), y2(1, 2);
  p2 << 0.7, 0.3;
  y2 << 1, 0;
  CHECK(cross_entropy_loss(p2, y2) == doctest::Approx(-std::log(0.7)).epsilon(1e-9));
  CHECK_THROWS_AS(cross_entropy_loss(p2, y), DimensionError);
}

TEST_CASE("output delta") {
  Md y(1, 2), p(1, 2);
  y << 1, 0;
  p << 0.5, 0.5;
  CHECK(output_delta(y, y).isZero());
  Md d = output_delta(p, y);
  CHECK(d(0, 0) == doctest::Approx(-0.5));
  CHECK(d(0, 1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(output_delta(p, Md(2, 2)), DimensionError);
}

TEST_CASE("output delta matches finite differences of the loss in z") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int b = 3, k = 4;
    Md z = random_matrix(b, k, rng, -2.0, 2.0);
    std::vector<int> labels;
    for (int i = 0; i < b; ++i) labels.push_back(static_cast<int>(rng() % k));
    Md y = one_hot_matrix<double>(labels, k);
    Md delta = output_delta(softmax_rows(z), y);
    const double h = 1e-6;
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < k; ++j) {
        Md zp = z, zm = z;
        zp(i, j) += h;
        zm(i, j) -= h;
        const double fd = (cross_entropy_loss(softmax_rows(zp), y) -
                           cross_entropy_loss(softmax_rows(zm), y)) / (2 * h);
        CHECK(std::abs(fd - delta(i, j)) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
  }
}

TEST_CASE("zero output error gives zero gradients") {
  std::mt19937_64 rng(2);
  NetworkSpec spec{{4, 4, 3}};
  auto p = random_params(spec, rng, 1.0);
  Md x = random_matrix(5, 4, rng, 0.0, 1.0);
  auto rec = forward(spec, p, x);
  auto g = backprop(spec, p, rec, Md(Md::Zero(5, 3)));
  for (const auto& layer : g.layers) {
    CHECK(layer.weight.isZero());
    CHECK(layer.bias.isZero());
  }
}

TEST_CASE("backprop agrees with central finite differences on random nets") {
  std::mt19937_64 rng(1234);
  const ActivationKind kinds[] = {ActivationKind::relu, ActivationKind::sigmoid_like,
                                  ActivationKind::tanh_saturating, ActivationKind::identity};
  int nets = 0;
  double worst = 0.0;
  while (nets < 50) {
    const auto kind = kinds[nets % 4];
    NetworkSpec spec = random_spec(rng, kind, nets % 3 != 0);
    auto p = random_params(spec, rng, 1.0);
    Md x = random_matrix(4, spec.inputs(), rng, 0.0, 1.0);
    std::vector<int> labels;
    for (int i = 0; i < 4; ++i) labels.push_back(static_cast<int>(rng() % spec.outputs()));
    Md y = one_hot_matrix<double>(labels, spec.outputs());
    // Finite differences are meaningless across a kink; redraw instead.
    if (kink_margin(spec, p, x) < 1e-3) continue;
    auto rec = forward(spec, p, x);
    auto g = backprop(spec, p, rec, output_delta(rec.prediction(), y));

    const double h = 1e-6;
    for (int l = 0; l < spec.depth(); ++l) {
      auto check_entry = [&](double& slot, double analytic) {
        const double keep = slot;
        slot = keep + h;
        const double up = loss_of(spec, p, x, y);
        slot = keep - h;
        const double down = loss_of(spec, p, x, y);
        slot = keep;
        const double fd = (up - down) / (2 * h);
        const double err = std::abs(fd - analytic) / std::max(1.0, std::abs(fd) + std::abs(analytic));
        worst = std::max(worst, err);
      };
      auto& layer = p.layers[l];
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i)
        check_entry(layer.weight.data()[i], g.layers[l].weight.data()[i]);
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
        check_entry(layer.bias.data()[i], g.layers[l].bias.data()[i]);
    }
    ++nets;
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("clip rule") {
  Md z(1, 3);
  z << 5.0, -0.3, 2.5;
  Md c = clip_net_output(z, 4);
  CHECK(c(0, 0) == 4.0);
  CHECK(c(0, 1) == 0.0);
  CHECK(c(0, 2) == 2.5);

  std::mt19937_64 rng(8);
  Md r = random_matrix(30, 30, rng, -10.0, 10.0);
  CHECK(clip_net_output(clip_net_output(r, 3), 3) == clip_net_output(r, 3));
}

TEST_CASE("identity network is linear without clipping") {
  std::mt19937_64 rng(4);
  NetworkSpec spec{{5, 7, 3}, ActivationKind::identity, ActivationKind::identity, false};
  auto p = random_params(spec, rng, 1.0);
  for (auto& layer : p.layers) layer.bias.setZero();
  Md x = random_matrix(3, 5, rng, -1.0, 1.0);
  Md y = random_matrix(3, 5, rng, -1.0, 1.0);
  const double a = 0.7, b = -1.3;
  Md lhs = forward(spec, p, Md(a * x + b * y)).prediction();
  Md rhs = a * forward(spec, p, x).prediction() + b * forward(spec, p, y).prediction();
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward and backprop are pure") {
  std::mt19937_64 rng(6);
  NetworkSpec spec{{4, 5, 3}};
  auto p = random_params(spec, rng, 1.0);
  Md x = random_matrix(6, 4, rng, 0.0, 1.0);
  Md y = one_hot_matrix<double>({0, 1, 2, 0, 1, 2}, 3);
  auto r1 = forward(spec, p, x);
  auto r2 = forward(spec, p, x);
  CHECK(r1.prediction() == r2.prediction());
  auto g1 = backprop(spec, p, r1, output_delta(r1.prediction(), y));
  auto g2 = backprop(spec, p, r2, output_delta(r2.prediction(), y));
  CHECK(g1 == g2);
}

TEST_CASE("shape and value errors") {
  NetworkSpec spec{{4, 3}};
  auto p = ParamSet<double>::zeros(spec);
  CHECK_THROWS_AS(forward(spec, p, Md(Md::Zero(2, 5))), DimensionError);
  Md bad = Md::Zero(1, 4);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(forward(spec, p, bad), NumericError);
  NetworkSpec wrong{{4, 2}};
  CHECK_THROWS_AS(forward(wrong, p, Md(Md::Zero(1, 4))), DimensionError);
  NetworkSpec soft_hidden{{4, 4, 3}, ActivationKind::softmax};
  CHECK_THROWS_AS(soft_hidden.validate(), DimensionError);
  CHECK_THROWS_AS(one_hot_matrix<double>({3}, 3), ParameterError);
}

TEST_CASE("activation shapes") {
  Md z(1, 3);
  z << 0.0, 2.0, 4.0;
  Md s = apply_activation(ActivationKind::sigmoid_like, z, 4);
  CHECK(s(0, 0) == doctest::Approx(0.0));
  CHECK(s(0, 1) == doctest::Approx(0.5));
  CHECK(s(0, 2) == doctest::Approx(1.0));
  Md t = apply_activation(ActivationKind::tanh_saturating, z, 4);
  CHECK(t(0, 2) == doctest::Approx(4.0 * std::tanh(1.0)));
  Md r = apply_activation(ActivationKind::relu, Md(-z), 4);
  CHECK(r.isZero());
  CHECK(parse_activation(to_string(ActivationKind::tanh_saturating)) ==
        ActivationKind::tanh_saturating);
}
