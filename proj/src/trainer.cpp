#include "asyt/trainer.hpp"

#include <chrono>
#include <cmath>

#include "asyt/binary_io.hpp"
#include "asyt/diagnostics.hpp"
#include "asyt/errors.hpp"
#include "asyt/hash.hpp"

namespace asyt {

namespace {

constexpr std::string_view kTraceMagic = "ASYTTRC1";
constexpr std::uint32_t kTraceVersion = 1;

// Evaluation streams live far from the per-step stream indices.
constexpr std::uint64_t kEvalStreamBase = 1u << 20;

void scale(GradSet<Real>& g, Real s) {
  for (auto& l : g.layers) {
    l.weight *= s;
    l.bias *= s;
  }
}

/// Batch-summed gradient of the loss for an output error measured on
/// `prediction`, backpropagated through `record` and `params`.
GradSet<Real> summed_grad(const NetworkSpec& spec, const ParamSet<Real>& params,
                          const ForwardRecord<Real>& record, const Matrix<Real>& prediction,
                          const Matrix<Real>& targets) {
  GradSet<Real> g = backprop(spec, params, record, output_delta(prediction, targets));
  scale(g, static_cast<Real>(prediction.rows()));
  return g;
}

void apply_update(ParamSet<Real>& params, const GradSet<Real>& grads, OptimizerState& opt,
                  const TrainConfig& config) {
  optimizer_apply(params, grads, config.learning_rate, opt, config);
  bound_params(params, config.param_bound);
}

void fill_alignment(StepStats& stats, const GradSet<Real>& pseudo) {
  const auto fd = stats.grad_dig.flatten();
  const auto fp = pseudo.flatten();
  if (fd.norm() == 0 || fp.norm() == 0) return;
  stats.angle_deg = alignment_angle(fd, fp);
  stats.magnitude_ratio = magnitude_ratio(stats.grad_dig, pseudo);
  stats.layer_angle_deg = layer_angles(stats.grad_dig, pseudo);
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::asyt: return "asyt";
    case Method::ideal_bp: return "ideal_bp";
    case Method::in_silico_bp: return "in_silico_bp";
    case Method::pseudo_ipbp: return "pseudo_ipbp";
    case Method::pat: return "pat";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::asyt, Method::ideal_bp, Method::in_silico_bp, Method::pseudo_ipbp, Method::pat})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::gd ? "gd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "gd") return OptimizerKind::gd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

bool evaluates_physically(Method method) { return method != Method::ideal_bp; }

bool uses_intermediate_access(Method method) { return method == Method::pat; }

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be positive");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (m_w1 < 0 || m_w1 > 1 || m_w2 < 0 || m_w2 > 1) throw ConfigError("m_w1, m_w2 must lie in [0, 1]");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1) || !(adam_epsilon > 0))
    throw ConfigError("invalid adam constants");
  if (param_bound < 0) throw ConfigError("param_bound must be >= 0");
  if (!(init_scale > 0)) throw ConfigError("init_scale must be positive");
  if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
  if (physical.weight_range <= 0) throw ConfigError("weight_range must be positive");
  if (perturbation.at_step >= 0 && perturbation.magnitude < 0)
    throw ConfigError("perturbation magnitude must be >= 0");
}

// ---------------------------------------------------------------------------
// Optimizer

void optimizer_apply(ParamSet<Real>& params, const GradSet<Real>& grads, double lr,
                     OptimizerState& state, const TrainConfig& config) {
  check_matching(params, grads);
  if (!(lr > 0)) throw ParameterError("learning rate must be positive");
  const Real a = static_cast<Real>(lr);
  if (config.optimizer == OptimizerKind::gd) {
    for (std::size_t l = 0; l < params.size(); ++l) {
      params.layers[l].weight -= a * grads.layers[l].weight;
      params.layers[l].bias -= a * grads.layers[l].bias;
    }
    ++state.steps;
    return;
  }
  if (state.m.size() == 0) {
    state.m = grads;
    state.v = grads;
    for (std::size_t l = 0; l < grads.size(); ++l) {
      state.m.layers[l].weight.setZero();
      state.m.layers[l].bias.setZero();
      state.v.layers[l].weight.setZero();
      state.v.layers[l].bias.setZero();
    }
  }
  ++state.steps;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const Real c1 = static_cast<Real>(1.0 - std::pow(b1, static_cast<double>(state.steps)));
  const Real c2 = static_cast<Real>(1.0 - std::pow(b2, static_cast<double>(state.steps)));
  const Real eps = static_cast<Real>(config.adam_epsilon);
  auto step = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = Real(b1) * m + Real(1 - b1) * g;
    v = Real(b2) * v + Real(1 - b2) * g.cwiseProduct(g);
    p.array() -= a * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.size(); ++l) {
    step(params.layers[l].weight, state.m.layers[l].weight, state.v.layers[l].weight, grads.layers[l].weight);
    step(params.layers[l].bias, state.m.layers[l].bias, state.v.layers[l].bias, grads.layers[l].bias);
  }
}

void bound_params(ParamSet<Real>& params, double bound) {
  if (bound <= 0) return;
  const Real b = static_cast<Real>(bound);
  for (auto& l : params.layers) {
    l.weight = l.weight.cwiseMax(-b).cwiseMin(b);
    l.bias = l.bias.cwiseMax(-b).cwiseMin(b);
  }
}

// ---------------------------------------------------------------------------
// State and steps

ParamSet<Real> init_params(const NetworkSpec& spec, std::uint64_t seed, double output_bias,
                           double hidden_bias, double scale) {
  spec.validate();
  if (!(scale > 0)) throw ConfigError("init scale must be positive");
  ParamSet<Real> p = ParamSet<Real>::zeros(spec);
  Rng rng(seed);
  for (int l = 0; l < spec.depth(); ++l) {
    const double bound = scale * std::sqrt(6.0 / spec.fan_in(l));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto& w = p.layers[static_cast<std::size_t>(l)].weight;
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<Real>(u(rng));
    p.layers[static_cast<std::size_t>(l)].bias.setConstant(static_cast<Real>(hidden_bias));
  }
  p.layers.back().bias.setConstant(static_cast<Real>(output_bias));
  return p;
}

TrainState init_state(const NetworkSpec& spec, const TrainConfig& config) {
  TrainState s;
  s.params_dig = init_params(spec, stream_seed(config.seed, Stream::init), config.output_bias_init,
                                config.hidden_bias_init, config.init_scale);
  bound_params(s.params_dig, config.param_bound);
  s.params_phy = s.params_dig;
  s.noise.seed(stream_seed(config.seed, Stream::noise));
  s.readout.seed(stream_seed(config.seed, Stream::readout));
  return s;
}

GradSet<Real> asyt_update(const GradSet<Real>& grad_dig, const GradSet<Real>& grad_pseudo,
                          double m_w1, double m_w2) {
  check_matching(grad_dig, grad_pseudo);
  const Real a = static_cast<Real>(m_w1), b = static_cast<Real>(m_w2);
  GradSet<Real> out = grad_dig;
  for (std::size_t l = 0; l < out.size(); ++l) {
    out.layers[l].weight = a * grad_dig.layers[l].weight + b * grad_pseudo.layers[l].weight;
    out.layers[l].bias = a * grad_dig.layers[l].bias + b * grad_pseudo.layers[l].bias;
  }
  return out;
}

StepStats asyt_step(TrainState& state, const TrainConfig& config, const NetworkSpec& spec,
                    const DeviceModel& device, const Batch& batch, const GradSet<Real>* traced) {
  StepStats stats;
  const auto record = forward(spec, state.params_dig, batch.features);
  const Matrix<Real> pred_phy =
      physical_network_forward(device, spec, state.params_phy, batch.features, &state.noise, config.physical);
  stats.loss_dig = loss(config.loss, record.prediction(), batch.targets);
  stats.loss_phy = loss(config.loss, pred_phy, batch.targets);

  if (traced) {
    check_matching(state.params_dig, *traced);
    stats.grad_dig = *traced;
  } else {
    stats.grad_dig = summed_grad(spec, state.params_dig, record, record.prediction(), batch.targets);
    stats.digital_backprop = true;
  }
  const GradSet<Real> pseudo = summed_grad(spec, state.params_dig, record, pred_phy, batch.targets);
  fill_alignment(stats, pseudo);

  const GradSet<Real> mixed = asyt_update(stats.grad_dig, pseudo, config.m_w1, config.m_w2);
  apply_update(state.params_dig, stats.grad_dig, state.opt_dig, config);
  apply_update(state.params_phy, mixed, state.opt_phy, config);
  ++state.step;
  return stats;
}

StepStats ideal_bp_step(TrainState& state, const TrainConfig& config, const NetworkSpec& spec,
                        const Batch& batch) {
  StepStats stats;
  const auto record = forward(spec, state.params_dig, batch.features);
  stats.loss_dig = loss(config.loss, record.prediction(), batch.targets);
  stats.loss_phy = stats.loss_dig;
  stats.grad_dig = summed_grad(spec, state.params_dig, record, record.prediction(), batch.targets);
  stats.digital_backprop = true;
  apply_update(state.params_dig, stats.grad_dig, state.opt_dig, config);
  state.params_phy = state.params_dig;
  ++state.step;
  return stats;
}

StepStats pseudo_ipbp_step(TrainState& state, const TrainConfig& config, const NetworkSpec& spec,
                           const DeviceModel& device, const Batch& batch) {
  StepStats stats;
  const auto record = forward(spec, state.params_phy, batch.features);
  const Matrix<Real> pred_phy =
      physical_network_forward(device, spec, state.params_phy, batch.features, &state.noise, config.physical);
  stats.loss_dig = loss(config.loss, record.prediction(), batch.targets);
  stats.loss_phy = loss(config.loss, pred_phy, batch.targets);
  const GradSet<Real> g = summed_grad(spec, state.params_phy, record, pred_phy, batch.targets);
  apply_update(state.params_phy, g, state.opt_phy, config);
  state.params_dig = state.params_phy;
  ++state.step;
  return stats;
}

StepStats pat_step(TrainState& state, const TrainConfig& config, const NetworkSpec& spec,
                   const DeviceModel& device, const Batch& batch) {
  StepStats stats;
  const ProbeResult probe = probe_intermediate(device, spec, state.params_phy, batch.features,
                                               &state.readout, config.readout_snr_db, config.physical);
  // Physical activations stand in for the digital ones; the slopes come
  // from the digital pre-activations of those physical inputs.
  ForwardRecord<Real> record;
  record.activations.push_back(batch.features);
  for (int l = 0; l < spec.depth(); ++l) {
    const auto li = static_cast<std::size_t>(l);
    record.pre_activations.push_back(layer_transform(state.params_phy.layers[li], record.activations[li]));
    record.activations.push_back(probe.activations[li]);
  }
  stats.loss_phy = loss(config.loss, record.prediction(), batch.targets);
  stats.loss_dig = stats.loss_phy;
  const GradSet<Real> g = summed_grad(spec, state.params_phy, record, record.prediction(), batch.targets);
  apply_update(state.params_phy, g, state.opt_phy, config);
  state.params_dig = state.params_phy;
  ++state.step;
  return stats;
}

// ---------------------------------------------------------------------------
// Evaluation

const EpochMetrics& TrainReport::final_metrics() const {
  for (auto it = epochs.rbegin(); it != epochs.rend(); ++it)
    if (it->evaluated) return *it;
  throw ConsistencyError("report has no evaluated epoch");
}

Evaluation evaluate_predictions(const Matrix<Real>& prediction, const std::vector<int>& labels,
                                int class_count, LossKind kind) {
  Evaluation e;
  if (labels.empty()) return e;
  e.loss = loss(kind, prediction, one_hot_matrix<Real>(labels, class_count));
  const auto guess = argmax_rows(prediction);
  long hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += guess[i] == labels[i];
  e.accuracy = static_cast<double>(hits) / static_cast<double>(labels.size());
  return e;
}

namespace {

constexpr Eigen::Index kEvalChunk = 600;

template <typename Fn>
Evaluation evaluate_chunked(const Dataset& data, int outputs, LossKind kind, Fn&& predict) {
  if (data.size() == 0) return {};
  Matrix<Real> pred(data.size(), outputs);
  for (Eigen::Index r = 0; r < data.size(); r += kEvalChunk) {
    const Eigen::Index n = std::min(kEvalChunk, data.size() - r);
    pred.middleRows(r, n) = predict(Matrix<Real>(data.features.middleRows(r, n)));
  }
  return evaluate_predictions(pred, data.labels, data.class_count, kind);
}

}  // namespace

Evaluation evaluate_digital(const NetworkSpec& spec, const ParamSet<Real>& params,
                            const Dataset& data, LossKind kind) {
  return evaluate_chunked(data, spec.outputs(), kind, [&](const Matrix<Real>& x) {
    return Matrix<Real>(forward(spec, params, x).prediction());
  });
}

Evaluation evaluate_physical(const NetworkSpec& spec, const DeviceModel& device,
                             const ParamSet<Real>& params, const Dataset& data, Rng& noise,
                             const PhysicalOptions& options, LossKind kind) {
  return evaluate_chunked(data, spec.outputs(), kind, [&](const Matrix<Real>& x) {
    return physical_network_forward(device, spec, params, x, &noise, options);
  });
}

// ---------------------------------------------------------------------------
// Traces

std::uint64_t schedule_hash(const TrainConfig& config, const Dataset& train) {
  Fnv1a h;
  h.value<std::int32_t>(config.epochs);
  for (int e = 0; e < config.epochs; ++e)
    h.value(BatchIterator(train, config.batch_size, stream_seed(config.seed, Stream::shuffle), e,
                          config.shuffle)
                .schedule_hash());
  return h.digest();
}

void save_trace(const UpdateTrace& trace, const NetworkSpec& spec, const std::filesystem::path& path) {
  if (trace.header.spec_hash != hash_spec(spec)) throw TraceCompatibilityError("trace recorded for another network");
  if (trace.header.learning_rates.size() != trace.steps.size())
    throw ConsistencyError("trace learning-rate schedule length differs from step count");
  BinaryWriter w;
  w.magic(kTraceMagic);
  w.put<std::uint32_t>(trace.header.version);
  w.put<std::uint64_t>(trace.header.spec_hash);
  w.put<std::uint64_t>(trace.header.init_hash);
  w.put<std::uint64_t>(trace.header.seed);
  w.put<std::uint64_t>(trace.steps.size());
  w.put<std::uint64_t>(trace.header.schedule_hash);
  for (double lr : trace.header.learning_rates) w.put<double>(lr);
  for (const auto& step : trace.steps) {
    check_params(spec, step);
    for (const auto& l : step.layers) {
      w.put_f32(l.weight);
      w.put_f32(l.bias.transpose());
    }
  }
  w.commit(path);
}

UpdateTrace load_trace(const std::filesystem::path& path, const NetworkSpec& spec) {
  BinaryReader r(path);
  r.expect_magic(kTraceMagic);
  UpdateTrace t;
  t.header.version = r.get<std::uint32_t>();
  if (t.header.version != kTraceVersion)
    throw FormatError(r.path() + ": unsupported trace version " + std::to_string(t.header.version));
  t.header.spec_hash = r.get<std::uint64_t>();
  if (t.header.spec_hash != hash_spec(spec))
    throw TraceCompatibilityError(r.path() + ": trace recorded for another network");
  t.header.init_hash = r.get<std::uint64_t>();
  t.header.seed = r.get<std::uint64_t>();
  const auto steps = r.get<std::uint64_t>();
  t.header.schedule_hash = r.get<std::uint64_t>();
  t.header.learning_rates.reserve(steps);
  for (std::uint64_t i = 0; i < steps; ++i) t.header.learning_rates.push_back(r.get<double>());
  t.steps.reserve(steps);
  for (std::uint64_t i = 0; i < steps; ++i) {
    GradSet<Real> g = ParamSet<Real>::zeros(spec);
    for (auto& l : g.layers) {
      l.weight = r.get_f32<Real>(l.weight.rows(), l.weight.cols());
      l.bias = r.get_f32<Real>(l.bias.size(), 1);
    }
    t.steps.push_back(std::move(g));
  }
  if (!r.at_end()) throw FormatError(r.path() + ": trailing bytes after trace body");
  return t;
}

void check_trace(const UpdateTrace& trace, const TrainConfig& config, const NetworkSpec& spec,
                 const Dataset& train) {
  const auto& h = trace.header;
  if (h.spec_hash != hash_spec(spec)) throw TraceCompatibilityError("trace recorded for another network");
  if (h.seed != config.seed) throw TraceCompatibilityError("trace recorded with another seed");
  ParamSet<Real> init = init_params(spec, stream_seed(config.seed, Stream::init), config.output_bias_init,
                                config.hidden_bias_init, config.init_scale);
  bound_params(init, config.param_bound);
  if (h.init_hash != hash_params(init))
    throw TraceCompatibilityError("trace recorded from other initial parameters");
  if (h.schedule_hash != schedule_hash(config, train))
    throw TraceCompatibilityError("trace recorded with another data order");
  const std::size_t expected =
      static_cast<std::size_t>(config.epochs) *
      BatchIterator(train, config.batch_size, 0, 0, false).batch_count();
  if (trace.steps.size() != expected || h.learning_rates.size() != expected)
    throw TraceCompatibilityError("trace step count differs from the configured run");
}

// ---------------------------------------------------------------------------
// Training loops

TrainOutput train(const TrainConfig& config, const NetworkSpec& spec, const DeviceModel& device,
                  const TrainTest& data, bool record, const UpdateTrace* replay) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  spec.validate();
  data.train.validate();
  if (data.train.dims() != spec.inputs()) throw DimensionError("dataset width differs from the network input");
  if (data.train.class_count != spec.outputs())
    throw DimensionError("dataset class count differs from the network output");
  const bool physical = evaluates_physically(config.method);
  const bool device_ok = device.spec_hash == hash_spec(spec);
  if (physical && !device_ok) throw ConsistencyError("device was sampled for another network");
  if (replay) {
    if (config.method != Method::asyt) throw ConfigError("trace replay drives AsyT only");
    check_trace(*replay, config, spec, data.train);
  }

  TrainOutput out;
  TrainState& state = out.state;
  state = init_state(spec, config);
  TrainReport& rep = out.report;
  rep.method = config.method;
  rep.spec = spec.describe();
  rep.spec_hash = hash_spec(spec);
  rep.device_hash = hash_device(device);
  rep.replayed = replay != nullptr;
  rep.intermediate_access = uses_intermediate_access(config.method);
  if (physical)
    rep.readout_scalars_per_sample = static_cast<int>(access_count(
        spec.neurons(), spec.outputs(),
        rep.intermediate_access ? AccessMode::truncated : AccessMode::encapsulated));

  if (record) {
    out.trace.emplace();
    out.trace->header.version = kTraceVersion;
    out.trace->header.spec_hash = rep.spec_hash;
    out.trace->header.init_hash = hash_params(state.params_dig);
    out.trace->header.seed = config.seed;
    out.trace->header.schedule_hash = schedule_hash(config, data.train);
  }

  DeviceModel live = device;
  TrainConfig active = config;
  const std::uint64_t shuffle_seed = stream_seed(config.seed, Stream::shuffle);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    BatchIterator it(data.train, config.batch_size, shuffle_seed, epoch, config.shuffle);
    double loss_sum = 0, angle_sum = 0, ratio_sum = 0;
    long aligned = 0;
    std::vector<double> layer_sum(static_cast<std::size_t>(spec.depth()), 0.0);
    for (std::size_t b = 0; b < it.batch_count(); ++b) {
      if (config.perturbation.at_step >= 0 && state.step == config.perturbation.at_step) {
        const Perturbation& ev = config.perturbation;
        if (ev.magnitude > 0) live = inject_perturbation(live, ev.magnitude, ev.seed);
        if (!std::isnan(ev.snr_db)) live.snr_db = ev.snr_db;
        if (!std::isnan(ev.readout_snr_db)) active.readout_snr_db = ev.readout_snr_db;
      }
      const Batch batch = it.batch(b);
      StepStats s;
      switch (config.method) {
        case Method::asyt: {
          const GradSet<Real>* traced =
              replay ? &replay->steps[static_cast<std::size_t>(state.step)] : nullptr;
          s = asyt_step(state, active, spec, live, batch, traced);
          break;
        }
        case Method::ideal_bp:
        case Method::in_silico_bp: s = ideal_bp_step(state, config, spec, batch); break;
        case Method::pseudo_ipbp: s = pseudo_ipbp_step(state, config, spec, live, batch); break;
        case Method::pat: s = pat_step(state, active, spec, live, batch); break;
      }
      if (record) {
        out.trace->steps.push_back(s.grad_dig);
        out.trace->header.learning_rates.push_back(config.learning_rate);
      }
      const bool uses_phy_in_training = config.method == Method::asyt ||
                                        config.method == Method::pseudo_ipbp ||
                                        config.method == Method::pat;
      loss_sum += uses_phy_in_training ? s.loss_phy : s.loss_dig;
      if (uses_phy_in_training) rep.physical_forwards += batch.features.rows();
      if (s.digital_backprop) ++rep.digital_backprops;
      if (std::isfinite(s.angle_deg)) {
        angle_sum += s.angle_deg;
        ratio_sum += s.magnitude_ratio;
        for (std::size_t l = 0; l < layer_sum.size(); ++l) layer_sum[l] += s.layer_angle_deg[l];
        ++aligned;
      }
    }
    m.train_loss = loss_sum / static_cast<double>(it.batch_count());
    if (aligned > 0) {
      m.angle_deg = angle_sum / static_cast<double>(aligned);
      m.magnitude_ratio = ratio_sum / static_cast<double>(aligned);
      for (double v : layer_sum) m.layer_angle_deg.push_back(v / static_cast<double>(aligned));
    }

    if ((epoch + 1) % config.eval_interval == 0 || epoch + 1 == config.epochs) {
      m.evaluated = true;
      const std::uint64_t eval_base = kEvalStreamBase + 4 * static_cast<std::uint64_t>(epoch);
      Rng ev_train(stream_seed(config.seed, Stream::noise, eval_base));
      Rng ev_test(stream_seed(config.seed, Stream::noise, eval_base + 1));
      Rng ev_insilico(stream_seed(config.seed, Stream::noise, eval_base + 2));
      if (config.eval_train) m.digital_train = evaluate_digital(spec, state.params_dig, data.train, config.loss);
      m.digital_test = evaluate_digital(spec, state.params_dig, data.test, config.loss);
      if (physical) {
        if (config.eval_train)
          m.train = evaluate_physical(spec, live, state.params_phy, data.train, ev_train, config.physical, config.loss);
        m.test = evaluate_physical(spec, live, state.params_phy, data.test, ev_test, config.physical, config.loss);
      } else {
        m.train = m.digital_train;
        m.test = m.digital_test;
      }
      if (device_ok)
        m.in_silico_test = evaluate_physical(spec, live, state.params_dig, data.test, ev_insilico,
                                             config.physical, config.loss);
    }
    rep.epochs.push_back(std::move(m));
  }
  rep.steps = state.step;
  rep.params_dig_hash = hash_params(state.params_dig);
  rep.params_phy_hash = hash_params(state.params_phy);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

UpdateTrace record_trace(const TrainConfig& config, const NetworkSpec& spec, const TrainTest& data) {
  TrainConfig digital = config;
  digital.method = Method::ideal_bp;
  digital.eval_interval = config.epochs;
  DeviceModel none;  // never touched by a digital run
  return std::move(*train(digital, spec, none, data, true).trace);
}

TrainOutput replay_train(const UpdateTrace& trace, const TrainConfig& config,
                         const NetworkSpec& spec, const DeviceModel& device, const TrainTest& data) {
  TrainConfig c = config;
  c.method = Method::asyt;
  if (!trace.header.learning_rates.empty()) {
    for (double lr : trace.header.learning_rates)
      if (lr != trace.header.learning_rates.front())
        throw TraceCompatibilityError("replay supports a constant learning rate only");
    c.learning_rate = trace.header.learning_rates.front();
  }
  return train(c, spec, device, data, false, &trace);
}

TrainReport in_silico_bp_deploy(const NetworkSpec& spec, const DeviceModel& device,
                                const ParamSet<Real>& params_dig, const TrainTest& data,
                                const TrainConfig& config) {
  check_params(spec, params_dig);
  if (device.spec_hash != hash_spec(spec)) throw ConsistencyError("device was sampled for another network");
  TrainReport rep;
  rep.method = Method::in_silico_bp;
  rep.spec = spec.describe();
  rep.spec_hash = hash_spec(spec);
  rep.device_hash = hash_device(device);
  rep.params_dig_hash = rep.params_phy_hash = hash_params(params_dig);
  rep.readout_scalars_per_sample = spec.outputs();
  EpochMetrics m;
  m.evaluated = true;
  Rng ev_train(stream_seed(config.seed, Stream::noise, kEvalStreamBase - 2));
  Rng ev_test(stream_seed(config.seed, Stream::noise, kEvalStreamBase - 1));
  m.digital_train = evaluate_digital(spec, params_dig, data.train, config.loss);
  m.digital_test = evaluate_digital(spec, params_dig, data.test, config.loss);
  m.train = evaluate_physical(spec, device, params_dig, data.train, ev_train, config.physical, config.loss);
  m.test = evaluate_physical(spec, device, params_dig, data.test, ev_test, config.physical, config.loss);
  m.in_silico_test = m.test;
  m.train_loss = m.train.loss;
  rep.epochs.push_back(m);
  return rep;
}

}  // namespace asyt
