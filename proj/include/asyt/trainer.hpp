#pragma once

// Asymmetrical training of an encapsulated physical network against its
// digital parallel model, the baselines it is compared with, and the
// digital-update trace used to amortize one digital run over many devices.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asyt/data.hpp"
#include "asyt/hardware.hpp"
#include "asyt/netcore.hpp"
#include "asyt/rng.hpp"

namespace asyt {

enum class Method { asyt, ideal_bp, in_silico_bp, pseudo_ipbp, pat };
enum class OptimizerKind { gd, adam };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

/// Methods whose reported accuracy comes from the physical system.
bool evaluates_physically(Method method);
/// Methods that read hidden-layer activations off the hardware.
bool uses_intermediate_access(Method method);

/// A mid-training event: a hard shift of the systematic distortion and,
/// optionally, a drop to a lower-fidelity noise regime (NaN keeps the
/// current SNR).
struct Perturbation {
  long at_step = -1;  // negative: no event
  double magnitude = 0.0;
  std::uint64_t seed = 0;
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  double readout_snr_db = std::numeric_limits<double>::quiet_NaN();
};

struct TrainConfig {
  Method method = Method::asyt;
  /// Step size per sample: updates use the batch-summed gradient, so the
  /// effective step on the batch-mean gradient is learning_rate * batch.
  double learning_rate = 1e-4;
  int epochs = 100;
  int batch_size = 600;
  double m_w1 = 0.5;
  double m_w2 = 0.5;
  OptimizerKind optimizer = OptimizerKind::gd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  bool shuffle = true;
  LossKind loss = LossKind::cross_entropy;

  /// He-uniform weights; the output bias starts positive so the clipped
  /// output logits are not all pinned at zero.
  double output_bias_init = 1.0;
  double hidden_bias_init = 0.0;
  /// Multiplies the He-uniform weight bound.
  double init_scale = 1.0;
  /// Symmetric bound applied to every parameter after each update
  /// (0 disables). Component-mode devices cannot realize |w| > weight_range.
  double param_bound = 0.0;

  PhysicalOptions physical{};
  /// Readout noise of the intermediate probes used by PAT.
  double readout_snr_db = std::numeric_limits<double>::infinity();

  int eval_interval = 1;  // evaluate every k epochs and after the last
  bool eval_train = true;
  Perturbation perturbation{};

  void validate() const;
};

// ---------------------------------------------------------------------------
// Optimizer

struct OptimizerState {
  ParamSet<Real> m;
  ParamSet<Real> v;
  long steps = 0;
};

/// gd: W <- W - lr * dW. adam: bias-corrected first/second moments.
void optimizer_apply(ParamSet<Real>& params, const GradSet<Real>& grads, double lr,
                     OptimizerState& state, const TrainConfig& config);

/// Clamp every parameter to [-bound, bound]; no-op for bound <= 0.
void bound_params(ParamSet<Real>& params, double bound);

// ---------------------------------------------------------------------------
// State and steps

struct TrainState {
  ParamSet<Real> params_dig;
  ParamSet<Real> params_phy;
  OptimizerState opt_dig;
  OptimizerState opt_phy;
  long step = 0;
  Rng noise;
  Rng readout;
};

ParamSet<Real> init_params(const NetworkSpec& spec, std::uint64_t seed, double output_bias,
                           double hidden_bias = 0.0, double scale = 1.0);
TrainState init_state(const NetworkSpec& spec, const TrainConfig& config);

/// m_w1 * grad_dig + m_w2 * grad_pseudo, layer by layer, biases included.
GradSet<Real> asyt_update(const GradSet<Real>& grad_dig, const GradSet<Real>& grad_pseudo,
                          double m_w1, double m_w2);

struct StepStats {
  double loss_dig = 0.0;
  double loss_phy = 0.0;
  /// Angle between the physical-error update and the digital update;
  /// NaN when either is zero or when the method has no digital update.
  double angle_deg = std::numeric_limits<double>::quiet_NaN();
  double magnitude_ratio = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> layer_angle_deg;
  GradSet<Real> grad_dig;  // the digital update applied this step (batch-summed)
  bool digital_backprop = false;
};

/// One AsyT step. With `traced`, the digital update is taken from the trace
/// instead of being backpropagated.
StepStats asyt_step(TrainState& state, const TrainConfig& config, const NetworkSpec& spec,
                    const DeviceModel& device, const Batch& batch,
                    const GradSet<Real>* traced = nullptr);
/// Digital-only BP on params_dig; params_phy mirrors it (deployment copy).
StepStats ideal_bp_step(TrainState& state, const TrainConfig& config, const NetworkSpec& spec,
                        const Batch& batch);
StepStats pseudo_ipbp_step(TrainState& state, const TrainConfig& config, const NetworkSpec& spec,
                           const DeviceModel& device, const Batch& batch);
StepStats pat_step(TrainState& state, const TrainConfig& config, const NetworkSpec& spec,
                   const DeviceModel& device, const Batch& batch);

// ---------------------------------------------------------------------------
// Reports

struct Evaluation {
  double loss = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;  // mean step loss of the reported system
  Evaluation train;         // reported system
  Evaluation test;
  Evaluation digital_train;
  Evaluation digital_test;
  Evaluation in_silico_test;  // params_dig deployed on the device
  double angle_deg = std::numeric_limits<double>::quiet_NaN();
  double magnitude_ratio = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> layer_angle_deg;
  bool evaluated = false;
};

struct TrainReport {
  Method method = Method::asyt;
  std::string spec;
  std::vector<EpochMetrics> epochs;
  std::uint64_t spec_hash = 0;
  std::uint64_t device_hash = 0;
  std::uint64_t params_dig_hash = 0;
  std::uint64_t params_phy_hash = 0;
  long steps = 0;
  long digital_backprops = 0;
  long physical_forwards = 0;
  /// Scalars read off the hardware per sample: P when encapsulated, 2M - P
  /// when every hidden layer is probed.
  int readout_scalars_per_sample = 0;
  bool intermediate_access = false;
  bool replayed = false;
  double wall_seconds = 0.0;

  const EpochMetrics& final_metrics() const;
  double final_train_accuracy() const { return final_metrics().train.accuracy; }
  double final_test_accuracy() const { return final_metrics().test.accuracy; }
};

/// Loss and argmax accuracy of a batch of predictions.
Evaluation evaluate_predictions(const Matrix<Real>& prediction, const std::vector<int>& labels,
                                int class_count, LossKind loss);
Evaluation evaluate_digital(const NetworkSpec& spec, const ParamSet<Real>& params,
                            const Dataset& data, LossKind loss);
Evaluation evaluate_physical(const NetworkSpec& spec, const DeviceModel& device,
                             const ParamSet<Real>& params, const Dataset& data, Rng& noise,
                             const PhysicalOptions& options, LossKind loss);

// ---------------------------------------------------------------------------
// Update traces

struct TraceHeader {
  std::uint32_t version = 1;
  std::uint64_t spec_hash = 0;
  std::uint64_t init_hash = 0;
  std::uint64_t seed = 0;
  std::uint64_t schedule_hash = 0;
  std::vector<double> learning_rates;  // one per step

  bool operator==(const TraceHeader&) const = default;
};

struct UpdateTrace {
  TraceHeader header;
  std::vector<GradSet<Real>> steps;

  std::size_t step_count() const { return steps.size(); }
  bool operator==(const UpdateTrace&) const = default;
};

void save_trace(const UpdateTrace& trace, const NetworkSpec& spec,
                const std::filesystem::path& path);
UpdateTrace load_trace(const std::filesystem::path& path, const NetworkSpec& spec);

/// Hash of every epoch's batch order for the config's seed and batch size.
std::uint64_t schedule_hash(const TrainConfig& config, const Dataset& train);

/// Throws TraceCompatibilityError unless the trace was recorded for this
/// spec, seed, initialization and data order.
void check_trace(const UpdateTrace& trace, const TrainConfig& config, const NetworkSpec& spec,
                 const Dataset& train);

// ---------------------------------------------------------------------------
// Training loops

struct TrainOutput {
  TrainReport report;
  TrainState state;
  std::optional<UpdateTrace> trace;
};

/// Runs config.method for config.epochs. `record` captures the digital
/// updates; `replay` substitutes them for the digital backprop (AsyT only).
TrainOutput train(const TrainConfig& config, const NetworkSpec& spec, const DeviceModel& device,
                  const TrainTest& data, bool record = false,
                  const UpdateTrace* replay = nullptr);

/// Digital-only run that records every digital update.
UpdateTrace record_trace(const TrainConfig& config, const NetworkSpec& spec, const TrainTest& data);

/// AsyT on `device` driven by a recorded trace; performs no digital backprop.
TrainOutput replay_train(const UpdateTrace& trace, const TrainConfig& config,
                         const NetworkSpec& spec, const DeviceModel& device, const TrainTest& data);

/// Physical evaluation of digitally trained parameters, no feedback.
TrainReport in_silico_bp_deploy(const NetworkSpec& spec, const DeviceModel& device,
                                const ParamSet<Real>& params_dig, const TrainTest& data,
                                const TrainConfig& config);

}  // namespace asyt
