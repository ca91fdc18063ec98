#pragma once

// Experiment configuration shared by the command-line tool, the acceptance
// runner and the tests: a flat key=value text form, named presets for every
// reproduced experiment, and task loading.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "asyt/data.hpp"
#include "asyt/diagnostics.hpp"
#include "asyt/hardware.hpp"
#include "asyt/netcore.hpp"
#include "asyt/trainer.hpp"

namespace asyt {

enum class SweepAxis { none, sigma, width, depth, stress_perturb, stress_noise, replay_fleet };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep(std::string_view name);

struct ExperimentConfig {
  /// iris, mnist, fmnist or kmnist.
  std::string task = "mnist";
  /// Empty: $ASYT_DATA_DIR, else /root/data.
  std::string data_dir;
  std::vector<int> classes;  // empty: every class
  int train_per_class = 0;   // 0: all samples
  int test_per_class = 0;
  int pca_dims = 0;          // 0: raw features
  double train_fraction = 0.7;  // iris only; the others ship a test split
  std::uint64_t split_seed = 3;

  std::vector<int> hidden{256, 256};
  ActivationKind hidden_activation = ActivationKind::relu;
  ActivationKind output_activation = ActivationKind::softmax;
  bool clip = true;

  TrainConfig train{};

  std::uint64_t device_seed = 1;
  double sigma_level = 1.0;
  double snr_db = 10.0;
  int ppm_dim = 0;

  SweepAxis sweep = SweepAxis::none;
  std::vector<double> sweep_values;
  int fleet_size = 5;

  std::string out_dir = "out";
  bool save_device = false;
  bool save_trace = false;

  /// Throws ConfigError naming the key when it is unknown or the value
  /// does not parse.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  /// Lines of `key = value`; '#' starts a comment.
  static ExperimentConfig parse(std::string_view text, ExperimentConfig base);
  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path, ExperimentConfig base);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Every key, one per line, in a fixed order. parse(to_text()) == *this.
  std::string to_text() const;

  static const std::vector<std::string>& keys();
  void validate() const;
};

std::filesystem::path data_root(const ExperimentConfig& config);
NetworkSpec network_spec(const ExperimentConfig& config);
TrainTest load_task(const ExperimentConfig& config);
DeviceOptions device_options(const ExperimentConfig& config);
DeviceModel make_device(const ExperimentConfig& config, const NetworkSpec& spec);

struct RunOutcome {
  NetworkSpec spec;
  DeviceModel device;
  TrainOutput output;
};

/// One training run of config.train.method on the configured device.
RunOutcome run_training(const ExperimentConfig& config, const TrainTest& data, bool record = false);

struct LabelledReport {
  std::string label;  // e.g. "width=128", "pat", "device=3/replay"
  TrainReport report;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<LabelledReport> runs;
};

/// Runs the configured sweep axis:
///   sigma            AsyT per distortion level (rows: asyt, ideal_bp, in_silico_bp)
///   width, depth     AsyT per hidden width or hidden-layer count
///   stress-*         AsyT and PAT on the same device and seed, one row per
///                    evaluated epoch
///   replay-fleet     one recorded digital trace replayed on fleet_size
///                    devices next to live AsyT on each
SweepResult run_sweep(const ExperimentConfig& config, const TrainTest& data);

const std::vector<std::string>& preset_names();
/// Throws ConfigError for an unknown name.
ExperimentConfig preset(std::string_view name);

}  // namespace asyt
