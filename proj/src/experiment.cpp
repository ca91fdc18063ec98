#include "asyt/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "asyt/errors.hpp"

namespace asyt {

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::none: return "none";
    case SweepAxis::sigma: return "sigma";
    case SweepAxis::width: return "width";
    case SweepAxis::depth: return "depth";
    case SweepAxis::stress_perturb: return "stress-perturb";
    case SweepAxis::stress_noise: return "stress-noise";
    case SweepAxis::replay_fleet: return "replay-fleet";
  }
  return "unknown";
}

SweepAxis parse_sweep(std::string_view name) {
  for (auto a : {SweepAxis::none, SweepAxis::sigma, SweepAxis::width, SweepAxis::depth,
                 SweepAxis::stress_perturb, SweepAxis::stress_noise, SweepAxis::replay_fleet})
    if (to_string(a) == name) return a;
  throw ConfigError("unknown sweep '" + std::string(name) + "'");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, end);
}

double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw ConfigError("not a number: '" + std::string(s) + "'");
  return v;
}

template <typename Int>
Int parse_int(std::string_view s) {
  Int v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw ConfigError("not an integer: '" + std::string(s) + "'");
  return v;
}

bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("not a boolean: '" + std::string(s) + "'");
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

template <typename T, typename F>
std::string join(const std::vector<T>& v, F f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + f(v[i]);
  return out;
}

template <typename T, typename F>
std::vector<T> split_list(std::string_view s, F f) {
  std::vector<T> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(f(trim(s.substr(start, comma - start))));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

FidelityMode parse_fidelity(std::string_view s) {
  if (s == "transform") return FidelityMode::transform;
  if (s == "component") return FidelityMode::component;
  throw ConfigError("unknown fidelity mode '" + std::string(s) + "'");
}

std::string fidelity_name(FidelityMode m) { return m == FidelityMode::transform ? "transform" : "component"; }

LossKind parse_loss(std::string_view s) {
  if (s == "cross_entropy") return LossKind::cross_entropy;
  if (s == "squared_error") return LossKind::squared_error;
  throw ConfigError("unknown loss '" + std::string(s) + "'");
}

std::string loss_name(LossKind k) { return k == LossKind::cross_entropy ? "cross_entropy" : "squared_error"; }

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

#define ASYT_FIELD(name, expr_get, stmt_set)                                             \
  Field {                                                                                \
    name, [](const ExperimentConfig& c) -> std::string { return expr_get; },             \
        [](ExperimentConfig& c, std::string_view v) { stmt_set; }                        \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      ASYT_FIELD("task", c.task, c.task = std::string(v)),
      ASYT_FIELD("data_dir", c.data_dir, c.data_dir = std::string(v)),
      ASYT_FIELD("classes", join(c.classes, [](int x) { return std::to_string(x); }),
                 c.classes = split_list<int>(v, parse_int<int>)),
      ASYT_FIELD("train_per_class", std::to_string(c.train_per_class), c.train_per_class = parse_int<int>(v)),
      ASYT_FIELD("test_per_class", std::to_string(c.test_per_class), c.test_per_class = parse_int<int>(v)),
      ASYT_FIELD("pca_dims", std::to_string(c.pca_dims), c.pca_dims = parse_int<int>(v)),
      ASYT_FIELD("train_fraction", fmt_double(c.train_fraction), c.train_fraction = parse_double(v)),
      ASYT_FIELD("split_seed", std::to_string(c.split_seed), c.split_seed = parse_int<std::uint64_t>(v)),
      ASYT_FIELD("hidden", join(c.hidden, [](int x) { return std::to_string(x); }),
                 c.hidden = split_list<int>(v, parse_int<int>)),
      ASYT_FIELD("hidden_activation", std::string(to_string(c.hidden_activation)),
                 c.hidden_activation = parse_activation(v)),
      ASYT_FIELD("output_activation", std::string(to_string(c.output_activation)),
                 c.output_activation = parse_activation(v)),
      ASYT_FIELD("clip", fmt_bool(c.clip), c.clip = parse_bool(v)),
      ASYT_FIELD("method", std::string(to_string(c.train.method)), c.train.method = parse_method(v)),
      ASYT_FIELD("optimizer", std::string(to_string(c.train.optimizer)), c.train.optimizer = parse_optimizer(v)),
      ASYT_FIELD("learning_rate", fmt_double(c.train.learning_rate), c.train.learning_rate = parse_double(v)),
      ASYT_FIELD("epochs", std::to_string(c.train.epochs), c.train.epochs = parse_int<int>(v)),
      ASYT_FIELD("batch_size", std::to_string(c.train.batch_size), c.train.batch_size = parse_int<int>(v)),
      ASYT_FIELD("m_w1", fmt_double(c.train.m_w1), c.train.m_w1 = parse_double(v)),
      ASYT_FIELD("m_w2", fmt_double(c.train.m_w2), c.train.m_w2 = parse_double(v)),
      ASYT_FIELD("adam_beta1", fmt_double(c.train.adam_beta1), c.train.adam_beta1 = parse_double(v)),
      ASYT_FIELD("adam_beta2", fmt_double(c.train.adam_beta2), c.train.adam_beta2 = parse_double(v)),
      ASYT_FIELD("adam_epsilon", fmt_double(c.train.adam_epsilon), c.train.adam_epsilon = parse_double(v)),
      ASYT_FIELD("seed", std::to_string(c.train.seed), c.train.seed = parse_int<std::uint64_t>(v)),
      ASYT_FIELD("shuffle", fmt_bool(c.train.shuffle), c.train.shuffle = parse_bool(v)),
      ASYT_FIELD("loss", loss_name(c.train.loss), c.train.loss = parse_loss(v)),
      ASYT_FIELD("output_bias_init", fmt_double(c.train.output_bias_init),
                 c.train.output_bias_init = parse_double(v)),
      ASYT_FIELD("hidden_bias_init", fmt_double(c.train.hidden_bias_init),
                 c.train.hidden_bias_init = parse_double(v)),
      ASYT_FIELD("init_scale", fmt_double(c.train.init_scale), c.train.init_scale = parse_double(v)),
      ASYT_FIELD("param_bound", fmt_double(c.train.param_bound), c.train.param_bound = parse_double(v)),
      ASYT_FIELD("fidelity", fidelity_name(c.train.physical.mode), c.train.physical.mode = parse_fidelity(v)),
      ASYT_FIELD("weight_range", fmt_double(c.train.physical.weight_range),
                 c.train.physical.weight_range = parse_double(v)),
      ASYT_FIELD("quantize_signals", fmt_bool(c.train.physical.quantize_signals),
                 c.train.physical.quantize_signals = parse_bool(v)),
      ASYT_FIELD("readout_snr_db", fmt_double(c.train.readout_snr_db), c.train.readout_snr_db = parse_double(v)),
      ASYT_FIELD("eval_interval", std::to_string(c.train.eval_interval), c.train.eval_interval = parse_int<int>(v)),
      ASYT_FIELD("eval_train", fmt_bool(c.train.eval_train), c.train.eval_train = parse_bool(v)),
      ASYT_FIELD("perturb_step", std::to_string(c.train.perturbation.at_step),
                 c.train.perturbation.at_step = parse_int<long>(v)),
      ASYT_FIELD("perturb_magnitude", fmt_double(c.train.perturbation.magnitude),
                 c.train.perturbation.magnitude = parse_double(v)),
      ASYT_FIELD("perturb_seed", std::to_string(c.train.perturbation.seed),
                 c.train.perturbation.seed = parse_int<std::uint64_t>(v)),
      ASYT_FIELD("perturb_snr_db", fmt_double(c.train.perturbation.snr_db),
                 c.train.perturbation.snr_db = parse_double(v)),
      ASYT_FIELD("perturb_readout_snr_db", fmt_double(c.train.perturbation.readout_snr_db),
                 c.train.perturbation.readout_snr_db = parse_double(v)),
      ASYT_FIELD("device_seed", std::to_string(c.device_seed), c.device_seed = parse_int<std::uint64_t>(v)),
      ASYT_FIELD("sigma_level", fmt_double(c.sigma_level), c.sigma_level = parse_double(v)),
      ASYT_FIELD("snr_db", fmt_double(c.snr_db), c.snr_db = parse_double(v)),
      ASYT_FIELD("ppm_dim", std::to_string(c.ppm_dim), c.ppm_dim = parse_int<int>(v)),
      ASYT_FIELD("sweep", std::string(to_string(c.sweep)), c.sweep = parse_sweep(v)),
      ASYT_FIELD("sweep_values", join(c.sweep_values, fmt_double),
                 c.sweep_values = split_list<double>(v, parse_double)),
      ASYT_FIELD("fleet_size", std::to_string(c.fleet_size), c.fleet_size = parse_int<int>(v)),
      ASYT_FIELD("out_dir", c.out_dir, c.out_dir = std::string(v)),
      ASYT_FIELD("save_device", fmt_bool(c.save_device), c.save_device = parse_bool(v)),
      ASYT_FIELD("save_trace", fmt_bool(c.save_trace), c.save_trace = parse_bool(v)),
  };
  return table;
}

#undef ASYT_FIELD

const Field& field(std::string_view key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  const Field& f = field(key);
  try {
    f.set(*this, trim(value));
  } catch (const Error& e) {
    throw ConfigError("config key '" + std::string(key) + "': " + e.what());
  }
}

std::string ExperimentConfig::get(std::string_view key) const { return field(key).get(*this); }

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return names;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text, ExperimentConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    base.set(trim(std::string_view(body).substr(0, eq)), std::string_view(body).substr(eq + 1));
  }
  return base;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), std::move(base));
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) { return parse(text, ExperimentConfig{}); }

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return load(path, ExperimentConfig{});
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

void ExperimentConfig::validate() const {
  if (task != "iris" && task != "mnist" && task != "fmnist" && task != "kmnist")
    throw ConfigError("unknown task '" + task + "'");
  if (hidden.empty()) throw ConfigError("at least one hidden layer is required");
  for (int h : hidden)
    if (h < 1) throw ConfigError("hidden widths must be positive");
  if (pca_dims < 0 || train_per_class < 0 || test_per_class < 0)
    throw ConfigError("pca_dims and per-class counts must be non-negative");
  if (!(sigma_level >= 0.0)) throw ConfigError("sigma_level must be non-negative");
  if (ppm_dim < 0) throw ConfigError("ppm_dim must be non-negative");
  if (fleet_size < 1) throw ConfigError("fleet_size must be positive");
  train.validate();
}

std::filesystem::path data_root(const ExperimentConfig& config) {
  if (!config.data_dir.empty()) return config.data_dir;
  if (const char* env = std::getenv("ASYT_DATA_DIR"); env && *env) return env;
  return "/root/data";
}

NetworkSpec network_spec(const ExperimentConfig& config) {
  NetworkSpec spec;
  int inputs = 0;
  int outputs = 0;
  if (config.task == "iris") {
    inputs = 4;
    outputs = 3;
  } else {
    inputs = 784;
    outputs = 10;
  }
  if (config.pca_dims > 0) inputs = config.pca_dims;
  if (!config.classes.empty()) outputs = static_cast<int>(config.classes.size());
  spec.layer_sizes.push_back(inputs);
  for (int h : config.hidden) spec.layer_sizes.push_back(h);
  spec.layer_sizes.push_back(outputs);
  spec.hidden_activation = config.hidden_activation;
  spec.output_activation = config.output_activation;
  spec.clip_to_fan_in = config.clip;
  spec.validate();
  return spec;
}

namespace {

TrainTest load_idx_task(const ExperimentConfig& config) {
  const char* sub = config.task == "mnist" ? "mnist" : config.task == "fmnist" ? "fashion" : "kmnist";
  const auto dir = data_root(config) / sub;
  for (const char* f : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
                        "t10k-labels-idx1-ubyte"})
    if (!std::filesystem::exists(dir / f)) throw IoError("missing dataset file " + (dir / f).string());
  TrainTest tt;
  tt.train = load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", Split::train);
  tt.test = load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte", Split::test);
  tt.train.class_count = tt.test.class_count = 10;
  return tt;
}

}  // namespace

TrainTest load_task(const ExperimentConfig& config) {
  config.validate();
  TrainTest tt;
  if (config.task == "iris") {
    const auto path = data_root(config) / "iris.csv";
    if (!std::filesystem::exists(path)) throw IoError("missing dataset file " + path.string());
    Dataset all = load_iris(path);
    if (!config.classes.empty()) all = subset_classes(all, config.classes);
    tt = stratified_split(all, config.train_fraction, config.split_seed);
  } else {
    tt = load_idx_task(config);
    if (!config.classes.empty()) {
      tt.train = subset_classes(tt.train, config.classes);
      tt.test = subset_classes(tt.test, config.classes);
    }
  }
  if (config.train_per_class > 0) tt.train = sample_per_class(tt.train, config.train_per_class, config.split_seed);
  if (config.test_per_class > 0)
    tt.test = sample_per_class(tt.test, config.test_per_class, config.split_seed + 1);
  if (config.pca_dims > 0) {
    const PcaModel pca = pca_fit(tt.train.features, config.pca_dims);
    tt.train.features = pca_apply(pca, tt.train.features);
    tt.test.features = pca_apply(pca, tt.test.features);
  } else if (config.task == "iris") {
    const MinMaxScaler scaler = MinMaxScaler::fit(tt.train.features);
    tt.train.features = scaler.apply(tt.train.features);
    tt.test.features = scaler.apply(tt.test.features);
  }
  tt.train.name = tt.test.name = config.task;
  tt.test.class_count = tt.train.class_count;
  return tt;
}

DeviceOptions device_options(const ExperimentConfig& config) {
  DeviceOptions o;
  o.ppm_dim = config.ppm_dim;
  return o;
}

DeviceModel make_device(const ExperimentConfig& config, const NetworkSpec& spec) {
  return sample_device(config.device_seed, spec, config.sigma_level, config.snr_db, device_options(config));
}

RunOutcome run_training(const ExperimentConfig& config, const TrainTest& data, bool record) {
  config.validate();
  RunOutcome out;
  out.spec = network_spec(config);
  out.device = make_device(config, out.spec);
  out.output = train(config.train, out.spec, out.device, data, record);
  return out;
}

namespace {

void epoch_rows(SweepResult& res, const std::string& method, const TrainReport& report) {
  for (const auto& m : report.epochs)
    if (m.evaluated)
      res.rows.push_back({static_cast<double>(m.epoch), method, m.train.accuracy, m.test.accuracy,
                          m.angle_deg, m.magnitude_ratio});
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& config, const TrainTest& data) {
  config.validate();
  SweepResult res;
  ExperimentConfig c = config;
  c.train.method = Method::asyt;
  switch (config.sweep) {
    case SweepAxis::none:
      throw ConfigError("config has sweep = none");
    case SweepAxis::sigma: {
      std::vector<TrainReport> reports;
      const NetworkSpec spec = network_spec(c);
      res.rows = distortion_sweep(c.sweep_values, c.train, spec, data, c.device_seed, c.snr_db,
                                  device_options(c), &reports);
      for (std::size_t i = 0; i < reports.size(); ++i)
        res.runs.push_back({"sigma=" + fmt_double(c.sweep_values[i]), reports[i]});
      break;
    }
    case SweepAxis::width:
    case SweepAxis::depth: {
      const bool width = config.sweep == SweepAxis::width;
      for (double v : c.sweep_values) {
        const int n = static_cast<int>(v);
        if (n < 1 || n != v) throw ConfigError("width/depth sweep values must be positive integers");
        ExperimentConfig point = c;
        point.hidden = width ? std::vector<int>(c.hidden.size(), n) : std::vector<int>(n, c.hidden.front());
        const RunOutcome run = run_training(point, data);
        for (auto& r : rows_from_report(v, run.output.report)) res.rows.push_back(r);
        res.runs.push_back({std::string(width ? "width=" : "depth=") + std::to_string(n), run.output.report});
      }
      break;
    }
    case SweepAxis::stress_perturb:
    case SweepAxis::stress_noise: {
      for (Method m : {Method::asyt, Method::pat}) {
        ExperimentConfig point = c;
        point.train.method = m;
        const RunOutcome run = run_training(point, data);
        epoch_rows(res, std::string(to_string(m)), run.output.report);
        res.runs.push_back({std::string(to_string(m)), run.output.report});
      }
      break;
    }
    case SweepAxis::replay_fleet: {
      const NetworkSpec spec = network_spec(c);
      const UpdateTrace trace = record_trace(c.train, spec, data);
      for (int d = 0; d < c.fleet_size; ++d) {
        const DeviceModel dev = sample_device(derive_seed(c.device_seed, {static_cast<std::uint64_t>(d)}), spec,
                                              c.sigma_level, c.snr_db, device_options(c));
        const TrainOutput replayed = replay_train(trace, c.train, spec, dev, data);
        const TrainOutput live = train(c.train, spec, dev, data);
        const EpochMetrics& r = replayed.report.final_metrics();
        const EpochMetrics& l = live.report.final_metrics();
        res.rows.push_back({static_cast<double>(d), "asyt_replay", r.train.accuracy, r.test.accuracy,
                            r.angle_deg, r.magnitude_ratio});
        res.rows.push_back({static_cast<double>(d), "asyt_live", l.train.accuracy, l.test.accuracy,
                            l.angle_deg, l.magnitude_ratio});
        res.runs.push_back({"device=" + std::to_string(d) + "/replay", replayed.report});
        res.runs.push_back({"device=" + std::to_string(d) + "/live", live.report});
      }
      break;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Presets

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "iris2-encapsulated", "iris3",       "digits4-tiled",  "mnist",        "fmnist",
      "kmnist",             "sweep-sigma", "sweep-width",    "sweep-depth",  "stress-perturb",
      "stress-noise",       "replay-fleet"};
  return names;
}

namespace {

ExperimentConfig mnist_family(const std::string& task) {
  ExperimentConfig c;
  c.task = task;
  c.hidden = {256, 256};
  c.train.learning_rate = 5e-5;
  c.train.epochs = 100;
  c.train.batch_size = 600;
  c.train.eval_train = false;
  c.sigma_level = 1.0;
  c.snr_db = 10.0;
  return c;
}

// Small component-mode tasks: weights span [-A, A] for fan-in A, and the
// hidden bias starts inside the active region of the nonlinearity.
ExperimentConfig component_task() {
  ExperimentConfig c;
  c.task = "iris";
  c.train.physical.mode = FidelityMode::component;
  c.train.optimizer = OptimizerKind::adam;
  c.train.hidden_bias_init = 1.0;
  c.train.output_bias_init = 1.0;
  c.snr_db = std::numeric_limits<double>::infinity();
  c.device_seed = 101;
  c.train.seed = 1;
  return c;
}

}  // namespace

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  if (name == "iris3") {
    c = component_task();
    c.hidden = {4};
    c.hidden_activation = ActivationKind::sigmoid_like;
    c.train.physical.weight_range = 4.0;
    c.train.param_bound = 4.0;
    c.train.learning_rate = 0.01;
    c.train.batch_size = 16;
    c.train.epochs = 500;
    c.train.eval_interval = 10;
  } else if (name == "iris2-encapsulated") {
    c = component_task();
    c.classes = {0, 1};
    c.pca_dims = 2;
    c.hidden = {2};
    c.hidden_activation = ActivationKind::tanh_saturating;
    c.train.physical.weight_range = 2.0;
    c.train.param_bound = 2.0;
    c.train.init_scale = 0.5;
    c.train.hidden_bias_init = 0.5;
    c.train.learning_rate = 0.01;
    c.train.batch_size = 16;
    c.train.epochs = 30;
    c.train.seed = 2;  // seed 1 starts with both output logits clipped at zero
    c.device_seed = 102;
  } else if (name == "digits4-tiled") {
    c = component_task();
    c.task = "mnist";
    c.classes = {0, 1, 2, 3};
    c.train_per_class = 250;
    c.test_per_class = 100;
    c.pca_dims = 8;
    c.hidden = {4};
    c.hidden_activation = ActivationKind::sigmoid_like;
    c.ppm_dim = 4;
    c.train.physical.weight_range = 8.0;
    c.train.param_bound = 8.0;
    c.train.learning_rate = 0.01;
    c.train.batch_size = 32;
    c.train.epochs = 300;
    c.train.eval_interval = 10;
  } else if (name == "mnist" || name == "fmnist" || name == "kmnist") {
    c = mnist_family(std::string(name));
  } else if (name == "sweep-sigma") {
    c = mnist_family("mnist");
    c.sweep = SweepAxis::sigma;
    c.sweep_values = {0.0, 0.5, 1.0, 1.5, 2.0};
    c.train.epochs = 20;
    c.train.eval_interval = 20;
  } else if (name == "sweep-width") {
    c = mnist_family("mnist");
    c.sweep = SweepAxis::width;
    c.sweep_values = {64, 128, 256, 512};
    c.train.epochs = 20;
    c.train.eval_interval = 20;
  } else if (name == "sweep-depth") {
    c = mnist_family("mnist");
    c.sweep = SweepAxis::depth;
    c.hidden = {128};
    c.sweep_values = {1, 2, 3, 4};
    c.train.epochs = 20;
    c.train.eval_interval = 20;
  } else if (name == "stress-perturb") {
    c = mnist_family("mnist");
    c.sweep = SweepAxis::stress_perturb;
    c.train.epochs = 20;
    c.train.perturbation.at_step = 10 * 100;  // start of epoch 10 at 100 steps per epoch
    c.train.perturbation.magnitude = 1.0;
    c.train.perturbation.seed = 77;
  } else if (name == "stress-noise") {
    c = mnist_family("mnist");
    c.sweep = SweepAxis::stress_noise;
    c.train.epochs = 20;
    c.snr_db = 20.0;
    c.train.readout_snr_db = 20.0;
    c.train.perturbation.at_step = 10 * 100;
    c.train.perturbation.snr_db = 10.0;
    c.train.perturbation.readout_snr_db = 10.0;
  } else if (name == "replay-fleet") {
    c = preset("iris3");
    c.sweep = SweepAxis::replay_fleet;
    c.fleet_size = 5;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

}  // namespace asyt
