// asyt: train, sweep, replay and cost front end.
//
// Exit codes: 0 ok, 1 runtime failure, 2 bad configuration or arguments,
// 3 incompatible trace, 4 missing or unreadable input files.

#include <CLI11.hpp>
#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "asyt/diagnostics.hpp"
#include "asyt/errors.hpp"
#include "asyt/experiment.hpp"
#include "asyt/hash.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace asyt;

namespace {

enum Exit { kOk = 0, kFailure = 1, kBadConfig = 2, kBadTrace = 3, kBadInput = 4 };

struct CommonOptions {
  std::string config_path;
  std::string preset_name;
  std::vector<std::string> overrides;
  std::int64_t seed = -1;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "flat key = value config file");
  cmd->add_option("--preset", o.preset_name, "named experiment preset");
  cmd->add_option("--set", o.overrides, "KEY=VALUE override, applied after --config");
  cmd->add_option("--seed", o.seed, "training seed");
  cmd->add_option("--out", o.out, "output directory");
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig c = o.preset_name.empty() ? ExperimentConfig{} : preset(o.preset_name);
  if (!o.config_path.empty()) c = ExperimentConfig::load(o.config_path, c);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed >= 0) c.train.seed = static_cast<std::uint64_t>(o.seed);
  if (!o.out.empty()) c.out_dir = o.out;
  c.validate();
  return c;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(8) << v;
  return os.str();
}

std::string metrics_csv(const TrainReport& report) {
  std::ostringstream os;
  os << "epoch,split,method,loss,accuracy,angle_deg,magnitude_ratio\n";
  const std::string method(to_string(report.method));
  auto row = [&](int epoch, const char* split, const std::string& m, double loss, double acc, double angle,
                 double ratio) {
    os << epoch << ',' << split << ',' << m << ',' << num(loss) << ',' << num(acc) << ',' << num(angle) << ','
       << num(ratio) << '\n';
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& e : report.epochs) {
    // "fit": mean loss over the epoch's training steps
    row(e.epoch, "fit", method, e.train_loss, nan, e.angle_deg, e.magnitude_ratio);
    if (!e.evaluated) continue;
    if (std::isfinite(e.train.accuracy)) row(e.epoch, "train", method, e.train.loss, e.train.accuracy, nan, nan);
    row(e.epoch, "test", method, e.test.loss, e.test.accuracy, nan, nan);
    if (report.method == Method::asyt) {
      if (std::isfinite(e.digital_train.accuracy))
        row(e.epoch, "train", "ideal_bp", e.digital_train.loss, e.digital_train.accuracy, nan, nan);
      row(e.epoch, "test", "ideal_bp", e.digital_test.loss, e.digital_test.accuracy, nan, nan);
    }
    if (std::isfinite(e.in_silico_test.accuracy) && report.method != Method::in_silico_bp)
      row(e.epoch, "test", "in_silico_bp", e.in_silico_test.loss, e.in_silico_test.accuracy, nan, nan);
  }
  return os.str();
}

json summary_json(const ExperimentConfig& c, const TrainReport& r) {
  const EpochMetrics& f = r.final_metrics();
  json j;
  j["method"] = std::string(to_string(r.method));
  j["task"] = c.task;
  j["spec"] = r.spec;
  j["seed"] = c.train.seed;
  j["device_seed"] = c.device_seed;
  j["device_hash"] = hex(r.device_hash);
  j["sigma_level"] = c.sigma_level;
  j["snr_db"] = std::isinf(c.snr_db) ? json("inf") : json(c.snr_db);
  j["epochs"] = c.train.epochs;
  j["final_train_accuracy"] = f.train.accuracy;
  j["final_test_accuracy"] = f.test.accuracy;
  j["final_test_loss"] = f.test.loss;
  j["digital_train_accuracy"] = f.digital_train.accuracy;
  j["digital_test_accuracy"] = f.digital_test.accuracy;
  j["in_silico_test_accuracy"] = f.in_silico_test.accuracy;
  j["final_angle_deg"] = f.angle_deg;
  j["steps"] = r.steps;
  j["digital_backprops"] = r.digital_backprops;
  j["physical_forwards"] = r.physical_forwards;
  j["readout_scalars_per_sample"] = r.readout_scalars_per_sample;
  j["intermediate_access"] = r.intermediate_access;
  j["replayed"] = r.replayed;
  j["params_dig_hash"] = hex(r.params_dig_hash);
  j["params_phy_hash"] = hex(r.params_phy_hash);
  Fnv1a h;
  h.text(c.to_text());
  j["config_hash"] = hex(h.digest());
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

std::string label_file(std::string label) {
  for (char& ch : label)
    if (ch == '=' || ch == '/') ch = '_';
  return label;
}

// ---------------------------------------------------------------------------

int cmd_train(const CommonOptions& o) {
  const ExperimentConfig c = resolve(o);
  const TrainTest data = load_task(c);
  const RunOutcome run = run_training(c, data, c.save_trace);
  const fs::path out = c.out_dir;
  write_text(out / "config.txt", c.to_text());
  write_text(out / "metrics.csv", metrics_csv(run.output.report));
  write_text(out / "summary.json", summary_json(c, run.output.report).dump(2) + "\n");
  if (c.save_device) save_device(run.device, out / "device.bin");
  if (run.output.trace) save_trace(*run.output.trace, run.spec, out / "trace.bin");
  const EpochMetrics& f = run.output.report.final_metrics();
  std::printf("%s %s: train %.4f test %.4f (digital %.4f, in-silico %.4f) -> %s\n",
              std::string(to_string(c.train.method)).c_str(), run.spec.describe().c_str(), f.train.accuracy,
              f.test.accuracy, f.digital_test.accuracy, f.in_silico_test.accuracy, out.string().c_str());
  return kOk;
}

int cmd_sweep(const CommonOptions& o) {
  const ExperimentConfig c = resolve(o);
  const TrainTest data = load_task(c);
  const SweepResult res = run_sweep(c, data);
  const fs::path out = c.out_dir;
  write_text(out / "config.txt", c.to_text());
  write_sweep_csv(res.rows, out / "sweep.csv");
  json runs = json::array();
  for (const auto& r : res.runs) {
    write_text(out / "runs" / (label_file(r.label) + ".csv"), metrics_csv(r.report));
    json j = summary_json(c, r.report);
    j["label"] = r.label;
    runs.push_back(j);
  }
  json s;
  s["sweep"] = std::string(to_string(c.sweep));
  s["runs"] = runs;
  write_text(out / "summary.json", s.dump(2) + "\n");
  std::printf("%s sweep: %zu rows -> %s\n", std::string(to_string(c.sweep)).c_str(), res.rows.size(),
              (out / "sweep.csv").string().c_str());
  return kOk;
}

int cmd_record(const CommonOptions& o, std::string trace_path) {
  ExperimentConfig c = resolve(o);
  const TrainTest data = load_task(c);
  const NetworkSpec spec = network_spec(c);
  c.train.method = Method::asyt;
  const UpdateTrace trace = record_trace(c.train, spec, data);
  if (trace_path.empty()) trace_path = (fs::path(c.out_dir) / "trace.bin").string();
  if (fs::path(trace_path).has_parent_path()) fs::create_directories(fs::path(trace_path).parent_path());
  save_trace(trace, spec, trace_path);
  std::printf("trace: %zu steps, spec %s -> %s\n", trace.step_count(), spec.describe().c_str(), trace_path.c_str());
  return kOk;
}

int cmd_sample_device(const CommonOptions& o, std::string device_path) {
  const ExperimentConfig c = resolve(o);
  const NetworkSpec spec = network_spec(c);
  const DeviceModel dev = make_device(c, spec);
  if (device_path.empty()) device_path = (fs::path(c.out_dir) / "device.bin").string();
  if (fs::path(device_path).has_parent_path()) fs::create_directories(fs::path(device_path).parent_path());
  save_device(dev, device_path);
  std::printf("device %s: sigma %g, snr %g dB -> %s\n", hex(hash_device(dev)).c_str(), c.sigma_level, c.snr_db,
              device_path.c_str());
  return kOk;
}

int cmd_replay(const CommonOptions& o, const std::string& trace_path, const std::vector<std::string>& devices) {
  ExperimentConfig c = resolve(o);
  c.train.method = Method::asyt;
  const TrainTest data = load_task(c);
  const NetworkSpec spec = network_spec(c);
  UpdateTrace trace;
  try {
    trace = load_trace(trace_path, spec);
    check_trace(trace, c.train, spec, data.train);
  } catch (const TraceCompatibilityError& e) {
    std::fprintf(stderr, "asyt: incompatible trace: %s\n", e.what());
    return kBadTrace;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "asyt: bad trace header: %s\n", e.what());
    return kBadTrace;
  }
  const fs::path out = c.out_dir;
  json runs = json::array();
  long backprops = 0;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const DeviceModel dev = load_device(devices[i]);
    const TrainOutput r = replay_train(trace, c.train, spec, dev, data);
    backprops += r.report.digital_backprops;
    write_text(out / ("replay_" + std::to_string(i) + ".csv"), metrics_csv(r.report));
    json j = summary_json(c, r.report);
    j["device_file"] = devices[i];
    runs.push_back(j);
    std::printf("device %zu (%s): train %.4f test %.4f\n", i, hex(r.report.device_hash).c_str(),
                r.report.final_train_accuracy(), r.report.final_test_accuracy());
  }
  json s;
  s["trace"] = trace_path;
  s["trace_steps"] = trace.step_count();
  s["devices"] = runs;
  s["digital_backprops"] = backprops;
  write_text(out / "replay_summary.json", s.dump(2) + "\n");
  std::printf("digital backprops during replay: %ld\n", backprops);
  return kOk;
}

struct CostOptions {
  long neurons = 522;
  long outputs = 10;
  long hidden_layers = 2;
  double power = 1.0;
  double t_interface = 1e-6;
  double t_prop = 1e-9;
};

int cmd_cost(const CostOptions& o) {
  if (o.neurons <= o.outputs) {
    std::fprintf(stderr, "asyt: cost model needs M > P (M=%ld, P=%ld)\n", o.neurons, o.outputs);
    return kBadConfig;
  }
  std::printf("%-14s %12s %10s %14s %14s\n", "mode", "accesses", "timesteps", "T_extract_s", "energy_J");
  for (AccessMode mode : {AccessMode::truncated, AccessMode::encapsulated}) {
    CostModelInput in{o.neurons, o.outputs, o.hidden_layers, o.power, o.t_interface, o.t_prop, mode};
    const double t = extraction_time(in);
    std::printf("%-14s %12ld %10ld %14.6e %14.6e\n", mode == AccessMode::truncated ? "truncated" : "encapsulated",
                access_count(o.neurons, o.outputs, mode), access_timesteps(o.hidden_layers, mode), t,
                min_energy(o.power, t));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymmetrical training of encapsulated photonic networks"};
  app.require_subcommand(1);

  CommonOptions train_o, sweep_o, replay_o, record_o, sample_o;
  auto* train_cmd = app.add_subcommand("train", "train one method and write metrics and a summary");
  add_common(train_cmd, train_o);
  auto* sweep_cmd = app.add_subcommand("sweep", "run the configured sweep or stress axis");
  add_common(sweep_cmd, sweep_o);

  std::string trace_path;
  std::vector<std::string> device_paths;
  auto* replay_cmd = app.add_subcommand("replay", "replay a recorded digital trace onto devices");
  add_common(replay_cmd, replay_o);
  replay_cmd->add_option("--trace", trace_path, "trace file")->required();
  replay_cmd->add_option("--device", device_paths, "device file (repeatable)")->required();

  std::string record_path;
  auto* record_cmd = app.add_subcommand("record-trace", "record the digital update trace");
  add_common(record_cmd, record_o);
  record_cmd->add_option("--trace", record_path, "output trace file (default OUT/trace.bin)");

  std::string device_out;
  auto* sample_cmd = app.add_subcommand("sample-device", "sample and save a distorted device");
  add_common(sample_cmd, sample_o);
  sample_cmd->add_option("--device", device_out, "output device file (default OUT/device.bin)");

  CostOptions cost_o;
  auto* cost_cmd = app.add_subcommand("cost", "readout cost of truncated vs encapsulated networks");
  cost_cmd->add_option("--neurons,-M", cost_o.neurons, "non-input neurons M");
  cost_cmd->add_option("--outputs,-P", cost_o.outputs, "output neurons P");
  cost_cmd->add_option("--hidden-layers,-N", cost_o.hidden_layers, "hidden layers N");
  cost_cmd->add_option("--power", cost_o.power, "photonic power in W");
  cost_cmd->add_option("--t-interface", cost_o.t_interface, "AD interface time per access in s");
  cost_cmd->add_option("--t-prop", cost_o.t_prop, "optical propagation time per pass in s");

  app.add_subcommand("presets", "list preset names")->callback([] {
    for (const auto& n : preset_names()) std::printf("%s\n", n.c_str());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadConfig;
  }

  try {
    if (*train_cmd) return cmd_train(train_o);
    if (*sweep_cmd) return cmd_sweep(sweep_o);
    if (*replay_cmd) return cmd_replay(replay_o, trace_path, device_paths);
    if (*record_cmd) return cmd_record(record_o, record_path);
    if (*sample_cmd) return cmd_sample_device(sample_o, device_out);
    if (*cost_cmd) return cmd_cost(cost_o);
    return kOk;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "asyt: %s\n", e.what());
    return kBadConfig;
  } catch (const TopologyError& e) {
    std::fprintf(stderr, "asyt: %s\n", e.what());
    return kBadConfig;
  } catch (const TraceCompatibilityError& e) {
    std::fprintf(stderr, "asyt: incompatible trace: %s\n", e.what());
    return kBadTrace;
  } catch (const IoError& e) {
    std::fprintf(stderr, "asyt: %s\n", e.what());
    return kBadInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "asyt: %s\n", e.what());
    return kFailure;
  }
}
