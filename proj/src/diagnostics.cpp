#include "asyt/diagnostics.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "asyt/errors.hpp"
#include "asyt/rng.hpp"

namespace asyt {

void CostModelInput::validate() const {
  if (outputs < 1) throw TopologyError("P must be >= 1");
  if (neurons <= outputs) throw TopologyError("M must exceed P");
  if (hidden_layers < 1) throw TopologyError("N must be >= 1");
  if (!(photonic_power_w > 0) || !(interface_time_s > 0) || !(propagation_time_s > 0))
    throw ParameterError("power and times must be positive");
  if (propagation_time_s >= interface_time_s)
    throw ParameterError("propagation time must be well below the interface time");
}

long access_count(long neurons, long outputs, AccessMode mode) {
  if (outputs < 1 || neurons <= outputs)
    throw TopologyError("access_count needs M > P >= 1 (M=" + std::to_string(neurons) +
                        ", P=" + std::to_string(outputs) + ")");
  return mode == AccessMode::truncated ? 2 * neurons - outputs : outputs;
}

long access_timesteps(long hidden_layers, AccessMode mode) {
  if (hidden_layers < 1) throw TopologyError("access_timesteps needs N >= 1");
  return mode == AccessMode::truncated ? hidden_layers + 1 : 1;
}

double min_energy(double photonic_power_w, double extraction_time_s) {
  if (!(photonic_power_w > 0) || !(extraction_time_s > 0))
    throw ParameterError("min_energy needs positive power and time");
  return photonic_power_w * extraction_time_s;
}

double extraction_time(const CostModelInput& in) {
  in.validate();
  return static_cast<double>(access_count(in.neurons, in.outputs, in.mode)) * in.interface_time_s +
         static_cast<double>(access_timesteps(in.hidden_layers, in.mode)) * in.propagation_time_s;
}

double alignment_break_probability(double distortion_fraction, long trials, std::uint64_t seed,
                                   int dimension) {
  if (trials < 1) throw ParameterError("trials must be >= 1");
  if (dimension < 1) throw ParameterError("dimension must be >= 1");
  if (distortion_fraction < 0) throw ParameterError("distortion fraction must be >= 0");
  if (distortion_fraction == 0) return 0.0;
  Rng rng(derive_seed(seed, {0xa11e}));
  std::uniform_real_distribution<double> weight(-1.0, 1.0);
  const double half = 2.0 * distortion_fraction;  // the tunable range is 2 wide
  std::uniform_real_distribution<double> shift(-half, half);
  long breaks = 0;
  for (long t = 0; t < trials; ++t) {
    double dot = 0, na = 0, nb = 0;
    for (int i = 0; i < dimension; ++i) {
      const double a = weight(rng);
      const double b = a + shift(rng);
      dot += a * b;
      na += a * a;
      nb += b * b;
    }
    if (na == 0 || nb == 0 || dot <= 0) ++breaks;
  }
  return static_cast<double>(breaks) / static_cast<double>(trials);
}

std::vector<SweepRow> rows_from_report(double level, const TrainReport& report) {
  const EpochMetrics& m = report.final_metrics();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {
      {level, std::string(to_string(report.method)), m.train.accuracy, m.test.accuracy, m.angle_deg,
       m.magnitude_ratio},
      {level, "ideal_bp", m.digital_train.accuracy, m.digital_test.accuracy, nan, nan},
      {level, "in_silico_bp", nan, m.in_silico_test.accuracy, nan, nan},
  };
}

std::vector<SweepRow> distortion_sweep(const std::vector<double>& levels, const TrainConfig& config,
                                       const NetworkSpec& spec, const TrainTest& data,
                                       std::uint64_t device_seed, double snr_db,
                                       const DeviceOptions& device_options,
                                       std::vector<TrainReport>* reports) {
  std::vector<SweepRow> rows;
  TrainConfig c = config;
  c.method = Method::asyt;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 0 || levels[i] > 2) throw ParameterError("sweep levels must lie in [0, 2]");
    const DeviceModel dev = sample_device(device_seed, spec, levels[i], snr_db, device_options);
    const auto run = train(c, spec, dev, data);
    for (auto& r : rows_from_report(levels[i], run.report)) rows.push_back(r);
    if (reports) reports->push_back(run.report);
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "level_or_step,method,train_acc,test_acc,angle_deg,magnitude_ratio\n";
  os << std::setprecision(8);
  for (const auto& r : rows)
    os << r.level_or_step << ',' << r.method << ',' << r.train_acc << ',' << r.test_acc << ','
       << r.angle_deg << ',' << r.magnitude_ratio << '\n';
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << os.str();
    if (!out) throw IoError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace asyt
