#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "asyt/experiment.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "asyt_cli_test";

int run(const std::string& args, std::string* output = nullptr) {
  fs::create_directories(kScratch);
  const fs::path log = kScratch / "stdout.txt";
  const std::string cmd = std::string(ASYT_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool have_iris() { return fs::exists(asyt::data_root(asyt::ExperimentConfig{}) / "iris.csv"); }

}  // namespace

TEST_CASE("cost table") {
  std::string out;
  REQUIRE(run("cost -M 522 -P 10 -N 2 --power 2 --t-interface 1e-6 --t-prop 1e-9", &out) == 0);
  CHECK(out.find("1034") != std::string::npos);
  CHECK(out.find("10") != std::string::npos);
  std::string wide;
  REQUIRE(run("cost -M 1044 -P 10 -N 2 --power 2 --t-interface 1e-6 --t-prop 1e-9", &wide) == 0);
  // The encapsulated row does not move when M doubles.
  auto enc_row = [](const std::string& s) {
    const auto at = s.find("encapsulated");
    return s.substr(at, s.find('\n', at) - at);
  };
  CHECK(enc_row(out) == enc_row(wide));
  CHECK(run("cost -M 10 -P 10 -N 2") == 2);
}

TEST_CASE("configuration errors exit with 2") {
  std::string out;
  CHECK(run("train --preset iris3 --set learning_rat=1 --out " + (kScratch / "bad").string(), &out) == 2);
  CHECK(out.find("learning_rat") != std::string::npos);
  CHECK(run("train --preset no-such-preset") == 2);
  const auto cfg = kScratch / "bad.cfg";
  {
    std::ofstream f(cfg);
    f << "task = iris\nwidth = 3\n";
  }
  CHECK(run("train --config " + cfg.string()) == 2);
}

TEST_CASE("missing data exits with 4") {
  CHECK(run("train --preset mnist --set data_dir=" + (kScratch / "void").string() + " --out " +
            (kScratch / "void_out").string()) == 4);
}

TEST_CASE("train writes metrics and summary") {
  if (!have_iris()) {
    MESSAGE("iris.csv not present; skipped");
    return;
  }
  const auto a = kScratch / "train_a";
  const auto b = kScratch / "train_b";
  const std::string args = "train --preset iris3 --set epochs=20 --seed 4 --out ";
  REQUIRE(run(args + a.string()) == 0);
  REQUIRE(run(args + b.string()) == 0);
  const auto metrics = slurp(a / "metrics.csv");
  CHECK(metrics.rfind("epoch,split,method,loss,accuracy,angle_deg,magnitude_ratio\n", 0) == 0);
  CHECK(metrics == slurp(b / "metrics.csv"));

  auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
  for (const char* key : {"method", "seed", "device_hash", "spec", "final_train_accuracy",
                          "final_test_accuracy", "epochs", "wall_seconds"})
    CHECK(summary.contains(key));
  CHECK(summary["seed"] == 4);
  CHECK(summary["method"] == "asyt");
  CHECK(summary["readout_scalars_per_sample"] == 3);
}

TEST_CASE("trace replay across devices") {
  if (!have_iris()) {
    MESSAGE("iris.csv not present; skipped");
    return;
  }
  const auto dir = kScratch / "fleet";
  const std::string common = " --preset iris3 --set epochs=10 --out " + dir.string();
  REQUIRE(run("record-trace" + common + " --trace " + (dir / "trace.bin").string()) == 0);
  REQUIRE(run("sample-device" + common + " --device " + (dir / "d1.bin").string()) == 0);
  REQUIRE(run("sample-device" + common + " --set device_seed=202 --device " + (dir / "d2.bin").string()) == 0);
  REQUIRE(run("replay" + common + " --trace " + (dir / "trace.bin").string() + " --device " +
              (dir / "d1.bin").string() + " --device " + (dir / "d2.bin").string()) == 0);
  auto s = nlohmann::json::parse(slurp(dir / "replay_summary.json"));
  CHECK(s["digital_backprops"] == 0);
  CHECK(fs::exists(dir / "replay_0.csv"));
  CHECK(fs::exists(dir / "replay_1.csv"));

  // Replay on the recording device matches live training bit for bit.
  const auto live = kScratch / "fleet_live";
  REQUIRE(run("train --preset iris3 --set epochs=10 --out " + live.string()) == 0);
  auto live_summary = nlohmann::json::parse(slurp(live / "summary.json"));
  CHECK(s["devices"][0]["params_phy_hash"] == live_summary["params_phy_hash"]);

  CHECK(run("replay" + common + " --seed 99 --trace " + (dir / "trace.bin").string() + " --device " +
            (dir / "d1.bin").string()) == 3);
  {
    std::ofstream junk(dir / "junk.bin", std::ios::binary);
    junk << "ASYTTRC0garbage";
  }
  CHECK(run("replay" + common + " --trace " + (dir / "junk.bin").string() + " --device " +
            (dir / "d1.bin").string()) == 3);
}

TEST_CASE("preset listing") {
  std::string out;
  REQUIRE(run("presets", &out) == 0);
  for (const auto& name : asyt::preset_names()) CHECK(out.find(name) != std::string::npos);
}
