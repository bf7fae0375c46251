#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "holoseis/errors.hpp"
#include "holoseis/experiment.hpp"
#include "holoseis/io.hpp"
#include "holoseis/parallel.hpp"

using namespace holoseis;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"({
  "name": "tiny",
  "geometry": {"half_width": 0.1, "points_per_wavelength": 7, "receivers": 12, "receiver_radius": 0.2},
  "medium": {"gamma0": 0.5},
  "truth": [{"quantity": "S", "shape": "gaussian-blob", "amplitude": 1.0, "center": [0.02, 0.0], "half_width": 0.04}],
  "band": {"count": 2, "min": 4.8, "max": 5.0},
  "realizations": 30,
  "seed": 7,
  "inversion": {"quantities": ["S"], "alpha0_rel": 0.01, "max_outer": 2, "edge_layers": 0}
})";

std::string fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("holoseis_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::string write_config(const std::string& dir, const std::string& text) {
  const std::string path = dir + "/config.json";
  std::ofstream(path) << text;
  return path;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HOLOSEIS_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig tiny() { return parse_config(kTiny); }

}  // namespace

TEST(Cli, ExitCodesForBadInvocations) {
  const std::string dir = fresh_dir("exit");
  EXPECT_EQ(run_cli("synth --config " + dir + "/missing.json"), 2);
  EXPECT_EQ(run_cli("synth --config " + write_config(dir, "{\"band\": ")), 2);
  EXPECT_EQ(run_cli("synth"), 2);
  EXPECT_EQ(run_cli("synth --frobnicate"), 2);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("selftest 99"), 2);
  const std::string cfg = write_config(dir, kTiny);
  EXPECT_EQ(run_cli("invert --config " + cfg + " --out " + dir + "/none"), 2);  // no archives yet
  EXPECT_EQ(run_cli("invert --config " + cfg + " --quantity pressure"), 2);
}

TEST(Cli, SynthThroughBinaryWritesManifest) {
  const std::string dir = fresh_dir("bin");
  const std::string cfg = write_config(dir, kTiny);
  ASSERT_EQ(run_cli("synth --config " + cfg + " --out " + dir + " --seed 11 --workers 2"), 0);
  const auto m = nlohmann::json::parse(slurp(dir + "/synth/manifest_synth.json"));
  EXPECT_EQ(m["command"], "synth");
  EXPECT_EQ(m["config"]["seed"], 11);
  EXPECT_EQ(m["seeds"][0], frequency_seed(11, 0));
  EXPECT_EQ(m["files"].size(), 2u);
  EXPECT_EQ(m["version"], kVersion);
  const RealizationSet r = load_realizations(archive_path(dir, 1));
  EXPECT_EQ(r.count(), 30);
  EXPECT_EQ(r.seed, frequency_seed(11, 1));
}

TEST(Cli, SynthIsDeterministic) {
  const std::string a = fresh_dir("det_a"), b = fresh_dir("det_b");
  ExperimentConfig c = tiny();
  cmd_synth(c, a);
  set_worker_count(2);
  cmd_synth(c, b);
  set_worker_count(1);
  for (int f = 0; f < 2; ++f) EXPECT_EQ(slurp(archive_path(a, f)), slurp(archive_path(b, f)));
  c.seed = 8;
  cmd_synth(c, b);
  EXPECT_NE(slurp(archive_path(a, 0)), slurp(archive_path(b, 0)));
}

TEST(Cli, ZeroSourceGivesZeroFields) {
  const std::string dir = fresh_dir("zero");
  ExperimentConfig c = tiny();
  c.S0 = 0.0;
  c.truth.clear();
  cmd_synth(c, dir);
  const RealizationSet r = load_realizations(archive_path(dir, 0));
  EXPECT_EQ(r.fields.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Cli, HologramReloadsAndEmptyPupilIsZero) {
  const std::string dir = fresh_dir("holo");
  ExperimentConfig c = tiny();
  cmd_synth(c, dir);
  const HologramOutput h = cmd_hologram(c, dir);
  EXPECT_TRUE(io::load_matrix(dir + "/hologram/hologram_band.hsgm") == CMatrix(h.band));
  EXPECT_TRUE(io::load_matrix(dir + "/hologram/hologram_f001.hsgm") == CMatrix(h.per_frequency[1]));
  EXPECT_GT(h.band.real().minCoeff(), 0.0);
  const Experiment e = build_experiment(c);
  const FrequencyModel m = build_frequency_model(e.g0[0], e.background, e.freqs[0]);
  const CVector direct = hologram_intensity(m, load_realizations(archive_path(dir, 0)));
  EXPECT_TRUE(direct == h.per_frequency[0]);
  c.pupil_empty = true;
  const HologramOutput z = cmd_hologram(c, dir);
  EXPECT_EQ(z.band.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Cli, SingleFrequencyKernelEqualsBandOfOne) {
  const std::string dir = fresh_dir("kern");
  ExperimentConfig c = tiny();
  c.band = {1, 5.0, 5.0};
  c.kernel_pairs = {{Quantity::S, Quantity::S}, {Quantity::c, Quantity::gamma}};
  const KernelOutput k = cmd_kernels(c, dir);
  ASSERT_EQ(k.kernels.size(), 2u);
  const Experiment e = build_experiment(c);
  const FrequencyModel m = build_frequency_model(e.g0[0], e.background, e.freqs[0]);
  const NoiseWeight w = lavrentiev_weight(m.cov, default_beta(m.cov));
  const RMatrix direct = sensitivity_kernel(Quantity::c, Quantity::gamma, m, w);
  EXPECT_TRUE(direct == k.kernels[1]);
  const CMatrix file = io::load_matrix(dir + "/kernels/kernel_c_gamma.hsgm");
  EXPECT_TRUE(file.real() == k.kernels[1]);
  EXPECT_TRUE(fs::exists(dir + "/kernels/kernel_S_S_cut_t0.csv"));
}

TEST(Cli, InvertRunsOnTinyConfig) {
  const std::string dir = fresh_dir("inv");
  const ExperimentConfig c = tiny();
  cmd_synth(c, dir);
  const InvertOutput r = cmd_invert(c, dir);
  EXPECT_FALSE(r.result.stop_reason.empty());
  EXPECT_GE(r.result.history.size(), 1u);
  EXPECT_TRUE(fs::exists(dir + "/invert/reconstruction_S.csv"));
  EXPECT_TRUE(fs::exists(dir + "/invert/diagnostics.csv"));
  const auto m = nlohmann::json::parse(slurp(dir + "/invert/manifest_invert.json"));
  EXPECT_EQ(m["stop_reason"], r.result.stop_reason);
  EXPECT_GE(r.result.state.q_n.f.S.minCoeff(), 0.0);
  // Archives from a different grid are refused.
  ExperimentConfig other = c;
  other.points_per_wavelength = 8;
  EXPECT_THROW(cmd_invert(other, dir), IoError);
}

TEST(Cli, ShippedConfigsParse) {
  const fs::path dir = fs::path(HOLOSEIS_SOURCE_DIR) / "configs";
  int n = 0;
  for (const auto& f : fs::directory_iterator(dir))
    if (f.path().extension() == ".json") {
      EXPECT_NO_THROW(load_config(f.path().string())) << f.path();
      ++n;
    }
  EXPECT_GE(n, 4);
}
