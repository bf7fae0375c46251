#pragma once

#include <memory>
#include <string>
#include <vector>

#include "holoseis/config.hpp"

namespace holoseis {

inline constexpr const char* kVersion = "holoseis 0.1.0";

// Everything derived from a config before any data is touched.
struct Experiment {
  ExperimentConfig cfg;
  std::shared_ptr<const Grid> grid;
  std::shared_ptr<const Stencil> st;
  MediumParams background, truth;
  std::vector<FrequencyContext> freqs;
  std::vector<std::shared_ptr<const GreensOperator>> g0;
  RVector w_int, w_rec;

  int n_frequencies() const { return int(freqs.size()); }
};

Experiment build_experiment(const ExperimentConfig& c);

// Adds the perturbations to a background; flow entries are stream functions.
MediumParams apply_perturbations(const MediumParams& bg, const std::vector<Perturbation>& ps);

// 1 for receivers in the pupil, 0 otherwise.
RVector pupil_mask(const ExperimentConfig& c);

std::uint64_t frequency_seed(std::uint64_t seed, int f);
std::string archive_path(const std::string& out, int f);

// Each returns the files it wrote (manifest last).
std::vector<std::string> cmd_synth(const ExperimentConfig& c, const std::string& out);

struct HologramOutput {
  std::vector<CVector> per_frequency;
  CVector band;  // frequency average
  std::vector<std::string> files;
};
HologramOutput cmd_hologram(const ExperimentConfig& c, const std::string& out);

struct KernelOutput {
  std::vector<RMatrix> kernels;  // band-averaged, one per configured pair
  std::vector<std::string> files;
};
KernelOutput cmd_kernels(const ExperimentConfig& c, const std::string& out);

struct InvertOutput {
  InversionResult result;
  std::vector<std::string> files;
};
InvertOutput cmd_invert(const ExperimentConfig& c, const std::string& out);

// Empirical correlations of the archives in out/synth, one per frequency.
std::vector<FrequencyData> load_frequency_data(const Experiment& e, const std::string& out);

// Index of the lattice node nearest to (x, y).
int nearest_node(const Lattice& lat, double x, double y);

}  // namespace holoseis
