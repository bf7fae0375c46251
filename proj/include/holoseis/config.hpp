#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "holoseis/holography.hpp"
#include "holoseis/inversion.hpp"
#include "holoseis/medium.hpp"

namespace holoseis {

// One additive perturbation of the background. Flow perturbations are given as
// a stream function psi (u = curl psi / rho) with the same shape parameters.
struct Perturbation {
  Quantity quantity = Quantity::S;
  Shape shape = Shape::gaussian_blob;
  double amplitude = 0.0;
  double center_x = 0.0, center_y = 0.0;
  double half_width = 0.1;
};

// Frequencies are in cycles per unit time (c0 = 1 units): omega = 2 pi f.
struct BandSpec {
  int count = 1;
  double f_min = 5.0, f_max = 5.0;
  std::vector<double> frequencies() const;
};

struct ExperimentConfig {
  std::string name = "experiment";

  // geometry
  double half_width = 0.4;
  double points_per_wavelength = 8.0;
  int n_receivers = 60;
  double receiver_radius = 0.6;
  double receiver_phase = 0.0;

  // background medium
  double c0 = 1.0, rho0 = 1.0, gamma0 = 0.1, S0 = 1.0;
  std::vector<Perturbation> truth;

  BandSpec band;
  int realizations = 200;
  std::uint64_t seed = 1;
  BetaMode beta_mode = BetaMode::exact;

  // hologram
  std::vector<int> pupil;  // receiver indices; empty means all
  bool pupil_empty = false;

  // kernels
  std::vector<std::array<Quantity, 2>> kernel_pairs = {{Quantity::S, Quantity::S}};
  std::vector<std::array<double, 2>> kernel_targets = {{0.0, 0.0}};
  bool kernel_full = true;  // also write full matrices, not only cuts

  // inversion
  InversionOptions inversion;
  double smoothing_wavelengths = 0.125;

  std::string output_dir = "out";
  int workers = 1;

  double wavelength_min() const { return c0 / band.f_max; }
  void validate() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& c);
// FNV-1a of the canonical JSON form.
std::uint64_t config_hash(const ExperimentConfig& c);

}  // namespace holoseis
