#include "holoseis/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "holoseis/errors.hpp"
#include "holoseis/io.hpp"
#include "holoseis/parallel.hpp"

namespace holoseis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os << j.dump(2) << "\n";
}

std::string write_manifest(const Experiment& e, const std::string& dir, const std::string& command,
                           const std::vector<std::string>& files, json extra = json::object()) {
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["config_hash"] = hex(config_hash(e.cfg));
  m["config"] = json::parse(config_to_json(e.cfg));
  m["grid_hash"] = hex(e.grid->hash());
  m["interior_nodes"] = e.grid->n_interior();
  m["receivers"] = e.grid->n_receivers();
  json seeds = json::array(), freqs = json::array();
  for (int f = 0; f < e.n_frequencies(); ++f) {
    seeds.push_back(frequency_seed(e.cfg.seed, f));
    freqs.push_back(e.freqs[f].omega / (2 * kPi));
  }
  m["frequencies"] = freqs;
  m["seeds"] = seeds;
  json names = json::array();
  for (const auto& f : files) names.push_back(fs::path(f).filename().string());
  m["files"] = names;
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  const std::string path = join(dir, "manifest_" + command + ".json");
  write_json(path, m);
  return path;
}

void write_field_csv(const std::string& path, const Lattice& lat, const std::vector<std::string>& names,
                     const std::vector<const RVector*>& cols) {
  std::vector<std::string> header = {"x", "y"};
  header.insert(header.end(), names.begin(), names.end());
  std::vector<std::vector<double>> rows;
  for (int iy = 0; iy < lat.ny; ++iy)
    for (int ix = 0; ix < lat.nx; ++ix) {
      const int i = lat.index(ix, iy);
      std::vector<double> r = {lat.x(ix), lat.y(iy)};
      for (const RVector* c : cols) r.push_back((*c)[i]);
      rows.push_back(std::move(r));
    }
  io::write_csv(path, header, rows);
}

CMatrix as_column(const CVector& v) { return CMatrix(v); }

}  // namespace

int nearest_node(const Lattice& lat, double x, double y) {
  const int ix = std::clamp(int(std::floor((x - lat.x0) / lat.h)), 0, lat.nx - 1);
  const int iy = std::clamp(int(std::floor((y - lat.y0) / lat.h)), 0, lat.ny - 1);
  return lat.index(ix, iy);
}

std::uint64_t frequency_seed(std::uint64_t seed, int f) {
  // SplitMix64 finaliser keeps neighbouring frequencies decorrelated.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * std::uint64_t(f + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string archive_path(const std::string& out, int f) {
  char name[64];
  std::snprintf(name, sizeof name, "realizations_f%03d.hsrz", f);
  return join(join(out, "synth"), name);
}

MediumParams apply_perturbations(const MediumParams& bg, const std::vector<Perturbation>& ps) {
  MediumParams p = bg;
  const Stencil& st = *bg.stencil;
  for (const auto& d : ps) {
    const RVector f = d.amplitude * shape_field(st.lattice, d.shape, d.center_x, d.center_y, d.half_width);
    switch (d.quantity) {
      case Quantity::S: p.f.S += f; break;
      case Quantity::c: p.f.c += f; break;
      case Quantity::rho: p.f.rho += f; break;
      case Quantity::gamma: p.f.gamma += f; break;
      case Quantity::u:
        // u = curl(psi) / rho conserves mass discretely on the same stencil.
        p.f.u[0] += RVector(st.dy * f).cwiseQuotient(p.f.rho);
        p.f.u[1] += RVector(-(st.dx * f)).cwiseQuotient(p.f.rho);
        break;
    }
  }
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("truth medium is invalid: ") + e.what());
  }
  return p;
}

RVector pupil_mask(const ExperimentConfig& c) {
  if (c.pupil_empty) return RVector::Zero(c.n_receivers);
  if (c.pupil.empty()) return RVector::Ones(c.n_receivers);
  RVector m = RVector::Zero(c.n_receivers);
  for (int r : c.pupil) m[r] = 1.0;
  return m;
}

Experiment build_experiment(const ExperimentConfig& c) {
  c.validate();
  Experiment e;
  e.cfg = c;
  DeskGridSpec s;
  s.half_width = c.half_width;
  s.wavelength = c.wavelength_min();
  s.points_per_wavelength = c.points_per_wavelength;
  s.n_receivers = c.n_receivers;
  s.receiver_radius = c.receiver_radius;
  s.receiver_phase = c.receiver_phase;
  e.grid = std::make_shared<const Grid>(make_desk_grid(s));
  e.st = make_stencil(*e.grid->lattice);
  e.background = uniform_medium(e.st, c.c0, c.rho0, c.gamma0, c.S0);
  e.truth = apply_perturbations(e.background, c.truth);
  const auto fs_ = c.band.frequencies();
  e.freqs.resize(fs_.size());
  e.g0.resize(fs_.size());
  for (std::size_t f = 0; f < fs_.size(); ++f) {
    e.freqs[f].omega = 2 * kPi * fs_[f];
    e.freqs[f].n_frequencies = int(fs_.size());
    e.freqs[f].band_min = c.band.f_min;
    e.freqs[f].band_max = c.band.f_max;
  }
  parallel_for(fs_.size(), [&](std::size_t f) {
    const double w = e.freqs[f].omega;
    e.g0[f] = std::make_shared<const GreensOperator>(
        assemble_green(e.grid, reference_wavenumber(w, c.c0, c.gamma0), 2, w));
  });
  e.w_int.resize(e.grid->n_interior());
  for (int i = 0; i < e.grid->n_interior(); ++i) e.w_int[i] = e.grid->weights[e.grid->interior_idx[i]];
  e.w_rec.resize(e.grid->n_receivers());
  for (int i = 0; i < e.grid->n_receivers(); ++i) e.w_rec[i] = e.grid->weights[e.grid->receiver_idx[i]];
  return e;
}

std::vector<std::string> cmd_synth(const ExperimentConfig& c, const std::string& out) {
  const Experiment e = build_experiment(c);
  const std::string dir = join(out, "synth");
  io::ensure_directory(dir);
  std::vector<std::string> files(e.n_frequencies());
  // Frequencies are independent; the sampler is parallel inside each one.
  for (int f = 0; f < e.n_frequencies(); ++f) {
    const FrequencyModel m = build_frequency_model(e.g0[f], e.truth, e.freqs[f], nullptr, c.beta_mode);
    const RealizationSet r = sample_wavefields(m.hp, *m.green, c.realizations, frequency_seed(c.seed, f));
    files[f] = archive_path(out, f);
    save_realizations(files[f], r);
  }
  files.push_back(write_manifest(e, dir, "synth", files, {{"realizations", c.realizations}}));
  return files;
}

std::vector<FrequencyData> load_frequency_data(const Experiment& e, const std::string& out) {
  std::vector<FrequencyData> data(e.n_frequencies());
  for (int f = 0; f < e.n_frequencies(); ++f) {
    const std::string path = archive_path(out, f);
    if (!fs::exists(path)) throw IoError("missing realization archive " + path + " (run synth first)");
    const RealizationSet r = load_realizations(path);
    if (r.grid_hash != e.grid->hash()) throw IoError(path + " was synthesised on a different grid");
    if (std::abs(r.omega - e.freqs[f].omega) > 1e-12 * e.freqs[f].omega)
      throw IoError(path + " belongs to a different frequency");
    data[f].fc = e.freqs[f];
    data[f].g0 = e.g0[f];
    data[f].corr = empirical_corr(r, e.w_rec).matrix;
    data[f].n_realizations = r.count();
  }
  return data;
}

HologramOutput cmd_hologram(const ExperimentConfig& c, const std::string& out) {
  const Experiment e = build_experiment(c);
  const std::string dir = join(out, "hologram");
  io::ensure_directory(dir);
  const RVector pupil = pupil_mask(c);
  HologramOutput h;
  h.per_frequency.resize(e.n_frequencies());
  h.band = CVector::Zero(e.grid->n_interior());
  for (int f = 0; f < e.n_frequencies(); ++f) {
    const std::string path = archive_path(out, f);
    if (!fs::exists(path)) throw IoError("missing realization archive " + path + " (run synth first)");
    const RealizationSet r = load_realizations(path);
    if (r.grid_hash != e.grid->hash()) throw IoError(path + " was synthesised on a different grid");
    // Lindsey-Braun: propagate with the background Green's function.
    const FrequencyModel m = build_frequency_model(e.g0[f], e.background, e.freqs[f], nullptr, c.beta_mode);
    h.per_frequency[f] = hologram_intensity(m, r, &pupil);
    h.band += h.per_frequency[f] / double(e.n_frequencies());
    char name[64];
    std::snprintf(name, sizeof name, "hologram_f%03d.hsgm", f);
    h.files.push_back(join(dir, name));
    io::save_matrix(h.files.back(), as_column(h.per_frequency[f]), io::MatrixKind::hologram);
  }
  h.files.push_back(join(dir, "hologram_band.hsgm"));
  io::save_matrix(h.files.back(), as_column(h.band), io::MatrixKind::hologram);
  const RVector re = h.band.real(), im = h.band.imag();
  h.files.push_back(join(dir, "hologram_band.csv"));
  write_field_csv(h.files.back(), *e.grid->lattice, {"re", "im"}, {&re, &im});
  json pup = json::array();
  for (int i = 0; i < pupil.size(); ++i)
    if (pupil[i] != 0.0) pup.push_back(i);
  h.files.push_back(write_manifest(e, dir, "hologram", h.files, {{"quantity", "S"}, {"pupil", pup}}));
  return h;
}

KernelOutput cmd_kernels(const ExperimentConfig& c, const std::string& out) {
  const Experiment e = build_experiment(c);
  const std::string dir = join(out, "kernels");
  io::ensure_directory(dir);
  KernelOutput k;
  std::vector<FrequencyModel> models(e.n_frequencies());
  std::vector<NoiseWeight> weights(e.n_frequencies());
  parallel_for(std::size_t(e.n_frequencies()), [&](std::size_t f) {
    models[f] = build_frequency_model(e.g0[f], e.background, e.freqs[f], nullptr, c.beta_mode);
    weights[f] = c.inversion.weighted
                     ? lavrentiev_weight(models[f].cov, default_beta(models[f].cov, c.inversion.beta_rel))
                     : identity_weight(models[f].w_rec);
  });
  const Lattice& lat = *e.grid->lattice;
  for (const auto& pair : c.kernel_pairs) {
    std::vector<RMatrix> parts(e.n_frequencies());
    parallel_for(std::size_t(e.n_frequencies()),
                 [&](std::size_t f) { parts[f] = sensitivity_kernel(pair[0], pair[1], models[f], weights[f]); });
    RMatrix avg = RMatrix::Zero(parts[0].rows(), parts[0].cols());
    for (const auto& p : parts) avg += p / double(parts.size());
    const std::string stem = "kernel_" + to_string(pair[0]) + "_" + to_string(pair[1]);
    if (c.kernel_full) {
      k.files.push_back(join(dir, stem + ".hsgm"));
      io::save_matrix(k.files.back(), avg.cast<cplx>(), io::MatrixKind::kernel);
    }
    // Horizontal and vertical cuts through each target (first flow block).
    for (std::size_t t = 0; t < c.kernel_targets.size(); ++t) {
      const int row = nearest_node(lat, c.kernel_targets[t][0], c.kernel_targets[t][1]);
      const int tx = row % lat.nx, ty = row / lat.nx;
      std::vector<std::vector<double>> rows;
      for (int ix = 0; ix < lat.nx; ++ix) rows.push_back({0.0, lat.x(ix), avg(row, lat.index(ix, ty))});
      for (int iy = 0; iy < lat.ny; ++iy) rows.push_back({1.0, lat.y(iy), avg(row, lat.index(tx, iy))});
      k.files.push_back(join(dir, stem + "_cut_t" + std::to_string(t) + ".csv"));
      io::write_csv(k.files.back(), {"axis", "coordinate", "value"}, rows);
    }
    k.kernels.push_back(std::move(avg));
  }
  json pairs = json::array();
  for (const auto& p : c.kernel_pairs) pairs.push_back({to_string(p[0]), to_string(p[1])});
  k.files.push_back(write_manifest(e, dir, "kernels", k.files,
                                   {{"pairs", pairs}, {"weighted", c.inversion.weighted}, {"band_average", true}}));
  return k;
}

InvertOutput cmd_invert(const ExperimentConfig& c, const std::string& out) {
  const Experiment e = build_experiment(c);
  const std::string dir = join(out, "invert");
  io::ensure_directory(dir);
  const std::vector<FrequencyData> data = load_frequency_data(e, out);
  InversionOptions o = c.inversion;
  o.smoothing_width = c.smoothing_wavelengths * c.wavelength_min();
  if (o.checkpoint_dir.empty()) o.checkpoint_dir = dir;
  const bool truth_known = !c.truth.empty();
  InvertOutput res;
  res.result = run_irgnm(e.background, data, o, truth_known ? &e.truth : nullptr);
  write_diagnostics(res.result, dir);
  res.files = {join(dir, "diagnostics.csv"), join(dir, "summary.json")};
  const MediumParams& q = res.result.state.q_n;
  const Lattice& lat = *e.grid->lattice;
  for (Quantity k : o.quantities) {
    const std::string name = to_string(k);
    if (k == Quantity::u) {
      CMatrix m(q.size(), 2);
      m.col(0) = q.f.u[0].cast<cplx>();
      m.col(1) = q.f.u[1].cast<cplx>();
      res.files.push_back(join(dir, "reconstruction_u.hsgm"));
      io::save_matrix(res.files.back(), m, io::MatrixKind::field);
      res.files.push_back(join(dir, "reconstruction_u.csv"));
      write_field_csv(res.files.back(), lat, {"ux", "uy", "ux_true", "uy_true"},
                      {&q.f.u[0], &q.f.u[1], &e.truth.f.u[0], &e.truth.f.u[1]});
      continue;
    }
    const RVector& v = k == Quantity::S ? q.f.S : k == Quantity::c ? q.f.c : k == Quantity::rho ? q.f.rho : q.f.gamma;
    const RVector& t = k == Quantity::S   ? e.truth.f.S
                       : k == Quantity::c ? e.truth.f.c
                       : k == Quantity::rho ? e.truth.f.rho
                                            : e.truth.f.gamma;
    res.files.push_back(join(dir, "reconstruction_" + name + ".hsgm"));
    io::save_matrix(res.files.back(), CMatrix(v.cast<cplx>()), io::MatrixKind::field);
    res.files.push_back(join(dir, "reconstruction_" + name + ".csv"));
    write_field_csv(res.files.back(), lat, {name, name + "_true"}, {&v, &t});
  }
  json extra = {{"stop_reason", res.result.stop_reason},
                {"iterations", res.result.state.iteration},
                {"alpha_0", res.result.state.alpha_0},
                {"alpha0_rel", o.alpha0_rel},
                {"smoothing_width", o.smoothing_width}};
  res.files.push_back(write_manifest(e, dir, "invert", res.files, extra));
  return res;
}

}  // namespace holoseis
