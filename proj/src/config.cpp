#include "holoseis/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "holoseis/errors.hpp"

namespace holoseis {

using nlohmann::json;

std::vector<double> BandSpec::frequencies() const {
  std::vector<double> f;
  if (count == 1) return {0.5 * (f_min + f_max)};
  for (int i = 0; i < count; ++i) f.push_back(f_min + (f_max - f_min) * i / double(count - 1));
  return f;
}

namespace {

std::string shape_name(Shape s) {
  switch (s) {
    case Shape::uniform: return "uniform";
    case Shape::gaussian_blob: return "gaussian-blob";
    case Shape::block: return "block";
  }
  return "uniform";
}

// Rejects misspelt keys instead of silently using defaults.
void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void get(const json& j, const char* key, T& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

Quantity quantity_of(const json& j) {
  try {
    return parse_quantity(j.get<std::string>());
  } catch (const json::exception&) {
    throw ConfigError("quantity names must be strings");
  } catch (const UsageError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(half_width > 0.0)) throw ConfigError("geometry.half_width must be positive");
  if (points_per_wavelength < 7.0) throw ConfigError("geometry.points_per_wavelength must be at least 7");
  if (n_receivers < 2) throw ConfigError("geometry.receivers must be at least 2");
  if (!(receiver_radius > std::sqrt(2.0) * half_width))
    throw ConfigError("geometry.receiver_radius must enclose the interior box");
  if (!(c0 > 0.0) || !(rho0 > 0.0) || gamma0 < 0.0 || S0 < 0.0) throw ConfigError("invalid background medium");
  if (band.count < 1 || !(band.f_min > 0.0) || band.f_max < band.f_min) throw ConfigError("invalid frequency band");
  if (realizations < 1) throw ConfigError("realizations must be at least 1");
  for (int r : pupil)
    if (r < 0 || r >= n_receivers) throw ConfigError("pupil receiver index out of range");
  if (inversion.quantities.empty()) throw ConfigError("inversion.quantities must not be empty");
  if (!(inversion.tau > 0.0) || !(inversion.beta_rel > 0.0)) throw ConfigError("inversion.tau and beta must be positive");
  if (inversion.max_outer < 0 || inversion.max_cg < 1) throw ConfigError("inversion iteration limits are invalid");
  if (!(inversion.alpha0_rel > 0.0)) throw ConfigError("inversion.alpha0_rel must be positive");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (output_dir.empty()) throw ConfigError("output directory must not be empty");
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config",
             {"name", "geometry", "medium", "truth", "band", "realizations", "seed", "beta_mode", "hologram",
              "kernels", "inversion", "output", "workers"});
  ExperimentConfig c;
  get(j, "name", c.name);
  if (j.contains("geometry")) {
    const json& g = j["geometry"];
    check_keys(g, "geometry", {"half_width", "points_per_wavelength", "receivers", "receiver_radius", "receiver_phase"});
    get(g, "half_width", c.half_width);
    get(g, "points_per_wavelength", c.points_per_wavelength);
    get(g, "receivers", c.n_receivers);
    get(g, "receiver_radius", c.receiver_radius);
    get(g, "receiver_phase", c.receiver_phase);
  }
  if (j.contains("medium")) {
    const json& m = j["medium"];
    check_keys(m, "medium", {"c0", "rho0", "gamma0", "S0"});
    get(m, "c0", c.c0);
    get(m, "rho0", c.rho0);
    get(m, "gamma0", c.gamma0);
    get(m, "S0", c.S0);
  }
  if (j.contains("truth")) {
    if (!j["truth"].is_array()) throw ConfigError("truth must be a list of perturbations");
    for (const json& t : j["truth"]) {
      check_keys(t, "truth entry", {"quantity", "shape", "amplitude", "center", "half_width"});
      Perturbation p;
      if (!t.contains("quantity")) throw ConfigError("truth entry needs a quantity");
      p.quantity = quantity_of(t["quantity"]);
      std::string shape = "gaussian-blob";
      get(t, "shape", shape);
      p.shape = parse_shape(shape);
      get(t, "amplitude", p.amplitude);
      std::array<double, 2> ctr{0.0, 0.0};
      get(t, "center", ctr);
      p.center_x = ctr[0];
      p.center_y = ctr[1];
      get(t, "half_width", p.half_width);
      if (!(p.half_width > 0.0)) throw ConfigError("truth half_width must be positive");
      c.truth.push_back(p);
    }
  }
  if (j.contains("band")) {
    const json& b = j["band"];
    check_keys(b, "band", {"count", "min", "max"});
    get(b, "count", c.band.count);
    get(b, "min", c.band.f_min);
    c.band.f_max = c.band.f_min;
    get(b, "max", c.band.f_max);
  }
  get(j, "realizations", c.realizations);
  get(j, "seed", c.seed);
  std::string mode = "exact";
  get(j, "beta_mode", mode);
  if (mode == "exact") c.beta_mode = BetaMode::exact;
  else if (mode == "imaginary-part") c.beta_mode = BetaMode::imaginary_part;
  else throw ConfigError("beta_mode must be 'exact' or 'imaginary-part'");
  c.inversion.beta_mode = c.beta_mode;
  if (j.contains("hologram")) {
    const json& h = j["hologram"];
    check_keys(h, "hologram", {"pupil"});
    if (h.contains("pupil")) {
      if (h["pupil"].is_string()) {
        const std::string p = h["pupil"];
        if (p == "empty") c.pupil_empty = true;
        else if (p != "full") throw ConfigError("hologram.pupil must be 'full', 'empty' or a list of receivers");
      } else {
        get(h, "pupil", c.pupil);
        if (c.pupil.empty()) c.pupil_empty = true;
      }
    }
  }
  if (j.contains("kernels")) {
    const json& k = j["kernels"];
    check_keys(k, "kernels", {"pairs", "targets", "full"});
    if (k.contains("pairs")) {
      c.kernel_pairs.clear();
      for (const json& p : k["pairs"]) {
        if (!p.is_array() || p.size() != 2) throw ConfigError("kernel pairs are [q, q'] lists");
        c.kernel_pairs.push_back({quantity_of(p[0]), quantity_of(p[1])});
      }
    }
    get(k, "targets", c.kernel_targets);
    get(k, "full", c.kernel_full);
  }
  if (j.contains("inversion")) {
    const json& v = j["inversion"];
    check_keys(v, "inversion",
               {"quantities", "alpha0", "alpha0_rel", "tau", "beta", "max_outer", "max_cg", "cg_tol", "weighted",
                "smoothing_wavelengths", "edge_layers", "mass_conservation", "max_backtrack"});
    if (v.contains("quantities")) {
      c.inversion.quantities.clear();
      for (const json& q : v["quantities"]) c.inversion.quantities.push_back(quantity_of(q));
    }
    get(v, "alpha0", c.inversion.alpha0);
    get(v, "alpha0_rel", c.inversion.alpha0_rel);
    get(v, "tau", c.inversion.tau);
    get(v, "beta", c.inversion.beta_rel);
    get(v, "max_outer", c.inversion.max_outer);
    get(v, "max_cg", c.inversion.max_cg);
    get(v, "cg_tol", c.inversion.cg_tol);
    get(v, "weighted", c.inversion.weighted);
    get(v, "smoothing_wavelengths", c.smoothing_wavelengths);
    get(v, "edge_layers", c.inversion.edge_layers);
    get(v, "mass_conservation", c.inversion.mass_conservation);
    get(v, "max_backtrack", c.inversion.max_backtrack);
  }
  get(j, "output", c.output_dir);
  get(j, "workers", c.workers);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["geometry"] = {{"half_width", c.half_width},
                   {"points_per_wavelength", c.points_per_wavelength},
                   {"receivers", c.n_receivers},
                   {"receiver_radius", c.receiver_radius},
                   {"receiver_phase", c.receiver_phase}};
  j["medium"] = {{"c0", c.c0}, {"rho0", c.rho0}, {"gamma0", c.gamma0}, {"S0", c.S0}};
  j["truth"] = json::array();
  for (const auto& p : c.truth)
    j["truth"].push_back({{"quantity", to_string(p.quantity)},
                          {"shape", shape_name(p.shape)},
                          {"amplitude", p.amplitude},
                          {"center", {p.center_x, p.center_y}},
                          {"half_width", p.half_width}});
  j["band"] = {{"count", c.band.count}, {"min", c.band.f_min}, {"max", c.band.f_max}};
  j["realizations"] = c.realizations;
  j["seed"] = c.seed;
  j["beta_mode"] = c.beta_mode == BetaMode::exact ? "exact" : "imaginary-part";
  if (c.pupil_empty) j["hologram"]["pupil"] = "empty";
  else if (c.pupil.empty()) j["hologram"]["pupil"] = "full";
  else j["hologram"]["pupil"] = c.pupil;
  json pairs = json::array();
  for (const auto& p : c.kernel_pairs) pairs.push_back({to_string(p[0]), to_string(p[1])});
  j["kernels"] = {{"pairs", pairs}, {"targets", c.kernel_targets}, {"full", c.kernel_full}};
  json qs = json::array();
  for (Quantity q : c.inversion.quantities) qs.push_back(to_string(q));
  j["inversion"] = {{"quantities", qs},
                    {"alpha0", c.inversion.alpha0},
                    {"alpha0_rel", c.inversion.alpha0_rel},
                    {"tau", c.inversion.tau},
                    {"beta", c.inversion.beta_rel},
                    {"max_outer", c.inversion.max_outer},
                    {"max_cg", c.inversion.max_cg},
                    {"cg_tol", c.inversion.cg_tol},
                    {"weighted", c.inversion.weighted},
                    {"smoothing_wavelengths", c.smoothing_wavelengths},
                    {"edge_layers", c.inversion.edge_layers},
                    {"mass_conservation", c.inversion.mass_conservation},
                    {"max_backtrack", c.inversion.max_backtrack}};
  j["output"] = c.output_dir;
  j["workers"] = c.workers;
  return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  // The output directory and worker count do not change results.
  ExperimentConfig k = c;
  k.output_dir = "-";
  k.workers = 1;
  const std::string s = config_to_json(k);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace holoseis
