// Command-line driver: synth, hologram, kernels, invert, selftest.
#include <CLI11.hpp>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "holoseis/errors.hpp"
#include "holoseis/experiment.hpp"
#include "holoseis/parallel.hpp"
#include "holoseis/selftest.hpp"

using namespace holoseis;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config, out, quantity;
  int workers = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

std::vector<Quantity> parse_quantity_list(const std::string& s) {
  std::vector<Quantity> qs;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) qs.push_back(parse_quantity(item));
  if (qs.empty()) throw ConfigError("--quantity needs at least one name");
  return qs;
}

ExperimentConfig resolve(const Common& c, const std::string& command) {
  if (c.config.empty()) throw ConfigError(command + " needs --config");
  ExperimentConfig cfg = load_config(c.config);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.workers > 0) cfg.workers = c.workers;
  if (c.seed_set) cfg.seed = c.seed;
  if (!c.quantity.empty()) {
    const auto qs = parse_quantity_list(c.quantity);
    if (command == "invert") cfg.inversion.quantities = qs;
    if (command == "kernels") {
      cfg.kernel_pairs.clear();
      for (Quantity q : qs) cfg.kernel_pairs.push_back({q, q});
    }
    if (command == "hologram" && (qs.size() != 1 || qs[0] != Quantity::S))
      throw ConfigError("holograms are computed for the source strength only");
  }
  cfg.validate();
  set_worker_count(cfg.workers);
  return cfg;
}

void print_files(const std::vector<std::string>& files) {
  for (const auto& f : files) std::cout << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Passive imaging by iterative holography"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common c;
  std::vector<int> criteria;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", c.config, "experiment configuration (JSON)");
    sub->add_option("--out", c.out, "output directory (overrides the config)");
    sub->add_option("--workers", c.workers, "frequency-level worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", c.seed, "random seed (overrides the config)")->each([&](const std::string&) {
      c.seed_set = true;
    });
    sub->add_option("--quantity", c.quantity, "comma-separated quantities: S,c,rho,gamma,u");
  };
  CLI::App* synth = app.add_subcommand("synth", "sample wavefield realizations at the truth medium");
  CLI::App* holo = app.add_subcommand("hologram", "Lindsey-Braun hologram intensities from the archives");
  CLI::App* kern = app.add_subcommand("kernels", "band-averaged sensitivity kernels of the background");
  CLI::App* inv = app.add_subcommand("invert", "iteratively regularised Gauss-Newton reconstruction");
  CLI::App* self = app.add_subcommand("selftest", "run the acceptance criteria");
  for (CLI::App* s : {synth, holo, kern, inv}) add_common(s);
  self->add_option("criteria", criteria, "criterion numbers (default: all)");
  self->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (self->parsed()) {
      if (c.workers > 0) set_worker_count(c.workers);
      int failed = 0;
      run_selftest(criteria, [&](const CriterionResult& r) {
        std::cout << format_result(r) << std::endl;
        failed += !r.passed;
      });
      return failed ? 1 : 0;
    }
    if (synth->parsed()) {
      const ExperimentConfig cfg = resolve(c, "synth");
      print_files(cmd_synth(cfg, cfg.output_dir));
    } else if (holo->parsed()) {
      const ExperimentConfig cfg = resolve(c, "hologram");
      print_files(cmd_hologram(cfg, cfg.output_dir).files);
    } else if (kern->parsed()) {
      const ExperimentConfig cfg = resolve(c, "kernels");
      print_files(cmd_kernels(cfg, cfg.output_dir).files);
    } else if (inv->parsed()) {
      const ExperimentConfig cfg = resolve(c, "invert");
      const InvertOutput r = cmd_invert(cfg, cfg.output_dir);
      std::cout << "stop: " << r.result.stop_reason << " after " << r.result.state.iteration << " iterations\n";
      print_files(r.files);
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
