#include <CLI11.hpp>
#include <iostream>

#include "svgp/cli/config.hpp"
#include "svgp/cli/csv_io.hpp"
#include "svgp/cli/experiments.hpp"
#include "svgp/errors.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  int desk_guard = svgp::kDefaultDeskGuard;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "experiment config file")->required();
  cmd->add_option("--out", c.out_dir, "output directory");
  cmd->add_option("--seed", c.seed, "master seed override")->each([&](const std::string&) {
    c.seed_set = true;
  });
  cmd->add_option("--threads", c.threads, "worker threads for sweeps");
  cmd->add_option("--desk-guard", c.desk_guard, "ceiling for exact (cubic-cost) computations");
}

int dispatch(const std::string& kind, const Common& c) {
  svgp::cli::Config cfg = svgp::cli::Config::parse_file(c.config_path);
  svgp::cli::RunOptions opts;
  opts.out_dir = c.out_dir;
  opts.seed = c.seed;
  opts.seed_overridden = c.seed_set;
  opts.threads = c.threads;
  opts.desk_guard = c.desk_guard;

  std::string k = kind.empty() ? cfg.get_str("experiment", "kind") : kind;
  if (k == "fit") return svgp::cli::run_fit(cfg, opts);
  if (k == "bounds") return svgp::cli::run_bounds(cfg, opts);
  if (k == "select") return svgp::cli::run_select(cfg, opts);
  if (k == "spectrum") return svgp::cli::run_spectrum(cfg, opts);
  if (k == "sweep") return svgp::cli::run_sweep(cfg, opts);
  if (k == "compare") return svgp::cli::run_compare(cfg, opts);
  if (k == "hyperopt") return svgp::cli::run_hyperopt(cfg, opts);
  throw std::invalid_argument("config: unknown experiment kind: " + k);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse variational GP regression and bound certification"};
  app.require_subcommand(1);

  const std::vector<std::string> kinds = {"fit",   "bounds",  "select",  "spectrum",
                                          "sweep", "compare", "hyperopt"};
  std::map<std::string, Common> commons;
  for (const auto& k : kinds) {
    CLI::App* cmd = app.add_subcommand(k, k + " experiment");
    add_common(cmd, commons[k]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  std::string kind;
  for (const auto& k : kinds)
    if (app.get_subcommand(k)->parsed()) kind = k;

  try {
    return dispatch(kind, commons[kind]);
  } catch (const svgp::conditioning_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
