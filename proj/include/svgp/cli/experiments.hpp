#pragma once

#include <optional>
#include <string>
#include <vector>

#include "svgp/cli/config.hpp"
#include "svgp/cli/csv_io.hpp"
#include "svgp/gp_exact.hpp"
#include "svgp/kernels.hpp"
#include "svgp/sgpr.hpp"
#include "svgp/select.hpp"

namespace svgp::cli {

struct RunOptions {
  std::string out_dir = ".";
  std::uint64_t seed = 0;     // master seed override
  bool seed_overridden = false;
  int threads = 1;
  int desk_guard = kDefaultDeskGuard;
};

// Covariates i.i.d. N(0, beta2 I), targets drawn from the prior model.
Dataset synth_generate(const KernelSpec& spec, int n, int d, double beta2, double sigma2,
                       std::uint64_t seed);

// Mixture-of-Gaussians covariates for selector comparisons on clustered data.
Dataset synth_generate_clustered(const KernelSpec& spec, int n, int d, int clusters,
                                 double cluster_spread, double sigma2, std::uint64_t seed);

struct TraceRow {
  std::string experiment;
  std::uint64_t seed = 0;
  long n = 0;
  int m = 0;
  std::string method;
  std::optional<double> elbo, u2, u1, exact_kl, t, rmse, nlpd;
  double wall_time = 0.0;
  std::string error;  // non-empty marks a failed cell
};

CsvTable trace_to_table(const std::vector<TraceRow>& rows);

KernelSpec kernel_from_config(const Config& cfg);
Dataset data_from_config(const Config& cfg, const RunOptions& opts);

// one subcommand each; all return a process exit code (0 ok)
int run_fit(const Config& cfg, const RunOptions& opts);
int run_bounds(const Config& cfg, const RunOptions& opts);
int run_select(const Config& cfg, const RunOptions& opts);
int run_spectrum(const Config& cfg, const RunOptions& opts);
int run_sweep(const Config& cfg, const RunOptions& opts);
int run_compare(const Config& cfg, const RunOptions& opts);
int run_hyperopt(const Config& cfg, const RunOptions& opts);

// Aggregate trace files into median and 20-80% nearest-rank quantile bands,
// grouped by the named columns.
CsvTable emit_tables(const std::vector<CsvTable>& traces, const std::vector<std::string>& group_by,
                     const std::vector<std::string>& values);

double quantile_nearest_rank(std::vector<double> values, double p);

// selector dispatch shared by compare/sweep; method is one of
// uniform|kmeanspp|greedy|mdpp|rls|rls_adaptive|eigenfeatures
InducingSet select_by_method(const std::string& method, const KernelSpec& spec, const Dataset& data,
                             int M, std::uint64_t seed, const Config& cfg);

}  // namespace svgp::cli
