#pragma once

#include <Eigen/Dense>
#include <vector>

#include "svgp/gp_exact.hpp"
#include "svgp/kernels.hpp"
#include "svgp/sgpr.hpp"

namespace svgp {

// ELBO and its gradient with respect to [log variance, log lengthscale(s),
// log sigma2], with the inducing points held fixed.
struct ElboGrad {
  double value = 0.0;
  Eigen::VectorXd grad;
};

ElboGrad elbo_with_grad(const Eigen::Ref<const Eigen::MatrixXd>& X,
                        const Eigen::Ref<const Eigen::VectorXd>& y, const KernelSpec& spec,
                        double sigma2, const Eigen::Ref<const Eigen::MatrixXd>& Z, double eps);

struct HyperoptOptions {
  int max_iters = 100;          // quasi-Newton iterations
  int history = 10;             // L-BFGS memory
  double grad_tol = 1e-6;
  bool verify_gradient = false;  // finite-difference check at the start point
  double fd_rel_tol = 1e-4;
};

struct HyperoptResult {
  KernelSpec spec;
  double sigma2 = 0.0;
  std::vector<double> elbo_trace;  // accepted objective values
  bool line_search_failed = false;
  bool gradient_check_passed = true;
  double gradient_check_rel_err = 0.0;
  int evaluations = 0;
};

// Quasi-Newton ascent of the ELBO over log-hyperparameters with Z fixed.
// Conditioning failures during line search reject the step; if no progress
// can be made the best-so-far state is returned with the failure flagged.
HyperoptResult optimize_hypers(const Dataset& data, const KernelSpec& spec0, const InducingSet& ind,
                               int budget, const HyperoptOptions& opts = {});

struct ReinitResult {
  KernelSpec spec;
  double sigma2 = 0.0;
  Eigen::MatrixXd Z;
  std::vector<double> round_elbos;  // ELBO after each accepted round
  int rounds_run = 0;
};

// Alternate hyperparameter optimization (Z fixed) with re-selection of Z by
// greedy conditional variance under the updated kernel. Stops when a
// reinitialization improves the ELBO by less than `improve_tol` nats.
ReinitResult hyperopt_reinit(const Dataset& data, const KernelSpec& spec0, int M, int rounds,
                             int budget_per_round = 100, double improve_tol = 1e-3,
                             const HyperoptOptions& opts = {});

}  // namespace svgp
