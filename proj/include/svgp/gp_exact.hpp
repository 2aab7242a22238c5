#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "svgp/kernels.hpp"
#include "svgp/linalg.hpp"

namespace svgp {

inline constexpr int kDefaultDeskGuard = 4000;

struct Dataset {
  Eigen::MatrixXd X;  // N x D covariates
  Eigen::VectorXd y;  // N targets
  double sigma2 = 1.0;

  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }
  void validate() const;
};

// Exact GP regression. This is the reference oracle for KL computations and
// the convergence experiments, hence the desk-scale guard: it exists to be
// compared against, not to run at production sizes.
struct ExactPosterior {
  LowerFactor factor;      // Kff + sigma2 I
  Eigen::VectorXd alpha;   // (Kff + sigma2 I)^{-1} y
  Eigen::MatrixXd X;
  KernelSpec spec;
  double sigma2 = 1.0;
};

double log_marginal_likelihood(const Dataset& data, const KernelSpec& spec,
                               int desk_guard = kDefaultDeskGuard);

ExactPosterior exact_fit(const Dataset& data, const KernelSpec& spec,
                         int desk_guard = kDefaultDeskGuard);

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

Prediction exact_predict(const ExactPosterior& post, const Eigen::Ref<const Eigen::MatrixXd>& Xstar);

Prediction exact_predict(const Dataset& data, const KernelSpec& spec,
                         const Eigen::Ref<const Eigen::MatrixXd>& Xstar,
                         int desk_guard = kDefaultDeskGuard);

// One draw of y ~ N(0, Kff + sigma2 I); deterministic given the seed.
Eigen::VectorXd sample_prior_observations(const KernelSpec& spec,
                                          const Eigen::Ref<const Eigen::MatrixXd>& X, double sigma2,
                                          std::uint64_t seed);

}  // namespace svgp
