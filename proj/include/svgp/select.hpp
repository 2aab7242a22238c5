#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "svgp/kernels.hpp"
#include "svgp/rng.hpp"
#include "svgp/sgpr.hpp"

namespace svgp {

struct SelectionResult {
  std::vector<int> indices;  // training-point indices (empty for pure centroids)
  Eigen::MatrixXd Z;         // M x D inducing inputs
  std::string method;
  std::uint64_t seed = 0;
  std::map<std::string, double> diagnostics;
};

// M distinct indices, uniform without replacement.
SelectionResult select_uniform(const Eigen::Ref<const Eigen::MatrixXd>& X, int M, std::uint64_t seed);

// k-means++ seeding followed by Lloyd iterations; Z are the centroids.
SelectionResult select_kmeanspp(const Eigen::Ref<const Eigen::MatrixXd>& X, int M, std::uint64_t seed,
                                int iters = 25);

// Greedy maximal conditional-variance selection == the pivot sequence of the
// rank-M partial Cholesky of Kff.
SelectionResult select_greedy_variance(const KernelSpec& spec,
                                       const Eigen::Ref<const Eigen::MatrixXd>& X, int M);

// Swap acceptance probability (1/2) min{1, det K_{Z'} / det K_Z} for the
// exchange chain targeting the size-M determinantal measure; i must be in Z,
// j outside it.
double mdpp_acceptance(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const std::vector<int>& Z, int i, int j);

// Exchange chain targeting the size-M determinantal measure, initialized at
// the greedy pivots. Factor updates keep each proposal at O(M^2).
class MdppChain {
public:
  MdppChain(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X, int M,
            std::uint64_t seed);

  bool step();  // one proposal; true when accepted
  const std::vector<int>& state() const { return zidx_; }
  long steps() const { return steps_; }
  long accepted() const { return accepted_; }

private:
  KernelSpec spec_;
  Eigen::MatrixXd X_;
  Eigen::MatrixXd L_;
  std::vector<int> zidx_;
  std::vector<int> comp_;
  Rng rng_;
  long steps_ = 0;
  long accepted_ = 0;
};

// Run the chain for T proposals and return its final state.
SelectionResult select_mdpp_mcmc(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                 int M, long T, std::uint64_t seed);

// Proposal count sufficient for a total-variation accuracy eps starting from
// a state of probability rho0 (planning calculator only).
double mdpp_mixing_time(int M, int N, double rho0, double eps);
// Variant using the worst-case bound on the greedy initializer's probability.
double mdpp_mixing_time_bound(int M, int N, double eps);

// Exact omega-ridge leverage scores (1/omega times the posterior variance at
// each training point under noise omega). Dense, desk-scale.
Eigen::VectorXd ridge_leverage_scores_exact(const KernelSpec& spec,
                                            const Eigen::Ref<const Eigen::MatrixXd>& X, double omega);

// Recursive approximate ridge-leverage sampling toward a target size S.
// By default each point enters independently (the returned count is random,
// recorded in diagnostics); with exact_size the result is truncated/padded to
// exactly S points.
SelectionResult select_rls_fixed(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                 int S, double delta, std::uint64_t seed, bool exact_size = false);

// sum_m lam_m / (lam_m + omega)
double effective_dimension(const Eigen::Ref<const Eigen::VectorXd>& matrix_eigs, double omega);

// Ridge-leverage sampling sized adaptively so that the residual operator norm
// is at most omega with the usual probabilistic caveats.
SelectionResult select_rls_adaptive(const KernelSpec& spec,
                                    const Eigen::Ref<const Eigen::MatrixXd>& X, double omega,
                                    double delta, std::uint64_t seed);

// Inducing variables built from the top-M eigenvectors of Kff (quality
// ceiling for any size-M point set).
InducingSet eigenfeature_inducing(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                  int M);

Eigen::MatrixXd rows_at(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& idx);

}  // namespace svgp
