#pragma once

#include <Eigen/Dense>
#include <vector>

#include "svgp/kernels.hpp"

namespace svgp {

struct LowerFactor {
  Eigen::MatrixXd L;        // lower triangular, L L^T = A + jitter_used I
  double jitter_used = 0.0;

  Eigen::VectorXd solve_lower(const Eigen::Ref<const Eigen::VectorXd>& b) const {
    return L.triangularView<Eigen::Lower>().solve(b);
  }
  // (A + jitter I)^{-1} b via both triangular solves
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& b) const {
    return L.transpose().triangularView<Eigen::Upper>().solve(
        L.triangularView<Eigen::Lower>().solve(b).eval());
  }
};

// Jitter values to try in order; the first entry is usually 0.
struct JitterSchedule {
  std::vector<double> values;

  // {0, 1e-6 v, 1e-5 v, 1e-4 v}
  static JitterSchedule defaults(double v);
  // try eps first, then escalate through the default tail above eps
  static JitterSchedule starting_at(double eps, double v);
  static JitterSchedule exact(double eps) { return JitterSchedule{{eps}}; }
};

// Cholesky of A + eps I for the smallest eps in the schedule that succeeds.
// Throws conditioning_error when the schedule is exhausted.
LowerFactor chol_jittered(const Eigen::Ref<const Eigen::MatrixXd>& A, const JitterSchedule& schedule);

struct PivotedFactor {
  std::vector<int> pivots;       // chosen column indices, in selection order
  Eigen::MatrixXd factor;        // N x m partial factor F with F F^T ~ K
  Eigen::VectorXd residual_diag; // diag(K - F F^T), clamped at 0
  bool exhausted = false;        // stopped early: residual numerically zero
};

// Greedy rank-M partial Cholesky of the kernel matrix of X, pivoting on the
// largest residual diagonal (ties broken by lowest index). Never materializes
// the full matrix: one kernel column per step, O(NM) memory.
PivotedFactor pivoted_partial_chol(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                   int M);

struct EigenPairs {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // orthonormal columns, aligned with values
};

// Symmetric eigendecomposition, eigenvalues sorted descending.
EigenPairs sym_eig(const Eigen::Ref<const Eigen::MatrixXd>& A);

// 2 sum(log L_ii); throws on a non-positive diagonal entry.
double logdet_from_factor(const LowerFactor& f);

}  // namespace svgp
