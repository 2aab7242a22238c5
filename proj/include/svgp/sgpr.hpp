#pragma once

#include <Eigen/Dense>
#include <optional>

#include "svgp/gp_exact.hpp"
#include "svgp/kernels.hpp"
#include "svgp/linalg.hpp"

namespace svgp {

enum class InducingKind { Points, Eigenfeatures };

// Either a set of M pseudo-input locations, or the first M eigenvector
// features of the training kernel matrix (which realize the optimal rank-M
// approximation and act as the quality ceiling for point-based selection).
struct InducingSet {
  InducingKind kind = InducingKind::Points;
  Eigen::MatrixXd Z;   // M x D, points kind
  int m_features = 0;  // eigenfeatures kind
  double eps = 0.0;    // jitter added to Kuu (points kind)

  static InducingSet points(Eigen::MatrixXd Z, double eps = 0.0);
  static InducingSet eigenfeatures(int m);
  int m() const { return kind == InducingKind::Points ? static_cast<int>(Z.rows()) : m_features; }
};

struct SparsePosterior {
  KernelSpec spec;
  double sigma2 = 1.0;
  double eps_used = 0.0;

  Eigen::VectorXd mu_u;     // optimal variational mean over inducing variables
  Eigen::MatrixXd sigma_u;  // optimal variational covariance

  // cached solves for prediction
  InducingKind kind = InducingKind::Points;
  Eigen::MatrixXd Z;             // points kind
  Eigen::MatrixXd Xtrain;        // eigenfeatures kind
  Eigen::MatrixXd Vm;            // eigenfeatures kind, N x M
  Eigen::VectorXd inv_sqrt_lam;  // eigenfeatures kind
  Eigen::MatrixXd L;             // chol(Kuu + eps I), points kind
  Eigen::MatrixXd LB;            // chol(I + A A^T / sigma2)
  Eigen::VectorXd c_over_s2;     // LB^{-1} A y / sigma2
};

struct BoundReport {
  int n = 0;
  int m = 0;
  double eps = 0.0;  // jitter actually used
  double elbo = 0.0;
  std::optional<double> u1;
  double u2 = 0.0;
  double t = 0.0;
  std::optional<double> zeta;
  std::optional<double> kl_upper_u1;
  double kl_upper_u2 = 0.0;
  std::optional<double> exact_kl;
};

// Collapsed evidence lower bound; O(NM^2) time, O(NM) memory, the N x N
// Nystrom matrix is never formed.
double elbo(const Dataset& data, const KernelSpec& spec, const InducingSet& ind);

SparsePosterior fit(const Dataset& data, const KernelSpec& spec, const InducingSet& ind);

struct SparsePrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;  // marginal latent variance (noise-free)
};

SparsePrediction sparse_predict(const SparsePosterior& post,
                                const Eigen::Ref<const Eigen::MatrixXd>& Xstar);

// tr(Kff - Qff)
double trace_term(const Dataset& data, const KernelSpec& spec, const InducingSet& ind);

// Upper bound on log p(y) with the trace of Kff - Qff inflating the noise.
double upper_bound_u2(const Dataset& data, const KernelSpec& spec, const InducingSet& ind);

// Tighter variant using the largest eigenvalue of Kff - Qff; needs an N x N
// eigendecomposition, so it is desk-scale only.
double upper_bound_u1(const Dataset& data, const KernelSpec& spec, const InducingSet& ind,
                      int desk_guard = kDefaultDeskGuard);

double exact_kl(const Dataset& data, const KernelSpec& spec, const InducingSet& ind,
                int desk_guard = kDefaultDeskGuard);

// KL bound from the residual trace t and operator norm zeta:
// (1/2 sigma2) (t + zeta |y|^2 / (zeta + sigma2)). Requires t >= zeta >= 0.
double kl_bound_from_residuals(double t, double zeta, double y_norm_sq, double sigma2);

// Trace-only variant (zeta replaced by t).
double kl_bound_from_trace(double t, double y_norm_sq, double sigma2);

// Interval guaranteed to contain E[KL | X, Z] when y is drawn from the prior
// model: (t / 2 sigma2, t / sigma2).
std::pair<double, double> expected_kl_interval(double t, double sigma2);

// Bounds on pointwise posterior moments implied by a small KL budget
// (gamma bounds twice the KL):  |mu1 - mu2| <= sigma2 sqrt(gamma) and
// |1 - sigma1^2/sigma2^2| < sqrt(3 gamma). Requires gamma <= 1/5.
struct MarginalMomentBounds {
  double mean_gap;
  double var_ratio_gap;
};
MarginalMomentBounds marginal_moment_bounds(double gamma, double sigma_exact);

BoundReport bound_report(const Dataset& data, const KernelSpec& spec, const InducingSet& ind,
                         bool with_u1, bool with_exact_kl = false,
                         int desk_guard = kDefaultDeskGuard);

}  // namespace svgp
