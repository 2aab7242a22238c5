#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "svgp/kernels.hpp"

namespace svgp {

// Geometric spectrum of the SE kernel operator under an isotropic Gaussian
// covariate distribution: lam_m = v (2a/A)^{D/2} B^{s} with block structure
// in D > 1.
struct SeGaussSpectrum {
  double a = 0.0, b = 0.0, A = 0.0, B = 0.0;
  double alpha = 0.0;  // -log B
  double v = 1.0;
  double beta2 = 1.0;
  double lengthscale = 1.0;
  int dim = 1;
};

SeGaussSpectrum se_gauss_spectrum(double lengthscale, double beta2, double v, int dim);

// Reduce an anisotropic setup to the conservative isotropic case: shortest
// lengthscale, largest covariate standard deviation.
SeGaussSpectrum se_gauss_spectrum_worst_case(const KernelSpec& spec, const Eigen::VectorXd& beta2_per_dim, double v);

double se_gauss_eig_1d(const SeGaussSpectrum& s, int m);         // m >= 1
double se_gauss_tail_1d(const SeGaussSpectrum& s, int M);        // sum_{m > M} lam_m
std::vector<double> se_gauss_eigs_multid(const SeGaussSpectrum& s, int count);

// Explicit tail bound for D >= 1; requires M >= D^D / alpha + D - 1.
double se_gauss_tail_bound_multid(const SeGaussSpectrum& s, int M);

// Lower bound on the r-th operator eigenvalue.
double se_gauss_eig_lower(const SeGaussSpectrum& s, int r);

// Polynomially decaying spectrum model: C1 m^{-eta} <= lam_m <= C2 m^{-eta}.
struct PolyDecaySpectrum {
  double eta = 2.0;
  double C1 = 1.0;
  double C2 = 1.0;
  double v = 1.0;  // uniform bound on k(x, x), used by concentration bounds
  int dim = 1;
  double nu = 0.0;  // present when derived from a Matern kernel

  // Matern kernel with compactly supported covariates: eta = (2 nu + D)/D,
  // constants from the asymptotic spectral-density bound with support radius
  // T and density bound tau.
  static PolyDecaySpectrum from_matern(const KernelSpec& spec, double T, double tau);
};

double poly_eig_lower(const PolyDecaySpectrum& s, int m);
double poly_eig_upper(const PolyDecaySpectrum& s, int m);
double poly_tail_upper(const PolyDecaySpectrum& s, int M);  // sum_{m > M} C2 m^{-eta}
double poly_tail_lower(const PolyDecaySpectrum& s, int M);

// Eigenvalue bound for an isotropic kernel via its spectral density, for a
// covariate density bounded by tau supported in a radius-T ball. Asymptotic:
// the vanishing correction factor is dropped.
double matern_eig_bound(const KernelSpec& spec, double T, double tau, int m);

using OperatorSpectrum = std::variant<SeGaussSpectrum, PolyDecaySpectrum>;

// Conservative (upper) eigenvalue / tail evaluations used by the a-priori
// upper-bound machinery.
double op_eig(const OperatorSpectrum& s, int m);
double op_tail(const OperatorSpectrum& s, int M);
double op_signal_variance(const OperatorSpectrum& s);

struct AprioriInputs {
  long n = 0;          // data set size
  int m_or_s = 1;      // inducing count M, or target rank S for leverage bounds
  double eps_dpp = 0.0;  // total-variation accuracy of the approximate sampler
  double delta = 0.1;  // failure probability
  double gamma = 0.1;  // KL budget
  double R = 1.0;      // bound on E[|y|^2]/N
  double sigma2 = 1.0;
  double v = 1.0;
  void validate() const;
};

enum class YModel { Bounded, Prior };

// Expected-KL bound for determinantal initialization; with_probability divides
// by delta (Markov) to get a bound holding with probability 1 - delta.
double apriori_kl_mdpp(const AprioriInputs& in, double tail, YModel y, bool with_probability);

enum class RlsBound { FixedBoundedY, FixedPriorY, AdaptivePriorY, AdaptiveBoundedY };

struct RlsBoundResult {
  double kl_bound = 0.0;
  double m_bound = 0.0;
};

// Bounds for ridge-leverage initializations. The Fixed* variants bound the KL
// at target rank S = in.m_or_s and estimate the sampled count as
// c_m S log(S/delta); the Adaptive* variants guarantee KL <= gamma and bound
// the sampled count through the effective-dimension surrogate
// d = S + const * tail_S.
RlsBoundResult apriori_kl_rls(const AprioriInputs& in, double tail_S, RlsBound variant,
                              double c_m = 1.0);

// min over S of the Adaptive* effective-dimension surrogate.
struct DeffMinimum {
  int s = 1;
  double d = 0.0;
};
DeffMinimum minimize_deff_surrogate(const AprioriInputs& in, const OperatorSpectrum& spec,
                                    RlsBound variant, int s_cap);

enum class Planner { Se1dDpp, Se1dRls, SeMultiDpp, SeMultiRls, MaternDpp, MaternRls };

struct PlannerResult {
  int m = -1;           // smallest M (or S) achieving the KL budget
  double bound = 0.0;   // bound value at that size
  double m_bound = 0.0; // for RLS planners: implied sample-count bound
  bool vacuous = false; // no size up to N achieves the budget
};

// Smallest M (or S) whose a-priori bound meets in.gamma, by upward scan of the
// evaluated bound. The DPP planners use the expectation bound with the
// sampler accuracy absorbing half the budget; the RLS planners use the
// fixed-rank probabilistic bound at in.delta.
PlannerResult required_m(Planner planner, const AprioriInputs& in, const OperatorSpectrum& spec);

// Closed-form size for the 1D SE / Gaussian determinantal planner, exposed
// for cross-checking against the scanned value.
int se1d_dpp_closed_form_m(const AprioriInputs& in, const SeGaussSpectrum& s);

// (1/2) sum_{m > M} [lam_m / sigma2 - log(1 + lam_m / sigma2)] over matrix
// eigenvalues; a floor on the KL for any y and any M inducing variables.
double kl_lower_bound_from_eigs(const Eigen::Ref<const Eigen::VectorXd>& matrix_eigs, int M,
                                double sigma2);

// High-probability bound on |lam_m - matrix eig_m / N| via spectral
// concentration, with free truncation index r.
double eig_concentration_bound(const OperatorSpectrum& s, int m, int r, long N, double delta);

enum class LowerPlanner { SeGauss1d, SeGaussMulti, Poly };

struct LowerGrowth {
  double predicted_lower = 0.0;
  bool valid = false;
  double eta = 0.0;    // exponent chosen internally (SeGauss1d / Poly regimes)
  int r = 1;           // truncation index used in the concentration bound
  double rel_err = 0.0;
};

// Certified KL growth floor N lam_{M+1} (1 - rel_err) / (4 sigma2); valid only
// when the concentration guard holds and the leading ratio exceeds 3.
LowerGrowth kl_lower_growth(LowerPlanner planner, long N, int M, double delta,
                            const OperatorSpectrum& spec, double sigma2);

}  // namespace svgp
