#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace svgp {

enum class KernelFamily { SqExpIso, SqExpArd, Matern };

std::string family_name(KernelFamily f);
KernelFamily family_from_name(const std::string& name);

// Stationary kernel description. For SqExpArd `lengthscales` has one entry
// per input dimension; the other families use a single shared lengthscale.
struct KernelSpec {
  KernelFamily family = KernelFamily::SqExpIso;
  double variance = 1.0;
  std::vector<double> lengthscales{1.0};
  double nu = 1.5;  // Matern smoothness, ignored otherwise
  int dim = 1;

  double lengthscale(int d) const {
    return family == KernelFamily::SqExpArd ? lengthscales[static_cast<size_t>(d)] : lengthscales[0];
  }

  // throws std::invalid_argument on malformed parameters
  void validate() const;

  static KernelSpec se_iso(double variance, double lengthscale, int dim);
  static KernelSpec se_ard(double variance, std::vector<double> lengthscales);
  static KernelSpec matern(double variance, double lengthscale, double nu, int dim);
};

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

// Entry (i, j) = k(A_i, B_j); rows of A and B are points. When the two point
// lists alias the same data the result is symmetrized as (G + G^T)/2.
Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& A,
                     const Eigen::Ref<const Eigen::MatrixXd>& B);

Eigen::VectorXd gram_diag(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X);

// Isotropic Matern spectral density at radial frequency omega >= 0.
double spectral_density_matern(const KernelSpec& spec, double omega);

// d k(x,y) / d log(theta) for theta = variance followed by each lengthscale
// (one entry for iso/Matern, D entries for ARD). Used by the hyperparameter
// optimizer; grad must have size 1 + n_lengthscales(spec).
void eval_kernel_grad_log(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y, double* grad);

int n_lengthscales(const KernelSpec& spec);

}  // namespace svgp
