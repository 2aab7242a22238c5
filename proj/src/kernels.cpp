#include "svgp/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace svgp {

namespace {

double sq_distance_scaled(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y) {
  // sum_d (x_d - y_d)^2 / l_d^2
  double r2 = 0.0;
  if (spec.family == KernelFamily::SqExpArd) {
    for (int d = 0; d < spec.dim; ++d) {
      double u = (x[d] - y[d]) / spec.lengthscales[static_cast<size_t>(d)];
      r2 += u * u;
    }
  } else {
    double l = spec.lengthscales[0];
    r2 = (x - y).squaredNorm() / (l * l);
  }
  return r2;
}

double matern_radial(const KernelSpec& spec, double z) {
  // z = ||x - y|| / l. Closed forms for the common half-integer orders,
  // modified Bessel otherwise.
  if (z <= 0.0) return spec.variance;
  double nu = spec.nu;
  if (nu == 0.5) return spec.variance * std::exp(-z);
  if (nu == 1.5) return spec.variance * (1.0 + z) * std::exp(-z);
  if (nu == 2.5) return spec.variance * (1.0 + z + z * z / 3.0) * std::exp(-z);
  if (z < 1e-8) return spec.variance;
  double scale = std::pow(2.0, 1.0 - nu) / std::tgamma(nu);
  return spec.variance * scale * std::pow(z, nu) * std::cyl_bessel_k(nu, z);
}

void check_point(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != spec.dim) throw std::invalid_argument("kernel input dimension mismatch");
  if (!x.allFinite()) throw std::invalid_argument("kernel input has non-finite coordinates");
}

}  // namespace

std::string family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::SqExpIso: return "se";
    case KernelFamily::SqExpArd: return "se_ard";
    case KernelFamily::Matern: return "matern";
  }
  return "?";
}

KernelFamily family_from_name(const std::string& name) {
  if (name == "se" || name == "se_iso" || name == "rbf") return KernelFamily::SqExpIso;
  if (name == "se_ard" || name == "ard") return KernelFamily::SqExpArd;
  if (name == "matern") return KernelFamily::Matern;
  throw std::invalid_argument("unknown kernel family: " + name);
}

void KernelSpec::validate() const {
  if (dim < 1) throw std::invalid_argument("kernel dimension must be >= 1");
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw std::invalid_argument("kernel variance must be positive");
  size_t expect = family == KernelFamily::SqExpArd ? static_cast<size_t>(dim) : 1u;
  if (lengthscales.size() != expect)
    throw std::invalid_argument("kernel lengthscale count does not match family/dimension");
  for (double l : lengthscales)
    if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("lengthscales must be positive");
  if (family == KernelFamily::Matern && (!(nu > 0.0) || !std::isfinite(nu)))
    throw std::invalid_argument("Matern smoothness must be positive");
}

KernelSpec KernelSpec::se_iso(double variance, double lengthscale, int dim) {
  KernelSpec s;
  s.family = KernelFamily::SqExpIso;
  s.variance = variance;
  s.lengthscales = {lengthscale};
  s.dim = dim;
  s.validate();
  return s;
}

KernelSpec KernelSpec::se_ard(double variance, std::vector<double> lengthscales) {
  KernelSpec s;
  s.family = KernelFamily::SqExpArd;
  s.variance = variance;
  s.dim = static_cast<int>(lengthscales.size());
  s.lengthscales = std::move(lengthscales);
  s.validate();
  return s;
}

KernelSpec KernelSpec::matern(double variance, double lengthscale, double nu, int dim) {
  KernelSpec s;
  s.family = KernelFamily::Matern;
  s.variance = variance;
  s.lengthscales = {lengthscale};
  s.nu = nu;
  s.dim = dim;
  s.validate();
  return s;
}

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  check_point(spec, x);
  check_point(spec, y);
  switch (spec.family) {
    case KernelFamily::SqExpIso:
    case KernelFamily::SqExpArd:
      return spec.variance * std::exp(-0.5 * sq_distance_scaled(spec, x, y));
    case KernelFamily::Matern: {
      double z = (x - y).norm() / spec.lengthscales[0];
      return matern_radial(spec, z);
    }
  }
  throw std::logic_error("unreachable");
}

Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& A,
                     const Eigen::Ref<const Eigen::MatrixXd>& B) {
  spec.validate();
  if (A.cols() != spec.dim || B.cols() != spec.dim)
    throw std::invalid_argument("gram: point dimension mismatch");
  const auto n = A.rows();
  const auto m = B.rows();
  Eigen::MatrixXd G(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      G(i, j) = eval_kernel(spec, A.row(i).transpose(), B.row(j).transpose());
  bool same = (n == m) && (A.data() == B.data());
  if (same) G = 0.5 * (G + G.transpose()).eval();
  return G;
}

Eigen::VectorXd gram_diag(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X) {
  Eigen::VectorXd d(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    d[i] = eval_kernel(spec, X.row(i).transpose(), X.row(i).transpose());
  return d;
}

double spectral_density_matern(const KernelSpec& spec, double omega) {
  if (spec.family != KernelFamily::Matern)
    throw std::invalid_argument("spectral_density_matern requires a Matern kernel");
  if (omega < 0.0) throw std::invalid_argument("frequency must be non-negative");
  double l = spec.lengthscales[0];
  double D = static_cast<double>(spec.dim);
  double lw = l * omega;
  double norm = std::pow(l, D) * std::tgamma(spec.nu + 0.5 * D) /
                (std::pow(M_PI, 0.5 * D) * std::tgamma(spec.nu));
  return norm * std::pow(1.0 + lw * lw, -(spec.nu + 0.5 * D));
}

int n_lengthscales(const KernelSpec& spec) {
  return spec.family == KernelFamily::SqExpArd ? spec.dim : 1;
}

void eval_kernel_grad_log(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y, double* grad) {
  double k = eval_kernel(spec, x, y);
  grad[0] = k;  // d k / d log(variance)
  switch (spec.family) {
    case KernelFamily::SqExpArd: {
      for (int d = 0; d < spec.dim; ++d) {
        double l = spec.lengthscales[static_cast<size_t>(d)];
        double u = (x[d] - y[d]) / l;
        grad[1 + d] = k * u * u;
      }
      break;
    }
    case KernelFamily::SqExpIso: {
      double l = spec.lengthscales[0];
      double r2 = (x - y).squaredNorm() / (l * l);
      grad[1] = k * r2;
      break;
    }
    case KernelFamily::Matern: {
      double l = spec.lengthscales[0];
      double z = (x - y).norm() / l;
      double v = spec.variance;
      double g;
      if (z <= 0.0) {
        g = 0.0;
      } else if (spec.nu == 0.5) {
        g = v * z * std::exp(-z);
      } else if (spec.nu == 1.5) {
        g = v * z * z * std::exp(-z);
      } else if (spec.nu == 2.5) {
        g = v * z * z * (1.0 + z) / 3.0 * std::exp(-z);
      } else if (z < 1e-8) {
        g = 0.0;
      } else {
        // d/dz [z^nu K_nu(z)] = -z^nu K_{nu-1}(z); chain rule with dz/dlog(l) = -z.
        // K is even in its order, so pass |nu - 1|.
        double scale = std::pow(2.0, 1.0 - spec.nu) / std::tgamma(spec.nu);
        g = v * scale * std::pow(z, spec.nu + 1.0) * std::cyl_bessel_k(std::abs(spec.nu - 1.0), z);
      }
      grad[1] = g;
      break;
    }
  }
}

}  // namespace svgp
