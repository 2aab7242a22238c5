#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "svgp/gp_exact.hpp"
#include "svgp/kernels.hpp"
#include "svgp/rng.hpp"
#include "svgp/sgpr.hpp"

// Independent oracle implementations. Everything here deliberately takes the
// slow dense route (materialized Nystrom matrices, full eigendecompositions)
// so it shares no code with the production path it checks.
namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd qff_dense(const svgp::KernelSpec& spec, const MatrixXd& X, const MatrixXd& Z,
                          double eps) {
  MatrixXd Kuu = svgp::gram(spec, Z, Z);
  Kuu.diagonal().array() += eps;
  MatrixXd Kuf = svgp::gram(spec, Z, X);
  return Kuf.transpose() * Kuu.ldlt().solve(Kuf);
}

// log N(y; 0, S) through a full eigendecomposition
inline double mvn_logpdf_eig(const VectorXd& y, const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  double logdet = 0.0;
  double quad = 0.0;
  VectorXd w = es.eigenvectors().transpose() * y;
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    logdet += std::log(es.eigenvalues()[i]);
    quad += w[i] * w[i] / es.eigenvalues()[i];
  }
  return -0.5 * logdet - 0.5 * quad - 0.5 * static_cast<double>(y.size()) * std::log(2.0 * M_PI);
}

inline double elbo_dense(const svgp::Dataset& data, const svgp::KernelSpec& spec, const MatrixXd& Z,
                         double eps) {
  MatrixXd Q = qff_dense(spec, data.X, Z, eps);
  MatrixXd Kff = svgp::gram(spec, data.X, data.X);
  MatrixXd S = Q + data.sigma2 * MatrixXd::Identity(data.n(), data.n());
  return mvn_logpdf_eig(data.y, S) - (Kff.trace() - Q.trace()) / (2.0 * data.sigma2);
}

inline double u2_dense(const svgp::Dataset& data, const svgp::KernelSpec& spec, const MatrixXd& Z,
                       double eps) {
  MatrixXd Q = qff_dense(spec, data.X, Z, eps);
  MatrixXd Kff = svgp::gram(spec, data.X, data.X);
  double t = Kff.trace() - Q.trace();
  const int n = data.n();
  MatrixXd Sdet = Q + data.sigma2 * MatrixXd::Identity(n, n);
  MatrixXd Squad = Q + (data.sigma2 + t) * MatrixXd::Identity(n, n);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Sdet);
  double logdet = es.eigenvalues().array().log().sum();
  double quad = data.y.dot(Squad.ldlt().solve(data.y));
  return -0.5 * logdet - 0.5 * quad - 0.5 * n * std::log(2.0 * M_PI);
}

inline double power_iteration_lmax(const MatrixXd& A, int iters = 500) {
  VectorXd v = VectorXd::Ones(A.rows());
  v.normalize();
  double lam = 0.0;
  for (int i = 0; i < iters; ++i) {
    VectorXd w = A * v;
    lam = w.norm();
    if (lam == 0.0) return 0.0;
    v = w / lam;
  }
  return v.dot(A * v);
}

// orthogonal (subspace) iteration for the leading k eigenvalues
inline VectorXd top_eigs_subspace(const MatrixXd& A, int k, int iters = 200) {
  svgp::Rng rng(12345);
  MatrixXd V(A.rows(), k);
  for (Eigen::Index i = 0; i < V.rows(); ++i)
    for (int j = 0; j < k; ++j) V(i, j) = rng.normal();
  for (int it = 0; it < iters; ++it) {
    MatrixXd W = A * V;
    Eigen::HouseholderQR<MatrixXd> qr(W);
    V = qr.householderQ() * MatrixXd::Identity(A.rows(), k);
  }
  MatrixXd T = V.transpose() * A * V;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(T);
  VectorXd out(k);
  for (int i = 0; i < k; ++i) out[i] = es.eigenvalues()[k - 1 - i];
  return out;
}

inline std::vector<std::vector<int>> combinations(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<size_t>(k));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == k) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < n; ++i) {
      cur[static_cast<size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return out;
}

// random regression instance on [n_lo, n_hi] points
struct Instance {
  svgp::Dataset data;
  svgp::KernelSpec spec;
  Eigen::MatrixXd Z;
};

// m distinct rows of X, nudged apart when closer than a fraction of the
// shortest lengthscale, so the inducing covariance factors without jitter
inline Eigen::MatrixXd distinct_rows_with_separation(const Eigen::MatrixXd& X, int m,
                                                     const svgp::KernelSpec& spec, svgp::Rng& rng) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  m = std::min(m, n);
  std::vector<int> pool(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
  for (int t = 0; t < m; ++t)
    std::swap(pool[static_cast<size_t>(t)],
              pool[static_cast<size_t>(t) + rng.below(static_cast<std::uint64_t>(n - t))]);
  Eigen::MatrixXd Z(m, d);
  for (int i = 0; i < m; ++i) Z.row(i) = X.row(pool[static_cast<size_t>(i)]);
  double lmin = spec.lengthscales[0];
  for (double l : spec.lengthscales) lmin = std::min(lmin, l);
  const double min_sep = 0.25 * lmin;
  for (int pass = 0; pass < 20; ++pass) {
    bool moved = false;
    for (int i = 1; i < m; ++i) {
      for (int j = 0; j < i; ++j) {
        if ((Z.row(i) - Z.row(j)).norm() < min_sep) {
          for (int k = 0; k < d; ++k) Z(i, k) += min_sep * (2.0 * rng.uniform() - 1.0) * 2.0;
          moved = true;
        }
      }
    }
    if (!moved) break;
  }
  return Z;
}

inline Instance random_instance(std::uint64_t seed, int n_lo = 20, int n_hi = 120, int d_max = 3,
                                bool allow_matern = true) {
  svgp::Rng rng(svgp::mix_seed(seed, 0x696e7374));
  Instance inst;
  int n = n_lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_hi - n_lo + 1)));
  int d = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(d_max)));
  double v = 0.5 + 2.0 * rng.uniform();
  double ell = 0.4 + 1.2 * rng.uniform();
  int fam = static_cast<int>(rng.below(allow_matern ? 3 : 2));
  if (fam == 0) {
    inst.spec = svgp::KernelSpec::se_iso(v, ell, d);
  } else if (fam == 1) {
    std::vector<double> ls(static_cast<size_t>(d));
    for (auto& l : ls) l = 0.4 + 1.2 * rng.uniform();
    inst.spec = svgp::KernelSpec::se_ard(v, ls);
  } else {
    double nus[3] = {0.5, 1.5, 2.5};
    inst.spec = svgp::KernelSpec::matern(v, ell, nus[rng.below(3)], d);
  }
  inst.data.X.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) inst.data.X(i, j) = 2.0 * rng.normal();
  inst.data.sigma2 = 0.05 + 0.5 * rng.uniform();
  inst.data.y = svgp::sample_prior_observations(inst.spec, inst.data.X, inst.data.sigma2,
                                                svgp::mix_seed(seed, 0x79696e73));
  int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(15, std::max(1, n / 3)))));
  inst.Z = distinct_rows_with_separation(inst.data.X, m, inst.spec, rng);
  return inst;
}

// Variant whose kernel matrix factors without jitter even at Z = X: gridded
// (1D) or well-spread covariates relative to the lengthscale.
inline Instance well_conditioned_instance(std::uint64_t seed, int n_lo = 15, int n_hi = 60) {
  svgp::Rng rng(svgp::mix_seed(seed, 0x77656c6c));
  Instance inst;
  int n = n_lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_hi - n_lo + 1)));
  int d = 1 + static_cast<int>(rng.below(3));
  double v = 0.5 + 2.0 * rng.uniform();
  double ell = 0.4 + 0.8 * rng.uniform();
  inst.spec = svgp::KernelSpec::se_iso(v, ell, d);
  inst.data.X.resize(n, d);
  if (d == 1) {
    for (int i = 0; i < n; ++i)
      inst.data.X(i, 0) = 0.8 * ell * i + 0.2 * ell * (rng.uniform() - 0.5);
  } else {
    double spread = ell * std::pow(static_cast<double>(n), 1.0 / d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) inst.data.X(i, j) = spread * rng.normal();
  }
  inst.data.sigma2 = 0.05 + 0.5 * rng.uniform();
  inst.data.y = svgp::sample_prior_observations(inst.spec, inst.data.X, inst.data.sigma2,
                                                svgp::mix_seed(seed, 0x77797373));
  int m = std::max(1, n / 4);
  svgp::Rng zr(svgp::mix_seed(seed, 0x7a77656c));
  inst.Z = distinct_rows_with_separation(inst.data.X, m, inst.spec, zr);
  return inst;
}

}  // namespace oracle
