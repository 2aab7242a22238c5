#include "svgp/sgpr.hpp"

#include <cmath>
#include <stdexcept>

#include "svgp/errors.hpp"

namespace svgp {

namespace {

// Shared intermediates for the collapsed bound family. Everything is phrased
// in terms of the whitened cross-covariance A = L^{-1} Kuf so that the same
// code serves inducing points and eigenfeatures.
struct Core {
  KernelSpec spec;
  InducingKind kind;
  Eigen::MatrixXd Z;
  Eigen::MatrixXd Xtrain;
  Eigen::MatrixXd Vm;
  Eigen::VectorXd inv_sqrt_lam;
  Eigen::MatrixXd L;

  Eigen::MatrixXd A;  // M x N
  double eps_used = 0.0;
  double kdiag_sum = 0.0;
  double t = 0.0;
  int n = 0, m = 0;
};

Core build_core(const Dataset& data, const KernelSpec& spec, const InducingSet& ind) {
  data.validate();
  spec.validate();
  Core core;
  core.spec = spec;
  core.kind = ind.kind;
  core.n = data.n();

  if (ind.kind == InducingKind::Points) {
    if (ind.Z.rows() < 1) throw std::invalid_argument("inducing set must contain at least one point");
    if (ind.Z.cols() != data.d())
      throw std::invalid_argument("inducing points dimension mismatch");
    if (ind.eps < 0.0) throw std::invalid_argument("jitter must be non-negative");
    core.Z = ind.Z;
    core.m = static_cast<int>(ind.Z.rows());
    Eigen::MatrixXd Kuu = gram(spec, ind.Z, ind.Z);
    LowerFactor f = chol_jittered(Kuu, JitterSchedule::starting_at(ind.eps, spec.variance));
    core.L = f.L;
    core.eps_used = f.jitter_used;
    Eigen::MatrixXd Kuf = gram(spec, ind.Z, data.X);
    core.A = core.L.triangularView<Eigen::Lower>().solve(Kuf);
  } else {
    if (ind.m_features < 1) throw std::invalid_argument("need at least one eigenfeature");
    if (core.n > kDefaultDeskGuard)
      throw std::invalid_argument("eigenfeature inducing sets are desk-scale only");
    int m = std::min(ind.m_features, core.n);
    EigenPairs eig = sym_eig(gram(spec, data.X, data.X));
    core.Xtrain = data.X;
    core.Vm = eig.vectors.leftCols(m);
    core.m = m;
    Eigen::VectorXd lam = eig.values.head(m).cwiseMax(0.0);
    double floor = (lam.size() > 0 ? lam[0] : 0.0) * 1e-15;
    core.inv_sqrt_lam.resize(m);
    core.A.resize(m, core.n);
    for (int j = 0; j < m; ++j) {
      if (lam[j] > floor && lam[j] > 0.0) {
        core.inv_sqrt_lam[j] = 1.0 / std::sqrt(lam[j]);
        core.A.row(j) = std::sqrt(lam[j]) * core.Vm.col(j).transpose();
      } else {
        // numerically dead mode; contributes nothing to Qff
        core.inv_sqrt_lam[j] = 0.0;
        core.A.row(j).setZero();
      }
    }
  }

  core.kdiag_sum = gram_diag(spec, data.X).sum();
  core.t = std::max(0.0, core.kdiag_sum - core.A.squaredNorm());
  return core;
}

// whitened cross-covariance L^{-1} k_u(x*) for a batch of points
Eigen::MatrixXd whiten_cross(const Core& core, const Eigen::Ref<const Eigen::MatrixXd>& Xstar) {
  if (core.kind == InducingKind::Points) {
    Eigen::MatrixXd Kus = gram(core.spec, core.Z, Xstar);
    return core.L.triangularView<Eigen::Lower>().solve(Kus);
  }
  Eigen::MatrixXd Kxs = gram(core.spec, core.Xtrain, Xstar);
  return core.inv_sqrt_lam.asDiagonal() * (core.Vm.transpose() * Kxs);
}

// log N(y; 0, A^T A + s I) computed through the M x M capacitance matrix
double low_rank_gaussian_logpdf(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double s) {
  const double n = static_cast<double>(y.size());
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(A.rows(), A.rows()) + A * A.transpose() / s;
  Eigen::LLT<Eigen::MatrixXd> llt(B);
  if (llt.info() != Eigen::Success)
    throw conditioning_error("capacitance factorization failed", 0.0);
  Eigen::MatrixXd LB = llt.matrixL();
  double logdet = n * std::log(s);
  for (Eigen::Index i = 0; i < LB.rows(); ++i) logdet += 2.0 * std::log(LB(i, i));
  Eigen::VectorXd c = LB.triangularView<Eigen::Lower>().solve(A * y);
  double quad = y.squaredNorm() / s - c.squaredNorm() / (s * s);
  return -0.5 * logdet - 0.5 * quad - 0.5 * n * std::log(2.0 * M_PI);
}

double elbo_from_core(const Core& core, const Dataset& data) {
  return low_rank_gaussian_logpdf(core.A, data.y, data.sigma2) - core.t / (2.0 * data.sigma2);
}

// U-style bound: the quadratic/evidence part is evaluated with the noise
// inflated by `slack`, while the log-determinant keeps sigma2.
double upper_bound_from_core(const Core& core, const Dataset& data, double slack) {
  const double s2 = data.sigma2;
  const double n = static_cast<double>(core.n);
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(core.m, core.m) + core.A * core.A.transpose() / s2;
  Eigen::LLT<Eigen::MatrixXd> llt(B);
  if (llt.info() != Eigen::Success)
    throw conditioning_error("capacitance factorization failed", 0.0);
  double logdet = n * std::log(s2);
  Eigen::MatrixXd LB = llt.matrixL();
  for (int i = 0; i < core.m; ++i) logdet += 2.0 * std::log(LB(i, i));

  const double s = s2 + slack;
  Eigen::MatrixXd Bs = Eigen::MatrixXd::Identity(core.m, core.m) + core.A * core.A.transpose() / s;
  Eigen::LLT<Eigen::MatrixXd> llts(Bs);
  if (llts.info() != Eigen::Success)
    throw conditioning_error("capacitance factorization failed", 0.0);
  Eigen::VectorXd c = Eigen::MatrixXd(llts.matrixL()).triangularView<Eigen::Lower>().solve(core.A * data.y);
  double quad = data.y.squaredNorm() / s - c.squaredNorm() / (s * s);
  return -0.5 * logdet - 0.5 * quad - 0.5 * n * std::log(2.0 * M_PI);
}

double opnorm_residual(const Core& core, const Dataset& data, int desk_guard) {
  if (core.n > desk_guard)
    throw std::invalid_argument("operator-norm diagnostic exceeds the desk-scale guard");
  Eigen::MatrixXd R = gram(core.spec, data.X, data.X) - core.A.transpose() * core.A;
  EigenPairs eig = sym_eig(0.5 * (R + R.transpose()));
  return std::max(0.0, eig.values[0]);
}

}  // namespace

InducingSet InducingSet::points(Eigen::MatrixXd Z, double eps) {
  InducingSet s;
  s.kind = InducingKind::Points;
  s.Z = std::move(Z);
  s.eps = eps;
  return s;
}

InducingSet InducingSet::eigenfeatures(int m) {
  if (m < 1) throw std::invalid_argument("need at least one eigenfeature");
  InducingSet s;
  s.kind = InducingKind::Eigenfeatures;
  s.m_features = m;
  return s;
}

double elbo(const Dataset& data, const KernelSpec& spec, const InducingSet& ind) {
  Core core = build_core(data, spec, ind);
  return elbo_from_core(core, data);
}

double trace_term(const Dataset& data, const KernelSpec& spec, const InducingSet& ind) {
  Core core = build_core(data, spec, ind);
  return core.t;
}

double upper_bound_u2(const Dataset& data, const KernelSpec& spec, const InducingSet& ind) {
  Core core = build_core(data, spec, ind);
  return upper_bound_from_core(core, data, core.t);
}

double upper_bound_u1(const Dataset& data, const KernelSpec& spec, const InducingSet& ind,
                      int desk_guard) {
  Core core = build_core(data, spec, ind);
  return upper_bound_from_core(core, data, opnorm_residual(core, data, desk_guard));
}

double exact_kl(const Dataset& data, const KernelSpec& spec, const InducingSet& ind, int desk_guard) {
  return log_marginal_likelihood(data, spec, desk_guard) - elbo(data, spec, ind);
}

SparsePosterior fit(const Dataset& data, const KernelSpec& spec, const InducingSet& ind) {
  Core core = build_core(data, spec, ind);
  const double s2 = data.sigma2;

  SparsePosterior post;
  post.spec = spec;
  post.sigma2 = s2;
  post.eps_used = core.eps_used;
  post.kind = core.kind;
  post.Z = core.Z;
  post.Xtrain = core.Xtrain;
  post.Vm = core.Vm;
  post.inv_sqrt_lam = core.inv_sqrt_lam;
  post.L = core.L;

  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(core.m, core.m) + core.A * core.A.transpose() / s2;
  Eigen::LLT<Eigen::MatrixXd> llt(B);
  if (llt.info() != Eigen::Success)
    throw conditioning_error("capacitance factorization failed", core.eps_used);
  post.LB = llt.matrixL();
  Eigen::VectorXd c = post.LB.triangularView<Eigen::Lower>().solve(core.A * data.y);
  post.c_over_s2 = c / s2;

  // whitened optimum: q(u) has mean L B^{-1} A y / sigma2 and covariance L B^{-1} L^T
  Eigen::VectorXd binv_ay = post.LB.transpose().triangularView<Eigen::Upper>().solve(c);
  Eigen::MatrixXd Binv = B.llt().solve(Eigen::MatrixXd::Identity(core.m, core.m));
  if (core.kind == InducingKind::Points) {
    post.mu_u = core.L * binv_ay / s2;
    post.sigma_u = core.L * Binv * core.L.transpose();
  } else {
    Eigen::VectorXd linv = core.inv_sqrt_lam;  // chol of diag(1/lam)
    post.mu_u = linv.asDiagonal() * binv_ay / s2;
    post.sigma_u = linv.asDiagonal() * Binv * linv.asDiagonal();
  }
  return post;
}

SparsePrediction sparse_predict(const SparsePosterior& post,
                                const Eigen::Ref<const Eigen::MatrixXd>& Xstar) {
  Core core;  // reconstruct just enough for whiten_cross
  core.spec = post.spec;
  core.kind = post.kind;
  core.Z = post.Z;
  core.Xtrain = post.Xtrain;
  core.Vm = post.Vm;
  core.inv_sqrt_lam = post.inv_sqrt_lam;
  core.L = post.L;
  if (post.kind == InducingKind::Points && Xstar.cols() != post.Z.cols())
    throw std::invalid_argument("sparse_predict: dimension mismatch");
  if (post.kind == InducingKind::Eigenfeatures && Xstar.cols() != post.Xtrain.cols())
    throw std::invalid_argument("sparse_predict: dimension mismatch");

  Eigen::MatrixXd Astar = whiten_cross(core, Xstar);                      // M x T
  Eigen::MatrixXd G = post.LB.triangularView<Eigen::Lower>().solve(Astar);  // M x T

  SparsePrediction out;
  out.mean = G.transpose() * post.c_over_s2;
  out.var.resize(Xstar.rows());
  for (Eigen::Index i = 0; i < Xstar.rows(); ++i) {
    double kss = eval_kernel(post.spec, Xstar.row(i).transpose(), Xstar.row(i).transpose());
    out.var[i] = kss - Astar.col(i).squaredNorm() + G.col(i).squaredNorm();
  }
  return out;
}

double kl_bound_from_residuals(double t, double zeta, double y_norm_sq, double sigma2) {
  if (t < 0.0 || zeta < 0.0 || y_norm_sq < 0.0 || !(sigma2 > 0.0))
    throw std::invalid_argument("kl_bound_from_residuals: negative inputs");
  return (t + zeta * y_norm_sq / (zeta + sigma2)) / (2.0 * sigma2);
}

double kl_bound_from_trace(double t, double y_norm_sq, double sigma2) {
  return kl_bound_from_residuals(t, t, y_norm_sq, sigma2);
}

std::pair<double, double> expected_kl_interval(double t, double sigma2) {
  if (t < 0.0 || !(sigma2 > 0.0)) throw std::invalid_argument("expected_kl_interval: negative inputs");
  return {t / (2.0 * sigma2), t / sigma2};
}

MarginalMomentBounds marginal_moment_bounds(double gamma, double sigma_exact) {
  if (gamma < 0.0 || gamma > 0.2)
    throw std::domain_error("marginal_moment_bounds: budget must lie in [0, 1/5]");
  if (!(sigma_exact > 0.0)) throw std::invalid_argument("marginal_moment_bounds: sigma must be positive");
  return {sigma_exact * std::sqrt(gamma), std::sqrt(3.0 * gamma)};
}

BoundReport bound_report(const Dataset& data, const KernelSpec& spec, const InducingSet& ind,
                         bool with_u1, bool with_exact_kl, int desk_guard) {
  Core core = build_core(data, spec, ind);
  BoundReport rep;
  rep.n = core.n;
  rep.m = core.m;
  rep.eps = core.eps_used;
  rep.t = core.t;
  rep.elbo = elbo_from_core(core, data);
  rep.u2 = upper_bound_from_core(core, data, core.t);
  rep.kl_upper_u2 = rep.u2 - rep.elbo;
  if (with_u1) {
    double zeta = opnorm_residual(core, data, desk_guard);
    rep.zeta = zeta;
    rep.u1 = upper_bound_from_core(core, data, zeta);
    rep.kl_upper_u1 = *rep.u1 - rep.elbo;
  }
  if (with_exact_kl)
    rep.exact_kl = log_marginal_likelihood(data, spec, desk_guard) - rep.elbo;
  return rep;
}

}  // namespace svgp
