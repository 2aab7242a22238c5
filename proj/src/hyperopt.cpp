#include "svgp/hyperopt.hpp"

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>

#include "svgp/errors.hpp"
#include "svgp/linalg.hpp"
#include "svgp/select.hpp"

namespace svgp {

namespace {

int n_hypers(const KernelSpec& spec) { return 1 + n_lengthscales(spec) + 1; }

Eigen::VectorXd pack_log(const KernelSpec& spec, double sigma2) {
  Eigen::VectorXd th(n_hypers(spec));
  th[0] = std::log(spec.variance);
  for (int i = 0; i < n_lengthscales(spec); ++i) th[1 + i] = std::log(spec.lengthscales[static_cast<size_t>(i)]);
  th[th.size() - 1] = std::log(sigma2);
  return th;
}

void unpack_log(const Eigen::VectorXd& th, KernelSpec& spec, double& sigma2) {
  spec.variance = std::exp(th[0]);
  for (int i = 0; i < n_lengthscales(spec); ++i) spec.lengthscales[static_cast<size_t>(i)] = std::exp(th[1 + i]);
  sigma2 = std::exp(th[th.size() - 1]);
}

}  // namespace

ElboGrad elbo_with_grad(const Eigen::Ref<const Eigen::MatrixXd>& X,
                        const Eigen::Ref<const Eigen::VectorXd>& y, const KernelSpec& spec,
                        double sigma2, const Eigen::Ref<const Eigen::MatrixXd>& Z, double eps) {
  spec.validate();
  if (!(sigma2 > 0.0)) throw std::invalid_argument("elbo_with_grad: sigma2 must be positive");
  const int n = static_cast<int>(X.rows());
  const int m = static_cast<int>(Z.rows());
  const int nl = n_lengthscales(spec);
  const int nh = 1 + nl + 1;

  Eigen::MatrixXd Kuu = gram(spec, Z, Z);
  LowerFactor f = chol_jittered(Kuu, JitterSchedule::starting_at(eps, spec.variance));
  Eigen::MatrixXd Kuf = gram(spec, Z, X);
  Eigen::MatrixXd A = f.L.triangularView<Eigen::Lower>().solve(Kuf);  // m x n

  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(m, m) + A * A.transpose() / sigma2;
  Eigen::LLT<Eigen::MatrixXd> lltB(B);
  if (lltB.info() != Eigen::Success)
    throw conditioning_error("elbo_with_grad: capacitance factorization failed", f.jitter_used);
  Eigen::MatrixXd LB = lltB.matrixL();

  Eigen::VectorXd kdiag = gram_diag(spec, X);
  double trace_t = std::max(0.0, kdiag.sum() - A.squaredNorm());

  Eigen::VectorXd Ay = A * y;
  Eigen::VectorXd c = LB.triangularView<Eigen::Lower>().solve(Ay);
  double logdetB = 0.0;
  for (int i = 0; i < m; ++i) logdetB += 2.0 * std::log(LB(i, i));

  ElboGrad out;
  out.value = -0.5 * (n * std::log(sigma2) + logdetB) -
              0.5 * (y.squaredNorm() / sigma2 - c.squaredNorm() / (sigma2 * sigma2)) -
              0.5 * n * std::log(2.0 * M_PI) - trace_t / (2.0 * sigma2);

  // alpha = (Qff + sigma2 I)^{-1} y through the capacitance matrix
  Eigen::MatrixXd Binv = lltB.solve(Eigen::MatrixXd::Identity(m, m));
  Eigen::VectorXd BinvAy = lltB.solve(Ay);
  Eigen::VectorXd alpha = (y - A.transpose() * BinvAy / sigma2) / sigma2;
  Eigen::VectorXd Aalpha = A * alpha;

  // coefficient matrices of the differentials:
  //   dELBO = tr(Ct^T dKuf) + tr(P dKuu) + sum_n w dkdiag_n + g_s dsigma2
  // where H = G^{-1} - alpha alpha^T - I/sigma2, G = Qff + sigma2 I.
  Eigen::MatrixXd AH = (Binv - Eigen::MatrixXd::Identity(m, m)) * A / sigma2 -
                       Aalpha * alpha.transpose();
  Eigen::MatrixXd J = f.L.transpose().triangularView<Eigen::Upper>().solve(AH);  // m x n
  Eigen::MatrixXd AHAt = (2.0 * Eigen::MatrixXd::Identity(m, m) - B - Binv) -
                         Aalpha * Aalpha.transpose();
  Eigen::MatrixXd P =
      0.5 * f.L.transpose().triangularView<Eigen::Upper>().solve(
                Eigen::MatrixXd(f.L.transpose().triangularView<Eigen::Upper>().solve(AHAt).transpose()));
  // P = 0.5 L^{-T} AHAt L^{-1}; built via two transposed solves

  const double w_diag = -1.0 / (2.0 * sigma2);

  // d sigma2 coefficient: -tr(G^{-1})/2 + |alpha|^2/2 + t/(2 sigma2^2)
  Eigen::MatrixXd CB = LB.triangularView<Eigen::Lower>().solve(A);
  double trGinv = (n - CB.squaredNorm() / sigma2) / sigma2;
  double g_sigma2 = -0.5 * trGinv + 0.5 * alpha.squaredNorm() + trace_t / (2.0 * sigma2 * sigma2);

  out.grad = Eigen::VectorXd::Zero(nh);
  out.grad[nh - 1] = g_sigma2 * sigma2;  // chain rule to log sigma2

  std::vector<double> gbuf(static_cast<size_t>(1 + nl));
  // Kuf contraction (coefficient -J) and kdiag contraction
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      eval_kernel_grad_log(spec, Z.row(i).transpose(), X.row(j).transpose(), gbuf.data());
      for (int h = 0; h < 1 + nl; ++h) out.grad[h] -= J(i, j) * gbuf[static_cast<size_t>(h)];
    }
    // diagonal entries: d k(x,x)/d log v = v, lengthscale derivatives vanish
    out.grad[0] += w_diag * spec.variance;
  }
  // Kuu contraction (coefficient P, symmetric)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      eval_kernel_grad_log(spec, Z.row(i).transpose(), Z.row(j).transpose(), gbuf.data());
      for (int h = 0; h < 1 + nl; ++h) out.grad[h] += P(i, j) * gbuf[static_cast<size_t>(h)];
    }
  }
  return out;
}

namespace {

struct Objective {
  const Dataset* data;
  const InducingSet* ind;
  KernelSpec proto;
  int* evals;

  // minimize the negative ELBO over packed log-hyperparameters
  double operator()(const Eigen::VectorXd& th, Eigen::VectorXd& grad) const {
    KernelSpec spec = proto;
    double sigma2 = 0.0;
    unpack_log(th, spec, sigma2);
    ++(*evals);
    ElboGrad eg = elbo_with_grad(data->X, data->y, spec, sigma2, ind->Z, ind->eps);
    grad = -eg.grad;
    return -eg.value;
  }
};

}  // namespace

HyperoptResult optimize_hypers(const Dataset& data, const KernelSpec& spec0, const InducingSet& ind,
                               int budget, const HyperoptOptions& opts) {
  data.validate();
  spec0.validate();
  if (ind.kind != InducingKind::Points)
    throw std::invalid_argument("optimize_hypers: inducing points required");

  HyperoptResult res;
  res.spec = spec0;
  res.sigma2 = data.sigma2;
  int evals = 0;
  Objective obj{&data, &ind, spec0, &evals};

  Eigen::VectorXd th = pack_log(spec0, data.sigma2);
  const int dim = static_cast<int>(th.size());
  Eigen::VectorXd g(dim);
  double fx;
  try {
    fx = obj(th, g);
  } catch (const conditioning_error&) {
    res.line_search_failed = true;
    return res;
  }
  res.elbo_trace.push_back(-fx);

  if (opts.verify_gradient) {
    double worst = 0.0;
    Eigen::VectorXd gtmp(dim);
    for (int i = 0; i < dim; ++i) {
      double h = 1e-5 * std::max(1.0, std::abs(th[i]));
      Eigen::VectorXd tp = th, tm = th;
      tp[i] += h;
      tm[i] -= h;
      double fp = obj(tp, gtmp);
      double fm = obj(tm, gtmp);
      double fd = (fp - fm) / (2.0 * h);
      double scale = std::max({std::abs(fd), std::abs(g[i]), 1e-8});
      worst = std::max(worst, std::abs(fd - g[i]) / scale);
    }
    res.gradient_check_rel_err = worst;
    res.gradient_check_passed = worst < opts.fd_rel_tol;
  }

  if (budget <= 0) {
    res.evaluations = evals;
    return res;
  }

  // L-BFGS with Armijo backtracking; conditioning failures behave like +inf.
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd best_th = th;
  double best_fx = fx;

  int iters = std::min(budget, opts.max_iters > 0 ? opts.max_iters : budget);
  for (int it = 0; it < iters; ++it) {
    if (g.norm() < opts.grad_tol * std::max(1.0, std::abs(fx))) break;

    // two-loop recursion
    Eigen::VectorXd q = g;
    std::vector<double> alpha_hist(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha_hist[static_cast<size_t>(i)] = rho_hist[static_cast<size_t>(i)] * s_hist[static_cast<size_t>(i)].dot(q);
      q -= alpha_hist[static_cast<size_t>(i)] * y_hist[static_cast<size_t>(i)];
    }
    double h0 = 1.0;
    if (!s_hist.empty()) {
      const auto& sl = s_hist.back();
      const auto& yl = y_hist.back();
      h0 = sl.dot(yl) / yl.dot(yl);
    }
    q *= h0;
    for (size_t i = 0; i < s_hist.size(); ++i) {
      double beta = rho_hist[i] * y_hist[i].dot(q);
      q += s_hist[i] * (alpha_hist[i] - beta);
    }
    Eigen::VectorXd dir = -q;
    if (dir.dot(g) > -1e-14 * dir.norm() * g.norm()) dir = -g;  // safeguard descent

    double step = 1.0;
    const double c1 = 1e-4;
    bool accepted = false;
    Eigen::VectorXd th_new(dim), g_new(dim);
    double fx_new = fx;
    for (int ls = 0; ls < 40; ++ls) {
      th_new = th + step * dir;
      bool ok = true;
      try {
        fx_new = obj(th_new, g_new);
      } catch (const conditioning_error&) {
        ok = false;
      } catch (const std::invalid_argument&) {
        ok = false;
      }
      if (ok && std::isfinite(fx_new) && fx_new <= fx + c1 * step * dir.dot(g)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.line_search_failed = true;
      break;
    }

    Eigen::VectorXd s = th_new - th;
    Eigen::VectorXd yv = g_new - g;
    double sy = s.dot(yv);
    if (sy > 1e-12) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    th = th_new;
    g = g_new;
    fx = fx_new;
    res.elbo_trace.push_back(-fx);
    if (fx < best_fx) {
      best_fx = fx;
      best_th = th;
    }
  }

  unpack_log(best_th, res.spec, res.sigma2);
  res.evaluations = evals;
  return res;
}

ReinitResult hyperopt_reinit(const Dataset& data, const KernelSpec& spec0, int M, int rounds,
                             int budget_per_round, double improve_tol, const HyperoptOptions& opts) {
  if (M < 1) throw std::invalid_argument("hyperopt_reinit: M must be >= 1");
  if (rounds < 1) throw std::invalid_argument("hyperopt_reinit: rounds must be >= 1");

  ReinitResult out;
  out.spec = spec0;
  out.sigma2 = data.sigma2;

  double best_elbo = -std::numeric_limits<double>::infinity();
  for (int round = 0; round < rounds; ++round) {
    SelectionResult sel = select_greedy_variance(out.spec, data.X, M);
    InducingSet ind = InducingSet::points(sel.Z);

    Dataset cur = data;
    cur.sigma2 = out.sigma2;
    HyperoptResult hr = optimize_hypers(cur, out.spec, ind, budget_per_round, opts);

    Dataset post = data;
    post.sigma2 = hr.sigma2;
    double e = elbo(post, hr.spec, ind);
    ++out.rounds_run;

    if (e > best_elbo) {
      out.spec = hr.spec;
      out.sigma2 = hr.sigma2;
      out.Z = sel.Z;
      out.round_elbos.push_back(e);
      if (e - best_elbo < improve_tol && round > 0) {
        best_elbo = e;
        break;
      }
      best_elbo = e;
    } else {
      // reinitialization failed to improve: keep the best state and stop
      break;
    }
  }
  return out;
}

}  // namespace svgp
