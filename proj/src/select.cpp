#include "svgp/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "svgp/errors.hpp"
#include "svgp/linalg.hpp"
#include "svgp/rng.hpp"

namespace svgp {

namespace {

// L L^T += x x^T, keeping L lower triangular.
void chol_rank1_update(Eigen::MatrixXd& L, Eigen::VectorXd x) {
  const int n = static_cast<int>(L.rows());
  for (int k = 0; k < n; ++k) {
    double r = std::hypot(L(k, k), x[k]);
    double c = r / L(k, k);
    double s = x[k] / L(k, k);
    L(k, k) = r;
    for (int i = k + 1; i < n; ++i) {
      L(i, k) = (L(i, k) + s * x[i]) / c;
      x[i] = c * x[i] - s * L(i, k);
    }
  }
}

// Remove row/column p from a Cholesky factor of an (n x n) matrix; the
// trailing block absorbs the removed column by a rank-1 update.
void chol_delete(Eigen::MatrixXd& L, int p) {
  const int n = static_cast<int>(L.rows());
  Eigen::VectorXd u = L.block(p + 1, p, n - 1 - p, 1);
  Eigen::MatrixXd Lnew(n - 1, n - 1);
  Lnew.topLeftCorner(p, p) = L.topLeftCorner(p, p);
  Lnew.bottomLeftCorner(n - 1 - p, p) = L.block(p + 1, 0, n - 1 - p, p);
  Eigen::MatrixXd T = L.block(p + 1, p + 1, n - 1 - p, n - 1 - p);
  chol_rank1_update(T, u);
  Lnew.bottomRightCorner(n - 1 - p, n - 1 - p) = T;
  Lnew.triangularView<Eigen::StrictlyUpper>().setZero();
  L = std::move(Lnew);
}

// Append one row/column given the new cross-covariances. Returns false when
// the augmented matrix is numerically singular.
bool chol_append(Eigen::MatrixXd& L, const Eigen::VectorXd& cross, double diag) {
  const int n = static_cast<int>(L.rows());
  Eigen::VectorXd v = L.triangularView<Eigen::Lower>().solve(cross);
  double d = diag - v.squaredNorm();
  if (!(d > 0.0)) return false;
  Eigen::MatrixXd Lnew = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Lnew.topLeftCorner(n, n) = L;
  Lnew.block(n, 0, 1, n) = v.transpose();
  Lnew(n, n) = std::sqrt(d);
  L = std::move(Lnew);
  return true;
}

Eigen::VectorXd kernel_column(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                              const std::vector<int>& idx, int j) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(idx.size()));
  for (size_t t = 0; t < idx.size(); ++t)
    c[static_cast<Eigen::Index>(t)] =
        eval_kernel(spec, X.row(idx[t]).transpose(), X.row(j).transpose());
  return c;
}

// det(K_{Z \ {z_pos}} + {j}) / det(K_Z) from the cached factor of K_Z.
double swap_det_ratio(const Eigen::MatrixXd& L, const KernelSpec& spec,
                      const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& zidx,
                      int pos, int j) {
  Eigen::VectorXd u = kernel_column(spec, X, zidx, j);
  double kjj = eval_kernel(spec, X.row(j).transpose(), X.row(j).transpose());
  Eigen::VectorXd v1 = L.triangularView<Eigen::Lower>().solve(u);
  double s_full = std::max(0.0, kjj - v1.squaredNorm());
  Eigen::VectorXd w = L.transpose().triangularView<Eigen::Upper>().solve(v1);
  Eigen::VectorXd ei = Eigen::VectorXd::Zero(L.rows());
  ei[pos] = 1.0;
  double wii = L.triangularView<Eigen::Lower>().solve(ei).squaredNorm();
  return s_full * wii + w[pos] * w[pos];
}

struct RlsLevel {
  std::vector<int> sample;
  Eigen::VectorXd weights;
};

// (1/k) (trace - sum of top-k eigenvalues) of the weighted sample gram: the
// scale at which a rank-k approximation stops helping.
double estimate_lambda(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const RlsLevel& lvl, int k) {
  const int ms = static_cast<int>(lvl.sample.size());
  if (k >= ms) return 1e-6 * spec.variance;
  Eigen::MatrixXd Kss = gram(spec, rows_at(X, lvl.sample), rows_at(X, lvl.sample));
  Eigen::MatrixXd W = lvl.weights.asDiagonal();
  Eigen::MatrixXd Kw = W * Kss * W;
  EigenPairs eig = sym_eig(0.5 * (Kw + Kw.transpose()));
  double tr = Kw.trace();
  double top = eig.values.head(k).cwiseMax(0.0).sum();
  double lam = (tr - top) / static_cast<double>(k);
  return std::max(lam, 1e-9 * std::max(tr / ms, spec.variance));
}

// Approximate ridge leverage scores of `items` from a weighted sample.
// Scores are clamped to [0, 1]: a leverage score never exceeds 1, and an
// overestimate only costs extra samples, never accuracy.
Eigen::VectorXd approx_scores(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                              const std::vector<int>& items, const RlsLevel& lvl, double lambda) {
  const int n = static_cast<int>(items.size());
  Eigen::MatrixXd Kis = gram(spec, rows_at(X, items), rows_at(X, lvl.sample));  // n x |sample|
  Eigen::MatrixXd Kws = Kis * lvl.weights.asDiagonal();
  Eigen::MatrixXd Kss = gram(spec, rows_at(X, lvl.sample), rows_at(X, lvl.sample));
  Eigen::MatrixXd reg = lvl.weights.asDiagonal() * Kss * lvl.weights.asDiagonal();
  reg.diagonal().array() += lambda;
  Eigen::LDLT<Eigen::MatrixXd> solver(0.5 * (reg + reg.transpose()));
  Eigen::MatrixXd RK = solver.solve(Kws.transpose());  // ms x n
  Eigen::VectorXd scores(n);
  for (int i = 0; i < n; ++i) {
    double kii = eval_kernel(spec, X.row(items[i]).transpose(), X.row(items[i]).transpose());
    double red = Kws.row(i).dot(RK.col(i));
    double s = std::isfinite(red) ? (kii - red) / lambda : 1.0;
    scores[i] = std::min(1.0, std::max(0.0, s));
  }
  return scores;
}

// Shared recursion: halve, recurse, then resample `items` by approximate
// scores with oversampling tied to the level's estimated effective dimension.
// `fixed_lambda < 0` requests the data-driven regularizer at rank S.
RlsLevel rls_recurse(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                     const std::vector<int>& items, int S, double fixed_lambda, double delta,
                     Rng& rng, double* lambda_out) {
  const int n = static_cast<int>(items.size());
  if (n <= std::max(4 * S, 128)) {
    RlsLevel lvl;
    lvl.sample = items;
    lvl.weights = Eigen::VectorXd::Ones(n);
    if (lambda_out) *lambda_out = fixed_lambda;
    return lvl;
  }
  std::vector<int> half;
  half.reserve(static_cast<size_t>(n) / 2 + 8);
  for (int it : items)
    if (rng.uniform() < 0.5) half.push_back(it);
  if (half.empty()) half.push_back(items[0]);
  RlsLevel sub = rls_recurse(spec, X, half, S, fixed_lambda, delta, rng, nullptr);

  double lambda = fixed_lambda;
  if (lambda < 0.0) lambda = estimate_lambda(spec, X, sub, S);
  if (lambda_out) *lambda_out = lambda;

  Eigen::VectorXd scores = approx_scores(spec, X, items, sub, lambda);
  double level_dim = std::max(1.0, scores.sum());
  double oversamp = 2.0 * std::log(2.0 * level_dim / delta);
  RlsLevel lvl;
  std::vector<double> w;
  for (int i = 0; i < n; ++i) {
    double p = std::min(1.0, oversamp * scores[i]);
    if (rng.uniform() < p) {
      lvl.sample.push_back(items[i]);
      w.push_back(1.0 / std::sqrt(p));
    }
  }
  if (lvl.sample.empty()) {
    // degenerate level: fall back to a uniform subsample
    double p = std::min(1.0, double(std::max(S, 1)) / n);
    for (int i = 0; i < n; ++i)
      if (rng.uniform() < p) {
        lvl.sample.push_back(items[i]);
        w.push_back(1.0 / std::sqrt(p));
      }
    if (lvl.sample.empty()) {
      lvl.sample.push_back(items[0]);
      w.push_back(1.0);
    }
  }
  lvl.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return lvl;
}

void check_subset_args(Eigen::Index n, int M) {
  if (M < 1 || M > n) throw std::invalid_argument("selection size must satisfy 1 <= M <= N");
}

}  // namespace

Eigen::MatrixXd rows_at(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& idx) {
  Eigen::MatrixXd Z(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (size_t i = 0; i < idx.size(); ++i) Z.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
  return Z;
}

SelectionResult select_uniform(const Eigen::Ref<const Eigen::MatrixXd>& X, int M, std::uint64_t seed) {
  check_subset_args(X.rows(), M);
  Rng rng(mix_seed(seed, 0x756e6966));
  std::vector<int> pool(static_cast<size_t>(X.rows()));
  std::iota(pool.begin(), pool.end(), 0);
  for (int t = 0; t < M; ++t) {
    std::swap(pool[static_cast<size_t>(t)],
              pool[static_cast<size_t>(t) + rng.below(pool.size() - static_cast<size_t>(t))]);
  }
  SelectionResult out;
  out.indices.assign(pool.begin(), pool.begin() + M);
  out.Z = rows_at(X, out.indices);
  out.method = "uniform";
  out.seed = seed;
  return out;
}

SelectionResult select_kmeanspp(const Eigen::Ref<const Eigen::MatrixXd>& X, int M, std::uint64_t seed,
                                int iters) {
  check_subset_args(X.rows(), M);
  const int n = static_cast<int>(X.rows());
  Rng rng(mix_seed(seed, 0x6b6d7070));

  // D^2 seeding
  std::vector<int> seeds;
  seeds.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd d2(n);
  for (int i = 0; i < n; ++i) d2[i] = (X.row(i) - X.row(seeds[0])).squaredNorm();
  while (static_cast<int>(seeds.size()) < M) {
    double total = d2.sum();
    int pick = -1;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (u <= acc) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = n - 1;
    } else {
      // duplicates exhausted the spread; take the lowest unused index
      std::vector<char> used(static_cast<size_t>(n), 0);
      for (int s : seeds) used[static_cast<size_t>(s)] = 1;
      for (int i = 0; i < n; ++i)
        if (!used[static_cast<size_t>(i)]) {
          pick = i;
          break;
        }
      if (pick < 0) pick = 0;
    }
    seeds.push_back(pick);
    for (int i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (X.row(i) - X.row(pick)).squaredNorm());
  }

  Eigen::MatrixXd C = rows_at(X, seeds);
  std::vector<int> assign(static_cast<size_t>(n), 0);
  double sse = 0.0;
  for (int it = 0; it < std::max(1, iters); ++it) {
    bool changed = false;
    sse = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = (X.row(i) - C.row(0)).squaredNorm();
      for (int c = 1; c < M; ++c) {
        double d = (X.row(i) - C.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[static_cast<size_t>(i)] != best) changed = true;
      assign[static_cast<size_t>(i)] = best;
      sse += bd;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(M, X.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(M);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[static_cast<size_t>(i)]) += X.row(i);
      counts[assign[static_cast<size_t>(i)]] += 1.0;
    }
    for (int c = 0; c < M; ++c) {
      if (counts[c] > 0.0) {
        C.row(c) = sums.row(c) / counts[c];
      } else {
        // re-seed an empty cluster at the point farthest from its centroid
        int far = 0;
        double fd = -1.0;
        for (int i = 0; i < n; ++i) {
          double d = (X.row(i) - C.row(assign[static_cast<size_t>(i)])).squaredNorm();
          if (d > fd) {
            fd = d;
            far = i;
          }
        }
        C.row(c) = X.row(far);
        changed = true;
      }
    }
    if (!changed) break;
  }

  SelectionResult out;
  out.indices = seeds;
  out.Z = C;
  out.method = "kmeanspp";
  out.seed = seed;
  out.diagnostics["sse"] = sse;
  return out;
}

SelectionResult select_greedy_variance(const KernelSpec& spec,
                                       const Eigen::Ref<const Eigen::MatrixXd>& X, int M) {
  check_subset_args(X.rows(), M);
  PivotedFactor pf = pivoted_partial_chol(spec, X, M);
  SelectionResult out;
  out.indices = pf.pivots;
  out.Z = rows_at(X, out.indices);
  out.method = "greedy_variance";
  out.diagnostics["residual_trace"] = pf.residual_diag.sum();
  out.diagnostics["exhausted"] = pf.exhausted ? 1.0 : 0.0;
  return out;
}

double mdpp_acceptance(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const std::vector<int>& Z, int i, int j) {
  auto pos_it = std::find(Z.begin(), Z.end(), i);
  if (pos_it == Z.end()) throw std::invalid_argument("mdpp_acceptance: i must be in Z");
  if (std::find(Z.begin(), Z.end(), j) != Z.end())
    throw std::invalid_argument("mdpp_acceptance: j must not be in Z");
  Eigen::MatrixXd K = gram(spec, rows_at(X, Z), rows_at(X, Z));
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success)
    throw conditioning_error("mdpp_acceptance: current subset is numerically singular", 0.0);
  Eigen::MatrixXd L = llt.matrixL();
  double r = swap_det_ratio(L, spec, X, Z, static_cast<int>(pos_it - Z.begin()), j);
  return 0.5 * std::min(1.0, r);
}

MdppChain::MdppChain(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X, int M,
                     std::uint64_t seed)
    : spec_(spec), X_(X), rng_(mix_seed(seed, 0x6d647070)) {
  check_subset_args(X.rows(), M);
  const int n = static_cast<int>(X.rows());

  PivotedFactor pf = pivoted_partial_chol(spec, X, M);
  if (static_cast<int>(pf.pivots.size()) < M)
    throw conditioning_error("mdpp chain: no nonsingular size-M subset reachable from greedy init",
                             0.0);
  zidx_ = pf.pivots;

  Eigen::MatrixXd K = gram(spec, rows_at(X, zidx_), rows_at(X, zidx_));
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success)
    throw conditioning_error("mdpp chain: greedy initial subset is numerically singular", 0.0);
  L_ = llt.matrixL();

  std::vector<char> in_z(static_cast<size_t>(n), 0);
  for (int z : zidx_) in_z[static_cast<size_t>(z)] = 1;
  comp_.reserve(static_cast<size_t>(n - M));
  for (int i = 0; i < n; ++i)
    if (!in_z[static_cast<size_t>(i)]) comp_.push_back(i);
}

bool MdppChain::step() {
  ++steps_;
  if (comp_.empty()) return false;
  int pos = static_cast<int>(rng_.below(zidx_.size()));
  size_t cpos = rng_.below(comp_.size());
  int j = comp_[cpos];
  double ratio = swap_det_ratio(L_, spec_, X_, zidx_, pos, j);
  double p = 0.5 * std::min(1.0, ratio);
  if (rng_.uniform() >= p) return false;

  int i = zidx_[static_cast<size_t>(pos)];
  Eigen::MatrixXd Ltry = L_;
  chol_delete(Ltry, pos);
  std::vector<int> ztry = zidx_;
  ztry.erase(ztry.begin() + pos);
  Eigen::VectorXd cross = kernel_column(spec_, X_, ztry, j);
  double kjj = eval_kernel(spec_, X_.row(j).transpose(), X_.row(j).transpose());
  if (!chol_append(Ltry, cross, kjj)) return false;  // numerically singular proposal; keep state
  L_ = std::move(Ltry);
  ztry.push_back(j);
  zidx_ = std::move(ztry);
  comp_[cpos] = i;
  ++accepted_;
  return true;
}

SelectionResult select_mdpp_mcmc(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                 int M, long T, std::uint64_t seed) {
  if (T < 0) throw std::invalid_argument("select_mdpp_mcmc: T must be non-negative");
  MdppChain chain(spec, X, M, seed);
  for (long tau = 0; tau < T; ++tau) chain.step();

  SelectionResult out;
  out.indices = chain.state();
  std::sort(out.indices.begin(), out.indices.end());
  out.Z = rows_at(X, out.indices);
  out.method = "mdpp_mcmc";
  out.seed = seed;
  out.diagnostics["steps"] = static_cast<double>(T);
  out.diagnostics["accepted"] = static_cast<double>(chain.accepted());
  out.diagnostics["acceptance_rate"] =
      T > 0 ? static_cast<double>(chain.accepted()) / static_cast<double>(T) : 0.0;
  out.diagnostics["mixing_time_tv01"] = mdpp_mixing_time_bound(M, static_cast<int>(X.rows()), 0.1);
  return out;
}

double mdpp_mixing_time(int M, int N, double rho0, double eps) {
  if (!(rho0 > 0.0) || rho0 > 1.0 || !(eps > 0.0) || eps >= 1.0)
    throw std::invalid_argument("mdpp_mixing_time: invalid rho0 or eps");
  return 2.0 * M * static_cast<double>(N) *
         (std::log(std::log(1.0 / rho0)) + std::log(2.0 / (eps * eps)));
}

double mdpp_mixing_time_bound(int M, int N, double eps) {
  // greedy initializer has probability at least (MN)^{-M}
  double loglog = std::log(M * std::log(static_cast<double>(M) * N));
  return 2.0 * M * static_cast<double>(N) * (loglog + std::log(2.0 / (eps * eps)));
}

Eigen::VectorXd ridge_leverage_scores_exact(const KernelSpec& spec,
                                            const Eigen::Ref<const Eigen::MatrixXd>& X, double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("ridge leverage scores need omega > 0");
  Eigen::MatrixXd K = gram(spec, X, X);
  Eigen::MatrixXd Kreg = K;
  Kreg.diagonal().array() += omega;
  Eigen::LLT<Eigen::MatrixXd> llt(Kreg);
  if (llt.info() != Eigen::Success)
    throw conditioning_error("ridge_leverage_scores_exact: factorization failed", omega);
  Eigen::MatrixXd C = Eigen::MatrixXd(llt.matrixL()).triangularView<Eigen::Lower>().solve(K);
  Eigen::VectorXd scores(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    scores[i] = std::max(0.0, K(i, i) - C.col(i).squaredNorm()) / omega;
  return scores;
}

double effective_dimension(const Eigen::Ref<const Eigen::VectorXd>& matrix_eigs, double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("effective_dimension needs omega > 0");
  double scale = matrix_eigs.size() > 0 ? std::max(1.0, matrix_eigs.cwiseAbs().maxCoeff()) : 1.0;
  double d = 0.0;
  for (Eigen::Index i = 0; i < matrix_eigs.size(); ++i) {
    double lam = matrix_eigs[i];
    if (lam < -1e-8 * scale)
      throw std::domain_error("effective_dimension: negative eigenvalue beyond tolerance");
    lam = std::max(0.0, lam);
    d += lam / (lam + omega);
  }
  return d;
}

SelectionResult select_rls_fixed(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                 int S, double delta, std::uint64_t seed, bool exact_size) {
  if (S < 1) throw std::invalid_argument("select_rls_fixed: S must be >= 1");
  if (!(delta > 0.0) || delta >= 1.0 / 32.0)
    throw std::invalid_argument("select_rls_fixed: delta must lie in (0, 1/32)");
  const int n = static_cast<int>(X.rows());
  spec.validate();
  Rng rng(mix_seed(seed, 0x726c7366));

  std::vector<int> items(static_cast<size_t>(n));
  std::iota(items.begin(), items.end(), 0);
  double lambda = -1.0;
  RlsLevel top = rls_recurse(spec, X, items, S, -1.0, delta, rng, &lambda);

  // final scores over all points, no oversampling factor
  if (lambda < 0.0) lambda = estimate_lambda(spec, X, top, S);
  Eigen::VectorXd scores = approx_scores(spec, X, items, top, lambda);
  double total = scores.sum();
  if (!(total > 0.0)) throw std::runtime_error("select_rls_fixed: degenerate sampling, zero total score");

  SelectionResult out;
  out.method = "rls";
  out.seed = seed;
  if (exact_size) {
    // exactly min(S, n) points, without replacement, probability ~ scores
    int want = std::min(S, n);
    std::vector<std::pair<double, int>> keys;
    keys.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      double key = scores[i] > 0.0 ? std::pow(rng.uniform_positive(), 1.0 / scores[i]) : -1.0;
      keys.emplace_back(key, i);
    }
    std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    for (int t = 0; t < want; ++t) out.indices.push_back(keys[static_cast<size_t>(t)].second);
    std::sort(out.indices.begin(), out.indices.end());
  } else {
    double incl = std::log(std::max(std::exp(1.0), static_cast<double>(S) / delta));
    for (int i = 0; i < n; ++i) {
      double p = std::min(1.0, incl * scores[i]);
      if (rng.uniform() < p) out.indices.push_back(i);
    }
    if (out.indices.empty()) {
      int best = 0;
      scores.maxCoeff(&best);
      out.indices.push_back(best);
    }
  }
  out.Z = rows_at(X, out.indices);
  out.diagnostics["realized_m"] = static_cast<double>(out.indices.size());
  out.diagnostics["lambda"] = lambda;
  out.diagnostics["score_sum"] = total;
  return out;
}

SelectionResult select_rls_adaptive(const KernelSpec& spec,
                                    const Eigen::Ref<const Eigen::MatrixXd>& X, double omega,
                                    double delta, std::uint64_t seed) {
  if (!(omega > 0.0)) throw std::invalid_argument("select_rls_adaptive: omega must be positive");
  if (!(delta > 0.0) || delta >= 1.0 / 32.0)
    throw std::invalid_argument("select_rls_adaptive: delta must lie in (0, 1/32)");
  const int n = static_cast<int>(X.rows());
  spec.validate();
  Rng rng(mix_seed(seed, 0x726c7361));

  std::vector<int> items(static_cast<size_t>(n));
  std::iota(items.begin(), items.end(), 0);
  // guess the effective dimension to size the recursion base
  int s_guess = std::max(1, std::min(n, static_cast<int>(std::ceil(
                                            spec.variance * n / (spec.variance + omega)))));
  s_guess = std::min(s_guess, 256);
  RlsLevel top = rls_recurse(spec, X, items, s_guess, omega, delta, rng, nullptr);
  Eigen::VectorXd scores = approx_scores(spec, X, items, top, omega);
  double d_hat = std::min(scores.sum(), static_cast<double>(n));
  double incl = 2.0 * std::log(std::max(std::exp(1.0), 2.0 * d_hat / delta));

  SelectionResult out;
  out.method = "rls_adaptive";
  out.seed = seed;
  for (int i = 0; i < n; ++i) {
    double p = std::min(1.0, incl * scores[i]);
    if (rng.uniform() < p) out.indices.push_back(i);
  }
  if (out.indices.empty()) {
    int best = 0;
    scores.maxCoeff(&best);
    out.indices.push_back(best);
  }
  out.Z = rows_at(X, out.indices);
  out.diagnostics["realized_m"] = static_cast<double>(out.indices.size());
  out.diagnostics["d_eff_estimate"] = d_hat;
  out.diagnostics["oversampling"] = incl;
  out.diagnostics["omega"] = omega;
  return out;
}

InducingSet eigenfeature_inducing(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                  int M) {
  spec.validate();
  check_subset_args(X.rows(), M);
  if (X.rows() > kDefaultDeskGuard)
    throw std::invalid_argument("eigenfeature_inducing is desk-scale only");
  return InducingSet::eigenfeatures(M);
}

}  // namespace svgp
