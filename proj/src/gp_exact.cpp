#include "svgp/gp_exact.hpp"

#include <cmath>
#include <stdexcept>

#include "svgp/errors.hpp"
#include "svgp/rng.hpp"

namespace svgp {

namespace {

void check_desk_guard(int n, int guard) {
  if (n > guard)
    throw std::invalid_argument("exact GP: N exceeds the desk-scale guard (" + std::to_string(guard) +
                                "); raise the guard explicitly if the cost is intended");
}

// No jitter here: sigma2 is the conditioning floor, failures surface as errors.
LowerFactor factor_kyy(const Dataset& data, const KernelSpec& spec) {
  Eigen::MatrixXd K = gram(spec, data.X, data.X);
  K.diagonal().array() += data.sigma2;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success)
    throw conditioning_error("exact GP: Cholesky of Kff + sigma2 I failed", 0.0);
  return LowerFactor{Eigen::MatrixXd(llt.matrixL()), 0.0};
}

}  // namespace

void Dataset::validate() const {
  if (X.rows() < 1) throw std::invalid_argument("dataset must contain at least one point");
  if (y.size() != X.rows()) throw std::invalid_argument("dataset: |y| != N");
  if (!X.allFinite() || !y.allFinite()) throw std::invalid_argument("dataset has non-finite entries");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw std::invalid_argument("noise variance must be positive");
}

double log_marginal_likelihood(const Dataset& data, const KernelSpec& spec, int desk_guard) {
  data.validate();
  spec.validate();
  check_desk_guard(data.n(), desk_guard);
  LowerFactor f = factor_kyy(data, spec);
  Eigen::VectorXd w = f.solve_lower(data.y);
  const double n = static_cast<double>(data.n());
  return -0.5 * logdet_from_factor(f) - 0.5 * w.squaredNorm() - 0.5 * n * std::log(2.0 * M_PI);
}

ExactPosterior exact_fit(const Dataset& data, const KernelSpec& spec, int desk_guard) {
  data.validate();
  spec.validate();
  check_desk_guard(data.n(), desk_guard);
  ExactPosterior post;
  post.factor = factor_kyy(data, spec);
  post.alpha = post.factor.solve(data.y);
  post.X = data.X;
  post.spec = spec;
  post.sigma2 = data.sigma2;
  return post;
}

Prediction exact_predict(const ExactPosterior& post, const Eigen::Ref<const Eigen::MatrixXd>& Xstar) {
  if (Xstar.cols() != post.X.cols()) throw std::invalid_argument("exact_predict: dimension mismatch");
  Eigen::MatrixXd Ksf = gram(post.spec, Xstar, post.X);
  Eigen::MatrixXd Kss = gram(post.spec, Xstar, Xstar);
  Prediction out;
  out.mean = Ksf * post.alpha;
  Eigen::MatrixXd W = post.factor.L.triangularView<Eigen::Lower>().solve(Ksf.transpose());
  out.cov = Kss - W.transpose() * W;
  return out;
}

Prediction exact_predict(const Dataset& data, const KernelSpec& spec,
                         const Eigen::Ref<const Eigen::MatrixXd>& Xstar, int desk_guard) {
  return exact_predict(exact_fit(data, spec, desk_guard), Xstar);
}

Eigen::VectorXd sample_prior_observations(const KernelSpec& spec,
                                          const Eigen::Ref<const Eigen::MatrixXd>& X, double sigma2,
                                          std::uint64_t seed) {
  spec.validate();
  if (!(sigma2 > 0.0)) throw std::invalid_argument("noise variance must be positive");
  Eigen::MatrixXd K = gram(spec, X, X);
  K.diagonal().array() += sigma2;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success)
    throw conditioning_error("sample_prior_observations: factorization failed", 0.0);
  Rng rng(seed);
  Eigen::VectorXd z(X.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return Eigen::MatrixXd(llt.matrixL()) * z;
}

}  // namespace svgp
