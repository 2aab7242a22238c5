#include "svgp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "svgp/errors.hpp"

namespace svgp {

JitterSchedule JitterSchedule::defaults(double v) {
  return JitterSchedule{{0.0, 1e-6 * v, 1e-5 * v, 1e-4 * v}};
}

JitterSchedule JitterSchedule::starting_at(double eps, double v) {
  JitterSchedule s;
  s.values.push_back(eps);
  for (double e : defaults(v).values)
    if (e > eps) s.values.push_back(e);
  return s;
}

LowerFactor chol_jittered(const Eigen::Ref<const Eigen::MatrixXd>& A, const JitterSchedule& schedule) {
  if (A.rows() != A.cols()) throw std::invalid_argument("chol_jittered: matrix must be square");
  if (!A.allFinite()) throw std::invalid_argument("chol_jittered: non-finite entries");
  if (schedule.values.empty()) throw std::invalid_argument("chol_jittered: empty jitter schedule");
  const auto n = A.rows();
  Eigen::MatrixXd work(n, n);
  double last = 0.0;
  for (double eps : schedule.values) {
    last = eps;
    work = A;
    if (eps != 0.0) work.diagonal().array() += eps;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      return LowerFactor{Eigen::MatrixXd(llt.matrixL()), eps};
    }
  }
  throw conditioning_error("factorization failed after exhausting jitter schedule", last);
}

PivotedFactor pivoted_partial_chol(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                   int M) {
  spec.validate();
  const int n = static_cast<int>(X.rows());
  if (M < 1 || M > n) throw std::invalid_argument("pivoted_partial_chol: need 1 <= M <= N");

  Eigen::VectorXd d = gram_diag(spec, X);
  const double stop_tol = 1e-12 * spec.variance;

  PivotedFactor out;
  out.factor.resize(n, M);
  Eigen::VectorXd col(n);

  int t = 0;
  for (; t < M; ++t) {
    int piv = 0;
    double best = d[0];
    for (int i = 1; i < n; ++i) {
      if (d[i] > best) {  // strict: ties keep the lowest index
        best = d[i];
        piv = i;
      }
    }
    if (best <= stop_tol) {
      out.exhausted = true;
      break;
    }
    for (int i = 0; i < n; ++i)
      col[i] = eval_kernel(spec, X.row(i).transpose(), X.row(piv).transpose());
    if (t > 0) col.noalias() -= out.factor.leftCols(t) * out.factor.row(piv).head(t).transpose();
    double ell = std::sqrt(best);
    out.factor.col(t) = col / ell;
    d -= out.factor.col(t).cwiseAbs2();
    d = d.cwiseMax(0.0);
    d[piv] = 0.0;
    out.pivots.push_back(piv);
  }
  out.factor.conservativeResize(n, t);
  out.residual_diag = d;
  return out;
}

EigenPairs sym_eig(const Eigen::Ref<const Eigen::MatrixXd>& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("sym_eig: matrix must be square");
  double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * scale) throw std::invalid_argument("sym_eig: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
  if (es.info() != Eigen::Success) throw std::runtime_error("sym_eig: eigensolver failed");

  const auto n = A.rows();
  EigenPairs out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[i] = es.eigenvalues()[n - 1 - i];
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

double logdet_from_factor(const LowerFactor& f) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.L.rows(); ++i) {
    double d = f.L(i, i);
    if (!(d > 0.0)) throw std::domain_error("logdet_from_factor: non-positive diagonal");
    s += std::log(d);
  }
  return 2.0 * s;
}

}  // namespace svgp
