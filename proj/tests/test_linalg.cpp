#include <doctest.h>

#include <cmath>

#include "svgp/errors.hpp"
#include "svgp/linalg.hpp"
#include "svgp/rng.hpp"
#include "test_utils.hpp"

using namespace svgp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_SUITE_BEGIN("linalg");

TEST_CASE("chol_jittered on the identity needs no jitter") {
  MatrixXd I = MatrixXd::Identity(2, 2);
  LowerFactor f = chol_jittered(I, JitterSchedule::defaults(1.0));
  CHECK(f.jitter_used == 0.0);
  CHECK((f.L - I).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("rank-deficient input escalates to the first working jitter") {
  MatrixXd A(2, 2);
  A << 1.0, 1.0, 1.0, 1.0;
  JitterSchedule sched{{0.0, 1e-6, 1e-5}};
  LowerFactor f = chol_jittered(A, sched);
  CHECK(f.jitter_used == doctest::Approx(1e-6));
  MatrixXd R = f.L * f.L.transpose();
  MatrixXd target = A + f.jitter_used * MatrixXd::Identity(2, 2);
  CHECK((R - target).norm() <= 1e-8 * target.norm());
}

TEST_CASE("exhausted schedule raises a conditioning error carrying the last eps") {
  MatrixXd A(2, 2);
  A << 1.0, 2.0, 2.0, 1.0;  // indefinite
  try {
    chol_jittered(A, JitterSchedule{{0.0, 1e-6}});
    FAIL("expected conditioning_error");
  } catch (const conditioning_error& e) {
    CHECK(e.last_jitter() == doctest::Approx(1e-6));
  }
}

TEST_CASE("chol_jittered is deterministic") {
  oracle::Instance inst = oracle::random_instance(42, 20, 40);
  MatrixXd K = gram(inst.spec, inst.data.X, inst.data.X);
  LowerFactor a = chol_jittered(K, JitterSchedule::defaults(inst.spec.variance));
  LowerFactor b = chol_jittered(K, JitterSchedule::defaults(inst.spec.variance));
  CHECK(a.jitter_used == b.jitter_used);
  CHECK((a.L - b.L).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("default schedule shape") {
  JitterSchedule s = JitterSchedule::defaults(2.0);
  REQUIRE(s.values.size() == 4);
  CHECK(s.values[0] == 0.0);
  CHECK(s.values[1] == doctest::Approx(2e-6));
  CHECK(s.values[2] == doctest::Approx(2e-5));
  CHECK(s.values[3] == doctest::Approx(2e-4));
}

TEST_CASE("pivoted partial Cholesky: ties, duplicates, residual identity") {
  KernelSpec spec = KernelSpec::se_iso(1.0, 1.0, 1);

  // constant diagonal: the first pivot is the lowest index
  {
    MatrixXd X(4, 1);
    X << 0.0, 1.0, 2.0, 3.0;
    PivotedFactor pf = pivoted_partial_chol(spec, X, 2);
    CHECK(pf.pivots[0] == 0);
  }

  // duplicated point: its residual collapses after the first pick
  {
    MatrixXd X(3, 1);
    X << 0.0, 0.0, 10.0;
    PivotedFactor pf = pivoted_partial_chol(spec, X, 2);
    REQUIRE(pf.pivots.size() == 2);
    CHECK(pf.pivots[0] == 0);
    CHECK(pf.pivots[1] == 2);
    CHECK(pf.residual_diag[1] <= 1e-10);
  }

  // residual trace identity against a dense Nystrom computation
  for (int trial = 0; trial < 10; ++trial) {
    oracle::Instance inst = oracle::random_instance(300 + trial, 10, 40);
    int m = std::max(1, inst.data.n() / 4);
    PivotedFactor pf = pivoted_partial_chol(inst.spec, inst.data.X, m);
    Eigen::MatrixXd Zsel(static_cast<Eigen::Index>(pf.pivots.size()), inst.data.X.cols());
    for (size_t i = 0; i < pf.pivots.size(); ++i) Zsel.row(static_cast<Eigen::Index>(i)) = inst.data.X.row(pf.pivots[i]);
    MatrixXd Q = oracle::qff_dense(inst.spec, inst.data.X, Zsel, 0.0);
    MatrixXd Kff = gram(inst.spec, inst.data.X, inst.data.X);
    double t_direct = Kff.trace() - Q.trace();
    double t_factor = pf.residual_diag.sum();
    CHECK(t_factor == doctest::Approx(t_direct).epsilon(1e-6));
  }
}

TEST_CASE("pivoted residual trace is non-increasing in M") {
  oracle::Instance inst = oracle::random_instance(77, 30, 60);
  double prev = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= std::min(12, inst.data.n()); ++m) {
    PivotedFactor pf = pivoted_partial_chol(inst.spec, inst.data.X, m);
    double t = pf.residual_diag.sum();
    CHECK(t <= prev + 1e-10);
    prev = t;
  }
}

TEST_CASE("pivot sequence equals brute-force greedy max-determinant growth") {
  // exhaustive check on tiny instances
  for (int trial = 0; trial < 8; ++trial) {
    oracle::Instance inst = oracle::random_instance(500 + trial, 5, 8);
    const int n = inst.data.n();
    MatrixXd K = gram(inst.spec, inst.data.X, inst.data.X);
    const int m = std::min(4, n);
    PivotedFactor pf = pivoted_partial_chol(inst.spec, inst.data.X, m);

    std::vector<int> greedy;
    for (int step = 0; step < m; ++step) {
      int best = -1;
      double best_det = -1.0;
      for (int cand = 0; cand < n; ++cand) {
        if (std::find(greedy.begin(), greedy.end(), cand) != greedy.end()) continue;
        std::vector<int> trial_set = greedy;
        trial_set.push_back(cand);
        MatrixXd sub(trial_set.size(), trial_set.size());
        for (size_t a = 0; a < trial_set.size(); ++a)
          for (size_t b = 0; b < trial_set.size(); ++b)
            sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                K(trial_set[a], trial_set[b]);
        double det = sub.determinant();
        if (det > best_det + 1e-14 * std::abs(best_det)) {
          best_det = det;
          best = cand;
        }
      }
      greedy.push_back(best);
      if (static_cast<size_t>(step) < pf.pivots.size()) CHECK(pf.pivots[static_cast<size_t>(step)] == best);
    }
  }
}

TEST_CASE("sym_eig basics") {
  {
    MatrixXd A = MatrixXd::Zero(2, 2);
    A(0, 0) = 3.0;
    A(1, 1) = 1.0;
    EigenPairs e = sym_eig(A);
    CHECK(e.values[0] == doctest::Approx(3.0));
    CHECK(e.values[1] == doctest::Approx(1.0));
  }
  {
    MatrixXd A(2, 2);
    A << 0.0, 1.0, 1.0, 0.0;
    EigenPairs e = sym_eig(A);
    CHECK(e.values[0] == doctest::Approx(1.0));
    CHECK(e.values[1] == doctest::Approx(-1.0));
  }
  {
    oracle::Instance inst = oracle::random_instance(9, 20, 50);
    MatrixXd A = gram(inst.spec, inst.data.X, inst.data.X);
    EigenPairs e = sym_eig(A);
    MatrixXd R = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    CHECK((R - A).norm() <= 1e-7 * A.norm());
    // descending order
    for (Eigen::Index i = 1; i < e.values.size(); ++i) CHECK(e.values[i] <= e.values[i - 1] + 1e-12);
  }
  MatrixXd bad(2, 2);
  bad << 0.0, 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(sym_eig(bad), std::invalid_argument);
}

TEST_CASE("logdet_from_factor") {
  LowerFactor ident{MatrixXd::Identity(3, 3), 0.0};
  CHECK(logdet_from_factor(ident) == doctest::Approx(0.0));

  MatrixXd A = std::exp(1.0) * MatrixXd::Identity(2, 2);
  LowerFactor f = chol_jittered(A, JitterSchedule::exact(0.0));
  CHECK(logdet_from_factor(f) == doctest::Approx(2.0).epsilon(1e-12));

  // eigensolver cross-check on random SPSD
  for (int trial = 0; trial < 5; ++trial) {
    oracle::Instance inst = oracle::random_instance(600 + trial, 10, 10);
    MatrixXd K = gram(inst.spec, inst.data.X, inst.data.X);
    K.diagonal().array() += inst.data.sigma2;
    LowerFactor lf = chol_jittered(K, JitterSchedule::exact(0.0));
    EigenPairs e = sym_eig(K);
    double slow = e.values.array().log().sum();
    CHECK(logdet_from_factor(lf) == doctest::Approx(slow).epsilon(1e-8));
  }

  LowerFactor badf{MatrixXd::Zero(1, 1), 0.0};
  CHECK_THROWS_AS(logdet_from_factor(badf), std::domain_error);
}

TEST_SUITE_END();
