#include <doctest.h>

#include <cmath>

#include "svgp/kernels.hpp"
#include "svgp/rng.hpp"
#include "test_utils.hpp"

using namespace svgp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_SUITE_BEGIN("kernels");

TEST_CASE("zero lag returns the signal variance") {
  KernelSpec spec = KernelSpec::se_iso(2.0, 0.7, 1);
  VectorXd x(1);
  x << 0.0;
  CHECK(eval_kernel(spec, x, x) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("SE half-height distance") {
  // exp(-r^2/2) = 1/2  at  r = sqrt(2 log 2)
  KernelSpec spec = KernelSpec::se_iso(1.0, 1.0, 1);
  VectorXd x(1), y(1);
  x << 0.0;
  y << 1.1774100226;
  CHECK(eval_kernel(spec, x, y) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("Matern nu=1/2 equals the exponential kernel") {
  KernelSpec spec = KernelSpec::matern(1.0, 1.0, 0.5, 1);
  VectorXd x(1), y(1);
  x << 0.0;
  y << 1.0;
  CHECK(eval_kernel(spec, x, y) == doctest::Approx(0.3678794412).epsilon(1e-9));

  Rng rng(7);
  KernelSpec s2 = KernelSpec::matern(1.7, 0.8, 0.5, 2);
  for (int i = 0; i < 50; ++i) {
    VectorXd a(2), b(2);
    a << rng.normal(), rng.normal();
    b << rng.normal(), rng.normal();
    double expect = 1.7 * std::exp(-(a - b).norm() / 0.8);
    CHECK(eval_kernel(s2, a, b) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("Matern closed forms agree with the Bessel route") {
  // a perturbed order forces the general Bessel path
  VectorXd x(1), y(1);
  x << 0.3;
  y << 1.4;
  for (double nu : {0.5, 1.5, 2.5}) {
    KernelSpec closed = KernelSpec::matern(1.3, 0.9, nu, 1);
    KernelSpec bessel = closed;
    bessel.nu = nu + 1e-12;  // forces the general path
    CHECK(eval_kernel(closed, x, y) ==
          doctest::Approx(eval_kernel(bessel, x, y)).epsilon(1e-7));
  }
}

TEST_CASE("symmetry and input validation") {
  KernelSpec spec = KernelSpec::se_ard(1.0, {0.5, 1.5});
  Rng rng(3);
  for (int i = 0; i < 30; ++i) {
    VectorXd a(2), b(2);
    a << rng.normal(), rng.normal();
    b << rng.normal(), rng.normal();
    CHECK(eval_kernel(spec, a, b) == eval_kernel(spec, b, a));
  }
  VectorXd bad(1);
  bad << 0.0;
  CHECK_THROWS_AS(eval_kernel(spec, bad, bad), std::invalid_argument);
  VectorXd nan2(2);
  nan2 << std::nan(""), 0.0;
  VectorXd ok(2);
  ok << 0.0, 0.0;
  CHECK_THROWS_AS(eval_kernel(spec, nan2, ok), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::se_iso(-1.0, 1.0, 1), std::invalid_argument);
}

TEST_CASE("SE-ARD with equal lengthscales matches SE-iso") {
  KernelSpec ard = KernelSpec::se_ard(1.4, {0.8, 0.8, 0.8});
  KernelSpec iso = KernelSpec::se_iso(1.4, 0.8, 3);
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    VectorXd a(3), b(3);
    for (int j = 0; j < 3; ++j) {
      a[j] = rng.normal();
      b[j] = rng.normal();
    }
    double ka = eval_kernel(ard, a, b);
    double ki = eval_kernel(iso, a, b);
    CHECK(std::abs(ka - ki) <= 1e-12 * std::abs(ki));
  }
}

TEST_CASE("gram matrix basics") {
  KernelSpec spec = KernelSpec::se_iso(2.0, 1.0, 1);
  MatrixXd A(1, 1);
  A << 0.0;
  MatrixXd G = gram(spec, A, A);
  CHECK(G(0, 0) == doctest::Approx(2.0));

  KernelSpec unit = KernelSpec::se_iso(1.0, 1.0, 1);
  MatrixXd P(2, 1), Q(1, 1);
  P << 0.0, 1.0;
  Q << 0.0;
  MatrixXd C = gram(unit, P, Q);
  CHECK(C(0, 0) == doctest::Approx(1.0));
  CHECK(C(1, 0) == doctest::Approx(0.6065306597).epsilon(1e-9));
}

TEST_CASE("gram of a point set with itself is exactly symmetric and nearly PSD") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    oracle::Instance inst = oracle::random_instance(1000 + trial, 5, 30);
    MatrixXd G = gram(inst.spec, inst.data.X, inst.data.X);
    CHECK((G - G.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * inst.spec.variance);
  }
}

TEST_CASE("Matern spectral density") {
  KernelSpec spec = KernelSpec::matern(1.0, 1.0, 0.5, 1);
  CHECK(spectral_density_matern(spec, 0.0) == doctest::Approx(1.0 / M_PI).epsilon(1e-12));

  // monotone decay
  double prev = spectral_density_matern(spec, 0.0);
  for (double w : {0.1, 0.5, 1.0, 2.0, 10.0}) {
    double s = spectral_density_matern(spec, w);
    CHECK(s < prev);
    CHECK(s > 0.0);
    prev = s;
  }

  // lengthscale scaling identity in 1D: s_{2l}(w) = 2 s_l(2w)
  KernelSpec l2 = KernelSpec::matern(1.0, 2.0, 1.5, 1);
  KernelSpec l1 = KernelSpec::matern(1.0, 1.0, 1.5, 1);
  for (double w : {0.0, 0.3, 1.1, 4.0})
    CHECK(spectral_density_matern(l2, w) ==
          doctest::Approx(2.0 * spectral_density_matern(l1, 2.0 * w)).epsilon(1e-12));

  KernelSpec se = KernelSpec::se_iso(1.0, 1.0, 1);
  CHECK_THROWS_AS(spectral_density_matern(se, 1.0), std::invalid_argument);
}

TEST_CASE("kernel log-hyperparameter gradients match finite differences") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    oracle::Instance inst = oracle::random_instance(2000 + trial, 5, 10);
    VectorXd a = inst.data.X.row(0).transpose();
    VectorXd b = inst.data.X.row(inst.data.n() - 1).transpose();
    int nh = 1 + n_lengthscales(inst.spec);
    std::vector<double> g(static_cast<size_t>(nh));
    eval_kernel_grad_log(inst.spec, a, b, g.data());

    const double h = 1e-6;
    // variance
    {
      KernelSpec up = inst.spec, dn = inst.spec;
      up.variance *= std::exp(h);
      dn.variance *= std::exp(-h);
      double fd = (eval_kernel(up, a, b) - eval_kernel(dn, a, b)) / (2.0 * h);
      CHECK(g[0] == doctest::Approx(fd).epsilon(1e-5));
    }
    for (int d = 0; d < n_lengthscales(inst.spec); ++d) {
      KernelSpec up = inst.spec, dn = inst.spec;
      up.lengthscales[static_cast<size_t>(d)] *= std::exp(h);
      dn.lengthscales[static_cast<size_t>(d)] *= std::exp(-h);
      double fd = (eval_kernel(up, a, b) - eval_kernel(dn, a, b)) / (2.0 * h);
      CHECK(g[static_cast<size_t>(1 + d)] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_SUITE_END();
