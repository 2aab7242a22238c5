#include <doctest.h>

#include <cmath>

#include "svgp/cli/experiments.hpp"
#include "svgp/hyperopt.hpp"
#include "svgp/select.hpp"
#include "test_utils.hpp"

using namespace svgp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_SUITE_BEGIN("hyperopt");

TEST_CASE("objective gradient matches central finite differences") {
  for (int trial = 0; trial < 10; ++trial) {
    oracle::Instance inst = oracle::random_instance(8000 + trial, 20, 60);
    ElboGrad eg = elbo_with_grad(inst.data.X, inst.data.y, inst.spec, inst.data.sigma2, inst.Z, 0.0);
    CHECK(eg.value ==
          doctest::Approx(elbo(inst.data, inst.spec, InducingSet::points(inst.Z, 0.0))).epsilon(1e-10));

    const int nl = n_lengthscales(inst.spec);
    const int nh = 1 + nl + 1;
    REQUIRE(eg.grad.size() == nh);
    for (int h = 0; h < nh; ++h) {
      const double step = 1e-5;
      KernelSpec up = inst.spec, dn = inst.spec;
      double s_up = inst.data.sigma2, s_dn = inst.data.sigma2;
      if (h == 0) {
        up.variance *= std::exp(step);
        dn.variance *= std::exp(-step);
      } else if (h <= nl) {
        up.lengthscales[static_cast<size_t>(h - 1)] *= std::exp(step);
        dn.lengthscales[static_cast<size_t>(h - 1)] *= std::exp(-step);
      } else {
        s_up *= std::exp(step);
        s_dn *= std::exp(-step);
      }
      double fu = elbo_with_grad(inst.data.X, inst.data.y, up, s_up, inst.Z, 0.0).value;
      double fd = elbo_with_grad(inst.data.X, inst.data.y, dn, s_dn, inst.Z, 0.0).value;
      double numeric = (fu - fd) / (2.0 * step);
      double scale = std::max({std::abs(numeric), std::abs(eg.grad[h]), 1e-8});
      CHECK(std::abs(numeric - eg.grad[h]) / scale < 1e-4);
    }
  }
}

TEST_CASE("built-in gradient verification flag") {
  oracle::Instance inst = oracle::random_instance(8100, 30, 60);
  HyperoptOptions opts;
  opts.verify_gradient = true;
  HyperoptResult res =
      optimize_hypers(inst.data, inst.spec, InducingSet::points(inst.Z, 0.0), 0, opts);
  CHECK(res.gradient_check_passed);
  CHECK(res.gradient_check_rel_err < 1e-4);
}

TEST_CASE("zero budget returns the starting point unchanged") {
  oracle::Instance inst = oracle::random_instance(8200, 20, 40);
  HyperoptResult res = optimize_hypers(inst.data, inst.spec, InducingSet::points(inst.Z, 0.0), 0);
  CHECK(res.spec.variance == inst.spec.variance);
  CHECK(res.spec.lengthscales == inst.spec.lengthscales);
  CHECK(res.sigma2 == inst.data.sigma2);
}

TEST_CASE("accepted steps never decrease the objective") {
  oracle::Instance inst = oracle::random_instance(8300, 40, 80);
  HyperoptResult res = optimize_hypers(inst.data, inst.spec, InducingSet::points(inst.Z, 0.0), 30);
  REQUIRE(!res.elbo_trace.empty());
  for (size_t i = 1; i < res.elbo_trace.size(); ++i)
    CHECK(res.elbo_trace[i] >= res.elbo_trace[i - 1] - 1e-9);
  CHECK(res.elbo_trace.back() >= res.elbo_trace.front() - 1e-9);
}

TEST_CASE("noise variance recovery on synthetic data") {
  // median over seeds of the recovered noise lands near the generating value
  const double true_sigma2 = 0.09;
  std::vector<double> recovered;
  for (int seed = 0; seed < 10; ++seed) {
    KernelSpec truth = KernelSpec::se_iso(1.0, 0.7, 1);
    Dataset data = cli::synth_generate(truth, 2000, 1, 1.0, true_sigma2, 9000 + static_cast<std::uint64_t>(seed));
    KernelSpec start = KernelSpec::se_iso(0.5, 1.2, 1);
    Dataset warm = data;
    warm.sigma2 = 0.3;
    SelectionResult sel = select_greedy_variance(start, data.X, 40);
    HyperoptResult res = optimize_hypers(warm, start, InducingSet::points(sel.Z, 0.0), 60);
    recovered.push_back(res.sigma2);
  }
  std::sort(recovered.begin(), recovered.end());
  double median = recovered[recovered.size() / 2];
  CHECK(std::abs(median - true_sigma2) / true_sigma2 <= 0.25);
}

TEST_CASE("reinitialization loop") {
  KernelSpec truth = KernelSpec::se_iso(1.0, 0.6, 1);
  Dataset data = cli::synth_generate(truth, 400, 1, 1.0, 0.1, 77);
  KernelSpec start = KernelSpec::se_iso(0.6, 1.0, 1);
  Dataset warm = data;
  warm.sigma2 = 0.2;

  // one round reduces to a single greedy selection plus hyper optimization
  ReinitResult one = hyperopt_reinit(warm, start, 30, 1, 40);
  CHECK(one.rounds_run == 1);
  SelectionResult sel = select_greedy_variance(start, data.X, 30);
  Dataset d0 = data;
  d0.sigma2 = warm.sigma2;
  HyperoptResult direct = optimize_hypers(d0, start, InducingSet::points(sel.Z, 0.0), 40);
  CHECK(one.spec.variance == doctest::Approx(direct.spec.variance).epsilon(1e-12));
  CHECK(one.sigma2 == doctest::Approx(direct.sigma2).epsilon(1e-12));

  // accepted rounds are monotone in the ELBO
  ReinitResult multi = hyperopt_reinit(warm, start, 30, 6, 40);
  for (size_t i = 1; i < multi.round_elbos.size(); ++i)
    CHECK(multi.round_elbos[i] >= multi.round_elbos[i - 1] - 1e-9);
  // and the loop finishes close to the exact evidence at its final kernel
  Dataset tuned = data;
  tuned.sigma2 = multi.sigma2;
  double lml = log_marginal_likelihood(tuned, multi.spec);
  double final_elbo = multi.round_elbos.back();
  CHECK(lml - final_elbo >= -1e-6);
  CHECK(lml - final_elbo <= 10.0);
}

TEST_SUITE_END();
