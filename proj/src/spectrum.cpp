#include "svgp/spectrum.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace svgp {

namespace {

double binom(long n, int k) {
  if (k < 0 || n < k) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// lam value on block s' (before the variance factor)
double block_value(const SeGaussSpectrum& s, long sp) {
  return std::pow(2.0 * s.a / s.A, 0.5 * s.dim) * std::pow(s.B, static_cast<double>(sp));
}

// multiplicity of block s' in D dimensions
double block_count(const SeGaussSpectrum& s, long sp) { return binom(sp + s.dim - 1, s.dim - 1); }

// sum_{m = q}^{inf} m^{-eta} by direct terms plus Euler-Maclaurin closure
double zeta_tail(double eta, long q) {
  if (q < 1) q = 1;
  double sum = 0.0;
  long cut = std::max<long>(q, 128);
  for (long m = q; m < cut; ++m) sum += std::pow(static_cast<double>(m), -eta);
  double x = static_cast<double>(cut);
  double xe = std::pow(x, -eta);
  sum += x * xe / (eta - 1.0) + 0.5 * xe + eta * xe / (12.0 * x) -
         eta * (eta + 1.0) * (eta + 2.0) * xe / (720.0 * x * x * x);
  return sum;
}

double x_minus_log1p(double x) {
  if (x < 1e-4) {
    // series: x - log(1+x) = x^2/2 - x^3/3 + x^4/4 - ...
    return x * x * (0.5 - x * (1.0 / 3.0 - 0.25 * x));
  }
  return x - std::log1p(x);
}

struct SpectrumView {
  double eig_hi(int m) const;
  double eig_lo(int m) const;
  double tail_hi(int M) const;
  double v() const;
  const OperatorSpectrum* s;
};

double SpectrumView::eig_hi(int m) const {
  return std::visit(
      [&](const auto& sp) -> double {
        using T = std::decay_t<decltype(sp)>;
        if constexpr (std::is_same_v<T, SeGaussSpectrum>)
          return op_eig(*s, m);
        else
          return poly_eig_upper(sp, m);
      },
      *s);
}

double SpectrumView::eig_lo(int m) const {
  return std::visit(
      [&](const auto& sp) -> double {
        using T = std::decay_t<decltype(sp)>;
        if constexpr (std::is_same_v<T, SeGaussSpectrum>)
          return op_eig(*s, m);
        else
          return poly_eig_lower(sp, m);
      },
      *s);
}

double SpectrumView::tail_hi(int M) const { return op_tail(*s, M); }

double SpectrumView::v() const { return op_signal_variance(*s); }

}  // namespace

SeGaussSpectrum se_gauss_spectrum(double lengthscale, double beta2, double v, int dim) {
  if (!(lengthscale > 0.0) || !(beta2 > 0.0) || !(v > 0.0) || dim < 1)
    throw std::invalid_argument("se_gauss_spectrum: parameters must be positive");
  SeGaussSpectrum s;
  s.lengthscale = lengthscale;
  s.beta2 = beta2;
  s.v = v;
  s.dim = dim;
  s.a = 1.0 / (4.0 * beta2);
  s.b = 1.0 / (2.0 * lengthscale * lengthscale);
  s.A = s.a + s.b + std::sqrt(s.a * s.a + 4.0 * s.a * s.b);
  s.B = s.b / s.A;
  s.alpha = -std::log(s.B);
  return s;
}

SeGaussSpectrum se_gauss_spectrum_worst_case(const KernelSpec& spec,
                                             const Eigen::VectorXd& beta2_per_dim, double v) {
  spec.validate();
  double lmin = spec.lengthscales[0];
  for (double l : spec.lengthscales) lmin = std::min(lmin, l);
  double bmax = beta2_per_dim.maxCoeff();
  return se_gauss_spectrum(lmin, bmax, v, spec.dim);
}

double se_gauss_eig_1d(const SeGaussSpectrum& s, int m) {
  if (s.dim != 1) throw std::invalid_argument("se_gauss_eig_1d: spectrum is not one-dimensional");
  if (m < 1) throw std::invalid_argument("se_gauss_eig_1d: m must be >= 1");
  return s.v * std::sqrt(2.0 * s.a / s.A) * std::pow(s.B, m - 1);
}

double se_gauss_tail_1d(const SeGaussSpectrum& s, int M) {
  if (s.dim != 1) throw std::invalid_argument("se_gauss_tail_1d: spectrum is not one-dimensional");
  if (M < 0) throw std::invalid_argument("se_gauss_tail_1d: M must be >= 0");
  return s.v * std::sqrt(2.0 * s.a / s.A) * std::pow(s.B, M) / (1.0 - s.B);
}

std::vector<double> se_gauss_eigs_multid(const SeGaussSpectrum& s, int count) {
  if (count < 0 || count > 100'000'000)
    throw std::invalid_argument("se_gauss_eigs_multid: count out of range");
  std::vector<double> out;
  out.reserve(static_cast<size_t>(count));
  long sp = 0;
  while (static_cast<int>(out.size()) < count) {
    double val = s.v * block_value(s, sp);
    double reps = block_count(s, sp);
    for (long r = 0; r < static_cast<long>(reps) && static_cast<int>(out.size()) < count; ++r)
      out.push_back(val);
    ++sp;
  }
  return out;
}

double se_gauss_tail_bound_multid(const SeGaussSpectrum& s, int M) {
  const double D = static_cast<double>(s.dim);
  double threshold = std::pow(D, D) / s.alpha + D - 1.0;
  if (M < threshold)
    throw std::domain_error("se_gauss_tail_bound_multid: M below the bound's validity threshold");
  double lead = std::pow(2.0 * s.a / s.A, 0.5 * D) * s.v;
  return lead * D * D * (M - D + 1.0) / s.alpha *
         std::exp(-s.alpha * std::pow(M - D, 1.0 / D));
}

double se_gauss_eig_lower(const SeGaussSpectrum& s, int r) {
  if (r < 1) throw std::invalid_argument("se_gauss_eig_lower: r must be >= 1");
  const double D = static_cast<double>(s.dim);
  return s.v * std::pow(2.0 * s.a / s.A, 0.5 * D) *
         std::pow(s.B, D * std::pow(static_cast<double>(r), 1.0 / D));
}

PolyDecaySpectrum PolyDecaySpectrum::from_matern(const KernelSpec& spec, double T, double tau) {
  if (spec.family != KernelFamily::Matern)
    throw std::invalid_argument("PolyDecaySpectrum::from_matern: kernel must be Matern");
  if (!(T > 0.0) || !(tau > 0.0))
    throw std::invalid_argument("PolyDecaySpectrum::from_matern: T and tau must be positive");
  const double D = static_cast<double>(spec.dim);
  const double nu = spec.nu;
  const double l = spec.lengthscales[0];
  PolyDecaySpectrum p;
  p.dim = spec.dim;
  p.nu = nu;
  p.eta = (2.0 * nu + D) / D;
  p.v = spec.variance;
  // limit of m^eta times the spectral-density eigenvalue bound
  double cT = 2.0 * std::pow(std::tgamma(0.5 * D + 1.0), 2.0 / D) / T;
  double norm = std::pow(l, D) * std::tgamma(nu + 0.5 * D) /
                (std::pow(M_PI, 0.5 * D) * std::tgamma(nu));
  double c = spec.variance * tau * std::pow(2.0 * M_PI, D) * norm * std::pow(l * cT, -(2.0 * nu + D));
  p.C1 = c;
  p.C2 = c;
  return p;
}

double poly_eig_lower(const PolyDecaySpectrum& s, int m) {
  if (m < 1) throw std::invalid_argument("poly_eig_lower: m must be >= 1");
  return s.C1 * std::pow(static_cast<double>(m), -s.eta);
}

double poly_eig_upper(const PolyDecaySpectrum& s, int m) {
  if (m < 1) throw std::invalid_argument("poly_eig_upper: m must be >= 1");
  return s.C2 * std::pow(static_cast<double>(m), -s.eta);
}

double poly_tail_upper(const PolyDecaySpectrum& s, int M) {
  if (M < 0) throw std::invalid_argument("poly_tail_upper: M must be >= 0");
  if (!(s.eta > 1.0)) throw std::invalid_argument("poly tail requires eta > 1");
  return s.C2 * zeta_tail(s.eta, M + 1);
}

double poly_tail_lower(const PolyDecaySpectrum& s, int M) {
  if (M < 0) throw std::invalid_argument("poly_tail_lower: M must be >= 0");
  if (!(s.eta > 1.0)) throw std::invalid_argument("poly tail requires eta > 1");
  return s.C1 * zeta_tail(s.eta, M + 1);
}

double matern_eig_bound(const KernelSpec& spec, double T, double tau, int m) {
  if (spec.family != KernelFamily::Matern)
    throw std::invalid_argument("matern_eig_bound: kernel must be Matern");
  if (!(T > 0.0) || !(tau > 0.0) || m < 1)
    throw std::invalid_argument("matern_eig_bound: invalid arguments");
  const double D = static_cast<double>(spec.dim);
  double arg = 2.0 * std::pow(std::tgamma(0.5 * D + 1.0), 2.0 / D) / T *
               std::pow(static_cast<double>(m), 1.0 / D);
  return spec.variance * tau * std::pow(2.0 * M_PI, D) * spectral_density_matern(spec, arg);
}

double op_eig(const OperatorSpectrum& s, int m) {
  if (m < 1) throw std::invalid_argument("op_eig: m must be >= 1");
  if (std::holds_alternative<SeGaussSpectrum>(s)) {
    const auto& g = std::get<SeGaussSpectrum>(s);
    if (g.dim == 1) return se_gauss_eig_1d(g, m);
    long sp = 0;
    double cum = 0.0;
    while (true) {
      cum += block_count(g, sp);
      if (cum >= static_cast<double>(m)) return g.v * block_value(g, sp);
      ++sp;
    }
  }
  return poly_eig_upper(std::get<PolyDecaySpectrum>(s), m);
}

double op_tail(const OperatorSpectrum& s, int M) {
  if (M < 0) throw std::invalid_argument("op_tail: M must be >= 0");
  if (std::holds_alternative<SeGaussSpectrum>(s)) {
    const auto& g = std::get<SeGaussSpectrum>(s);
    if (g.dim == 1) return se_gauss_tail_1d(g, M);
    // walk blocks: partial contribution of the block containing index M,
    // then whole blocks until the increment is negligible
    long sp = 0;
    double cum = 0.0;
    double tail = 0.0;
    while (sp <= 1000000) {
      double cnt = block_count(g, sp);
      double val = g.v * block_value(g, sp);
      double below = std::min(cnt, std::max(0.0, static_cast<double>(M) - cum));
      double inc = (cnt - below) * val;
      tail += inc;
      cum += cnt;
      ++sp;
      if (cum > static_cast<double>(M) && inc <= 1e-14 * tail) break;
    }
    return tail;
  }
  return poly_tail_upper(std::get<PolyDecaySpectrum>(s), M);
}

double op_signal_variance(const OperatorSpectrum& s) {
  if (std::holds_alternative<SeGaussSpectrum>(s)) return std::get<SeGaussSpectrum>(s).v;
  return std::get<PolyDecaySpectrum>(s).v;
}

void AprioriInputs::validate() const {
  if (n < 1) throw std::invalid_argument("apriori inputs: n must be >= 1");
  if (m_or_s < 0) throw std::invalid_argument("apriori inputs: M/S must be >= 0");
  if (eps_dpp < 0.0 || eps_dpp > 1.0) throw std::invalid_argument("apriori inputs: eps in [0,1]");
  if (!(delta > 0.0) || delta >= 1.0) throw std::invalid_argument("apriori inputs: delta in (0,1)");
  if (!(gamma > 0.0)) throw std::invalid_argument("apriori inputs: gamma must be positive");
  if (R < 0.0) throw std::invalid_argument("apriori inputs: R must be >= 0");
  if (!(sigma2 > 0.0) || !(v > 0.0))
    throw std::invalid_argument("apriori inputs: sigma2 and v must be positive");
}

double apriori_kl_mdpp(const AprioriInputs& in, double tail, YModel y, bool with_probability) {
  in.validate();
  if (tail < 0.0) throw std::invalid_argument("apriori_kl_mdpp: tail must be >= 0");
  const double N = static_cast<double>(in.n);
  const double M = static_cast<double>(in.m_or_s);
  double core = ((M + 1.0) * N * tail + 2.0 * N * in.v * in.eps_dpp) / in.sigma2;
  double val = y == YModel::Bounded ? 0.5 * (1.0 + in.R * N / in.sigma2) * core : core;
  return with_probability ? val / in.delta : val;
}

RlsBoundResult apriori_kl_rls(const AprioriInputs& in, double tail_S, RlsBound variant, double c_m) {
  in.validate();
  if (tail_S < 0.0) throw std::invalid_argument("apriori_kl_rls: tail must be >= 0");
  if (!(in.delta < 1.0 / 32.0))
    throw std::invalid_argument("apriori_kl_rls: delta must lie in (0, 1/32)");
  const double N = static_cast<double>(in.n);
  const double S = static_cast<double>(in.m_or_s);
  if (S < 1.0) throw std::invalid_argument("apriori_kl_rls: S must be >= 1");
  RlsBoundResult out;
  switch (variant) {
    case RlsBound::FixedBoundedY:
      out.kl_bound = 0.5 * (N + in.R * N / in.sigma2) * N * tail_S / (S * in.delta * in.delta * in.sigma2);
      out.m_bound = c_m * S * std::log(S / in.delta);
      break;
    case RlsBound::FixedPriorY:
      out.kl_bound = N * N * tail_S / (S * in.delta * in.delta * in.sigma2);
      out.m_bound = c_m * S * std::log(S / in.delta);
      break;
    case RlsBound::AdaptivePriorY: {
      double d = S + N * N / (in.sigma2 * in.delta * in.delta * in.gamma) * tail_S;
      out.kl_bound = in.gamma;
      out.m_bound = 384.0 * d * std::log(d / in.delta);
      break;
    }
    case RlsBound::AdaptiveBoundedY: {
      // the published display carries R^2/sigma2 here, unlike the R/sigma2
      // scaling of the fixed-rank variant; kept verbatim
      double d = S + N * N * (1.0 + in.R * in.R / in.sigma2) / (2.0 * in.sigma2 * in.delta * in.gamma) * tail_S;
      out.kl_bound = in.gamma;
      out.m_bound = 384.0 * d * std::log(d / in.delta);
      break;
    }
  }
  return out;
}

DeffMinimum minimize_deff_surrogate(const AprioriInputs& in, const OperatorSpectrum& spec,
                                    RlsBound variant, int s_cap) {
  if (variant != RlsBound::AdaptivePriorY && variant != RlsBound::AdaptiveBoundedY)
    throw std::invalid_argument("minimize_deff_surrogate: adaptive variants only");
  DeffMinimum best;
  best.d = std::numeric_limits<double>::infinity();
  AprioriInputs probe = in;
  for (int S = 1; S <= s_cap; ++S) {
    probe.m_or_s = S;
    RlsBoundResult r = apriori_kl_rls(probe, op_tail(spec, S), variant);
    // recover d from the monotone map d -> 384 d log(d/delta) is not needed;
    // compare the surrogate directly
    const double N = static_cast<double>(in.n);
    double d = variant == RlsBound::AdaptivePriorY
                   ? S + N * N / (in.sigma2 * in.delta * in.delta * in.gamma) * op_tail(spec, S)
                   : S + N * N * (1.0 + in.R * in.R / in.sigma2) /
                             (2.0 * in.sigma2 * in.delta * in.gamma) * op_tail(spec, S);
    (void)r;
    if (d < best.d) {
      best.d = d;
      best.s = S;
    }
  }
  return best;
}

PlannerResult required_m(Planner planner, const AprioriInputs& in, const OperatorSpectrum& spec) {
  in.validate();
  PlannerResult out;
  const bool dpp = planner == Planner::Se1dDpp || planner == Planner::SeMultiDpp ||
                   planner == Planner::MaternDpp;
  AprioriInputs probe = in;
  const double N = static_cast<double>(in.n);
  if (dpp) {
    // sampler accuracy absorbs half of the budget; TV distance caps at 1
    probe.eps_dpp =
        std::min(1.0, in.gamma * in.sigma2 / (2.0 * N * in.v * (1.0 + in.R * N / in.sigma2)));
  }
  long cap = std::min<long>(in.n, 2'000'000);
  for (long M = 1; M <= cap; ++M) {
    probe.m_or_s = static_cast<int>(M);
    double tail = op_tail(spec, static_cast<int>(M));
    double bound;
    if (dpp) {
      bound = apriori_kl_mdpp(probe, tail, YModel::Bounded, false);
    } else {
      RlsBoundResult r = apriori_kl_rls(probe, tail, RlsBound::FixedBoundedY);
      bound = r.kl_bound;
      out.m_bound = r.m_bound;
    }
    if (bound <= in.gamma) {
      out.m = static_cast<int>(M);
      out.bound = bound;
      return out;
    }
    out.bound = bound;
  }
  out.vacuous = true;
  out.m = -1;
  return out;
}

int se1d_dpp_closed_form_m(const AprioriInputs& in, const SeGaussSpectrum& s) {
  in.validate();
  if (s.dim != 1) throw std::invalid_argument("se1d_dpp_closed_form_m: spectrum must be 1D");
  const double N = static_cast<double>(in.n);
  double arg = std::sqrt(s.A / (2.0 * s.a)) * in.gamma * in.delta * in.sigma2 * (1.0 - s.B) /
               (s.v * N * N * (1.0 + in.R * N / in.sigma2));
  double m = std::log(arg) / std::log(s.B);
  return std::max(1, static_cast<int>(std::ceil(m)));
}

double kl_lower_bound_from_eigs(const Eigen::Ref<const Eigen::VectorXd>& matrix_eigs, int M,
                                double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("kl_lower_bound_from_eigs: sigma2 must be positive");
  const int n = static_cast<int>(matrix_eigs.size());
  if (M < 0 || M > n) throw std::invalid_argument("kl_lower_bound_from_eigs: need 0 <= M <= N");
  double scale = n > 0 ? std::max(1.0, matrix_eigs.cwiseAbs().maxCoeff()) : 1.0;
  double total = 0.0;
  for (int m = M; m < n; ++m) {
    double lam = matrix_eigs[m];
    if (lam < -1e-8 * scale)
      throw std::domain_error("kl_lower_bound_from_eigs: negative eigenvalue beyond tolerance");
    lam = std::max(0.0, lam);
    total += x_minus_log1p(lam / sigma2);
  }
  return 0.5 * total;
}

double eig_concentration_bound(const OperatorSpectrum& s, int m, int r, long N, double delta) {
  if (m < 1 || r < 1 || r > N) throw std::invalid_argument("eig_concentration_bound: bad m or r");
  if (!(delta > 0.0) || delta >= 1.0)
    throw std::invalid_argument("eig_concentration_bound: delta must lie in (0,1)");
  SpectrumView view{&s};
  double lam_m = view.eig_hi(m);
  double lam_r = view.eig_lo(r);
  if (!(lam_r > 0.0)) throw std::domain_error("eig_concentration_bound: lam_r must be positive");
  double v = view.v();
  double rN = static_cast<double>(r);
  double first = lam_m * rN * std::sqrt(rN * (rN + 1.0) * v / (lam_r * static_cast<double>(N) * delta));
  double second = view.tail_hi(r - 1);
  double third = std::sqrt(2.0 * v * view.tail_hi(r) / (static_cast<double>(N) * delta));
  return first + second + third;
}

LowerGrowth kl_lower_growth(LowerPlanner planner, long N, int M, double delta,
                            const OperatorSpectrum& spec, double sigma2) {
  if (N < 1 || M < 0 || !(sigma2 > 0.0) || !(delta > 0.0) || delta >= 1.0)
    throw std::invalid_argument("kl_lower_growth: invalid arguments");
  LowerGrowth out;
  if (M >= N) return out;  // no tail, bound degenerates to zero

  SpectrumView view{&spec};
  double lam = view.eig_lo(M + 1);
  if (!(lam > 0.0)) return out;
  const double logN = std::log(static_cast<double>(N));

  int r = 1;
  switch (planner) {
    case LowerPlanner::SeGauss1d: {
      const auto& g = std::get<SeGaussSpectrum>(spec);
      double eta = std::log(2.0 / (lam * std::sqrt(delta))) / logN;
      eta = std::min(0.99, std::max(0.01, eta));
      out.eta = eta;
      double arg = (1.0 - g.B) / (g.v * std::sqrt(2.0 * g.a / g.A)) *
                   std::pow(static_cast<double>(N), -eta);
      r = 1 + static_cast<int>(std::ceil(std::log(arg) / std::log(g.B)));
      break;
    }
    case LowerPlanner::SeGaussMulti: {
      const auto& g = std::get<SeGaussSpectrum>(spec);
      double base = logN / (4.0 * g.alpha * g.dim);
      r = static_cast<int>(std::ceil(std::pow(std::max(1.0, base), g.dim)));
      out.eta = 0.25;
      break;
    }
    case LowerPlanner::Poly: {
      const auto& p = std::get<PolyDecaySpectrum>(spec);
      double zeta_eff = std::log(static_cast<double>(M + 1)) / logN;
      double g_max = 1.0 / (4.0 + p.eta);
      double g_min = zeta_eff * p.eta / (p.eta - 1.0);
      out.eta = p.eta;
      double g;
      if (g_min < g_max) {
        g = 0.5 * (g_min + g_max);
      } else {
        g = 0.999 * g_max;  // regime guard failed; rel_err will reveal it
      }
      r = static_cast<int>(std::ceil(std::pow(static_cast<double>(N), g)));
      break;
    }
  }
  long r_cap = std::min<long>(N, 1000000L);
  r = static_cast<int>(std::max<long>(1L, std::min<long>(r, r_cap)));
  out.r = r;

  double dev = eig_concentration_bound(spec, M + 1, r, N, delta);
  out.rel_err = dev / lam;
  double guard = 1.0 - out.rel_err;
  if (guard <= 0.0) {
    out.valid = false;
    out.predicted_lower = 0.0;
    return out;
  }
  double lam_tilde_floor = static_cast<double>(N) * lam * guard;  // certified matrix eigenvalue
  out.valid = lam_tilde_floor / sigma2 > 3.0;
  out.predicted_lower = lam_tilde_floor / (4.0 * sigma2);
  return out;
}

}  // namespace svgp
