#include "svgp/cli/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "svgp/errors.hpp"
#include "svgp/hyperopt.hpp"
#include "svgp/rng.hpp"
#include "svgp/spectrum.hpp"

namespace svgp::cli {

namespace {

using nlohmann::json;

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string out_path(const RunOptions& opts, const std::string& name) {
  std::filesystem::create_directories(opts.out_dir);
  return (std::filesystem::path(opts.out_dir) / name).string();
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

json selection_to_json(const SelectionResult& sel) {
  json j;
  j["method"] = sel.method;
  j["seed"] = sel.seed;
  j["m"] = sel.indices.size();
  j["indices"] = sel.indices;
  j["diagnostics"] = sel.diagnostics;
  return j;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::uint64_t master_seed(const Config& cfg, const RunOptions& opts) {
  if (opts.seed_overridden) return opts.seed;
  return static_cast<std::uint64_t>(cfg.get_int("data", "seed", 0));
}

// M rule for sweeps: "list:a,b,c" | "<c>*logn" | "<c>*logn^<d>"
std::vector<int> m_for_n(const std::string& rule, long n) {
  if (rule.rfind("list:", 0) == 0) {
    std::vector<int> out;
    std::istringstream ss(rule.substr(5));
    std::string item;
    while (std::getline(ss, item, ';')) out.push_back(std::stoi(item));
    return out;
  }
  size_t star = rule.find('*');
  if (star == std::string::npos) throw std::invalid_argument("config: bad m_rule: " + rule);
  double c = std::stod(rule.substr(0, star));
  std::string tail = rule.substr(star + 1);
  double power = 1.0;
  if (tail.rfind("logn^", 0) == 0)
    power = std::stod(tail.substr(5));
  else if (tail != "logn")
    throw std::invalid_argument("config: bad m_rule: " + rule);
  double m = c * std::pow(std::log(static_cast<double>(n)), power);
  return {std::max(1, static_cast<int>(std::ceil(m)))};
}

struct SplitData {
  Dataset train;
  Dataset test;
};

SplitData split_train_test(const Dataset& data, double test_fraction, std::uint64_t seed) {
  const int n = data.n();
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(mix_seed(seed, 0x73706c69));
  for (int i = n - 1; i > 0; --i)
    std::swap(idx[static_cast<size_t>(i)], idx[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  int ntest = std::max(1, static_cast<int>(std::floor(test_fraction * n)));
  ntest = std::min(ntest, n - 1);
  SplitData out;
  out.test.X.resize(ntest, data.d());
  out.test.y.resize(ntest);
  out.train.X.resize(n - ntest, data.d());
  out.train.y.resize(n - ntest);
  out.train.sigma2 = out.test.sigma2 = data.sigma2;
  for (int i = 0; i < ntest; ++i) {
    out.test.X.row(i) = data.X.row(idx[static_cast<size_t>(i)]);
    out.test.y[i] = data.y[idx[static_cast<size_t>(i)]];
  }
  for (int i = ntest; i < n; ++i) {
    out.train.X.row(i - ntest) = data.X.row(idx[static_cast<size_t>(i)]);
    out.train.y[i - ntest] = data.y[idx[static_cast<size_t>(i)]];
  }
  return out;
}

struct TestMetrics {
  double rmse = 0.0;
  double nlpd = 0.0;
};

TestMetrics metrics_from_prediction(const Eigen::VectorXd& mean, const Eigen::VectorXd& var,
                                    const Eigen::VectorXd& ytest, double sigma2) {
  TestMetrics out;
  const int n = static_cast<int>(ytest.size());
  double se = 0.0, nll = 0.0;
  for (int i = 0; i < n; ++i) {
    double d = ytest[i] - mean[i];
    se += d * d;
    double s = std::max(var[i], 0.0) + sigma2;
    nll += 0.5 * std::log(2.0 * M_PI * s) + 0.5 * d * d / s;
  }
  out.rmse = std::sqrt(se / n);
  out.nlpd = nll / n;
  return out;
}

OperatorSpectrum spectrum_from_config(const Config& cfg, const KernelSpec& spec) {
  if (spec.family == KernelFamily::Matern) {
    double T = cfg.get_num("spectrum", "support_radius", 1.0);
    double tau = cfg.get_num("spectrum", "density_bound", 1.0);
    return PolyDecaySpectrum::from_matern(spec, T, tau);
  }
  double beta2 = cfg.get_num("spectrum", "beta2", cfg.get_num("data", "beta2", 1.0));
  double l = spec.lengthscales[0];
  for (double cand : spec.lengthscales) l = std::min(l, cand);
  return se_gauss_spectrum(l, beta2, spec.variance, spec.dim);
}

Planner planner_from_name(const std::string& name) {
  if (name == "se1d_dpp") return Planner::Se1dDpp;
  if (name == "se1d_rls") return Planner::Se1dRls;
  if (name == "se_multid_dpp") return Planner::SeMultiDpp;
  if (name == "se_multid_rls") return Planner::SeMultiRls;
  if (name == "matern_dpp") return Planner::MaternDpp;
  if (name == "matern_rls") return Planner::MaternRls;
  throw std::invalid_argument("config: unknown planner: " + name);
}

}  // namespace

Dataset synth_generate(const KernelSpec& spec, int n, int d, double beta2, double sigma2,
                       std::uint64_t seed) {
  if (n < 1 || d < 1 || !(beta2 > 0.0) || !(sigma2 > 0.0))
    throw std::invalid_argument("synth_generate: invalid parameters");
  Dataset data;
  data.X.resize(n, d);
  Rng rng(mix_seed(seed, 0x73796e74));
  double beta = std::sqrt(beta2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) data.X(i, j) = beta * rng.normal();
  data.sigma2 = sigma2;
  data.y = sample_prior_observations(spec, data.X, sigma2, mix_seed(seed, 0x79737274));
  return data;
}

Dataset synth_generate_clustered(const KernelSpec& spec, int n, int d, int clusters,
                                 double cluster_spread, double sigma2, std::uint64_t seed) {
  if (n < 1 || d < 1 || clusters < 1 || !(sigma2 > 0.0))
    throw std::invalid_argument("synth_generate_clustered: invalid parameters");
  Dataset data;
  data.X.resize(n, d);
  Rng rng(mix_seed(seed, 0x636c7573));
  Eigen::MatrixXd centers(clusters, d);
  for (int c = 0; c < clusters; ++c)
    for (int j = 0; j < d; ++j) centers(c, j) = 4.0 * rng.normal();
  for (int i = 0; i < n; ++i) {
    int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(clusters)));
    for (int j = 0; j < d; ++j) data.X(i, j) = centers(c, j) + cluster_spread * rng.normal();
  }
  data.sigma2 = sigma2;
  data.y = sample_prior_observations(spec, data.X, sigma2, mix_seed(seed, 0x79636c75));
  return data;
}

CsvTable trace_to_table(const std::vector<TraceRow>& rows) {
  CsvTable t;
  t.header = {"experiment", "seed", "n",    "m",    "method", "elbo",      "u2",
              "u1",         "exact_kl", "t", "rmse", "nlpd",   "wall_time", "error"};
  for (const auto& r : rows) {
    t.rows.push_back({r.experiment, std::to_string(r.seed), std::to_string(r.n), std::to_string(r.m),
                      r.method, opt_cell(r.elbo), opt_cell(r.u2), opt_cell(r.u1),
                      opt_cell(r.exact_kl), opt_cell(r.t), opt_cell(r.rmse), opt_cell(r.nlpd),
                      format_double(r.wall_time), r.error});
  }
  return t;
}

KernelSpec kernel_from_config(const Config& cfg) {
  KernelFamily fam = family_from_name(cfg.get_str("kernel", "family", "se"));
  double v = cfg.get_num("kernel", "variance", 1.0);
  int dim = static_cast<int>(cfg.get_int("kernel", "dimension", cfg.get_int("data", "d", 1)));
  KernelSpec spec;
  switch (fam) {
    case KernelFamily::SqExpIso:
      spec = KernelSpec::se_iso(v, cfg.get_num("kernel", "lengthscales", 1.0), dim);
      break;
    case KernelFamily::SqExpArd: {
      std::vector<double> ls = cfg.get_num_list("kernel", "lengthscales");
      if (static_cast<int>(ls.size()) == 1) ls.assign(static_cast<size_t>(dim), ls[0]);
      spec = KernelSpec::se_ard(v, ls);
      break;
    }
    case KernelFamily::Matern:
      spec = KernelSpec::matern(v, cfg.get_num("kernel", "lengthscales", 1.0),
                                cfg.get_num("kernel", "nu", 1.5), dim);
      break;
  }
  return spec;
}

Dataset data_from_config(const Config& cfg, const RunOptions& opts) {
  std::string source = cfg.get_str("data", "source", "synthetic");
  std::uint64_t seed = master_seed(cfg, opts);
  Dataset data;
  if (source == "synthetic") {
    KernelSpec spec = kernel_from_config(cfg);
    int n = static_cast<int>(cfg.get_int("data", "n", 500));
    int d = static_cast<int>(cfg.get_int("data", "d", spec.dim));
    std::string shape = cfg.get_str("data", "shape", "gaussian");
    double sigma2 = cfg.get_num("data", "sigma2", 0.1);
    if (shape == "clustered") {
      data = synth_generate_clustered(spec, n, d, static_cast<int>(cfg.get_int("data", "clusters", 5)),
                                      cfg.get_num("data", "cluster_spread", 0.5), sigma2, seed);
    } else {
      data = synth_generate(spec, n, d, cfg.get_num("data", "beta2", 1.0), sigma2, seed);
    }
  } else if (source == "csv") {
    LoadedCsv loaded = load_csv(cfg.get_str("data", "path"), cfg.get_str("data", "target_column"),
                                cfg.get_num("data", "sigma2", 0.1));
    data = loaded.data;
  } else {
    throw std::invalid_argument("config: unknown data source: " + source);
  }
  // extra observation noise; a bare "on" selects the conventional 0.0068 std
  double extra = 0.0;
  if (cfg.has("data", "noise_std_extra")) {
    std::string raw = cfg.get_str("data", "noise_std_extra");
    if (raw == "on" || raw == "true" || raw == "yes")
      extra = 0.0068;
    else
      extra = cfg.get_num("data", "noise_std_extra");
  }
  if (extra > 0.0) {
    Rng rng(mix_seed(seed, 0x6e6f6973));
    for (Eigen::Index i = 0; i < data.y.size(); ++i) data.y[i] += extra * rng.normal();
  }
  return data;
}

InducingSet select_by_method(const std::string& method, const KernelSpec& spec, const Dataset& data,
                             int M, std::uint64_t seed, const Config& cfg) {
  double eps = cfg.get_num("select", "eps", 0.0);
  if (method == "uniform") return InducingSet::points(select_uniform(data.X, M, seed).Z, eps);
  if (method == "kmeanspp")
    return InducingSet::points(
        select_kmeanspp(data.X, M, seed, static_cast<int>(cfg.get_int("select", "kmeans_iters", 25))).Z,
        eps);
  if (method == "greedy") return InducingSet::points(select_greedy_variance(spec, data.X, M).Z, eps);
  if (method == "mdpp")
    return InducingSet::points(
        select_mdpp_mcmc(spec, data.X, M, cfg.get_int("select", "t_mcmc", 10000), seed).Z, eps);
  if (method == "rls")
    return InducingSet::points(
        select_rls_fixed(spec, data.X, M, cfg.get_num("select", "delta", 0.02), seed, true).Z, eps);
  if (method == "rls_adaptive")
    return InducingSet::points(select_rls_adaptive(spec, data.X, cfg.get_num("select", "omega", 0.01),
                                                   cfg.get_num("select", "delta", 0.02), seed)
                                   .Z,
                               eps);
  if (method == "eigenfeatures") return eigenfeature_inducing(spec, data.X, M);
  throw std::invalid_argument("config: unknown selector: " + method);
}

int run_fit(const Config& cfg, const RunOptions& opts) {
  KernelSpec spec = kernel_from_config(cfg);
  Dataset data = data_from_config(cfg, opts);
  std::string method = cfg.get_list("select", "methods").front();
  int M = static_cast<int>(cfg.get_int_list("select", "m").front());
  std::uint64_t seed = master_seed(cfg, opts);

  InducingSet ind = select_by_method(method, spec, data, M, seed, cfg);
  SparsePosterior post = fit(data, spec, ind);
  double e = elbo(data, spec, ind);
  double u2 = upper_bound_u2(data, spec, ind);
  double t = trace_term(data, spec, ind);

  json j;
  j["config_hash"] = cfg.hash_hex();
  j["n"] = data.n();
  j["m"] = ind.m();
  j["method"] = method;
  j["elbo"] = e;
  j["u2"] = u2;
  j["t"] = t;
  j["eps_used"] = post.eps_used;
  if (data.n() <= opts.desk_guard) {
    double lml = log_marginal_likelihood(data, spec, opts.desk_guard);
    j["log_marginal_likelihood"] = lml;
    j["exact_kl"] = lml - e;
  }
  write_json(out_path(opts, "fit.json"), j);
  std::cout << "elbo " << format_double(e) << " u2 " << format_double(u2) << " t "
            << format_double(t) << "\n";
  return 0;
}

int run_bounds(const Config& cfg, const RunOptions& opts) {
  KernelSpec spec = kernel_from_config(cfg);
  Dataset data = data_from_config(cfg, opts);
  std::string method = cfg.get_list("select", "methods").front();
  int M = static_cast<int>(cfg.get_int_list("select", "m").front());
  std::uint64_t seed = master_seed(cfg, opts);
  bool with_u1 = cfg.get_bool("bounds", "with_u1", data.n() <= opts.desk_guard);
  bool with_kl = cfg.get_bool("bounds", "with_exact_kl", data.n() <= opts.desk_guard);

  std::vector<double> eps_grid{cfg.get_num("select", "eps", 0.0)};
  if (cfg.has("bounds", "eps_grid")) eps_grid = cfg.get_num_list("bounds", "eps_grid");

  InducingSet base = select_by_method(method, spec, data, M, seed, cfg);

  CsvTable t;
  t.header = {"n", "m", "eps", "elbo", "u1", "u2", "t", "zeta", "kl_u1", "kl_u2", "exact_kl"};
  json rows = json::array();
  for (double eps : eps_grid) {
    InducingSet ind = base;
    ind.eps = eps;
    BoundReport rep = bound_report(data, spec, ind, with_u1, with_kl, opts.desk_guard);
    t.rows.push_back({std::to_string(rep.n), std::to_string(rep.m), format_double(rep.eps),
                      format_double(rep.elbo), opt_cell(rep.u1), format_double(rep.u2),
                      format_double(rep.t), opt_cell(rep.zeta), opt_cell(rep.kl_upper_u1),
                      format_double(rep.kl_upper_u2), opt_cell(rep.exact_kl)});
    json r;
    r["n"] = rep.n;
    r["m"] = rep.m;
    r["eps"] = rep.eps;
    r["elbo"] = rep.elbo;
    if (rep.u1) r["u1"] = *rep.u1;
    r["u2"] = rep.u2;
    r["t"] = rep.t;
    if (rep.zeta) r["zeta"] = *rep.zeta;
    if (rep.kl_upper_u1) r["kl_u1"] = *rep.kl_upper_u1;
    r["kl_u2"] = rep.kl_upper_u2;
    if (rep.exact_kl) r["exact_kl"] = *rep.exact_kl;
    rows.push_back(r);
  }
  write_csv_table(out_path(opts, "bounds.csv"), t, "config_hash=" + cfg.hash_hex());
  json j;
  j["config_hash"] = cfg.hash_hex();
  j["rows"] = rows;
  write_json(out_path(opts, "bounds.json"), j);
  return 0;
}

int run_select(const Config& cfg, const RunOptions& opts) {
  KernelSpec spec = kernel_from_config(cfg);
  Dataset data = data_from_config(cfg, opts);
  std::uint64_t seed = master_seed(cfg, opts);
  int M = static_cast<int>(cfg.get_int_list("select", "m").front());

  json all = json::array();
  for (const std::string& method : cfg.get_list("select", "methods")) {
    SelectionResult sel;
    if (method == "uniform") {
      sel = select_uniform(data.X, M, seed);
    } else if (method == "kmeanspp") {
      sel = select_kmeanspp(data.X, M, seed, static_cast<int>(cfg.get_int("select", "kmeans_iters", 25)));
    } else if (method == "greedy") {
      sel = select_greedy_variance(spec, data.X, M);
    } else if (method == "mdpp") {
      sel = select_mdpp_mcmc(spec, data.X, M, cfg.get_int("select", "t_mcmc", 10000), seed);
    } else if (method == "rls") {
      sel = select_rls_fixed(spec, data.X, M, cfg.get_num("select", "delta", 0.02), seed,
                             cfg.get_bool("select", "exact_size", true));
    } else if (method == "rls_adaptive") {
      sel = select_rls_adaptive(spec, data.X, cfg.get_num("select", "omega", 0.01),
                                cfg.get_num("select", "delta", 0.02), seed);
    } else {
      throw std::invalid_argument("config: unknown selector: " + method);
    }
    sel.diagnostics["trace_term"] =
        trace_term(data, spec, InducingSet::points(sel.Z, cfg.get_num("select", "eps", 0.0)));
    all.push_back(selection_to_json(sel));
  }
  json j;
  j["config_hash"] = cfg.hash_hex();
  j["selections"] = all;
  write_json(out_path(opts, "select.json"), j);
  return 0;
}

int run_spectrum(const Config& cfg, const RunOptions& opts) {
  KernelSpec spec = kernel_from_config(cfg);
  OperatorSpectrum os = spectrum_from_config(cfg, spec);
  AprioriInputs base;
  base.gamma = cfg.get_num("spectrum", "gamma", 0.1);
  base.delta = cfg.get_num("spectrum", "delta", 0.02);
  base.R = cfg.get_num("spectrum", "r", 1.0);
  base.sigma2 = cfg.get_num("data", "sigma2", 0.1);
  base.v = spec.variance;

  CsvTable t;
  t.header = {"planner", "n", "gamma", "delta", "m", "bound_value", "valid"};
  for (const std::string& pl : cfg.get_list("spectrum", "planners")) {
    Planner planner = planner_from_name(pl);
    for (long n : cfg.get_int_list("spectrum", "n_grid")) {
      AprioriInputs in = base;
      in.n = n;
      PlannerResult res = required_m(planner, in, os);
      t.rows.push_back({pl, std::to_string(n), format_double(in.gamma), format_double(in.delta),
                        std::to_string(res.m), format_double(res.bound), res.vacuous ? "0" : "1"});
    }
  }
  write_csv_table(out_path(opts, "spectrum.csv"), t, "config_hash=" + cfg.hash_hex());
  return 0;
}

int run_sweep(const Config& cfg, const RunOptions& opts) {
  KernelSpec spec = kernel_from_config(cfg);
  std::string method = cfg.get_list("select", "methods").front();
  std::string rule = cfg.get_str("sweep", "m_rule", "4*logn");
  std::vector<long> n_grid = cfg.get_int_list("sweep", "n_grid");
  std::vector<long> seeds = cfg.get_int_list("sweep", "seeds");
  double sigma2 = cfg.get_num("data", "sigma2", 0.1);
  double beta2 = cfg.get_num("data", "beta2", 1.0);
  int dim = static_cast<int>(cfg.get_int("data", "d", spec.dim));

  struct Cell {
    long n;
    long seed;
    int m;
  };
  std::vector<Cell> cells;
  for (long n : n_grid)
    for (long seed : seeds)
      for (int m : m_for_n(rule, n)) cells.push_back({n, seed, m});

  std::vector<TraceRow> rows(cells.size());
  auto work = [&](size_t lo, size_t hi) {
    for (size_t c = lo; c < hi; ++c) {
      const Cell& cell = cells[c];
      TraceRow& row = rows[c];
      row.experiment = cfg.get_str("experiment", "id", "sweep");
      row.seed = static_cast<std::uint64_t>(cell.seed);
      row.n = cell.n;
      row.m = cell.m;
      row.method = method;
      double t0 = now_seconds();
      try {
        Dataset data = synth_generate(spec, static_cast<int>(cell.n), dim, beta2, sigma2,
                                      mix_seed(static_cast<std::uint64_t>(cell.seed), static_cast<std::uint64_t>(cell.n)));
        InducingSet ind = select_by_method(method, spec, data, cell.m,
                                           static_cast<std::uint64_t>(cell.seed), cfg);
        row.elbo = elbo(data, spec, ind);
        row.u2 = upper_bound_u2(data, spec, ind);
        row.t = trace_term(data, spec, ind);
        if (cell.n <= opts.desk_guard)
          row.exact_kl = log_marginal_likelihood(data, spec, opts.desk_guard) - *row.elbo;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      row.wall_time = now_seconds() - t0;
    }
  };

  int threads = std::max(1, opts.threads);
  if (threads == 1 || cells.size() < 2) {
    work(0, cells.size());
  } else {
    std::vector<std::future<void>> futs;
    size_t chunk = (cells.size() + static_cast<size_t>(threads) - 1) / static_cast<size_t>(threads);
    for (int th = 0; th < threads; ++th) {
      size_t lo = static_cast<size_t>(th) * chunk;
      size_t hi = std::min(cells.size(), lo + chunk);
      if (lo >= hi) break;
      futs.push_back(std::async(std::launch::async, work, lo, hi));
    }
    for (auto& f : futs) f.get();
  }

  std::stable_sort(rows.begin(), rows.end(), [](const TraceRow& a, const TraceRow& b) {
    return a.n != b.n ? a.n < b.n : a.seed < b.seed;
  });
  write_csv_table(out_path(opts, "sweep.csv"), trace_to_table(rows),
                  "config_hash=" + cfg.hash_hex());
  return 0;
}

int run_compare(const Config& cfg, const RunOptions& opts) {
  KernelSpec spec = kernel_from_config(cfg);
  Dataset full = data_from_config(cfg, opts);
  std::vector<std::string> methods = cfg.get_list("select", "methods");
  if (methods.size() < 2) throw std::invalid_argument("config: compare needs at least 2 selectors");
  std::vector<long> ms = cfg.get_int_list("select", "m");
  std::vector<long> seeds = cfg.get_int_list("sweep", "seeds");
  double test_fraction = cfg.get_num("data", "test_fraction", 0.1);

  SplitData split = split_train_test(full, test_fraction, master_seed(cfg, opts));
  std::vector<TraceRow> rows;

  for (const std::string& method : methods) {
    for (long m : ms) {
      for (long seed : seeds) {
        TraceRow row;
        row.experiment = cfg.get_str("experiment", "id", "compare");
        row.method = method;
        row.m = static_cast<int>(m);
        row.n = split.train.n();
        row.seed = static_cast<std::uint64_t>(seed);
        double t0 = now_seconds();
        try {
          InducingSet ind = select_by_method(method, spec, split.train, static_cast<int>(m),
                                             static_cast<std::uint64_t>(seed), cfg);
          row.elbo = elbo(split.train, spec, ind);
          row.u2 = upper_bound_u2(split.train, spec, ind);
          row.t = trace_term(split.train, spec, ind);
          SparsePosterior post = fit(split.train, spec, ind);
          SparsePrediction pred = sparse_predict(post, split.test.X);
          TestMetrics tm = metrics_from_prediction(pred.mean, pred.var, split.test.y, full.sigma2);
          row.rmse = tm.rmse;
          row.nlpd = tm.nlpd;
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        row.wall_time = now_seconds() - t0;
        rows.push_back(row);
      }
    }
  }

  // exact-GP reference
  TraceRow ref;
  ref.experiment = cfg.get_str("experiment", "id", "compare");
  ref.method = "exact";
  ref.n = split.train.n();
  ref.m = split.train.n();
  double t0 = now_seconds();
  try {
    ref.elbo = log_marginal_likelihood(split.train, spec, opts.desk_guard);
    Prediction pred = exact_predict(split.train, spec, split.test.X, opts.desk_guard);
    TestMetrics tm = metrics_from_prediction(pred.mean, pred.cov.diagonal(), split.test.y, full.sigma2);
    ref.rmse = tm.rmse;
    ref.nlpd = tm.nlpd;
  } catch (const std::exception& e) {
    ref.error = e.what();
  }
  ref.wall_time = now_seconds() - t0;
  rows.push_back(ref);

  write_csv_table(out_path(opts, "compare.csv"), trace_to_table(rows),
                  "config_hash=" + cfg.hash_hex());
  return 0;
}

int run_hyperopt(const Config& cfg, const RunOptions& opts) {
  KernelSpec spec = kernel_from_config(cfg);
  Dataset data = data_from_config(cfg, opts);
  int M = static_cast<int>(cfg.get_int("hyperopt", "m", std::max(1, data.n() / 4)));
  int rounds = static_cast<int>(cfg.get_int("hyperopt", "rounds", 10));
  int budget = static_cast<int>(cfg.get_int("hyperopt", "budget", 100));

  ReinitResult res = hyperopt_reinit(data, spec, M, rounds, budget);

  Dataset tuned = data;
  tuned.sigma2 = res.sigma2;
  InducingSet ind = InducingSet::points(res.Z);
  double final_elbo = elbo(tuned, res.spec, ind);

  json j;
  j["config_hash"] = cfg.hash_hex();
  j["rounds_run"] = res.rounds_run;
  j["round_elbos"] = res.round_elbos;
  j["final_elbo"] = final_elbo;
  j["variance"] = res.spec.variance;
  j["lengthscales"] = res.spec.lengthscales;
  j["sigma2"] = res.sigma2;
  if (data.n() <= opts.desk_guard)
    j["log_marginal_likelihood_at_final_hypers"] = log_marginal_likelihood(tuned, res.spec, opts.desk_guard);
  write_json(out_path(opts, "hyperopt.json"), j);
  std::cout << "final elbo " << format_double(final_elbo) << " after " << res.rounds_run
            << " rounds\n";
  return 0;
}

double quantile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of empty set");
  std::sort(values.begin(), values.end());
  size_t rank = static_cast<size_t>(std::ceil(p * static_cast<double>(values.size())));
  rank = std::min(std::max<size_t>(rank, 1), values.size());
  return values[rank - 1];
}

CsvTable emit_tables(const std::vector<CsvTable>& traces, const std::vector<std::string>& group_by,
                     const std::vector<std::string>& values) {
  if (traces.empty()) throw std::invalid_argument("emit_tables: no input tables");
  std::map<std::vector<std::string>, std::map<std::string, std::vector<double>>> groups;
  for (const auto& t : traces) {
    std::vector<int> gcols, vcols;
    for (const auto& g : group_by) {
      int c = t.column(g);
      if (c < 0) throw std::invalid_argument("emit_tables: missing group column " + g);
      gcols.push_back(c);
    }
    for (const auto& v : values) {
      int c = t.column(v);
      if (c < 0) throw std::invalid_argument("emit_tables: missing value column " + v);
      vcols.push_back(c);
    }
    for (const auto& row : t.rows) {
      std::vector<std::string> key;
      for (int c : gcols) key.push_back(row[static_cast<size_t>(c)]);
      for (size_t vi = 0; vi < values.size(); ++vi) {
        const std::string& cell = row[static_cast<size_t>(vcols[vi])];
        if (cell.empty()) continue;
        try {
          groups[key][values[vi]].push_back(std::stod(cell));
        } catch (const std::exception&) {
          // non-numeric cells are treated as null
        }
      }
    }
  }

  CsvTable out;
  out.header = group_by;
  for (const auto& v : values) {
    out.header.push_back(v + "_median");
    out.header.push_back(v + "_q20");
    out.header.push_back(v + "_q80");
    out.header.push_back(v + "_count");
  }
  for (const auto& [key, vals] : groups) {
    std::vector<std::string> row = key;
    for (const auto& v : values) {
      auto it = vals.find(v);
      if (it == vals.end() || it->second.empty()) {
        row.insert(row.end(), {"", "", "", "0"});
        continue;
      }
      row.push_back(format_double(quantile_nearest_rank(it->second, 0.5)));
      row.push_back(format_double(quantile_nearest_rank(it->second, 0.2)));
      row.push_back(format_double(quantile_nearest_rank(it->second, 0.8)));
      row.push_back(std::to_string(it->second.size()));
    }
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace svgp::cli
