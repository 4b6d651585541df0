#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "arborart/akd.hpp"
#include "arborart/approx.hpp"
#include "arborart/bart.hpp"
#include "arborart/experiments.hpp"
#include "arborart/funcs.hpp"
#include "arborart/prior.hpp"
#include "arborart/splitnet.hpp"
#include "arborart/util.hpp"

namespace aa = arborart;

namespace {

struct TruthOpts {
  std::string name = "sim";
  int p = 2;
  aa::Vec coef{1.0};
  aa::Vec expo{0.5};
  double value = 1.0;
  double lambda = 1.0;
};

aa::RealFn make_truth(const TruthOpts& t) {
  if (t.name == "sim") return aa::sim_function;
  if (t.name == "power") {
    int d = static_cast<int>(t.expo.size());
    std::vector<int> S0(d);
    for (int j = 0; j < d; ++j) S0[j] = j;
    auto spec = std::make_shared<aa::PiecewiseAnisoSpec>(
        aa::PiecewiseAnisoSpec::power(t.p, S0, t.coef, t.expo, t.lambda));
    return [spec](const aa::Vec& x) { return spec->f0(x); };
  }
  if (t.name == "constant")
    return [v = t.value](const aa::Vec&) { return v; };
  throw CLI::ValidationError("--truth", "unknown truth: " + t.name);
}

void add_truth_options(CLI::App* cmd, TruthOpts& t) {
  cmd->add_option("--truth", t.name, "truth function: sim | power | constant")
      ->capture_default_str();
  cmd->add_option("--coef", t.coef, "power truth: coefficients")->delimiter(',');
  cmd->add_option("--expo", t.expo, "power truth: exponents in (0,1]")->delimiter(',');
  cmd->add_option("--value", t.value, "constant truth: value")->capture_default_str();
  cmd->add_option("--lambda", t.lambda, "Hoelder coefficient of the truth")
      ->capture_default_str();
}

aa::ModelKind parse_model(const std::string& name) {
  if (name == "reg-fixed") return aa::ModelKind::reg_fixed;
  if (name == "reg-random") return aa::ModelKind::reg_random;
  if (name == "density") return aa::ModelKind::density;
  if (name == "classify") return aa::ModelKind::classify;
  throw CLI::ValidationError("--model", "unknown model: " + name);
}

// CSV with a header line; a column named y is the response, the rest are
// covariates in file order. '#' lines are comments.
aa::Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = aa::split_string(line, ',');
    break;
  }
  if (header.empty()) throw std::runtime_error(path + ": missing header");
  int ycol = -1;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == "y") ycol = static_cast<int>(c);
  aa::Dataset out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = aa::split_string(line, ',');
    if (cells.size() != header.size())
      throw std::runtime_error(path + ": ragged row");
    aa::Vec x;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = std::stod(cells[c]);
      if (static_cast<int>(c) == ycol)
        out.y.push_back(v);
      else
        x.push_back(v);
    }
    out.X.push_back(std::move(x));
  }
  if (out.X.empty()) throw std::runtime_error(path + ": no data rows");
  return out;
}

std::vector<std::string> xy_columns(int p, bool with_y) {
  std::vector<std::string> cols;
  for (int j = 1; j <= p; ++j) cols.push_back("x" + std::to_string(j));
  if (with_y) cols.push_back("y");
  return cols;
}

aa::SplitNet make_net(const std::string& kind, int m, const std::vector<aa::Vec>& X,
                      int p) {
  if (kind == "design") return aa::SplitNet::from_points(X);
  if (kind == "grid") {
    std::vector<std::vector<double>> axes(p);
    for (int j = 0; j < p; ++j)
      for (int i = 1; i <= m; ++i) axes[j].push_back((i - 0.5) / m);
    return aa::SplitNet::from_axis_values(std::move(axes));
  }
  throw CLI::ValidationError("--net", "unknown net kind: " + kind);
}

double ols_slope(const aa::Vec& xs, const aa::Vec& ys) {
  double mx = aa::mean_of(xs), my = aa::mean_of(ys);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  return sxy / sxx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"arborart: tree-ensemble regression and partition toolkit"};
  app.set_config("--config", "", "flat key=value config file");
  app.require_subcommand(1);

  // ---- datagen ------------------------------------------------------------
  auto* datagen = app.add_subcommand("datagen", "draw a synthetic dataset");
  struct {
    std::string model = "reg-fixed";
    long n = 1000;
    int p = 2;
    double sigma0 = 0.05;
    int grid = 64;
    std::uint64_t seed = 1;
    bool deterministic = false;
    std::string out = "data.csv";
    TruthOpts truth;
  } dg;
  dg.truth.p = dg.p;
  datagen->add_option("--model", dg.model, "reg-fixed | reg-random | classify | density")
      ->capture_default_str();
  datagen->add_option("--n", dg.n)->capture_default_str();
  datagen->add_option("--p", dg.p)->capture_default_str();
  datagen->add_option("--sigma0", dg.sigma0, "noise standard deviation")
      ->capture_default_str();
  datagen->add_option("--grid", dg.grid, "density sampling grid per axis")
      ->capture_default_str();
  datagen->add_option("--seed", dg.seed)->capture_default_str();
  datagen->add_flag("--deterministic", dg.deterministic, "suppress CSV timestamp");
  datagen->add_option("--out", dg.out)->capture_default_str();
  add_truth_options(datagen, dg.truth);
  datagen->callback([&] {
    dg.truth.p = dg.p;
    aa::RealFn f0 = make_truth(dg.truth);
    aa::Rng rng(dg.seed);
    aa::ModelKind kind = parse_model(dg.model);
    aa::Dataset data;
    if (kind == aa::ModelKind::classify)
      data = aa::generate_classification(f0, dg.n, dg.p, rng);
    else if (kind == aa::ModelKind::density)
      data = aa::generate_density(f0, dg.n, dg.p, dg.grid, rng);
    else
      data = aa::generate_regression(f0, dg.n, dg.p, dg.sigma0, rng);
    bool with_y = kind != aa::ModelKind::density;
    aa::CsvWriter csv(dg.out, "dataset v1", xy_columns(dg.p, with_y),
                      dg.deterministic);
    for (long i = 0; i < data.n(); ++i) {
      aa::Vec row = data.X[i];
      if (with_y) row.push_back(data.y[i]);
      csv.row(row);
    }
    std::printf("wrote %ld rows to %s\n", data.n(), dg.out.c_str());
  });

  // ---- simstudy -----------------------------------------------------------
  auto* sim = app.add_subcommand("simstudy", "replicated prediction-error study");
  aa::ExperimentConfig sc;
  sc.mcmc.iterations = 1200;
  sc.mcmc.burnin = 600;
  sc.out_path = "simstudy.csv";
  sim->add_option("--n", sc.n)->capture_default_str();
  sim->add_option("--p", sc.p)->capture_default_str();
  sim->add_option("--sigma0", sc.sigma0)->capture_default_str();
  sim->add_option("--replicates", sc.replicates)->capture_default_str();
  sim->add_option("--oos", sc.oos, "held-out points per replicate")
      ->capture_default_str();
  sim->add_option("--trees", sc.prior.T)->capture_default_str();
  sim->add_option("--iterations", sc.mcmc.iterations)->capture_default_str();
  sim->add_option("--burnin", sc.mcmc.burnin)->capture_default_str();
  sim->add_option("--seed", sc.seed)->capture_default_str();
  sim->add_flag("--deterministic", sc.deterministic);
  sim->add_option("--out", sc.out_path)->capture_default_str();
  sim->callback([&] {
    auto summary = aa::run_simstudy(sc, aa::sim_function);
    for (std::size_t a = 0; a < summary.arms.size(); ++a)
      std::printf("%-6s mean rmspe %.6f\n", summary.arms[a].c_str(),
                  summary.mean_rmspe[a]);
    std::printf("csv: %s\n", sc.out_path.c_str());
  });

  // ---- rate ---------------------------------------------------------------
  auto* rate = app.add_subcommand("rate", "approximation decay and rate formulas");
  struct {
    std::vector<double> eps, gamma;
    TruthOpts truth;
    int m = 512;
    int lmin = 6, lmax = 14;
    bool deterministic = false;
    std::string out;
  } rc;
  rc.truth.name = "power";
  rc.truth.coef = {1.0, 1.0};
  rc.truth.expo = {0.25, 0.5};
  rate->add_option("--eps", rc.eps, "print rate_eps(n,p,d,lambda,R,abar)")
      ->delimiter(',')
      ->expected(0, 6);
  rate->add_option("--gamma", rc.gamma, "print rate_gamma(n,p,d,lambda,abar)")
      ->delimiter(',')
      ->expected(0, 5);
  rate->add_option("--m", rc.m, "grid points per axis")->capture_default_str();
  rate->add_option("--lmin", rc.lmin)->capture_default_str();
  rate->add_option("--lmax", rc.lmax)->capture_default_str();
  rate->add_flag("--deterministic", rc.deterministic);
  rate->add_option("--out", rc.out, "decay CSV path");
  add_truth_options(rate, rc.truth);
  rate->callback([&] {
    if (!rc.eps.empty() || !rc.gamma.empty()) {
      if (!rc.eps.empty()) {
        if (rc.eps.size() != 6)
          throw CLI::ValidationError("--eps", "need n,p,d,lambda,R,abar");
        std::printf("%.10g\n",
                    aa::rate_eps(static_cast<long>(rc.eps[0]),
                                 static_cast<int>(rc.eps[1]),
                                 static_cast<int>(rc.eps[2]), rc.eps[3],
                                 static_cast<int>(rc.eps[4]), rc.eps[5]));
      }
      if (!rc.gamma.empty()) {
        if (rc.gamma.size() != 5)
          throw CLI::ValidationError("--gamma", "need n,p,d,lambda,abar");
        std::printf("%.10g\n",
                    aa::rate_gamma(static_cast<long>(rc.gamma[0]),
                                   static_cast<int>(rc.gamma[1]),
                                   static_cast<int>(rc.gamma[2]), rc.gamma[3],
                                   rc.gamma[4]));
      }
      return;
    }
    int d = static_cast<int>(rc.truth.expo.size());
    rc.truth.p = d;
    std::vector<int> S0(d);
    for (int j = 0; j < d; ++j) S0[j] = j;
    aa::PiecewiseAnisoSpec spec = aa::PiecewiseAnisoSpec::power(
        d, S0, rc.truth.coef, rc.truth.expo, rc.truth.lambda);
    aa::SplitNet net = aa::SplitNet::regular_grid(d, rc.m);
    aa::RealFn f0 = [&spec](const aa::Vec& x) { return spec.f0(x); };
    aa::Vec ls, lnsup;
    std::unique_ptr<aa::CsvWriter> csv;
    if (!rc.out.empty())
      csv = std::make_unique<aa::CsvWriter>(
          rc.out, "ratedecay v1",
          std::vector<std::string>{"L", "sup_err", "l2_err", "bound"},
          rc.deterministic);
    for (int L = rc.lmin; L <= rc.lmax; ++L) {
      aa::Approximator ap = aa::build_approximator_L0(spec, net, L);
      double sup = aa::measure_sup(f0, ap.fn(), d).value;
      double l2 = aa::measure_lv(f0, ap.fn(), d, 2.0).value;
      double bound = 12.0 * rc.truth.lambda * d *
                     std::pow(2.0, -spec.abar() * L / d);
      std::printf("L=%2d  sup %.6f  l2 %.6f  bound %.6f\n", L, sup, l2, bound);
      if (csv) csv->row(std::vector<double>{double(L), sup, l2, bound});
      ls.push_back(L);
      lnsup.push_back(std::log(sup));
    }
    std::printf("slope of ln(sup) vs L: %.5f (reference %.5f)\n",
                ols_slope(ls, lnsup), -spec.abar() / d * std::log(2.0));
  });

  // ---- contraction ----------------------------------------------------------
  auto* con = app.add_subcommand("contraction", "posterior error decay in n");
  aa::ExperimentConfig cc;
  cc.mcmc.iterations = 1500;
  cc.mcmc.burnin = 750;
  cc.out_path = "contraction.csv";
  std::vector<long> n_list = {250, 500, 1000, 2000};
  con->add_option("--n-list", n_list, "sample-size ladder")->delimiter(',');
  con->add_option("--p", cc.p)->capture_default_str();
  con->add_option("--sigma0", cc.sigma0)->capture_default_str();
  con->add_option("--trees", cc.prior.T)->capture_default_str();
  con->add_option("--iterations", cc.mcmc.iterations)->capture_default_str();
  con->add_option("--burnin", cc.mcmc.burnin)->capture_default_str();
  con->add_option("--seed", cc.seed)->capture_default_str();
  con->add_flag("--deterministic", cc.deterministic);
  con->add_option("--out", cc.out_path)->capture_default_str();
  con->callback([&] {
    auto summary = aa::run_contraction_study(cc, aa::sim_function, n_list);
    for (const auto& row : summary.rows)
      std::printf("n=%-5ld emp_l2 %.6f  sigma2 %.6f (gap %.6f)  eps_n %.6f\n",
                  row.n, row.emp_l2, row.sigma2_mean, row.sigma2_gap, row.eps_n);
    std::printf("log-log slope: %.4f\n", summary.slope);
  });

  // ---- priorsim --------------------------------------------------------------
  auto* ps = app.add_subcommand("priorsim", "prior draws and mass diagnostics");
  struct {
    int p = 2;
    int m = 16;
    long draws = 2000;
    std::uint64_t seed = 1;
    std::vector<double> lemma;
    long trials = 200000;
    bool concentration = false;
    long n = 1000;
    std::string out;
    bool deterministic = false;
    aa::PriorConfig prior;
  } pp;
  pp.prior.T = 1;
  ps->add_option("--p", pp.p)->capture_default_str();
  ps->add_option("--m", pp.m, "regular grid per axis")->capture_default_str();
  ps->add_option("--draws", pp.draws)->capture_default_str();
  ps->add_option("--seed", pp.seed)->capture_default_str();
  ps->add_option("--nu", pp.prior.nu)->capture_default_str();
  ps->add_option("--zeta", pp.prior.zeta)->capture_default_str();
  ps->add_option("--xi", pp.prior.xi)->capture_default_str();
  ps->add_option("--trees", pp.prior.T)->capture_default_str();
  ps->add_option("--lemma", pp.lemma, "p,s,eps: simplex concentration check")
      ->delimiter(',')
      ->expected(0, 3);
  ps->add_option("--trials", pp.trials)->capture_default_str();
  ps->add_flag("--concentration", pp.concentration,
               "prior mass on the approximating partition");
  ps->add_option("--n", pp.n, "sample size for the concentration yardstick")
      ->capture_default_str();
  ps->add_option("--out", pp.out, "stat,value CSV path");
  ps->add_flag("--deterministic", pp.deterministic);
  ps->callback([&] {
    std::vector<std::pair<std::string, double>> stats;
    auto flush_stats = [&] {
      if (pp.out.empty()) return;
      aa::CsvWriter csv(pp.out, "priorsim v1", {"stat", "value"}, pp.deterministic);
      for (const auto& [k, v] : stats)
        csv.row(std::vector<std::string>{k, aa::CsvWriter::num(v)});
    };
    if (!pp.lemma.empty()) {
      if (pp.lemma.size() != 3)
        throw CLI::ValidationError("--lemma", "need p,s,eps");
      aa::Rng rng(pp.seed);
      auto rep = aa::check_dirichlet_lemma(static_cast<int>(pp.lemma[0]),
                                           static_cast<int>(pp.lemma[1]),
                                           pp.lemma[2], pp.prior, pp.trials, rng);
      std::printf("P1 %.4g (se %.2g)%s  implied c1 %.4f\n", rep.p1, rep.p1_se,
                  rep.p1_zero_hits ? " [zero hits]" : "", rep.c1);
      std::printf("P2 %.4g (se %.2g)%s  implied c2 %.4f\n", rep.p2, rep.p2_se,
                  rep.p2_zero_hits ? " [zero hits]" : "", rep.c2);
      stats = {{"p1", rep.p1},           {"p1_se", rep.p1_se},
               {"c1", rep.c1},           {"p1_zero_hits", double(rep.p1_zero_hits)},
               {"p2", rep.p2},           {"p2_se", rep.p2_se},
               {"c2", rep.c2},           {"p2_zero_hits", double(rep.p2_zero_hits)},
               {"trials", double(rep.trials)}};
      flush_stats();
      return;
    }
    aa::SplitNet net = pp.p <= 3 && std::pow(double(pp.m), pp.p) < 5e7
                           ? aa::SplitNet::regular_grid(pp.p, pp.m)
                           : make_net("grid", pp.m, {}, pp.p);
    if (pp.concentration) {
      aa::PiecewiseAnisoSpec spec = aa::PiecewiseAnisoSpec::orthants_sim(pp.p, 1.0);
      aa::Approximator ap = aa::build_approximator(spec, net, pp.n);
      aa::Vec eta_star = aa::eta_uniform_on(spec.S0(), pp.p);
      auto rep = aa::check_prior_concentration(ap.tree, pp.n, pp.p, spec.d(),
                                               pp.prior, eta_star, net, 20000,
                                               pp.seed);
      std::printf("leaves %zu  single-tree log prior %.3f  ensemble %.3f\n",
                  rep.leaves, rep.tree_log_prior_single, rep.ensemble_log_prior);
      std::printf("bound at C=1 %.3f  implied C %.3f\n", rep.bound_at_C1,
                  rep.implied_C);
      std::printf("eta-marginal log prior %.3f (se %.3f)\n", rep.mc_marginal_log,
                  rep.mc_marginal_se_log);
      stats = {{"leaves", double(rep.leaves)},
               {"tree_log_prior_single", rep.tree_log_prior_single},
               {"ensemble_log_prior", rep.ensemble_log_prior},
               {"bound_at_C1", rep.bound_at_C1},
               {"implied_C", rep.implied_C},
               {"mc_marginal_log", rep.mc_marginal_log},
               {"mc_marginal_se_log", rep.mc_marginal_se_log}};
      flush_stats();
      return;
    }
    aa::Rng rng(pp.seed);
    std::vector<long> hist(9, 0);
    double mean_leaves = 0, p_single = 0;
    double mean_active = 0, mean_max = 0;
    for (long i = 0; i < pp.draws; ++i) {
      aa::Vec eta = aa::sample_eta(pp.p, pp.prior, rng);
      aa::TreePartition tree = aa::sample_tree(eta, pp.prior, net, rng);
      std::size_t k = tree.leaf_count();
      mean_leaves += double(k) / pp.draws;
      p_single += (k == 1 ? 1.0 : 0.0) / pp.draws;
      hist[std::min(k, hist.size() - 1)] += 1;
      int active = 0;
      double mx = 0;
      for (double e : eta) {
        if (e > 0.01) ++active;
        mx = std::max(mx, e);
      }
      mean_active += double(active) / pp.draws;
      mean_max += mx / pp.draws;
    }
    std::printf("mean leaves %.3f  P(single leaf) %.4f (1-nu = %.4f)\n",
                mean_leaves, p_single, 1.0 - pp.prior.nu);
    for (std::size_t k = 1; k < hist.size(); ++k)
      std::printf("  leaves %s%zu: %ld\n", k + 1 == hist.size() ? ">=" : "", k,
                  hist[k]);
    std::printf("eta: mean #coords > 0.01 = %.3f  mean max = %.4f\n", mean_active,
                mean_max);
    stats = {{"mean_leaves", mean_leaves},
             {"p_single_leaf", p_single},
             {"one_minus_nu", 1.0 - pp.prior.nu},
             {"eta_active_mean", mean_active},
             {"eta_max_mean", mean_max}};
    for (std::size_t k = 1; k < hist.size(); ++k)
      stats.push_back({"leaves_" + std::to_string(k), double(hist[k])});
    flush_stats();
  });

  // ---- kernelcheck ------------------------------------------------------------
  auto* kc = app.add_subcommand("kernelcheck", "packing-kernel identities");
  struct {
    std::vector<int> dims = {1, 2, 3};
    long pairs = 100000;
    std::uint64_t seed = 1;
  } kk;
  kc->add_option("--dims", kk.dims)->delimiter(',');
  kc->add_option("--pairs", kk.pairs)->capture_default_str();
  kc->add_option("--seed", kk.seed)->capture_default_str();
  kc->callback([&] {
    for (int d : kk.dims) {
      int res = d == 1 ? 4096 : d == 2 ? 512 : 128;
      double sum = 0, sq = 0;
      std::vector<int> idx(d, 0);
      aa::Vec x(d);
      long cells = 1;
      for (int j = 0; j < d; ++j) cells *= res;
      for (long c = 0; c < cells; ++c) {
        for (int j = 0; j < d; ++j) x[j] = -1.0 + 2.0 * (idx[j] + 0.5) / res;
        double v = aa::packing_kernel(x);
        sum += v;
        sq += v * v;
        int j = 0;
        while (j < d && ++idx[j] == res) idx[j++] = 0;
      }
      double vol = std::pow(2.0, d);
      double target = vol / (2.0 * (d + 1) * (d + 2));
      aa::Rng rng(kk.seed);
      double worst = 0;
      aa::Vec a(d), b(d);
      for (long i = 0; i < kk.pairs; ++i) {
        double dist = 0;
        for (int j = 0; j < d; ++j) {
          a[j] = rng.uniform(-1.0, 1.0);
          b[j] = rng.uniform(-1.0, 1.0);
          dist += std::abs(a[j] - b[j]);
        }
        if (dist > 0)
          worst = std::max(
              worst, std::abs(aa::packing_kernel(a) - aa::packing_kernel(b)) / dist);
      }
      std::printf(
          "d=%d  integral %.2e  sq-integral %.6f (target %.6f)  lipschitz %.4f\n",
          d, sum * vol / cells, sq * vol / cells, target, worst);
    }
  });

  // ---- akd ----------------------------------------------------------------------
  auto* ak = app.add_subcommand("akd", "anisotropic k-d tree construction");
  struct {
    std::vector<double> alpha = {0.25, 0.5};
    int L = 6;
    int m = 512;
    bool deterministic = false;
    std::string out;
  } av;
  ak->add_option("--alpha", av.alpha, "smoothness per coordinate")->delimiter(',');
  ak->add_option("--L", av.L)->capture_default_str();
  ak->add_option("--m", av.m, "grid points per axis")->capture_default_str();
  ak->add_flag("--deterministic", av.deterministic);
  ak->add_option("--out", av.out, "leaf-box CSV path");
  ak->callback([&] {
    int d = static_cast<int>(av.alpha.size());
    std::vector<std::vector<double>> axes(d);
    for (int j = 0; j < d; ++j)
      for (int i = 1; i <= av.m; ++i) axes[j].push_back((i - 0.5) / av.m);
    aa::SplitNet net = aa::SplitNet::from_axis_values(std::move(axes));
    std::vector<int> S(d);
    for (int j = 0; j < d; ++j) S[j] = j;
    aa::AkdResult res = aa::akd(aa::Box::unit(d), net, av.alpha, av.L, S);
    std::printf("achieved L = %d of %d\n", res.achieved_L, av.L);
    std::printf("counters:");
    for (int j = 0; j < d; ++j) std::printf(" l%d=%d", j + 1, res.counters[j]);
    std::printf("\nsplit coordinates:");
    for (int c : res.coord_seq) std::printf(" %d", S[c] + 1);
    std::printf("\nleaves: %zu\n", res.partition.leaf_count());
    if (!av.out.empty()) {
      std::vector<std::string> cols{"leaf"};
      for (int j = 1; j <= d; ++j) {
        cols.push_back("lo" + std::to_string(j));
        cols.push_back("hi" + std::to_string(j));
      }
      aa::CsvWriter csv(av.out, "akdleaves v1", cols, av.deterministic);
      int k = 0;
      for (const aa::Box& box : res.partition.leaves().boxes) {
        std::vector<double> row{double(++k)};
        for (int j = 0; j < d; ++j) {
          row.push_back(box.lo[j]);
          row.push_back(box.hi[j]);
        }
        csv.row(row);
      }
    }
  });

  // ---- fit -------------------------------------------------------------------
  auto* ft = app.add_subcommand("fit", "run the MCMC sampler on a dataset");
  struct {
    std::string data;
    std::string eval;
    std::string model = "reg-fixed";
    std::string net = "design";
    int m = 64;
    double height_bound = 0, sigma2_bound = 0;
    int keep = 0;
    std::string trees_out;
    bool deterministic = false;
    std::string out = "predictions.csv";
    aa::PriorConfig prior;
    aa::McmcConfig mcmc;
  } fo;
  ft->add_option("--data", fo.data, "training CSV (header x1..xp[,y])")->required();
  ft->add_option("--eval", fo.eval, "evaluation-point CSV (defaults to training)");
  ft->add_option("--model", fo.model, "reg-fixed | reg-random | density | classify")
      ->capture_default_str();
  ft->add_option("--net", fo.net, "design | grid")->capture_default_str();
  ft->add_option("--m", fo.m, "grid net: points per axis")->capture_default_str();
  ft->add_option("--trees", fo.prior.T)->capture_default_str();
  ft->add_option("--nu", fo.prior.nu)->capture_default_str();
  ft->add_option("--zeta", fo.prior.zeta)->capture_default_str();
  ft->add_option("--xi", fo.prior.xi)->capture_default_str();
  ft->add_option("--iterations", fo.mcmc.iterations)->capture_default_str();
  ft->add_option("--burnin", fo.mcmc.burnin)->capture_default_str();
  ft->add_option("--thin", fo.mcmc.thin)->capture_default_str();
  ft->add_option("--seed", fo.mcmc.seed)->capture_default_str();
  ft->add_flag("--uniform-eta", fo.mcmc.uniform_eta,
               "hold the coordinate weights at 1/p");
  ft->add_option("--height-bound", fo.height_bound)->capture_default_str();
  ft->add_option("--sigma2-bound", fo.sigma2_bound)->capture_default_str();
  ft->add_option("--keep", fo.keep, "retain this many full ensembles")
      ->capture_default_str();
  ft->add_option("--trees-out", fo.trees_out, "JSON path for retained ensembles");
  ft->add_flag("--deterministic", fo.deterministic);
  ft->add_option("--out", fo.out)->capture_default_str();
  ft->callback([&] {
    aa::Dataset data = load_dataset(fo.data);
    aa::ModelSpec model;
    model.kind = parse_model(fo.model);
    model.height_bound = fo.height_bound;
    model.sigma2_bound = fo.sigma2_bound;
    if (model.kind == aa::ModelKind::reg_random) {
      if (model.height_bound <= 0) model.height_bound = 5.0;
      if (model.sigma2_bound <= 0) model.sigma2_bound = 100.0;
    }
    if (model.kind == aa::ModelKind::density) data.y.clear();
    aa::SplitNet net = make_net(fo.net, fo.m, data.X, data.p());
    std::vector<aa::Vec> eval_points;
    if (!fo.eval.empty()) eval_points = load_dataset(fo.eval).X;
    fo.mcmc.keep_ensembles = fo.keep;
    aa::FitResult res =
        aa::fit(data, model, net, fo.prior, fo.mcmc, eval_points);
    aa::Prediction pred = aa::predict(res.eval_draws);
    aa::CsvWriter csv(fo.out, "predictions v1",
                      {"point", "mean", "lo90", "hi90"}, fo.deterministic);
    for (std::size_t i = 0; i < pred.mean.size(); ++i)
      csv.row(std::vector<double>{double(i + 1), pred.mean[i], pred.lo90[i],
                                  pred.hi90[i]});
    std::printf("kept %ld draws; mean leaves/ensemble %.1f\n", res.kept_draws,
                aa::mean_of(aa::Vec(res.leaf_totals.begin(), res.leaf_totals.end())));
    if (!res.sigma2_draws.empty())
      std::printf("sigma2 posterior mean %.6f\n", aa::mean_of(res.sigma2_draws));
    const aa::MoveStats& mv = res.moves;
    std::printf("acceptance: grow %ld/%ld prune %ld/%ld change %ld/%ld",
                mv.grow_acc, mv.grow_try, mv.prune_acc, mv.prune_try,
                mv.change_acc, mv.change_try);
    if (mv.height_try > 0)
      std::printf(" height %ld/%ld (step %.3f)", mv.height_acc, mv.height_try,
                  mv.height_step);
    std::printf("\n");
    if (!fo.trees_out.empty() && !res.kept.empty()) {
      nlohmann::json arr = nlohmann::json::array();
      for (const aa::Ensemble& e : res.kept) {
        nlohmann::json je = nlohmann::json::array();
        for (int t = 0; t < e.tree_count(); ++t)
          je.push_back({{"tree", nlohmann::json::parse(e.trees[t].to_json())},
                        {"heights", e.heights[t]}});
        arr.push_back(std::move(je));
      }
      std::ofstream out(fo.trees_out);
      out << arr.dump(1) << "\n";
      std::printf("ensembles: %s\n", fo.trees_out.c_str());
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
