#include "arborart/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "arborart/approx.hpp"
#include "arborart/splitnet.hpp"

namespace arborart {

void ExperimentConfig::validate() const {
  if (sigma0 <= 0) throw std::invalid_argument("experiment: sigma0 must be positive");
  if (replicates < 1) throw std::invalid_argument("experiment: need at least one replicate");
  if (n < 1 || p < 1) throw std::invalid_argument("experiment: bad dimensions");
  if (oos < 1) throw std::invalid_argument("experiment: need a held-out sample");
}

Dataset generate_regression(const RealFn& truth, long n, int p, double sigma0,
                            Rng& rng) {
  if (sigma0 < 0) throw std::invalid_argument("generate: sigma0 must be nonnegative");
  Dataset out;
  out.X.reserve(n);
  out.y.reserve(n);
  for (long i = 0; i < n; ++i) {
    Vec x(p);
    for (int j = 0; j < p; ++j) x[j] = rng.uniform();
    double f = truth(x);
    out.y.push_back(sigma0 > 0 ? f + sigma0 * rng.normal() : f);
    out.X.push_back(std::move(x));
  }
  return out;
}

Dataset generate_classification(const RealFn& truth, long n, int p, Rng& rng) {
  Dataset out;
  out.X.reserve(n);
  out.y.reserve(n);
  for (long i = 0; i < n; ++i) {
    Vec x(p);
    for (int j = 0; j < p; ++j) x[j] = rng.uniform();
    double h = 1.0 / (1.0 + std::exp(-truth(x)));
    out.y.push_back(rng.uniform() < h ? 1.0 : 0.0);
    out.X.push_back(std::move(x));
  }
  return out;
}

Dataset generate_density(const RealFn& truth, long n, int p, int grid, Rng& rng) {
  if (p > 3) throw std::invalid_argument("generate: grid inversion needs p <= 3");
  if (grid < 2) throw std::invalid_argument("generate: grid too coarse");
  long cells = 1;
  for (int j = 0; j < p; ++j) cells *= grid;
  std::vector<double> cum(cells);
  std::vector<int> idx(p, 0);
  Vec x(p);
  double acc = 0;
  for (long c = 0; c < cells; ++c) {
    for (int j = 0; j < p; ++j) x[j] = (idx[j] + 0.5) / grid;
    acc += std::exp(truth(x));  // equal cell volumes: weights need no scaling
    cum[c] = acc;
    int j = 0;
    while (j < p && ++idx[j] == grid) idx[j++] = 0;
  }
  Dataset out;
  out.X.reserve(n);
  for (long i = 0; i < n; ++i) {
    double u = rng.uniform() * acc;
    long c = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
    if (c >= cells) c = cells - 1;
    Vec pt(p);
    long rem = c;
    for (int j = 0; j < p; ++j) {
      long k = rem % grid;
      rem /= grid;
      pt[j] = (k + rng.uniform()) / grid;
    }
    out.X.push_back(std::move(pt));
  }
  return out;
}

namespace {

double rmspe_of(const Vec& pred, const Vec& truth) {
  double s = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double r = pred[i] - truth[i];
    s += r * r;
  }
  return std::sqrt(s / pred.size());
}

}  // namespace

SimstudySummary run_simstudy(const ExperimentConfig& cfg, const RealFn& truth) {
  cfg.validate();
  SimstudySummary out;
  out.arms = {"bart", "tree", "const"};
  out.rmspe.assign(cfg.replicates, Vec(out.arms.size(), 0.0));

  parallel_for(cfg.replicates, [&](int r) {
    Rng rng(mix_seed(cfg.seed, 17 + r));
    Dataset train = generate_regression(truth, cfg.n, cfg.p, cfg.sigma0, rng);
    std::vector<Vec> xtest;
    Vec ytest;
    for (int i = 0; i < cfg.oos; ++i) {
      Vec x(cfg.p);
      for (int j = 0; j < cfg.p; ++j) x[j] = rng.uniform();
      ytest.push_back(truth(x) + cfg.sigma0 * rng.normal());
      xtest.push_back(std::move(x));
    }
    SplitNet net = SplitNet::from_points(train.X);
    ModelSpec model = cfg.model;
    model.kind = ModelKind::reg_fixed;

    McmcConfig mc = cfg.mcmc;
    mc.uniform_eta = true;
    mc.seed = mix_seed(cfg.seed, 1000 + r);
    FitResult ens = fit(train, model, net, cfg.prior, mc, xtest);
    out.rmspe[r][0] = rmspe_of(predict(ens.eval_draws).mean, ytest);

    PriorConfig single = cfg.prior;
    single.T = 1;
    mc.seed = mix_seed(cfg.seed, 2000 + r);
    FitResult one = fit(train, model, net, single, mc, xtest);
    out.rmspe[r][1] = rmspe_of(predict(one.eval_draws).mean, ytest);

    double mu = mean_of(train.y);
    Vec flat(ytest.size(), mu);
    out.rmspe[r][2] = rmspe_of(flat, ytest);
  });

  if (!cfg.out_path.empty()) {
    CsvWriter csv(cfg.out_path, "simstudy v1", {"replicate", "arm", "rmspe"},
                  cfg.deterministic);
    for (int r = 0; r < cfg.replicates; ++r)
      for (std::size_t a = 0; a < out.arms.size(); ++a)
        csv.row(std::vector<std::string>{std::to_string(r + 1), out.arms[a],
                                         CsvWriter::num(out.rmspe[r][a])});
  }

  out.mean_rmspe.assign(out.arms.size(), 0.0);
  for (int r = 0; r < cfg.replicates; ++r)
    for (std::size_t a = 0; a < out.arms.size(); ++a)
      out.mean_rmspe[a] += out.rmspe[r][a] / cfg.replicates;
  return out;
}

ContractionSummary run_contraction_study(const ExperimentConfig& cfg,
                                         const RealFn& truth,
                                         const std::vector<long>& n_list) {
  cfg.validate();
  if (n_list.size() < 2) throw std::invalid_argument("contraction: need >= 2 sizes");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1])
      throw std::invalid_argument("contraction: sizes must increase");

  int d = cfg.rate_d > 0 ? cfg.rate_d : cfg.p;
  int R = cfg.rate_R > 0 ? cfg.rate_R : (1 << cfg.p);

  ContractionSummary out;
  out.rows.assign(n_list.size(), ContractionRow{});
  parallel_for(static_cast<int>(n_list.size()), [&](int idx) {
    long n = n_list[idx];
    Rng rng(mix_seed(cfg.seed, 500 + idx));
    Dataset train = generate_regression(truth, n, cfg.p, cfg.sigma0, rng);
    SplitNet net = SplitNet::from_points(train.X);
    ModelSpec model = cfg.model;
    model.kind = ModelKind::reg_fixed;
    McmcConfig mc = cfg.mcmc;
    mc.uniform_eta = true;
    mc.seed = mix_seed(cfg.seed, 700 + idx);
    FitResult res = fit(train, model, net, cfg.prior, mc, train.X);
    Vec pred = predict(res.eval_draws).mean;
    Vec f0(train.X.size());
    for (std::size_t i = 0; i < train.X.size(); ++i) f0[i] = truth(train.X[i]);
    ContractionRow row;
    row.n = n;
    row.emp_l2 = rmspe_of(pred, f0);
    row.sigma2_mean = mean_of(res.sigma2_draws);
    row.sigma2_gap = std::abs(row.sigma2_mean - cfg.sigma0 * cfg.sigma0);
    row.eps_n = rate_eps(n, cfg.p, d, cfg.rate_lambda, R, cfg.rate_abar);
    out.rows[idx] = row;
  });

  Vec xs, errs;
  for (const auto& row : out.rows) {
    xs.push_back(static_cast<double>(row.n));
    errs.push_back(row.emp_l2);
  }
  out.slope = rate_slope(xs, errs);

  if (!cfg.out_path.empty()) {
    CsvWriter csv(cfg.out_path, "contraction v1",
                  {"n", "emp_l2", "sigma2_mean", "sigma2_gap", "eps_n"},
                  cfg.deterministic);
    for (const auto& row : out.rows)
      csv.row(std::vector<double>{static_cast<double>(row.n), row.emp_l2,
                                  row.sigma2_mean, row.sigma2_gap, row.eps_n});
  }
  return out;
}

}  // namespace arborart
