#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "arborart/approx.hpp"
#include "arborart/experiments.hpp"
#include "doctest.h"

using namespace arborart;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int data_rows(const std::string& text) {
  int rows = 0;
  for (const std::string& line : split_string(text, '\n'))
    if (!line.empty() && line[0] != '#') ++rows;
  return rows - 1;  // drop the column header
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("regression generator") {
  Rng rng(41);
  auto truth = [](const Vec& x) { return sim_function(x); };
  Dataset clean = generate_regression(truth, 50, 2, 0.0, rng);
  REQUIRE(clean.n() == 50);
  REQUIRE(clean.p() == 2);
  for (long i = 0; i < 50; ++i) {
    for (double v : clean.X[i]) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(clean.y[i] == sim_function(clean.X[i]));  // noiseless path is exact
  }

  long n = 100000;
  Dataset noisy = generate_regression([](const Vec&) { return 1.25; }, n, 1, 0.25, rng);
  double m = mean_of(noisy.y), v = sd_of(noisy.y);
  CHECK(std::abs(m - 1.25) <= 4.0 * 0.25 / std::sqrt(double(n)));
  double var = v * v;
  CHECK(std::abs(var - 0.0625) <= 4.0 * 0.0625 * std::sqrt(2.0 / (n - 1.0)));

  CHECK_THROWS_AS(generate_regression(truth, 10, 2, -1.0, rng), std::invalid_argument);
}

TEST_CASE("classification generator hits the logistic mean") {
  Rng rng(43);
  long n = 100000;
  Dataset d = generate_classification([](const Vec&) { return 0.0; }, n, 2, rng);
  for (double y : d.y) CHECK((y == 0.0 || y == 1.0));
  double phat = mean_of(d.y);
  CHECK(std::abs(phat - 0.5) <= 4.0 * std::sqrt(0.25 / n));
}

TEST_CASE("density generator inverts a two-level density") {
  Rng rng(47);
  auto lf = [](const Vec& x) { return x[0] < 0.5 ? std::log(2.0) : 0.0; };
  long n = 30000;
  Dataset d = generate_density(lf, n, 1, 64, rng);
  CHECK(d.y.empty());
  long left = 0;
  for (const Vec& x : d.X) {
    CHECK(x[0] >= 0.0);
    CHECK(x[0] <= 1.0);
    if (x[0] < 0.5) ++left;
  }
  double p = 2.0 / 3.0;
  CHECK(std::abs(double(left) / n - p) <= 4.0 * std::sqrt(p * (1 - p) / n));
  CHECK_THROWS_AS(generate_density(lf, 10, 4, 8, rng), std::invalid_argument);
  CHECK_THROWS_AS(generate_density(lf, 10, 1, 1, rng), std::invalid_argument);
}

TEST_CASE("prediction study produces the full table") {
  ExperimentConfig cfg;
  cfg.n = 60;
  cfg.p = 1;
  cfg.sigma0 = 0.2;
  cfg.replicates = 2;
  cfg.oos = 40;
  cfg.seed = 77;
  cfg.deterministic = true;
  cfg.prior.T = 5;
  cfg.mcmc.iterations = 120;
  cfg.mcmc.burnin = 60;
  cfg.out_path = "/tmp/arborart_simstudy_a.csv";
  auto truth = [](const Vec& x) { return sim_function(x); };

  SimstudySummary s = run_simstudy(cfg, truth);
  REQUIRE(s.arms == std::vector<std::string>{"bart", "tree", "const"});
  REQUIRE(s.rmspe.size() == 2);
  for (const Vec& row : s.rmspe)
    for (double v : row) CHECK(v > 0.0);
  // held-out responses carry irreducible noise
  CHECK(s.mean_rmspe[2] >= cfg.sigma0 * 0.7);

  std::string a = slurp(cfg.out_path);
  CHECK(data_rows(a) == 6);  // replicates x arms

  cfg.out_path = "/tmp/arborart_simstudy_b.csv";
  run_simstudy(cfg, truth);
  CHECK(slurp(cfg.out_path) == a);  // same seed, same bytes

  std::remove("/tmp/arborart_simstudy_a.csv");
  std::remove("/tmp/arborart_simstudy_b.csv");
}

TEST_CASE("contraction ladder reports rates and errors") {
  ExperimentConfig cfg;
  cfg.p = 2;
  cfg.sigma0 = 0.2;
  cfg.seed = 5;
  cfg.deterministic = true;
  cfg.prior.T = 5;
  cfg.mcmc.iterations = 150;
  cfg.mcmc.burnin = 75;
  cfg.out_path = "/tmp/arborart_contraction.csv";
  auto truth = [](const Vec& x) { return sim_function(x); };

  ContractionSummary c = run_contraction_study(cfg, truth, {50, 80, 120});
  REQUIRE(c.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const ContractionRow& row = c.rows[i];
    CHECK(row.emp_l2 > 0.0);
    CHECK(row.sigma2_mean > 0.0);
    CHECK(row.sigma2_gap == doctest::Approx(std::abs(row.sigma2_mean - 0.04)));
    CHECK(row.eps_n == rate_eps(row.n, 2, 2, 1.0, 4, 1.0));
  }
  CHECK(c.rows[0].n == 50);
  CHECK(c.rows[2].n == 120);
  CHECK(std::isfinite(c.slope));
  CHECK(data_rows(slurp(cfg.out_path)) == 3);
  std::remove("/tmp/arborart_contraction.csv");

  CHECK_THROWS_AS(run_contraction_study(cfg, truth, {100}), std::invalid_argument);
  CHECK_THROWS_AS(run_contraction_study(cfg, truth, {100, 100}), std::invalid_argument);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  cfg.validate();
  auto bad = [](auto&& mutate) {
    ExperimentConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  };
  bad([](ExperimentConfig& c) { c.sigma0 = 0.0; });
  bad([](ExperimentConfig& c) { c.replicates = 0; });
  bad([](ExperimentConfig& c) { c.n = 0; });
  bad([](ExperimentConfig& c) { c.oos = 0; });
}

}  // TEST_SUITE
