#include <cmath>
#include <functional>

#include "arborart/prior.hpp"
#include "doctest.h"

using namespace arborart;

namespace {

// Sum exp(tree_log_prior) over every tree the generative process can emit on
// `net` (up to the depth guard). The total must be exactly one.
struct TreeEnumeration {
  double total = 0;
  long count = 0;
};

TreeEnumeration sum_over_all_trees(const SplitNet& net, const PriorConfig& cfg,
                                   const Vec& eta) {
  TreeEnumeration out;
  using Pending = std::vector<std::pair<int, int>>;  // (node, depth)
  std::function<void(const TreePartition&, Pending)> rec =
      [&](const TreePartition& t, Pending pending) {
        if (pending.empty()) {
          out.total += std::exp(tree_log_prior(t, eta, cfg, net));
          ++out.count;
          return;
        }
        auto [node, depth] = pending.back();
        pending.pop_back();
        rec(t, pending);  // this node stays a leaf
        if (depth >= cfg.max_depth) return;
        Box box = t.box_of(node);
        for (int j = 0; j < net.dim(); ++j) {
          int b = net.candidate_count(box, j);
          for (int k = 1; k <= b; ++k) {
            TreePartition t2 = t;
            auto [l, r] = t2.split(node, j, net.candidate_at(box, j, k));
            Pending next = pending;
            next.push_back({l, depth + 1});
            next.push_back({r, depth + 1});
            rec(t2, std::move(next));
          }
        }
      };
  rec(TreePartition(Box::unit(net.dim())), {{0, 0}});
  return out;
}

}  // namespace

TEST_SUITE("priors") {

TEST_CASE("config validation") {
  PriorConfig ok;
  ok.validate();
  auto bad = [](auto mod) {
    PriorConfig c;
    mod(c);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  };
  bad([](PriorConfig& c) { c.T = 0; });
  bad([](PriorConfig& c) { c.nu = 0.5; });
  bad([](PriorConfig& c) { c.nu = 0.0; });
  bad([](PriorConfig& c) { c.xi = 1.0; });
  bad([](PriorConfig& c) { c.zeta = 0.0; });
  bad([](PriorConfig& c) { c.ig_shape = 0.0; });
  bad([](PriorConfig& c) { c.max_depth = -1; });
  CHECK(PriorConfig{}.height_var() == doctest::Approx(1.0 / 200));
}

TEST_CASE("sparse weights sum to one and concentrate") {
  PriorConfig cfg;
  Rng rng(21);
  Vec eta = sample_eta(4, cfg, rng);
  double sum = 0;
  for (double e : eta) {
    CHECK(e >= 0.0);
    sum += e;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  // with p = 100 and concentration 1/p^2 nearly all mass sits on a few coords
  double big = 0;
  int draws = 200;
  for (int t = 0; t < draws; ++t) {
    Vec e = sample_eta(100, cfg, rng);
    for (double v : e)
      if (v > 0.01) big += 1.0;
  }
  CHECK(big / draws < 5.0);
  CHECK_THROWS_AS(sample_eta(0, cfg, rng), std::invalid_argument);
}

TEST_CASE("uniform eta helper") {
  Vec eta = eta_uniform_on({0, 2}, 4);
  CHECK(eta == Vec{0.5, 0.0, 0.5, 0.0});
  CHECK_THROWS_AS(eta_uniform_on({}, 4), std::invalid_argument);
  CHECK_THROWS_AS(eta_uniform_on({4}, 4), std::invalid_argument);
}

TEST_CASE("tree density normalizes on a one-candidate line") {
  PriorConfig cfg;
  SplitNet net = SplitNet::from_axis_values({{0.5}});
  TreeEnumeration e = sum_over_all_trees(net, cfg, {1.0});
  CHECK(e.count == 2);  // leaf, or one root split
  CHECK(e.total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tree density normalizes on a one-candidate plane") {
  PriorConfig cfg;
  SplitNet net = SplitNet::from_axis_values({{0.5}, {0.5}});
  TreeEnumeration e = sum_over_all_trees(net, cfg, {0.3, 0.7});
  CHECK(e.count == 9);
  CHECK(e.total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("tree density normalizes against the depth guard") {
  PriorConfig cfg;
  cfg.max_depth = 3;
  SplitNet net = SplitNet::regular_grid(1, 3);
  TreeEnumeration e = sum_over_all_trees(net, cfg, {1.0});
  CHECK(e.count == 15);
  CHECK(e.total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("tree density frozen values") {
  PriorConfig cfg;  // nu = 0.25
  SplitNet net = SplitNet::regular_grid(1, 10);
  TreePartition rootonly(Box::unit(1));
  CHECK(tree_log_prior(rootonly, {1.0}, cfg, net) == doctest::Approx(std::log(0.75)));

  TreePartition split(Box::unit(1));
  split.split(0, 0, 0.45);  // the 5th of 10 candidates
  // nu * (1/10) for the split, (1 - nu^2) per live child
  double expect = std::log(0.25 * 0.1) + 2.0 * std::log(0.9375);
  CHECK(tree_log_prior(split, {1.0}, cfg, net) == doctest::Approx(expect));
  CHECK(expect == doctest::Approx(-3.8179565).epsilon(1e-5));

  TreePartition off(Box::unit(1));
  off.split(0, 0, 0.5);  // not a grid value
  CHECK_THROWS_AS(tree_log_prior(off, {1.0}, cfg, net), std::invalid_argument);
  CHECK_THROWS_AS(tree_log_prior(split, {0.5, 0.5}, cfg, net), std::invalid_argument);

  PriorConfig shallow;
  shallow.max_depth = 1;
  TreePartition deep(Box::unit(1));
  auto [dl, dr] = deep.split(0, 0, 0.45);
  (void)dr;
  deep.split(dl, 0, 0.25);
  CHECK_THROWS_AS(tree_log_prior(deep, {1.0}, shallow, net), std::invalid_argument);
}

TEST_CASE("draws agree with the density on headline events") {
  PriorConfig cfg;
  SplitNet net = SplitNet::regular_grid(2, 16);
  Vec eta{0.5, 0.5};
  Rng rng(31);
  long draws = 100000, single = 0;
  for (long t = 0; t < draws; ++t)
    if (sample_tree(eta, cfg, net, rng).leaf_count() == 1) ++single;
  double phat = double(single) / draws;
  double se = std::sqrt(0.75 * 0.25 / draws);
  CHECK(std::abs(phat - 0.75) <= 3.0 * se);  // P(no split at the root) = 1 - nu
}

TEST_CASE("heights are centered with variance 1/T") {
  PriorConfig cfg;  // T = 200
  Rng rng(41);
  std::vector<int> counts(200, 50);
  auto hs = sample_heights(counts, cfg, rng);
  REQUIRE(hs.size() == 200);
  REQUIRE(hs[0].size() == 50);
  double acc = 0, acc2 = 0;
  long n = 0;
  for (const auto& h : hs)
    for (double v : h) {
      acc += v;
      acc2 += v * v;
      ++n;
    }
  double mean = acc / n, sd = std::sqrt(acc2 / n - mean * mean);
  CHECK(std::abs(mean) <= 3.0 * 0.0707107 / std::sqrt(double(n)));
  CHECK(sd == doctest::Approx(0.0707107).epsilon(0.05));
  CHECK_THROWS_AS(sample_heights({0}, cfg, rng), std::invalid_argument);
}

TEST_CASE("ensemble concentration bookkeeping") {
  PriorConfig cfg;  // T = 200, nu = 0.25
  SplitNet net = SplitNet::regular_grid(2, 8);
  TreePartition rootonly(Box::unit(2));
  Vec eta = eta_uniform_on({0}, 2);
  ConcentrationReport rep =
      check_prior_concentration(rootonly, 1000, 2, 1, cfg, eta, net, 2000, 7);
  CHECK(rep.leaves == 1);
  CHECK(rep.tree_log_prior_single == doctest::Approx(std::log(0.75)));
  CHECK(rep.ensemble_log_prior == doctest::Approx(200.0 * std::log(0.75)));
  double yard = std::log(1000.0) + std::log(2.0);
  CHECK(rep.bound_at_C1 == doctest::Approx(-yard));
  CHECK(rep.implied_C == doctest::Approx(-200.0 * std::log(0.75) / yard));
}

TEST_CASE("marginal equals conditional when p = 1") {
  PriorConfig cfg;
  SplitNet net = SplitNet::regular_grid(1, 8);
  TreePartition tree(Box::unit(1));
  tree.split(0, 0, 0.4375);
  ConcentrationReport rep =
      check_prior_concentration(tree, 500, 1, 1, cfg, {1.0}, net, 500, 3);
  CHECK(rep.mc_marginal_log == doctest::Approx(rep.tree_log_prior_single).epsilon(1e-12));
  CHECK(rep.mc_marginal_se_log <= 1e-12);
}

TEST_CASE("marginal matches a closed form for one split in the plane") {
  PriorConfig cfg;
  SplitNet net = SplitNet::regular_grid(2, 8);
  TreePartition tree(Box::unit(2));
  tree.split(0, 0, 0.4375);
  Vec eta = eta_uniform_on({0, 1}, 2);
  ConcentrationReport rep =
      check_prior_concentration(tree, 500, 2, 2, cfg, eta, net, 60000, 17);
  // nu * E[eta_0] / 8 * (1 - nu^2)^2 with E[eta_0] = 1/2 under the symmetric prior
  double closed = std::log(0.25 * 0.5 / 8.0 * 0.9375 * 0.9375);
  CHECK(std::abs(rep.mc_marginal_log - closed) <= 4.0 * rep.mc_marginal_se_log + 1e-3);
}

TEST_CASE("simplex concentration estimators agree with naive sampling") {
  PriorConfig cfg;
  cfg.zeta = 3.0;
  cfg.xi = 1.5;  // concentration 3/3^{1.5} ~ 0.577: events stay visible
  long trials = 200000;
  Rng r1(71);
  DirichletLemmaReport rep = check_dirichlet_lemma(3, 2, 0.2, cfg, trials, r1);
  CHECK(!rep.p1_zero_hits);
  CHECK(!rep.p2_zero_hits);

  Rng r2(97);
  long h1 = 0, h2 = 0;
  for (long t = 0; t < trials; ++t) {
    Vec eta = sample_eta(3, cfg, r2);
    double l1 = std::abs(eta[0] - 0.5) + std::abs(eta[1] - 0.5) + eta[2];
    if (l1 <= 0.2) ++h1;
    double mn = std::min(eta[0], std::min(eta[1], eta[2]));
    if (mn >= 0.2) ++h2;  // top-2 sum <= 0.8
  }
  double n1 = double(h1) / trials, n2 = double(h2) / trials;
  double se1 = std::sqrt(n1 * (1 - n1) / trials), se2 = std::sqrt(n2 * (1 - n2) / trials);
  CHECK(std::abs(rep.p1 - n1) <= 4.0 * std::sqrt(rep.p1_se * rep.p1_se + se1 * se1));
  CHECK(std::abs(rep.p2 - n2) <= 4.0 * std::sqrt(rep.p2_se * rep.p2_se + se2 * se2));
  CHECK(rep.c1 >= 0.0);
  CHECK(rep.c2 >= 0.0);
}

TEST_CASE("simplex concentration edge cases") {
  PriorConfig cfg;
  Rng rng(5);
  DirichletLemmaReport rep = check_dirichlet_lemma(2, 2, 2.0, cfg, 20000, rng);
  CHECK(rep.p1 == doctest::Approx(1.0).epsilon(0.02));  // the ball covers the simplex
  CHECK(rep.p2 == 0.0);  // no set can miss two units of mass
  CHECK(rep.p2_zero_hits);
  CHECK(rep.p2_upper > 0.0);

  CHECK_THROWS_AS(check_dirichlet_lemma(2, 3, 0.5, cfg, 100, rng), std::invalid_argument);
  CHECK_THROWS_AS(check_dirichlet_lemma(2, 1, 0.0, cfg, 100, rng), std::invalid_argument);
  CHECK_THROWS_AS(check_dirichlet_lemma(2, 1, 2.5, cfg, 100, rng), std::invalid_argument);
  CHECK_THROWS_AS(check_dirichlet_lemma(2, 1, 0.5, cfg, 0, rng), std::invalid_argument);
}

}  // TEST_SUITE
