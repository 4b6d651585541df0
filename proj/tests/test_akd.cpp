#include <cmath>
#include <set>

#include "arborart/akd.hpp"
#include "arborart/funcs.hpp"
#include "arborart/util.hpp"
#include "doctest.h"

using namespace arborart;

namespace {

SplitNet rich_axis_net(int p, int m) {
  std::vector<std::vector<double>> axes(p);
  for (int j = 0; j < p; ++j)
    for (int i = 1; i <= m; ++i) axes[j].push_back((i - 0.5) / m);
  return SplitNet::from_axis_values(axes);
}

}  // namespace

TEST_SUITE("akd") {

TEST_CASE("midpoint split picks the ceil(b/2)-th candidate") {
  SplitNet net = SplitNet::regular_grid(1, 8);  // 0.0625, 0.1875, ..., 0.9375
  auto root = midpoint_split(net, Box::unit(1), 0);
  REQUIRE(root.has_value());
  CHECK(root->tau == doctest::Approx(0.4375));  // 4th of 8
  CHECK(root->left.hi[0] == doctest::Approx(0.4375));
  CHECK(root->right.lower_open(0));

  auto second = midpoint_split(net, root->left, 0);
  REQUIRE(second.has_value());
  CHECK(second->tau == doctest::Approx(0.1875));  // 2nd of the 3 interior values

  Box sliver({0.0}, {0.0625});
  CHECK(!midpoint_split(net, sliver, 0).has_value());
}

TEST_CASE("counter schedule follows the smallest l*alpha with ties leftward") {
  SplitNet net = rich_axis_net(2, 512);
  AkdResult res = akd(Box::unit(2), net, {0.25, 0.5}, 6, {0, 1});
  CHECK(res.achieved_L == 6);
  REQUIRE(res.counters.size() == 2);
  CHECK(res.counters[0] == 4);
  CHECK(res.counters[1] == 2);
  CHECK(res.coord_seq == std::vector<int>{0, 1, 0, 0, 1, 0});
  CHECK(res.partition.leaf_count() == 64);
}

TEST_CASE("isotropic smoothness alternates coordinates") {
  SplitNet net = rich_axis_net(2, 512);
  AkdResult res = akd(Box::unit(2), net, {1.0, 1.0}, 4, {0, 1});
  CHECK(res.counters == std::vector<int>{2, 2});
  CHECK(res.coord_seq == std::vector<int>{0, 1, 0, 1});
  CHECK(res.partition.leaf_count() == 16);
}

TEST_CASE("zero budget returns the root alone") {
  SplitNet net = rich_axis_net(2, 16);
  AkdResult res = akd(Box::unit(2), net, {0.5, 1.0}, 0, {0, 1});
  CHECK(res.achieved_L == 0);
  CHECK(res.coord_seq.empty());
  CHECK(res.counters == std::vector<int>{0, 0});
  CHECK(res.partition.leaf_count() == 1);
}

TEST_CASE("a dry coordinate stops the construction before the level") {
  SplitNet net = SplitNet::from_axis_values({{0.5}, {0.5}});
  AkdResult res = akd(Box::unit(2), net, {1.0, 1.0}, 4, {0, 1});
  CHECK(res.achieved_L == 2);
  CHECK(res.counters == std::vector<int>{1, 1});
  CHECK(res.partition.leaf_count() == 4);  // the level that failed split nothing
}

TEST_CASE("S maps construction indices onto carrier coordinates") {
  SplitNet net = rich_axis_net(3, 64);
  AkdResult res = akd(Box::unit(3), net, {1.0}, 2, {2});
  CHECK(res.counters == std::vector<int>{2});
  for (const auto& rec : res.partition.splits()) CHECK(rec.coord == 2);
  // untouched coordinates keep their full extent
  for (int id : res.partition.leaf_ids()) {
    Box b = res.partition.box_of(id);
    CHECK(b.len(0) == doctest::Approx(1.0));
    CHECK(b.len(1) == doctest::Approx(1.0));
    CHECK(b.len(2) < 0.5);
  }
}

TEST_CASE("construction is deterministic") {
  SplitNet net = rich_axis_net(2, 128);
  AkdResult a = akd(Box::unit(2), net, {0.3, 0.9}, 7, {0, 1});
  AkdResult b = akd(Box::unit(2), net, {0.3, 0.9}, 7, {0, 1});
  CHECK(a.coord_seq == b.coord_seq);
  CHECK(a.counters == b.counters);
  auto la = a.partition.leaf_ids(), lb = b.partition.leaf_ids();
  REQUIRE(la.size() == lb.size());
  for (std::size_t i = 0; i < la.size(); ++i)
    CHECK(hausdorff_box(a.partition.box_of(la[i]), b.partition.box_of(lb[i])) == 0.0);
}

TEST_CASE("counters respect the balance bound on random instances") {
  Rng rng(11);
  for (int it = 0; it < 60; ++it) {
    int d = 1 + rng.uniform_int(3);
    int L = rng.uniform_int(11);
    std::vector<double> alpha(d);
    std::vector<int> S(d);
    for (int j = 0; j < d; ++j) {
      alpha[j] = rng.uniform(0.15, 1.0);
      S[j] = j;
    }
    // deep enough that even a single coordinate can absorb all L splits
    SplitNet net = rich_axis_net(d, 16384);
    AkdResult res = akd(Box::unit(d), net, alpha, L, S);
    REQUIRE(res.achieved_L == L);
    double abar = harmonic_mean(alpha);
    int total = 0;
    for (int j = 0; j < d; ++j) {
      total += res.counters[j];
      // greedy guarantee: weighted counts lag the ideal split allocation by
      // less than one product unit, which is what bounds the leaf edge
      // lengths by 2 * 2^{-abar L / d}
      CHECK(alpha[j] * res.counters[j] > L * abar / d - 1.0);
    }
    CHECK(total == L);
    CHECK(res.partition.leaf_count() == (1 << L));
  }
}

TEST_CASE("regularity verdict on rich and starved nets") {
  SplitNet rich = rich_axis_net(2, 512);
  RegularityCheck ok = check_regular(rich, Box::unit(2), {0.25, 0.5}, 6, {0, 1});
  CHECK(ok.regular);
  CHECK(ok.result.achieved_L == 6);

  SplitNet starved = SplitNet::from_axis_values({{0.5}, {0.5}});
  RegularityCheck bad = check_regular(starved, Box::unit(2), {1.0, 1.0}, 4, {0, 1});
  CHECK(!bad.regular);
  CHECK(bad.result.achieved_L == 2);
}

TEST_CASE("input validation") {
  SplitNet net = rich_axis_net(2, 8);
  CHECK_THROWS_AS(akd(Box::unit(2), net, {}, 3, {}), std::invalid_argument);
  CHECK_THROWS_AS(akd(Box::unit(2), net, {0.5, 0.5}, 3, {0}), std::invalid_argument);
  CHECK_THROWS_AS(akd(Box::unit(2), net, {0.0, 0.5}, 3, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(akd(Box::unit(2), net, {1.5, 0.5}, 3, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(akd(Box::unit(2), net, {0.5, 0.5}, 3, {0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(akd(Box::unit(2), net, {0.5, 0.5}, -1, {0, 1}), std::invalid_argument);
}

}  // TEST_SUITE
