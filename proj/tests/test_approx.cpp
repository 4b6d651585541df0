#include <cmath>

#include "arborart/approx.hpp"
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

TEST_SUITE("approx") {

TEST_CASE("depth budget") {
  CHECK(choose_L0(1000, 2, 1.0, 1, 1.0) == 5);  // 2^L0 ~ 24.06
  CHECK(choose_L0(1000, 2, 1.0, 4, 1.0) == 4);  // 2^L0 ~ 12.03
  // deeper trees with more data
  CHECK(choose_L0(100000, 2, 1.0, 1, 1.0) >= choose_L0(1000, 2, 1.0, 1, 1.0) + 2);
  CHECK_THROWS_AS(choose_L0(2, 1, 1.0, 1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(choose_L0(1000, 0, 1.0, 1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(choose_L0(1000, 1, 1.0, 1, 0.0), std::invalid_argument);
}

TEST_CASE("rate formulas match hand-derived values") {
  // sqrt(2 ln 2 / 1000) + sqrt(2) * (4 ln 1000 / 1000)^{1/4}
  double eps_hand = std::sqrt(2.0 * std::log(2.0) / 1000.0) +
                    std::sqrt(2.0) * std::pow(4.0 * std::log(1000.0) / 1000.0, 0.25);
  CHECK(rate_eps(1000, 2, 2, 1.0, 4, 1.0) == doctest::Approx(eps_hand).epsilon(1e-12));
  CHECK(rate_eps(1000, 2, 2, 1.0, 4, 1.0) == doctest::Approx(0.6138).epsilon(1e-4));

  // sqrt(ln C(10,2) / 1000) + (1/1000)^{1/4}
  double gamma_hand = std::sqrt(std::log(45.0) / 1000.0) + std::pow(1e-3, 0.25);
  CHECK(rate_gamma(1000, 10, 2, 1.0, 1.0) == doctest::Approx(gamma_hand).epsilon(1e-12));
  CHECK(rate_gamma(1000, 10, 2, 1.0, 1.0) == doctest::Approx(0.2395).epsilon(1e-3));

  CHECK(eps_bar(2000, 2, 1.0, 4, 1.0) < eps_bar(1000, 2, 1.0, 4, 1.0));
  CHECK_THROWS_AS(rate_eps(1000, 1, 1, 1.0, 1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rate_gamma(1000, 2, 3, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("identity truth is approximated within one cell width") {
  PiecewiseAnisoSpec spec = PiecewiseAnisoSpec::power(1, {0}, {1.0}, {1.0}, 1.0);
  SplitNet net = SplitNet::regular_grid(1, 16);
  Approximator ap = build_approximator_L0(spec, net, 4);
  CHECK(ap.leaf_total == 16);
  CHECK(ap.snap_divergence == doctest::Approx(0.0));
  CHECK(ap.fallback_anchors == 0);
  CHECK(ap.mismatch_checked);
  CHECK(ap.mismatch_points == 0);
  auto est = measure_sup([&](const Vec& x) { return spec.f0(x); }, ap.fn(), 1, 509);
  CHECK(est.value <= 0.125);
  CHECK(est.value > 0.005);  // a step function cannot be exact
}

TEST_CASE("orthant truth on a design-sized grid") {
  PiecewiseAnisoSpec spec = PiecewiseAnisoSpec::orthants_sim(2, 1.0);
  SplitNet net = SplitNet::regular_grid(2, 64);
  Approximator ap = build_approximator(spec, net, 1000);
  CHECK(ap.L0 == 4);
  CHECK(ap.leaf_total == 64);  // 4 pieces x 2^4 cells
  // 0.5 floor-snaps to the nearest grid value below
  CHECK(ap.snap_divergence == doctest::Approx(0.0078125));
  CHECK(ap.mismatch_checked);
  CHECK(ap.mismatch_points == 0);
  CHECK(ap.fallback_anchors == 0);

  Approximator coarse = build_approximator_L0(spec, net, 0);
  CHECK(coarse.leaf_total == 4);

  CHECK_THROWS_AS(build_approximator_L0(spec, SplitNet::regular_grid(1, 8), 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_approximator_L0(spec, net, -1), std::invalid_argument);
}

TEST_CASE("error decreases as the budget grows") {
  PiecewiseAnisoSpec spec =
      PiecewiseAnisoSpec::power(2, {0, 1}, {1.0, 1.0}, {0.25, 0.5}, 1.0);
  SplitNet net = rich_axis_net(2, 512);
  RealFn truth = [&](const Vec& x) { return spec.f0(x); };
  Approximator shallow = build_approximator_L0(spec, net, 2);
  Approximator deep = build_approximator_L0(spec, net, 10);
  double e_shallow = measure_sup(truth, shallow.fn(), 2, 701).value;
  double e_deep = measure_sup(truth, deep.fn(), 2, 701).value;
  CHECK(e_deep < e_shallow * 0.5);
  CHECK(deep.leaf_total == 1024);
}

TEST_CASE("norm measurement") {
  RealFn id = [](const Vec& x) { return x[0]; };
  RealFn zero = [](const Vec&) { return 0.0; };
  ErrorEstimate l2 = measure_lv(id, zero, 1, 2.0);
  CHECK(l2.value == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-4));
  CHECK(l2.se == 0.0);

  RealFn c3 = [](const Vec&) { return 0.3; };
  ErrorEstimate sup3 = measure_sup(c3, zero, 3, 256, 20000, 5);
  CHECK(sup3.value == doctest::Approx(0.3));
  ErrorEstimate lv3 = measure_lv(c3, zero, 3, 2.0, 256, 20000, 5);
  CHECK(lv3.value == doctest::Approx(0.3));
  CHECK(lv3.se == doctest::Approx(0.0));

  CHECK(measure_empirical(id, zero, {{0.2}, {0.4}}, 2.0) ==
        doctest::Approx(std::sqrt(0.1)));
  CHECK_THROWS_AS(measure_empirical(id, zero, {}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(measure_lv(id, zero, 1, 0.5), std::invalid_argument);
}

TEST_CASE("slope recovery") {
  std::vector<double> xs{1, 2, 4, 8, 16};
  std::vector<double> errs;
  for (double x : xs) errs.push_back(3.0 * std::pow(x, -0.5));
  CHECK(rate_slope(xs, errs) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK_THROWS_AS(rate_slope({1, 2}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(rate_slope({1, 2, 0}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(rate_slope({1, 2, 3}, {1, -2, 3}), std::invalid_argument);
}

TEST_CASE("snapping-tolerance conditions") {
  PiecewiseAnisoSpec smooth =
      PiecewiseAnisoSpec::power(2, {0, 1}, {1.0, 1.0}, {0.5, 0.5}, 1.0);
  SnapToleranceReport rep = check_snap_tolerance(smooth, 1000, 0.01, 2.0, 1.0);
  CHECK(rep.boundary_coords == 0);
  CHECK(!rep.sup_cond.applicable);
  CHECK(rep.all_ok);  // no boundaries: nothing to violate

  PiecewiseAnisoSpec orth = PiecewiseAnisoSpec::orthants_sim(2, 1.0);
  SnapToleranceReport loose = check_snap_tolerance(orth, 1000, 1.0, 2.0, 1.0);
  CHECK(loose.boundary_coords == 2);
  CHECK(loose.min_len == doctest::Approx(0.5));
  CHECK(loose.min_alpha == doctest::Approx(1.0));
  CHECK(loose.sup_cond.applicable);
  CHECK(!loose.sup_cond.ok);  // a unit tolerance is far too coarse
  CHECK(!loose.all_ok);

  SnapToleranceReport tight = check_snap_tolerance(orth, 1000, 1e-6, 2.0, 1.0);
  CHECK(tight.all_ok);
  CHECK(tight.eps_bar_n == doctest::Approx(eps_bar(1000, 2, 1.0, 4, 1.0)));

  CHECK_THROWS_AS(check_snap_tolerance(orth, 1000, -0.1, 2.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(check_snap_tolerance(orth, 1000, 0.1, 0.5, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(check_snap_tolerance(orth, 1000, 0.1, 2.0, 0.0),
                  std::invalid_argument);
}

}  // TEST_SUITE
