#include <cmath>
#include <cstdio>

#include "arborart/funcs.hpp"
#include "arborart/util.hpp"
#include "doctest.h"

using namespace arborart;

namespace {

// midpoint quadrature of fn over [-1,1]^d
template <typename F>
double quad(const F& fn, int d, int res) {
  double h = 2.0 / res, sum = 0;
  std::vector<int> idx(d, 0);
  Vec x(d);
  while (true) {
    for (int j = 0; j < d; ++j) x[j] = -1.0 + (idx[j] + 0.5) * h;
    sum += fn(x);
    int j = 0;
    for (; j < d; ++j) {
      if (++idx[j] < res) break;
      idx[j] = 0;
    }
    if (j == d) break;
  }
  return sum * std::pow(h, d);
}

}  // namespace

TEST_SUITE("funcs") {

TEST_CASE("harmonic mean") {
  CHECK(harmonic_mean({1.0, 1.0}) == doctest::Approx(1.0));
  CHECK(harmonic_mean({0.25, 0.5}) == doctest::Approx(1.0 / 3.0));
  CHECK(harmonic_mean({0.5}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(harmonic_mean({}), std::invalid_argument);
  CHECK_THROWS_AS(harmonic_mean({0.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(harmonic_mean({1.5}), std::invalid_argument);
}

TEST_CASE("orthant test function values") {
  CHECK(sim_function({0.75}) == doctest::Approx(0.9375));
  CHECK(sim_function({0.25}) == doctest::Approx(1.0));  // indicator off
  CHECK(sim_function({0.75, 0.75}) == doctest::Approx(1.0));
  CHECK(sim_function({0.75, 0.25}) == doctest::Approx(0.9375));
  CHECK(sim_function({0.25, 0.75}) == doctest::Approx(1.0625));
  CHECK(sim_function({0.5, 0.5}) == doctest::Approx(1.0));
}

TEST_CASE("kernel point values and range") {
  CHECK(packing_kernel({0.5}) == doctest::Approx(0.5));
  CHECK(packing_kernel({-0.5}) == doctest::Approx(-0.5));
  CHECK(packing_kernel({0.0}) == doctest::Approx(0.0));
  CHECK(packing_kernel({0.5, 0.5}) == doctest::Approx(0.5));
  CHECK(packing_kernel({0.5, -0.5}) == doctest::Approx(-0.5));
  CHECK(packing_kernel({0.25, 0.75}) == doctest::Approx(0.25));
  Rng rng(2);
  for (int d = 1; d <= 3; ++d) {
    for (int it = 0; it < 20000; ++it) {
      Vec x(d);
      for (int j = 0; j < d; ++j) x[j] = rng.uniform(-1.0, 1.0);
      double v = packing_kernel(x);
      CHECK(std::abs(v) <= 0.5 + 1e-12);
    }
  }
}

TEST_CASE("kernel integrals") {
  for (int d : {1, 2}) {
    int res = d == 1 ? 4096 : 512;
    double k1 = quad([](const Vec& x) { return packing_kernel(x); }, d, res);
    double k2 = quad([](const Vec& x) { double v = packing_kernel(x); return v * v; }, d, res);
    double target = std::pow(2.0, d) / (2.0 * (d + 1) * (d + 2));
    CHECK(std::abs(k1) <= 1e-6);
    CHECK(k2 == doctest::Approx(target).epsilon(1e-3));
    if (d == 1) CHECK(k2 == doctest::Approx(1.0 / 6.0).epsilon(1e-4));
  }
  // one-dimensional slices integrate to zero as well
  double slice = 0;
  int res = 4096;
  for (int i = 0; i < res; ++i)
    slice += packing_kernel({-1.0 + (i + 0.5) * 2.0 / res, 0.3}) * 2.0 / res;
  CHECK(std::abs(slice) <= 1e-6);
}

TEST_CASE("kernel is coordinatewise 1-Lipschitz") {
  Rng rng(7);
  for (int d = 1; d <= 3; ++d) {
    for (int it = 0; it < 10000; ++it) {
      Vec x(d), y(d);
      double denom = 0;
      for (int j = 0; j < d; ++j) {
        x[j] = rng.uniform(-1.0, 1.0);
        y[j] = rng.uniform(-1.0, 1.0);
        denom += std::abs(x[j] - y[j]);
      }
      if (denom <= 0) continue;
      CHECK(std::abs(packing_kernel(x) - packing_kernel(y)) <= denom * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("doppler stays bounded") {
  CHECK(doppler(0.0) == doctest::Approx(0.0));
  CHECK(doppler(1.0) == doctest::Approx(0.0));
  Rng rng(3);
  for (int it = 0; it < 1000; ++it) {
    double v = doppler(rng.uniform());
    CHECK(std::isfinite(v));
    CHECK(std::abs(v) <= 0.5 + 1e-12);  // sqrt(x(1-x)) <= 1/2
  }
}

TEST_CASE("projection and sparse embedding") {
  Vec x{0.1, 0.2, 0.3, 0.4};
  Vec pr = project(x, {2, 0});
  CHECK(pr[0] == doctest::Approx(0.3));
  CHECK(pr[1] == doctest::Approx(0.1));
  CHECK_THROWS_AS(project(x, {4}), std::invalid_argument);

  RealFn h = [](const Vec& z) { return z[0] + 2.0 * z[1]; };
  RealFn f = sparse_embed(h, {2, 0}, 4);
  CHECK(f(x) == doctest::Approx(0.3 + 2.0 * 0.1));
  Vec y = x;
  y[1] = 0.9;
  y[3] = 0.0;
  CHECK(f(y) == doctest::Approx(f(x)));  // constant off the active set
  CHECK_THROWS_AS(sparse_embed(h, {0, 4}, 4), std::invalid_argument);
}

TEST_CASE("bump family meshes and evaluates") {
  TreePartition root(Box::unit(1));
  BumpFamily fam(root.leaves(), {{1.0}}, 0.2);
  CHECK(fam.cell_count() == 5);  // ceil(1 / 0.2)
  REQUIRE(fam.grid_dims(0) == std::vector<int>{5});
  CHECK(fam.mesh(0)[0] == doctest::Approx(0.2));

  // everything off: identically zero
  CHECK(fam({0.31}) == doctest::Approx(0.0));

  std::vector<std::uint8_t> bits(5, 0);
  bits[2] = 1;  // cell [0.4, 0.6], center 0.5
  fam.set_omega(bits);
  Vec center = fam.cell_center(0, {2});
  CHECK(center[0] == doctest::Approx(0.5));
  CHECK(fam({0.5}) == doctest::Approx(0.0));              // kernel vanishes at its origin
  CHECK(fam({0.55}) == doctest::Approx(0.2 / 8.0));       // peak at center + u/4
  CHECK(fam({0.45}) == doctest::Approx(-0.2 / 8.0));
  CHECK(fam({0.31}) == doctest::Approx(0.0));             // neighbouring cell stays off
  CHECK(fam({0.9}) == doctest::Approx(0.0));
}

TEST_CASE("bump family respects anisotropic meshes and piece offsets") {
  TreePartition part(Box::unit(1));
  part.split(0, 0, 0.5);
  BumpFamily fam(part.leaves(), {{1.0}, {1.0}}, 0.3);
  // each half: ceil(0.5 / 0.3) = 2 cells of width 0.25
  CHECK(fam.cell_count() == 4);
  std::vector<std::uint8_t> bits(4, 0);
  bits[2] = 1;  // first cell of the second piece: [0.5, 0.75]
  fam.set_omega(bits);
  CHECK(fam.cell_center(1, {0})[0] == doctest::Approx(0.625));
  CHECK(fam({0.6875}) == doctest::Approx(0.3 / 4.0 * 0.5));
  CHECK(fam({0.3}) == doctest::Approx(0.0));

  TreePartition uroot(Box::unit(2));
  BumpFamily aniso(uroot.leaves(), {{1.0, 0.5}}, 0.25);
  CHECK(aniso.grid_dims(0) == std::vector<int>{4, 16});
  CHECK(aniso.cell_count() == 64);
  CHECK(aniso.mesh(0)[1] == doctest::Approx(0.0625));

  CHECK_THROWS_AS(BumpFamily(uroot.leaves(), {{1.0}}, 0.25), std::invalid_argument);
  CHECK_THROWS_AS(BumpFamily(uroot.leaves(), {{1.0, 1.0}}, 1.2), std::invalid_argument);
  std::vector<std::uint8_t> wrong(3, 0);
  CHECK_THROWS_AS(aniso.set_omega(wrong), std::invalid_argument);
}

TEST_CASE("orthant truth matches the raw function") {
  PiecewiseAnisoSpec spec = PiecewiseAnisoSpec::orthants_sim(2, 1.0);
  CHECK(spec.piece_count() == 4);
  CHECK(spec.d() == 2);
  CHECK(spec.abar() == doctest::Approx(1.0));
  Rng rng(9);
  for (int it = 0; it < 200; ++it) {
    Vec x{rng.uniform(), rng.uniform()};
    CHECK(spec.f0(x) == doctest::Approx(sim_function(x)).epsilon(1e-12));
  }
  CHECK(spec.piece_of({0.25, 0.25}) == 0);
  CHECK(spec.piece_of({0.75, 0.25}) == 2);  // leaves in depth-first order
  HolderReport rep = validate_holder(spec, 200, 4);
  CHECK(rep.ok);
}

TEST_CASE("power truth and validation") {
  PiecewiseAnisoSpec spec = PiecewiseAnisoSpec::power(3, {0, 2}, {1.0, 1.0}, {0.25, 0.5}, 1.0);
  CHECK(spec.d() == 2);
  CHECK(spec.p() == 3);
  CHECK(spec.abar() == doctest::Approx(1.0 / 3.0));
  CHECK(spec.f0({0.5, 0.9, 0.25}) ==
        doctest::Approx(std::pow(0.5, 0.25) + std::pow(0.25, 0.5)));
  // sqrt is 1/2-Hoelder with coefficient 1 on [0,1]
  HolderReport ok = validate_holder(spec, 300, 11);
  CHECK(ok.ok);
  CHECK_THROWS_AS(PiecewiseAnisoSpec::power(2, {0, 1}, {1.0}, {0.5}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseAnisoSpec::power(1, {0}, {1.0}, {1.5}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("a steep function fails its claimed coefficient") {
  TreePartition root(Box::unit(1));
  PiecewiseAnisoSpec steep(1, {0}, std::move(root), {{1.0}},
                           {[](const Vec& x) { return 2.0 * x[0]; }}, 0.5);
  HolderReport rep = validate_holder(steep, 400, 5);
  CHECK(!rep.ok);
  CHECK(rep.max_ratio > 1.5);
}

TEST_CASE("text round trip") {
  PiecewiseAnisoSpec spec = PiecewiseAnisoSpec::power(2, {0, 1}, {1.0, 1.0}, {0.25, 0.5}, 1.0);
  PiecewiseAnisoSpec back = PiecewiseAnisoSpec::from_text(spec.to_text());
  CHECK(back.p() == 2);
  CHECK(back.d() == 2);
  CHECK(back.lambda() == doctest::Approx(1.0));
  Rng rng(13);
  for (int it = 0; it < 100; ++it) {
    Vec x{rng.uniform(), rng.uniform()};
    CHECK(back.f0(x) == doctest::Approx(spec.f0(x)).epsilon(1e-12));
  }

  PiecewiseAnisoSpec orth = PiecewiseAnisoSpec::orthants_sim(2, 1.0);
  std::string path = "/tmp/arborart_spec_roundtrip.txt";
  orth.save(path);
  PiecewiseAnisoSpec loaded = PiecewiseAnisoSpec::load(path);
  CHECK(loaded.piece_count() == 4);
  for (int it = 0; it < 100; ++it) {
    Vec x{rng.uniform(), rng.uniform()};
    CHECK(loaded.f0(x) == doctest::Approx(orth.f0(x)).epsilon(1e-12));
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(PiecewiseAnisoSpec::from_text("q 3\n"), std::runtime_error);
  CHECK_THROWS_AS(PiecewiseAnisoSpec::load("/tmp/definitely_missing_spec.txt"),
                  std::runtime_error);
}

TEST_CASE("extended partition maps active splits into ambient space") {
  PiecewiseAnisoSpec spec = PiecewiseAnisoSpec::power(4, {1, 3}, {1.0, 1.0}, {0.5, 0.5}, 1.0);
  TreePartition ext = spec.extended_partition();
  CHECK(ext.root().dim() == 4);
  CHECK(ext.leaf_count() == 1);

  PiecewiseAnisoSpec orth = PiecewiseAnisoSpec::orthants_sim(2, 1.0);
  TreePartition ext2 = orth.extended_partition();
  CHECK(ext2.leaf_count() == 4);
  for (const auto& rec : ext2.splits()) CHECK(rec.tau == doctest::Approx(0.5));
}

}  // TEST_SUITE
