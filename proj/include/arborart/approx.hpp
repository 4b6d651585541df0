#pragma once

#include <cstdint>
#include <vector>

#include "arborart/akd.hpp"
#include "arborart/funcs.hpp"

namespace arborart {

// Depth budget: round(log2(C * (lambda^2 d^2 n / (R ln n))^{d/(2 abar + d)})),
// floored at zero. All logs natural.
int choose_L0(long n, int d, double lambda, int R, double abar, double C = 1.0);

// (lambda d)^{d/(2 abar + d)} * (R ln n / n)^{abar/(2 abar + d)} — the
// smoothness-limited part of the rate, without the dimension-selection term.
double eps_bar(long n, int d, double lambda, int R, double abar, double c = 1.0);

// c1 * sqrt(d ln p / n) + c2 * eps_bar(n, d, lambda, R, abar).
double rate_eps(long n, int p, int d, double lambda, int R, double abar,
                double c1 = 1.0, double c2 = 1.0);

// c1 * sqrt(ln binom(p, d) / n) + c2 * (lambda^{d/abar}/n)^{abar/(2 abar + d)}.
double rate_gamma(long n, int p, int d, double lambda, double abar,
                  double c1 = 1.0, double c2 = 1.0);

// ---------------------------------------------------------------------------
// Step-function approximator: snap the truth's box boundaries onto the net,
// refine each snapped box with an anisotropic k-d tree, and set each cell's
// height to the truth's value at an in-cell net point (anchor).
// ---------------------------------------------------------------------------
struct Approximator {
  TreePartition tree;               // assembled partition of [0,1]^p
  std::vector<double> heights;      // indexed by node id; leaf entries used
  TreePartition snapped;            // snapped coarse partition
  std::vector<AkdResult> akd_runs;  // one per coarse box
  int L0 = 0;
  std::size_t leaf_total = 0;
  double snap_divergence = 0;       // coarse-partition divergence after snapping
  int fallback_anchors = 0;         // cells with no net point: center used
  bool mismatch_checked = false;    // only explicit-point nets are scanned
  long mismatch_points = 0;         // net points whose snapped box disagrees

  double operator()(const Vec& x_p) const;
  RealFn fn() const;
};

Approximator build_approximator(const PiecewiseAnisoSpec& spec, const SplitNet& net,
                                long n, double C_L0 = 1.0,
                                SnapMode mode = SnapMode::floor);
// Same pipeline with the depth forced instead of derived from n.
Approximator build_approximator_L0(const PiecewiseAnisoSpec& spec, const SplitNet& net,
                                   int L0, SnapMode mode = SnapMode::floor);

// ---------------------------------------------------------------------------
// Error measurement. Grid quadrature (`resolution` points per axis) for
// p <= 2; Monte Carlo with `mc_samples` draws and a reported standard error
// for larger p.
// ---------------------------------------------------------------------------
struct ErrorEstimate {
  double value = 0;
  double se = 0;  // zero for exact grid evaluation
};

ErrorEstimate measure_sup(const RealFn& f, const RealFn& g, int p,
                          int resolution = 256, long mc_samples = 200000,
                          std::uint64_t seed = 1);
ErrorEstimate measure_lv(const RealFn& f, const RealFn& g, int p, double v,
                         int resolution = 256, long mc_samples = 200000,
                         std::uint64_t seed = 1);
// (mean over points of |f-g|^v)^{1/v}.
double measure_empirical(const RealFn& f, const RealFn& g,
                         const std::vector<Vec>& points, double v);

// ---------------------------------------------------------------------------
// Snapping-tolerance conditions for the three error metrics. Each report
// carries both sides; `ratio` = lhs/rhs, satisfied when ratio <= slack K.
// A condition is inapplicable (trivially satisfied) when the truth has a
// single box or c_n = 0.
// ---------------------------------------------------------------------------
struct ConditionReport {
  bool applicable = false;
  double lhs = 0, rhs = 0, ratio = 0;
  bool ok = true;
};

struct SnapToleranceReport {
  double eps_bar_n = 0;
  int boundary_coords = 0;  // number of coordinates the truth's partition cuts
  double min_len = 1;       // smallest box edge among cut coordinates
  double min_alpha = 1;
  ConditionReport sup_cond;      // c_n^{min alpha} <= K * eps_bar/(lambda*|S|)
  ConditionReport lv_cont_cond;  // c_n <= K * (eps_bar/||f0||_inf)^v * min_len/|S|
  ConditionReport lv_disc_cond;  // c_n^{1+v*min alpha} <= K * (eps_bar/lambda)^v * min_len/|S|^{v+1}
  bool all_ok = true;
};

SnapToleranceReport check_snap_tolerance(const PiecewiseAnisoSpec& spec, long n,
                                         double c_n, double v, double norm_f0_sup,
                                         double K = 1.0);

// OLS slope of ln(err) against ln(x); needs >= 3 positive pairs.
double rate_slope(const std::vector<double>& xs, const std::vector<double>& errs);

}  // namespace arborart
