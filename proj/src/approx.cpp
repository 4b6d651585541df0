#include "arborart/approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace arborart {

int choose_L0(long n, int d, double lambda, int R, double abar, double C) {
  if (n < 3 || d < 1 || lambda <= 0 || R < 1 || abar <= 0 || C <= 0)
    throw std::invalid_argument("choose_L0: bad arguments");
  double base = lambda * lambda * d * d * n / (R * std::log(double(n)));
  double two_L0 = C * std::pow(base, d / (2.0 * abar + d));
  if (two_L0 <= 1.0) return 0;
  int L0 = static_cast<int>(std::lround(std::log2(two_L0)));
  return std::max(0, L0);
}

double eps_bar(long n, int d, double lambda, int R, double abar, double c) {
  if (n < 3) throw std::invalid_argument("eps_bar: n >= 3 required");
  double expo = abar / (2.0 * abar + d);
  return c * std::pow(lambda * d, d / (2.0 * abar + d)) *
         std::pow(R * std::log(double(n)) / n, expo);
}

double rate_eps(long n, int p, int d, double lambda, int R, double abar, double c1,
                double c2) {
  if (p < 2 || n < 3) throw std::invalid_argument("rate_eps: need p >= 2, n >= 3");
  return c1 * std::sqrt(d * std::log(double(p)) / n) +
         eps_bar(n, d, lambda, R, abar, c2);
}

double rate_gamma(long n, int p, int d, double lambda, double abar, double c1,
                  double c2) {
  if (d > p) throw std::invalid_argument("rate_gamma: d <= p required");
  double log_binom = std::lgamma(p + 1.0) - std::lgamma(d + 1.0) - std::lgamma(p - d + 1.0);
  return c1 * std::sqrt(log_binom / n) +
         c2 * std::pow(std::pow(lambda, double(d) / abar) / n, abar / (2.0 * abar + d));
}

// ---------------------------------------------------------------------------
// Approximator
// ---------------------------------------------------------------------------

double Approximator::operator()(const Vec& x_p) const {
  return heights[tree.leaf_containing(x_p)];
}

RealFn Approximator::fn() const {
  auto copy = std::make_shared<Approximator>(*this);
  return [copy](const Vec& x) { return (*copy)(x); };
}

namespace {

// Anchor for one cell: a net point in the cell's closure (cuts land exactly
// on net values, so the nearest point is often a cell edge) and in the truth
// box's closure, nearest to the cell center on the active coordinates.
// Product nets assemble the anchor per axis.
struct AnchorPick {
  Vec point;
  bool fallback = false;
};

bool in_closure(const Vec& z, const Box& cell) {
  for (int j = 0; j < cell.dim(); ++j)
    if (!(z[j] >= cell.lo[j] - kEdgeTol && z[j] <= cell.hi[j] + kEdgeTol)) return false;
  return true;
}

AnchorPick pick_anchor(const SplitNet& net, const Box& cell, const Box& piece,
                       const std::vector<int>& S0) {
  Vec center(cell.dim());
  for (int j = 0; j < cell.dim(); ++j) center[j] = 0.5 * (cell.lo[j] + cell.hi[j]);

  if (net.has_points()) {
    double best = std::numeric_limits<double>::infinity();
    const Vec* pick = nullptr;
    for (const auto& z : net.points()) {
      if (!in_closure(z, cell) || !in_closure(z, piece)) continue;
      double d2 = 0;
      for (int j : S0) d2 += (z[j] - center[j]) * (z[j] - center[j]);
      if (d2 < best) {
        best = d2;
        pick = &z;
      }
    }
    if (pick) return {*pick, false};
  } else {
    // product net: choose each coordinate independently
    Vec anchor(cell.dim());
    bool ok = true;
    for (int j = 0; j < cell.dim() && ok; ++j) {
      double lo = std::max(cell.lo[j], piece.lo[j]);
      double hi = std::min(cell.hi[j], piece.hi[j]);
      const auto& vals = net.axis_values(j);
      double best = std::numeric_limits<double>::infinity();
      double got = 0;
      bool found = false;
      auto it = std::lower_bound(vals.begin(), vals.end(), lo - kEdgeTol);
      for (; it != vals.end() && *it <= hi + kEdgeTol; ++it) {
        double dd = std::abs(*it - center[j]);
        if (dd < best) {
          best = dd;
          got = *it;
          found = true;
        }
      }
      if (found)
        anchor[j] = got;
      else
        ok = false;
    }
    if (ok) return {anchor, false};
  }

  // no usable net point: fall back to a geometric center
  auto inter = cell.intersect(piece);
  const Box& b = inter ? *inter : cell;
  Vec c(b.dim());
  for (int j = 0; j < b.dim(); ++j) c[j] = 0.5 * (b.lo[j] + b.hi[j]);
  return {c, true};
}

int leaf_index_of(const std::vector<int>& ids, int leaf) {
  auto it = std::find(ids.begin(), ids.end(), leaf);
  return static_cast<int>(it - ids.begin());
}

}  // namespace

Approximator build_approximator_L0(const PiecewiseAnisoSpec& spec, const SplitNet& net,
                                   int L0, SnapMode mode) {
  if (net.dim() != spec.p())
    throw std::invalid_argument("approximator: net dimension must match ambient p");
  if (L0 < 0) throw std::invalid_argument("approximator: L0 >= 0 required");

  TreePartition target = spec.extended_partition();
  std::vector<int> S0 = spec.S0();
  // the snap concerns the piece boundaries, which may cut fewer coordinates
  // than the truth actually varies along (none at all for a single piece)
  auto dense = check_dense(net, target, chopped_coordinates(target.leaves()),
                           std::numeric_limits<double>::infinity(), mode);
  if (!dense.snapped)
    throw std::runtime_error("approximator: partition cannot be snapped onto this net");

  Approximator out{*dense.snapped, {}, *dense.snapped, {}, L0};
  out.snap_divergence = dense.achieved;

  auto coarse_ids = out.snapped.leaf_ids();   // piece order matches the truth
  auto target_ids = target.leaf_ids();
  int R = static_cast<int>(coarse_ids.size());

  for (int r = 0; r < R; ++r) {
    Box omega = out.snapped.box_of(coarse_ids[r]);
    out.akd_runs.push_back(akd(omega, net, spec.alpha(r), L0, S0));
  }

  // graft each refinement onto the assembled tree
  for (int r = 0; r < R; ++r) {
    const TreePartition& sub = out.akd_runs[r].partition;
    std::vector<int> map(sub.node_count(), -1);
    map[0] = coarse_ids[r];
    for (const auto& rec : sub.splits()) {
      auto [l, rgt] = out.tree.split(map[rec.node], rec.coord, rec.tau);
      map[sub.left(rec.node)] = l;
      map[sub.right(rec.node)] = rgt;
    }
  }
  out.leaf_total = out.tree.leaf_count();

  // heights from truth values at anchors
  out.heights.assign(out.tree.node_count(), 0.0);
  for (int r = 0; r < R; ++r) {
    Box piece = target.box_of(target_ids[r]);
    const TreePartition& sub = out.akd_runs[r].partition;
    for (int leaf : sub.leaf_ids()) {
      Box cell = sub.box_of(leaf);
      auto pick = pick_anchor(net, cell, piece, S0);
      if (pick.fallback) ++out.fallback_anchors;
      Vec cc(cell.dim());
      for (int j = 0; j < cell.dim(); ++j) cc[j] = 0.5 * (cell.lo[j] + cell.hi[j]);
      // evaluate the truth's piece r at the anchor regardless of which side of
      // a snapped boundary it fell on
      Vec active(S0.size());
      for (std::size_t k = 0; k < S0.size(); ++k) active[k] = pick.point[S0[k]];
      double h = spec.eval_piece(r, active);
      int id = out.tree.leaf_containing(cc);
      out.heights[id] = h;
    }
  }

  // count net points whose snapped box disagrees with the true box
  if (net.has_points()) {
    out.mismatch_checked = true;
    for (const auto& z : net.points()) {
      int t = leaf_index_of(target_ids, target.leaf_containing(z));
      int s = leaf_index_of(coarse_ids, out.snapped.leaf_containing(z));
      if (t != s) ++out.mismatch_points;
    }
  }
  return out;
}

Approximator build_approximator(const PiecewiseAnisoSpec& spec, const SplitNet& net,
                                long n, double C_L0, SnapMode mode) {
  int L0 = choose_L0(n, spec.d(), spec.lambda(), spec.piece_count(), spec.abar(), C_L0);
  return build_approximator_L0(spec, net, L0, mode);
}

// ---------------------------------------------------------------------------
// Error measurement
// ---------------------------------------------------------------------------

namespace {

template <typename Fn>
void for_grid(int p, int res, Fn&& visit) {
  std::vector<int> idx(p, 0);
  Vec x(p);
  while (true) {
    for (int j = 0; j < p; ++j) x[j] = (idx[j] + 0.5) / res;
    visit(x);
    int j = 0;
    while (j < p && ++idx[j] == res) idx[j++] = 0;
    if (j == p) break;
  }
}

}  // namespace

ErrorEstimate measure_sup(const RealFn& f, const RealFn& g, int p, int resolution,
                          long mc_samples, std::uint64_t seed) {
  ErrorEstimate est;
  if (p <= 2) {
    for_grid(p, resolution, [&](const Vec& x) {
      est.value = std::max(est.value, std::abs(f(x) - g(x)));
    });
  } else {
    Rng rng(seed);
    Vec x(p);
    for (long i = 0; i < mc_samples; ++i) {
      for (int j = 0; j < p; ++j) x[j] = rng.uniform();
      est.value = std::max(est.value, std::abs(f(x) - g(x)));
    }
    est.se = 0;  // max has no symmetric error bar; reported as-is
  }
  return est;
}

ErrorEstimate measure_lv(const RealFn& f, const RealFn& g, int p, double v,
                         int resolution, long mc_samples, std::uint64_t seed) {
  if (v < 1) throw std::invalid_argument("measure_lv: v >= 1 required");
  ErrorEstimate est;
  if (p <= 2) {
    double acc = 0;
    long cnt = 0;
    for_grid(p, resolution, [&](const Vec& x) {
      acc += std::pow(std::abs(f(x) - g(x)), v);
      ++cnt;
    });
    est.value = std::pow(acc / cnt, 1.0 / v);
  } else {
    Rng rng(seed);
    Vec x(p);
    double acc = 0, acc2 = 0;
    for (long i = 0; i < mc_samples; ++i) {
      for (int j = 0; j < p; ++j) x[j] = rng.uniform();
      double t = std::pow(std::abs(f(x) - g(x)), v);
      acc += t;
      acc2 += t * t;
    }
    double mean = acc / mc_samples;
    double var = std::max(0.0, acc2 / mc_samples - mean * mean);
    double se_mean = std::sqrt(var / mc_samples);
    est.value = std::pow(mean, 1.0 / v);
    // delta method through mean^{1/v}
    est.se = mean > 0 ? se_mean * est.value / (v * mean) : se_mean;
  }
  return est;
}

double measure_empirical(const RealFn& f, const RealFn& g,
                         const std::vector<Vec>& points, double v) {
  if (points.empty()) throw std::invalid_argument("measure_empirical: no points");
  double acc = 0;
  for (const auto& x : points) acc += std::pow(std::abs(f(x) - g(x)), v);
  return std::pow(acc / points.size(), 1.0 / v);
}

// ---------------------------------------------------------------------------
// Conditions on the snapping tolerance
// ---------------------------------------------------------------------------

SnapToleranceReport check_snap_tolerance(const PiecewiseAnisoSpec& spec, long n,
                                         double c_n, double v, double norm_f0_sup,
                                         double K) {
  if (c_n < 0 || v < 1 || norm_f0_sup <= 0 || K <= 0)
    throw std::invalid_argument("snap tolerance conditions: bad arguments");
  SnapToleranceReport rep;
  rep.eps_bar_n = eps_bar(n, spec.d(), spec.lambda(), spec.piece_count(), spec.abar());

  auto active = spec.partition().leaves();
  auto cut = chopped_coordinates(active);
  rep.boundary_coords = static_cast<int>(cut.size());
  rep.min_len = 1.0;
  for (const auto& box : active.boxes)
    for (int j : cut) rep.min_len = std::min(rep.min_len, box.len(j));
  rep.min_alpha = 1.0;
  for (int r = 0; r < spec.piece_count(); ++r)
    for (double a : spec.alpha(r)) rep.min_alpha = std::min(rep.min_alpha, a);

  bool applicable = rep.boundary_coords > 0 && c_n > 0;
  auto fill = [&](ConditionReport& c, double lhs, double rhs) {
    c.applicable = applicable;
    if (!applicable) {
      c.ok = true;
      return;
    }
    c.lhs = lhs;
    c.rhs = rhs;
    c.ratio = rhs > 0 ? lhs / rhs : std::numeric_limits<double>::infinity();
    c.ok = c.ratio <= K;
  };

  double S = rep.boundary_coords;
  double eb = rep.eps_bar_n;
  double lam = spec.lambda();
  fill(rep.sup_cond, std::pow(c_n, rep.min_alpha), applicable ? eb / (lam * S) : 0);
  fill(rep.lv_cont_cond, c_n,
       applicable ? std::pow(eb / norm_f0_sup, v) * rep.min_len / S : 0);
  fill(rep.lv_disc_cond, std::pow(c_n, 1.0 + v * rep.min_alpha),
       applicable ? std::pow(eb / lam, v) * rep.min_len / std::pow(S, v + 1) : 0);
  rep.all_ok = rep.sup_cond.ok && rep.lv_cont_cond.ok && rep.lv_disc_cond.ok;
  return rep;
}

double rate_slope(const std::vector<double>& xs, const std::vector<double>& errs) {
  if (xs.size() != errs.size() || xs.size() < 3)
    throw std::invalid_argument("rate_slope: need >= 3 pairs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] <= 0 || errs[i] <= 0)
      throw std::invalid_argument("rate_slope: values must be positive");
    double lx = std::log(xs[i]), ly = std::log(errs[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double nval = static_cast<double>(xs.size());
  return (nval * sxy - sx * sy) / (nval * sxx - sx * sx);
}

}  // namespace arborart
