#pragma once

#include <optional>
#include <vector>

#include "arborart/geometry.hpp"

namespace arborart {

// ---------------------------------------------------------------------------
// SplitNet: the admissible split locations. Projections [Z]_j are kept sorted
// and deduplicated per coordinate. A net either carries an explicit point
// list (fixed designs, materialized grids) or is a pure product of per-axis
// value lists, which keeps huge regular grids cheap: every split query only
// touches projections.
// ---------------------------------------------------------------------------
class SplitNet {
public:
  // Regular grid {(i-1/2)/m : i=1..m}^p with all m^p points materialized.
  static SplitNet regular_grid(int p, int m);
  // Exact point set; duplicate coordinates collapse in the projections.
  static SplitNet from_points(std::vector<Vec> points);
  // Product net from arbitrary per-axis value lists (no explicit points).
  static SplitNet from_axis_values(std::vector<std::vector<double>> axes);

  int dim() const { return static_cast<int>(axes_.size()); }
  bool has_points() const { return !points_.empty(); }
  const std::vector<Vec>& points() const { return points_; }
  // b_n; for product nets the implied count prod_j b_j.
  double point_count() const;

  const std::vector<double>& axis_values(int j) const { return axes_[j]; }
  int axis_count(int j) const { return static_cast<int>(axes_[j].size()); }

  // Candidates strictly inside the open interval (box.lo_j, box.hi_j):
  // half-open index range into axis_values(j).
  std::pair<int, int> candidate_range(const Box& box, int j) const;
  int candidate_count(const Box& box, int j) const;  // b~_j(Z, box)
  std::vector<double> candidates_in(const Box& box, int j) const;
  // k-th (1-indexed) candidate inside the box; throws when out of range.
  double candidate_at(const Box& box, int j, int k) const;

  // Nearest candidate to x inside the box interior, ties to the smaller
  // value; nullopt when no candidate exists.
  std::optional<double> snap_nearest(const Box& box, int j, double x) const;
  // Largest candidate <= x (falls back to the smallest one above when x
  // precedes all candidates); keeps net points out of the mismatch strip.
  std::optional<double> snap_floor(const Box& box, int j, double x) const;

private:
  std::vector<std::vector<double>> axes_;
  std::vector<Vec> points_;
};

enum class SnapMode { nearest, floor };

struct DenseCheck {
  bool dense = false;                     // achieved <= c_n
  std::optional<TreePartition> snapped;   // empty when a split had no candidate
  double achieved = 0;                    // divergence of target vs snapped leaves
};

// Replays the target's split history with every split point replaced by a
// net candidate inside the (already snapped) node box. Verifies the
// constructive upper bound of the density definition.
DenseCheck check_dense(const SplitNet& net, const TreePartition& target,
                       const std::vector<int>& S, double c_n,
                       SnapMode mode = SnapMode::nearest);

}  // namespace arborart
