#include "arborart/splitnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace arborart {

SplitNet SplitNet::regular_grid(int p, int m) {
  if (p < 1 || p > 64) throw std::invalid_argument("regular_grid: bad dimension");
  if (m < 1) throw std::invalid_argument("regular_grid: need at least one point per axis");
  double total = std::pow(static_cast<double>(m), p);
  if (total > 5e7) throw std::invalid_argument("regular_grid: m^p exceeds the memory budget");
  std::vector<double> axis(m);
  for (int i = 0; i < m; ++i) axis[i] = (i + 0.5) / m;

  SplitNet net;
  net.axes_.assign(p, axis);
  std::size_t n = static_cast<std::size_t>(total);
  net.points_.reserve(n);
  std::vector<int> idx(p, 0);
  for (std::size_t c = 0; c < n; ++c) {
    Vec x(p);
    for (int j = 0; j < p; ++j) x[j] = axis[idx[j]];
    net.points_.push_back(std::move(x));
    for (int j = p - 1; j >= 0; --j) {
      if (++idx[j] < m) break;
      idx[j] = 0;
    }
  }
  return net;
}

SplitNet SplitNet::from_points(std::vector<Vec> points) {
  if (points.empty()) throw std::invalid_argument("from_points: empty point set");
  int p = static_cast<int>(points.front().size());
  if (p < 1 || p > 64) throw std::invalid_argument("from_points: bad dimension");
  SplitNet net;
  net.axes_.assign(p, {});
  for (const auto& x : points) {
    if (static_cast<int>(x.size()) != p)
      throw std::invalid_argument("from_points: inconsistent dimensions");
    for (int j = 0; j < p; ++j) {
      if (x[j] < 0.0 || x[j] > 1.0)
        throw std::invalid_argument("from_points: coordinate outside [0,1]");
      net.axes_[j].push_back(x[j]);
    }
  }
  for (auto& axis : net.axes_) {
    std::sort(axis.begin(), axis.end());
    axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
  }
  net.points_ = std::move(points);
  return net;
}

SplitNet SplitNet::from_axis_values(std::vector<std::vector<double>> axes) {
  if (axes.empty() || axes.size() > 64) throw std::invalid_argument("from_axis_values: bad dimension");
  SplitNet net;
  for (auto& axis : axes) {
    for (double v : axis)
      if (v < 0.0 || v > 1.0)
        throw std::invalid_argument("from_axis_values: value outside [0,1]");
    std::sort(axis.begin(), axis.end());
    axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
  }
  net.axes_ = std::move(axes);
  return net;
}

double SplitNet::point_count() const {
  if (has_points()) return static_cast<double>(points_.size());
  double n = 1;
  for (const auto& axis : axes_) n *= static_cast<double>(axis.size());
  return n;
}

std::pair<int, int> SplitNet::candidate_range(const Box& box, int j) const {
  if (j < 0 || j >= dim()) throw std::invalid_argument("candidate_range: bad coordinate");
  const auto& axis = axes_[j];
  // strictly inside the open interval: lo < z < hi
  auto first = std::upper_bound(axis.begin(), axis.end(), box.lo[j]);
  auto last = std::lower_bound(axis.begin(), axis.end(), box.hi[j]);
  int a = static_cast<int>(first - axis.begin());
  int b = static_cast<int>(last - axis.begin());
  return {a, std::max(a, b)};
}

int SplitNet::candidate_count(const Box& box, int j) const {
  auto [a, b] = candidate_range(box, j);
  return b - a;
}

std::vector<double> SplitNet::candidates_in(const Box& box, int j) const {
  auto [a, b] = candidate_range(box, j);
  return {axes_[j].begin() + a, axes_[j].begin() + b};
}

double SplitNet::candidate_at(const Box& box, int j, int k) const {
  auto [a, b] = candidate_range(box, j);
  if (k < 1 || k > b - a) throw std::out_of_range("candidate_at: index outside range");
  return axes_[j][a + k - 1];
}

std::optional<double> SplitNet::snap_nearest(const Box& box, int j, double x) const {
  auto [a, b] = candidate_range(box, j);
  if (a == b) return std::nullopt;
  const auto& axis = axes_[j];
  auto it = std::lower_bound(axis.begin() + a, axis.begin() + b, x);
  if (it == axis.begin() + b) return axis[b - 1];
  if (it == axis.begin() + a) return axis[a];
  double above = *it, below = *(it - 1);
  // ties go to the smaller value
  return (x - below <= above - x) ? below : above;
}

std::optional<double> SplitNet::snap_floor(const Box& box, int j, double x) const {
  auto [a, b] = candidate_range(box, j);
  if (a == b) return std::nullopt;
  const auto& axis = axes_[j];
  auto it = std::upper_bound(axis.begin() + a, axis.begin() + b, x);
  if (it == axis.begin() + a) return axis[a];  // nothing at or below x
  return *(it - 1);
}

DenseCheck check_dense(const SplitNet& net, const TreePartition& target,
                       const std::vector<int>& S, double c_n, SnapMode mode) {
  if (!is_s_chopped(target.leaves(), S))
    throw std::invalid_argument("check_dense: target is not S-chopped");

  DenseCheck out;
  TreePartition snapped(target.root());
  // Replay the split history; node ids coincide because splits are replayed
  // in creation order.
  for (const auto& rec : target.splits()) {
    Box node_box = snapped.box_of(rec.node);
    std::optional<double> tau =
        mode == SnapMode::nearest ? net.snap_nearest(node_box, rec.coord, rec.tau)
                                  : net.snap_floor(node_box, rec.coord, rec.tau);
    if (!tau) {
      out.dense = false;
      out.achieved = std::numeric_limits<double>::infinity();
      return out;
    }
    snapped.split(rec.node, rec.coord, *tau);
  }
  out.achieved = partition_divergence(target.leaves(), snapped.leaves());
  out.dense = out.achieved <= c_n;
  out.snapped = std::move(snapped);
  return out;
}

}  // namespace arborart
