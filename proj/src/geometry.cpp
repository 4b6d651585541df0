#include "arborart/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace arborart {

Box::Box(Vec lo_, Vec hi_, std::uint64_t open_mask)
    : lo(std::move(lo_)), hi(std::move(hi_)), lo_open(open_mask) {
  if (lo.size() != hi.size()) throw std::invalid_argument("box: lo/hi size mismatch");
  if (lo.size() > 64) throw std::invalid_argument("box: dimension above 64");
  for (std::size_t j = 0; j < lo.size(); ++j) {
    if (!(lo[j] <= hi[j])) throw std::invalid_argument("box: lo > hi");
    if (lo[j] < -kEdgeTol || hi[j] > 1.0 + kEdgeTol)
      throw std::invalid_argument("box: outside unit cube");
  }
}

Box Box::unit(int p) {
  return Box(Vec(p, 0.0), Vec(p, 1.0));
}

double Box::volume() const {
  double v = 1.0;
  for (int j = 0; j < dim(); ++j) v *= len(j);
  return v;
}

bool Box::contains(const Vec& x) const {
  if (static_cast<int>(x.size()) != dim()) return false;
  for (int j = 0; j < dim(); ++j) {
    if (lower_open(j) ? x[j] <= lo[j] : x[j] < lo[j]) return false;
    if (x[j] > hi[j]) return false;
  }
  return true;
}

std::optional<Box> Box::intersect(const Box& other) const {
  if (other.dim() != dim()) throw std::invalid_argument("intersect: dimension mismatch");
  Vec l(dim()), h(dim());
  std::uint64_t open = 0;
  for (int j = 0; j < dim(); ++j) {
    l[j] = std::max(lo[j], other.lo[j]);
    h[j] = std::min(hi[j], other.hi[j]);
    if (l[j] > h[j]) return std::nullopt;
    bool o = (l[j] == lo[j] && lower_open(j)) || (l[j] == other.lo[j] && other.lower_open(j));
    if (o) open |= 1ull << j;
  }
  return Box(std::move(l), std::move(h), open);
}

std::pair<Box, Box> Box::split(int j, double tau) const {
  if (j < 0 || j >= dim()) throw std::invalid_argument("split: coordinate out of range");
  if (!(tau > lo[j] && tau < hi[j]))
    throw std::invalid_argument("split: tau outside the open coordinate range");
  Box left = *this, right = *this;
  left.hi[j] = tau;
  right.lo[j] = tau;
  right.lo_open |= 1ull << j;
  return {left, right};
}

double BoxPartition::total_volume() const {
  double v = 0;
  for (const auto& b : boxes) v += b.volume();
  return v;
}

bool BoxPartition::valid(double vol_tol) const {
  if (boxes.empty()) return false;
  int p = dim();
  for (const auto& b : boxes)
    if (b.dim() != p) return false;
  if (std::abs(total_volume() - 1.0) > vol_tol) return false;
  for (std::size_t r = 0; r < boxes.size(); ++r)
    for (std::size_t s = r + 1; s < boxes.size(); ++s) {
      // positive-volume overlap check; shared faces are fine
      double overlap = 1.0;
      for (int j = 0; j < p && overlap > 0; ++j) {
        double l = std::max(boxes[r].lo[j], boxes[s].lo[j]);
        double h = std::min(boxes[r].hi[j], boxes[s].hi[j]);
        overlap *= std::max(0.0, h - l);
      }
      if (overlap > vol_tol) return false;
    }
  return true;
}

TreePartition::TreePartition(Box root) : root_(std::move(root)) {
  nodes_.push_back(Node{});
}

std::pair<int, int> TreePartition::split(int node, int coord, double tau) {
  if (node < 0 || node >= node_count()) throw std::invalid_argument("split: bad node id");
  if (!is_leaf(node)) throw std::invalid_argument("split: node already split");
  Box b = box_of(node);
  if (coord < 0 || coord >= b.dim()) throw std::invalid_argument("split: coordinate out of range");
  if (!(tau > b.lo[coord] && tau < b.hi[coord]))
    throw std::invalid_argument("split: tau outside the node's open coordinate range");
  int l = node_count(), r = l + 1;
  nodes_[node].left = l;
  nodes_[node].right = r;
  nodes_[node].coord = coord;
  nodes_[node].tau = tau;
  Node child;
  child.parent = node;
  child.depth = nodes_[node].depth + 1;
  nodes_.push_back(child);
  nodes_.push_back(child);
  splits_.push_back(SplitRec{node, coord, tau});
  return {l, r};
}

Box TreePartition::box_of(int id) const {
  std::vector<int> path;  // ids from root down to `id`
  for (int v = id; v >= 0; v = nodes_[v].parent) path.push_back(v);
  std::reverse(path.begin(), path.end());
  Box b = root_;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Node& n = nodes_[path[i]];
    auto [lft, rgt] = b.split(n.coord, n.tau);
    b = (path[i + 1] == n.left) ? lft : rgt;
  }
  return b;
}

int TreePartition::leaf_containing(const Vec& x) const {
  if (!root_.contains(x)) return -1;
  int v = 0;
  while (!is_leaf(v)) v = (x[nodes_[v].coord] <= nodes_[v].tau) ? nodes_[v].left : nodes_[v].right;
  return v;
}

std::vector<int> TreePartition::leaf_ids() const {
  std::vector<int> out, stack{0};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    if (is_leaf(v)) {
      out.push_back(v);
    } else {
      stack.push_back(nodes_[v].right);  // left pops first
      stack.push_back(nodes_[v].left);
    }
  }
  return out;
}

std::size_t TreePartition::leaf_count() const {
  return splits_.size() + 1;
}

BoxPartition TreePartition::leaves() const {
  BoxPartition p;
  for (int id : leaf_ids()) p.boxes.push_back(box_of(id));
  return p;
}

bool is_s_chopped(const BoxPartition& partition, const std::vector<int>& S) {
  std::uint64_t mask = 0;
  for (int j : S) {
    if (j < 0 || j >= partition.dim()) throw std::invalid_argument("is_s_chopped: bad coordinate");
    mask |= 1ull << j;
  }
  for (const auto& b : partition.boxes)
    for (int j = 0; j < b.dim(); ++j) {
      bool full = b.len(j) >= 1.0 - kEdgeTol;
      if ((mask >> j) & 1ull) {
        if (full) return false;  // max_{j in S} len < 1
      } else {
        if (!full) return false;  // min_{j not in S} len = 1
      }
    }
  return true;
}

std::vector<int> chopped_coordinates(const BoxPartition& partition) {
  std::vector<int> out;
  for (int j = 0; j < partition.dim(); ++j)
    for (const auto& b : partition.boxes)
      if (b.len(j) < 1.0 - kEdgeTol) {
        out.push_back(j);
        break;
      }
  return out;
}

double hausdorff_box(const Box& a, const Box& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("hausdorff_box: dimension mismatch");
  double d = 0;
  for (int j = 0; j < a.dim(); ++j) {
    d = std::max(d, std::abs(a.lo[j] - b.lo[j]));
    d = std::max(d, std::abs(a.hi[j] - b.hi[j]));
  }
  return d;
}

namespace {

// Perfect matching on the bipartite graph {(r,c): cost[r][c] <= thr}.
bool matching_feasible(const std::vector<std::vector<double>>& cost, double thr) {
  int n = static_cast<int>(cost.size());
  std::vector<int> match_col(n, -1);
  std::vector<char> used;
  std::function<bool(int)> augment = [&](int r) -> bool {
    for (int c = 0; c < n; ++c) {
      if (cost[r][c] > thr || used[c]) continue;
      used[c] = 1;
      if (match_col[c] < 0 || augment(match_col[c])) {
        match_col[c] = r;
        return true;
      }
    }
    return false;
  };
  for (int r = 0; r < n; ++r) {
    used.assign(n, 0);
    if (!augment(r)) return false;
  }
  return true;
}

}  // namespace

double partition_divergence(const BoxPartition& a, const BoxPartition& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("partition_divergence: unequal box counts");
  int n = static_cast<int>(a.size());
  if (n == 0) throw std::invalid_argument("partition_divergence: empty partitions");
  std::vector<std::vector<double>> cost(n, std::vector<double>(n));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      cost[r][c] = hausdorff_box(a.boxes[r], b.boxes[c]);
      values.push_back(cost[r][c]);
    }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  // binary search over the distinct cost values for the bottleneck level
  int lo = 0, hi = static_cast<int>(values.size()) - 1;
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (matching_feasible(cost, values[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return values[lo];
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json box_to_json(const Box& b) {
  nlohmann::json j;
  j["lo"] = b.lo;
  j["hi"] = b.hi;
  if (b.lo_open) j["lo_open"] = b.lo_open;
  return j;
}

Box box_from_json(const nlohmann::json& j) {
  return Box(j.at("lo").get<Vec>(), j.at("hi").get<Vec>(),
             j.value("lo_open", std::uint64_t{0}));
}

}  // namespace

std::string to_json(const BoxPartition& partition) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& b : partition.boxes) j.push_back(box_to_json(b));
  return j.dump();
}

BoxPartition partition_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  BoxPartition p;
  for (const auto& jb : j) p.boxes.push_back(box_from_json(jb));
  return p;
}

std::string TreePartition::to_json() const {
  nlohmann::json j;
  j["root"] = box_to_json(root_);
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& s : splits_)
    recs.push_back({{"node", s.node}, {"coord", s.coord}, {"tau", s.tau}});
  j["splits"] = recs;
  return j.dump();
}

TreePartition TreePartition::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  TreePartition t(box_from_json(j.at("root")));
  for (const auto& rec : j.at("splits"))
    t.split(rec.at("node").get<int>(), rec.at("coord").get<int>(), rec.at("tau").get<double>());
  return t;
}

}  // namespace arborart
