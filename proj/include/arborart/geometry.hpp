#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "arborart/util.hpp"

namespace arborart {

// Edge lengths within this tolerance of 1 count as full length (uncut).
inline constexpr double kEdgeTol = 1e-12;

// ---------------------------------------------------------------------------
// Box: axis-aligned hyper-rectangle inside [0,1]^p. Splits follow the
// {x_j <= tau} / {x_j > tau} dichotomy, so a face created as the right half
// of a split excludes its lower boundary; upper faces stay closed. Dimension
// is capped at 64 so the open-face flags fit in one mask.
// ---------------------------------------------------------------------------
struct Box {
  Vec lo, hi;
  std::uint64_t lo_open = 0;

  Box() = default;
  Box(Vec lo_, Vec hi_, std::uint64_t open_mask = 0);
  static Box unit(int p);

  int dim() const { return static_cast<int>(lo.size()); }
  double len(int j) const { return hi[j] - lo[j]; }
  double volume() const;
  bool lower_open(int j) const { return (lo_open >> j) & 1ull; }
  bool contains(const Vec& x) const;

  // Closed-hull intersection; nullopt when the hulls do not meet.
  std::optional<Box> intersect(const Box& other) const;

  // Children of the split {x_j <= tau} / {x_j > tau}.
  std::pair<Box, Box> split(int j, double tau) const;
};

struct BoxPartition {
  std::vector<Box> boxes;

  int dim() const { return boxes.empty() ? 0 : boxes.front().dim(); }
  std::size_t size() const { return boxes.size(); }
  double total_volume() const;
  // Disjointness up to the boundary convention and unit-cube coverage
  // within `vol_tol` on total volume.
  bool valid(double vol_tol = 1e-12) const;
};

// ---------------------------------------------------------------------------
// TreePartition: recursive binary splits of a root box. Node 0 is the root;
// each split appends its two children (left first). The split history is the
// partition's identity: snapping and prior evaluation both replay it.
// ---------------------------------------------------------------------------
struct SplitRec {
  int node;
  int coord;
  double tau;
};

class TreePartition {
public:
  explicit TreePartition(Box root);

  // Splits leaf `node`; tau must lie strictly inside the node's coord-range.
  // Returns the ids of the new (left, right) children.
  std::pair<int, int> split(int node, int coord, double tau);

  const Box& root() const { return root_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  bool is_leaf(int id) const { return nodes_[id].left < 0; }
  int depth(int id) const { return nodes_[id].depth; }
  int coord(int id) const { return nodes_[id].coord; }
  double tau(int id) const { return nodes_[id].tau; }
  int left(int id) const { return nodes_[id].left; }
  int right(int id) const { return nodes_[id].right; }
  int parent(int id) const { return nodes_[id].parent; }

  Box box_of(int id) const;
  int leaf_containing(const Vec& x) const;
  std::vector<int> leaf_ids() const;  // depth-first, left before right
  std::size_t leaf_count() const;
  BoxPartition leaves() const;
  const std::vector<SplitRec>& splits() const { return splits_; }

  std::string to_json() const;
  static TreePartition from_json(const std::string& text);

private:
  struct Node {
    int parent = -1, left = -1, right = -1, coord = -1;
    double tau = 0;
    int depth = 0;
  };
  Box root_;
  std::vector<Node> nodes_;
  std::vector<SplitRec> splits_;
};

// ---------------------------------------------------------------------------
// Predicates and divergence
// ---------------------------------------------------------------------------

// True iff every box has all S-edges shorter than 1 and all other edges of
// full length (coordinates are 0-based).
bool is_s_chopped(const BoxPartition& partition, const std::vector<int>& S);

// Coordinates along which some box is cut; equals S for an S-chopped input.
std::vector<int> chopped_coordinates(const BoxPartition& partition);

// Hausdorff distance between boxes under the sup-norm point metric:
// max_j max(|lo_aj - lo_bj|, |hi_aj - hi_bj|).
double hausdorff_box(const Box& a, const Box& b);

// Bottleneck assignment (min over pairings of the max Hausdorff distance).
// Throws when the partitions have different box counts.
double partition_divergence(const BoxPartition& a, const BoxPartition& b);

std::string to_json(const BoxPartition& partition);
BoxPartition partition_from_json(const std::string& text);

}  // namespace arborart
