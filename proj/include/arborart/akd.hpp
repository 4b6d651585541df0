#pragma once

#include <optional>
#include <vector>

#include "arborart/splitnet.hpp"

namespace arborart {

// ---------------------------------------------------------------------------
// Anisotropic k-d tree: deterministic midpoint splitting where the split
// counts per coordinate balance l_j * alpha_j, so low-smoothness directions
// are cut more often. An analysis device, not an estimator.
// ---------------------------------------------------------------------------

struct MidpointSplit {
  Box left, right;
  double tau;
};

// Splits at the ceil(b~/2)-th (1-indexed) candidate; nullopt when the box
// interior holds no candidate.
std::optional<MidpointSplit> midpoint_split(const SplitNet& net, const Box& box, int j);

struct AkdResult {
  std::vector<int> counters;     // l_1..l_d, one entry per member of S
  int achieved_L = 0;            // sum of counters
  std::vector<int> coord_seq;    // chosen S-indices (0-based into S) per level
  TreePartition partition;       // 2^{achieved_L} leaves
};

// Runs the construction on `box`: per iteration pick the S-index j minimizing
// l_j*alpha_j (ties to the smallest j), midpoint-split EVERY current leaf
// along S[j], increment l_j. Stops at sum l_j == L, or before an iteration in
// which any leaf lacks a candidate in the chosen coordinate (levels are
// all-or-nothing so the leaf count stays a power of two).
AkdResult akd(const Box& box, const SplitNet& net, const std::vector<double>& alpha,
              int L, const std::vector<int>& S);

struct RegularityCheck {
  bool regular = false;
  AkdResult result;
};

// Regular-net verdict: the tree reaches depth L and every leaf satisfies
// len_j <= C * len(box)_j * 2^{-l_j} along each split coordinate.
RegularityCheck check_regular(const SplitNet& net, const Box& box,
                              const std::vector<double>& alpha, int L,
                              const std::vector<int>& S, double C = 3.0);

}  // namespace arborart
