#include "arborart/akd.hpp"

#include <cmath>
#include <stdexcept>

namespace arborart {

std::optional<MidpointSplit> midpoint_split(const SplitNet& net, const Box& box, int j) {
  int b = net.candidate_count(box, j);
  if (b < 1) return std::nullopt;
  double tau = net.candidate_at(box, j, (b + 1) / 2);  // ceil(b/2), 1-indexed
  auto [left, right] = box.split(j, tau);
  return MidpointSplit{std::move(left), std::move(right), tau};
}

AkdResult akd(const Box& box, const SplitNet& net, const std::vector<double>& alpha,
              int L, const std::vector<int>& S) {
  int d = static_cast<int>(alpha.size());
  if (d == 0 || static_cast<int>(S.size()) != d)
    throw std::invalid_argument("akd: |S| must equal the length of alpha");
  for (double a : alpha)
    if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("akd: alpha entries must lie in (0,1]");
  for (int j : S)
    if (j < 0 || j >= box.dim()) throw std::invalid_argument("akd: S coordinate out of range");
  if (L < 0) throw std::invalid_argument("akd: negative depth budget");

  AkdResult res{std::vector<int>(d, 0), 0, {}, TreePartition(box)};
  std::vector<int> frontier{0};  // current leaves, all at the same level

  while (res.achieved_L < L) {
    // coordinate with the smallest l_j * alpha_j, ties to the smallest index
    int pick = 0;
    for (int j = 1; j < d; ++j)
      if (res.counters[j] * alpha[j] < res.counters[pick] * alpha[pick]) pick = j;
    int coord = S[pick];

    // all-or-nothing level: stop before splitting anything if any leaf is dry
    bool available = true;
    std::vector<double> taus(frontier.size());
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      Box b = res.partition.box_of(frontier[i]);
      int cnt = net.candidate_count(b, coord);
      if (cnt < 1) {
        available = false;
        break;
      }
      taus[i] = net.candidate_at(b, coord, (cnt + 1) / 2);
    }
    if (!available) break;

    std::vector<int> next;
    next.reserve(frontier.size() * 2);
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      auto [l, r] = res.partition.split(frontier[i], coord, taus[i]);
      next.push_back(l);
      next.push_back(r);
    }
    frontier = std::move(next);
    res.counters[pick] += 1;
    res.achieved_L += 1;
    res.coord_seq.push_back(pick);
  }
  return res;
}

RegularityCheck check_regular(const SplitNet& net, const Box& box,
                              const std::vector<double>& alpha, int L,
                              const std::vector<int>& S, double C) {
  RegularityCheck out{false, akd(box, net, alpha, L, S)};
  if (out.result.achieved_L != L) return out;
  int d = static_cast<int>(S.size());
  for (int id : out.result.partition.leaf_ids()) {
    Box leaf = out.result.partition.box_of(id);
    for (int j = 0; j < d; ++j) {
      double bound = C * box.len(S[j]) * std::pow(2.0, -out.result.counters[j]);
      if (leaf.len(S[j]) > bound) return out;
    }
  }
  out.regular = true;
  return out;
}

}  // namespace arborart
