#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arborart/splitnet.hpp"
#include "arborart/util.hpp"

namespace arborart {

// ---------------------------------------------------------------------------
// Prior over ensembles: T trees, each generated top-down (a depth-l node
// splits with probability nu^{l+1}), split coordinates drawn from a sparse
// Dirichlet weight vector eta ~ Dir(zeta/p^xi, ...), split points uniform
// over the in-box net candidates, heights N(0, 1/T), sigma^2 inverse-gamma.
// ---------------------------------------------------------------------------
struct PriorConfig {
  int T = 200;
  double nu = 0.25;       // must stay below 1/2
  double zeta = 1.0;
  double xi = 2.0;        // must exceed 1
  double ig_shape = 3.0;  // sigma^2 ~ InvGamma(shape, scale)
  double ig_scale = 1.0;
  int max_depth = 32;     // generative guard; nodes this deep never split

  double height_var() const { return 1.0 / T; }
  void validate() const;
};

// Dirichlet draw with all concentrations zeta/p^xi; log-space gammas keep
// tiny shapes from underflowing.
Vec sample_eta(int p, const PriorConfig& config, Rng& rng);

// Top-down tree draw on [0,1]^p (p = net dimension). A node whose drawn
// coordinate has no in-box candidate becomes terminal.
TreePartition sample_tree(const Vec& eta, const PriorConfig& config,
                          const SplitNet& net, Rng& rng);

// Exact log-density of sample_tree. Internal node at depth l contributes
// ln nu^{l+1} + ln eta_j + ln(1/b~_j); a leaf contributes
// ln[(1 - nu^{l+1}) + nu^{l+1} * sum of eta_j over candidate-free coordinates]
// (the second term is the mass of drawing a dead coordinate), so that the
// density matches the sampler exactly and sums to one. Depth-guard leaves
// contribute zero. Throws when a split point is not a net candidate.
double tree_log_prior(const TreePartition& tree, const Vec& eta,
                      const PriorConfig& config, const SplitNet& net);

// Independent N(0, 1/T) heights, one vector per requested leaf count.
std::vector<Vec> sample_heights(const std::vector<int>& leaf_counts,
                                const PriorConfig& config, Rng& rng);

// eta with mass 1/|S| on S and 0 elsewhere.
Vec eta_uniform_on(const std::vector<int>& S, int p);

// ---------------------------------------------------------------------------
// Prior mass diagnostics
// ---------------------------------------------------------------------------

// How much prior mass the ensemble puts on one designated tree (companions
// root-only), against the -C(K ln n + d ln p) yardstick.
struct ConcentrationReport {
  double tree_log_prior_single = 0;  // designated tree, conditional on eta*
  double ensemble_log_prior = 0;     // + (T-1) root-only companions
  double bound_at_C1 = 0;            // -(K ln n + d ln p)
  double implied_C = 0;              // smallest C making ensemble_log_prior >= -C(...)
  double mc_marginal_log = 0;        // ln of the eta-marginalized tree prior
  double mc_marginal_se_log = 0;     // relative (log-scale) standard error
  std::size_t leaves = 0;
};

ConcentrationReport check_prior_concentration(const TreePartition& that, long n, int p,
                                              int d, const PriorConfig& config,
                                              const Vec& eta_star, const SplitNet& net,
                                              long trials = 20000,
                                              std::uint64_t seed = 7);

// Two-sided simplex concentration checks for the sparse Dirichlet weights:
// mass near a uniform-on-s target and the tail of the best size-s coverage.
// Importance sampling (defensive mixture against the prior) reaches the tiny
// corners; implied constants are reported for both bounds.
struct DirichletLemmaReport {
  long trials = 0;
  // P1 = P(||eta - eta*||_1 <= eps), eta* uniform on the first s coordinates
  double p1 = 0, p1_se = 0;
  double c1 = 0;  // smallest C with P1 >= exp{-C xi s ln(p/eps)}
  bool p1_zero_hits = false;
  double p1_upper = 0;  // one-sided 95% bound when nothing hit
  // P2 = P(min over |S|=s of sum_{j not in S} eta_j >= eps)
  double p2 = 0, p2_se = 0;
  double c2 = 0;  // largest C with P2 <= exp{-C(xi-1)s ln p - ln eps}
  bool p2_zero_hits = false;
  double p2_upper = 0;
};

DirichletLemmaReport check_dirichlet_lemma(int p, int s, double eps,
                                           const PriorConfig& config, long trials,
                                           Rng& rng);

}  // namespace arborart
