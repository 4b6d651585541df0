#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arborart/prior.hpp"

namespace arborart {

// ---------------------------------------------------------------------------
// Sum-of-trees function: f(x) = sum_t height of the leaf of tree t containing
// x. Heights are stored per node id; non-leaf entries are ignored.
// ---------------------------------------------------------------------------
struct Ensemble {
  std::vector<TreePartition> trees;
  std::vector<Vec> heights;

  int tree_count() const { return static_cast<int>(trees.size()); }
  std::size_t leaf_total() const;
  double eval(const Vec& x) const;
};

enum class ModelKind { reg_fixed, reg_random, density, classify };

struct ModelSpec {
  ModelKind kind = ModelKind::reg_fixed;
  // truncated-prior variants: heights confined to [-height_bound, height_bound]
  // and sigma^2 to [1/sigma2_bound, sigma2_bound] when the bounds are positive
  double height_bound = 0;
  double sigma2_bound = 0;
  int density_grid = 64;  // quadrature resolution for the density normalizer
  bool gaussian() const { return kind == ModelKind::reg_fixed; }
  bool has_sigma2() const {
    return kind == ModelKind::reg_fixed || kind == ModelKind::reg_random;
  }
  void validate() const;
};

struct Dataset {
  std::vector<Vec> X;
  Vec y;  // empty for density estimation; 0/1 labels for classification
  int p() const { return X.empty() ? 0 : static_cast<int>(X.front().size()); }
  long n() const { return static_cast<long>(X.size()); }
};

struct McmcConfig {
  long iterations = 2000;
  long burnin = 1000;
  int thin = 1;
  std::uint64_t seed = 1;
  bool uniform_eta = false;     // hold eta at 1/p instead of Dirichlet updates
  bool fixed_topology = false;  // disable structural moves
  bool likelihood_off = false;  // prior-only run
  bool fix_sigma2 = false;
  double sigma2_value = 1.0;  // used when fix_sigma2
  double p_grow = 0.4, p_prune = 0.4, p_change = 0.2;
  int keep_ensembles = 0;  // retain this many thinned full ensembles
};

struct MoveStats {
  long grow_acc = 0, grow_try = 0;
  long prune_acc = 0, prune_try = 0;
  long change_acc = 0, change_try = 0;
  long height_acc = 0, height_try = 0;
  long trunc_reject = 0;
  double height_step = 0;  // final random-walk step size
};

struct FitResult {
  Vec sigma2_draws;              // per kept draw (regression models)
  std::vector<Vec> eta_draws;    // per kept draw
  std::vector<int> leaf_totals;  // per kept draw
  std::vector<Vec> eval_draws;   // per kept draw: f at the evaluation points
  std::vector<Vec> eval_points;
  std::vector<Ensemble> kept;  // thinned ensembles, up to keep_ensembles
  MoveStats moves;
  long kept_draws = 0;
};

// Backfitting MCMC. Evaluation points default to the training covariates.
// `init` seeds the starting ensemble (root-only trees otherwise).
FitResult fit(const Dataset& data, const ModelSpec& model, const SplitNet& net,
              const PriorConfig& prior, const McmcConfig& mcmc,
              std::vector<Vec> eval_points = {}, const Ensemble* init = nullptr);

struct Prediction {
  Vec mean, lo90, hi90;
};

// Pointwise posterior mean and central 90% band of the stored draws.
Prediction predict(const std::vector<Vec>& eval_draws);

// integral of exp(f): exact leaf sum for one tree, midpoint grid otherwise
double density_normalizer(const Ensemble& e, int resolution);

// ---------------------------------------------------------------------------
// Joint-distribution sampler test: compare prior draws followed by data
// generation against chain updates interleaved with data regeneration. When
// the transition kernel is correct both produce the same joint law.
// ---------------------------------------------------------------------------
struct GewekeReport {
  std::vector<std::string> names;
  Vec z;
  Vec forward_mean, chain_mean;
  double max_abs_z = 0;
};

GewekeReport geweke_joint_test(ModelKind kind, const SplitNet& net,
                               const PriorConfig& prior, int n, long rounds,
                               std::uint64_t seed, bool inject_sigma2_bug = false);

}  // namespace arborart
