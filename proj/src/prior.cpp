#include "arborart/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace arborart {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(const Vec& v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

int categorical(const Vec& w, Rng& rng) {
  double u = rng.uniform();
  double acc = 0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    acc += w[j];
    if (u < acc) return static_cast<int>(j);
  }
  return static_cast<int>(w.size()) - 1;
}

// log of the Dirichlet normalizer B(shapes) = prod Gamma / Gamma(sum)
double log_beta_fn(const Vec& shapes) {
  double s = 0, tot = 0;
  for (double a : shapes) {
    s += std::lgamma(a);
    tot += a;
  }
  return s - std::lgamma(tot);
}

}  // namespace

void PriorConfig::validate() const {
  if (T < 1) throw std::invalid_argument("prior: T >= 1 required");
  if (!(nu > 0 && nu < 0.5)) throw std::invalid_argument("prior: nu must lie in (0, 1/2)");
  if (!(zeta > 0)) throw std::invalid_argument("prior: zeta must be positive");
  if (!(xi > 1)) throw std::invalid_argument("prior: xi must exceed 1");
  if (!(ig_shape > 0 && ig_scale > 0))
    throw std::invalid_argument("prior: inverse-gamma parameters must be positive");
  if (max_depth < 0) throw std::invalid_argument("prior: max_depth >= 0 required");
}

Vec sample_eta(int p, const PriorConfig& config, Rng& rng) {
  if (p < 1) throw std::invalid_argument("sample_eta: p >= 1 required");
  config.validate();
  double shape = config.zeta / std::pow(double(p), config.xi);
  Vec lg(p);
  for (int j = 0; j < p; ++j) lg[j] = rng.log_gamma_draw(shape);
  double lse = logsumexp(lg);
  Vec eta(p);
  for (int j = 0; j < p; ++j) eta[j] = std::exp(lg[j] - lse);
  return eta;
}

TreePartition sample_tree(const Vec& eta, const PriorConfig& config, const SplitNet& net,
                          Rng& rng) {
  config.validate();
  int p = net.dim();
  if (static_cast<int>(eta.size()) != p)
    throw std::invalid_argument("sample_tree: eta size must match net dimension");
  TreePartition tree(Box::unit(p));
  struct Item {
    int node;
    Box box;
    int depth;
  };
  std::vector<Item> stack{{0, Box::unit(p), 0}};
  while (!stack.empty()) {
    Item it = std::move(stack.back());
    stack.pop_back();
    if (it.depth >= config.max_depth) continue;
    if (rng.uniform() >= std::pow(config.nu, it.depth + 1)) continue;
    int j = categorical(eta, rng);
    int b = net.candidate_count(it.box, j);
    if (b == 0) continue;  // dead coordinate: the node stays terminal
    double tau = net.candidate_at(it.box, j, rng.uniform_int(b) + 1);
    auto [l, r] = tree.split(it.node, j, tau);
    auto [bl, br] = it.box.split(j, tau);
    stack.push_back({r, std::move(br), it.depth + 1});
    stack.push_back({l, std::move(bl), it.depth + 1});
  }
  return tree;
}

namespace {

bool is_candidate(const SplitNet& net, const Box& box, int j, double tau) {
  auto [b, e] = net.candidate_range(box, j);
  const auto& vals = net.axis_values(j);
  auto it = std::lower_bound(vals.begin() + b, vals.begin() + e, tau - 1e-12);
  return it != vals.begin() + e && std::abs(*it - tau) <= 1e-12;
}

}  // namespace

double tree_log_prior(const TreePartition& tree, const Vec& eta,
                      const PriorConfig& config, const SplitNet& net) {
  config.validate();
  int p = net.dim();
  if (static_cast<int>(eta.size()) != p)
    throw std::invalid_argument("tree_log_prior: eta size must match net dimension");
  double lp = 0;
  for (int id = 0; id < tree.node_count(); ++id) {
    Box box = tree.box_of(id);
    int depth = tree.depth(id);
    double p_split = depth >= config.max_depth ? 0.0 : std::pow(config.nu, depth + 1);
    if (!tree.is_leaf(id)) {
      if (p_split == 0)
        throw std::invalid_argument("tree_log_prior: split past the depth guard");
      int j = tree.coord(id);
      int b = net.candidate_count(box, j);
      if (b == 0 || !is_candidate(net, box, j, tree.tau(id)))
        throw std::invalid_argument("tree_log_prior: split point is not a net candidate");
      lp += std::log(p_split) + std::log(eta[j]) - std::log(double(b));
    } else {
      double dead = 0;
      for (int j = 0; j < p; ++j)
        if (net.candidate_count(box, j) == 0) dead += eta[j];
      lp += std::log((1.0 - p_split) + p_split * dead);
    }
  }
  return lp;
}

std::vector<Vec> sample_heights(const std::vector<int>& leaf_counts,
                                const PriorConfig& config, Rng& rng) {
  config.validate();
  double sd = std::sqrt(config.height_var());
  std::vector<Vec> out;
  out.reserve(leaf_counts.size());
  for (int k : leaf_counts) {
    if (k < 1) throw std::invalid_argument("sample_heights: leaf counts must be positive");
    Vec h(k);
    for (int i = 0; i < k; ++i) h[i] = rng.normal(0.0, sd);
    out.push_back(std::move(h));
  }
  return out;
}

Vec eta_uniform_on(const std::vector<int>& S, int p) {
  if (S.empty()) throw std::invalid_argument("eta_uniform_on: S must be nonempty");
  Vec eta(p, 0.0);
  for (int j : S) {
    if (j < 0 || j >= p) throw std::invalid_argument("eta_uniform_on: coordinate out of range");
    eta[j] = 1.0 / S.size();
  }
  return eta;
}

// ---------------------------------------------------------------------------
// Concentration of the ensemble prior on a designated tree
// ---------------------------------------------------------------------------

ConcentrationReport check_prior_concentration(const TreePartition& that, long n, int p,
                                              int d, const PriorConfig& config,
                                              const Vec& eta_star, const SplitNet& net,
                                              long trials, std::uint64_t seed) {
  config.validate();
  if (n < 2 || p < 1 || d < 1 || trials < 1)
    throw std::invalid_argument("prior concentration: bad arguments");
  ConcentrationReport rep;
  rep.leaves = that.leaf_count();
  rep.tree_log_prior_single = tree_log_prior(that, eta_star, config, net);
  TreePartition rootonly(Box::unit(net.dim()));
  double companion = tree_log_prior(rootonly, eta_star, config, net);
  rep.ensemble_log_prior = rep.tree_log_prior_single + (config.T - 1) * companion;
  double yard = rep.leaves * std::log(double(n)) + d * std::log(double(p));
  rep.bound_at_C1 = -yard;
  rep.implied_C = std::max(0.0, -rep.ensemble_log_prior / yard);

  // eta-marginalized prior of the designated tree. Precompute the tree's
  // fixed structure so each draw only touches eta.
  struct LeafInfo {
    double base;         // 1 - nu^{l+1}
    double split_mass;   // nu^{l+1}
    std::vector<int> dead;
  };
  double fixed = 0;  // split-probability and candidate-count terms
  std::vector<std::pair<int, double>> internal;  // (coord, 0) pairs; eta term per draw
  std::vector<LeafInfo> leaves;
  Vec counts(p, 0.0);
  for (int id = 0; id < that.node_count(); ++id) {
    Box box = that.box_of(id);
    int depth = that.depth(id);
    double p_split = depth >= config.max_depth ? 0.0 : std::pow(config.nu, depth + 1);
    if (!that.is_leaf(id)) {
      int j = that.coord(id);
      fixed += std::log(p_split) - std::log(double(net.candidate_count(box, j)));
      internal.push_back({j, 0.0});
      counts[j] += 1.0;
    } else {
      LeafInfo li{1.0 - p_split, p_split, {}};
      for (int j = 0; j < p; ++j)
        if (net.candidate_count(box, j) == 0) li.dead.push_back(j);
      leaves.push_back(std::move(li));
    }
  }

  double a = config.zeta / std::pow(double(p), config.xi);
  Vec prior_shapes(p, a), boost_shapes(p, a);
  for (int j = 0; j < p; ++j) boost_shapes[j] += counts[j];
  double lb_prior = log_beta_fn(prior_shapes);
  double lb_boost = log_beta_fn(boost_shapes);

  Rng rng(seed);
  Vec lws(trials);
  for (long t = 0; t < trials; ++t) {
    bool boosted = rng.uniform() < 0.5;
    const Vec& shapes = boosted ? boost_shapes : prior_shapes;
    Vec lg(p);
    for (int j = 0; j < p; ++j) lg[j] = rng.log_gamma_draw(shapes[j]);
    double lse = logsumexp(lg);
    Vec log_eta(p);
    for (int j = 0; j < p; ++j) log_eta[j] = lg[j] - lse;

    // defensive-mixture weight: prior / (0.5 prior + 0.5 boost)
    double lr = lb_prior - lb_boost;  // ln(boost density / prior density)
    for (int j = 0; j < p; ++j) lr += counts[j] * log_eta[j];
    double lw = std::log(2.0) - std::log1p(std::exp(std::min(lr, 700.0)));

    double lp = fixed;
    for (auto& [j, unused] : internal) lp += log_eta[j];
    for (const auto& li : leaves) {
      double dead = 0;
      for (int j : li.dead) dead += std::exp(log_eta[j]);
      lp += std::log(li.base + li.split_mass * dead);
    }
    lws[t] = lw + lp;
  }
  double lse = logsumexp(lws);
  rep.mc_marginal_log = lse - std::log(double(trials));
  // relative error of the mean on the linear scale
  double m = rep.mc_marginal_log;
  double var = 0;
  for (double lw : lws) {
    double r = std::exp(lw - m) - 1.0;
    var += r * r;
  }
  var /= trials;
  rep.mc_marginal_se_log = std::sqrt(var / trials);
  return rep;
}

// ---------------------------------------------------------------------------
// Simplex concentration of the sparse Dirichlet weights
// ---------------------------------------------------------------------------

namespace {

struct IsAccumulator {
  double sum_w = 0, sum_w2 = 0;
  long hits = 0;
  double w_max = 0;
  void add(double w, bool hit) {
    if (hit) {
      sum_w += w;
      sum_w2 += w * w;
      ++hits;
    }
    w_max = std::max(w_max, w);
  }
  double mean(long trials) const { return sum_w / trials; }
  double se(long trials) const {
    double m = mean(trials);
    double var = std::max(0.0, sum_w2 / trials - m * m);
    return std::sqrt(var / trials);
  }
};

double mixture_weight(double log_ratio_boost_over_prior) {
  // prior / (0.5 prior + 0.5 boost) = 2 / (1 + boost/prior)
  double lr = log_ratio_boost_over_prior;
  if (lr > 700) return 0.0;
  return 2.0 / (1.0 + std::exp(lr));
}

}  // namespace

DirichletLemmaReport check_dirichlet_lemma(int p, int s, double eps,
                                           const PriorConfig& config, long trials,
                                           Rng& rng) {
  config.validate();
  if (s < 1 || s > p) throw std::invalid_argument("dirichlet lemma: need 1 <= s <= p");
  if (!(eps > 0 && eps <= 2)) throw std::invalid_argument("dirichlet lemma: eps in (0,2]");
  if (trials < 1) throw std::invalid_argument("dirichlet lemma: trials >= 1");

  DirichletLemmaReport rep;
  rep.trials = trials;
  double a = config.zeta / std::pow(double(p), config.xi);
  const double boost_c = 3.0;

  // --- P1: mass near eta* (uniform on the first s coordinates). Off-target
  // coordinates only matter through their total, which is Gamma((p-s)a).
  {
    IsAccumulator acc;
    // grouped representation: (eta_1..eta_s, off total) is Dirichlet with the
    // off block aggregated to one shape-(p-s)a component (absent when s = p)
    double off_term = p > s ? std::lgamma((p - s) * a) : 0.0;
    double lb_prior = s * std::lgamma(a) + off_term - std::lgamma(p * a);
    double lb_boost = s * std::lgamma(boost_c) + off_term -
                      std::lgamma(s * boost_c + (p - s) * a);
    for (long t = 0; t < trials; ++t) {
      bool boosted = rng.uniform() < 0.5;
      double shape_s = boosted ? boost_c : a;
      Vec lg(s + 1);
      for (int j = 0; j < s; ++j) lg[j] = rng.log_gamma_draw(shape_s);
      bool has_off = p > s;
      lg[s] = has_off ? rng.log_gamma_draw((p - s) * a) : kNegInf;
      double lse = logsumexp(lg);
      double l1 = 0;
      double lr = lb_prior - lb_boost;
      for (int j = 0; j < s; ++j) {
        double le = lg[j] - lse;
        l1 += std::abs(std::exp(le) - 1.0 / s);
        lr += (boost_c - a) * le;
      }
      if (has_off) l1 += std::exp(lg[s] - lse);
      acc.add(mixture_weight(lr), l1 <= eps);
    }
    rep.p1 = acc.mean(trials);
    rep.p1_se = acc.se(trials);
    rep.p1_zero_hits = acc.hits == 0;
    rep.p1_upper = 3.0 * std::max(1.0, acc.w_max) / trials;
    double denom = config.xi * s * std::log(p / eps);
    double pv = rep.p1_zero_hits ? rep.p1_upper : rep.p1;
    rep.c1 = denom > 0 ? std::max(0.0, -std::log(pv) / denom) : 0.0;
  }

  // --- P2: every size-s set misses at least eps of the mass, i.e. the s
  // largest coordinates sum to at most 1 - eps. Proposal spreads mass over a
  // random m-subset; its density needs the degree-m elementary symmetric
  // polynomial of eta^{c-a}.
  {
    double spread = std::ceil(s / std::max(1e-9, 1.0 - eps)) + 1.0;
    int m = spread >= p ? p : static_cast<int>(spread);
    IsAccumulator acc;
    Vec prior_shapes(p, a);
    double lb_prior = log_beta_fn(prior_shapes);
    Vec q_shapes(p, a);
    for (int j = 0; j < m; ++j) q_shapes[j] = boost_c;
    double lb_boost = log_beta_fn(q_shapes);
    double log_choose =
        std::lgamma(p + 1.0) - std::lgamma(m + 1.0) - std::lgamma(p - m + 1.0);

    std::vector<int> idx(p);
    std::iota(idx.begin(), idx.end(), 0);
    Vec lg(p), log_eta(p), esp(m + 1), top(p);
    for (long t = 0; t < trials; ++t) {
      bool boosted = rng.uniform() < 0.5;
      if (boosted) {  // boost a uniformly random m-subset
        for (int j = 0; j < m; ++j) std::swap(idx[j], idx[j + rng.uniform_int(p - j)]);
        for (int j = 0; j < p; ++j) lg[j] = rng.log_gamma_draw(a);
        for (int j = 0; j < m; ++j) lg[idx[j]] = rng.log_gamma_draw(boost_c);
      } else {
        for (int j = 0; j < p; ++j) lg[j] = rng.log_gamma_draw(a);
      }
      double lse = logsumexp(lg);
      double lmax = kNegInf;
      for (int j = 0; j < p; ++j) {
        log_eta[j] = lg[j] - lse;
        lmax = std::max(lmax, log_eta[j]);
      }
      // e_m of eta^{c-a}, factored by the largest entry for stability
      std::fill(esp.begin(), esp.end(), 0.0);
      esp[0] = 1.0;
      for (int j = 0; j < p; ++j) {
        double tj = std::exp((boost_c - a) * (log_eta[j] - lmax));
        for (int k = m; k >= 1; --k) esp[k] += tj * esp[k - 1];
      }
      double log_em = esp[m] > 0 ? std::log(esp[m]) + m * (boost_c - a) * lmax : kNegInf;
      double lr = lb_prior - lb_boost + log_em - log_choose;

      for (int j = 0; j < p; ++j) top[j] = log_eta[j];
      std::nth_element(top.begin(), top.begin() + (s - 1), top.end(),
                       std::greater<double>());
      double top_sum = 0;
      for (int j = 0; j < s; ++j) top_sum += std::exp(top[j]);
      acc.add(mixture_weight(lr), top_sum <= 1.0 - eps);
    }
    rep.p2 = acc.mean(trials);
    rep.p2_se = acc.se(trials);
    rep.p2_zero_hits = acc.hits == 0;
    rep.p2_upper = 3.0 * std::max(1.0, acc.w_max) / trials;
    double denom = (config.xi - 1.0) * s * std::log(double(p));
    double pv = rep.p2_zero_hits ? rep.p2_upper : rep.p2;
    rep.c2 = denom > 0 ? std::max(0.0, (-std::log(pv) - std::log(eps)) / denom) : 0.0;
  }
  return rep;
}

}  // namespace arborart
