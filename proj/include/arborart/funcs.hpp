#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "arborart/geometry.hpp"

namespace arborart {

using RealFn = std::function<double(const Vec&)>;

// d / sum_j (1/alpha_j): the exponent that governs the attainable rate.
double harmonic_mean(const std::vector<double>& alpha);

// Piecewise quadratic test function
//   1 + (1/p) * {sum_j (-1)^j 1(x_j >= 1/2)} * {sum_j (x_j - 1/2)^2},
// discontinuous across the orthant boundaries at 1/2.
double sim_function(const Vec& x);

// Signed multi-pyramid bump on [-1,1]^d: sum over a in {0,1}^d of
//   (-1)^{sum a} * {1/2 - max_j |(-1)^{a_j} x_j - 1/2|} * prod_j 1(0 <= (-1)^{a_j} x_j <= 1).
// Integrates to zero, has unit-coordinate Lipschitz constant, range [-1/2,1/2].
double packing_kernel(const Vec& x);

// Classic variable-frequency demo signal (invented plumbing, no source formula).
double doppler(double x);

Vec project(const Vec& x, const std::vector<int>& S);

// (W_S^p h)(x) = h(x_S): constant along coordinates outside S.
RealFn sparse_embed(RealFn h, std::vector<int> S, int p);

// ---------------------------------------------------------------------------
// BumpFamily: separated perturbations used by the minimax lower-bound
// machinery. Each piece r carries a mesh with per-axis cell width
//   u_rj = len_j / ceil(len_j * delta^{-1/alpha_rj});
// a bump centered in cell `cell` evaluates to
//   (delta/4) * kernel((x - center) / (u_r/2)).
// The activation string omega switches individual bumps on.
// ---------------------------------------------------------------------------
class BumpFamily {
public:
  BumpFamily(const BoxPartition& pieces, std::vector<std::vector<double>> alphas,
             double delta);

  std::size_t cell_count() const { return total_cells_; }
  void set_omega(std::vector<std::uint8_t> bits);
  const std::vector<std::uint8_t>& omega() const { return omega_; }

  double operator()(const Vec& x) const;  // h_omega(x)

  int piece_count() const { return static_cast<int>(pieces_.size()); }
  const std::vector<double>& mesh(int piece) const { return mesh_[piece]; }
  const std::vector<int>& grid_dims(int piece) const { return dims_[piece]; }
  Vec cell_center(int piece, const std::vector<int>& cell_index) const;
  double delta() const { return delta_; }

private:
  std::vector<Box> pieces_;
  std::vector<std::vector<double>> alphas_;
  std::vector<std::vector<double>> mesh_;  // u_rj
  std::vector<std::vector<int>> dims_;     // cells per axis
  std::vector<std::size_t> offset_;        // cell index base per piece
  std::size_t total_cells_ = 0;
  double delta_;
  std::vector<std::uint8_t> omega_;
};

// ---------------------------------------------------------------------------
// PiecewiseAnisoSpec: a truth description — active coordinates S0, a tree
// partition of [0,1]^d with one anisotropic smoothness vector and one piece
// function per leaf, and a Hoelder coefficient lambda. All smoothness vectors
// must share the same harmonic mean.
// ---------------------------------------------------------------------------
class PiecewiseAnisoSpec {
public:
  PiecewiseAnisoSpec(int p, std::vector<int> S0, TreePartition partition,
                     std::vector<std::vector<double>> alphas,
                     std::vector<RealFn> pieces, double lambda,
                     std::vector<std::string> piece_tags = {});

  int d() const { return static_cast<int>(S0_.size()); }
  int p() const { return p_; }
  const std::vector<int>& S0() const { return S0_; }
  double lambda() const { return lambda_; }
  double abar() const { return abar_; }
  int piece_count() const { return static_cast<int>(alphas_.size()); }
  const std::vector<double>& alpha(int r) const { return alphas_[r]; }
  const TreePartition& partition() const { return partition_; }
  const std::vector<std::string>& piece_tags() const { return tags_; }

  // Extension to [0,1]^p: the same split tree with coordinates mapped
  // through S0 (boxes are full length off the active set).
  TreePartition extended_partition() const;

  double eval_active(const Vec& x_d) const;  // x in [0,1]^d
  double f0(const Vec& x_p) const;           // x in [0,1]^p
  // piece r's function, regardless of which box x falls in
  double eval_piece(int r, const Vec& x_d) const { return pieces_[r](x_d); }

  // piece index (leaf order) containing an active-space point
  int piece_of(const Vec& x_d) const;

  std::string to_text() const;
  static PiecewiseAnisoSpec from_text(const std::string& text);
  static PiecewiseAnisoSpec load(const std::string& path);
  void save(const std::string& path) const;

  // Built-in truths -------------------------------------------------------
  // single smooth piece sum_j c_j x_j^{e_j} on [0,1]^d embedded in [0,1]^p
  static PiecewiseAnisoSpec power(int p, std::vector<int> S0, Vec coef, Vec expo,
                                  double lambda);
  // the 2^p-orthant piecewise quadratic above (alphas all ones)
  static PiecewiseAnisoSpec orthants_sim(int p, double lambda);
  static PiecewiseAnisoSpec constant(int p, double value);

private:
  int p_;
  std::vector<int> S0_;
  TreePartition partition_;
  std::vector<std::vector<double>> alphas_;
  std::vector<RealFn> pieces_;
  double lambda_;
  double abar_;
  std::vector<std::string> tags_;
};

struct HolderReport {
  double max_ratio = 0;
  bool ok = false;
};

// Empirical Hoelder check: random pairs within each piece, ratio
// |h(x)-h(y)| / sum_j |x_j-y_j|^{alpha_rj} compared against lambda.
HolderReport validate_holder(const PiecewiseAnisoSpec& spec, int samples_per_box,
                             std::uint64_t seed);

}  // namespace arborart
