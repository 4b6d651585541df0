#include "arborart/funcs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace arborart {

double harmonic_mean(const std::vector<double>& alpha) {
  if (alpha.empty()) throw std::invalid_argument("harmonic_mean: empty vector");
  double inv = 0;
  for (double a : alpha) {
    if (!(a > 0.0 && a <= 1.0))
      throw std::invalid_argument("harmonic_mean: entries must lie in (0,1]");
    inv += 1.0 / a;
  }
  return static_cast<double>(alpha.size()) / inv;
}

double sim_function(const Vec& x) {
  int p = static_cast<int>(x.size());
  if (p < 1) throw std::invalid_argument("sim_function: empty input");
  double sign = 0, quad = 0;
  for (int j = 0; j < p; ++j) {
    // (-1)^j with 1-based j: coordinate 1 contributes -1
    sign += ((j + 1) % 2 == 1 ? -1.0 : 1.0) * (x[j] >= 0.5 ? 1.0 : 0.0);
    quad += (x[j] - 0.5) * (x[j] - 0.5);
  }
  return 1.0 + sign * quad / p;
}

double packing_kernel(const Vec& x) {
  int d = static_cast<int>(x.size());
  if (d < 1) throw std::invalid_argument("packing_kernel: empty input");
  if (d > 30) throw std::invalid_argument("packing_kernel: dimension too large");
  double total = 0;
  for (unsigned a = 0; a < (1u << d); ++a) {
    double peak = 0.5;
    bool inside = true;
    for (int j = 0; j < d && inside; ++j) {
      double xj = ((a >> j) & 1u) ? -x[j] : x[j];
      if (xj < 0.0 || xj > 1.0) inside = false;
      peak = std::min(peak, 0.5 - std::abs(xj - 0.5));
    }
    if (!inside) continue;
    int bits = __builtin_popcount(a);
    total += (bits % 2 == 0 ? 1.0 : -1.0) * peak;
  }
  return total;
}

double doppler(double x) {
  return std::sin(4.0 / (x + 0.05)) * std::sqrt(x * (1.0 - x));
}

Vec project(const Vec& x, const std::vector<int>& S) {
  Vec out(S.size());
  for (std::size_t i = 0; i < S.size(); ++i) {
    if (S[i] < 0 || S[i] >= static_cast<int>(x.size()))
      throw std::invalid_argument("project: coordinate out of range");
    out[i] = x[S[i]];
  }
  return out;
}

RealFn sparse_embed(RealFn h, std::vector<int> S, int p) {
  for (int j : S)
    if (j < 0 || j >= p) throw std::invalid_argument("sparse_embed: S not inside {0..p-1}");
  return [h = std::move(h), S = std::move(S)](const Vec& x) { return h(project(x, S)); };
}

// ---------------------------------------------------------------------------
// BumpFamily
// ---------------------------------------------------------------------------

BumpFamily::BumpFamily(const BoxPartition& pieces, std::vector<std::vector<double>> alphas,
                       double delta)
    : alphas_(std::move(alphas)), delta_(delta) {
  if (pieces.size() != alphas_.size())
    throw std::invalid_argument("bump family: one alpha vector per piece required");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("bump family: delta must lie in (0,1)");
  int d = pieces.dim();
  for (const auto& a : alphas_)
    if (static_cast<int>(a.size()) != d)
      throw std::invalid_argument("bump family: alpha dimension mismatch");

  for (std::size_t r = 0; r < pieces.size(); ++r) {
    const Box& box = pieces.boxes[r];
    std::vector<double> u(d);
    std::vector<int> dims(d);
    std::size_t cells = 1;
    for (int j = 0; j < d; ++j) {
      double lenj = box.len(j);
      double m = std::ceil(lenj * std::pow(delta, -1.0 / alphas_[r][j]));
      dims[j] = std::max(1, static_cast<int>(m));
      u[j] = lenj / dims[j];
      cells *= static_cast<std::size_t>(dims[j]);
    }
    pieces_.push_back(box);
    mesh_.push_back(std::move(u));
    dims_.push_back(std::move(dims));
    offset_.push_back(total_cells_);
    total_cells_ += cells;
  }
  omega_.assign(total_cells_, 0);
}

void BumpFamily::set_omega(std::vector<std::uint8_t> bits) {
  if (bits.size() != total_cells_)
    throw std::invalid_argument("bump family: omega length must equal the cell count");
  omega_ = std::move(bits);
}

Vec BumpFamily::cell_center(int piece, const std::vector<int>& cell_index) const {
  const Box& box = pieces_[piece];
  const auto& u = mesh_[piece];
  Vec c(u.size());
  for (std::size_t j = 0; j < u.size(); ++j)
    c[j] = box.lo[j] + (2.0 * cell_index[j] + 1.0) * u[j] / 2.0;
  return c;
}

double BumpFamily::operator()(const Vec& x) const {
  // supports are disjoint: x lands in at most one cell of one piece
  for (std::size_t r = 0; r < pieces_.size(); ++r) {
    const Box& box = pieces_[r];
    int d = box.dim();
    bool in = true;
    for (int j = 0; j < d && in; ++j)
      if (x[j] < box.lo[j] || x[j] > box.hi[j]) in = false;
    if (!in) continue;

    const auto& u = mesh_[r];
    const auto& dims = dims_[r];
    std::size_t flat = 0;
    Vec scaled(d);
    for (int j = 0; j < d; ++j) {
      int cj = std::min(dims[j] - 1,
                        static_cast<int>(std::floor((x[j] - box.lo[j]) / u[j])));
      cj = std::max(0, cj);
      flat = flat * static_cast<std::size_t>(dims[j]) + static_cast<std::size_t>(cj);
      double center = box.lo[j] + (2.0 * cj + 1.0) * u[j] / 2.0;
      scaled[j] = (x[j] - center) / (u[j] / 2.0);
    }
    if (!omega_[offset_[r] + flat]) return 0.0;
    return delta_ / 4.0 * packing_kernel(scaled);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// PiecewiseAnisoSpec
// ---------------------------------------------------------------------------

PiecewiseAnisoSpec::PiecewiseAnisoSpec(int p, std::vector<int> S0, TreePartition partition,
                                       std::vector<std::vector<double>> alphas,
                                       std::vector<RealFn> pieces, double lambda,
                                       std::vector<std::string> tags)
    : p_(p),
      S0_(std::move(S0)),
      partition_(std::move(partition)),
      alphas_(std::move(alphas)),
      pieces_(std::move(pieces)),
      lambda_(lambda),
      tags_(std::move(tags)) {
  int d = static_cast<int>(S0_.size());
  if (d < 1 || d > p_) throw std::invalid_argument("spec: need 1 <= |S0| <= p");
  for (int j : S0_)
    if (j < 0 || j >= p_) throw std::invalid_argument("spec: S0 coordinate out of range");
  if (partition_.root().dim() != d)
    throw std::invalid_argument("spec: partition must live on [0,1]^d");
  std::size_t R = partition_.leaf_count();
  if (alphas_.size() != R || pieces_.size() != R)
    throw std::invalid_argument("spec: one alpha vector and one piece function per leaf");
  abar_ = harmonic_mean(alphas_.front());
  for (const auto& a : alphas_) {
    if (static_cast<int>(a.size()) != d)
      throw std::invalid_argument("spec: alpha dimension mismatch");
    if (std::abs(harmonic_mean(a) - abar_) > 1e-12)
      throw std::invalid_argument("spec: pieces must share the harmonic-mean smoothness");
  }
  if (!(lambda_ > 0)) throw std::invalid_argument("spec: lambda must be positive");
  if (tags_.empty()) tags_.assign(R, "custom");
}

TreePartition PiecewiseAnisoSpec::extended_partition() const {
  TreePartition ext(Box::unit(p_));
  // replaying in creation order keeps node ids aligned with the active tree
  for (const auto& rec : partition_.splits())
    ext.split(rec.node, S0_[rec.coord], rec.tau);
  return ext;
}

int PiecewiseAnisoSpec::piece_of(const Vec& x_d) const {
  int leaf = partition_.leaf_containing(x_d);
  if (leaf < 0) throw std::invalid_argument("spec: point outside [0,1]^d");
  auto ids = partition_.leaf_ids();
  auto it = std::find(ids.begin(), ids.end(), leaf);
  return static_cast<int>(it - ids.begin());
}

double PiecewiseAnisoSpec::eval_active(const Vec& x_d) const {
  return pieces_[piece_of(x_d)](x_d);
}

double PiecewiseAnisoSpec::f0(const Vec& x_p) const {
  if (static_cast<int>(x_p.size()) != p_)
    throw std::invalid_argument("spec: ambient dimension mismatch");
  return eval_active(project(x_p, S0_));
}

// ---------------------------------------------------------------------------
// Built-in truths
// ---------------------------------------------------------------------------

namespace {

RealFn make_power(const Vec& coef, const Vec& expo) {
  return [coef, expo](const Vec& x) {
    double s = 0;
    for (std::size_t j = 0; j < coef.size(); ++j) s += coef[j] * std::pow(x[j], expo[j]);
    return s;
  };
}

std::string join_doubles(const Vec& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    out += buf;
  }
  return out;
}

}  // namespace

PiecewiseAnisoSpec PiecewiseAnisoSpec::power(int p, std::vector<int> S0, Vec coef, Vec expo,
                                             double lambda) {
  int d = static_cast<int>(S0.size());
  if (coef.size() != expo.size() || static_cast<int>(coef.size()) != d)
    throw std::invalid_argument("power spec: coef/expo must have length |S0|");
  TreePartition part(Box::unit(d));
  std::vector<std::vector<double>> alphas{expo};
  for (double e : expo)
    if (!(e > 0 && e <= 1)) throw std::invalid_argument("power spec: exponents must lie in (0,1]");
  std::vector<RealFn> fns{make_power(coef, expo)};
  std::vector<std::string> tags{"power " + join_doubles(coef) + ";" + join_doubles(expo)};
  return PiecewiseAnisoSpec(p, std::move(S0), std::move(part), std::move(alphas),
                            std::move(fns), lambda, std::move(tags));
}

PiecewiseAnisoSpec PiecewiseAnisoSpec::orthants_sim(int p, double lambda) {
  // orthant tree: split every leaf at 1/2 along each coordinate in turn
  TreePartition part(Box::unit(p));
  std::vector<int> frontier{0};
  for (int j = 0; j < p; ++j) {
    std::vector<int> next;
    for (int v : frontier) {
      auto [l, r] = part.split(v, j, 0.5);
      next.push_back(l);
      next.push_back(r);
    }
    frontier = std::move(next);
  }
  std::size_t R = part.leaf_count();
  std::vector<int> S0(p);
  for (int j = 0; j < p; ++j) S0[j] = j;
  std::vector<std::vector<double>> alphas(R, std::vector<double>(p, 1.0));
  std::vector<RealFn> fns(R, [](const Vec& x) { return sim_function(x); });
  std::vector<std::string> tags(R, "sim");
  return PiecewiseAnisoSpec(p, std::move(S0), std::move(part), std::move(alphas),
                            std::move(fns), lambda, std::move(tags));
}

PiecewiseAnisoSpec PiecewiseAnisoSpec::constant(int p, double value) {
  TreePartition part(Box::unit(1));
  std::vector<std::vector<double>> alphas{{1.0}};
  std::vector<RealFn> fns{[value](const Vec&) { return value; }};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return PiecewiseAnisoSpec(p, {0}, std::move(part), std::move(alphas), std::move(fns), 1.0,
                            {std::string("const ") + buf});
}

// ---------------------------------------------------------------------------
// Text form: header keys, then split records, then per-leaf alpha/piece lines.
// Coordinates are 1-based on disk, matching the CLI conventions.
// ---------------------------------------------------------------------------

std::string PiecewiseAnisoSpec::to_text() const {
  std::ostringstream out;
  out << "p " << p_ << "\n";
  out << "S0 ";
  for (std::size_t i = 0; i < S0_.size(); ++i) out << (i ? "," : "") << S0_[i] + 1;
  out << "\n";
  out << "lambda " << lambda_ << "\n";
  for (const auto& rec : partition_.splits())
    out << "split " << rec.node << " " << rec.coord + 1 << " " << rec.tau << "\n";
  for (int r = 0; r < piece_count(); ++r) {
    out << "alpha " << r << " " << join_doubles(alphas_[r]) << "\n";
    out << "piece " << r << " " << tags_[r] << "\n";
  }
  return out.str();
}

PiecewiseAnisoSpec PiecewiseAnisoSpec::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int p = -1;
  std::vector<int> S0;
  double lambda = 1.0;
  std::vector<std::tuple<int, int, double>> splits;
  std::vector<std::pair<int, std::vector<double>>> alphas;
  std::vector<std::pair<int, std::string>> tags;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "p") {
      ls >> p;
    } else if (key == "S0") {
      std::string list;
      ls >> list;
      for (int j : parse_int_list(list)) S0.push_back(j - 1);
    } else if (key == "lambda") {
      ls >> lambda;
    } else if (key == "split") {
      int node, coord;
      double tau;
      ls >> node >> coord >> tau;
      splits.emplace_back(node, coord - 1, tau);
    } else if (key == "alpha") {
      int r;
      std::string list;
      ls >> r >> list;
      alphas.emplace_back(r, parse_double_list(list));
    } else if (key == "piece") {
      int r;
      ls >> r;
      std::string rest;
      std::getline(ls, rest);
      auto a = rest.find_first_not_of(" \t");
      tags.emplace_back(r, a == std::string::npos ? "" : rest.substr(a));
    } else {
      throw std::runtime_error("spec text: unknown key '" + key + "'");
    }
  }
  if (p < 1 || S0.empty()) throw std::runtime_error("spec text: missing p or S0");
  int d = static_cast<int>(S0.size());
  TreePartition part(Box::unit(d));
  for (auto [node, coord, tau] : splits) part.split(node, coord, tau);
  std::size_t R = part.leaf_count();
  std::vector<std::vector<double>> alpha_v(R);
  std::vector<std::string> tag_v(R);
  for (auto& [r, a] : alphas) {
    if (r < 0 || static_cast<std::size_t>(r) >= R) throw std::runtime_error("spec text: bad leaf index");
    alpha_v[r] = std::move(a);
  }
  for (auto& [r, t] : tags) {
    if (r < 0 || static_cast<std::size_t>(r) >= R) throw std::runtime_error("spec text: bad leaf index");
    tag_v[r] = std::move(t);
  }
  std::vector<RealFn> fns(R);
  for (std::size_t r = 0; r < R; ++r) {
    std::istringstream ts(tag_v[r]);
    std::string kind;
    ts >> kind;
    if (kind == "const") {
      double v;
      ts >> v;
      fns[r] = [v](const Vec&) { return v; };
    } else if (kind == "power") {
      std::string params;
      ts >> params;
      auto parts = split_string(params, ';');
      if (parts.size() != 2) throw std::runtime_error("spec text: power needs coef;expo");
      fns[r] = make_power(parse_double_list(parts[0]), parse_double_list(parts[1]));
    } else if (kind == "sim") {
      fns[r] = [](const Vec& x) { return sim_function(x); };
    } else if (kind == "doppler") {
      fns[r] = [](const Vec& x) { return doppler(x[0]); };
    } else {
      throw std::runtime_error("spec text: unknown piece kind '" + kind + "'");
    }
  }
  return PiecewiseAnisoSpec(p, std::move(S0), std::move(part), std::move(alpha_v),
                            std::move(fns), lambda, std::move(tag_v));
}

PiecewiseAnisoSpec PiecewiseAnisoSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

void PiecewiseAnisoSpec::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open spec file for writing: " + path);
  out << to_text();
}

HolderReport validate_holder(const PiecewiseAnisoSpec& spec, int samples_per_box,
                             std::uint64_t seed) {
  Rng rng(seed);
  HolderReport rep;
  auto ids = spec.partition().leaf_ids();
  for (int r = 0; r < spec.piece_count(); ++r) {
    Box box = spec.partition().box_of(ids[r]);
    const auto& alpha = spec.alpha(r);
    for (int s = 0; s < samples_per_box; ++s) {
      Vec x(spec.d()), y(spec.d());
      for (int j = 0; j < spec.d(); ++j) {
        x[j] = rng.uniform(box.lo[j], box.hi[j]);
        y[j] = rng.uniform(box.lo[j], box.hi[j]);
      }
      double denom = 0;
      for (int j = 0; j < spec.d(); ++j)
        denom += std::pow(std::abs(x[j] - y[j]), alpha[j]);
      if (denom <= 0) continue;
      double ratio = std::abs(spec.eval_active(x) - spec.eval_active(y)) / denom;
      rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
  }
  rep.ok = rep.max_ratio <= spec.lambda() * (1.0 + 1e-9);
  return rep;
}

}  // namespace arborart
