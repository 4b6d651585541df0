#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace arborart {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// RNG. One engine per logical stream; streams for parallel work are derived
// from a master seed with splitmix64 so results do not depend on scheduling.
// ---------------------------------------------------------------------------

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream);

class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  double uniform() { return unif_(eng_); }
  double uniform(double a, double b) { return a + (b - a) * unif_(eng_); }
  double normal() { return norm_(eng_); }
  double normal(double mean, double sd) { return mean + sd * norm_(eng_); }
  // gamma(shape, scale=1); shape may be arbitrarily small, see log_gamma.
  double gamma(double shape) {
    std::gamma_distribution<double> g(shape, 1.0);
    return g(eng_);
  }
  // log of a Gamma(shape,1) draw, stable for tiny shapes: if G~Gamma(a+1) and
  // U~Unif(0,1) then G*U^{1/a} ~ Gamma(a), so log X = log G + log(U)/a.
  double log_gamma_draw(double shape) {
    if (shape >= 0.1) return std::log(gamma(shape));
    double g = gamma(shape + 1.0);
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return std::log(g) + std::log(u) / shape;
  }
  int uniform_int(int n) {  // 0..n-1
    std::uniform_int_distribution<int> d(0, n - 1);
    return d(eng_);
  }
  std::mt19937_64& engine() { return eng_; }

private:
  std::mt19937_64 eng_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

// ---------------------------------------------------------------------------
// Flat key=value config files; '#' starts a comment. CLI flags override keys.
// ---------------------------------------------------------------------------

class Config {
public:
  Config() = default;
  static Config from_file(const std::string& path);
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  const std::map<std::string, std::string>& items() const { return kv_; }

private:
  std::map<std::string, std::string> kv_;
};

// ---------------------------------------------------------------------------
// CSV writing: leading schema comment, optional timestamp (suppressed when
// deterministic output is requested), fixed "%.10g" number formatting.
// ---------------------------------------------------------------------------

class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::string& schema,
            const std::vector<std::string>& columns, bool deterministic);
  ~CsvWriter();
  void row(const std::vector<std::string>& cells);
  void row(const std::vector<double>& cells);
  static std::string num(double v);

private:
  struct Impl;
  Impl* impl_;
};

std::vector<std::string> split_string(const std::string& s, char sep);
std::vector<double> parse_double_list(const std::string& s);
std::vector<int> parse_int_list(const std::string& s);

// Worker cap honouring the ARBORART_THREADS environment variable.
int worker_count();
// Runs fn(i) for i in [0,n) on up to worker_count() threads; fn must be
// thread-safe. Falls back to a plain loop when one worker is available.
void parallel_for(int n, const std::function<void(int)>& fn);

double mean_of(const std::vector<double>& v);
double sd_of(const std::vector<double>& v);

}  // namespace arborart
