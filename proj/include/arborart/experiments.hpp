#pragma once

#include <string>
#include <vector>

#include "arborart/bart.hpp"
#include "arborart/funcs.hpp"

namespace arborart {

// ---------------------------------------------------------------------------
// Study configuration. Data-generation settings plus the model/prior/chain
// sub-configs handed through to fit(). rate_* feed the reference-rate column
// of the contraction study; zeros mean "derive from p" (d = p, R = 2^p).
// ---------------------------------------------------------------------------
struct ExperimentConfig {
  std::string scenario = "sim";
  long n = 1000;
  int p = 2;
  double sigma0 = 0.05;
  int replicates = 20;
  int oos = 500;
  std::uint64_t seed = 1;
  bool deterministic = false;
  std::string out_path;

  ModelSpec model;
  PriorConfig prior;
  McmcConfig mcmc;

  int rate_d = 0;
  int rate_R = 0;
  double rate_lambda = 1.0;
  double rate_abar = 1.0;

  void validate() const;
};

// Covariates uniform on the unit cube; responses truth + N(0, sigma0^2).
// sigma0 = 0 gives noiseless responses.
Dataset generate_regression(const RealFn& truth, long n, int p, double sigma0,
                            Rng& rng);
// Labels Bernoulli(logistic(truth(x))).
Dataset generate_classification(const RealFn& truth, long n, int p, Rng& rng);
// Draws from the density proportional to exp(truth) by grid inversion:
// a categorical draw over grid^p equal-volume cells followed by a uniform
// position within the cell. The responses vector stays empty.
Dataset generate_density(const RealFn& truth, long n, int p, int grid, Rng& rng);

// ---------------------------------------------------------------------------
// Prediction-error study: per replicate, a fresh train/test pair and three
// fits (the ensemble, a single tree, the constant mean); root mean squared
// prediction error against noisy held-out responses. CSV rows are
// (replicate, arm, rmspe), merged in replicate order.
// ---------------------------------------------------------------------------
struct SimstudySummary {
  std::vector<std::string> arms;
  Vec mean_rmspe;                 // per arm
  std::vector<Vec> rmspe;         // [replicate][arm]
};

SimstudySummary run_simstudy(const ExperimentConfig& cfg, const RealFn& truth);

// ---------------------------------------------------------------------------
// Error-decay study over a growing sample-size ladder: posterior-mean
// empirical L2 distance to the truth at the design points, the posterior
// mean of sigma^2 with its distance to the generating value, and the
// reference rate for comparison. slope is the fitted log-log decay.
// ---------------------------------------------------------------------------
struct ContractionRow {
  long n = 0;
  double emp_l2 = 0;
  double sigma2_mean = 0;
  double sigma2_gap = 0;
  double eps_n = 0;
};

struct ContractionSummary {
  std::vector<ContractionRow> rows;
  double slope = 0;
};

ContractionSummary run_contraction_study(const ExperimentConfig& cfg,
                                         const RealFn& truth,
                                         const std::vector<long>& n_list);

}  // namespace arborart
