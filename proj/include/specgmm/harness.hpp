#pragma once

// Seeded Monte Carlo sweeps over the separation delta and the log-loss rate fit.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "specgmm/kmeans.hpp"
#include "specgmm/matgen.hpp"
#include "specgmm/spectral.hpp"

namespace specgmm {

struct SweepConfig {
  GmmSpec base;
  std::vector<double> delta_grid;
  int trials_per_delta = 1;
  std::vector<Algorithm> algorithms{Algorithm::Alg1};
  std::uint64_t master_seed = 0;
  KMeansConfig kmeans;
};

struct TrialRecord {
  double delta = 0.0;
  int delta_index = 0;
  int trial_index = 0;
  Algorithm algorithm = Algorithm::Alg1;
  double loss = 0.0;
  double objective = 0.0;
  double elapsed_ms = 0.0;
  std::uint64_t seed_used = 0;
  std::optional<double> unrefined_objective;  // alg2 only
  bool locally_optimal = false;
  std::string error;  // non-empty when the trial failed

  bool failed() const { return !error.empty(); }
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  int n_points_used = 0;
  int n_censored = 0;
  double reference_slope = -0.125;
  std::vector<double> deltas;       // every grid point seen in the records
  std::vector<double> mean_losses;  // mean loss per grid point
};

namespace harness {

/// Seed of trial `trial` at grid point `delta_index`. The algorithm is not
/// mixed in, so every algorithm sees the same instance and k-means seeds.
std::uint64_t trial_seed(std::uint64_t master_seed, int delta_index, int trial);

/// Samples one instance from `spec` (seed = spec.seed), clusters it and scores the labels against z*.
TrialRecord run_trial(const GmmSpec& spec, Algorithm algorithm, const KMeansConfig& kmeans_config);

/// Throws Error(InvalidSpec) on an empty or non-increasing grid or no trials.
void validate(const SweepConfig& config);

/// Every (delta, trial, algorithm) combination, in canonical order. Trial
/// failures are recorded, never thrown.
std::vector<TrialRecord> run_sweep(const SweepConfig& config, unsigned threads = 1);

/// Least squares of log(mean loss) on delta^2 over grid points with positive
/// mean loss; zero-loss points are censored. Throws
/// Error(InsufficientUncensoredPoints) with fewer than two usable points.
RateFit fit_rate(const std::vector<TrialRecord>& records, Algorithm algorithm);

/// CSV with header `delta,trial,algorithm,loss,objective,elapsed_ms,seed`.
void write_records_csv(std::ostream& out, const std::vector<TrialRecord>& records);
void write_records_json(std::ostream& out, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_records_csv(std::istream& in);

std::string rate_fit_json(const RateFit& fit);

/// Static SVG: log mean-loss against delta^2, the fitted line and a line of
/// slope -1/8 through the centroid of the fitted points.
std::string rate_plot_svg(const RateFit& fit);

}  // namespace harness
}  // namespace specgmm
