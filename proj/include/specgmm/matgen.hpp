#pragma once

// Gaussian mixture instances X = P + E with prescribed separation and balance.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace specgmm {

/// Cluster labels, 0-based in memory (files use 1..k).
using LabelVector = std::vector<int>;

enum class Layout { Simplex, Collinear, Explicit };

enum class NoiseVariant { IsotropicGaussian, GaussianWithCovariance, BoundedUniform };

struct NoiseModel {
  NoiseVariant variant = NoiseVariant::IsotropicGaussian;
  Eigen::MatrixXd covariance;   // p x p, GaussianWithCovariance only
  double variance_proxy = 1.0;  // BoundedUniform only

  static NoiseModel isotropic() { return {}; }
  static NoiseModel gaussian(Eigen::MatrixXd cov) {
    return {NoiseVariant::GaussianWithCovariance, std::move(cov), 1.0};
  }
  static NoiseModel bounded_uniform(double sigma2) {
    return {NoiseVariant::BoundedUniform, {}, sigma2};
  }
  /// Degenerate model that makes X = P exactly.
  static NoiseModel none() { return bounded_uniform(0.0); }

  bool is_zero() const;
};

struct GmmSpec {
  int n = 0;
  int p = 0;
  int k = 0;
  double delta = 0.0;
  double beta = 1.0;
  Layout layout = Layout::Simplex;
  Eigen::MatrixXd explicit_centers;  // p x k, Layout::Explicit only
  NoiseModel noise;
  std::uint64_t seed = 0;
};

struct GmmInstance {
  GmmSpec spec;
  Eigen::MatrixXd X;
  Eigen::MatrixXd P;
  Eigen::MatrixXd E;
  LabelVector z_star;
  Eigen::MatrixXd centers;
};

namespace matgen {

/// Throws Error(InvalidSpec / DimensionTooSmall / InfeasibleBalance) when the
/// spec's invariants fail.
void validate(const GmmSpec& spec);

/// p x k centers with minimum pairwise distance exactly `delta`.
/// Simplex: regular (k-1)-simplex with side delta, mean-centered, first k-1
/// coordinates. Collinear: 0, delta, 2 delta, ... on the first axis, mean-centered.
Eigen::MatrixXd build_centers(Layout layout, int k, int p, double delta,
                              const Eigen::MatrixXd& explicit_centers = {});

/// Size of the designated small cluster, ceil(beta n / k).
int min_cluster_size(int n, int k, double beta);

/// Cluster 0 receives exactly min_cluster_size points, the rest split the
/// remainder as evenly as possible; positions are then shuffled.
LabelVector assign_labels(int n, int k, double beta, std::uint64_t seed);

std::vector<int> cluster_sizes(const LabelVector& labels, int k);

/// beta realized by a labeling: min cluster size / (n / k).
double realized_beta(const LabelVector& labels, int k);

/// p x n noise draw. Entry (i, j) depends only on (seed, i, j).
Eigen::MatrixXd sample_noise(int p, int n, const NoiseModel& noise, std::uint64_t seed);

/// Column i of the result is centers.col(labels[i]).
Eigen::MatrixXd population_matrix(const Eigen::MatrixXd& centers, const LabelVector& labels);

GmmInstance sample_instance(const GmmSpec& spec);

/// Smallest pairwise Euclidean distance between columns.
double min_pairwise_distance(const Eigen::MatrixXd& centers);

/// Empty when the instance satisfies its invariants, otherwise a description
/// of the first violation.
std::optional<std::string> check_instance(const GmmInstance& instance);

}  // namespace matgen
}  // namespace specgmm
