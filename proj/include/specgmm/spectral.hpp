#pragma once

// Spectral clustering on the singular-value-weighted projection of X.

#include <Eigen/Dense>

#include <optional>
#include <string_view>

#include "specgmm/kmeans.hpp"
#include "specgmm/numlin.hpp"

namespace specgmm {

enum class Algorithm { Alg1, Alg2, Alg3 };

std::string_view to_string(Algorithm a);
/// Parses "alg1" / "alg2" / "alg3"; throws Error(InvalidSpec) otherwise.
Algorithm parse_algorithm(std::string_view name);

struct SpectralOutput {
  LabelVector labels;
  Eigen::MatrixXd centers_reduced;  // m x k, m = min(k, p)
  Eigen::MatrixXd centers_ambient;  // p x k, U_hat * centers_reduced
  numlin::SvdFactors<double> svd;   // leading m triples of X
  double objective = 0.0;           // k-means objective on the projected columns
  std::optional<double> unrefined_objective;  // algorithm2: objective before the refinement step
  int restart = 0;
};

namespace spectral {

struct Projection {
  numlin::SvdFactors<double> svd;
  Eigen::MatrixXd y;  // m x n, diag(sigma) V^T
};

/// Leading min(k, p) singular triples of X and the weighted coordinates of its columns.
Projection project(const Eigen::MatrixXd& x, int k);

/// SVD, then k-means on the columns of diag(sigma) V^T.
SpectralOutput algorithm1(const Eigen::MatrixXd& x, int k, const KMeansConfig& config);

/// Approximate k-means followed by one center update and one relabeling.
SpectralOutput algorithm2(const Eigen::MatrixXd& x, int k, const KMeansConfig& config);

/// k-means on the columns of the rank-m approximation U Sigma V^T. The run
/// replays algorithm1's winning restart with its seeds mapped through U.
SpectralOutput algorithm3(const Eigen::MatrixXd& x, int k, const KMeansConfig& config);

SpectralOutput run(Algorithm algorithm, const Eigen::MatrixXd& x, int k, const KMeansConfig& config);

}  // namespace spectral
}  // namespace specgmm
