#pragma once

// k-means on the columns of a d x n matrix.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "specgmm/matgen.hpp"

namespace specgmm {

struct KMeansConfig {
  int restarts = 20;
  int max_iters = 100;
  double tol = 1e-10;  // relative objective change that counts as converged
  std::uint64_t seed = 0;
};

struct KMeansSolution {
  LabelVector labels;
  Eigen::MatrixXd centers;  // d x k
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after each assignment step
  int restart = 0;            // which restart of solve() produced this solution
};

namespace kmeans {

/// sum_i ||Y_i - c_{z_i}||^2
double objective(const Eigen::MatrixXd& y, const LabelVector& labels, const Eigen::MatrixXd& centers);

/// Index of the nearest center; ties go to the lowest index.
int nearest_center(const Eigen::MatrixXd& centers, const Eigen::Ref<const Eigen::VectorXd>& point);

/// Class means; columns of empty classes are left at zero and flagged in `empty`.
Eigen::MatrixXd class_means(const Eigen::MatrixXd& y, const LabelVector& labels, int k,
                            std::vector<bool>* empty = nullptr);

/// Column indices chosen by D^2 seeding: first uniform, then proportional to
/// squared distance from the chosen set. Falls back to a uniform pick among
/// unchosen columns when every remaining distance is zero.
std::vector<int> kmeanspp_indices(const Eigen::MatrixXd& y, int k, std::uint64_t seed);
Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& y, int k, std::uint64_t seed);

KMeansSolution lloyd(const Eigen::MatrixXd& y, const Eigen::MatrixXd& init_centers, const KMeansConfig& config);

/// Seed used by restart r of solve().
std::uint64_t restart_seed(const KMeansConfig& config, int restart);

/// Best of config.restarts independent kmeans++ + Lloyd runs.
KMeansSolution solve(const Eigen::MatrixXd& y, int k, const KMeansConfig& config);

/// Global optimum by enumerating set partitions into exactly k blocks.
/// Limited to n <= 14, k <= 4.
KMeansSolution exact_oracle(const Eigen::MatrixXd& y, int k);

/// One Lloyd step from a labeling: centers become class means, then every
/// column moves to its nearest updated center.
KMeansSolution refine_once(const Eigen::MatrixXd& y, const LabelVector& labels, int k);

/// ||Y_i - c_{z_i}|| <= ||Y_i - c_j|| for every i and j, compared on squared distances.
bool is_locally_optimal(const Eigen::MatrixXd& y, const LabelVector& labels, const Eigen::MatrixXd& centers);

}  // namespace kmeans
}  // namespace specgmm
