#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "specgmm/matgen.hpp"

namespace specgmm {

struct MatchResult {
  double loss = 0.0;
  /// permutation[a] = b maps estimated label a onto true label b.
  std::vector<int> permutation;
  int mismatches = 0;
  std::optional<double> center_error;
};

namespace metrics {

/// counts(a, b) = #{i : z_i = a, z*_i = b}
Eigen::MatrixXi confusion(const LabelVector& z, const LabelVector& z_star, int k);

/// Maximum-agreement bijection by trying all k! permutations (first in
/// lexicographic order wins ties).
std::vector<int> best_permutation_enumerate(const Eigen::MatrixXi& counts);

/// Maximum-agreement bijection via the Hungarian method, O(k^3).
std::vector<int> best_permutation_assignment(const Eigen::MatrixXi& counts);

/// Fraction of labels that disagree with z_star under the best bijection.
/// Enumerates for k <= 8 and switches to the assignment solver above that.
MatchResult misclustering_loss(const LabelVector& z, const LabelVector& z_star, int k);

/// max_j ||theta_hat_j - theta_star_{permutation[j]}||
double center_error(const Eigen::MatrixXd& theta_hat, const Eigen::MatrixXd& theta_star,
                    const std::vector<int>& permutation);

}  // namespace metrics
}  // namespace specgmm
