#include "specgmm/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "specgmm/error.hpp"

namespace specgmm::metrics {

Eigen::MatrixXi confusion(const LabelVector& z, const LabelVector& z_star, int k) {
  if (z.size() != z_star.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "label vectors have lengths " + std::to_string(z.size()) + " and " + std::to_string(z_star.size()));
  }
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(k, k);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] < 0 || z[i] >= k || z_star[i] < 0 || z_star[i] >= k) {
      throw Error(ErrorCode::LabelOutOfRange, "label outside [0, k) at position " + std::to_string(i));
    }
    ++counts(z[i], z_star[i]);
  }
  return counts;
}

std::vector<int> best_permutation_enumerate(const Eigen::MatrixXi& counts) {
  const int k = static_cast<int>(counts.rows());
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  long long best_matches = -1;
  do {
    long long matches = 0;
    for (int a = 0; a < k; ++a) matches += counts(a, perm[static_cast<std::size_t>(a)]);
    if (matches > best_matches) {
      best_matches = matches;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<int> best_permutation_assignment(const Eigen::MatrixXi& counts) {
  // Shortest augmenting path Hungarian method on cost = -counts, 1-based.
  const int k = static_cast<int>(counts.rows());
  constexpr long long inf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(static_cast<std::size_t>(k + 1), 0), v(static_cast<std::size_t>(k + 1), 0);
  std::vector<int> match(static_cast<std::size_t>(k + 1), 0), way(static_cast<std::size_t>(k + 1), 0);
  const auto cost = [&](int row, int col) { return -static_cast<long long>(counts(row - 1, col - 1)); };

  for (int row = 1; row <= k; ++row) {
    match[0] = row;
    int col0 = 0;
    std::vector<long long> minv(static_cast<std::size_t>(k + 1), inf);
    std::vector<bool> used(static_cast<std::size_t>(k + 1), false);
    do {
      used[static_cast<std::size_t>(col0)] = true;
      const int row0 = match[static_cast<std::size_t>(col0)];
      long long delta = inf;
      int col1 = 0;
      for (int col = 1; col <= k; ++col) {
        const auto c = static_cast<std::size_t>(col);
        if (used[c]) continue;
        const long long cur = cost(row0, col) - u[static_cast<std::size_t>(row0)] - v[c];
        if (cur < minv[c]) {
          minv[c] = cur;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = col;
        }
      }
      for (int col = 0; col <= k; ++col) {
        const auto c = static_cast<std::size_t>(col);
        if (used[c]) {
          u[static_cast<std::size_t>(match[c])] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (match[static_cast<std::size_t>(col0)] != 0);
    do {
      const int col1 = way[static_cast<std::size_t>(col0)];
      match[static_cast<std::size_t>(col0)] = match[static_cast<std::size_t>(col1)];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<int> perm(static_cast<std::size_t>(k));
  for (int col = 1; col <= k; ++col) perm[static_cast<std::size_t>(match[static_cast<std::size_t>(col)] - 1)] = col - 1;
  return perm;
}

MatchResult misclustering_loss(const LabelVector& z, const LabelVector& z_star, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidSpec, "k must be positive");
  const Eigen::MatrixXi counts = confusion(z, z_star, k);
  MatchResult result;
  result.permutation = k <= 8 ? best_permutation_enumerate(counts) : best_permutation_assignment(counts);
  long long matches = 0;
  for (int a = 0; a < k; ++a) matches += counts(a, result.permutation[static_cast<std::size_t>(a)]);
  result.mismatches = static_cast<int>(static_cast<long long>(z.size()) - matches);
  result.loss = z.empty() ? 0.0 : static_cast<double>(result.mismatches) / static_cast<double>(z.size());
  return result;
}

double center_error(const Eigen::MatrixXd& theta_hat, const Eigen::MatrixXd& theta_star,
                    const std::vector<int>& permutation) {
  if (theta_hat.rows() != theta_star.rows() || theta_hat.cols() != theta_star.cols() ||
      static_cast<Eigen::Index>(permutation.size()) != theta_hat.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "center matrices and permutation must agree in shape");
  }
  double worst = 0.0;
  for (Eigen::Index j = 0; j < theta_hat.cols(); ++j) {
    worst = std::max(worst, (theta_hat.col(j) - theta_star.col(permutation[static_cast<std::size_t>(j)])).norm());
  }
  return worst;
}

}  // namespace specgmm::metrics
