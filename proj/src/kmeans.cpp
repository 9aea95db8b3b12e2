#include <numeric>
#include "specgmm/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "specgmm/error.hpp"
#include "specgmm/rng.hpp"

namespace specgmm::kmeans {

namespace {

constexpr std::uint64_t kRestartStream = 0x6b6d65616e73ULL;  // "kmeans"

double squared_distance(const Eigen::MatrixXd& a, Eigen::Index ca, const Eigen::MatrixXd& b, Eigen::Index cb) {
  double s = 0.0;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double diff = a(r, ca) - b(r, cb);
    s += diff * diff;
  }
  return s;
}

// Nearest center per column; returns squared distances through `dist`.
void assign(const Eigen::MatrixXd& y, const Eigen::MatrixXd& centers, LabelVector& labels, std::vector<double>& dist) {
  const Eigen::Index n = y.cols();
  labels.resize(static_cast<std::size_t>(n));
  dist.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = squared_distance(y, i, centers, 0);
    for (Eigen::Index j = 1; j < centers.cols(); ++j) {
      const double d = squared_distance(y, i, centers, j);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    dist[static_cast<std::size_t>(i)] = best_d;
  }
}

void check_k(const Eigen::MatrixXd& y, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidSpec, "k must be positive");
  if (k > y.cols()) {
    throw Error(ErrorCode::KExceedsN, "k = " + std::to_string(k) + " exceeds n = " + std::to_string(y.cols()));
  }
}

void check_labels(const LabelVector& labels, Eigen::Index n, int k) {
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw Error(ErrorCode::LengthMismatch, "labels have length " + std::to_string(labels.size()));
  }
  for (int z : labels) {
    if (z < 0 || z >= k) throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(z));
  }
}

}  // namespace

double objective(const Eigen::MatrixXd& y, const LabelVector& labels, const Eigen::MatrixXd& centers) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.cols(); ++i) total += squared_distance(y, i, centers, labels[static_cast<std::size_t>(i)]);
  return total;
}

int nearest_center(const Eigen::MatrixXd& centers, const Eigen::Ref<const Eigen::VectorXd>& point) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centers.cols(); ++j) {
    const double d = (centers.col(j) - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

Eigen::MatrixXd class_means(const Eigen::MatrixXd& y, const LabelVector& labels, int k, std::vector<bool>* empty) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(y.rows(), k);
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < y.cols(); ++i) {
    const int z = labels[static_cast<std::size_t>(i)];
    sums.col(z) += y.col(i);
    ++counts[static_cast<std::size_t>(z)];
  }
  if (empty) empty->assign(static_cast<std::size_t>(k), false);
  for (int j = 0; j < k; ++j) {
    if (counts[static_cast<std::size_t>(j)] > 0) {
      sums.col(j) /= counts[static_cast<std::size_t>(j)];
    } else if (empty) {
      (*empty)[static_cast<std::size_t>(j)] = true;
    }
  }
  return sums;
}

std::vector<int> kmeanspp_indices(const Eigen::MatrixXd& y, int k, std::uint64_t seed) {
  check_k(y, k);
  const Eigen::Index n = y.cols();
  rng::Stream stream(seed);
  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(k));
  std::vector<bool> taken(static_cast<std::size_t>(n), false);

  const auto first = static_cast<int>(stream.below(static_cast<std::uint64_t>(n)));
  chosen.push_back(first);
  taken[static_cast<std::size_t>(first)] = true;

  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = squared_distance(y, i, y, first);

  while (static_cast<int>(chosen.size()) < k) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!taken[static_cast<std::size_t>(i)]) total += d2[static_cast<std::size_t>(i)];

    int pick = -1;
    if (total > 0.0) {
      const double target = stream.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (taken[ui] || d2[ui] == 0.0) continue;
        acc += d2[ui];
        pick = static_cast<int>(i);
        if (acc > target) break;
      }
    } else {
      const auto remaining = static_cast<std::uint64_t>(n) - chosen.size();
      auto slot = stream.below(remaining);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        if (slot-- == 0) {
          pick = static_cast<int>(i);
          break;
        }
      }
    }
    chosen.push_back(pick);
    taken[static_cast<std::size_t>(pick)] = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      d2[ui] = std::min(d2[ui], squared_distance(y, i, y, pick));
    }
  }
  return chosen;
}

Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& y, int k, std::uint64_t seed) {
  const auto idx = kmeanspp_indices(y, k, seed);
  Eigen::MatrixXd centers(y.rows(), k);
  for (int j = 0; j < k; ++j) centers.col(j) = y.col(idx[static_cast<std::size_t>(j)]);
  return centers;
}

KMeansSolution lloyd(const Eigen::MatrixXd& y, const Eigen::MatrixXd& init_centers, const KMeansConfig& config) {
  if (init_centers.rows() != y.rows()) throw Error(ErrorCode::ShapeMismatch, "initial centers have the wrong dimension");
  const int k = static_cast<int>(init_centers.cols());
  const int max_iters = std::max(1, config.max_iters);

  KMeansSolution sol;
  Eigen::MatrixXd centers = init_centers;
  LabelVector labels;
  LabelVector previous;
  std::vector<double> dist;
  double prev_obj = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= max_iters; ++it) {
    assign(y, centers, labels, dist);
    double obj = 0.0;
    for (double d : dist) obj += d;

    if (it > 1 && obj > prev_obj) {
      // Rounding noise at a fixed point; keep the previous state.
      labels = previous;
      sol.converged = true;
      break;
    }
    sol.trace.push_back(obj);
    sol.iterations = it;
    if (obj == 0.0 || (it > 1 && (labels == previous || prev_obj - obj <= config.tol * prev_obj))) {
      sol.converged = true;
      break;
    }
    prev_obj = obj;
    previous = labels;

    std::vector<bool> empty;
    Eigen::MatrixXd updated = class_means(y, labels, k, &empty);
    for (int j = 0; j < k; ++j) {
      if (!empty[static_cast<std::size_t>(j)]) continue;
      const auto far = std::max_element(dist.begin(), dist.end());
      const auto i = static_cast<Eigen::Index>(far - dist.begin());
      updated.col(j) = y.col(i);
      *far = 0.0;
    }
    centers = std::move(updated);
  }

  std::vector<bool> empty;
  Eigen::MatrixXd means = class_means(y, labels, k, &empty);
  for (int j = 0; j < k; ++j)
    if (empty[static_cast<std::size_t>(j)]) means.col(j) = centers.col(j);
  sol.labels = std::move(labels);
  sol.centers = std::move(means);
  sol.objective = objective(y, sol.labels, sol.centers);
  return sol;
}

std::uint64_t restart_seed(const KMeansConfig& config, int restart) {
  return rng::combine({config.seed, kRestartStream, static_cast<std::uint64_t>(restart)});
}

KMeansSolution solve(const Eigen::MatrixXd& y, int k, const KMeansConfig& config) {
  check_k(y, k);
  const int restarts = std::max(1, config.restarts);
  KMeansSolution best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    KMeansSolution run = lloyd(y, kmeanspp_seed(y, k, restart_seed(config, r)), config);
    run.restart = r;
    if (run.objective < best.objective) best = std::move(run);
  }
  return best;
}

namespace {

struct PartitionSearch {
  const Eigen::MatrixXd& y;
  int k;
  Eigen::Index n;
  Eigen::MatrixXd sums;
  Eigen::VectorXd sumsq;
  std::vector<int> counts;
  LabelVector current;
  LabelVector best;
  double best_cost = std::numeric_limits<double>::infinity();

  void leaf() {
    double cost = 0.0;
    for (int j = 0; j < k; ++j) cost += sumsq(j) - sums.col(j).squaredNorm() / counts[static_cast<std::size_t>(j)];
    if (cost < best_cost) {
      best_cost = cost;
      best = current;
    }
  }

  void place(Eigen::Index i, int used) {
    if (i == n) {
      if (used == k) leaf();
      return;
    }
    const int limit = std::min(used + 1, k);
    for (int j = 0; j < limit; ++j) {
      const int next_used = std::max(used, j + 1);
      if (k - next_used > n - i - 1) continue;
      current[static_cast<std::size_t>(i)] = j;
      sums.col(j) += y.col(i);
      sumsq(j) += y.col(i).squaredNorm();
      ++counts[static_cast<std::size_t>(j)];
      place(i + 1, next_used);
      --counts[static_cast<std::size_t>(j)];
      sumsq(j) -= y.col(i).squaredNorm();
      sums.col(j) -= y.col(i);
    }
  }
};

}  // namespace

KMeansSolution exact_oracle(const Eigen::MatrixXd& y, int k) {
  check_k(y, k);
  if (y.cols() == k) {
    KMeansSolution sol;
    sol.labels.resize(static_cast<std::size_t>(k));
    std::iota(sol.labels.begin(), sol.labels.end(), 0);
    sol.centers = y;
    sol.objective = 0.0;
    return sol;
  }
  if (y.cols() > 14 || k > 4) {
    throw Error(ErrorCode::InstanceTooLarge, "exact enumeration is limited to n <= 14 and k <= 4");
  }
  const Eigen::VectorXd mean = y.rowwise().mean();
  const Eigen::MatrixXd centered = y.colwise() - mean;

  PartitionSearch search{centered, k, y.cols(), Eigen::MatrixXd::Zero(y.rows(), k), Eigen::VectorXd::Zero(k),
                         std::vector<int>(static_cast<std::size_t>(k), 0),
                         LabelVector(static_cast<std::size_t>(y.cols()), 0), {}};
  search.place(0, 0);

  KMeansSolution sol;
  sol.labels = std::move(search.best);
  sol.centers = class_means(y, sol.labels, k);
  sol.objective = objective(y, sol.labels, sol.centers);
  sol.iterations = 0;
  sol.converged = true;
  return sol;
}

KMeansSolution refine_once(const Eigen::MatrixXd& y, const LabelVector& labels, int k) {
  check_labels(labels, y.cols(), k);
  std::vector<bool> empty;
  const Eigen::MatrixXd centers = class_means(y, labels, k, &empty);
  for (int j = 0; j < k; ++j) {
    if (empty[static_cast<std::size_t>(j)]) {
      throw Error(ErrorCode::EmptyInputClass, "class " + std::to_string(j) + " has no points");
    }
  }
  KMeansSolution sol;
  std::vector<double> dist;
  assign(y, centers, sol.labels, dist);
  sol.centers = centers;
  sol.objective = objective(y, sol.labels, sol.centers);
  sol.iterations = 1;
  sol.converged = sol.labels == labels;
  sol.trace = {sol.objective};
  return sol;
}

bool is_locally_optimal(const Eigen::MatrixXd& y, const LabelVector& labels, const Eigen::MatrixXd& centers) {
  for (Eigen::Index i = 0; i < y.cols(); ++i) {
    const double own = squared_distance(y, i, centers, labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < centers.cols(); ++j) {
      if (squared_distance(y, i, centers, j) < own) return false;
    }
  }
  return true;
}

}  // namespace specgmm::kmeans
