#include "specgmm/matgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "specgmm/error.hpp"
#include "specgmm/rng.hpp"

namespace specgmm {

namespace {

constexpr std::uint64_t kLabelStream = 0x6c6162656c73ULL;  // "labels"
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;    // "noise"

void validate_noise(const NoiseModel& noise, int p) {
  switch (noise.variant) {
    case NoiseVariant::IsotropicGaussian:
      return;
    case NoiseVariant::BoundedUniform:
      if (!(noise.variance_proxy >= 0.0) || !std::isfinite(noise.variance_proxy)) {
        throw Error(ErrorCode::InvalidSpec, "noise.variance_proxy must be finite and >= 0");
      }
      return;
    case NoiseVariant::GaussianWithCovariance: {
      const auto& cov = noise.covariance;
      if (cov.rows() != p || cov.cols() != p) {
        throw Error(ErrorCode::InvalidSpec, "noise.covariance must be p x p (p = " + std::to_string(p) + ")");
      }
      if (!cov.allFinite()) throw Error(ErrorCode::InvalidSpec, "noise.covariance has non-finite entries");
      if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw Error(ErrorCode::InvalidSpec, "noise.covariance is not symmetric");
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().minCoeff() < -1e-10) {
        throw Error(ErrorCode::InvalidSpec, "noise.covariance is not positive semidefinite");
      }
      return;
    }
  }
}

}  // namespace

bool NoiseModel::is_zero() const {
  switch (variant) {
    case NoiseVariant::IsotropicGaussian: return false;
    case NoiseVariant::BoundedUniform: return variance_proxy == 0.0;
    case NoiseVariant::GaussianWithCovariance: return covariance.size() == 0 || covariance.isZero(0.0);
  }
  return false;
}

namespace matgen {

int min_cluster_size(int n, int k, double beta) {
  return static_cast<int>(std::ceil(beta * n / k - 1e-9));
}

void validate(const GmmSpec& spec) {
  if (spec.n < 1 || spec.p < 1 || spec.k < 1) {
    throw Error(ErrorCode::InvalidSpec, "n, p and k must be positive");
  }
  if (spec.k > spec.n) throw Error(ErrorCode::KExceedsN, "k must not exceed n");
  if (!std::isfinite(spec.delta) || spec.delta < 0.0) {
    throw Error(ErrorCode::InvalidSpec, "delta must be finite and >= 0");
  }
  if (!(spec.beta > 0.0 && spec.beta <= 1.0)) throw Error(ErrorCode::InvalidSpec, "beta must lie in (0, 1]");
  if (spec.beta * spec.n / spec.k < 1.0 - 1e-12) {
    throw Error(ErrorCode::InfeasibleBalance, "beta * n / k < 1 leaves the smallest cluster empty");
  }
  if (static_cast<long long>(min_cluster_size(spec.n, spec.k, spec.beta)) * spec.k > spec.n) {
    throw Error(ErrorCode::InfeasibleBalance, "ceil(beta n / k) * k exceeds n");
  }
  switch (spec.layout) {
    case Layout::Simplex:
      if (spec.p < spec.k - 1) throw Error(ErrorCode::DimensionTooSmall, "simplex layout needs p >= k - 1");
      break;
    case Layout::Collinear:
      break;
    case Layout::Explicit: {
      const auto& c = spec.explicit_centers;
      if (c.rows() != spec.p || c.cols() != spec.k) {
        throw Error(ErrorCode::InvalidSpec, "explicit centers must be p x k");
      }
      if (spec.k >= 2) {
        const double realized = min_pairwise_distance(c);
        if (std::abs(realized - spec.delta) > 1e-9 * std::max(1.0, spec.delta)) {
          throw Error(ErrorCode::InvalidSpec, "explicit centers have minimum distance " +
                                                  std::to_string(realized) + ", spec.delta is " +
                                                  std::to_string(spec.delta));
        }
      }
      break;
    }
  }
  validate_noise(spec.noise, spec.p);
}

Eigen::MatrixXd build_centers(Layout layout, int k, int p, double delta,
                              const Eigen::MatrixXd& explicit_centers) {
  if (!(delta >= 0.0)) throw Error(ErrorCode::InvalidSpec, "delta must be >= 0");
  if (p < 1) throw Error(ErrorCode::DimensionTooSmall, "p must be >= 1");
  Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(p, k);
  switch (layout) {
    case Layout::Simplex: {
      if (p < k - 1) throw Error(ErrorCode::DimensionTooSmall, "simplex layout needs p >= k - 1");
      // Vertices e_j of the standard simplex (side sqrt 2) expressed in the
      // Helmert basis of the hyperplane orthogonal to the all-ones vector.
      const double scale = delta / std::sqrt(2.0);
      for (int m = 1; m < k; ++m) {
        const double norm = std::sqrt(static_cast<double>(m) * (m + 1));
        for (int j = 0; j < m; ++j) centers(m - 1, j) = -scale / norm;
        centers(m - 1, m) = scale * m / norm;
      }
      break;
    }
    case Layout::Collinear:
      for (int j = 0; j < k; ++j) centers(0, j) = delta * (j - 0.5 * (k - 1));
      break;
    case Layout::Explicit:
      if (explicit_centers.rows() != p || explicit_centers.cols() != k) {
        throw Error(ErrorCode::InvalidSpec, "explicit centers must be p x k");
      }
      centers = explicit_centers;
      break;
  }
  return centers;
}

LabelVector assign_labels(int n, int k, double beta, std::uint64_t seed) {
  const int small = min_cluster_size(n, k, beta);
  if (beta * n / k < 1.0 - 1e-12 || static_cast<long long>(small) * k > n) {
    throw Error(ErrorCode::InfeasibleBalance,
                "cannot give every cluster ceil(beta n / k) = " + std::to_string(small) + " points");
  }
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  sizes[0] = small;
  if (k > 1) {
    const int rest = n - small;
    const int base = rest / (k - 1);
    const int extra = rest % (k - 1);
    for (int j = 1; j < k; ++j) sizes[static_cast<std::size_t>(j)] = base + (j - 1 < extra ? 1 : 0);
  } else {
    sizes[0] = n;
  }

  LabelVector labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < k; ++j) labels.insert(labels.end(), static_cast<std::size_t>(sizes[static_cast<std::size_t>(j)]), j);

  rng::Stream stream(rng::combine({seed, kLabelStream}));
  for (std::size_t i = labels.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(stream.below(i));
    std::swap(labels[i - 1], labels[j]);
  }
  return labels;
}

std::vector<int> cluster_sizes(const LabelVector& labels, int k) {
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int z : labels) {
    if (z < 0 || z >= k) throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(z));
    ++sizes[static_cast<std::size_t>(z)];
  }
  return sizes;
}

double realized_beta(const LabelVector& labels, int k) {
  const auto sizes = cluster_sizes(labels, k);
  const int smallest = *std::min_element(sizes.begin(), sizes.end());
  return smallest / (static_cast<double>(labels.size()) / k);
}

Eigen::MatrixXd sample_noise(int p, int n, const NoiseModel& noise, std::uint64_t seed) {
  const rng::CounterRng gen(rng::combine({seed, kNoiseStream}));
  Eigen::MatrixXd e(p, n);
  const auto index = [p](int i, int j) {
    return static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(p) + static_cast<std::uint64_t>(i);
  };

  switch (noise.variant) {
    case NoiseVariant::IsotropicGaussian:
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < p; ++i) e(i, j) = gen.normal(index(i, j));
      break;
    case NoiseVariant::BoundedUniform: {
      const double half_width = std::sqrt(3.0 * noise.variance_proxy);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < p; ++i) e(i, j) = half_width * (2.0 * gen.uniform(index(i, j)) - 1.0);
      break;
    }
    case NoiseVariant::GaussianWithCovariance: {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(noise.covariance);
      const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      const Eigen::MatrixXd factor = eig.eigenvectors() * root.asDiagonal();
      Eigen::MatrixXd z(p, n);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < p; ++i) z(i, j) = gen.normal(index(i, j));
      e.noalias() = factor * z;
      break;
    }
  }
  return e;
}

Eigen::MatrixXd population_matrix(const Eigen::MatrixXd& centers, const LabelVector& labels) {
  Eigen::MatrixXd pop(centers.rows(), static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) pop.col(static_cast<Eigen::Index>(i)) = centers.col(labels[i]);
  return pop;
}

GmmInstance sample_instance(const GmmSpec& spec) {
  validate(spec);
  GmmInstance inst;
  inst.spec = spec;
  inst.centers = build_centers(spec.layout, spec.k, spec.p, spec.delta, spec.explicit_centers);
  inst.z_star = assign_labels(spec.n, spec.k, spec.beta, spec.seed);
  inst.P = population_matrix(inst.centers, inst.z_star);
  inst.E = sample_noise(spec.p, spec.n, spec.noise, spec.seed);
  inst.X = inst.P + inst.E;
  return inst;
}

double min_pairwise_distance(const Eigen::MatrixXd& centers) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centers.cols(); ++j)
    for (Eigen::Index l = j + 1; l < centers.cols(); ++l)
      best = std::min(best, (centers.col(j) - centers.col(l)).norm());
  return best;
}

std::optional<std::string> check_instance(const GmmInstance& inst) {
  const auto& s = inst.spec;
  if (inst.X.rows() != s.p || inst.X.cols() != s.n) return "X has the wrong shape";
  if (inst.P.rows() != s.p || inst.P.cols() != s.n || inst.E.rows() != s.p || inst.E.cols() != s.n) {
    return "P or E has the wrong shape";
  }
  if ((inst.X.array() != (inst.P + inst.E).array()).any()) return "X != P + E";
  if (static_cast<int>(inst.z_star.size()) != s.n) return "z_star has the wrong length";
  for (int z : inst.z_star)
    if (z < 0 || z >= s.k) return "label out of range";
  const auto sizes = cluster_sizes(inst.z_star, s.k);
  if (*std::min_element(sizes.begin(), sizes.end()) < min_cluster_size(s.n, s.k, s.beta)) {
    return "smallest cluster is below ceil(beta n / k)";
  }
  if (s.k >= 2) {
    const double realized = min_pairwise_distance(inst.centers);
    if (std::abs(realized - s.delta) > 1e-9 * std::max(1.0, s.delta)) {
      return "minimum center distance " + std::to_string(realized) + " differs from delta";
    }
  }
  for (int i = 0; i < s.n; ++i) {
    if ((inst.P.col(i).array() != inst.centers.col(inst.z_star[static_cast<std::size_t>(i)]).array()).any()) {
      return "P column " + std::to_string(i) + " differs from its center";
    }
  }
  return std::nullopt;
}

}  // namespace matgen
}  // namespace specgmm
