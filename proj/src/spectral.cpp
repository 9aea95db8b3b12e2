#include "specgmm/spectral.hpp"

#include <algorithm>
#include <string>

#include "specgmm/error.hpp"

namespace specgmm {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Alg1: return "alg1";
    case Algorithm::Alg2: return "alg2";
    case Algorithm::Alg3: return "alg3";
  }
  return "alg1";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "alg1") return Algorithm::Alg1;
  if (name == "alg2") return Algorithm::Alg2;
  if (name == "alg3") return Algorithm::Alg3;
  throw Error(ErrorCode::InvalidSpec, "unknown algorithm '" + std::string(name) + "'");
}

namespace spectral {

namespace {

void check_inputs(const Eigen::MatrixXd& x, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidSpec, "k must be positive");
  if (k > x.cols()) {
    throw Error(ErrorCode::KExceedsN, "k = " + std::to_string(k) + " exceeds n = " + std::to_string(x.cols()));
  }
}

// Gives every empty class the point farthest from its current center, taken
// from classes that can spare one.
LabelVector fill_empty_classes(const Eigen::MatrixXd& y, LabelVector labels, const Eigen::MatrixXd& centers, int k) {
  auto sizes = matgen::cluster_sizes(labels, k);
  for (int j = 0; j < k; ++j) {
    if (sizes[static_cast<std::size_t>(j)] > 0) continue;
    Eigen::Index far = -1;
    double far_d = -1.0;
    for (Eigen::Index i = 0; i < y.cols(); ++i) {
      const int z = labels[static_cast<std::size_t>(i)];
      if (sizes[static_cast<std::size_t>(z)] < 2) continue;
      const double d = (y.col(i) - centers.col(z)).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
    labels[static_cast<std::size_t>(far)] = j;
    ++sizes[static_cast<std::size_t>(j)];
  }
  return labels;
}

SpectralOutput package(Projection proj, KMeansSolution sol) {
  SpectralOutput out;
  out.labels = std::move(sol.labels);
  out.centers_ambient = proj.svd.U * sol.centers;
  out.centers_reduced = std::move(sol.centers);
  out.objective = sol.objective;
  out.restart = sol.restart;
  out.svd = std::move(proj.svd);
  return out;
}

}  // namespace

Projection project(const Eigen::MatrixXd& x, int k) {
  check_inputs(x, k);
  const auto m = std::min<Eigen::Index>(k, x.rows());
  Projection proj;
  proj.svd = numlin::truncate(numlin::thin_svd(x), m);
  proj.y = proj.svd.sigma.asDiagonal() * proj.svd.V.transpose();
  return proj;
}

SpectralOutput algorithm1(const Eigen::MatrixXd& x, int k, const KMeansConfig& config) {
  Projection proj = project(x, k);
  KMeansSolution sol = kmeans::solve(proj.y, k, config);
  return package(std::move(proj), std::move(sol));
}

SpectralOutput algorithm2(const Eigen::MatrixXd& x, int k, const KMeansConfig& config) {
  Projection proj = project(x, k);
  const KMeansSolution approx = kmeans::solve(proj.y, k, config);
  const LabelVector start = fill_empty_classes(proj.y, approx.labels, approx.centers, k);
  KMeansSolution refined = kmeans::refine_once(proj.y, start, k);
  refined.restart = approx.restart;
  SpectralOutput out = package(std::move(proj), std::move(refined));
  out.unrefined_objective = approx.objective;
  return out;
}

SpectralOutput algorithm3(const Eigen::MatrixXd& x, int k, const KMeansConfig& config) {
  Projection proj = project(x, k);
  const KMeansSolution reduced = kmeans::solve(proj.y, k, config);

  const Eigen::MatrixXd p_hat = proj.svd.U * proj.y;
  const Eigen::MatrixXd init = proj.svd.U * kmeans::kmeanspp_seed(proj.y, k, kmeans::restart_seed(config, reduced.restart));
  KMeansSolution sol = kmeans::lloyd(p_hat, init, config);
  sol.restart = reduced.restart;

  SpectralOutput out;
  out.labels = std::move(sol.labels);
  out.centers_reduced = proj.svd.U.transpose() * sol.centers;
  out.centers_ambient = std::move(sol.centers);
  out.objective = sol.objective;
  out.restart = sol.restart;
  out.svd = std::move(proj.svd);
  return out;
}

SpectralOutput run(Algorithm algorithm, const Eigen::MatrixXd& x, int k, const KMeansConfig& config) {
  switch (algorithm) {
    case Algorithm::Alg1: return algorithm1(x, k, config);
    case Algorithm::Alg2: return algorithm2(x, k, config);
    case Algorithm::Alg3: return algorithm3(x, k, config);
  }
  return algorithm1(x, k, config);
}

}  // namespace spectral
}  // namespace specgmm
