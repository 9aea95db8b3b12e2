#include <doctest.h>

#include "specgmm/metrics.hpp"
#include "specgmm/spectral.hpp"
#include "test_helpers.hpp"

using namespace specgmm;

namespace {

GmmSpec spec_of(int n, int p, int k, double delta, Layout layout, std::uint64_t seed, bool noiseless = false) {
  GmmSpec s;
  s.n = n;
  s.p = p;
  s.k = k;
  s.delta = delta;
  s.layout = layout;
  s.seed = seed;
  if (noiseless) s.noise = NoiseModel::none();
  return s;
}

void check_output_invariants(const Eigen::MatrixXd& x, int k, const SpectralOutput& out) {
  const auto m = std::min<Eigen::Index>(k, x.rows());
  CHECK(out.centers_reduced.rows() == m);
  CHECK(out.centers_reduced.cols() == k);
  CHECK((out.centers_ambient - out.svd.U * out.centers_reduced).cwiseAbs().maxCoeff() <= 1e-9);
  const Eigen::MatrixXd y = out.svd.sigma.asDiagonal() * out.svd.V.transpose();
  const double recomputed = kmeans::objective(y, out.labels, out.centers_reduced);
  CHECK(std::abs(recomputed - out.objective) <= 1e-9 * std::max(1.0, out.objective));
}

}  // namespace

TEST_CASE("algorithm names") {
  CHECK(parse_algorithm("alg2") == Algorithm::Alg2);
  CHECK(to_string(Algorithm::Alg3) == "alg3");
  CHECK_THROWS(parse_algorithm("alg4"));
}

TEST_CASE("zero noise: every algorithm recovers z* exactly") {
  for (auto layout : {Layout::Simplex, Layout::Collinear}) {
    const auto inst = matgen::sample_instance(spec_of(60, 6, 3, 1.5, layout, 3, true));
    for (auto alg : {Algorithm::Alg1, Algorithm::Alg2, Algorithm::Alg3}) {
      const auto out = spectral::run(alg, inst.X, 3, KMeansConfig{});
      CHECK(metrics::misclustering_loss(out.labels, inst.z_star, 3).loss == 0.0);
      check_output_invariants(inst.X, 3, out);
    }
  }
}

TEST_CASE("p < k keeps all p directions") {
  const auto inst = matgen::sample_instance(spec_of(90, 2, 3, 6.0, Layout::Simplex, 5));
  const auto proj = spectral::project(inst.X, 3);
  CHECK(proj.y.rows() == 2);
  CHECK(proj.y.cols() == 90);
}

TEST_CASE("golden: simplex n=100 p=10 k=2 delta=20 seed=42") {
  const auto inst = matgen::sample_instance(spec_of(100, 10, 2, 20.0, Layout::Simplex, 42));
  const auto out = spectral::algorithm1(inst.X, 2, KMeansConfig{});
  CHECK(metrics::misclustering_loss(out.labels, inst.z_star, 2).loss == 0.0);
}

TEST_CASE("algorithm2 refines and is locally optimal") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = matgen::sample_instance(spec_of(150, 8, 3, 2.5, Layout::Simplex, 7 + s));
    KMeansConfig cfg;
    cfg.seed = s;
    const auto two = spectral::algorithm2(inst.X, 3, cfg);
    REQUIRE(two.unrefined_objective.has_value());
    CHECK(two.objective <= *two.unrefined_objective + 1e-12);
    const Eigen::MatrixXd y = two.svd.sigma.asDiagonal() * two.svd.V.transpose();
    CHECK(kmeans::is_locally_optimal(y, two.labels, two.centers_reduced));
    check_output_invariants(inst.X, 3, two);
  }
}

TEST_CASE("algorithm3 matches algorithm1 after a permutation") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto layout = s % 2 ? Layout::Collinear : Layout::Simplex;
    const auto inst = matgen::sample_instance(spec_of(120, 12, 4, 2.0, layout, 100 + s));
    KMeansConfig cfg;
    cfg.seed = s;
    const auto one = spectral::algorithm1(inst.X, 4, cfg);
    const auto three = spectral::algorithm3(inst.X, 4, cfg);
    const auto match = metrics::misclustering_loss(one.labels, three.labels, 4);
    CHECK(match.loss == 0.0);
    for (int j = 0; j < 4; ++j) {
      const int mapped = match.permutation[static_cast<std::size_t>(j)];
      CHECK((three.centers_ambient.col(mapped) - one.svd.U * one.centers_reduced.col(j)).norm() <= 1e-9);
    }
  }
}

TEST_CASE("isometry between the rank-m approximation and the weighted coordinates") {
  const auto inst = matgen::sample_instance(spec_of(42, 15, 3, 3.0, Layout::Simplex, 8));
  const auto proj = spectral::project(inst.X, 3);
  const Eigen::MatrixXd p_hat = proj.svd.U * proj.y;
  for (int i = 0; i < 42; i += 3)
    for (int j = i + 1; j < 42; j += 5)
      CHECK(std::abs((p_hat.col(i) - p_hat.col(j)).norm() - (proj.y.col(i) - proj.y.col(j)).norm()) <= 1e-9);
}

TEST_CASE("rotating the data leaves the loss unchanged") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto inst = matgen::sample_instance(spec_of(201, 6, 3, 4.0, Layout::Simplex, 300 + s));
    const Eigen::MatrixXd q = testing::random_orthogonal(6, s);
    KMeansConfig cfg;
    cfg.seed = s;
    const auto a = spectral::algorithm1(inst.X, 3, cfg);
    const auto b = spectral::algorithm1(Eigen::MatrixXd(q * inst.X), 3, cfg);
    CHECK(metrics::misclustering_loss(a.labels, inst.z_star, 3).loss ==
          metrics::misclustering_loss(b.labels, inst.z_star, 3).loss);
  }
}

TEST_CASE("k > n is rejected") {
  CHECK_THROWS_AS(spectral::algorithm1(Eigen::MatrixXd::Ones(3, 2), 3, KMeansConfig{}), Error);
}
