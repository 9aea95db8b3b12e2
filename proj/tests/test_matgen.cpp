#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "specgmm/error.hpp"
#include "specgmm/matgen.hpp"

using namespace specgmm;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

GmmSpec make_spec(int n, int p, int k, double delta, double beta = 1.0, Layout layout = Layout::Simplex,
                  std::uint64_t seed = 1) {
  GmmSpec s;
  s.n = n;
  s.p = p;
  s.k = k;
  s.delta = delta;
  s.beta = beta;
  s.layout = layout;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("build_centers: simplex k=2") {
  const auto c = matgen::build_centers(Layout::Simplex, 2, 3, 4.0);
  CHECK(c.rows() == 3);
  CHECK(c.cols() == 2);
  CHECK(c(0, 0) == doctest::Approx(-2.0));
  CHECK(c(0, 1) == doctest::Approx(2.0));
  CHECK(c.bottomRows(2).isZero(0.0));
  CHECK(matgen::min_pairwise_distance(c) == doctest::Approx(4.0));
}

TEST_CASE("build_centers: collinear k=3") {
  const auto c = matgen::build_centers(Layout::Collinear, 3, 4, 2.0);
  CHECK(c(0, 0) == doctest::Approx(-2.0));
  CHECK(c(0, 1) == doctest::Approx(0.0));
  CHECK(c(0, 2) == doctest::Approx(2.0));
  CHECK(c.bottomRows(3).isZero(0.0));
  CHECK(matgen::min_pairwise_distance(c) == doctest::Approx(2.0));
}

TEST_CASE("build_centers: simplex pairwise distances are all delta") {
  const auto tri = matgen::build_centers(Layout::Simplex, 3, 2, 1.0);
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) CHECK(std::abs((tri.col(a) - tri.col(b)).norm() - 1.0) <= 1e-12);
  for (int k = 2; k <= 7; ++k) {
    const auto c = matgen::build_centers(Layout::Simplex, k, k + 2, 3.5);
    CHECK(c.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);  // mean-centered
    CHECK(c.bottomRows(3).isZero(0.0));
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b) CHECK(std::abs((c.col(a) - c.col(b)).norm() - 3.5) <= 1e-12);
  }
}

TEST_CASE("build_centers: dimension errors") {
  CHECK(code_of([] { matgen::build_centers(Layout::Simplex, 4, 2, 1.0); }) == ErrorCode::DimensionTooSmall);
  CHECK(code_of([] { matgen::build_centers(Layout::Collinear, 2, 0, 1.0); }) == ErrorCode::DimensionTooSmall);
}

TEST_CASE("assign_labels: sizes") {
  CHECK(matgen::min_cluster_size(10, 3, 0.6) == 2);
  const auto l = matgen::assign_labels(10, 3, 0.6, 5);
  const auto sizes = matgen::cluster_sizes(l, 3);
  CHECK(*std::min_element(sizes.begin(), sizes.end()) >= 2);
  CHECK(sizes[0] == 2);
  CHECK(sizes[0] + sizes[1] + sizes[2] == 10);

  const auto balanced = matgen::cluster_sizes(matgen::assign_labels(12, 3, 1.0, 1), 3);
  CHECK(balanced == std::vector<int>{4, 4, 4});

  const auto l9 = matgen::assign_labels(9, 2, 0.5, 3);
  const auto s9 = matgen::cluster_sizes(l9, 2);
  CHECK(s9 == std::vector<int>{3, 6});
  CHECK(matgen::realized_beta(l9, 2) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("assign_labels: deterministic, shuffled, infeasible") {
  CHECK(matgen::assign_labels(50, 4, 0.8, 9) == matgen::assign_labels(50, 4, 0.8, 9));
  CHECK(matgen::assign_labels(50, 4, 0.8, 9) != matgen::assign_labels(50, 4, 0.8, 10));
  CHECK(code_of([] { matgen::assign_labels(10, 3, 1.0, 1); }) == ErrorCode::InfeasibleBalance);
  CHECK(code_of([] { matgen::assign_labels(5, 6, 1.0, 1); }) == ErrorCode::InfeasibleBalance);
}

TEST_CASE("realized beta never undershoots") {
  for (int n = 6; n < 60; n += 7) {
    for (int k = 1; k <= 5; ++k) {
      for (double beta : {0.3, 0.5, 0.77, 1.0}) {
        if (beta * n / k < 1.0 || matgen::min_cluster_size(n, k, beta) * k > n) continue;
        const auto l = matgen::assign_labels(n, k, beta, static_cast<std::uint64_t>(n * k));
        CHECK(matgen::realized_beta(l, k) >= beta - 1e-12);
      }
    }
  }
}

TEST_CASE("sample_instance: zero noise gives X = P") {
  auto spec = make_spec(42, 5, 3, 2.0);
  spec.noise = NoiseModel::none();
  const auto inst = matgen::sample_instance(spec);
  CHECK(inst.X == inst.P);
  CHECK(inst.E.isZero(0.0));
  CHECK_FALSE(matgen::check_instance(inst).has_value());

  spec.noise = NoiseModel::gaussian(Eigen::MatrixXd::Zero(5, 5));
  CHECK(matgen::sample_instance(spec).X == matgen::sample_instance(spec).P);
}

TEST_CASE("sample_instance: isotropic noise moments") {
  const auto inst = matgen::sample_instance(make_spec(2000, 5, 2, 3.0));
  CHECK(std::abs(inst.E.mean()) <= 4.0 / std::sqrt(2000.0 * 5.0));
  const auto big = matgen::sample_instance(make_spec(20000, 6, 2, 3.0, 1.0, Layout::Simplex, 77));
  const double var = (big.E.array() - big.E.mean()).square().sum() / (big.E.size() - 1);
  CHECK(var >= 0.95);
  CHECK(var <= 1.05);
}

TEST_CASE("sample_instance: determinism and X = P + E") {
  const auto spec = make_spec(100, 8, 4, 5.0, 0.7, Layout::Collinear, 123);
  const auto a = matgen::sample_instance(spec);
  const auto b = matgen::sample_instance(spec);
  CHECK(a.X == b.X);
  CHECK(a.z_star == b.z_star);
  CHECK(a.X == a.P + a.E);
  CHECK_FALSE(matgen::check_instance(a).has_value());
}

TEST_CASE("sample_instance: covariance and bounded-uniform noise") {
  auto spec = make_spec(20000, 2, 2, 1.0);
  Eigen::Matrix2d cov;
  cov << 2.0, 0.6, 0.6, 0.5;
  spec.noise = NoiseModel::gaussian(cov);
  const auto inst = matgen::sample_instance(spec);
  const Eigen::MatrixXd emp = inst.E * inst.E.transpose() / static_cast<double>(spec.n);
  CHECK((emp - cov).cwiseAbs().maxCoeff() <= 0.06);

  spec.noise = NoiseModel::bounded_uniform(2.0);
  const auto u = matgen::sample_instance(spec);
  CHECK(u.E.cwiseAbs().maxCoeff() <= std::sqrt(6.0));
  const double var = u.E.array().square().mean();
  CHECK(var == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("validate rejects bad specs") {
  CHECK(code_of([] { matgen::validate(make_spec(3, 2, 4, 1.0)); }) == ErrorCode::KExceedsN);
  CHECK(code_of([] { matgen::validate(make_spec(10, 2, 2, 1.0, 0.0)); }) == ErrorCode::InvalidSpec);
  CHECK(code_of([] { matgen::validate(make_spec(10, 2, 2, -1.0)); }) == ErrorCode::InvalidSpec);
  CHECK(code_of([] { matgen::validate(make_spec(12, 1, 3, 1.0)); }) == ErrorCode::DimensionTooSmall);

  auto asym = make_spec(10, 2, 2, 1.0);
  Eigen::Matrix2d cov;
  cov << 1, 0.5, 0.4, 1;
  asym.noise = NoiseModel::gaussian(cov);
  CHECK(code_of([&] { matgen::validate(asym); }) == ErrorCode::InvalidSpec);
  cov << 1, 2, 2, 1;  // eigenvalue -1
  asym.noise = NoiseModel::gaussian(cov);
  CHECK(code_of([&] { matgen::validate(asym); }) == ErrorCode::InvalidSpec);

  auto expl = make_spec(10, 2, 2, 3.0, 1.0, Layout::Explicit);
  expl.explicit_centers = Eigen::Matrix2d::Identity();  // separation sqrt 2, not 3
  CHECK(code_of([&] { matgen::validate(expl); }) == ErrorCode::InvalidSpec);
  expl.delta = std::sqrt(2.0);
  CHECK_NOTHROW(matgen::validate(expl));
}
