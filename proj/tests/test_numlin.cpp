#include <doctest.h>

#include <cmath>
#include <numbers>

#include "specgmm/error.hpp"
#include "specgmm/numlin.hpp"
#include "test_helpers.hpp"

using namespace specgmm;
using testing::gaussian;

namespace {

void check_invariants(const Eigen::MatrixXd& m, const numlin::SvdFactors<double>& f) {
  const auto r = f.size();
  CHECK(r == std::min(m.rows(), m.cols()));
  CHECK((f.U.transpose() * f.U - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((f.V.transpose() * f.V - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff() <= 1e-10);
  for (Eigen::Index j = 1; j < r; ++j) CHECK(f.sigma(j) <= f.sigma(j - 1));
  CHECK(f.sigma.minCoeff() >= 0.0);
  CHECK((f.reconstruct() - m).norm() <= 1e-9 * std::max(1.0, m.norm()));
  for (Eigen::Index j = 0; j < r; ++j) {
    Eigen::Index arg = 0;
    f.U.col(j).cwiseAbs().maxCoeff(&arg);
    CHECK(f.U(arg, j) >= 0.0);
  }
}

}  // namespace

TEST_CASE("thin_svd of a diagonal matrix") {
  const Eigen::Matrix2d m = Eigen::Vector2d(3, 1).asDiagonal();
  const auto f = numlin::thin_svd(m);
  CHECK(f.sigma(0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(f.sigma(1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK((f.U - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((f.V - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("thin_svd of the 2x2 all-ones matrix") {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Ones(2, 2);
  const auto f = numlin::thin_svd(m);
  CHECK(f.sigma(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(std::abs(f.sigma(1)) <= 1e-14);
  const double h = 1.0 / std::numbers::sqrt2;
  CHECK(f.U(0, 0) == doctest::Approx(h).epsilon(1e-14));
  CHECK(f.U(1, 0) == doctest::Approx(h).epsilon(1e-14));
  CHECK(f.V(0, 0) == doctest::Approx(h).epsilon(1e-14));
  CHECK(f.V(1, 0) == doctest::Approx(h).epsilon(1e-14));
  check_invariants(m, f);
}

TEST_CASE("thin_svd invariants on random, tall, wide and rank-deficient input") {
  check_invariants(gaussian(5, 8, 1), numlin::thin_svd(gaussian(5, 8, 1)));
  check_invariants(gaussian(9, 4, 2), numlin::thin_svd(gaussian(9, 4, 2)));
  const Eigen::MatrixXd low = gaussian(12, 2, 3) * gaussian(2, 30, 4);
  const auto f = numlin::thin_svd(low);
  check_invariants(low, f);
  CHECK(numlin::numerical_rank(f.sigma) == 2);
  // Exact duplicate columns.
  Eigen::MatrixXd dup(3, 6);
  dup << 1, 1, 1, 2, 2, 2, 0, 0, 0, 1, 1, 1, 3, 3, 3, 0, 0, 0;
  check_invariants(dup, numlin::thin_svd(dup));
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(4, 3);
  const auto fz = numlin::thin_svd(zero);
  check_invariants(zero, fz);
  CHECK(fz.sigma.isZero(0.0));
}

TEST_CASE("thin_svd is deterministic") {
  const Eigen::MatrixXd m = gaussian(20, 35, 5);
  const auto a = numlin::thin_svd(m);
  const auto b = numlin::thin_svd(m);
  CHECK(a.U == b.U);
  CHECK(a.V == b.V);
  CHECK(a.sigma == b.sigma);
}

TEST_CASE("truncate keeps the leading triples") {
  const Eigen::Matrix2d m = Eigen::Vector2d(3, 1).asDiagonal();
  const auto f = numlin::thin_svd(m);
  const auto t1 = numlin::truncate(f, 1);
  CHECK(t1.size() == 1);
  CHECK(t1.sigma(0) == doctest::Approx(3.0));
  Eigen::Matrix2d expected = Eigen::Matrix2d::Zero();
  expected(0, 0) = 3;
  CHECK((t1.reconstruct() - expected).cwiseAbs().maxCoeff() <= 1e-15);

  const auto t2 = numlin::truncate(f, 2);
  CHECK(t2.U == f.U);
  CHECK(t2.V == f.V);
  CHECK(t2.sigma == f.sigma);

  CHECK_THROWS_AS(numlin::truncate(f, 0), Error);
  CHECK_THROWS_AS(numlin::truncate(f, 3), Error);
  try {
    numlin::truncate(f, 3);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankRequestTooLarge);
  }
}

TEST_CASE("operator_norm") {
  CHECK(numlin::operator_norm(Eigen::Matrix2d(Eigen::Vector2d(3, 1).asDiagonal())) == doctest::Approx(3.0));
  CHECK(numlin::operator_norm(Eigen::MatrixXd::Zero(3, 4)) == 0.0);
  CHECK(numlin::operator_norm(Eigen::MatrixXd::Ones(2, 2)) == doctest::Approx(2.0).epsilon(1e-14));
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Eigen::MatrixXd m = gaussian(3 + s % 7, 4 + (s * 3) % 11, 100 + s);
    const double a = numlin::operator_norm(m);
    const double b = numlin::thin_svd(m).sigma(0);
    CHECK(std::abs(a - b) <= 1e-10 * b);
  }
}

TEST_CASE("projector_distance") {
  const Eigen::Vector2d e1(1, 0), e2(0, 1);
  CHECK(numlin::projector_distance(e1, e1) == 0.0);
  CHECK(numlin::projector_distance(e1, e2) == doctest::Approx(1.0));
  const double th = std::numbers::pi / 6;
  const Eigen::Vector2d v(std::cos(th), std::sin(th));
  CHECK(numlin::projector_distance(e1, v) == doctest::Approx(0.5).epsilon(1e-14));

  // Agrees with the operator norm of the projector difference, and is symmetric.
  const Eigen::MatrixXd q1 = testing::random_orthogonal(7, 1).leftCols(3);
  const Eigen::MatrixXd q2 = testing::random_orthogonal(7, 2).leftCols(3);
  const double direct = numlin::operator_norm(Eigen::MatrixXd(q1 * q1.transpose() - q2 * q2.transpose()));
  CHECK(numlin::projector_distance(q1, q2) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(numlin::projector_distance(q2, q1) == doctest::Approx(direct).epsilon(1e-12));

  CHECK_THROWS_AS(numlin::projector_distance(q1, q2.leftCols(2)), Error);
}

TEST_CASE("Weyl consistency on random pairs") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Eigen::MatrixXd m = gaussian(6, 9, 200 + s);
    const Eigen::MatrixXd e = 0.3 * gaussian(6, 9, 300 + s);
    const auto a = numlin::thin_svd(m).sigma;
    const auto b = numlin::thin_svd(Eigen::MatrixXd(m + e)).sigma;
    const double norm_e = numlin::operator_norm(e);
    for (Eigen::Index j = 0; j < a.size(); ++j) CHECK(std::abs(a(j) - b(j)) <= norm_e + 1e-12);
  }
}

TEST_CASE("column permutation permutes the rows of V") {
  const Eigen::MatrixXd m = gaussian(4, 10, 7);
  Eigen::VectorXi perm(10);
  for (int i = 0; i < 10; ++i) perm(i) = (3 * i + 5) % 10;
  Eigen::MatrixXd mp(4, 10);
  for (int i = 0; i < 10; ++i) mp.col(i) = m.col(perm(i));
  const auto f = numlin::thin_svd(m);
  const auto g = numlin::thin_svd(mp);
  CHECK((f.sigma - g.sigma).cwiseAbs().maxCoeff() <= 1e-12);
  // Distinct singular values, so vectors are unique once U's sign is fixed.
  CHECK((f.U - g.U).cwiseAbs().maxCoeff() <= 1e-10);
  for (int i = 0; i < 10; ++i) CHECK((g.V.row(i) - f.V.row(perm(i))).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("singular values scale with |c|") {
  const Eigen::MatrixXd m = gaussian(5, 7, 8);
  const auto f = numlin::thin_svd(m);
  for (double c : {-3.5, 0.25, 2.0}) {
    const auto g = numlin::thin_svd(Eigen::MatrixXd(c * m));
    CHECK((g.sigma - std::abs(c) * f.sigma).cwiseAbs().maxCoeff() <= 1e-12 * f.sigma(0) * std::abs(c));
  }
}

TEST_CASE("float instantiation") {
  const Eigen::MatrixXf m = gaussian(6, 4, 9).cast<float>();
  const auto f = numlin::thin_svd(m);
  CHECK((f.reconstruct() - m).norm() <= 1e-4f * m.norm());
}
