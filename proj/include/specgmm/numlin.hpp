#pragma once

// Dense linear algebra kernel: thin SVD by one-sided (Hestenes) Jacobi,
// truncation, operator norm and distances between spectral projectors.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "specgmm/error.hpp"

namespace specgmm::numlin {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Thin SVD  M = U diag(sigma) V^T  with sigma nonincreasing. Each column of U
/// has its largest-magnitude entry nonnegative (first index wins ties); V's
/// columns carry the compensating sign.
template <typename Scalar = double>
struct SvdFactors {
  Mat<Scalar> U;
  Vec<Scalar> sigma;
  Mat<Scalar> V;

  Eigen::Index size() const { return sigma.size(); }

  Mat<Scalar> reconstruct() const { return U * sigma.asDiagonal() * V.transpose(); }
};

inline constexpr int kJacobiSweepBudget = 60;

template <typename Scalar>
constexpr Scalar jacobi_tolerance() {
  return std::max(Scalar(1e-12), Scalar(8) * std::numeric_limits<Scalar>::epsilon());
}

namespace detail {

// Orthogonalizes the columns of `a` in place by plane rotations accumulated into `rot`.
template <typename Scalar>
void jacobi_sweeps(Mat<Scalar>& a, Mat<Scalar>& rot) {
  const Eigen::Index cols = a.cols();
  const Scalar tol = jacobi_tolerance<Scalar>();
  Vec<Scalar> sq(cols);

  for (int sweep = 0; sweep < kJacobiSweepBudget; ++sweep) {
    for (Eigen::Index j = 0; j < cols; ++j) sq(j) = a.col(j).squaredNorm();
    // Columns at roundoff level are numerically null; rotating them against
    // each other only shuffles noise and never converges.
    const Scalar floor_norm =
        (cols > 0 ? std::sqrt(sq.maxCoeff()) : Scalar(0)) * static_cast<Scalar>(a.rows()) *
        std::numeric_limits<Scalar>::epsilon();
    const Scalar floor_sq = floor_norm * floor_norm;
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < cols; ++p) {
      for (Eigen::Index q = p + 1; q < cols; ++q) {
        const Scalar alpha = sq(p);
        const Scalar beta = sq(q);
        if (alpha <= floor_sq || beta <= floor_sq) continue;
        const Scalar gamma = a.col(p).dot(a.col(q));
        if (std::abs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) continue;

        rotated = true;
        const Scalar zeta = (beta - alpha) / (Scalar(2) * gamma);
        const Scalar t = (zeta >= Scalar(0) ? Scalar(1) : Scalar(-1)) /
                         (std::abs(zeta) + std::sqrt(Scalar(1) + zeta * zeta));
        const Scalar c = Scalar(1) / std::sqrt(Scalar(1) + t * t);
        const Scalar s = c * t;

        auto ap = a.col(p);
        auto aq = a.col(q);
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
          const Scalar x = ap(i);
          const Scalar y = aq(i);
          ap(i) = c * x - s * y;
          aq(i) = s * x + c * y;
        }
        auto rp = rot.col(p);
        auto rq = rot.col(q);
        for (Eigen::Index i = 0; i < rot.rows(); ++i) {
          const Scalar x = rp(i);
          const Scalar y = rq(i);
          rp(i) = c * x - s * y;
          rq(i) = s * x + c * y;
        }
        sq(p) = alpha - t * gamma;
        sq(q) = beta + t * gamma;
      }
    }
    if (!rotated) return;
  }
  throw Error(ErrorCode::NoConvergence,
              "one-sided Jacobi exceeded " + std::to_string(kJacobiSweepBudget) + " sweeps");
}

// Replaces the columns of q not flagged in `valid` by unit vectors orthogonal
// to every other column, drawn from the standard basis in index order.
template <typename Scalar>
void complete_orthonormal(Mat<Scalar>& q, std::vector<bool> valid) {
  const Eigen::Index rows = q.rows();
  Eigen::Index next_basis = 0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (valid[j]) continue;
    while (next_basis < rows) {
      Vec<Scalar> v = Vec<Scalar>::Unit(rows, next_basis++);
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index l = 0; l < q.cols(); ++l) {
          if (valid[l]) v -= q.col(l).dot(v) * q.col(l);
        }
      }
      const Scalar norm = v.norm();
      if (norm > Scalar(0.5)) {
        q.col(j) = v / norm;
        valid[j] = true;
        break;
      }
    }
    if (!valid[j]) throw Error(ErrorCode::NoConvergence, "basis completion failed");
  }
}

}  // namespace detail

template <typename Derived>
SvdFactors<typename Derived::Scalar> thin_svd(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const bool transposed = m.rows() < m.cols();
  Mat<Scalar> a = transposed ? Mat<Scalar>(m.transpose()) : Mat<Scalar>(m);
  if (!a.allFinite()) throw Error(ErrorCode::InvalidSpec, "thin_svd: matrix has non-finite entries");

  const Eigen::Index r = a.cols();
  Mat<Scalar> rot = Mat<Scalar>::Identity(r, r);
  detail::jacobi_sweeps(a, rot);

  Vec<Scalar> norms(r);
  for (Eigen::Index j = 0; j < r; ++j) norms(j) = a.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return norms(x) > norms(y); });

  const Scalar largest = r > 0 ? norms(order.front()) : Scalar(0);
  const Scalar negligible =
      largest * static_cast<Scalar>(a.rows()) * std::numeric_limits<Scalar>::epsilon();

  Mat<Scalar> left(a.rows(), r);
  Mat<Scalar> right(r, r);
  Vec<Scalar> sigma(r);
  std::vector<bool> valid(static_cast<std::size_t>(r), true);
  for (Eigen::Index j = 0; j < r; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    sigma(j) = norms(src);
    right.col(j) = rot.col(src);
    if (sigma(j) > negligible && sigma(j) > Scalar(0)) {
      left.col(j) = a.col(src) / sigma(j);
    } else {
      left.col(j).setZero();
      valid[static_cast<std::size_t>(j)] = false;
    }
  }
  detail::complete_orthonormal(left, valid);

  SvdFactors<Scalar> f;
  if (transposed) {
    f.U = std::move(right);
    f.V = std::move(left);
  } else {
    f.U = std::move(left);
    f.V = std::move(right);
  }
  f.sigma = std::move(sigma);

  for (Eigen::Index j = 0; j < r; ++j) {
    Eigen::Index arg = 0;
    Scalar best = Scalar(-1);
    for (Eigen::Index i = 0; i < f.U.rows(); ++i) {
      if (std::abs(f.U(i, j)) > best) {
        best = std::abs(f.U(i, j));
        arg = i;
      }
    }
    if (f.U(arg, j) < Scalar(0)) {
      f.U.col(j) *= Scalar(-1);
      f.V.col(j) *= Scalar(-1);
    }
  }
  return f;
}

/// Leading m singular triples.
template <typename Scalar>
SvdFactors<Scalar> truncate(const SvdFactors<Scalar>& f, Eigen::Index m) {
  if (m < 1 || m > f.size()) {
    throw Error(ErrorCode::RankRequestTooLarge,
                "requested " + std::to_string(m) + " of " + std::to_string(f.size()) + " components");
  }
  return {f.U.leftCols(m), f.sigma.head(m), f.V.leftCols(m)};
}

/// Number of singular values above rel_tol * sigma_1.
template <typename Scalar>
Eigen::Index numerical_rank(const Vec<Scalar>& sigma, Scalar rel_tol = Scalar(1e-9)) {
  if (sigma.size() == 0 || sigma(0) <= Scalar(0)) return 0;
  Eigen::Index r = 0;
  while (r < sigma.size() && sigma(r) > rel_tol * sigma(0)) ++r;
  return r;
}

/// Largest singular value, from the extreme eigenvalue of the smaller Gram
/// matrix. Independent of the Jacobi kernel.
template <typename Derived>
typename Derived::Scalar operator_norm(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.size() == 0) return Scalar(0);
  Mat<Scalar> gram = m.rows() <= m.cols() ? Mat<Scalar>(m * m.transpose())
                                          : Mat<Scalar>(m.transpose() * m);
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(Scalar(0), eig.eigenvalues().maxCoeff()));
}

/// ||V1 V1^T - V2 V2^T|| for two bases of equal dimension, computed as the
/// sine of the largest principal angle, ||(I - V2 V2^T) V1||.
template <typename D1, typename D2>
typename D1::Scalar projector_distance(const Eigen::MatrixBase<D1>& v1, const Eigen::MatrixBase<D2>& v2) {
  using Scalar = typename D1::Scalar;
  if (v1.rows() != v2.rows() || v1.cols() != v2.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "projector_distance: bases must have equal shape");
  }
  const Mat<Scalar> residual = v1 - v2 * (v2.transpose() * v1);
  return std::min(Scalar(1), operator_norm(residual));
}

}  // namespace specgmm::numlin
