#pragma once

// Supporting quantities of the spectral clustering analysis, computed from
// their definitions, with the matching bounds checked at runtime.
//
// Singular value indices (a, b, j) are 1-based throughout this header, as in
// the usual sigma_1 >= sigma_2 >= ... notation.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "specgmm/kmeans.hpp"
#include "specgmm/matgen.hpp"

namespace specgmm {

struct PopulationReport {
  Eigen::Index rank = 0;  // singular values above 1e-9 sigma_1
  double realized_beta = 0.0;
  double sigma1 = 0.0;
  double sigma1_lower = 0.0;  // sqrt(beta n / k) * delta / 2
  double row_coherence = 0.0;  // max_i ||V^T e_i||
  double coherence_bound = 0.0;  // sqrt(k / (beta n))
  double row_spread = 0.0;  // largest within-cluster row difference of V
  bool rows_equal_within_clusters = false;
  double inner_product_slack = 0.0;  // min over (l, j) of sigma_l sqrt(k/(beta n)) - |<u_l, theta_j>|
  bool sigma1_ok = false;
  bool coherence_ok = false;
  bool inner_products_ok = false;

  bool passed() const { return sigma1_ok && coherence_ok && rows_equal_within_clusters && inner_products_ok; }
};

struct WeylReport {
  double opnorm_E = 0.0;
  double worst_margin = 0.0;  // min_j ||E|| - |sigma_j(P+E) - sigma_j(P)|
  bool ok = false;
  double event_threshold = 0.0;  // sqrt 2 (sqrt n + sqrt p)
  bool event_holds = false;      // ||E|| <= event_threshold
  double upper_margin = 0.0;     // min_j sigma_j + threshold - sigma_hat_j, when the event holds
  bool upper_ok = true;
};

struct DavisKahanReport {
  double lhs = 0.0;  // ||V_hat V_hat^T - V V^T|| over columns a..b
  double rhs = 0.0;  // 4 sqrt 2 ||E|| / g
  double gap = 0.0;
  bool skipped = false;  // zero gap
  bool ok = false;
};

struct SabReport {
  double sab_norm = 0.0;
  double sab_bound = 0.0;
  double gap = 0.0;
  double opnorm_E = 0.0;
  bool small_noise = false;  // ||E|| <= g / 4, the branch with the full bound
  bool skipped = false;
  bool ok = false;
};

struct PerturbationReport {
  bool weyl_ok = false;
  double weyl_margin = 0.0;
  double dk_lhs = 0.0;
  double dk_rhs = 0.0;
  double sab_norm = 0.0;
  double sab_bound = 0.0;
  double opnorm_E = 0.0;
  double gap_used = 0.0;
  bool dk_ok = false;
  bool sab_ok = false;
  bool skipped = false;

  bool passed() const { return weyl_ok && (skipped || (dk_ok && sab_ok)); }
};

struct TailReport {
  int trials = 0;
  int exceedances = 0;
  double threshold = 0.0;  // sqrt n + sqrt p + t
  double fraction = 0.0;
  double bound = 0.0;      // exp(-t^2 / 2)
  double allowed = 0.0;    // bound + 3 sqrt(bound / trials)
  bool ok = false;
};

struct EquivalenceReport {
  double loss_between = 0.0;
  double center_gap = 0.0;  // max_j ||theta_hat_{phi(j)} - U_hat c_hat_j||
  bool ok = false;
};

namespace lemmalab {

/// sqrt 2 (sqrt n + sqrt p), the operator-norm level of the high-probability event.
double event_threshold(int n, int p);

/// Singular value gap min(sigma_{a-1} - sigma_a, sigma_b - sigma_{b+1}) with
/// sigma_0 = +inf and sigma_{r+1} = 0 past the numerical rank r.
double singular_gap(const Eigen::VectorXd& sigma, Eigen::Index rank, int a, int b);

PopulationReport population_check(const GmmInstance& instance);

WeylReport weyl_check(const Eigen::MatrixXd& p, const Eigen::MatrixXd& e);

/// Throws Error(RankDeficiency) unless 1 <= a <= b <= rank(P).
DavisKahanReport davis_kahan_check(const Eigen::MatrixXd& p, const Eigen::MatrixXd& e, int a, int b);

/// The nonlinear remainder S_{a:b} of the projector perturbation:
///   (I - VV^T)(V_hat V_hat^T - V V^T)_{a:b} V_{a:b}
///     - sum_{a<=j<=b} sigma_j^{-1} (I - VV^T) E^T u_j v_j^T V_{a:b}
Eigen::MatrixXd sab_matrix(const Eigen::MatrixXd& p, const Eigen::MatrixXd& e, int a, int b);

/// ||S_{a:b}|| against (32 (sigma_a - sigma_b)/(pi g) + 16) ||E||^2 / g^2 when
/// ||E|| <= g/4, and against 16 ||E||^2 / g^2 otherwise.
SabReport sab_residual(const Eigen::MatrixXd& p, const Eigen::MatrixXd& e, int a, int b);

PerturbationReport perturbation_check(const Eigen::MatrixXd& p, const Eigen::MatrixXd& e, int a, int b);

struct PerturbationCase {
  Eigen::MatrixXd P;
  Eigen::MatrixXd E;
  int a = 1;
  int b = 1;
};

/// Random mixture population matrix (full column-space rank k) with a
/// Gaussian perturbation whose scale spans both bound branches.
PerturbationCase sample_perturbation_case(std::uint64_t seed);

/// sqrt(n - k) e_i^T (I - VV^T) v_hat_j / ||(I - VV^T) v_hat_j|| over
/// independent noise draws with the population matrix held fixed. Row t holds
/// `per_trial` distinct coordinates from trial t.
Eigen::MatrixXd haar_residual_coordinates(const GmmSpec& spec, int j, int trials, int per_trial,
                                          unsigned threads = 1);
std::vector<double> haar_residual_samples(const GmmSpec& spec, int j, int trials, unsigned threads = 1);

TailReport opnorm_tail_check(int n, int p, double t, int trials, std::uint64_t seed, unsigned threads = 1);

EquivalenceReport equivalence_check(const Eigen::MatrixXd& x, int k, const KMeansConfig& config);

// Sample statistics used by the distributional checks.
double mean(const std::vector<double>& xs);
double variance(const std::vector<double>& xs);  // unbiased
double correlation(const std::vector<double>& xs, const std::vector<double>& ys);
double standard_normal_cdf(double x);
/// Kolmogorov-Smirnov distance between the empirical CDF and N(0, 1).
double ks_distance_normal(std::vector<double> xs);

}  // namespace lemmalab
}  // namespace specgmm
