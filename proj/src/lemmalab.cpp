#include "specgmm/lemmalab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "specgmm/error.hpp"
#include "specgmm/metrics.hpp"
#include "specgmm/numlin.hpp"
#include "specgmm/parallel.hpp"
#include "specgmm/rng.hpp"
#include "specgmm/spectral.hpp"

namespace specgmm::lemmalab {

namespace {

constexpr double kRankTol = 1e-9;
constexpr std::uint64_t kHaarStream = 0x68616172ULL;      // "haar"
constexpr std::uint64_t kTailStream = 0x7461696cULL;      // "tail"
constexpr std::uint64_t kCaseStream = 0x63617365ULL;      // "case"

// Relative slack for comparisons between a computed quantity and a bound that
// it can meet with equality.
constexpr double kRoundoff = 1e-9;

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t key) {
  const rng::CounterRng gen(key);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = gen.normal(static_cast<std::uint64_t>(j * rows + i));
  return m;
}

void check_range(Eigen::Index rank, int a, int b) {
  if (a < 1 || b < a) throw Error(ErrorCode::InvalidSpec, "indices must satisfy 1 <= a <= b");
  if (b > rank) {
    throw Error(ErrorCode::RankDeficiency, "sigma_" + std::to_string(b) + " of P is zero (rank " +
                                               std::to_string(rank) + ")");
  }
}

}  // namespace

double event_threshold(int n, int p) { return std::numbers::sqrt2 * (std::sqrt(double(n)) + std::sqrt(double(p))); }

double singular_gap(const Eigen::VectorXd& sigma, Eigen::Index rank, int a, int b) {
  const double before = a == 1 ? std::numeric_limits<double>::infinity() : sigma(a - 2) - sigma(a - 1);
  const double next = b < rank ? sigma(b) : 0.0;
  return std::min(before, sigma(b - 1) - next);
}

PopulationReport population_check(const GmmInstance& inst) {
  const int n = inst.spec.n;
  const int k = inst.spec.k;
  const auto svd = numlin::thin_svd(inst.P);

  PopulationReport rep;
  rep.rank = numlin::numerical_rank(svd.sigma, kRankTol);
  rep.realized_beta = matgen::realized_beta(inst.z_star, k);
  const double bn = rep.realized_beta * n;
  rep.sigma1 = svd.sigma.size() > 0 ? svd.sigma(0) : 0.0;
  rep.sigma1_lower = std::sqrt(bn / k) * matgen::min_pairwise_distance(inst.centers) / 2.0;
  if (k < 2) rep.sigma1_lower = 0.0;
  rep.sigma1_ok = rep.sigma1 >= rep.sigma1_lower * (1.0 - kRoundoff);

  const Eigen::MatrixXd v = svd.V.leftCols(rep.rank);
  const Eigen::MatrixXd u = svd.U.leftCols(rep.rank);
  rep.coherence_bound = std::sqrt(k / bn);
  rep.row_coherence = rep.rank > 0 ? v.rowwise().norm().maxCoeff() : 0.0;
  rep.coherence_ok = rep.row_coherence <= rep.coherence_bound * (1.0 + kRoundoff);

  std::vector<Eigen::Index> first(static_cast<std::size_t>(k), -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& f = first[static_cast<std::size_t>(inst.z_star[static_cast<std::size_t>(i)])];
    if (f < 0) {
      f = i;
    } else if (rep.rank > 0) {
      rep.row_spread = std::max(rep.row_spread, (v.row(i) - v.row(f)).cwiseAbs().maxCoeff());
    }
  }
  rep.rows_equal_within_clusters = rep.row_spread <= 1e-8;

  rep.inner_product_slack = std::numeric_limits<double>::infinity();
  for (Eigen::Index l = 0; l < rep.rank; ++l) {
    for (int j = 0; j < k; ++j) {
      const double lhs = std::abs(u.col(l).dot(inst.centers.col(j)));
      const double rhs = svd.sigma(l) * rep.coherence_bound;
      rep.inner_product_slack = std::min(rep.inner_product_slack, rhs - lhs);
    }
  }
  if (rep.rank == 0) rep.inner_product_slack = 0.0;
  rep.inner_products_ok = rep.inner_product_slack >= -kRoundoff * std::max(1.0, rep.sigma1 * rep.coherence_bound);
  return rep;
}

WeylReport weyl_check(const Eigen::MatrixXd& p, const Eigen::MatrixXd& e) {
  if (p.rows() != e.rows() || p.cols() != e.cols()) throw Error(ErrorCode::ShapeMismatch, "P and E differ in shape");
  const auto sig = numlin::thin_svd(p).sigma;
  const auto sig_hat = numlin::thin_svd(Eigen::MatrixXd(p + e)).sigma;

  WeylReport rep;
  rep.opnorm_E = numlin::operator_norm(e);
  const double slack = kRoundoff * std::max(1.0, std::max(sig.size() ? sig(0) : 0.0, sig_hat.size() ? sig_hat(0) : 0.0));
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < sig.size(); ++j) {
    rep.worst_margin = std::min(rep.worst_margin, rep.opnorm_E - std::abs(sig_hat(j) - sig(j)));
  }
  if (sig.size() == 0) rep.worst_margin = rep.opnorm_E;
  rep.ok = rep.worst_margin >= -slack;

  rep.event_threshold = event_threshold(static_cast<int>(p.cols()), static_cast<int>(p.rows()));
  rep.event_holds = rep.opnorm_E <= rep.event_threshold;
  rep.upper_margin = std::numeric_limits<double>::infinity();
  if (rep.event_holds) {
    for (Eigen::Index j = 0; j < sig.size(); ++j) {
      rep.upper_margin = std::min(rep.upper_margin, sig(j) + rep.event_threshold - sig_hat(j));
    }
    rep.upper_ok = rep.upper_margin >= -slack;
  }
  return rep;
}

DavisKahanReport davis_kahan_check(const Eigen::MatrixXd& p, const Eigen::MatrixXd& e, int a, int b) {
  if (p.rows() != e.rows() || p.cols() != e.cols()) throw Error(ErrorCode::ShapeMismatch, "P and E differ in shape");
  const auto svd = numlin::thin_svd(p);
  const Eigen::Index rank = numlin::numerical_rank(svd.sigma, kRankTol);
  check_range(rank, a, b);

  DavisKahanReport rep;
  rep.gap = singular_gap(svd.sigma, rank, a, b);
  if (!(rep.gap > 0.0)) {
    rep.skipped = true;
    rep.ok = true;
    return rep;
  }
  const auto svd_hat = numlin::thin_svd(Eigen::MatrixXd(p + e));
  const Eigen::Index width = b - a + 1;
  rep.lhs = numlin::projector_distance(svd_hat.V.middleCols(a - 1, width), svd.V.middleCols(a - 1, width));
  rep.rhs = 4.0 * std::numbers::sqrt2 * numlin::operator_norm(e) / rep.gap;
  rep.ok = rep.lhs <= rep.rhs * (1.0 + kRoundoff) + 1e-12;
  return rep;
}

Eigen::MatrixXd sab_matrix(const Eigen::MatrixXd& p, const Eigen::MatrixXd& e, int a, int b) {
  if (p.rows() != e.rows() || p.cols() != e.cols()) throw Error(ErrorCode::ShapeMismatch, "P and E differ in shape");
  const auto svd = numlin::thin_svd(p);
  const Eigen::Index rank = numlin::numerical_rank(svd.sigma, kRankTol);
  check_range(rank, a, b);
  const auto svd_hat = numlin::thin_svd(Eigen::MatrixXd(p + e));

  const Eigen::Index width = b - a + 1;
  const Eigen::MatrixXd v = svd.V.leftCols(rank);
  const Eigen::MatrixXd v_ab = svd.V.middleCols(a - 1, width);
  const Eigen::MatrixXd v_hat_ab = svd_hat.V.middleCols(a - 1, width);
  const auto complement = [&v](const Eigen::MatrixXd& m) -> Eigen::MatrixXd { return m - v * (v.transpose() * m); };

  // (V_hat V_hat^T - V V^T) V_ab, without forming the n x n projectors.
  const Eigen::MatrixXd moved = v_hat_ab * (v_hat_ab.transpose() * v_ab) - v_ab * (v_ab.transpose() * v_ab);
  Eigen::MatrixXd s = complement(moved);

  const Eigen::MatrixXd et = e.transpose();
  for (int j = a; j <= b; ++j) {
    const Eigen::VectorXd lifted = complement(et * svd.U.col(j - 1)) / svd.sigma(j - 1);
    s -= lifted * (svd.V.col(j - 1).transpose() * v_ab);
  }
  return s;
}

SabReport sab_residual(const Eigen::MatrixXd& p, const Eigen::MatrixXd& e, int a, int b) {
  const auto sig = numlin::thin_svd(p).sigma;
  const Eigen::Index rank = numlin::numerical_rank(sig, kRankTol);
  check_range(rank, a, b);

  SabReport rep;
  rep.gap = singular_gap(sig, rank, a, b);
  rep.opnorm_E = numlin::operator_norm(e);
  if (!(rep.gap > 0.0)) {
    rep.skipped = true;
    rep.ok = true;
    return rep;
  }
  rep.sab_norm = numlin::operator_norm(sab_matrix(p, e, a, b));
  const double ratio2 = (rep.opnorm_E * rep.opnorm_E) / (rep.gap * rep.gap);
  rep.small_noise = rep.opnorm_E <= rep.gap / 4.0;
  rep.sab_bound = rep.small_noise
                      ? (32.0 * (sig(a - 1) - sig(b - 1)) / (std::numbers::pi * rep.gap) + 16.0) * ratio2
                      : 16.0 * ratio2;
  rep.ok = rep.sab_norm <= rep.sab_bound * (1.0 + kRoundoff) + 1e-12;
  return rep;
}

PerturbationReport perturbation_check(const Eigen::MatrixXd& p, const Eigen::MatrixXd& e, int a, int b) {
  PerturbationReport rep;
  const auto weyl = weyl_check(p, e);
  rep.weyl_ok = weyl.ok;
  rep.weyl_margin = weyl.worst_margin;
  rep.opnorm_E = weyl.opnorm_E;
  const auto dk = davis_kahan_check(p, e, a, b);
  const auto sab = sab_residual(p, e, a, b);
  rep.skipped = dk.skipped || sab.skipped;
  rep.dk_lhs = dk.lhs;
  rep.dk_rhs = dk.rhs;
  rep.dk_ok = dk.ok;
  rep.sab_norm = sab.sab_norm;
  rep.sab_bound = sab.sab_bound;
  rep.sab_ok = sab.ok;
  rep.gap_used = dk.gap;
  return rep;
}

PerturbationCase sample_perturbation_case(std::uint64_t seed) {
  rng::Stream s(rng::combine({seed, kCaseStream}));
  const int k = 2 + static_cast<int>(s.below(3));
  const int p = k + static_cast<int>(s.below(8));
  const int n = 4 * k + static_cast<int>(s.below(30));

  const double scale = 1.0 + 9.0 * s.uniform();
  const Eigen::MatrixXd centers = scale * gaussian_matrix(p, k, rng::combine({seed, kCaseStream, 1}));
  LabelVector labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i < k ? i : static_cast<int>(s.below(static_cast<std::uint64_t>(k)));

  PerturbationCase c;
  c.P = matgen::population_matrix(centers, labels);
  const auto sig = numlin::thin_svd(c.P).sigma;
  const auto rank = static_cast<int>(numlin::numerical_rank(sig, kRankTol));
  c.a = 1 + static_cast<int>(s.below(static_cast<std::uint64_t>(rank)));
  c.b = c.a + static_cast<int>(s.below(static_cast<std::uint64_t>(rank - c.a + 1)));

  // ||E|| between g/100 and about 3g, so both bound branches are exercised.
  const double gap = singular_gap(sig, rank, c.a, c.b);
  const double level = gap * std::pow(10.0, -2.0 + 2.5 * s.uniform());
  const Eigen::MatrixXd g = gaussian_matrix(p, n, rng::combine({seed, kCaseStream, 2}));
  c.E = g * (level / numlin::operator_norm(g));
  return c;
}

Eigen::MatrixXd haar_residual_coordinates(const GmmSpec& spec, int j, int trials, int per_trial, unsigned threads) {
  if (spec.noise.variant != NoiseVariant::IsotropicGaussian) {
    throw Error(ErrorCode::NoiseModelNotIsotropic, "the residual distribution requires isotropic Gaussian noise");
  }
  matgen::validate(spec);
  if (j < 1 || j > std::min(spec.k, spec.p)) throw Error(ErrorCode::InvalidSpec, "j must lie in [1, min(k, p)]");
  if (trials < 1 || per_trial < 1 || per_trial > spec.n - spec.k) {
    throw Error(ErrorCode::InvalidSpec, "trials and per_trial must be positive, per_trial <= n - k");
  }

  const Eigen::MatrixXd centers = matgen::build_centers(spec.layout, spec.k, spec.p, spec.delta, spec.explicit_centers);
  const LabelVector labels = matgen::assign_labels(spec.n, spec.k, spec.beta, spec.seed);
  const Eigen::MatrixXd pop = matgen::population_matrix(centers, labels);
  const Eigen::MatrixXd v = numlin::thin_svd(pop).V.leftCols(spec.k);
  const double scale = std::sqrt(static_cast<double>(spec.n - spec.k));

  Eigen::MatrixXd out(trials, per_trial);
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
    const std::uint64_t key = rng::combine({spec.seed, kHaarStream, t});
    const Eigen::MatrixXd x = pop + matgen::sample_noise(spec.p, spec.n, spec.noise, key);
    const Eigen::VectorXd v_hat = numlin::thin_svd(x).V.col(j - 1);
    const Eigen::VectorXd residual = v_hat - v * (v.transpose() * v_hat);
    const double norm = residual.norm();

    rng::Stream pick(rng::combine({key, kHaarStream}));
    std::vector<int> used;
    for (int c = 0; c < per_trial; ++c) {
      int i = 0;
      do {
        i = static_cast<int>(pick.below(static_cast<std::uint64_t>(spec.n)));
      } while (std::find(used.begin(), used.end(), i) != used.end());
      used.push_back(i);
      out(static_cast<Eigen::Index>(t), c) = scale * residual(i) / norm;
    }
  });
  return out;
}

std::vector<double> haar_residual_samples(const GmmSpec& spec, int j, int trials, unsigned threads) {
  const Eigen::MatrixXd m = haar_residual_coordinates(spec, j, trials, 1, threads);
  return {m.data(), m.data() + m.size()};
}

TailReport opnorm_tail_check(int n, int p, double t, int trials, std::uint64_t seed, unsigned threads) {
  if (trials < 1 || n < 1 || p < 1) throw Error(ErrorCode::InvalidSpec, "n, p and trials must be positive");
  TailReport rep;
  rep.trials = trials;
  rep.threshold = std::sqrt(double(n)) + std::sqrt(double(p)) + t;
  rep.bound = std::min(1.0, std::exp(-t * t / 2.0));
  rep.allowed = rep.bound + 3.0 * std::sqrt(rep.bound / trials);

  std::vector<char> exceeded(static_cast<std::size_t>(trials), 0);
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t i) {
    const Eigen::MatrixXd e = gaussian_matrix(p, n, rng::combine({seed, kTailStream, i}));
    exceeded[i] = numlin::operator_norm(e) >= rep.threshold ? 1 : 0;
  });
  for (char c : exceeded) rep.exceedances += c;
  rep.fraction = static_cast<double>(rep.exceedances) / trials;
  rep.ok = rep.fraction <= rep.allowed;
  return rep;
}

EquivalenceReport equivalence_check(const Eigen::MatrixXd& x, int k, const KMeansConfig& config) {
  const SpectralOutput first = spectral::algorithm1(x, k, config);
  const SpectralOutput third = spectral::algorithm3(x, k, config);

  const MatchResult match = metrics::misclustering_loss(first.labels, third.labels, k);
  EquivalenceReport rep;
  rep.loss_between = match.loss;
  for (int j = 0; j < k; ++j) {
    const auto mapped = match.permutation[static_cast<std::size_t>(j)];
    rep.center_gap = std::max(rep.center_gap, (third.centers_ambient.col(mapped) - first.centers_ambient.col(j)).norm());
  }
  rep.ok = rep.loss_between == 0.0 && rep.center_gap <= 1e-8;
  return rep;
}

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw Error(ErrorCode::LengthMismatch, "correlation needs paired samples");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double ks_distance_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = standard_normal_cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace specgmm::lemmalab
