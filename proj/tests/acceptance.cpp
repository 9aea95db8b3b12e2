// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.
// Usage: specgmm_acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "specgmm/harness.hpp"
#include "specgmm/kmeans.hpp"
#include "specgmm/lemmalab.hpp"
#include "specgmm/metrics.hpp"
#include "specgmm/parallel.hpp"
#include "specgmm/rng.hpp"
#include "specgmm/spectral.hpp"
#include "specgmm/verify.hpp"

using namespace specgmm;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

unsigned threads() { return resolve_threads(0); }

SweepConfig rate_sweep(Algorithm alg) {
  SweepConfig c;
  c.base.n = 2000;
  c.base.p = 5;
  c.base.k = 2;
  c.base.beta = 1.0;
  c.base.layout = Layout::Simplex;
  c.delta_grid = {3.0, 3.5, 4.0, 4.5, 5.0};
  c.trials_per_delta = 200;
  c.algorithms = {alg};
  c.master_seed = kSeed;
  return c;
}

Outcome rate_exponent() {
  const auto records = harness::run_sweep(rate_sweep(Algorithm::Alg1), threads());
  const auto fit = harness::fit_rate(records, Algorithm::Alg1);
  int monotone = 0;
  for (std::size_t i = 1; i < fit.mean_losses.size(); ++i) monotone += fit.mean_losses[i] <= fit.mean_losses[i - 1];
  const bool ok = fit.slope >= -0.19 && fit.slope <= -0.09;
  return {ok, fmt("slope %.5f in [-0.19, -0.09], %d points used, %d censored, %d/%zu adjacent pairs nonincreasing",
                  fit.slope, fit.n_points_used, fit.n_censored, monotone, fit.mean_losses.size() - 1)};
}

Outcome equivalence() {
  const int count = 200;
  std::vector<EquivalenceReport> reps(count);
  std::vector<int> collinear(count, 0);
  parallel_for(count, threads(), [&](std::size_t i) {
    const GmmSpec spec = verify::equivalence_spec(kSeed, static_cast<int>(i));
    collinear[i] = spec.layout == Layout::Collinear;
    KMeansConfig km;
    km.seed = spec.seed;
    reps[i] = lemmalab::equivalence_check(matgen::sample_instance(spec).X, spec.k, km);
  });
  int bad = 0, n_collinear = 0;
  double worst = 0.0, worst_loss = 0.0;
  for (int i = 0; i < count; ++i) {
    bad += !(reps[i].loss_between == 0.0 && reps[i].center_gap <= 1e-8);
    worst = std::max(worst, reps[i].center_gap);
    worst_loss = std::max(worst_loss, reps[i].loss_between);
    n_collinear += collinear[i];
  }
  return {bad == 0, fmt("%d/%d instances equal (%d collinear), max loss %.3g, max center gap %.3g <= 1e-8",
                        count - bad, count, n_collinear, worst_loss, worst)};
}

Outcome consistency() {
  const int trials = 300;
  const int n = 500;
  const int ps[3] = {10, n / 2, n};
  std::vector<double> loss(trials), bound(trials);
  parallel_for(trials, threads(), [&](std::size_t t) {
    GmmSpec spec;
    spec.n = n;
    spec.k = 2 + static_cast<int>(t % 3);
    spec.p = ps[(t / 3) % 3];
    spec.delta = 8.0 + 2.0 * static_cast<double>((t / 9) % 3);
    // Most balanced feasible split: k = 3 does not divide 500.
    spec.beta = static_cast<double>(spec.k * (n / spec.k)) / n;
    spec.layout = Layout::Simplex;
    spec.seed = rng::combine({kSeed, 3, t});
    KMeansConfig km;
    km.seed = spec.seed;
    loss[t] = harness::run_trial(spec, Algorithm::Alg1, km).loss;
    bound[t] = 10.0 * spec.k * (1.0 + static_cast<double>(spec.p) / n) / (spec.delta * spec.delta);
  });
  int within = 0;
  double worst_ratio = 0.0;
  for (int t = 0; t < trials; ++t) {
    within += loss[static_cast<std::size_t>(t)] <= bound[static_cast<std::size_t>(t)];
    worst_ratio = std::max(worst_ratio, loss[static_cast<std::size_t>(t)] / bound[static_cast<std::size_t>(t)]);
  }
  return {within >= 297, fmt("%d/%d trials within 10k(1+p/n)/delta^2 (need >= 297), worst loss/bound %.3g", within,
                             trials, worst_ratio)};
}

Outcome perturbation() {
  const int count = 500;
  std::vector<PerturbationReport> reps(count);
  std::vector<int> small(count, 0);
  parallel_for(count, threads(), [&](std::size_t i) {
    const auto c = lemmalab::sample_perturbation_case(rng::combine({kSeed, 4, i}));
    reps[i] = lemmalab::perturbation_check(c.P, c.E, c.a, c.b);
    small[i] = lemmalab::sab_residual(c.P, c.E, c.a, c.b).small_noise;
  });
  int weyl = 0, dk = 0, sab = 0, skipped = 0, n_small = 0;
  double worst_dk = 0.0, worst_sab = 0.0;
  for (int i = 0; i < count; ++i) {
    const auto& r = reps[static_cast<std::size_t>(i)];
    weyl += !r.weyl_ok;
    if (r.skipped) {
      ++skipped;
      continue;
    }
    dk += !r.dk_ok;
    sab += !r.sab_ok;
    n_small += small[static_cast<std::size_t>(i)];
    worst_dk = std::max(worst_dk, r.dk_lhs / r.dk_rhs);
    if (r.sab_bound > 0) worst_sab = std::max(worst_sab, r.sab_norm / r.sab_bound);
  }
  return {weyl + dk + sab == 0,
          fmt("violations: Weyl %d, Davis-Kahan %d, S_ab %d over %d pairs (%d small-noise branch, %d skipped); "
              "max lhs/rhs %.3g and %.3g",
              weyl, dk, sab, count, n_small, skipped, worst_dk, worst_sab)};
}

Outcome haar() {
  GmmSpec spec;
  spec.n = 300;
  spec.p = 60;
  spec.k = 3;
  spec.delta = 4.0;
  spec.layout = Layout::Collinear;
  spec.seed = rng::combine({kSeed, 5});
  const auto xs = lemmalab::haar_residual_samples(spec, 3, 2000, threads());
  const double m = lemmalab::mean(xs), v = lemmalab::variance(xs), ks = lemmalab::ks_distance_normal(xs);
  const bool ok = std::abs(m) <= 0.09 && v >= 0.85 && v <= 1.15 && ks <= 0.06;
  return {ok, fmt("mean %.4f (|.| <= 0.09), variance %.4f in [0.85, 1.15], KS %.4f <= 0.06", m, v, ks)};
}

Outcome tail() {
  const auto rep = lemmalab::opnorm_tail_check(200, 200, 3.0, 500, rng::combine({kSeed, 6}), threads());
  return {rep.ok, fmt("exceedance fraction %.4f <= %.6f (%d of %d)", rep.fraction, rep.allowed, rep.exceedances,
                      rep.trials)};
}

Outcome kmeans_oracle() {
  const int count = 100;
  int never_below = 0, equal = 0;
  for (int i = 0; i < count; ++i) {
    rng::Stream s(rng::combine({kSeed, 7, static_cast<std::uint64_t>(i)}));
    const int n = 4 + static_cast<int>(s.below(9));
    const int d = 1 + static_cast<int>(s.below(3));
    const int k = 1 + static_cast<int>(s.below(3));
    const rng::CounterRng g(s.next_bits());
    Eigen::MatrixXd y(d, n);
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < d; ++r) y(r, c) = g.normal(static_cast<std::uint64_t>(c * d + r));
    KMeansConfig km;
    km.seed = s.next_bits();
    const double sol = kmeans::solve(y, k, km).objective;
    const double opt = kmeans::exact_oracle(y, k).objective;
    const double slack = 1e-9 * std::max(1.0, opt);
    never_below += sol >= opt - slack;
    equal += std::abs(sol - opt) <= slack;
  }
  return {never_below == count && equal >= 95,
          fmt("solve >= oracle on %d/%d, equal within 1e-9 on %d/%d (need >= 95)", never_below, count, equal, count)};
}

Outcome local_optimality() {
  auto config = rate_sweep(Algorithm::Alg2);
  config.algorithms = {Algorithm::Alg1, Algorithm::Alg2};
  const auto records = harness::run_sweep(config, threads());
  int checked = 0, optimal = 0, not_worse = 0;
  for (std::size_t i = 0; i + 1 < records.size(); i += 2) {
    const auto& one = records[i];
    const auto& two = records[i + 1];
    ++checked;
    optimal += !two.failed() && two.locally_optimal;
    not_worse += !two.failed() && two.objective <= one.objective * (1.0 + 1e-12);
  }
  return {optimal == checked,
          fmt("local optimality on %d/%d trials; alg2 objective <= alg1 objective on %d/%d", optimal, checked,
              not_worse, checked)};
}

Outcome zero_noise() {
  const int count = 50;
  int exact = 0;
  int per_layout[3] = {0, 0, 0};
  for (int i = 0; i < count; ++i) {
    rng::Stream s(rng::combine({kSeed, 9, static_cast<std::uint64_t>(i)}));
    GmmSpec spec;
    spec.k = 2 + static_cast<int>(s.below(4));
    spec.layout = static_cast<Layout>(i % 3);
    spec.p = std::max(1, spec.k - 1) + static_cast<int>(s.below(10));
    spec.n = spec.k * (3 + static_cast<int>(s.below(30)));
    spec.delta = 0.5 + 5.0 * s.uniform();
    spec.noise = NoiseModel::none();
    spec.seed = s.next_bits();
    if (spec.layout == Layout::Explicit) {
      const rng::CounterRng g(s.next_bits());
      Eigen::MatrixXd c(spec.p, spec.k);
      for (Eigen::Index j = 0; j < c.size(); ++j) c.data()[j] = g.normal(static_cast<std::uint64_t>(j));
      c *= spec.delta / matgen::min_pairwise_distance(c);
      spec.explicit_centers = c;
      spec.delta = matgen::min_pairwise_distance(c);
    }
    const auto inst = matgen::sample_instance(spec);
    bool all = true;
    for (auto alg : {Algorithm::Alg1, Algorithm::Alg2, Algorithm::Alg3}) {
      KMeansConfig km;
      km.seed = spec.seed;
      const auto out = spectral::run(alg, inst.X, spec.k, km);
      all = all && metrics::misclustering_loss(out.labels, inst.z_star, spec.k).loss == 0.0;
    }
    exact += all;
    ++per_layout[i % 3];
  }
  return {exact == count, fmt("%d/%d instances with loss 0 for alg1, alg2 and alg3 (simplex %d, collinear %d, "
                              "explicit %d)",
                              exact, count, per_layout[0], per_layout[1], per_layout[2])};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"rate-exponent", rate_exponent}, {"alg1-alg3-equivalence", equivalence},
      {"consistency-envelope", consistency}, {"perturbation-bounds", perturbation},
      {"haar-residual", haar}, {"opnorm-tail", tail},
      {"kmeans-oracle", kmeans_oracle}, {"alg2-local-optimality", local_optimality},
      {"zero-noise-exactness", zero_noise}};

  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d %s: %s [%.1f s]\n", out.passed ? "PASS" : "FAIL", number, criteria[i].first.c_str(),
                out.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !out.passed;
  }
  return failures == 0 ? 0 : 1;
}
