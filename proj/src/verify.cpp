#include "specgmm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "specgmm/error.hpp"
#include "specgmm/io.hpp"
#include "specgmm/lemmalab.hpp"
#include "specgmm/parallel.hpp"
#include "specgmm/rng.hpp"

namespace specgmm::verify {

namespace {

constexpr std::uint64_t kEquivalenceStream = 0x6571756976ULL;  // "equiv"

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("field '") + key + "': " + e.what());
  }
}

void allow_only(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidSpec, where + ": expected a JSON object");
  for (const auto& item : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; })) {
      throw Error(ErrorCode::InvalidSpec, where + ": unknown field '" + item.key() + "'");
    }
  }
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

VerifyConfig config_from_json(const nlohmann::json& j) {
  allow_only(j, {"seed", "population", "perturbation_pairs", "haar", "tail", "equivalence_instances", "noise"},
             "verify");
  VerifyConfig c;
  read_if(j, "seed", c.seed);
  read_if(j, "perturbation_pairs", c.perturbation_pairs);
  read_if(j, "equivalence_instances", c.equivalence_instances);
  if (j.contains("population")) c.population = io::spec_from_json(j.at("population"));
  if (j.contains("haar")) {
    const auto& h = j.at("haar");
    allow_only(h, {"n", "p", "k", "j", "trials", "delta"}, "haar");
    read_if(h, "n", c.haar.n);
    read_if(h, "p", c.haar.p);
    read_if(h, "k", c.haar.k);
    read_if(h, "j", c.haar.j);
    read_if(h, "trials", c.haar.trials);
    read_if(h, "delta", c.haar.delta);
  }
  if (j.contains("tail")) {
    const auto& t = j.at("tail");
    allow_only(t, {"n", "p", "t", "trials"}, "tail");
    read_if(t, "n", c.tail.n);
    read_if(t, "p", c.tail.p);
    read_if(t, "t", c.tail.t);
    read_if(t, "trials", c.tail.trials);
  }
  if (j.contains("noise")) {
    // Reuse the spec parser for the noise block.
    nlohmann::json probe = {{"n", c.haar.n}, {"p", c.haar.p}, {"k", c.haar.k}, {"delta", 1.0}, {"noise", j.at("noise")}};
    c.noise = io::spec_from_json(probe).noise;
  }
  if (c.perturbation_pairs < 0 || c.equivalence_instances < 0 || c.haar.trials < 1 || c.tail.trials < 1 ||
      c.tail.t < 0.0) {
    throw Error(ErrorCode::InvalidSpec, "verify: counts must be positive and t >= 0");
  }
  return c;
}

GmmSpec equivalence_spec(std::uint64_t seed, int index) {
  rng::Stream s(rng::combine({seed, kEquivalenceStream, static_cast<std::uint64_t>(index)}));
  GmmSpec spec;
  spec.k = 2 + static_cast<int>(s.below(3));
  spec.layout = index % 2 == 0 ? Layout::Simplex : Layout::Collinear;
  const int p_min = std::max(1, spec.k - 1);
  spec.p = p_min + static_cast<int>(s.below(static_cast<std::uint64_t>(51 - p_min)));
  spec.n = 5 * spec.k + static_cast<int>(s.below(static_cast<std::uint64_t>(201 - 5 * spec.k)));
  spec.delta = 1.0 + 7.0 * s.uniform();
  // beta from a smallest-cluster size that every cluster can meet.
  const int full = spec.n / spec.k;
  const int smallest = std::max(1, full / 2 + static_cast<int>(s.below(static_cast<std::uint64_t>(full - full / 2 + 1))));
  spec.beta = static_cast<double>(smallest) * spec.k / spec.n;
  spec.seed = s.next_bits();
  return spec;
}

std::vector<CheckResult> run_all(const VerifyConfig& config, unsigned threads) {
  std::vector<CheckResult> results;

  {
    GmmSpec spec = config.population;
    spec.seed = rng::combine({config.seed, spec.seed});
    const auto rep = lemmalab::population_check(matgen::sample_instance(spec));
    CheckResult r{"population_structure", rep.passed(), false, 0.0, ""};
    r.margin = std::min({rep.sigma1 - rep.sigma1_lower, rep.coherence_bound - rep.row_coherence,
                         rep.inner_product_slack, 1e-8 - rep.row_spread});
    r.detail = "rank " + std::to_string(rep.rank) + ", sigma_1 " + fmt(rep.sigma1) + " vs lower bound " +
               fmt(rep.sigma1_lower) + ", row coherence " + fmt(rep.row_coherence) + " vs " + fmt(rep.coherence_bound);
    results.push_back(std::move(r));
  }

  {
    const auto count = static_cast<std::size_t>(config.perturbation_pairs);
    std::vector<PerturbationReport> reps(count);
    parallel_for(count, threads, [&](std::size_t i) {
      const auto c = lemmalab::sample_perturbation_case(rng::combine({config.seed, i}));
      reps[i] = lemmalab::perturbation_check(c.P, c.E, c.a, c.b);
    });
    int weyl_bad = 0, dk_bad = 0, sab_bad = 0, skipped = 0;
    double weyl_margin = std::numeric_limits<double>::infinity();
    double dk_margin = weyl_margin, sab_margin = weyl_margin;
    for (const auto& r : reps) {
      weyl_bad += r.weyl_ok ? 0 : 1;
      weyl_margin = std::min(weyl_margin, r.weyl_margin);
      if (r.skipped) {
        ++skipped;
        continue;
      }
      dk_bad += r.dk_ok ? 0 : 1;
      sab_bad += r.sab_ok ? 0 : 1;
      dk_margin = std::min(dk_margin, r.dk_rhs - r.dk_lhs);
      sab_margin = std::min(sab_margin, r.sab_bound - r.sab_norm);
    }
    const std::string n = std::to_string(count);
    results.push_back({"weyl", weyl_bad == 0, false, count ? weyl_margin : 0.0,
                       std::to_string(weyl_bad) + " violations in " + n + " pairs"});
    results.push_back({"davis_kahan", dk_bad == 0, false, count ? dk_margin : 0.0,
                       std::to_string(dk_bad) + " violations in " + n + " pairs, " + std::to_string(skipped) +
                           " skipped for zero gap"});
    results.push_back({"sab_residual", sab_bad == 0, false, count ? sab_margin : 0.0,
                       std::to_string(sab_bad) + " violations in " + n + " pairs, " + std::to_string(skipped) +
                           " skipped for zero gap"});
  }

  {
    CheckResult r{"haar_residual", false, false, 0.0, ""};
    if (config.noise.variant != NoiseVariant::IsotropicGaussian) {
      r.skipped = true;
      r.passed = true;
      r.detail = "skipped: hypothesis requires isotropic Gaussian";
    } else {
      GmmSpec spec{config.haar.n, config.haar.p, config.haar.k, config.haar.delta, 1.0, Layout::Collinear, {},
                   config.noise, rng::combine({config.seed, 0x68ULL})};
      const auto xs = lemmalab::haar_residual_samples(spec, config.haar.j, config.haar.trials, threads);
      const double m = lemmalab::mean(xs);
      const double v = lemmalab::variance(xs);
      const double ks = lemmalab::ks_distance_normal(xs);
      r.passed = std::abs(m) <= 0.09 && v >= 0.85 && v <= 1.15 && ks <= 0.06;
      r.margin = std::min({0.09 - std::abs(m), v - 0.85, 1.15 - v, 0.06 - ks});
      r.detail = "mean " + fmt(m) + ", variance " + fmt(v) + ", KS " + fmt(ks);
    }
    results.push_back(std::move(r));
  }

  {
    const auto rep = lemmalab::opnorm_tail_check(config.tail.n, config.tail.p, config.tail.t, config.tail.trials,
                                                 rng::combine({config.seed, 0x74ULL}), threads);
    results.push_back({"opnorm_tail", rep.ok, false, rep.allowed - rep.fraction,
                       std::to_string(rep.exceedances) + " of " + std::to_string(rep.trials) +
                           " exceed the threshold, allowed fraction " + fmt(rep.allowed)});
  }

  {
    const auto count = static_cast<std::size_t>(config.equivalence_instances);
    std::vector<EquivalenceReport> reps(count);
    parallel_for(count, threads, [&](std::size_t i) {
      const GmmSpec spec = equivalence_spec(config.seed, static_cast<int>(i));
      const GmmInstance inst = matgen::sample_instance(spec);
      KMeansConfig km;
      km.seed = spec.seed;
      reps[i] = lemmalab::equivalence_check(inst.X, spec.k, km);
    });
    int bad = 0;
    double worst_gap = 0.0;
    for (const auto& r : reps) {
      bad += r.ok ? 0 : 1;
      worst_gap = std::max(worst_gap, r.center_gap);
    }
    results.push_back({"equivalence", bad == 0, false, 1e-8 - worst_gap,
                       std::to_string(bad) + " mismatches in " + std::to_string(count) +
                           " instances, worst center gap " + fmt(worst_gap)});
  }
  return results;
}

nlohmann::json to_json(const std::vector<CheckResult>& results) {
  auto checks = nlohmann::json::array();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed;
    checks.push_back({{"name", r.name},
                      {"passed", r.passed},
                      {"skipped", r.skipped},
                      {"margin", r.margin},
                      {"detail", r.detail}});
  }
  return {{"all_passed", all}, {"checks", checks}};
}

}  // namespace specgmm::verify
