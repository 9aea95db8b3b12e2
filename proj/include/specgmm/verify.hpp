#pragma once

// Suite runner for the lemma checks: one pass/fail entry per check, with the
// worst margin seen (positive means the bound held with room to spare).

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "specgmm/matgen.hpp"

namespace specgmm::verify {

struct VerifyConfig {
  std::uint64_t seed = 1;
  GmmSpec population{300, 20, 3, 4.0, 0.8, Layout::Simplex, {}, {}, 0};
  int perturbation_pairs = 500;
  struct {
    int n = 300, p = 60, k = 3, j = 3, trials = 2000;
    double delta = 4.0;
  } haar;
  struct {
    int n = 200, p = 200, trials = 500;
    double t = 3.0;
  } tail;
  int equivalence_instances = 200;
  NoiseModel noise;  // noise of the Haar residual check
};

struct CheckResult {
  std::string name;
  bool passed = false;
  bool skipped = false;
  double margin = 0.0;
  std::string detail;
};

/// Throws Error(InvalidSpec) on unknown keys or invalid values.
VerifyConfig config_from_json(const nlohmann::json& j);

/// Small random instance for the alg1 / alg3 equivalence check: n <= 200,
/// p <= 50, k <= 4, alternating simplex and collinear layouts.
GmmSpec equivalence_spec(std::uint64_t seed, int index);

std::vector<CheckResult> run_all(const VerifyConfig& config, unsigned threads = 1);

nlohmann::json to_json(const std::vector<CheckResult>& results);

}  // namespace specgmm::verify
