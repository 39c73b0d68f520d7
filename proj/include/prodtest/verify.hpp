#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace prodtest::verify {

// Result of one inequality suite: how many randomized instances ran, how
// many violated their bound, and the smallest slack seen (lhs - rhs; a
// negative value beyond tolerance is a violation).
struct SuiteResult {
  std::string name;
  std::uint64_t instances = 0;
  std::uint64_t failures = 0;
  double min_slack = 0;
  bool pass = false;
  std::string failure_kind;  // "", "bound", "precondition", "internal"
  nlohmann::json detail;
};

void to_json(nlohmann::json& j, const SuiteResult& r);

struct VerifySummary {
  std::vector<SuiteResult> suites;
  bool all_pass = false;
};

// Runs every inequality suite on seed-derived randomized instances.
// `inject_defect` feeds one deliberately corrupted Gram matrix (diagonal 0.9)
// through the permanent bound suite; the type invariants must flag it as a
// precondition violation rather than a bound failure.
VerifySummary run_verification(std::uint64_t seed, bool inject_defect = false, unsigned threads = 1);

}  // namespace prodtest::verify
