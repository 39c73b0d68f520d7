#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

namespace prodtest {

// Seeded, reproducible record of a Monte Carlo experiment. Serializes as
// {"name", "spec", "samples", "estimate", "confidence_radius", "seed",
//  "wall_time_ms", "details"}; everything except wall_time_ms is a pure
// function of the inputs.
struct ExperimentReport {
  std::string name;
  nlohmann::json spec;
  std::uint64_t samples = 0;
  double estimate = 0;
  double confidence_radius = 0;
  std::uint64_t seed = 0;
  double wall_time_ms = 0;
  nlohmann::json details;
};

void to_json(nlohmann::json& j, const ExperimentReport& r);

// 95% Wilson score half-width for a binomial proportion
double binomial_radius(std::uint64_t successes, std::uint64_t trials);

// runs fn(i) for i in [0, count) across `threads` workers; fn must only touch
// state indexed by i, so the result is identical for any worker count
void parallel_for(std::uint64_t count, unsigned threads, const std::function<void(std::uint64_t)>& fn);

}  // namespace prodtest
