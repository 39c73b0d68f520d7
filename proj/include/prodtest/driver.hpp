#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace prodtest::driver {

// exit-code contract: 0 success, 1 bound/acceptance failure, 2 usage error
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  std::string command;  // verify | mp-test | distinguish | far-fraction | purity
  std::uint32_t n = 2;
  std::uint32_t d = 2;
  std::uint32_t rounds = 2;  // T
  double eps = 0.5;
  double delta = 0.1;
  std::uint64_t trials = 200;
  std::uint64_t seed = 42;
  std::string out_path;
  std::string format = "json";  // json | csv
  unsigned threads = 1;
  // wall times are volatile; reports embed them only on request so that a
  // fixed config reproduces byte-identical output
  bool timing = false;
  std::string pair = "haar-vs-mixed";     // distinguish
  std::string state = "maximally-mixed";  // purity source
  bool inject_defect = false;             // verify test mode
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);

struct RunResult {
  int exit_code = kExitOk;
  bool passed = true;
  std::string output;  // rendered report in the requested format
};

const char* version_string();

// Executes the command; throws std::invalid_argument (usage) only for a
// malformed config. Everything else is reported through exit_code/passed.
RunResult run(const RunConfig& config);

}  // namespace prodtest::driver
