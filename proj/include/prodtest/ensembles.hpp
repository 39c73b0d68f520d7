#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "prodtest/qcore.hpp"
#include "prodtest/report.hpp"
#include "prodtest/rng.hpp"

namespace prodtest::ensembles {

// largest eps for which the canonical far construction keeps |0...0> as the
// nearest fully product state
inline constexpr double kFarEpsMax = 0.7071067811865476;
inline constexpr int kFarStateRedraws = 8;

enum class EnsembleKind {
  GlobalHaar,
  BipartiteProductHaar,
  MultipartiteProductHaar,
  MaximallyMixed,
  FarFromMP,
};

// Generative description of a random-state family on (C^d)^(x)n.
struct EnsembleSpec {
  EnsembleKind kind;
  std::uint32_t n = 1;
  std::uint32_t d = 2;
  std::vector<std::uint32_t> cut;  // BipartiteProductHaar: factors of the first block
  double eps = 0;                  // FarFromMP only

  static EnsembleSpec global_haar(std::uint32_t n, std::uint32_t d);
  // empty cut selects the largest split, floor(n/2) : ceil(n/2)
  static EnsembleSpec bipartite_product_haar(std::uint32_t n, std::uint32_t d,
                                             std::vector<std::uint32_t> cut = {});
  static EnsembleSpec multipartite_product_haar(std::uint32_t n, std::uint32_t d);
  static EnsembleSpec maximally_mixed(std::uint32_t n, std::uint32_t d);
  static EnsembleSpec far_from_mp(std::uint32_t n, std::uint32_t d, double eps);
};

void to_json(nlohmann::json& j, const EnsembleSpec& spec);
EnsembleSpec spec_from_json(const nlohmann::json& j);

using Sample = std::variant<qcore::PureState, qcore::DensityMatrix>;

Sample sample(const EnsembleSpec& spec, RandomStream& rng);

// draws from a pure-state ensemble; MaximallyMixed is rejected
qcore::PureState sample_pure(const EnsembleSpec& spec, RandomStream& rng);

// sqrt(1-eps^2)|0...0> + eps|phi> with phi Haar random on the span of basis
// strings of Hamming weight >= 2, verified to sit at trace distance eps from
// the fully product set. The verification failing means the drawn phi admits
// a closer product state, so phi is redrawn (up to kFarStateRedraws times).
struct FarStateCertificate {
  qcore::PureState state;
  double eps_target;
  double eps_measured;
};

FarStateCertificate far_state(std::uint32_t n, std::uint32_t d, double eps, RandomStream& rng);

// Empirical fraction of global Haar states within trace distance eps of the
// bipartite-product set, with a binomial confidence radius and per-cut top
// Schmidt coefficient statistics.
ExperimentReport far_fraction_experiment(std::uint32_t n, std::uint32_t d, double eps,
                                         std::uint64_t samples, std::uint64_t seed,
                                         unsigned threads = 1);

}  // namespace prodtest::ensembles
