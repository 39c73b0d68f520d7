#pragma once

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "prodtest/ensembles.hpp"
#include "prodtest/qcore.hpp"
#include "prodtest/report.hpp"
#include "prodtest/rng.hpp"

namespace prodtest::protocol {

inline constexpr double kCompletenessTol = 1e-8;
inline constexpr double kWeightSumTol = 1e-10;
// exact string enumeration caps for empirical_tv
inline constexpr std::size_t kMaxExactStrings = 1u << 20;
inline constexpr double kMaxExactCost = 2e8;
inline constexpr double kMaxMixtureMonteCarloCost = 5e8;

// Weighted family {(a_k, psi_k)} of unit vectors with
// sum_k D a_k |psi_k><psi_k| = identity and sum_k a_k = 1.
class Rank1Povm {
 public:
  Rank1Povm(std::vector<double> weights, std::vector<qcore::Vector> vectors);

  static Rank1Povm computational_basis(std::size_t dim);
  // columns of a Haar random unitary, uniform weights
  static Rank1Povm haar_basis(std::size_t dim, RandomStream& rng);
  static Rank1Povm from_unitary_columns(const qcore::Matrix& u);

  std::size_t size() const { return weights_.size(); }
  std::size_t dimension() const { return static_cast<std::size_t>(vectors_.front().size()); }
  double weight(std::size_t k) const { return weights_[k]; }
  const qcore::Vector& vector(std::size_t k) const { return vectors_[k]; }

  // p_k = D a_k <psi_k| rho |psi_k>
  std::vector<double> probabilities(const qcore::DensityMatrix& rho) const;
  std::vector<double> probabilities(const qcore::PureState& psi) const;

 private:
  std::vector<double> weights_;
  std::vector<qcore::Vector> vectors_;
};

std::uint32_t sample_outcome(const Rank1Povm& povm, const qcore::DensityMatrix& rho, RandomStream& rng);
std::uint32_t sample_outcome(const Rank1Povm& povm, const qcore::PureState& psi, RandomStream& rng);

// one rank-1 POVM per site, all with the same local dimension
struct LocalPovmSet {
  std::vector<Rank1Povm> site_povms;
};

// joint POVM of a per-site set; joint outcome s encodes the site outcomes
// mixed-radix with site 0 slowest
Rank1Povm to_global(const LocalPovmSet& local);

enum class CopyScope { Global, Local };

using RoundPovm = std::variant<Rank1Povm, LocalPovmSet>;

// Measurement plan over protocol rounds: a fixed list (non-adaptive) or a
// callback from the outcome history (adaptive). The callback must be a pure
// function of the history.
class Strategy {
 public:
  static Strategy non_adaptive_global(std::vector<Rank1Povm> rounds);
  static Strategy non_adaptive_local(std::vector<LocalPovmSet> rounds);
  static Strategy adaptive_global(std::function<Rank1Povm(const std::vector<std::uint32_t>&)> pick);
  static Strategy adaptive_local(std::function<LocalPovmSet(const std::vector<std::uint32_t>&)> pick);
  // a fresh Haar basis every round
  static Strategy random_global_basis(std::size_t dim, std::uint32_t rounds, RandomStream& rng);

  CopyScope scope() const { return scope_; }
  bool is_adaptive() const { return adaptive_; }
  std::uint32_t fixed_rounds() const;
  RoundPovm povm_for_round(std::uint32_t round, const std::vector<std::uint32_t>& history) const;

 private:
  Strategy() = default;
  CopyScope scope_ = CopyScope::Global;
  bool adaptive_ = false;
  std::vector<Rank1Povm> global_rounds_;
  std::vector<LocalPovmSet> local_rounds_;
  std::function<Rank1Povm(const std::vector<std::uint32_t>&)> pick_global_;
  std::function<LocalPovmSet(const std::vector<std::uint32_t>&)> pick_local_;
};

// A fixed state, or an ensemble the state is drawn from once per run and
// then held fixed across all rounds.
using CopySourceSpec = std::variant<qcore::PureState, qcore::DensityMatrix, ensembles::EnsembleSpec>;

// One protocol run: a fresh copy per round, classical record only.
std::vector<std::uint32_t> run_protocol(const Strategy& strategy, const CopySourceSpec& source,
                                        std::uint32_t rounds, RandomStream& rng);

// Total variation distance between the outcome-string mixture distributions
// of two ensembles under the given strategy. Uses exact per-string Haar
// moments when the ensembles admit them at feasible cost, Monte Carlo
// averaging of exact per-state string distributions otherwise, and smoothed
// histograms of sampled strings when the string space is too large to
// enumerate.
ExperimentReport empirical_tv(const ensembles::EnsembleSpec& spec_a,
                              const ensembles::EnsembleSpec& spec_b, const Strategy& strategy,
                              std::uint32_t rounds, std::uint64_t trials, std::uint64_t seed,
                              unsigned threads = 1);

// Purity estimation from single-copy measurements in independent Haar random
// bases. Per basis: K shots, within-basis collision rate c_hat (outcome-equal
// unordered pairs over total pairs), per-basis purity (D+1) c_hat - 1; the
// estimate is a median of `groups` group means over M bases. Schedule:
// K = ceil(c1 sqrt(D)/eps), M = groups * ceil(c2 log(1/delta) / groups).
struct PurityEstimatorConfig {
  double c1 = 1.0;
  double c2 = 150.0;
  std::uint32_t groups = 8;
};

struct PurityEstimate {
  double value;      // median of group means
  double raw_mean;   // grand mean over all bases; unbiased for Tr[rho^2]
  double eps_target;
  double delta_target;
  std::uint64_t copies_used;
  std::uint32_t shots_per_basis;
  std::uint32_t num_bases;
};

// source of fresh copies of a fixed state; `budget` caps how many copies the
// estimator may consume
struct CopySource {
  qcore::DensityMatrix state;
  std::uint64_t budget = UINT64_MAX;
};

PurityEstimate estimate_purity_single_copy(CopySource& source, double eps_purity, double delta,
                                           RandomStream& rng, const PurityEstimatorConfig& config = {});

// Product test over every site of an n-qudit pure state: estimates each
// single-site purity in parallel from the same copies (one independent basis
// per site per round) and rejects iff some estimate falls at or below
// 1 - 2 eps_purity, with eps_purity = eps_prod^2 (1 - eps_prod^2) / n and
// per-site failure budget delta = 1/(3n).
struct TesterVerdict {
  bool accept;
  std::vector<double> per_site_estimates;
  double eps_purity;
  double delta;
  std::uint64_t copies_used;
};

struct StateCopySource {
  qcore::PureState state;
  std::uint64_t budget = UINT64_MAX;
};

TesterVerdict mp_test(StateCopySource& source, double eps_prod, RandomStream& rng,
                      const PurityEstimatorConfig& config = {});

// Acceptance frequency of a tester over draws from a pure-state ensemble.
ExperimentReport tester_eval(
    const std::function<TesterVerdict(const qcore::PureState&, RandomStream&)>& tester,
    const ensembles::EnsembleSpec& spec, std::uint64_t trials, std::uint64_t seed,
    unsigned threads = 1);

}  // namespace prodtest::protocol
