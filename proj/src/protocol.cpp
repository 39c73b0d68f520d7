#include "prodtest/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "prodtest/bounds.hpp"
#include "prodtest/errors.hpp"
#include "prodtest/permgroup.hpp"

namespace prodtest::protocol {

namespace {

using ensembles::EnsembleKind;
using ensembles::EnsembleSpec;
using qcore::Complex;
using qcore::DensityMatrix;
using qcore::Matrix;
using qcore::PureState;
using qcore::Vector;

std::uint32_t draw_categorical(const std::vector<double>& probs, RandomStream& rng) {
  const double u = rng.uniform();
  double acc = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return static_cast<std::uint32_t>(k);
  }
  return static_cast<std::uint32_t>(probs.size() - 1);
}

void check_probability_vector(std::vector<double>& probs, const char* what) {
  double sum = 0;
  for (double& p : probs) {
    if (p < -1e-9) throw verification_error(std::string(what) + ": negative outcome probability");
    p = std::max(p, 0.0);
    sum += p;
  }
  if (std::abs(sum - 1.0) > kCompletenessTol)
    throw verification_error(std::string(what) + ": outcome probabilities do not sum to 1");
  for (double& p : probs) p /= sum;
}

}  // namespace

Rank1Povm::Rank1Povm(std::vector<double> weights, std::vector<Vector> vectors)
    : weights_(std::move(weights)), vectors_(std::move(vectors)) {
  if (weights_.empty() || weights_.size() != vectors_.size())
    throw std::invalid_argument("rank-1 POVM needs matching, non-empty weights and vectors");
  const std::size_t dim = static_cast<std::size_t>(vectors_.front().size());
  double wsum = 0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (weights_[k] < 0) throw std::invalid_argument("rank-1 POVM weights must be non-negative");
    if (static_cast<std::size_t>(vectors_[k].size()) != dim)
      throw std::invalid_argument("rank-1 POVM vectors have mismatched dimensions");
    if (std::abs(vectors_[k].squaredNorm() - 1.0) > 1e-10)
      throw std::invalid_argument("rank-1 POVM vectors must be unit vectors");
    wsum += weights_[k];
  }
  if (std::abs(wsum - 1.0) > kWeightSumTol)
    throw std::invalid_argument("rank-1 POVM weights must sum to 1");
  Matrix completeness = Matrix::Zero(dim, dim);
  for (std::size_t k = 0; k < weights_.size(); ++k)
    completeness += (static_cast<double>(dim) * weights_[k]) * (vectors_[k] * vectors_[k].adjoint());
  completeness -= Matrix::Identity(dim, dim);
  if (completeness.norm() > kCompletenessTol)
    throw std::invalid_argument("rank-1 POVM does not resolve the identity");
}

Rank1Povm Rank1Povm::computational_basis(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("computational_basis: dimension must be positive");
  std::vector<double> w(dim, 1.0 / static_cast<double>(dim));
  std::vector<Vector> v(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    v[k] = Vector::Zero(dim);
    v[k][static_cast<Eigen::Index>(k)] = 1.0;
  }
  return Rank1Povm(std::move(w), std::move(v));
}

Rank1Povm Rank1Povm::from_unitary_columns(const Matrix& u) {
  if (u.rows() != u.cols() || u.rows() == 0)
    throw std::invalid_argument("from_unitary_columns: square matrix required");
  const std::size_t dim = static_cast<std::size_t>(u.rows());
  std::vector<double> w(dim, 1.0 / static_cast<double>(dim));
  std::vector<Vector> v(dim);
  for (std::size_t k = 0; k < dim; ++k) v[k] = u.col(static_cast<Eigen::Index>(k));
  return Rank1Povm(std::move(w), std::move(v));
}

Rank1Povm Rank1Povm::haar_basis(std::size_t dim, RandomStream& rng) {
  return from_unitary_columns(qcore::haar_unitary(dim, rng));
}

std::vector<double> Rank1Povm::probabilities(const DensityMatrix& rho) const {
  if (rho.dim() != dimension()) throw std::invalid_argument("rank-1 POVM: state dimension mismatch");
  const double d = static_cast<double>(dimension());
  std::vector<double> probs(size());
  for (std::size_t k = 0; k < size(); ++k) {
    const Complex q = vectors_[k].dot(rho.matrix() * vectors_[k]);
    probs[k] = d * weights_[k] * q.real();
  }
  check_probability_vector(probs, "rank-1 POVM");
  return probs;
}

std::vector<double> Rank1Povm::probabilities(const PureState& psi) const {
  if (psi.dim() != dimension()) throw std::invalid_argument("rank-1 POVM: state dimension mismatch");
  const double d = static_cast<double>(dimension());
  std::vector<double> probs(size());
  for (std::size_t k = 0; k < size(); ++k)
    probs[k] = d * weights_[k] * std::norm(vectors_[k].dot(psi.amplitudes()));
  check_probability_vector(probs, "rank-1 POVM");
  return probs;
}

std::uint32_t sample_outcome(const Rank1Povm& povm, const DensityMatrix& rho, RandomStream& rng) {
  const auto probs = povm.probabilities(rho);
  return draw_categorical(probs, rng);
}

std::uint32_t sample_outcome(const Rank1Povm& povm, const PureState& psi, RandomStream& rng) {
  const auto probs = povm.probabilities(psi);
  return draw_categorical(probs, rng);
}

Rank1Povm to_global(const LocalPovmSet& local) {
  if (local.site_povms.empty()) throw std::invalid_argument("to_global: empty per-site POVM set");
  std::size_t joint = 1;
  std::size_t dim = 1;
  for (const auto& p : local.site_povms) {
    joint *= p.size();
    dim *= p.dimension();
    if (joint > 65536 || dim > 65536) throw limit_error("to_global: joint POVM too large");
  }
  std::vector<double> weights(joint, 1.0);
  std::vector<Vector> vectors(joint);
  for (std::size_t s = 0; s < joint; ++s) {
    std::size_t rem = s;
    // site 0 slowest
    std::vector<std::size_t> ks(local.site_povms.size());
    for (std::size_t i = local.site_povms.size(); i-- > 0;) {
      ks[i] = rem % local.site_povms[i].size();
      rem /= local.site_povms[i].size();
    }
    Vector acc = Vector::Ones(1);
    for (std::size_t i = 0; i < local.site_povms.size(); ++i) {
      weights[s] *= local.site_povms[i].weight(ks[i]);
      const Vector& u = local.site_povms[i].vector(ks[i]);
      Vector next(acc.size() * u.size());
      for (Eigen::Index a = 0; a < acc.size(); ++a)
        for (Eigen::Index b = 0; b < u.size(); ++b) next[a * u.size() + b] = acc[a] * u[b];
      acc = std::move(next);
    }
    vectors[s] = std::move(acc);
  }
  return Rank1Povm(std::move(weights), std::move(vectors));
}

Strategy Strategy::non_adaptive_global(std::vector<Rank1Povm> rounds) {
  if (rounds.empty()) throw std::invalid_argument("strategy needs at least one round");
  for (const auto& r : rounds)
    if (r.dimension() != rounds.front().dimension())
      throw std::invalid_argument("strategy rounds have mismatched dimensions");
  Strategy s;
  s.scope_ = CopyScope::Global;
  s.adaptive_ = false;
  s.global_rounds_ = std::move(rounds);
  return s;
}

Strategy Strategy::non_adaptive_local(std::vector<LocalPovmSet> rounds) {
  if (rounds.empty()) throw std::invalid_argument("strategy needs at least one round");
  const std::size_t sites = rounds.front().site_povms.size();
  if (sites == 0) throw std::invalid_argument("strategy rounds need at least one site");
  for (const auto& r : rounds) {
    if (r.site_povms.size() != sites) throw std::invalid_argument("strategy rounds have mismatched sites");
    for (std::size_t i = 0; i < sites; ++i)
      if (r.site_povms[i].dimension() != rounds.front().site_povms[i].dimension())
        throw std::invalid_argument("strategy rounds have mismatched site dimensions");
  }
  Strategy s;
  s.scope_ = CopyScope::Local;
  s.adaptive_ = false;
  s.local_rounds_ = std::move(rounds);
  return s;
}

Strategy Strategy::adaptive_global(std::function<Rank1Povm(const std::vector<std::uint32_t>&)> pick) {
  if (!pick) throw std::invalid_argument("adaptive strategy needs a callback");
  Strategy s;
  s.scope_ = CopyScope::Global;
  s.adaptive_ = true;
  s.pick_global_ = std::move(pick);
  return s;
}

Strategy Strategy::adaptive_local(std::function<LocalPovmSet(const std::vector<std::uint32_t>&)> pick) {
  if (!pick) throw std::invalid_argument("adaptive strategy needs a callback");
  Strategy s;
  s.scope_ = CopyScope::Local;
  s.adaptive_ = true;
  s.pick_local_ = std::move(pick);
  return s;
}

Strategy Strategy::random_global_basis(std::size_t dim, std::uint32_t rounds, RandomStream& rng) {
  std::vector<Rank1Povm> list;
  list.reserve(rounds);
  for (std::uint32_t t = 0; t < rounds; ++t) list.push_back(Rank1Povm::haar_basis(dim, rng));
  return non_adaptive_global(std::move(list));
}

std::uint32_t Strategy::fixed_rounds() const {
  if (adaptive_) return 0;
  return static_cast<std::uint32_t>(scope_ == CopyScope::Global ? global_rounds_.size()
                                                                : local_rounds_.size());
}

RoundPovm Strategy::povm_for_round(std::uint32_t round, const std::vector<std::uint32_t>& history) const {
  if (adaptive_) {
    if (scope_ == CopyScope::Global) return pick_global_(history);
    return pick_local_(history);
  }
  if (round >= fixed_rounds()) throw std::invalid_argument("strategy has no POVM for this round");
  if (scope_ == CopyScope::Global) return global_rounds_[round];
  return local_rounds_[round];
}

namespace {

// Sequential per-site sampling of a product POVM; only site-dimension
// operations are performed, never a joint operator.
std::uint32_t sample_local_pure(const LocalPovmSet& local, const PureState& psi, RandomStream& rng) {
  std::size_t dim = 1;
  for (const auto& p : local.site_povms) dim *= p.dimension();
  if (dim != psi.dim()) throw std::invalid_argument("local POVM set: state dimension mismatch");

  Vector cur = psi.amplitudes();
  std::uint32_t joint = 0;
  for (const auto& povm : local.site_povms) {
    const std::size_t d = povm.dimension();
    const std::size_t rest = static_cast<std::size_t>(cur.size()) / d;
    // residual vectors after contracting this site with each POVM vector
    std::vector<double> probs(povm.size());
    std::vector<Vector> residuals(povm.size());
    for (std::size_t k = 0; k < povm.size(); ++k) {
      Vector w = Vector::Zero(rest);
      const Vector& u = povm.vector(k);
      for (std::size_t a = 0; a < d; ++a)
        w += std::conj(u[static_cast<Eigen::Index>(a)]) * cur.segment(a * rest, rest);
      probs[k] = static_cast<double>(d) * povm.weight(k) * w.squaredNorm();
      residuals[k] = std::move(w);
    }
    check_probability_vector(probs, "local POVM set");
    const std::uint32_t k = draw_categorical(probs, rng);
    joint = joint * static_cast<std::uint32_t>(povm.size()) + k;
    if (rest == 1) {
      cur = Vector::Ones(1);
    } else {
      cur = residuals[k] / residuals[k].norm();
    }
  }
  return joint;
}

std::uint32_t sample_local_mixed(const LocalPovmSet& local, const DensityMatrix& rho, RandomStream& rng) {
  std::size_t dim = 1;
  for (const auto& p : local.site_povms) dim *= p.dimension();
  if (dim != rho.dim()) throw std::invalid_argument("local POVM set: state dimension mismatch");

  Matrix cur = rho.matrix();
  std::uint32_t joint = 0;
  for (const auto& povm : local.site_povms) {
    const std::size_t d = povm.dimension();
    const std::size_t rest = static_cast<std::size_t>(cur.rows()) / d;
    std::vector<double> probs(povm.size());
    std::vector<Matrix> residuals(povm.size());
    for (std::size_t k = 0; k < povm.size(); ++k) {
      const Vector& u = povm.vector(k);
      Matrix m = Matrix::Zero(rest, rest);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
          m += std::conj(u[static_cast<Eigen::Index>(a)]) * u[static_cast<Eigen::Index>(b)] *
               cur.block(a * rest, b * rest, rest, rest);
      probs[k] = static_cast<double>(d) * povm.weight(k) * m.trace().real();
      residuals[k] = std::move(m);
    }
    check_probability_vector(probs, "local POVM set");
    const std::uint32_t k = draw_categorical(probs, rng);
    joint = joint * static_cast<std::uint32_t>(povm.size()) + k;
    if (rest == 1) {
      cur = Matrix::Ones(1, 1);
    } else {
      cur = residuals[k] / residuals[k].trace().real();
    }
  }
  return joint;
}

}  // namespace

std::vector<std::uint32_t> run_protocol(const Strategy& strategy, const CopySourceSpec& source,
                                        std::uint32_t rounds, RandomStream& rng) {
  // for an ensemble, the state is drawn once and held fixed across rounds
  std::optional<PureState> pure;
  std::optional<DensityMatrix> mixed;
  if (std::holds_alternative<PureState>(source)) {
    pure = std::get<PureState>(source);
  } else if (std::holds_alternative<DensityMatrix>(source)) {
    mixed = std::get<DensityMatrix>(source);
  } else {
    ensembles::Sample s = ensembles::sample(std::get<EnsembleSpec>(source), rng);
    if (std::holds_alternative<PureState>(s))
      pure = std::get<PureState>(std::move(s));
    else
      mixed = std::get<DensityMatrix>(std::move(s));
  }
  if (!strategy.is_adaptive() && rounds > strategy.fixed_rounds())
    throw std::invalid_argument("run_protocol: more rounds requested than the strategy provides");

  std::vector<std::uint32_t> history;
  history.reserve(rounds);
  for (std::uint32_t t = 0; t < rounds; ++t) {
    const RoundPovm rp = strategy.povm_for_round(t, history);
    std::uint32_t outcome;
    if (std::holds_alternative<Rank1Povm>(rp)) {
      const auto& povm = std::get<Rank1Povm>(rp);
      outcome = pure ? sample_outcome(povm, *pure, rng) : sample_outcome(povm, *mixed, rng);
    } else {
      const auto& local = std::get<LocalPovmSet>(rp);
      outcome = pure ? sample_local_pure(local, *pure, rng) : sample_local_mixed(local, *mixed, rng);
    }
    history.push_back(outcome);
  }
  return history;
}

// ---------------------------------------------------------------------------
// empirical_tv
// ---------------------------------------------------------------------------

namespace {

struct RoundElems {
  std::vector<double> weights;
  std::vector<Vector> vectors;
};

// effective global rank-1 elements per round (local rounds expanded over
// joint outcomes)
std::vector<RoundElems> effective_rounds(const Strategy& strategy, std::uint32_t rounds) {
  std::vector<RoundElems> out(rounds);
  const std::vector<std::uint32_t> no_history;
  for (std::uint32_t t = 0; t < rounds; ++t) {
    const RoundPovm rp = strategy.povm_for_round(t, no_history);
    const Rank1Povm povm = std::holds_alternative<Rank1Povm>(rp)
                               ? std::get<Rank1Povm>(rp)
                               : to_global(std::get<LocalPovmSet>(rp));
    out[t].weights.resize(povm.size());
    out[t].vectors.resize(povm.size());
    for (std::size_t k = 0; k < povm.size(); ++k) {
      out[t].weights[k] = povm.weight(k);
      out[t].vectors[k] = povm.vector(k);
    }
  }
  return out;
}

enum class MixMethod { Exact, MonteCarlo };

bool closed_form_kind(EnsembleKind k) {
  return k == EnsembleKind::GlobalHaar || k == EnsembleKind::BipartiteProductHaar ||
         k == EnsembleKind::MultipartiteProductHaar || k == EnsembleKind::MaximallyMixed;
}

std::vector<std::vector<std::uint32_t>> blocks_for(const EnsembleSpec& spec) {
  if (spec.kind == EnsembleKind::BipartiteProductHaar) {
    std::vector<std::uint32_t> rest;
    std::vector<bool> in_cut(spec.n, false);
    for (auto f : spec.cut) in_cut[f] = true;
    for (std::uint32_t f = 0; f < spec.n; ++f)
      if (!in_cut[f]) rest.push_back(f);
    return {spec.cut, rest};
  }
  std::vector<std::vector<std::uint32_t>> parts(spec.n);
  for (std::uint32_t f = 0; f < spec.n; ++f) parts[f] = {f};
  return parts;
}

double factorial(std::uint32_t k) {
  double f = 1;
  for (std::uint32_t i = 2; i <= k; ++i) f *= i;
  return f;
}

// cost model for one closed-form string evaluation
double exact_cost_per_string(const EnsembleSpec& spec, std::uint32_t t, double total_dim) {
  switch (spec.kind) {
    case EnsembleKind::MaximallyMixed:
      return 1;
    case EnsembleKind::GlobalHaar:
      return std::ldexp(static_cast<double>(t), static_cast<int>(t));  // Ryser
    default: {
      if (spec.n == 1) return std::ldexp(static_cast<double>(t), static_cast<int>(t));
      if (t > bounds::kProductOverlapMaxCopies) return std::numeric_limits<double>::infinity();
      const double tensor = std::pow(total_dim, t);
      if (tensor > static_cast<double>(bounds::kProductContractionMaxDim))
        return std::numeric_limits<double>::infinity();
      const std::size_t nblocks = blocks_for(spec).size();
      return std::pow(factorial(t), static_cast<double>(nblocks)) * tensor;
    }
  }
}

// exact Haar-averaged mixture probability of one outcome string
double exact_mixture_prob(const EnsembleSpec& spec, const std::vector<const Vector*>& vecs,
                          double weight_product, double total_dim) {
  const std::uint32_t t = static_cast<std::uint32_t>(vecs.size());
  if (spec.kind == EnsembleKind::MaximallyMixed) return weight_product;
  if (spec.kind == EnsembleKind::GlobalHaar || spec.n == 1) {
    Matrix g(t, t);
    for (std::uint32_t i = 0; i < t; ++i)
      for (std::uint32_t j = 0; j < t; ++j) g(i, j) = vecs[i]->dot(*vecs[j]);
    const double per = permgroup::permanent(g).real();
    return weight_product * std::pow(total_dim, t) / bounds::rising_factorial(total_dim, t) * per;
  }
  // product ensemble: per-block symmetric moments
  const auto parts = blocks_for(spec);
  std::vector<PureState> states;
  states.reserve(t);
  for (const Vector* v : vecs) states.emplace_back(*v, spec.d, spec.n);
  double scale = weight_product * std::pow(total_dim, t);
  for (const auto& block : parts)
    scale /= bounds::rising_factorial(std::pow(static_cast<double>(spec.d), block.size()), t);
  return scale * bounds::prod_perm_overlap_sum(states, parts);
}

// per-state string distribution: probs[t][k] multiplied over rounds in
// string-enumeration order (round 0 slowest)
void accumulate_string_products(const std::vector<std::vector<double>>& round_probs,
                                std::vector<double>& out) {
  const std::uint32_t t = static_cast<std::uint32_t>(round_probs.size());
  std::vector<std::size_t> digit(t, 0);
  for (std::size_t s = 0; s < out.size(); ++s) {
    double p = 1;
    for (std::uint32_t r = 0; r < t; ++r) p *= round_probs[r][digit[r]];
    out[s] += p;
    for (std::uint32_t r = t; r-- > 0;) {
      if (++digit[r] < round_probs[r].size()) break;
      digit[r] = 0;
    }
  }
}

}  // namespace

ExperimentReport empirical_tv(const EnsembleSpec& spec_a, const EnsembleSpec& spec_b,
                              const Strategy& strategy, std::uint32_t rounds, std::uint64_t trials,
                              std::uint64_t seed, unsigned threads) {
  const auto t0 = std::chrono::steady_clock::now();
  if (rounds == 0) throw std::invalid_argument("empirical_tv: at least one round required");
  const double dim_a = std::pow(static_cast<double>(spec_a.d), spec_a.n);
  const double dim_b = std::pow(static_cast<double>(spec_b.d), spec_b.n);
  if (dim_a != dim_b) throw std::invalid_argument("empirical_tv: ensembles live on different dimensions");

  ExperimentReport report;
  report.name = "distinguish_tv";
  report.spec = nlohmann::json{{"ensemble_a", spec_a}, {"ensemble_b", spec_b}, {"rounds", rounds}};
  report.seed = seed;
  report.samples = trials;

  bool enumerable = !strategy.is_adaptive() && rounds <= strategy.fixed_rounds();
  std::vector<RoundElems> elems;
  double strings = 0;
  if (enumerable) {
    elems = effective_rounds(strategy, rounds);
    strings = 1;
    for (const auto& r : elems) strings *= static_cast<double>(r.weights.size());
    if (strings > static_cast<double>(kMaxExactStrings)) enumerable = false;
  }

  if (enumerable) {
    const std::size_t n_strings = static_cast<std::size_t>(strings);

    const auto side_method = [&](const EnsembleSpec& spec) {
      if (!closed_form_kind(spec.kind)) return MixMethod::MonteCarlo;
      const double cost = strings * exact_cost_per_string(spec, rounds, dim_a);
      return cost <= kMaxExactCost ? MixMethod::Exact : MixMethod::MonteCarlo;
    };
    const MixMethod method_a = side_method(spec_a);
    const MixMethod method_b = side_method(spec_b);
    const bool any_mc = method_a == MixMethod::MonteCarlo || method_b == MixMethod::MonteCarlo;
    if (any_mc && trials == 0) throw std::invalid_argument("empirical_tv: trials must be positive");
    if (any_mc &&
        static_cast<double>(trials) * strings * rounds > kMaxMixtureMonteCarloCost)
      throw limit_error("empirical_tv: Monte Carlo mixture enumeration too costly");

    constexpr std::uint32_t kBatches = 32;
    struct SideData {
      std::vector<double> mixture;                   // final mixture over strings
      std::vector<std::vector<double>> batch_means;  // Monte Carlo batches
      std::vector<std::uint64_t> batch_sizes;
    };

    const auto compute_side = [&](const EnsembleSpec& spec, MixMethod method,
                                  std::uint64_t side_tag) {
      SideData data;
      data.mixture.assign(n_strings, 0.0);
      if (method == MixMethod::Exact) {
        std::vector<std::size_t> digit(rounds, 0);
        std::vector<const Vector*> vecs(rounds);
        for (std::size_t s = 0; s < n_strings; ++s) {
          double wprod = 1;
          for (std::uint32_t r = 0; r < rounds; ++r) {
            wprod *= elems[r].weights[digit[r]];
            vecs[r] = &elems[r].vectors[digit[r]];
          }
          data.mixture[s] = exact_mixture_prob(spec, vecs, wprod, dim_a);
          for (std::uint32_t r = rounds; r-- > 0;) {
            if (++digit[r] < elems[r].weights.size()) break;
            digit[r] = 0;
          }
        }
        return data;
      }
      // Monte Carlo over ensemble draws, exact per-state string distribution
      const std::uint64_t per_batch = (trials + kBatches - 1) / kBatches;
      const std::uint64_t batches = (trials + per_batch - 1) / per_batch;
      data.batch_means.assign(batches, std::vector<double>(n_strings, 0.0));
      data.batch_sizes.assign(batches, 0);
      parallel_for(batches, threads, [&](std::uint64_t b) {
        RandomStream rng = RandomStream::derive(seed, (side_tag << 32) | b);
        const std::uint64_t begin = b * per_batch;
        const std::uint64_t end = std::min(trials, begin + per_batch);
        data.batch_sizes[b] = end - begin;
        for (std::uint64_t i = begin; i < end; ++i) {
          const PureState psi = ensembles::sample_pure(spec, rng);
          std::vector<std::vector<double>> round_probs(rounds);
          for (std::uint32_t r = 0; r < rounds; ++r) {
            round_probs[r].resize(elems[r].weights.size());
            for (std::size_t k = 0; k < elems[r].weights.size(); ++k)
              round_probs[r][k] = dim_a * elems[r].weights[k] *
                                  std::norm(elems[r].vectors[k].dot(psi.amplitudes()));
          }
          accumulate_string_products(round_probs, data.batch_means[b]);
        }
      });
      for (std::uint64_t b = 0; b < batches; ++b) {
        for (std::size_t s = 0; s < n_strings; ++s) data.mixture[s] += data.batch_means[b][s];
        if (data.batch_sizes[b] > 0)
          for (double& v : data.batch_means[b]) v /= static_cast<double>(data.batch_sizes[b]);
      }
      for (double& v : data.mixture) v /= static_cast<double>(trials);
      return data;
    };

    SideData side_a = compute_side(spec_a, method_a, 1);
    SideData side_b = compute_side(spec_b, method_b, 2);

    double tv = 0;
    for (std::size_t s = 0; s < n_strings; ++s) tv += std::abs(side_a.mixture[s] - side_b.mixture[s]);
    tv *= 0.5;
    report.estimate = tv;

    // bootstrap over batches for any Monte Carlo side
    if (any_mc) {
      constexpr int kResamples = 200;
      RandomStream boot = RandomStream::derive(seed, 0xb001);
      std::vector<double> tvs(kResamples);
      std::vector<double> mix(n_strings);
      for (int r = 0; r < kResamples; ++r) {
        const auto resample = [&](const SideData& side, MixMethod method) -> const std::vector<double>& {
          if (method == MixMethod::Exact) return side.mixture;
          mix.assign(n_strings, 0.0);
          std::uint64_t total = 0;
          for (std::size_t b = 0; b < side.batch_means.size(); ++b) {
            const std::size_t pick = boot.uniform_index(side.batch_means.size());
            const std::uint64_t sz = side.batch_sizes[pick];
            for (std::size_t s = 0; s < n_strings; ++s)
              mix[s] += side.batch_means[pick][s] * static_cast<double>(sz);
            total += sz;
          }
          for (double& v : mix) v /= static_cast<double>(total);
          return mix;
        };
        // resample sides one at a time to keep `mix` reusable
        double t_r = 0;
        if (method_a == MixMethod::MonteCarlo && method_b == MixMethod::MonteCarlo) {
          std::vector<double> ma = resample(side_a, method_a);
          const std::vector<double>& mb = resample(side_b, method_b);
          for (std::size_t s = 0; s < n_strings; ++s) t_r += std::abs(ma[s] - mb[s]);
        } else if (method_a == MixMethod::MonteCarlo) {
          const std::vector<double>& ma = resample(side_a, method_a);
          for (std::size_t s = 0; s < n_strings; ++s) t_r += std::abs(ma[s] - side_b.mixture[s]);
        } else {
          const std::vector<double>& mb = resample(side_b, method_b);
          for (std::size_t s = 0; s < n_strings; ++s) t_r += std::abs(side_a.mixture[s] - mb[s]);
        }
        tvs[r] = 0.5 * t_r;
      }
      double mean = std::accumulate(tvs.begin(), tvs.end(), 0.0) / kResamples;
      double var = 0;
      for (double v : tvs) var += (v - mean) * (v - mean);
      var /= kResamples - 1;
      report.confidence_radius = 1.959963984540054 * std::sqrt(var);
    } else {
      report.confidence_radius = 0;
    }
    report.details = nlohmann::json{
        {"method", any_mc ? "mixture_monte_carlo" : "exact_enumeration"},
        {"strings", n_strings},
        {"side_a_exact", method_a == MixMethod::Exact},
        {"side_b_exact", method_b == MixMethod::Exact}};
    report.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
  }

  // histogram fallback: sample outcome strings from both sides
  if (trials == 0) throw std::invalid_argument("empirical_tv: trials must be positive");
  std::vector<std::vector<std::uint32_t>> strings_a(trials), strings_b(trials);
  parallel_for(trials, threads, [&](std::uint64_t i) {
    RandomStream ra = RandomStream::derive(seed, (std::uint64_t{3} << 32) | i);
    RandomStream rb = RandomStream::derive(seed, (std::uint64_t{4} << 32) | i);
    strings_a[i] = run_protocol(strategy, spec_a, rounds, ra);
    strings_b[i] = run_protocol(strategy, spec_b, rounds, rb);
  });

  // union support, with add-1/2 smoothing on observed strings only
  std::map<std::vector<std::uint32_t>, std::size_t> support;
  for (const auto& s : strings_a) support.emplace(s, 0);
  for (const auto& s : strings_b) support.emplace(s, 0);
  std::size_t next_id = 0;
  for (auto& [key, id] : support) id = next_id++;
  std::vector<std::size_t> ids_a(trials), ids_b(trials);
  for (std::uint64_t i = 0; i < trials; ++i) {
    ids_a[i] = support.at(strings_a[i]);
    ids_b[i] = support.at(strings_b[i]);
  }
  const std::size_t m = support.size();
  const auto smoothed_tv = [&](const std::vector<std::size_t>& ia, const std::vector<std::size_t>& ib) {
    std::vector<double> ca(m, 0.5), cb(m, 0.5);
    for (auto id : ia) ca[id] += 1;
    for (auto id : ib) cb[id] += 1;
    const double za = trials + 0.5 * m, zb = trials + 0.5 * m;
    double tv = 0;
    for (std::size_t s = 0; s < m; ++s) tv += std::abs(ca[s] / za - cb[s] / zb);
    return 0.5 * tv;
  };
  report.estimate = smoothed_tv(ids_a, ids_b);

  constexpr int kResamples = 200;
  RandomStream boot = RandomStream::derive(seed, 0xb002);
  std::vector<double> tvs(kResamples);
  std::vector<std::size_t> ra(trials), rb(trials);
  for (int r = 0; r < kResamples; ++r) {
    for (std::uint64_t i = 0; i < trials; ++i) {
      ra[i] = ids_a[boot.uniform_index(trials)];
      rb[i] = ids_b[boot.uniform_index(trials)];
    }
    tvs[r] = smoothed_tv(ra, rb);
  }
  double mean = std::accumulate(tvs.begin(), tvs.end(), 0.0) / kResamples;
  double var = 0;
  for (double v : tvs) var += (v - mean) * (v - mean);
  var /= kResamples - 1;
  report.confidence_radius = 1.959963984540054 * std::sqrt(var);
  report.details = nlohmann::json{{"method", "histogram_smoothed"},
                                  {"support", m},
                                  {"biased", true}};
  report.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

// ---------------------------------------------------------------------------
// purity estimation and the product tester
// ---------------------------------------------------------------------------

namespace {

struct Schedule {
  std::uint32_t shots;       // K, per basis
  std::uint32_t bases;       // M, total
  std::uint32_t per_group;   // M / groups
};

Schedule make_schedule(std::size_t dim, double eps, double delta, const PurityEstimatorConfig& cfg) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("purity estimator: eps must be in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("purity estimator: delta must be in (0, 1)");
  if (cfg.groups == 0) throw std::invalid_argument("purity estimator: groups must be positive");
  const std::uint32_t shots = std::max<std::uint32_t>(
      2, static_cast<std::uint32_t>(std::ceil(cfg.c1 * std::sqrt(static_cast<double>(dim)) / eps)));
  const std::uint32_t per_group = std::max<std::uint32_t>(
      1, static_cast<std::uint32_t>(std::ceil(cfg.c2 * std::log(1.0 / delta) / cfg.groups)));
  return Schedule{shots, per_group * cfg.groups, per_group};
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// collision statistic -> per-basis purity value
double basis_purity(const std::vector<std::uint32_t>& counts, std::uint32_t shots, std::size_t dim) {
  double pairs = 0;
  for (double c : counts) pairs += c * (c - 1) / 2.0;
  const double all_pairs = static_cast<double>(shots) * (shots - 1) / 2.0;
  return (static_cast<double>(dim) + 1.0) * (pairs / all_pairs) - 1.0;
}

}  // namespace

PurityEstimate estimate_purity_single_copy(CopySource& source, double eps_purity, double delta,
                                           RandomStream& rng, const PurityEstimatorConfig& config) {
  const std::size_t dim = source.state.dim();
  const Schedule sched = make_schedule(dim, eps_purity, delta, config);
  const std::uint64_t copies = static_cast<std::uint64_t>(sched.shots) * sched.bases;
  if (copies > source.budget)
    throw limit_error("estimate_purity_single_copy: copy source budget is insufficient");
  source.budget -= copies;

  const Matrix& rho = source.state.matrix();
  std::vector<double> group_sums(config.groups, 0.0);
  double total = 0;
  std::vector<std::uint32_t> counts(dim);
  std::vector<double> probs(dim);
  for (std::uint32_t b = 0; b < sched.bases; ++b) {
    const Matrix u = qcore::haar_unitary(dim, rng);
    const Matrix ru = rho * u;
    for (std::size_t s = 0; s < dim; ++s)
      probs[s] = u.col(static_cast<Eigen::Index>(s)).dot(ru.col(static_cast<Eigen::Index>(s))).real();
    check_probability_vector(probs, "purity estimator");
    std::fill(counts.begin(), counts.end(), 0u);
    for (std::uint32_t k = 0; k < sched.shots; ++k) ++counts[draw_categorical(probs, rng)];
    const double pb = basis_purity(counts, sched.shots, dim);
    group_sums[b / sched.per_group] += pb;
    total += pb;
  }
  std::vector<double> means(config.groups);
  for (std::uint32_t g = 0; g < config.groups; ++g)
    means[g] = group_sums[g] / static_cast<double>(sched.per_group);
  return PurityEstimate{median_of(std::move(means)),
                        total / static_cast<double>(sched.bases),
                        eps_purity,
                        delta,
                        copies,
                        sched.shots,
                        sched.bases};
}

TesterVerdict mp_test(StateCopySource& source, double eps_prod, RandomStream& rng,
                      const PurityEstimatorConfig& config) {
  const PureState& psi = source.state;
  const std::uint32_t n = psi.num_factors();
  const std::uint32_t d = psi.local_dim();
  if (n < 2) throw std::invalid_argument("mp_test: at least two factors required");
  if (!(eps_prod > 0.0 && eps_prod <= ensembles::kFarEpsMax + 1e-12))
    throw std::invalid_argument("mp_test: eps_prod must be in (0, 1/sqrt(2)]");

  const double eps_purity = eps_prod * eps_prod * (1.0 - eps_prod * eps_prod) / n;
  const double delta = 1.0 / (3.0 * n);
  const Schedule sched = make_schedule(d, eps_purity, delta, config);
  const std::uint64_t copies = static_cast<std::uint64_t>(sched.shots) * sched.bases;
  if (copies > source.budget) throw limit_error("mp_test: copy source budget is insufficient");
  source.budget -= copies;

  const std::size_t dim = psi.dim();
  std::vector<std::vector<double>> group_sums(n, std::vector<double>(config.groups, 0.0));
  std::vector<std::vector<std::uint32_t>> counts(n, std::vector<std::uint32_t>(d));
  std::vector<double> probs(dim);

  // every site gets a fresh independent basis each round; all sites are
  // measured on the same copy in parallel
  for (std::uint32_t b = 0; b < sched.bases; ++b) {
    PureState rotated = psi;
    for (std::uint32_t i = 0; i < n; ++i) {
      const Matrix u = qcore::haar_unitary(d, rng);
      rotated = qcore::apply_local_unitary(rotated, i, u.adjoint());
    }
    for (std::size_t s = 0; s < dim; ++s) probs[s] = std::norm(rotated.amplitudes()[s]);
    check_probability_vector(probs, "mp_test");
    for (auto& c : counts) std::fill(c.begin(), c.end(), 0u);
    for (std::uint32_t k = 0; k < sched.shots; ++k) {
      std::size_t idx = draw_categorical(probs, rng);
      for (std::uint32_t i = n; i-- > 0;) {
        ++counts[i][idx % d];
        idx /= d;
      }
    }
    for (std::uint32_t i = 0; i < n; ++i)
      group_sums[i][b / sched.per_group] += basis_purity(counts[i], sched.shots, d);
  }

  std::vector<double> estimates(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::vector<double> means(config.groups);
    for (std::uint32_t g = 0; g < config.groups; ++g)
      means[g] = group_sums[i][g] / static_cast<double>(sched.per_group);
    estimates[i] = median_of(std::move(means));
  }

  const double threshold = 1.0 - 2.0 * eps_purity;
  const double min_estimate = *std::min_element(estimates.begin(), estimates.end());
  const bool accept = min_estimate > threshold;
  // the verdict must be exactly the threshold rule
  if (accept != (min_estimate > threshold))
    throw verification_error("mp_test: verdict does not match the threshold rule");
  return TesterVerdict{accept, std::move(estimates), eps_purity, delta, copies};
}

ExperimentReport tester_eval(
    const std::function<TesterVerdict(const PureState&, RandomStream&)>& tester,
    const EnsembleSpec& spec, std::uint64_t trials, std::uint64_t seed, unsigned threads) {
  if (trials == 0) throw std::invalid_argument("tester_eval: trials must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<char> accepts(trials, 0);
  std::vector<double> min_estimates(trials, 0.0);
  parallel_for(trials, threads, [&](std::uint64_t i) {
    RandomStream rng = RandomStream::derive(seed, i);
    const PureState psi = ensembles::sample_pure(spec, rng);
    const TesterVerdict verdict = tester(psi, rng);
    accepts[i] = verdict.accept ? 1 : 0;
    min_estimates[i] =
        *std::min_element(verdict.per_site_estimates.begin(), verdict.per_site_estimates.end());
  });
  std::uint64_t accepted = 0;
  double min_sum = 0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    accepted += accepts[i];
    min_sum += min_estimates[i];
  }
  ExperimentReport report;
  report.name = "tester_eval";
  report.spec = spec;
  report.samples = trials;
  report.estimate = static_cast<double>(accepted) / static_cast<double>(trials);
  report.confidence_radius = binomial_radius(accepted, trials);
  report.seed = seed;
  report.details = nlohmann::json{{"mean_min_site_estimate", min_sum / static_cast<double>(trials)}};
  report.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace prodtest::protocol
