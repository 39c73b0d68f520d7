#include "prodtest/ensembles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "prodtest/errors.hpp"
#include "prodtest/permgroup.hpp"

namespace prodtest::ensembles {

namespace {

using qcore::PureState;
using qcore::Vector;

std::vector<std::uint32_t> default_cut(std::uint32_t n) {
  std::vector<std::uint32_t> cut(n / 2);
  for (std::uint32_t i = 0; i < n / 2; ++i) cut[i] = i;
  return cut;
}

void check_cut(const std::vector<std::uint32_t>& cut, std::uint32_t n) {
  if (cut.empty() || cut.size() >= n) throw std::invalid_argument("ensemble cut must be non-trivial");
  std::vector<bool> seen(n, false);
  for (auto f : cut) {
    if (f >= n || seen[f]) throw std::invalid_argument("ensemble cut is not a factor subset");
    seen[f] = true;
  }
}

const char* kind_name(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::GlobalHaar: return "global_haar";
    case EnsembleKind::BipartiteProductHaar: return "bipartite_product_haar";
    case EnsembleKind::MultipartiteProductHaar: return "multipartite_product_haar";
    case EnsembleKind::MaximallyMixed: return "maximally_mixed";
    case EnsembleKind::FarFromMP: return "far_from_mp";
  }
  return "unknown";
}

}  // namespace

EnsembleSpec EnsembleSpec::global_haar(std::uint32_t n, std::uint32_t d) {
  if (n == 0 || d == 0) throw std::invalid_argument("ensemble needs positive n and d");
  return EnsembleSpec{EnsembleKind::GlobalHaar, n, d, {}, 0};
}

EnsembleSpec EnsembleSpec::bipartite_product_haar(std::uint32_t n, std::uint32_t d,
                                                  std::vector<std::uint32_t> cut) {
  if (n < 2 || d == 0) throw std::invalid_argument("bipartite product ensemble needs n >= 2");
  if (cut.empty()) cut = default_cut(n);
  check_cut(cut, n);
  std::sort(cut.begin(), cut.end());
  return EnsembleSpec{EnsembleKind::BipartiteProductHaar, n, d, std::move(cut), 0};
}

EnsembleSpec EnsembleSpec::multipartite_product_haar(std::uint32_t n, std::uint32_t d) {
  if (n == 0 || d == 0) throw std::invalid_argument("ensemble needs positive n and d");
  return EnsembleSpec{EnsembleKind::MultipartiteProductHaar, n, d, {}, 0};
}

EnsembleSpec EnsembleSpec::maximally_mixed(std::uint32_t n, std::uint32_t d) {
  if (n == 0 || d == 0) throw std::invalid_argument("ensemble needs positive n and d");
  return EnsembleSpec{EnsembleKind::MaximallyMixed, n, d, {}, 0};
}

EnsembleSpec EnsembleSpec::far_from_mp(std::uint32_t n, std::uint32_t d, double eps) {
  if (n < 2 || d < 2) throw std::invalid_argument("far ensemble needs n >= 2 and d >= 2");
  if (!(eps > 0.0 && eps <= kFarEpsMax + 1e-12))
    throw std::invalid_argument("far ensemble needs eps in (0, 1/sqrt(2)]");
  return EnsembleSpec{EnsembleKind::FarFromMP, n, d, {}, eps};
}

void to_json(nlohmann::json& j, const EnsembleSpec& spec) {
  j = nlohmann::json{{"kind", kind_name(spec.kind)}, {"n", spec.n}, {"d", spec.d}};
  if (spec.kind == EnsembleKind::BipartiteProductHaar) j["cut"] = spec.cut;
  if (spec.kind == EnsembleKind::FarFromMP) j["eps"] = spec.eps;
}

EnsembleSpec spec_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const std::uint32_t n = j.at("n").get<std::uint32_t>();
  const std::uint32_t d = j.at("d").get<std::uint32_t>();
  if (kind == "global_haar") return EnsembleSpec::global_haar(n, d);
  if (kind == "bipartite_product_haar")
    return EnsembleSpec::bipartite_product_haar(
        n, d, j.value("cut", std::vector<std::uint32_t>{}));
  if (kind == "multipartite_product_haar") return EnsembleSpec::multipartite_product_haar(n, d);
  if (kind == "maximally_mixed") return EnsembleSpec::maximally_mixed(n, d);
  if (kind == "far_from_mp") return EnsembleSpec::far_from_mp(n, d, j.at("eps").get<double>());
  throw std::invalid_argument("unknown ensemble kind: " + kind);
}

qcore::PureState sample_pure(const EnsembleSpec& spec, RandomStream& rng) {
  switch (spec.kind) {
    case EnsembleKind::GlobalHaar:
      return qcore::haar_state(spec.d, spec.n, rng);
    case EnsembleKind::BipartiteProductHaar: {
      const auto& cut = spec.cut;
      const std::uint32_t k = static_cast<std::uint32_t>(cut.size());
      const PureState a = qcore::haar_state(spec.d, k, rng);
      const PureState b = qcore::haar_state(spec.d, spec.n - k, rng);
      PureState joined = qcore::tensor(a, b);
      // tensor order puts the cut factors first; restore factor order
      std::vector<std::uint32_t> order(cut.begin(), cut.end());
      std::vector<bool> in_cut(spec.n, false);
      for (auto f : cut) in_cut[f] = true;
      for (std::uint32_t f = 0; f < spec.n; ++f)
        if (!in_cut[f]) order.push_back(f);
      bool already_sorted = std::is_sorted(order.begin(), order.end());
      if (already_sorted) return joined;
      const Vector reordered = permgroup::permute_positions(
          joined.amplitudes(), std::vector<std::size_t>(spec.n, spec.d), permgroup::Permutation(order));
      return PureState(reordered, spec.d, spec.n);
    }
    case EnsembleKind::MultipartiteProductHaar: {
      PureState acc = qcore::haar_state(spec.d, 1u, rng);
      for (std::uint32_t i = 1; i < spec.n; ++i) acc = qcore::tensor(acc, qcore::haar_state(spec.d, 1u, rng));
      return acc;
    }
    case EnsembleKind::FarFromMP:
      return far_state(spec.n, spec.d, spec.eps, rng).state;
    case EnsembleKind::MaximallyMixed:
      throw std::invalid_argument("sample_pure: maximally mixed ensemble is not pure");
  }
  throw std::invalid_argument("sample_pure: unknown ensemble kind");
}

Sample sample(const EnsembleSpec& spec, RandomStream& rng) {
  if (spec.kind == EnsembleKind::MaximallyMixed) return qcore::maximally_mixed(spec.d, spec.n);
  return sample_pure(spec, rng);
}

FarStateCertificate far_state(std::uint32_t n, std::uint32_t d, double eps, RandomStream& rng) {
  if (n < 2 || d < 2) throw std::invalid_argument("far_state: requires n >= 2 and d >= 2");
  if (!(eps > 0.0 && eps <= kFarEpsMax + 1e-12))
    throw std::invalid_argument("far_state: eps must be in (0, 1/sqrt(2)]");
  const std::size_t dim = qcore::checked_pow(d, n);

  // basis strings with at least two non-zero digits
  std::vector<std::size_t> support;
  for (std::size_t idx = 1; idx < dim; ++idx) {
    std::size_t rem = idx;
    std::uint32_t weight = 0;
    for (std::uint32_t f = 0; f < n; ++f) {
      if (rem % d != 0) ++weight;
      rem /= d;
    }
    if (weight >= 2) support.push_back(idx);
  }

  const double head = std::sqrt(1.0 - eps * eps);
  for (int attempt = 0; attempt < kFarStateRedraws; ++attempt) {
    const PureState phi = qcore::haar_state(support.size(), rng);
    Vector v = Vector::Zero(dim);
    v[0] = head;
    for (std::size_t i = 0; i < support.size(); ++i) v[support[i]] = eps * phi.amplitudes()[i];
    PureState psi(std::move(v), d, n);
    const qcore::ProductDistance res = qcore::distance_to_mp(psi);
    if (std::abs(res.value - eps) <= 1e-6)
      return FarStateCertificate{std::move(psi), eps, res.value};
  }
  throw verification_error("far_state: could not verify the target distance after redraws");
}

ExperimentReport far_fraction_experiment(std::uint32_t n, std::uint32_t d, double eps,
                                         std::uint64_t samples, std::uint64_t seed,
                                         unsigned threads) {
  if (samples == 0) throw std::invalid_argument("far_fraction_experiment: samples must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("far_fraction_experiment: eps must be in (0, 1)");
  const auto t0 = std::chrono::steady_clock::now();
  const EnsembleSpec spec = EnsembleSpec::global_haar(n, d);
  const double lambda_threshold = 1.0 - eps * eps;

  // fixed-size blocks keep the aggregation order independent of threading
  constexpr std::uint64_t kBlock = 256;
  const std::uint64_t blocks = (samples + kBlock - 1) / kBlock;

  struct BlockStats {
    std::uint64_t close = 0;
    std::vector<double> lambda_sum;
    std::vector<double> lambda_max;
    std::vector<std::uint64_t> lambda_hits;
  };
  std::vector<BlockStats> stats(blocks);
  std::vector<std::vector<std::uint32_t>> cut_list;

  {
    // fix the cut order once (all cuts containing factor 0)
    const std::uint32_t full = (1u << n) - 1;
    for (std::uint32_t mask = 1; mask < full; mask += 2) {
      std::vector<std::uint32_t> cut;
      for (std::uint32_t f = 0; f < n; ++f)
        if (mask & (1u << f)) cut.push_back(f);
      cut_list.push_back(std::move(cut));
    }
  }

  parallel_for(blocks, threads, [&](std::uint64_t b) {
    RandomStream rng = RandomStream::derive(seed, b);
    BlockStats& s = stats[b];
    s.lambda_sum.assign(cut_list.size(), 0.0);
    s.lambda_max.assign(cut_list.size(), 0.0);
    s.lambda_hits.assign(cut_list.size(), 0);
    const std::uint64_t begin = b * kBlock;
    const std::uint64_t end = std::min(samples, begin + kBlock);
    for (std::uint64_t i = begin; i < end; ++i) {
      const PureState psi = sample_pure(spec, rng);
      const auto lambdas = qcore::top_schmidt_by_cut(psi);
      double best = 0;
      for (std::size_t c = 0; c < lambdas.size(); ++c) {
        const double l1 = lambdas[c].lambda1;
        s.lambda_sum[c] += l1;
        s.lambda_max[c] = std::max(s.lambda_max[c], l1);
        if (l1 >= lambda_threshold) ++s.lambda_hits[c];
        best = std::max(best, l1);
      }
      if (best >= lambda_threshold) ++s.close;
    }
  });

  std::uint64_t close = 0;
  std::vector<double> lambda_sum(cut_list.size(), 0.0), lambda_max(cut_list.size(), 0.0);
  std::vector<std::uint64_t> lambda_hits(cut_list.size(), 0);
  for (const auto& s : stats) {
    close += s.close;
    for (std::size_t c = 0; c < cut_list.size(); ++c) {
      lambda_sum[c] += s.lambda_sum[c];
      lambda_max[c] = std::max(lambda_max[c], s.lambda_max[c]);
      lambda_hits[c] += s.lambda_hits[c];
    }
  }

  ExperimentReport report;
  report.name = "far_fraction";
  report.spec = nlohmann::json{{"ensemble", spec}, {"eps", eps}};
  report.samples = samples;
  report.estimate = static_cast<double>(close) / static_cast<double>(samples);
  report.confidence_radius = binomial_radius(close, samples);
  report.seed = seed;
  nlohmann::json cuts = nlohmann::json::array();
  for (std::size_t c = 0; c < cut_list.size(); ++c) {
    cuts.push_back({{"cut", cut_list[c]},
                    {"mean_lambda1", lambda_sum[c] / static_cast<double>(samples)},
                    {"max_lambda1", lambda_max[c]},
                    {"frac_at_least_threshold",
                     static_cast<double>(lambda_hits[c]) / static_cast<double>(samples)}});
  }
  report.details = nlohmann::json{{"lambda1_threshold", lambda_threshold}, {"cuts", std::move(cuts)}};
  report.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace prodtest::ensembles
