#include "prodtest/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "prodtest/errors.hpp"
#include "prodtest/permgroup.hpp"

namespace prodtest::bounds {

namespace {

using qcore::Complex;
using qcore::Matrix;
using qcore::PureState;
using qcore::Vector;

void check_same_dimension(const std::vector<PureState>& states, const char* what) {
  if (states.empty()) throw std::invalid_argument(std::string(what) + ": empty collection");
  for (const auto& s : states)
    if (s.dim() != states.front().dim() || s.local_dim() != states.front().local_dim() ||
        s.num_factors() != states.front().num_factors())
      throw std::invalid_argument(std::string(what) + ": states have mismatched shapes");
}

Vector kron_all(const std::vector<PureState>& states) {
  Vector acc = states.front().amplitudes();
  for (std::size_t t = 1; t < states.size(); ++t) {
    const Vector& b = states[t].amplitudes();
    Vector next(acc.size() * b.size());
    for (Eigen::Index i = 0; i < acc.size(); ++i)
      for (Eigen::Index j = 0; j < b.size(); ++j) next[i * b.size() + j] = acc[i] * b[j];
    acc = std::move(next);
  }
  return acc;
}

}  // namespace

GramMatrix::GramMatrix(Eigen::MatrixXcd entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0)
    throw std::invalid_argument("gram matrix must be square and non-empty");
  if ((entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("gram matrix is not Hermitian");
  for (Eigen::Index i = 0; i < entries_.rows(); ++i)
    if (std::abs(entries_(i, i) - Complex(1, 0)) > 1e-12)
      throw std::invalid_argument("gram matrix diagonal is not 1");
  Eigen::SelfAdjointEigenSolver<Matrix> es(entries_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw std::invalid_argument("gram matrix is not positive semi-definite");
}

GramMatrix gram(const std::vector<PureState>& states) {
  check_same_dimension(states, "gram");
  const std::size_t t = states.size();
  Matrix g(t, t);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < t; ++j)
      g(i, j) = states[i].amplitudes().dot(states[j].amplitudes());
  return GramMatrix(std::move(g));
}

double overlap_sum_by_contraction(const std::vector<PureState>& states) {
  check_same_dimension(states, "overlap_sum_by_contraction");
  const std::uint32_t t = static_cast<std::uint32_t>(states.size());
  if (t > kOverlapMaxCopies) throw limit_error("overlap_sum_by_contraction: too many copies");
  const std::size_t d = states.front().dim();
  std::size_t total = 1;
  for (std::uint32_t i = 0; i < t; ++i) {
    if (total > kContractionMaxDim / d) throw limit_error("overlap_sum_by_contraction: tensor too large");
    total *= d;
  }
  const Vector big = kron_all(states);
  double sum = 0;
  double imag = 0;
  for (const auto& p : permgroup::all_permutations(t)) {
    const Complex term = big.dot(permgroup::permute_tensor_factors(big, p));
    sum += term.real();
    imag += term.imag();
  }
  if (std::abs(imag) > 1e-8) throw verification_error("overlap_sum_by_contraction: non-real sum");
  return sum;
}

double perm_overlap_sum(const std::vector<PureState>& states) {
  check_same_dimension(states, "perm_overlap_sum");
  const std::uint32_t t = static_cast<std::uint32_t>(states.size());
  if (t > kOverlapMaxCopies) throw limit_error("perm_overlap_sum: too many copies");
  const Complex per = permgroup::permanent(gram(states).entries());
  if (std::abs(per.imag()) > 1e-8 * std::max(1.0, std::abs(per.real())))
    throw verification_error("perm_overlap_sum: permanent of Gram matrix is not real");
  const double value = per.real();

  // cross-check against the contraction route whenever the tensor fits
  double tensor_size = std::pow(static_cast<double>(states.front().dim()), t);
  if (tensor_size <= static_cast<double>(kContractionMaxDim)) {
    const double oracle = overlap_sum_by_contraction(states);
    if (std::abs(oracle - value) > kRouteTol * std::max(1.0, std::abs(value)))
      throw verification_error("perm_overlap_sum: permanent and contraction routes disagree");
  }
  return value;
}

BoundReport frobenius_bound_check(const GramMatrix& g) {
  const Complex per = permgroup::permanent(g.entries());
  const double rhs = g.entries().squaredNorm() / static_cast<double>(g.size());
  return BoundReport::of(per.real(), rhs);
}

double prod_perm_overlap_sum(const std::vector<PureState>& states,
                             const std::vector<std::vector<std::uint32_t>>& parts) {
  check_same_dimension(states, "prod_perm_overlap_sum");
  const std::uint32_t t = static_cast<std::uint32_t>(states.size());
  if (t > kProductOverlapMaxCopies) throw limit_error("prod_perm_overlap_sum: too many copies");
  const std::uint32_t f = states.front().num_factors();
  const std::uint32_t d = states.front().local_dim();
  if (parts.empty()) throw std::invalid_argument("prod_perm_overlap_sum: empty partition");
  std::vector<bool> used(f, false);
  for (const auto& block : parts) {
    if (block.empty()) throw std::invalid_argument("prod_perm_overlap_sum: empty block");
    for (auto fac : block) {
      if (fac >= f || used[fac])
        throw std::invalid_argument("prod_perm_overlap_sum: partition is not a partition of the factors");
      used[fac] = true;
    }
  }
  if (!std::all_of(used.begin(), used.end(), [](bool b) { return b; }))
    throw std::invalid_argument("prod_perm_overlap_sum: partition does not cover all factors");

  double tensor_size = std::pow(static_cast<double>(states.front().dim()), t);
  if (tensor_size > static_cast<double>(kProductContractionMaxDim))
    throw limit_error("prod_perm_overlap_sum: tensor too large");

  // which block owns each factor
  std::vector<std::uint32_t> block_of(f);
  for (std::uint32_t b = 0; b < parts.size(); ++b)
    for (auto fac : parts[b]) block_of[fac] = b;

  const Vector big = kron_all(states);
  const std::vector<std::size_t> dims(static_cast<std::size_t>(t) * f, d);
  const auto group = permgroup::all_permutations(t);

  // iterate over all (T!)^n tuples of per-block permutations
  const std::size_t n_blocks = parts.size();
  std::vector<std::size_t> choice(n_blocks, 0);
  double sum = 0;
  double imag = 0;
  while (true) {
    // grid position (t, f) = t*F + f; block b's copy index moves by its permutation
    std::vector<std::uint32_t> img(dims.size());
    for (std::uint32_t copy = 0; copy < t; ++copy)
      for (std::uint32_t fac = 0; fac < f; ++fac) {
        const auto& pi = group[choice[block_of[fac]]];
        img[copy * f + fac] = pi(copy) * f + fac;
      }
    const permgroup::Permutation tau(std::move(img));
    const Complex term = big.dot(permgroup::permute_positions(big, dims, tau));
    sum += term.real();
    imag += term.imag();

    std::size_t b = 0;
    while (b < n_blocks && ++choice[b] == group.size()) {
      choice[b] = 0;
      ++b;
    }
    if (b == n_blocks) break;
  }
  if (std::abs(imag) > 1e-8) throw verification_error("prod_perm_overlap_sum: non-real sum");
  return sum;
}

BoundReport saturation_check_product_collection(std::uint32_t t, std::uint32_t d, RandomStream& rng) {
  if (t == 0 || t > d || d > 4)
    throw std::invalid_argument("saturation_check_product_collection: requires 1 <= T <= d <= 4");
  const Matrix u = qcore::haar_unitary(d, rng);
  const Matrix v = qcore::haar_unitary(d, rng);
  std::vector<PureState> states;
  states.reserve(t);
  for (std::uint32_t k = 0; k < t; ++k) {
    const PureState a(u.col(k), d, 1);
    const PureState b(v.col(k), d, 1);
    states.push_back(qcore::tensor(a, b));
  }
  double fact = 1;
  for (std::uint32_t k = 2; k <= t; ++k) fact *= k;
  const double lhs = prod_perm_overlap_sum(states, {{0}, {1}}) / (fact * fact);
  return BoundReport::of(lhs, 1.0 / (fact * fact));
}

double rising_factorial(double d, std::uint32_t t) {
  double acc = 1;
  for (std::uint32_t i = 0; i < t; ++i) acc *= d + i;
  return acc;
}

LikelihoodRatio haar_likelihood_ratio(const std::vector<PureState>& measured_states) {
  check_same_dimension(measured_states, "haar_likelihood_ratio");
  const std::uint32_t t = static_cast<std::uint32_t>(measured_states.size());
  if (t > kOverlapMaxCopies) throw limit_error("haar_likelihood_ratio: too many rounds");
  const double d = static_cast<double>(measured_states.front().dim());
  const Complex per = permgroup::permanent(gram(measured_states).entries());
  const double ratio = std::pow(d, t) / rising_factorial(d, t) * per.real();
  const double bound = 1.0 - static_cast<double>(t) * (t - 1.0) / (2.0 * d);
  return LikelihoodRatio{ratio, bound};
}

double avg_purity_bound(double eps, std::uint32_t n) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("avg_purity_bound: eps must be in (0, 1)");
  if (n < 2) throw std::invalid_argument("avg_purity_bound: n must be at least 2");
  return 1.0 - 4.0 / n * eps * eps * (1.0 - eps * eps);
}

double p_test(const qcore::DensityMatrix& rho) {
  const std::uint32_t n = rho.num_factors();
  if (n > kPTestMaxFactors) throw limit_error("p_test: too many factors for subset enumeration");
  double sum = 1.0;  // empty subset
  const std::uint32_t full = (1u << n) - 1;
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    std::vector<std::uint32_t> keep;
    for (std::uint32_t fdx = 0; fdx < n; ++fdx)
      if (mask & (1u << fdx)) keep.push_back(fdx);
    sum += qcore::purity(qcore::partial_trace(rho, keep));
  }
  sum += qcore::purity(rho);  // full subset
  return sum / static_cast<double>(1u << n);
}

double p_test(const qcore::PureState& psi) {
  const std::uint32_t n = psi.num_factors();
  if (n > kPTestMaxFactors) throw limit_error("p_test: too many factors for subset enumeration");
  double sum = 2.0;  // empty and full subsets, both pure
  const std::uint32_t full = (1u << n) - 1;
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    std::vector<std::uint32_t> keep;
    for (std::uint32_t fdx = 0; fdx < n; ++fdx)
      if (mask & (1u << fdx)) keep.push_back(fdx);
    // marginals of complementary subsets of a pure state share a spectrum;
    // trace out over the larger side
    if (2 * keep.size() > n) {
      std::vector<std::uint32_t> comp;
      for (std::uint32_t fdx = 0; fdx < n; ++fdx)
        if (!(mask & (1u << fdx))) comp.push_back(fdx);
      keep = std::move(comp);
    }
    sum += qcore::purity(qcore::partial_trace(psi, keep));
  }
  return sum / static_cast<double>(1u << n);
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance: support mismatch");
  if (p.empty()) throw std::invalid_argument("tv_distance: empty distributions");
  double sp = 0, sq = 0, l1 = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < -1e-12 || q[i] < -1e-12) throw std::invalid_argument("tv_distance: negative probability");
    sp += p[i];
    sq += q[i];
    l1 += std::abs(p[i] - q[i]);
  }
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
    throw std::invalid_argument("tv_distance: distributions are not normalized");
  return std::clamp(0.5 * l1, 0.0, 1.0);
}

BoundReport one_sided_tv_check(const std::vector<double>& p, const std::vector<double>& q,
                               double delta) {
  if (delta < 0.0 || delta >= 1.0) throw std::invalid_argument("one_sided_tv_check: delta must be in [0, 1)");
  if (p.size() != q.size()) throw std::invalid_argument("one_sided_tv_check: support mismatch");
  double min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] <= 0.0) {
      if (p[i] > 0.0) throw std::invalid_argument("one_sided_tv_check: p assigns mass where q vanishes");
      continue;
    }
    min_ratio = std::min(min_ratio, p[i] / q[i]);
  }
  if (min_ratio < 1.0 - delta - kSlackTol)
    throw std::invalid_argument("one_sided_tv_check: ratio floor 1 - delta is not met");
  return BoundReport::of(delta, tv_distance(p, q));
}

std::vector<PureState> tight_frame(std::uint32_t d, std::uint32_t t, RandomStream& rng) {
  if (d == 0 || t == 0 || t % d != 0)
    throw std::invalid_argument("tight_frame: requires d | T with both positive");
  std::vector<PureState> out;
  out.reserve(t);
  for (std::uint32_t b = 0; b < t / d; ++b) {
    const Matrix u = qcore::haar_unitary(d, rng);
    for (std::uint32_t k = 0; k < d; ++k) out.emplace_back(u.col(k), d, 1);
  }
  return out;
}

}  // namespace prodtest::bounds
