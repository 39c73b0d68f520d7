#include "prodtest/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "prodtest/bounds.hpp"
#include "prodtest/ensembles.hpp"
#include "prodtest/errors.hpp"
#include "prodtest/permgroup.hpp"
#include "prodtest/protocol.hpp"
#include "prodtest/qcore.hpp"
#include "prodtest/report.hpp"

namespace prodtest::verify {

namespace {

using bounds::BoundReport;
using qcore::Complex;
using qcore::Matrix;
using qcore::PureState;
using qcore::Vector;

struct Tracker {
  SuiteResult result;
  double tol;

  explicit Tracker(std::string name, double tolerance = bounds::kSlackTol) : tol(tolerance) {
    result.name = std::move(name);
    result.min_slack = std::numeric_limits<double>::infinity();
  }

  void slack(double s) {
    ++result.instances;
    result.min_slack = std::min(result.min_slack, s);
    if (s < -tol) ++result.failures;
  }

  void equality(double lhs, double rhs, double eq_tol) {
    ++result.instances;
    const double s = eq_tol - std::abs(lhs - rhs);
    result.min_slack = std::min(result.min_slack, s);
    if (s < 0) ++result.failures;
  }

  void check(bool ok) {
    ++result.instances;
    if (!ok) ++result.failures;
  }

  SuiteResult done() {
    if (!std::isfinite(result.min_slack)) result.min_slack = 0;
    result.pass = result.failures == 0 && result.failure_kind.empty();
    if (result.failures > 0 && result.failure_kind.empty()) result.failure_kind = "bound";
    return result;
  }
};

std::vector<PureState> random_collection(std::uint32_t t, std::size_t dim, RandomStream& rng) {
  std::vector<PureState> states;
  states.reserve(t);
  for (std::uint32_t k = 0; k < t; ++k) states.push_back(qcore::haar_state(dim, rng));
  return states;
}

std::vector<PureState> random_multiqudit_collection(std::uint32_t t, std::uint32_t d, std::uint32_t n,
                                                    RandomStream& rng) {
  std::vector<PureState> states;
  states.reserve(t);
  for (std::uint32_t k = 0; k < t; ++k) states.push_back(qcore::haar_state(d, n, rng));
  return states;
}

SuiteResult suite_double_coset() {
  Tracker t("double_coset_decomposition");
  std::uint64_t fixing = 0;
  for (const auto& p : permgroup::all_permutations(5)) {
    const auto dec = permgroup::double_coset_decompose(p);
    bool ok = permgroup::recompose(dec) == p;
    ok = ok && dec.alpha.fixes(0) && dec.beta.fixes(0);
    ok = ok && (dec.swap_first_two == !p.fixes(0));
    if (!dec.swap_first_two) ++fixing;
    t.check(ok);
  }
  t.check(fixing == 24);  // |S_4| elements fix the first symbol
  t.result.detail = {{"group_order", 120}, {"fixing_first_symbol", fixing}};
  return t.done();
}

SuiteResult suite_povm_completeness(std::uint64_t seed) {
  Tracker t("rank1_povm_completeness", 0.0);
  RandomStream rng = RandomStream::derive(seed, 2);
  for (int i = 0; i < 50; ++i) {
    const std::size_t dim = 2 + rng.uniform_index(7);
    protocol::Rank1Povm povm = [&] {
      switch (rng.uniform_index(3)) {
        case 0:
          return protocol::Rank1Povm::computational_basis(dim);
        case 1:
          return protocol::Rank1Povm::haar_basis(dim, rng);
        default: {
          // weighted union of two bases
          const double theta = 0.2 + 0.6 * rng.uniform();
          const Matrix u = qcore::haar_unitary(dim, rng);
          const Matrix v = qcore::haar_unitary(dim, rng);
          std::vector<double> w;
          std::vector<Vector> vecs;
          for (std::size_t k = 0; k < dim; ++k) {
            w.push_back(theta / dim);
            vecs.push_back(u.col(k));
          }
          for (std::size_t k = 0; k < dim; ++k) {
            w.push_back((1.0 - theta) / dim);
            vecs.push_back(v.col(k));
          }
          return protocol::Rank1Povm(std::move(w), std::move(vecs));
        }
      }
    }();
    Matrix acc = Matrix::Zero(dim, dim);
    for (std::size_t k = 0; k < povm.size(); ++k)
      acc += static_cast<double>(dim) * povm.weight(k) * (povm.vector(k) * povm.vector(k).adjoint());
    const double residual = (acc - Matrix::Identity(dim, dim)).norm();
    t.slack(protocol::kCompletenessTol - residual);
  }
  return t.done();
}

SuiteResult suite_haar_second_moment(std::uint64_t seed, unsigned threads) {
  Tracker t("haar_second_moment", 0.0);
  constexpr std::uint64_t kSamples = 100000;
  constexpr std::uint64_t kBlocks = 64;
  nlohmann::json dims_detail = nlohmann::json::array();
  for (const std::size_t dim : {std::size_t{4}, std::size_t{8}}) {
    const std::size_t dim2 = dim * dim;
    std::vector<Matrix> partial(kBlocks, Matrix::Zero(dim2, dim2));
    parallel_for(kBlocks, threads, [&](std::uint64_t b) {
      RandomStream rng = RandomStream::derive(seed, 3000 + dim * 100 + b);
      const std::uint64_t begin = b * kSamples / kBlocks;
      const std::uint64_t end = (b + 1) * kSamples / kBlocks;
      Vector kv(dim2);
      for (std::uint64_t i = begin; i < end; ++i) {
        const PureState psi = qcore::haar_state(dim, rng);
        const Vector& v = psi.amplitudes();
        for (std::size_t a = 0; a < dim; ++a)
          for (std::size_t c = 0; c < dim; ++c) kv[a * dim + c] = v[a] * v[c];
        partial[b].noalias() += kv * kv.adjoint();
      }
    });
    Matrix mean = Matrix::Zero(dim2, dim2);
    for (const auto& m : partial) mean += m;
    mean /= static_cast<double>(kSamples);
    const Matrix target =
        permgroup::symmetric_projector(dim, 2) / static_cast<double>(permgroup::sym_dim(dim, 2));
    const double dist = (mean - target).norm();
    t.slack(0.02 - dist);
    dims_detail.push_back({{"dim", dim}, {"frobenius_distance", dist}});
  }
  t.result.detail = {{"samples", kSamples}, {"dims", std::move(dims_detail)}};
  return t.done();
}

SuiteResult suite_one_sided_tv(std::uint64_t seed) {
  Tracker t("one_sided_ratio_tv");
  RandomStream rng = RandomStream::derive(seed, 4);
  for (int i = 0; i < 200; ++i) {
    const std::size_t m = 2 + rng.uniform_index(19);
    const double delta = 0.5 * rng.uniform();
    std::vector<double> q(m), r(m);
    double sq = 0, sr = 0;
    for (std::size_t k = 0; k < m; ++k) {
      q[k] = 0.05 + rng.uniform();
      r[k] = rng.uniform();
      sq += q[k];
      sr += r[k];
    }
    std::vector<double> p(m);
    for (std::size_t k = 0; k < m; ++k) {
      q[k] /= sq;
      r[k] /= sr;
      // mixture keeps the pointwise ratio at least 1 - delta
      p[k] = (1.0 - delta) * q[k] + delta * r[k];
    }
    const BoundReport rep = bounds::one_sided_tv_check(p, q, delta);
    t.slack(rep.slack);
  }
  return t.done();
}

SuiteResult suite_permanent_frobenius(std::uint64_t seed) {
  Tracker t("permanent_frobenius_bound");
  RandomStream rng = RandomStream::derive(seed, 5);
  for (int i = 0; i < 500; ++i) {
    const std::uint32_t copies = 2 + static_cast<std::uint32_t>(rng.uniform_index(5));
    const std::size_t dim = 2 + rng.uniform_index(5);
    const auto g = bounds::gram(random_collection(copies, dim, rng));
    t.slack(bounds::frobenius_bound_check(g).slack);
  }
  return t.done();
}

SuiteResult suite_gram_regimes(std::uint64_t seed, bool inject_defect) {
  Tracker t("gram_permanent_regimes");
  RandomStream rng = RandomStream::derive(seed, 6);
  // T <= d: per(G) >= 1
  for (int i = 0; i < 500; ++i) {
    const std::size_t dim = 2 + rng.uniform_index(5);
    const std::uint32_t copies = 2 + static_cast<std::uint32_t>(rng.uniform_index(dim - 1));
    const auto g = bounds::gram(random_collection(copies, dim, rng));
    t.slack(permgroup::permanent(g.entries()).real() - 1.0);
  }
  // T > d: per(G) >= T/d
  for (int i = 0; i < 500; ++i) {
    const std::size_t dim = 2 + rng.uniform_index(3);
    const std::uint32_t copies = static_cast<std::uint32_t>(dim) + 1 +
                                 static_cast<std::uint32_t>(rng.uniform_index(3));
    const auto g = bounds::gram(random_collection(copies, dim, rng));
    t.slack(permgroup::permanent(g.entries()).real() -
            static_cast<double>(copies) / static_cast<double>(dim));
  }
  // tight frame saturates the Frobenius mass: ||G||_F^2 = T^2 / d
  {
    const auto frame = bounds::tight_frame(2, 4, rng);
    const auto g = bounds::gram(frame);
    t.equality(g.entries().squaredNorm(), 8.0, bounds::kSlackTol);
    t.slack(permgroup::permanent(g.entries()).real() - 2.0);
    t.result.detail["tight_frame_frobenius"] = g.entries().squaredNorm();
  }
  if (inject_defect) {
    // deliberately corrupted input: diagonal 0.9 violates the type invariant
    Matrix bad = Matrix::Identity(3, 3) * 0.9;
    try {
      const bounds::GramMatrix g(bad);
      bounds::frobenius_bound_check(g);
      t.check(false);
      t.result.failure_kind = "bound";
    } catch (const std::invalid_argument&) {
      ++t.result.instances;
      ++t.result.failures;
      t.result.failure_kind = "precondition";
      t.result.detail["injected_defect"] = "unit-diagonal invariant rejected the corrupted matrix";
    }
  }
  return t.done();
}

SuiteResult suite_overlap_sum(std::uint64_t seed) {
  Tracker t("permutation_overlap_sum");
  RandomStream rng = RandomStream::derive(seed, 7);
  for (int i = 0; i < 500; ++i) {
    const std::uint32_t copies = 2 + static_cast<std::uint32_t>(rng.uniform_index(3));
    const std::size_t dim = 2 + rng.uniform_index(2);
    // perm_overlap_sum cross-checks the permanent route against the
    // contraction route internally at these sizes
    t.slack(bounds::perm_overlap_sum(random_collection(copies, dim, rng)) - 1.0);
  }
  // orthonormal collections sit exactly at 1
  for (int i = 0; i < 50; ++i) {
    const std::size_t dim = 2 + rng.uniform_index(3);
    const std::uint32_t copies = 2 + static_cast<std::uint32_t>(rng.uniform_index(dim - 1));
    const Matrix u = qcore::haar_unitary(dim, rng);
    std::vector<PureState> states;
    for (std::uint32_t k = 0; k < copies; ++k)
      states.emplace_back(u.col(k), static_cast<std::uint32_t>(dim), 1);
    t.equality(bounds::perm_overlap_sum(states), 1.0, bounds::kSlackTol);
  }
  return t.done();
}

SuiteResult suite_bipartite_overlap(std::uint64_t seed) {
  Tracker t("bipartite_overlap_sum");
  RandomStream rng = RandomStream::derive(seed, 8);
  const std::vector<std::vector<std::uint32_t>> parts{{0}, {1}};
  for (int i = 0; i < 200; ++i) {
    const std::uint32_t copies = 2 + static_cast<std::uint32_t>(rng.uniform_index(2));
    const auto states = random_multiqudit_collection(copies, 2, 2, rng);
    t.slack(bounds::prod_perm_overlap_sum(states, parts) - 1.0);
  }
  // two-copy expansion into identity, two one-sided swaps, and a full swap
  for (int i = 0; i < 50; ++i) {
    const auto states = random_multiqudit_collection(2, 2, 2, rng);
    const auto a0 = qcore::partial_trace(states[0], {0});
    const auto a1 = qcore::partial_trace(states[1], {0});
    const auto b0 = qcore::partial_trace(states[0], {1});
    const auto b1 = qcore::partial_trace(states[1], {1});
    const double cross_a = (a0.matrix() * a1.matrix()).trace().real();
    const double cross_b = (b0.matrix() * b1.matrix()).trace().real();
    const double full = std::norm(states[0].amplitudes().dot(states[1].amplitudes()));
    const double expected = 1.0 + cross_a + cross_b + full;
    t.equality(bounds::prod_perm_overlap_sum(states, parts), expected, 1e-10);
  }
  return t.done();
}

SuiteResult suite_multipartite_overlap(std::uint64_t seed) {
  Tracker t("multipartite_overlap_sum");
  RandomStream rng = RandomStream::derive(seed, 9);
  const std::vector<std::vector<std::uint32_t>> parts{{0}, {1}, {2}};
  for (int i = 0; i < 50; ++i) {
    const auto states = random_multiqudit_collection(2, 2, 3, rng);
    t.slack(bounds::prod_perm_overlap_sum(states, parts) - 1.0);
  }
  return t.done();
}

SuiteResult suite_saturation(std::uint64_t seed) {
  Tracker t("symmetric_overlap_saturation");
  RandomStream rng = RandomStream::derive(seed, 10);
  const std::vector<std::pair<std::uint32_t, std::uint32_t>> cells{{2, 2}, {2, 3}, {3, 3}, {2, 4}};
  for (const auto& [copies, d] : cells) {
    for (int i = 0; i < 25; ++i) {
      const BoundReport rep = bounds::saturation_check_product_collection(copies, d, rng);
      t.equality(rep.lhs, rep.rhs, bounds::kSlackTol);
    }
  }
  // entangled collections stay at or above the saturation value
  for (int i = 0; i < 25; ++i) {
    const auto states = random_multiqudit_collection(2, 2, 2, rng);
    const double value = bounds::prod_perm_overlap_sum(states, {{0}, {1}}) / 4.0;
    t.slack(value - 0.25);
  }
  return t.done();
}

SuiteResult suite_ratio_chain(std::uint64_t seed) {
  Tracker t("haar_mixed_ratio_chain", 1e-12);
  RandomStream rng = RandomStream::derive(seed, 11);
  for (const std::size_t d : {std::size_t{2}, std::size_t{4}, std::size_t{8}, std::size_t{16}}) {
    for (std::uint32_t copies = 1; copies <= 6; ++copies) {
      const double dd = static_cast<double>(d);
      const double tt = static_cast<double>(copies);
      const double product_form = std::pow(dd, copies) / bounds::rising_factorial(dd, copies);
      const double exp_form = std::exp(-tt * (tt - 1.0) / (2.0 * dd));
      const double linear_form = 1.0 - tt * (tt - 1.0) / (2.0 * dd);
      t.slack(product_form - exp_form);
      t.slack(exp_form - linear_form);
      for (int i = 0; i < 5; ++i) {
        const auto lr = bounds::haar_likelihood_ratio(random_collection(copies, d, rng));
        t.slack(lr.ratio - product_form);
        t.slack(lr.ratio - lr.lower_bound);
      }
    }
  }
  return t.done();
}

SuiteResult suite_product_ratio(std::uint64_t seed) {
  Tracker t("product_mixed_ratio_bound");
  RandomStream rng = RandomStream::derive(seed, 12);
  double min_bipartite = std::numeric_limits<double>::infinity();
  // bipartite blocks of local dimension d each; the stated constant is the
  // squared single-block chain, 1 - T(T-1)/d
  for (const std::uint32_t d : {2u, 3u}) {
    for (std::uint32_t copies = 2; copies <= 3; ++copies) {
      const double scale = std::pow(static_cast<double>(d) * d, copies) /
                           std::pow(bounds::rising_factorial(d, copies), 2.0);
      for (int i = 0; i < 10; ++i) {
        const auto states = random_multiqudit_collection(copies, d, 2, rng);
        const double ratio = scale * bounds::prod_perm_overlap_sum(states, {{0}, {1}});
        const double stated = 1.0 - static_cast<double>(copies) * (copies - 1.0) / d;
        t.slack(ratio - stated);
        min_bipartite = std::min(min_bipartite, ratio - stated);
      }
    }
  }
  // three local blocks, stated constant 1 - n T(T-1) / (2d)
  for (const std::uint32_t d : {2u, 3u}) {
    const std::uint32_t copies = 2;
    const double scale = std::pow(std::pow(static_cast<double>(d), 3.0), copies) /
                         std::pow(bounds::rising_factorial(d, copies), 3.0);
    for (int i = 0; i < 10; ++i) {
      const auto states = random_multiqudit_collection(copies, d, 3, rng);
      const double ratio = scale * bounds::prod_perm_overlap_sum(states, {{0}, {1}, {2}});
      const double stated = 1.0 - 3.0 * static_cast<double>(copies) * (copies - 1.0) / (2.0 * d);
      t.slack(ratio - stated);
    }
  }
  t.result.detail = {{"min_bipartite_slack", min_bipartite}};
  return t.done();
}

SuiteResult suite_far_purity(std::uint64_t seed) {
  Tracker t("far_state_purity_bound");
  RandomStream rng = RandomStream::derive(seed, 13);
  const std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes{{2, 2}, {3, 2}, {2, 3}, {4, 2}};
  for (const auto& [n, d] : shapes) {
    for (const double eps : {0.3, 0.6}) {
      for (int i = 0; i < 2; ++i) {
        const auto cert = ensembles::far_state(n, d, eps, rng);
        double avg = 0;
        for (std::uint32_t f = 0; f < n; ++f)
          avg += qcore::purity(qcore::partial_trace(cert.state, {f}));
        avg /= n;
        t.slack(bounds::avg_purity_bound(eps, n) - avg);
      }
    }
  }
  // the two-qudit head-plus-tail family attains the bound exactly
  for (const double eps : {0.3, 0.6}) {
    Vector v = Vector::Zero(4);
    v[0] = std::sqrt(1.0 - eps * eps);
    v[3] = eps;
    const PureState psi(std::move(v), 2, 2);
    const double avg = 0.5 * (qcore::purity(qcore::partial_trace(psi, {0})) +
                              qcore::purity(qcore::partial_trace(psi, {1})));
    t.equality(avg, bounds::avg_purity_bound(eps, 2), 1e-12);
  }
  return t.done();
}

SuiteResult suite_p_test(std::uint64_t seed) {
  Tracker t("product_test_probability");
  RandomStream rng = RandomStream::derive(seed, 14);
  for (const std::uint32_t n : {2u, 3u}) {
    for (const std::uint32_t d : {2u, 3u}) {
      const auto spec = ensembles::EnsembleSpec::multipartite_product_haar(n, d);
      for (int i = 0; i < 5; ++i)
        t.equality(bounds::p_test(ensembles::sample_pure(spec, rng)), 1.0, bounds::kSlackTol);
    }
  }
  {
    Vector bell = Vector::Zero(4);
    bell[0] = bell[3] = 1.0 / std::sqrt(2.0);
    t.equality(bounds::p_test(PureState(bell, 2, 2)), 0.75, 1e-12);
    Vector ghz = Vector::Zero(8);
    ghz[0] = ghz[7] = 1.0 / std::sqrt(2.0);
    t.equality(bounds::p_test(PureState(ghz, 2, 3)), 0.625, 1e-12);
  }
  // visibly entangled states score strictly below 1
  for (int i = 0; i < 5; ++i) {
    const auto cert = ensembles::far_state(3, 2, 0.5, rng);
    t.slack(1.0 - 1e-6 - bounds::p_test(cert.state));
  }
  return t.done();
}

}  // namespace

void to_json(nlohmann::json& j, const SuiteResult& r) {
  j = nlohmann::json{{"name", r.name},       {"instances", r.instances},
                     {"failures", r.failures}, {"min_slack", r.min_slack},
                     {"pass", r.pass},        {"failure_kind", r.failure_kind},
                     {"detail", r.detail}};
}

VerifySummary run_verification(std::uint64_t seed, bool inject_defect, unsigned threads) {
  VerifySummary summary;
  summary.suites.push_back(suite_double_coset());
  summary.suites.push_back(suite_povm_completeness(seed));
  summary.suites.push_back(suite_haar_second_moment(seed, threads));
  summary.suites.push_back(suite_one_sided_tv(seed));
  summary.suites.push_back(suite_permanent_frobenius(seed));
  summary.suites.push_back(suite_gram_regimes(seed, inject_defect));
  summary.suites.push_back(suite_overlap_sum(seed));
  summary.suites.push_back(suite_bipartite_overlap(seed));
  summary.suites.push_back(suite_multipartite_overlap(seed));
  summary.suites.push_back(suite_saturation(seed));
  summary.suites.push_back(suite_ratio_chain(seed));
  summary.suites.push_back(suite_product_ratio(seed));
  summary.suites.push_back(suite_far_purity(seed));
  summary.suites.push_back(suite_p_test(seed));
  summary.all_pass =
      std::all_of(summary.suites.begin(), summary.suites.end(), [](const SuiteResult& s) { return s.pass; });
  return summary;
}

}  // namespace prodtest::verify
