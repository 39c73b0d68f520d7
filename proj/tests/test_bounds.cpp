#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "prodtest/bounds.hpp"
#include "prodtest/errors.hpp"
#include "prodtest/permgroup.hpp"
#include "prodtest/qcore.hpp"

using namespace prodtest;
using namespace prodtest::bounds;
using namespace prodtest::qcore;
using testutil::bell_state;
using testutil::ghz_state;

namespace {

std::vector<PureState> haar_collection(std::uint32_t copies, std::size_t dim, RandomStream& rng) {
  std::vector<PureState> out;
  for (std::uint32_t t = 0; t < copies; ++t) out.push_back(haar_state(dim, rng));
  return out;
}

std::vector<PureState> orthonormal_collection(std::uint32_t copies, std::size_t dim,
                                              RandomStream& rng) {
  const Matrix u = haar_unitary(dim, rng);
  std::vector<PureState> out;
  for (std::uint32_t t = 0; t < copies; ++t)
    out.emplace_back(u.col(t), static_cast<std::uint32_t>(dim), 1);
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("bounds");

TEST_CASE("gram matrices of simple collections") {
  RandomStream rng(1);
  const auto ortho = gram(orthonormal_collection(3, 4, rng));
  CHECK((ortho.entries() - Matrix::Identity(3, 3)).norm() < 1e-12);

  const PureState psi = haar_state(std::size_t{3}, rng);
  const auto doubled = gram({psi, psi});
  CHECK((doubled.entries() - Matrix::Ones(2, 2)).norm() < 1e-12);

  // PSD verified against an eigendecomposition oracle
  const auto g = gram(haar_collection(5, 3, rng));
  Eigen::SelfAdjointEigenSolver<Matrix> es(g.entries(), Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > -1e-10);

  CHECK_THROWS_AS(gram({}), std::invalid_argument);
  CHECK_THROWS_AS(gram({psi, haar_state(std::size_t{4}, rng)}), std::invalid_argument);
}

TEST_CASE("gram matrix type invariants") {
  CHECK_THROWS_AS(GramMatrix(Matrix::Identity(3, 3) * 0.9), std::invalid_argument);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = std::complex<double>(0.1, 0.2);
  CHECK_THROWS_AS(GramMatrix(asym), std::invalid_argument);
}

TEST_CASE("perm_overlap_sum special values") {
  RandomStream rng(2);
  // orthonormal collections sit exactly at 1
  CHECK(perm_overlap_sum(orthonormal_collection(3, 4, rng)) == doctest::Approx(1.0).epsilon(1e-9));

  // T copies of one state give T!
  const PureState psi = haar_state(std::size_t{3}, rng);
  CHECK(perm_overlap_sum({psi, psi, psi, psi}) == doctest::Approx(24.0).epsilon(1e-9));

  // more copies than dimensions: at least T/d
  const double crowded = perm_overlap_sum(haar_collection(4, 2, rng));
  CHECK(crowded >= 2.0 - 1e-9);
}

TEST_CASE("perm_overlap_sum agrees with the contraction oracle") {
  RandomStream rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint32_t copies = 2 + static_cast<std::uint32_t>(rng.uniform_index(3));
    const std::size_t dim = 2 + rng.uniform_index(2);
    const auto states = haar_collection(copies, dim, rng);
    const double fast = perm_overlap_sum(states);
    const double oracle = overlap_sum_by_contraction(states);
    CHECK(std::abs(fast - oracle) <= 1e-8 * std::max(1.0, std::abs(oracle)));
    CHECK(fast >= 1.0 - 1e-9);
  }
}

TEST_CASE("frobenius bound reports") {
  RandomStream rng(4);
  const auto identity_report = frobenius_bound_check(gram(orthonormal_collection(3, 3, rng)));
  CHECK(identity_report.satisfied);
  CHECK(identity_report.lhs == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(identity_report.rhs == doctest::Approx(1.0).epsilon(1e-9));

  const PureState psi = haar_state(std::size_t{2}, rng);
  const auto ones_report = frobenius_bound_check(gram({psi, psi}));
  CHECK(ones_report.lhs == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(ones_report.rhs == doctest::Approx(2.0).epsilon(1e-9));

  for (int trial = 0; trial < 100; ++trial) {
    const std::uint32_t copies = 2 + static_cast<std::uint32_t>(rng.uniform_index(5));
    const auto report = frobenius_bound_check(gram(haar_collection(copies, 4, rng)));
    CHECK(report.satisfied);
  }
}

TEST_CASE("prod_perm_overlap_sum base cases") {
  RandomStream rng(5);
  const std::vector<std::vector<std::uint32_t>> parts{{0}, {1}};

  // orthonormal factors on both sides: every cross term vanishes
  const Matrix u = haar_unitary(2, rng);
  const Matrix v = haar_unitary(2, rng);
  std::vector<PureState> ortho;
  for (int t = 0; t < 2; ++t)
    ortho.push_back(tensor(PureState(u.col(t), 2, 1), PureState(v.col(t), 2, 1)));
  CHECK(prod_perm_overlap_sum(ortho, parts) == doctest::Approx(1.0).epsilon(1e-9));

  // identical first factors, orthogonal second factors: 1 + 1 + 0 + 0
  const PureState shared = haar_state(std::uint32_t{2}, 1, rng);
  std::vector<PureState> half_matched{tensor(shared, PureState(v.col(0), 2, 1)),
                                      tensor(shared, PureState(v.col(1), 2, 1))};
  CHECK(prod_perm_overlap_sum(half_matched, parts) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("prod_perm_overlap_sum matches the two-copy marginal expansion") {
  RandomStream rng(6);
  const std::vector<std::vector<std::uint32_t>> parts{{0}, {1}};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PureState> states{haar_state(std::uint32_t{2}, std::uint32_t{2}, rng),
                                  haar_state(std::uint32_t{2}, std::uint32_t{2}, rng)};
    const auto a0 = partial_trace(states[0], {0});
    const auto a1 = partial_trace(states[1], {0});
    const auto b0 = partial_trace(states[0], {1});
    const auto b1 = partial_trace(states[1], {1});
    const double expected = 1.0 + (a0.matrix() * a1.matrix()).trace().real() +
                            (b0.matrix() * b1.matrix()).trace().real() +
                            std::norm(states[0].amplitudes().dot(states[1].amplitudes()));
    CHECK(prod_perm_overlap_sum(states, parts) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("prod_perm_overlap_sum stays at or above 1") {
  RandomStream rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PureState> states;
    for (int t = 0; t < 3; ++t) states.push_back(haar_state(std::uint32_t{2}, std::uint32_t{2}, rng));
    CHECK(prod_perm_overlap_sum(states, {{0}, {1}}) >= 1.0 - 1e-9);
  }
}

TEST_CASE("prod_perm_overlap_sum validates the partition and caps") {
  RandomStream rng(8);
  std::vector<PureState> states{haar_state(std::uint32_t{2}, std::uint32_t{2}, rng),
                                haar_state(std::uint32_t{2}, std::uint32_t{2}, rng)};
  CHECK_THROWS_AS(prod_perm_overlap_sum(states, {{0}}), std::invalid_argument);
  CHECK_THROWS_AS(prod_perm_overlap_sum(states, {{0}, {0, 1}}), std::invalid_argument);
  std::vector<PureState> too_many;
  for (int t = 0; t < 5; ++t) too_many.push_back(haar_state(std::uint32_t{2}, std::uint32_t{2}, rng));
  CHECK_THROWS_AS(prod_perm_overlap_sum(too_many, {{0}, {1}}), limit_error);
}

TEST_CASE("saturation of the doubled symmetric overlap") {
  RandomStream rng(9);
  const auto r22 = saturation_check_product_collection(2, 2, rng);
  CHECK(r22.rhs == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::abs(r22.lhs - r22.rhs) < 1e-9);

  const auto r33 = saturation_check_product_collection(3, 3, rng);
  CHECK(r33.rhs == doctest::Approx(1.0 / 36.0).epsilon(1e-12));
  CHECK(std::abs(r33.lhs - r33.rhs) < 1e-9);

  // entangled inputs can only sit above the saturation value
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PureState> states{haar_state(std::uint32_t{2}, std::uint32_t{2}, rng),
                                  haar_state(std::uint32_t{2}, std::uint32_t{2}, rng)};
    CHECK(prod_perm_overlap_sum(states, {{0}, {1}}) / 4.0 >= 0.25 - 1e-9);
  }

  CHECK_THROWS_AS(saturation_check_product_collection(3, 2, rng), std::invalid_argument);
}

TEST_CASE("haar likelihood ratio") {
  RandomStream rng(10);
  // one round carries no signal
  CHECK(haar_likelihood_ratio({haar_state(std::size_t{5}, rng)}).ratio ==
        doctest::Approx(1.0).epsilon(1e-12));

  // d = 2, orthonormal pair: 4/6 against the bound 1/2
  const auto pair = orthonormal_collection(2, 2, rng);
  const auto lr = haar_likelihood_ratio(pair);
  CHECK(lr.ratio == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(lr.lower_bound == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lr.ratio >= lr.lower_bound);

  for (int trial = 0; trial < 20; ++trial) {
    const auto big = haar_likelihood_ratio(haar_collection(4, 16, rng));
    CHECK(big.ratio >= 0.625 - 1e-12);
  }
}

TEST_CASE("average purity bound") {
  CHECK(avg_purity_bound(1e-8, 3) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(avg_purity_bound(0.6, 2) == doctest::Approx(0.5392).epsilon(1e-12));
  CHECK(avg_purity_bound(1.0 / std::sqrt(2.0), 4) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(avg_purity_bound(0.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(avg_purity_bound(1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(avg_purity_bound(0.5, 1), std::invalid_argument);
}

TEST_CASE("product test pass probability") {
  RandomStream rng(11);
  const PureState product =
      tensor(haar_state(std::uint32_t{2}, 1, rng), haar_state(std::uint32_t{2}, 1, rng));
  CHECK(p_test(product) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(p_test(bell_state()) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(p_test(ghz_state(3)) == doctest::Approx(0.625).epsilon(1e-12));

  // the density-matrix route agrees with the pure route
  CHECK(p_test(projector(bell_state())) == doctest::Approx(0.75).epsilon(1e-10));
  CHECK(p_test(maximally_mixed(2, 2)) == doctest::Approx((1 + 0.5 + 0.5 + 0.25) / 4).epsilon(1e-10));
}

TEST_CASE("tv distance") {
  CHECK(tv_distance({0.5, 0.5}, {0.5, 0.5}) == doctest::Approx(0.0));
  CHECK(tv_distance({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(1.0));
  CHECK(tv_distance({0.5, 0.5}, {0.8, 0.2}) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(tv_distance({0.5, 0.4}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(tv_distance({0.5, 0.5}, {0.5, 0.5, 0.0}), std::invalid_argument);
}

TEST_CASE("one-sided ratio check") {
  const auto same = one_sided_tv_check({0.5, 0.5}, {0.5, 0.5}, 0.0);
  CHECK(same.satisfied);
  CHECK(same.rhs == doctest::Approx(0.0));

  const auto shifted = one_sided_tv_check({0.45, 0.55}, {0.5, 0.5}, 0.1);
  CHECK(shifted.satisfied);
  CHECK(shifted.rhs == doctest::Approx(0.05).epsilon(1e-12));

  CHECK_THROWS_AS(one_sided_tv_check({0.5, 0.5}, {1.0, 0.0}, 0.2), std::invalid_argument);
  // ratio floor not met
  CHECK_THROWS_AS(one_sided_tv_check({0.2, 0.8}, {0.5, 0.5}, 0.1), std::invalid_argument);
}

TEST_CASE("one-sided ratio property on enforced-floor mixtures") {
  RandomStream rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng.uniform_index(10);
    const double delta = 0.4 * rng.uniform();
    std::vector<double> q(m), r(m), p(m);
    double sq = 0, sr = 0;
    for (std::size_t k = 0; k < m; ++k) {
      q[k] = 0.05 + rng.uniform();
      r[k] = rng.uniform();
      sq += q[k];
      sr += r[k];
    }
    for (std::size_t k = 0; k < m; ++k) {
      q[k] /= sq;
      r[k] /= sr;
      p[k] = (1.0 - delta) * q[k] + delta * r[k];
    }
    CHECK(one_sided_tv_check(p, q, delta).satisfied);
  }
}

TEST_CASE("tight frames saturate the frobenius mass") {
  RandomStream rng(13);
  const auto frame = tight_frame(2, 4, rng);
  Matrix frame_op = Matrix::Zero(2, 2);
  for (const auto& f : frame) frame_op += f.amplitudes() * f.amplitudes().adjoint();
  CHECK((frame_op - 2.0 * Matrix::Identity(2, 2)).norm() < 1e-10);
  const auto g = gram(frame);
  CHECK(g.entries().squaredNorm() == doctest::Approx(8.0).epsilon(1e-10));
  CHECK_THROWS_AS(tight_frame(2, 3, rng), std::invalid_argument);
}

TEST_SUITE_END();
