#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "prodtest/errors.hpp"
#include "prodtest/qcore.hpp"

using namespace prodtest;
using namespace prodtest::qcore;
using testutil::bell_state;
using testutil::ghz_state;
using testutil::head_tail_state;
using testutil::w_state;

TEST_SUITE_BEGIN("qcore");

TEST_CASE("state construction enforces shape and norm") {
  Vector v = Vector::Zero(4);
  v[0] = 1.0;
  CHECK_NOTHROW(PureState(v, 2, 2));
  CHECK_THROWS_AS(PureState(v, 2, 3), std::invalid_argument);
  v[0] = 0.9;
  CHECK_THROWS_AS(PureState(v, 2, 2), std::invalid_argument);
}

TEST_CASE("haar_state basics") {
  RandomStream rng(1);
  CHECK_THROWS_AS(haar_state(std::size_t{0}, rng), std::invalid_argument);

  // the one-dimensional space has a single unit vector up to phase
  const PureState one = haar_state(std::size_t{1}, rng);
  CHECK(std::abs(std::abs(one.amplitudes()[0]) - 1.0) < 1e-12);

  const PureState s = haar_state(std::uint32_t{3}, std::uint32_t{2}, rng);
  CHECK(s.dim() == 9);
  CHECK(std::abs(s.amplitudes().squaredNorm() - 1.0) < 1e-12);
}

TEST_CASE("haar_state second moment matches the flat average") {
  RandomStream rng(7);
  Matrix mean = Matrix::Zero(2, 2);
  const int samples = 100000;
  for (int i = 0; i < samples; ++i) {
    const PureState psi = haar_state(std::size_t{2}, rng);
    mean += psi.amplitudes() * psi.amplitudes().adjoint();
  }
  mean /= samples;
  CHECK((mean - Matrix::Identity(2, 2) / 2.0).norm() < 0.02);
}

TEST_CASE("haar_state fourth moment of one amplitude") {
  // E|<0|psi>|^4 = 2/(d(d+1)) at d = 4
  RandomStream rng(11);
  double acc = 0;
  const int samples = 100000;
  for (int i = 0; i < samples; ++i) {
    const PureState psi = haar_state(std::size_t{4}, rng);
    const double p = std::norm(psi.amplitudes()[0]);
    acc += p * p;
  }
  acc /= samples;
  CHECK(std::abs(acc - 0.1) < 0.005);
}

TEST_CASE("haar_unitary is unitary") {
  RandomStream rng(3);
  const Matrix u = haar_unitary(5, rng);
  CHECK((u.adjoint() * u - Matrix::Identity(5, 5)).norm() < 1e-12);
}

TEST_CASE("partial_trace of product and entangled states") {
  const PureState zero_one = tensor(basis_state(2, 1, 0), basis_state(2, 1, 1));
  const DensityMatrix site1 = partial_trace(zero_one, {1});
  Matrix expect = Matrix::Zero(2, 2);
  expect(1, 1) = 1.0;
  CHECK((site1.matrix() - expect).norm() < 1e-12);

  const DensityMatrix half = partial_trace(bell_state(), {0});
  CHECK((half.matrix() - Matrix::Identity(2, 2) / 2.0).norm() < 1e-12);
}

TEST_CASE("partial_trace agrees with the explicit summation oracle") {
  RandomStream rng(5);
  const PureState psi = haar_state(std::uint32_t{3}, std::uint32_t{3}, rng);
  const DensityMatrix reduced = partial_trace(psi, {0, 2});
  CHECK(std::abs(reduced.matrix().trace().real() - 1.0) < 1e-12);
  const Matrix oracle = testutil::naive_partial_trace(psi, {0, 2});
  CHECK((reduced.matrix() - oracle).norm() < 1e-12);

  // unordered keep sets select the same factors
  const DensityMatrix reordered = partial_trace(psi, {2, 0});
  CHECK((reordered.matrix() - oracle).norm() < 1e-12);
}

TEST_CASE("partial_trace rejects bad subsets") {
  const PureState psi = bell_state();
  CHECK_THROWS_AS(partial_trace(psi, {}), std::invalid_argument);
  CHECK_THROWS_AS(partial_trace(psi, {2}), std::invalid_argument);
  CHECK_THROWS_AS(partial_trace(psi, {0, 0}), std::invalid_argument);
}

TEST_CASE("schmidt coefficients") {
  const SchmidtData bell = schmidt(bell_state(), {0});
  REQUIRE(bell.coefficients.size() == 2);
  CHECK(std::abs(bell.coefficients[0] - 0.5) < 1e-12);
  CHECK(std::abs(bell.coefficients[1] - 0.5) < 1e-12);

  const SchmidtData tilted = schmidt(head_tail_state(0.6), {0});
  CHECK(std::abs(tilted.coefficients[0] - 0.64) < 1e-12);
  CHECK(std::abs(tilted.coefficients[1] - 0.36) < 1e-12);

  RandomStream rng(9);
  const PureState product =
      tensor(haar_state(std::uint32_t{2}, 1, rng), haar_state(std::uint32_t{2}, 1, rng));
  const SchmidtData rank1 = schmidt(product, {0});
  CHECK(std::abs(rank1.coefficients[0] - 1.0) < 1e-10);

  CHECK_THROWS_AS(schmidt(bell_state(), {}), std::invalid_argument);
  CHECK_THROWS_AS(schmidt(bell_state(), {0, 1}), std::invalid_argument);
}

TEST_CASE("trace_distance basics and the pure-state formula") {
  const DensityMatrix z = projector(basis_state(2, 1, 0));
  const DensityMatrix o = projector(basis_state(2, 1, 1));
  CHECK(trace_distance(z, z) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(trace_distance(z, o) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(trace_distance(z, maximally_mixed(2, 1)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(trace_distance(z, maximally_mixed(2, 2)), std::invalid_argument);

  RandomStream rng(13);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = 2 + rng.uniform_index(4);
    const PureState a = haar_state(d, rng);
    const PureState b = haar_state(d, rng);
    const double overlap = std::norm(a.amplitudes().dot(b.amplitudes()));
    const double via_eigen = trace_distance(projector(a), projector(b));
    CHECK(std::abs(via_eigen - std::sqrt(1.0 - overlap)) < 1e-10);
  }
}

TEST_CASE("purity values") {
  RandomStream rng(17);
  CHECK(purity(projector(haar_state(std::size_t{5}, rng))) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(purity(maximally_mixed(4, 1)) == doctest::Approx(0.25).epsilon(1e-12));
  const DensityMatrix marg = partial_trace(head_tail_state(0.6), {0});
  CHECK(purity(marg) == doctest::Approx(0.5392).epsilon(1e-12));
}

TEST_CASE("schmidt consistency: marginal purity equals the coefficient mass") {
  RandomStream rng(19);
  for (const std::uint32_t n : {2u, 3u, 4u}) {
    for (const std::uint32_t d : {2u, 3u}) {
      const PureState psi = haar_state(d, n, rng);
      for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        std::vector<std::uint32_t> cut;
        for (std::uint32_t f = 0; f < n; ++f)
          if (mask & (1u << f)) cut.push_back(f);
        const auto data = schmidt(psi, cut);
        double mass = 0;
        for (double c : data.coefficients) mass += c * c;
        CHECK(std::abs(purity(partial_trace(psi, cut)) - mass) < 1e-10);
      }
    }
  }
}

TEST_CASE("distance_to_bp on known states") {
  RandomStream rng(23);
  const PureState product3 =
      tensor(tensor(haar_state(std::uint32_t{2}, 1, rng), haar_state(std::uint32_t{2}, 1, rng)),
             haar_state(std::uint32_t{2}, 1, rng));
  CHECK(distance_to_bp(product3).value < 1e-7);

  const PureState bell_and_spectator = tensor(bell_state(), basis_state(2, 1, 0));
  const CutDistance res = distance_to_bp(bell_and_spectator);
  CHECK(res.value < 1e-10);
  // the product cut separates the spectator: {0,1} against {2}
  CHECK(res.cut == std::vector<std::uint32_t>{0, 1});

  const CutDistance ghz = distance_to_bp(ghz_state(3));
  CHECK(std::abs(ghz.value - std::sqrt(0.5)) < 1e-12);
  for (const auto& cl : top_schmidt_by_cut(ghz_state(3))) CHECK(std::abs(cl.lambda1 - 0.5) < 1e-12);

  CHECK_THROWS_AS(distance_to_bp(basis_state(2, 1, 0)), std::invalid_argument);
}

TEST_CASE("distance_to_mp on known states") {
  RandomStream rng(29);
  const PureState product =
      tensor(haar_state(std::uint32_t{2}, 1, rng), haar_state(std::uint32_t{2}, 1, rng));
  CHECK(distance_to_mp(product).value < 1e-8);

  const ProductDistance bell = distance_to_mp(bell_state());
  CHECK(std::abs(bell.value - std::sqrt(0.5)) < 1e-12);
  CHECK(bell.converged);

  const ProductDistance w = distance_to_mp(w_state());
  CHECK(std::abs(w.best_overlap - 4.0 / 9.0) < 1e-9);
  CHECK(std::abs(w.value - std::sqrt(1.0 - 4.0 / 9.0)) < 1e-9);
}

TEST_CASE("w-state overlap against a grid oracle") {
  // sweep the real symmetric product family (a|0> + b|1>)^x3, whose squared
  // overlap with the equal-weight one-excitation state is 3 a^4 b^2
  double best = 0;
  for (int step = 0; step <= 1000; ++step) {
    const double theta = step * 0.5 * 3.14159265358979323846 / 1000;
    const double a = std::cos(theta), b = std::sin(theta);
    best = std::max(best, 3.0 * a * a * a * a * b * b);
  }
  CHECK(std::abs(best - 4.0 / 9.0) < 1e-5);
  const ProductDistance w = distance_to_mp(w_state());
  CHECK(w.best_overlap >= best - 1e-9);
  CHECK(w.best_overlap <= 4.0 / 9.0 + 1e-9);
}

TEST_CASE("distance_to_mp dominates distance_to_bp") {
  RandomStream rng(31);
  for (int i = 0; i < 20; ++i) {
    const PureState psi = haar_state(std::uint32_t{2}, std::uint32_t{3}, rng);
    CHECK(distance_to_mp(psi).value >= distance_to_bp(psi).value - 1e-9);
  }
}

TEST_CASE("local unitaries change neither product distance nor marginal purity") {
  RandomStream rng(37);
  const PureState psi = haar_state(std::uint32_t{2}, std::uint32_t{3}, rng);
  PureState rotated = psi;
  for (std::uint32_t f = 0; f < 3; ++f) rotated = apply_local_unitary(rotated, f, haar_unitary(2, rng));

  CHECK(std::abs(distance_to_mp(psi).value - distance_to_mp(rotated).value) < 1e-9);
  for (std::uint32_t f = 0; f < 3; ++f) {
    const double before = purity(partial_trace(psi, {f}));
    const double after = purity(partial_trace(rotated, {f}));
    CHECK(std::abs(before - after) < 1e-9);
  }
}

TEST_CASE("state json round trip") {
  RandomStream rng(41);
  const PureState psi = haar_state(std::uint32_t{2}, std::uint32_t{2}, rng);
  const PureState back = state_from_json(state_to_json(psi));
  CHECK((psi.amplitudes() - back.amplitudes()).norm() < 1e-15);
  CHECK(back.local_dim() == 2);
  CHECK(back.num_factors() == 2);
}

TEST_SUITE_END();
