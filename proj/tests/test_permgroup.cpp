#include <doctest.h>

#include <cmath>
#include <complex>

#include "prodtest/errors.hpp"
#include "prodtest/permgroup.hpp"
#include "prodtest/qcore.hpp"
#include "prodtest/rng.hpp"

using namespace prodtest;
using namespace prodtest::permgroup;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

namespace {

Vector random_vector(std::size_t dim, RandomStream& rng) {
  Vector v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = rng.complex_gaussian();
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("permgroup");

TEST_CASE("permutation validation") {
  CHECK_THROWS_AS(Permutation({0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(Permutation({0, 3, 1}), std::invalid_argument);
  CHECK_THROWS_AS(Permutation({}), std::invalid_argument);
  CHECK(Permutation::identity(4).fixes(2));
}

TEST_CASE("group operations on all of S_3") {
  const auto group = all_permutations(3);
  REQUIRE(group.size() == 6);
  for (const auto& p : group) {
    CHECK(compose(p, inverse(p)) == Permutation::identity(3));
    CHECK(compose(inverse(p), p) == Permutation::identity(3));
    for (const auto& q : group) {
      const auto pq = compose(p, q);
      // pointwise table oracle
      for (std::uint32_t x = 0; x < 3; ++x) CHECK(pq(x) == p(q(x)));
    }
  }
  // the transposition pair composes into a 3-cycle
  const auto t01 = Permutation::transposition(3, 0, 1);
  const auto t12 = Permutation::transposition(3, 1, 2);
  const auto cyc = compose(t01, t12);
  CHECK(cyc(0) == 1);
  CHECK(cyc(1) == 2);
  CHECK(cyc(2) == 0);
  CHECK_THROWS_AS(compose(t01, Permutation::identity(4)), std::invalid_argument);
}

TEST_CASE("cycle decomposition") {
  const auto id_cycles = cycles(Permutation::identity(4));
  CHECK(id_cycles.size() == 4);
  for (const auto& c : id_cycles) CHECK(c.size() == 1);

  const auto c3 = cycles(Permutation({1, 2, 0, 3}));
  REQUIRE(c3.size() == 2);
  CHECK(c3[0] == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(c3[1] == std::vector<std::uint32_t>{3});
}

TEST_CASE("double coset decomposition on fixed elements") {
  const auto id = Permutation::identity(4);
  const auto dec_id = double_coset_decompose(id);
  CHECK_FALSE(dec_id.swap_first_two);
  CHECK(dec_id.alpha == id);
  CHECK(dec_id.beta == id);

  const auto swap01 = Permutation::transposition(4, 0, 1);
  const auto dec_swap = double_coset_decompose(swap01);
  CHECK(dec_swap.swap_first_two);
  CHECK(dec_swap.alpha == id);
  CHECK(dec_swap.beta == id);

  CHECK_THROWS_AS(double_coset_decompose(Permutation({0})), std::invalid_argument);
}

TEST_CASE("double coset decomposition is exhaustive over S_4 and S_5") {
  for (const std::uint32_t degree : {4u, 5u}) {
    std::uint64_t fixing = 0;
    for (const auto& p : all_permutations(degree)) {
      const auto dec = double_coset_decompose(p);
      CHECK(recompose(dec) == p);
      CHECK(dec.alpha.fixes(0));
      CHECK(dec.beta.fixes(0));
      CHECK(dec.swap_first_two == !p.fixes(0));
      if (p.fixes(0)) ++fixing;
    }
    std::uint64_t expect = 1;
    for (std::uint32_t k = 2; k < degree; ++k) expect *= k;
    CHECK(fixing == expect);
  }
}

TEST_CASE("tensor factor action on basis vectors") {
  RandomStream rng(1);
  // identity leaves vectors alone
  Vector v = random_vector(8, rng);
  CHECK((permute_tensor_factors(v, Permutation::identity(3)) - v).norm() == 0.0);

  // the swap sends |01> to |10>
  Vector e01 = Vector::Zero(4);
  e01[1] = 1.0;
  const Vector swapped = permute_tensor_factors(e01, Permutation::transposition(2, 0, 1));
  CHECK(std::abs(swapped[2] - std::complex<double>(1, 0)) < 1e-15);

  // an order-3 element cycles back in three applications
  const Permutation c3({1, 2, 0});
  Vector w = random_vector(27, rng);
  Vector cycled = permute_tensor_factors(permute_tensor_factors(permute_tensor_factors(w, c3), c3), c3);
  CHECK((cycled - w).norm() < 1e-12);

  CHECK_THROWS_AS(permute_tensor_factors(random_vector(6, rng), Permutation::identity(2)),
                  std::invalid_argument);
}

TEST_CASE("tensor factor action is a representation") {
  RandomStream rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint32_t copies = 2 + static_cast<std::uint32_t>(rng.uniform_index(4));
    const std::size_t m = 2 + rng.uniform_index(2);
    std::size_t dim = 1;
    for (std::uint32_t i = 0; i < copies; ++i) dim *= m;
    if (dim > 243) continue;
    const auto group = all_permutations(copies);
    const auto& p = group[rng.uniform_index(group.size())];
    const auto& q = group[rng.uniform_index(group.size())];
    const Vector v = random_vector(dim, rng);
    const Vector lhs = permute_tensor_factors(permute_tensor_factors(v, q), p);
    const Vector rhs = permute_tensor_factors(v, compose(p, q));
    CHECK((lhs - rhs).norm() < 1e-12);
  }
}

TEST_CASE("explicit permutation matrices match the index action") {
  RandomStream rng(3);
  for (const auto& p : all_permutations(3)) {
    const Matrix pm = permutation_matrix(2, p);
    const Vector v = random_vector(8, rng);
    CHECK((pm * v - permute_tensor_factors(v, p)).norm() < 1e-12);
  }
}

TEST_CASE("symmetric projector absorption and trace") {
  for (const auto& [m, copies] : std::vector<std::pair<std::size_t, std::uint32_t>>{
           {2, 2}, {2, 3}, {2, 4}, {3, 2}}) {
    const Matrix proj = symmetric_projector(m, copies);
    CHECK(std::abs(proj.trace().real() - static_cast<double>(sym_dim(m, copies))) < 1e-9);
    for (const auto& p : all_permutations(copies)) {
      const Matrix pm = permutation_matrix(m, p);
      CHECK((pm * proj - proj).norm() < 1e-10);
      CHECK((proj * pm - proj).norm() < 1e-10);
    }
    // projector property
    CHECK((proj * proj - proj).norm() < 1e-10);
  }
}

TEST_CASE("symmetric subspace dimension") {
  CHECK(sym_dim(2, 2) == 3);
  CHECK(sym_dim(7, 0) == 1);
  CHECK(sym_dim(2, 3) == 4);
  CHECK(sym_dim(16, 6) == 54264);
  CHECK_THROWS_AS(sym_dim(0, 2), std::invalid_argument);
}

TEST_CASE("permanent of fixed matrices") {
  for (std::size_t n : {1u, 3u, 6u}) {
    CHECK(std::abs(permanent(Matrix::Identity(n, n)) - std::complex<double>(1, 0)) < 1e-12);
  }
  CHECK(std::abs(permanent(Matrix::Ones(2, 2)) - std::complex<double>(2, 0)) < 1e-12);

  Matrix z(1, 1);
  z(0, 0) = std::complex<double>(0.3, -1.2);
  CHECK(std::abs(permanent(z) - z(0, 0)) < 1e-15);
  CHECK(std::abs(brute_force_permanent(z) - z(0, 0)) < 1e-15);

  CHECK_THROWS_AS(permanent(Matrix::Ones(2, 3)), std::invalid_argument);
  CHECK_THROWS_AS(brute_force_permanent(Matrix::Ones(10, 10)), limit_error);
}

TEST_CASE("permanent of an orthonormal Gram matrix is 1") {
  RandomStream rng(4);
  const Matrix u = prodtest::qcore::haar_unitary(5, rng);
  Matrix g(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = u.col(i).dot(u.col(j));
  CHECK(std::abs(permanent(g) - std::complex<double>(1, 0)) < 1e-10);
}

TEST_CASE("ryser matches brute force on random matrices") {
  RandomStream rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(8);
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.complex_gaussian();
    const auto fast = permanent(a);
    const auto slow = brute_force_permanent(a);
    CHECK(std::abs(fast - slow) <= 1e-9 * std::max(1.0, std::abs(slow)));
  }
}

TEST_CASE("heterogeneous position permutation mixes only equal dimensions") {
  RandomStream rng(6);
  const std::vector<std::size_t> dims{2, 3, 2};
  const Vector v = random_vector(12, rng);
  // swapping the two dimension-2 positions is allowed
  const Vector out = permute_positions(v, dims, Permutation({2, 1, 0}));
  CHECK(out.size() == 12);
  // digits: (a, b, c) at strides (6, 2, 1) map to (c, b, a)
  CHECK(std::abs(out[1 * 6 + 2 * 2 + 0] - v[0 * 6 + 2 * 2 + 1]) < 1e-15);
  // mixing a dimension-2 with the dimension-3 position is rejected
  CHECK_THROWS_AS(permute_positions(v, dims, Permutation({1, 0, 2})), std::invalid_argument);
}

TEST_SUITE_END();
