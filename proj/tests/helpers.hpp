#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "prodtest/qcore.hpp"
#include "prodtest/rng.hpp"

namespace testutil {

using prodtest::qcore::Complex;
using prodtest::qcore::Matrix;
using prodtest::qcore::PureState;
using prodtest::qcore::Vector;

inline PureState bell_state() {
  Vector v = Vector::Zero(4);
  v[0] = v[3] = 1.0 / std::sqrt(2.0);
  return PureState(v, 2, 2);
}

inline PureState ghz_state(std::uint32_t n) {
  const std::size_t dim = std::size_t{1} << n;
  Vector v = Vector::Zero(dim);
  v[0] = v[dim - 1] = 1.0 / std::sqrt(2.0);
  return PureState(v, 2, n);
}

inline PureState w_state() {
  Vector v = Vector::Zero(8);
  v[1] = v[2] = v[4] = 1.0 / std::sqrt(3.0);
  return PureState(v, 2, 3);
}

// sqrt(1-eps^2)|00> + eps|11>
inline PureState head_tail_state(double eps, std::uint32_t d = 2) {
  const std::size_t dim = static_cast<std::size_t>(d) * d;
  Vector v = Vector::Zero(dim);
  v[0] = std::sqrt(1.0 - eps * eps);
  v[d + 1] = eps;
  return PureState(v, d, 2);
}

// Reference partial trace built from the full projector by explicit index
// summation; deliberately independent of the library's stride arithmetic.
inline Matrix naive_partial_trace(const PureState& psi, const std::vector<std::uint32_t>& keep) {
  const std::uint32_t n = psi.num_factors();
  const std::uint32_t d = psi.local_dim();
  const std::size_t dim = psi.dim();
  const Matrix rho = psi.amplitudes() * psi.amplitudes().adjoint();

  const auto digits_of = [&](std::size_t idx) {
    std::vector<std::uint32_t> digits(n);
    for (std::uint32_t f = n; f-- > 0;) {
      digits[f] = static_cast<std::uint32_t>(idx % d);
      idx /= d;
    }
    return digits;
  };

  std::size_t dk = 1;
  for (std::size_t i = 0; i < keep.size(); ++i) dk *= d;
  Matrix out = Matrix::Zero(dk, dk);
  for (std::size_t row = 0; row < dim; ++row) {
    const auto rd = digits_of(row);
    for (std::size_t col = 0; col < dim; ++col) {
      const auto cd = digits_of(col);
      bool traced_match = true;
      for (std::uint32_t f = 0; f < n; ++f) {
        bool kept = false;
        for (auto k : keep) kept = kept || (k == f);
        if (!kept && rd[f] != cd[f]) traced_match = false;
      }
      if (!traced_match) continue;
      std::size_t r_out = 0, c_out = 0;
      for (auto k : keep) {
        r_out = r_out * d + rd[k];
        c_out = c_out * d + cd[k];
      }
      out(r_out, c_out) += rho(row, col);
    }
  }
  return out;
}

}  // namespace testutil
