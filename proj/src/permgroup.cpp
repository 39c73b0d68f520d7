#include "prodtest/permgroup.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "prodtest/errors.hpp"

namespace prodtest::permgroup {

Permutation::Permutation(std::vector<std::uint32_t> images) : images_(std::move(images)) {
  if (images_.empty()) throw std::invalid_argument("permutation must have positive degree");
  std::vector<bool> seen(images_.size(), false);
  for (auto v : images_) {
    if (v >= images_.size() || seen[v]) throw std::invalid_argument("permutation is not a bijection");
    seen[v] = true;
  }
}

Permutation Permutation::identity(std::uint32_t degree) {
  std::vector<std::uint32_t> img(degree);
  std::iota(img.begin(), img.end(), 0u);
  return Permutation(std::move(img));
}

Permutation Permutation::transposition(std::uint32_t degree, std::uint32_t a, std::uint32_t b) {
  if (a >= degree || b >= degree) throw std::invalid_argument("transposition: symbol out of range");
  std::vector<std::uint32_t> img(degree);
  std::iota(img.begin(), img.end(), 0u);
  std::swap(img[a], img[b]);
  return Permutation(std::move(img));
}

Permutation compose(const Permutation& p, const Permutation& q) {
  if (p.degree() != q.degree()) throw std::invalid_argument("compose: degree mismatch");
  std::vector<std::uint32_t> img(p.degree());
  for (std::uint32_t i = 0; i < p.degree(); ++i) img[i] = p(q(i));
  return Permutation(std::move(img));
}

Permutation inverse(const Permutation& p) {
  std::vector<std::uint32_t> img(p.degree());
  for (std::uint32_t i = 0; i < p.degree(); ++i) img[p(i)] = i;
  return Permutation(std::move(img));
}

std::vector<std::vector<std::uint32_t>> cycles(const Permutation& p) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<bool> visited(p.degree(), false);
  for (std::uint32_t start = 0; start < p.degree(); ++start) {
    if (visited[start]) continue;
    std::vector<std::uint32_t> cycle;
    std::uint32_t cur = start;
    do {
      visited[cur] = true;
      cycle.push_back(cur);
      cur = p(cur);
    } while (cur != start);
    out.push_back(std::move(cycle));
  }
  return out;
}

std::vector<Permutation> all_permutations(std::uint32_t degree) {
  if (degree == 0 || degree > kEnumerationMaxDegree)
    throw limit_error("all_permutations: degree outside the enumeration cap");
  std::vector<std::uint32_t> img(degree);
  std::iota(img.begin(), img.end(), 0u);
  std::vector<Permutation> out;
  do {
    out.emplace_back(img);
  } while (std::next_permutation(img.begin(), img.end()));
  return out;
}

CosetDecomposition double_coset_decompose(const Permutation& p) {
  const std::uint32_t deg = p.degree();
  if (deg < 2) throw std::invalid_argument("double_coset_decompose: degree must be at least 2");
  if (p(0) == 0) return CosetDecomposition{p, false, Permutation::identity(deg)};
  const std::uint32_t j = p(0);
  // gamma fixes 0 and sends j to 1; then (0 1).gamma.p fixes 0
  const Permutation gamma =
      j == 1 ? Permutation::identity(deg) : Permutation::transposition(deg, 1, j);
  const Permutation delta = compose(Permutation::transposition(deg, 0, 1), compose(gamma, p));
  return CosetDecomposition{inverse(gamma), true, delta};
}

Permutation recompose(const CosetDecomposition& c) {
  const std::uint32_t deg = c.alpha.degree();
  Permutation mid = c.swap_first_two ? Permutation::transposition(deg, 0, 1) : Permutation::identity(deg);
  return compose(c.alpha, compose(mid, c.beta));
}

Eigen::VectorXcd permute_positions(const Eigen::VectorXcd& v, const std::vector<std::size_t>& dims,
                                   const Permutation& p) {
  const std::size_t t = dims.size();
  if (p.degree() != t) throw std::invalid_argument("permute_positions: degree does not match dims");
  std::size_t total = 1;
  for (std::size_t dim : dims) {
    if (dim == 0) throw std::invalid_argument("permute_positions: zero dimension");
    total *= dim;
  }
  if (static_cast<std::size_t>(v.size()) != total)
    throw std::invalid_argument("permute_positions: vector length does not match dims");
  for (std::uint32_t i = 0; i < t; ++i)
    if (dims[p(i)] != dims[i])
      throw std::invalid_argument("permute_positions: permutation mixes unequal dimensions");

  std::vector<std::size_t> stride(t);
  std::size_t s = 1;
  for (std::size_t i = t; i-- > 0;) {
    stride[i] = s;
    s *= dims[i];
  }

  Eigen::VectorXcd out(v.size());
  std::vector<std::size_t> digit(t, 0);
  std::size_t dst = 0;
  for (std::size_t src = 0; src < total; ++src) {
    out[dst] = v[src];
    // odometer increment, keeping dst in sync
    for (std::size_t i = t; i-- > 0;) {
      ++digit[i];
      dst += stride[p(static_cast<std::uint32_t>(i))];
      if (digit[i] < dims[i]) break;
      dst -= digit[i] * stride[p(static_cast<std::uint32_t>(i))];
      digit[i] = 0;
    }
  }
  return out;
}

Eigen::VectorXcd permute_tensor_factors(const Eigen::VectorXcd& v, const Permutation& p) {
  const std::uint32_t t = p.degree();
  const std::size_t len = static_cast<std::size_t>(v.size());
  // recover m from len = m^t
  std::size_t m = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(len), 1.0 / t)));
  bool found = false;
  for (std::size_t cand = m > 1 ? m - 1 : 1; cand <= m + 1; ++cand) {
    std::size_t acc = 1;
    bool overflow = false;
    for (std::uint32_t i = 0; i < t; ++i) {
      if (acc > len / cand + 1) {
        overflow = true;
        break;
      }
      acc *= cand;
    }
    if (!overflow && acc == len) {
      m = cand;
      found = true;
      break;
    }
  }
  if (!found) throw std::invalid_argument("permute_tensor_factors: length is not m^T for integer m");
  return permute_positions(v, std::vector<std::size_t>(t, m), p);
}

std::uint64_t sym_dim(std::uint64_t d, std::uint64_t t) {
  if (d == 0) throw std::invalid_argument("sym_dim: dimension must be positive");
  // binom(d+t-1, t), computed incrementally with overflow detection
  unsigned __int128 result = 1;
  for (std::uint64_t i = 0; i < t; ++i) {
    result = result * (d + i) / (i + 1);
    if (result > static_cast<unsigned __int128>(UINT64_MAX))
      throw limit_error("sym_dim: value overflows 64 bits");
  }
  return static_cast<std::uint64_t>(result);
}

Eigen::MatrixXcd permutation_matrix(std::size_t local_dim, const Permutation& p) {
  std::size_t dim = 1;
  for (std::uint32_t i = 0; i < p.degree(); ++i) {
    dim *= local_dim;
    if (dim > kExplicitMatrixMaxDim) throw limit_error("permutation_matrix: oracle-scale cap exceeded");
  }
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  for (std::size_t col = 0; col < dim; ++col) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
    e[col] = 1.0;
    const Eigen::VectorXcd image = permute_positions(e, std::vector<std::size_t>(p.degree(), local_dim), p);
    for (std::size_t row = 0; row < dim; ++row) out(row, col) = image[row];
  }
  return out;
}

Eigen::MatrixXcd symmetric_projector(std::size_t local_dim, std::uint32_t copies) {
  std::size_t dim = 1;
  for (std::uint32_t i = 0; i < copies; ++i) {
    dim *= local_dim;
    if (dim > kExplicitMatrixMaxDim) throw limit_error("symmetric_projector: oracle-scale cap exceeded");
  }
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(dim, dim);
  const auto group = all_permutations(copies);
  for (const auto& p : group) sum += permutation_matrix(local_dim, p);
  return sum / static_cast<double>(group.size());
}

std::complex<double> permanent(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("permanent: matrix must be square");
  const std::size_t n = static_cast<std::size_t>(a.rows());
  if (n > kPermanentMaxSide) throw limit_error("permanent: side exceeds the Ryser cap");
  if (n == 0) return 1.0;

  // per(A) = (-1)^n sum_{S != 0} (-1)^|S| prod_i sum_{j in S} A(i,j),
  // visiting subsets in Gray-code order so each step updates one column.
  Eigen::VectorXcd rowsum = Eigen::VectorXcd::Zero(a.rows());
  std::complex<double> total = 0.0;
  std::uint64_t prev_gray = 0;
  const std::uint64_t end = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < end; ++k) {
    const std::uint64_t gray = k ^ (k >> 1);
    const std::uint64_t diff = gray ^ prev_gray;
    const int col = std::countr_zero(diff);
    if (gray & diff)
      rowsum += a.col(col);
    else
      rowsum -= a.col(col);
    const std::complex<double> prod = rowsum.prod();
    const int bits = std::popcount(gray);
    total += ((n - static_cast<std::size_t>(bits)) % 2 == 0) ? prod : -prod;
    prev_gray = gray;
  }
  return total;
}

std::complex<double> brute_force_permanent(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("brute_force_permanent: matrix must be square");
  const std::size_t n = static_cast<std::size_t>(a.rows());
  if (n > kBruteForceMaxSide) throw limit_error("brute_force_permanent: side exceeds the oracle cap");
  if (n == 0) return 1.0;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::complex<double> total = 0.0;
  do {
    std::complex<double> prod = 1.0;
    for (std::size_t i = 0; i < n; ++i) prod *= a(i, perm[i]);
    total += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

}  // namespace prodtest::permgroup
