#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace prodtest::permgroup {

// side cap for the Ryser permanent (O(2^s * s))
inline constexpr std::size_t kPermanentMaxSide = 30;
// side cap for the brute-force permanent oracle (O(s! * s))
inline constexpr std::size_t kBruteForceMaxSide = 9;
// full-group enumeration cap (8! = 40320 elements)
inline constexpr std::uint32_t kEnumerationMaxDegree = 8;
// explicit permutation / projector matrices are oracle-scale only
inline constexpr std::size_t kExplicitMatrixMaxDim = 256;

// Permutation of {0, ..., degree-1} in one-line notation: images()[i] is the
// image of i.
class Permutation {
 public:
  explicit Permutation(std::vector<std::uint32_t> images);

  static Permutation identity(std::uint32_t degree);
  // swaps a and b, fixes everything else
  static Permutation transposition(std::uint32_t degree, std::uint32_t a, std::uint32_t b);

  std::uint32_t degree() const { return static_cast<std::uint32_t>(images_.size()); }
  std::uint32_t operator()(std::uint32_t i) const { return images_[i]; }
  const std::vector<std::uint32_t>& images() const { return images_; }
  bool fixes(std::uint32_t i) const { return images_[i] == i; }

  bool operator==(const Permutation& other) const = default;

 private:
  std::vector<std::uint32_t> images_;
};

// (p . q)(i) = p(q(i))
Permutation compose(const Permutation& p, const Permutation& q);
Permutation inverse(const Permutation& p);

// cycle decomposition; singleton cycles (fixed points) included, each cycle
// starting at its smallest element, cycles ordered by that element
std::vector<std::vector<std::uint32_t>> cycles(const Permutation& p);

// all degree! elements, lexicographic by one-line notation
std::vector<Permutation> all_permutations(std::uint32_t degree);

// p = alpha . (0 1)^a . beta with alpha and beta fixing symbol 0
struct CosetDecomposition {
  Permutation alpha;
  bool swap_first_two;
  Permutation beta;
};

CosetDecomposition double_coset_decompose(const Permutation& p);
Permutation recompose(const CosetDecomposition& c);

// Permuted tensor positions with per-position dimensions: the digit at
// position t of the input lands at position p(t) of the output, so basis
// vector |i_0 ... i_{T-1}> maps to |i_{p^{-1}(0)} ... i_{p^{-1}(T-1)}>.
// p may only map positions to positions of equal dimension. Implemented by
// index remapping; no permutation matrix is materialized.
Eigen::VectorXcd permute_positions(const Eigen::VectorXcd& v, const std::vector<std::size_t>& dims,
                                   const Permutation& p);

// uniform-dimension case; the local dimension m is inferred from
// v.size() = m^degree
Eigen::VectorXcd permute_tensor_factors(const Eigen::VectorXcd& v, const Permutation& p);

// dimension of the symmetric subspace of (C^d)^(x)t: binom(d+t-1, t)
std::uint64_t sym_dim(std::uint64_t d, std::uint64_t t);

// explicit matrices for oracle-scale checks (dim = local_dim^degree <= 256)
Eigen::MatrixXcd permutation_matrix(std::size_t local_dim, const Permutation& p);
Eigen::MatrixXcd symmetric_projector(std::size_t local_dim, std::uint32_t copies);

// Ryser's inclusion-exclusion permanent with Gray-code subset iteration.
std::complex<double> permanent(const Eigen::MatrixXcd& a);

// Direct sum over all permutations; independent oracle for `permanent`.
std::complex<double> brute_force_permanent(const Eigen::MatrixXcd& a);

}  // namespace prodtest::permgroup
