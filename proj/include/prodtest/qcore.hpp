#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "prodtest/rng.hpp"

namespace prodtest::qcore {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr double kNormTol = 1e-12;
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-12;
// eigenvalues above this (slightly negative) floor count as non-negative
inline constexpr double kPsdFloor = -1e-10;
// desk-scale guard: total Hilbert-space dimension d^n
inline constexpr std::size_t kMaxTotalDim = std::size_t{1} << 20;
// cut enumeration cap for distance_to_bp (2^(n-1)-1 cuts)
inline constexpr std::uint32_t kMaxCutFactors = 20;

// d^n with overflow / cap checking
std::size_t checked_pow(std::uint32_t d, std::uint32_t n);

// Pure state of num_factors qudits, each of dimension local_dim. Factor 0
// owns the slowest-varying index: |i0 i1 ... i_{n-1}> lives at amplitude
// index ((i0*d + i1)*d + ...)*d + i_{n-1}. Unit norm is enforced on
// construction.
class PureState {
 public:
  PureState(Vector amplitudes, std::uint32_t local_dim, std::uint32_t num_factors);

  const Vector& amplitudes() const { return amplitudes_; }
  std::uint32_t local_dim() const { return local_dim_; }
  std::uint32_t num_factors() const { return num_factors_; }
  std::size_t dim() const { return static_cast<std::size_t>(amplitudes_.size()); }

 private:
  Vector amplitudes_;
  std::uint32_t local_dim_;
  std::uint32_t num_factors_;
};

// Hermitian, PSD, unit-trace matrix on (C^d)^(x)k. Checked on construction.
class DensityMatrix {
 public:
  DensityMatrix(Matrix matrix, std::uint32_t local_dim, std::uint32_t num_factors);

  const Matrix& matrix() const { return matrix_; }
  std::uint32_t local_dim() const { return local_dim_; }
  std::uint32_t num_factors() const { return num_factors_; }
  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }

 private:
  Matrix matrix_;
  std::uint32_t local_dim_;
  std::uint32_t num_factors_;
};

// Squared Schmidt coefficients across a cut, descending, summing to one.
struct SchmidtData {
  std::vector<double> coefficients;
  std::vector<std::uint32_t> cut;
};

// --- sampling ---

// Haar random unit vector: normalized complex Gaussian vector, equal in law
// to the first column of a Haar unitary.
PureState haar_state(std::size_t dim, RandomStream& rng);
PureState haar_state(std::uint32_t local_dim, std::uint32_t num_factors, RandomStream& rng);

// Haar random unitary: QR of a complex Ginibre matrix with the R diagonal
// phases folded back into Q.
Matrix haar_unitary(std::size_t dim, RandomStream& rng);

// --- construction helpers ---

PureState basis_state(std::uint32_t local_dim, std::uint32_t num_factors, std::size_t index);
PureState tensor(const PureState& a, const PureState& b);
DensityMatrix projector(const PureState& psi);
DensityMatrix maximally_mixed(std::uint32_t local_dim, std::uint32_t num_factors);

// (I x ... x U x ... x I) |psi> with U acting on `site`
PureState apply_local_unitary(const PureState& psi, std::uint32_t site, const Matrix& u);

// --- reductions and measures ---

// Reduced state on the factors in `keep` (0-based, any order, no duplicates).
DensityMatrix partial_trace(const PureState& psi, const std::vector<std::uint32_t>& keep);
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::uint32_t>& keep);

// Squared singular values of the amplitude matrix reshaped along cut:complement.
// The cut must be a non-trivial proper subset of the factors.
SchmidtData schmidt(const PureState& psi, const std::vector<std::uint32_t>& cut);

// Half the trace norm of a-b, via the eigenvalues of the difference.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

double purity(const DensityMatrix& rho);

// --- distances to the product-state families ---

struct CutLambda {
  std::vector<std::uint32_t> cut;
  double lambda1;
};

// largest squared Schmidt coefficient for every cut containing factor 0
// (each bipartition once); cuts ordered by their bit mask
std::vector<CutLambda> top_schmidt_by_cut(const PureState& psi);

struct CutDistance {
  double value;                    // min over cuts of sqrt(1 - lambda1)
  std::vector<std::uint32_t> cut;  // a cut attaining the minimum
};

// Trace distance to the set of states product across at least one cut. Exact
// per cut via the top singular value; cuts are enumerated up to complement
// symmetry, so n is capped at kMaxCutFactors.
CutDistance distance_to_bp(const PureState& psi);

struct ProductDistance {
  double value;         // sqrt(1 - best_overlap)
  double best_overlap;  // best squared overlap with a fully product state found
  bool converged;
};

inline constexpr int kMpDefaultRestarts = 16;
inline constexpr int kMpDefaultIters = 200;
inline constexpr double kMpOverlapTol = 1e-10;

// Trace distance to the fully product states. n = 2 is exact (top Schmidt
// coefficient); n > 2 uses alternating rank-one maximization from `restarts`
// starts (one seeded from the single-site marginals, the rest Haar random).
ProductDistance distance_to_mp(const PureState& psi, int restarts = kMpDefaultRestarts,
                               int iters = kMpDefaultIters);

// The alternating-maximization path by itself; exposed so the exact n = 2
// route can be cross-checked against it.
ProductDistance alternating_product_distance(const PureState& psi, int restarts, int iters,
                                             RandomStream& rng);

// --- serialization ---

// {"amplitudes": [[re, im], ...], "local_dim": d, "num_factors": n}
std::string state_to_json(const PureState& psi);
PureState state_from_json(const std::string& text);

}  // namespace prodtest::qcore
