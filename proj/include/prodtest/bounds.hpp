#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "prodtest/qcore.hpp"
#include "prodtest/rng.hpp"

namespace prodtest::bounds {

// absolute slack tolerance for every inequality check; all checked
// quantities are O(1)
inline constexpr double kSlackTol = 1e-9;
// dual-route agreement tolerance (relative)
inline constexpr double kRouteTol = 1e-8;
// caps for the explicit tensor-contraction routes
inline constexpr std::uint32_t kOverlapMaxCopies = 8;
inline constexpr std::size_t kContractionMaxDim = 4096;
inline constexpr std::uint32_t kProductOverlapMaxCopies = 4;
inline constexpr std::size_t kProductContractionMaxDim = 65536;
inline constexpr std::uint32_t kPTestMaxFactors = 12;

// Pairwise inner products of a collection of equal-dimension unit vectors;
// Hermitian PSD with unit diagonal by construction, checked anyway.
class GramMatrix {
 public:
  explicit GramMatrix(Eigen::MatrixXcd entries);

  const Eigen::MatrixXcd& entries() const { return entries_; }
  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }

 private:
  Eigen::MatrixXcd entries_;
};

struct BoundReport {
  double lhs = 0;
  double rhs = 0;
  bool satisfied = false;
  double slack = 0;  // lhs - rhs

  static BoundReport of(double lhs, double rhs) {
    return BoundReport{lhs, rhs, lhs >= rhs - kSlackTol, lhs - rhs};
  }
};

GramMatrix gram(const std::vector<qcore::PureState>& states);

// Sum over all T! permutation operators of Tr[P(pi) (x)_t psi_t], equal to
// the permanent of the Gram matrix. When the T-copy tensor fits under
// kContractionMaxDim the explicit contraction route is evaluated too and the
// two must agree to kRouteTol, otherwise an internal error is raised.
double perm_overlap_sum(const std::vector<qcore::PureState>& states);

// The contraction route on its own: builds the T-copy tensor and applies
// every permutation by index remapping. Oracle for perm_overlap_sum.
double overlap_sum_by_contraction(const std::vector<qcore::PureState>& states);

// per(G) >= ||G||_F^2 / T for Hermitian PSD G with unit diagonal
BoundReport frobenius_bound_check(const GramMatrix& g);

// Sum over all (T!)^n tuples of per-block permutation operators of
// Tr[(x~)_i P(pi_i) (x)_t psi_t], where `parts` partitions the factors of the
// states into n blocks. Evaluated by explicit index contraction.
double prod_perm_overlap_sum(const std::vector<qcore::PureState>& states,
                             const std::vector<std::vector<std::uint32_t>>& parts);

// Builds T bipartite product states with Haar-orthonormal factor sets on both
// sides and evaluates Tr[Pi_sym (x~) Pi_sym . (x)_t psi_t] against the
// saturation value 1/(T!)^2. Requires T <= d <= 4.
BoundReport saturation_check_product_collection(std::uint32_t t, std::uint32_t d, RandomStream& rng);

struct LikelihoodRatio {
  double ratio;        // d^T / (d (d+1) ... (d+T-1)) * per(G)
  double lower_bound;  // 1 - T(T-1) / (2d)
};

// Exact single-copy likelihood ratio of a Haar-averaged pure state against
// the maximally mixed state, for the outcome string whose measured vectors
// are given.
LikelihoodRatio haar_likelihood_ratio(const std::vector<qcore::PureState>& measured_states);

// d (d+1) ... (d+t-1)
double rising_factorial(double d, std::uint32_t t);

// 1 - (4/n) eps^2 (1 - eps^2): the largest possible average single-site
// purity of a state at trace distance eps from the fully product set
double avg_purity_bound(double eps, std::uint32_t n);

// 2^-n sum over all factor subsets S of Tr[rho_S^2], with the empty subset
// contributing 1
double p_test(const qcore::DensityMatrix& rho);
double p_test(const qcore::PureState& psi);

// half the l1 distance between two distributions on a common index set
double tv_distance(const std::vector<double>& p, const std::vector<double>& q);

// Checks the one-sided ratio implication on concrete inputs: requires
// p(i)/q(i) >= 1 - delta everywhere (and q > 0 wherever p > 0), then reports
// lhs = delta against rhs = tv_distance(p, q).
BoundReport one_sided_tv_check(const std::vector<double>& p, const std::vector<double>& q,
                               double delta);

// T unit vectors in C^d whose frame operator is (T/d) * identity; requires
// d | T. Saturates the Frobenius lower bound on the Gram permanent.
std::vector<qcore::PureState> tight_frame(std::uint32_t d, std::uint32_t t, RandomStream& rng);

}  // namespace prodtest::bounds
