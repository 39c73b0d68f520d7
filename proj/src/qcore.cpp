#include "prodtest/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "prodtest/errors.hpp"

namespace prodtest::qcore {

namespace {

// strides for factor digits, factor 0 slowest
std::vector<std::size_t> factor_strides(std::uint32_t d, std::uint32_t n) {
  std::vector<std::size_t> stride(n);
  std::size_t s = 1;
  for (std::uint32_t f = n; f-- > 0;) {
    stride[f] = s;
    s *= d;
  }
  return stride;
}

// flat offsets contributed by every assignment of digits to the given factors
std::vector<std::size_t> subset_offsets(const std::vector<std::size_t>& stride,
                                        const std::vector<std::uint32_t>& factors, std::uint32_t d) {
  std::size_t count = 1;
  for (std::size_t i = 0; i < factors.size(); ++i) count *= d;
  std::vector<std::size_t> offsets(count, 0);
  std::vector<std::uint32_t> digits(factors.size(), 0);
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::size_t off = 0;
    for (std::size_t j = 0; j < factors.size(); ++j) off += digits[j] * stride[factors[j]];
    offsets[idx] = off;
    for (std::size_t j = factors.size(); j-- > 0;) {
      if (++digits[j] < d) break;
      digits[j] = 0;
    }
  }
  return offsets;
}

std::vector<std::uint32_t> complement_of(const std::vector<std::uint32_t>& subset, std::uint32_t n) {
  std::vector<bool> in(n, false);
  for (auto f : subset) in[f] = true;
  std::vector<std::uint32_t> rest;
  for (std::uint32_t f = 0; f < n; ++f)
    if (!in[f]) rest.push_back(f);
  return rest;
}

std::vector<std::uint32_t> checked_subset(const std::vector<std::uint32_t>& subset, std::uint32_t n,
                                          const char* what) {
  if (subset.empty()) throw std::invalid_argument(std::string(what) + ": empty factor subset");
  std::vector<bool> seen(n, false);
  std::vector<std::uint32_t> sorted = subset;
  std::sort(sorted.begin(), sorted.end());
  for (auto f : sorted) {
    if (f >= n) throw std::invalid_argument(std::string(what) + ": factor index out of range");
    if (seen[f]) throw std::invalid_argument(std::string(what) + ": duplicate factor index");
    seen[f] = true;
  }
  return sorted;
}

// largest squared Schmidt coefficient across cut:complement, via the Gram
// matrix on the smaller side
double top_schmidt_coefficient(const PureState& psi, const std::vector<std::uint32_t>& cut,
                               const std::vector<std::uint32_t>& rest) {
  const std::uint32_t d = psi.local_dim();
  const auto stride = factor_strides(d, psi.num_factors());
  const bool swap_sides = cut.size() > rest.size();
  const auto& rows = swap_sides ? rest : cut;
  const auto& cols = swap_sides ? cut : rest;
  const auto row_off = subset_offsets(stride, rows, d);
  const auto col_off = subset_offsets(stride, cols, d);
  const std::size_t nr = row_off.size();
  const std::size_t nc = col_off.size();
  const Vector& a = psi.amplitudes();

  Matrix g = Matrix::Zero(nr, nr);
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = i; j < nr; ++j) {
      Complex acc = 0;
      for (std::size_t b = 0; b < nc; ++b) acc += a[row_off[i] + col_off[b]] * std::conj(a[row_off[j] + col_off[b]]);
      g(i, j) = acc;
      g(j, i) = std::conj(acc);
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

std::size_t checked_pow(std::uint32_t d, std::uint32_t n) {
  if (d == 0) throw std::invalid_argument("local dimension must be positive");
  std::size_t total = 1;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (total > kMaxTotalDim / d) throw limit_error("total dimension exceeds desk-scale cap");
    total *= d;
  }
  return total;
}

PureState::PureState(Vector amplitudes, std::uint32_t local_dim, std::uint32_t num_factors)
    : amplitudes_(std::move(amplitudes)), local_dim_(local_dim), num_factors_(num_factors) {
  const std::size_t expect = checked_pow(local_dim, num_factors);
  if (static_cast<std::size_t>(amplitudes_.size()) != expect)
    throw std::invalid_argument("amplitude vector length does not equal local_dim^num_factors");
  if (std::abs(amplitudes_.squaredNorm() - 1.0) > kNormTol)
    throw std::invalid_argument("state is not normalized");
}

DensityMatrix::DensityMatrix(Matrix matrix, std::uint32_t local_dim, std::uint32_t num_factors)
    : matrix_(std::move(matrix)), local_dim_(local_dim), num_factors_(num_factors) {
  const std::size_t expect = checked_pow(local_dim, num_factors);
  if (static_cast<std::size_t>(matrix_.rows()) != expect ||
      static_cast<std::size_t>(matrix_.cols()) != expect)
    throw std::invalid_argument("density matrix has wrong shape");
  if ((matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
    throw std::invalid_argument("density matrix is not Hermitian");
  if (std::abs(matrix_.trace().real() - 1.0) > kTraceTol || std::abs(matrix_.trace().imag()) > kTraceTol)
    throw std::invalid_argument("density matrix trace is not 1");
  // full spectral check only at sizes where it is cheap
  if (matrix_.rows() <= 1024) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(matrix_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kPsdFloor)
      throw std::invalid_argument("density matrix has a negative eigenvalue");
  }
}

PureState haar_state(std::size_t dim, RandomStream& rng) {
  if (dim == 0) throw std::invalid_argument("haar_state: dimension must be positive");
  if (dim > kMaxTotalDim) throw limit_error("haar_state: dimension exceeds desk-scale cap");
  Vector v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = rng.complex_gaussian();
  v /= v.norm();
  return PureState(std::move(v), static_cast<std::uint32_t>(dim), 1);
}

PureState haar_state(std::uint32_t local_dim, std::uint32_t num_factors, RandomStream& rng) {
  const std::size_t dim = checked_pow(local_dim, num_factors);
  PureState flat = haar_state(dim, rng);
  return PureState(flat.amplitudes(), local_dim, num_factors);
}

Matrix haar_unitary(std::size_t dim, RandomStream& rng) {
  if (dim == 0) throw std::invalid_argument("haar_unitary: dimension must be positive");
  Matrix g(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) g(i, j) = rng.complex_gaussian();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::size_t j = 0; j < dim; ++j) {
    const Complex rjj = r(j, j);
    const double m = std::abs(rjj);
    const Complex phase = m > 0 ? rjj / m : Complex(1, 0);
    q.col(j) *= phase;
  }
  return q;
}

PureState basis_state(std::uint32_t local_dim, std::uint32_t num_factors, std::size_t index) {
  const std::size_t dim = checked_pow(local_dim, num_factors);
  if (index >= dim) throw std::invalid_argument("basis_state: index out of range");
  Vector v = Vector::Zero(dim);
  v[index] = 1.0;
  return PureState(std::move(v), local_dim, num_factors);
}

PureState tensor(const PureState& a, const PureState& b) {
  if (a.local_dim() != b.local_dim())
    throw std::invalid_argument("tensor: states have different local dimensions");
  const std::size_t da = a.dim(), db = b.dim();
  Vector v(da * db);
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t j = 0; j < db; ++j) v[i * db + j] = a.amplitudes()[i] * b.amplitudes()[j];
  return PureState(std::move(v), a.local_dim(), a.num_factors() + b.num_factors());
}

DensityMatrix projector(const PureState& psi) {
  Matrix m = psi.amplitudes() * psi.amplitudes().adjoint();
  return DensityMatrix(std::move(m), psi.local_dim(), psi.num_factors());
}

DensityMatrix maximally_mixed(std::uint32_t local_dim, std::uint32_t num_factors) {
  const std::size_t dim = checked_pow(local_dim, num_factors);
  Matrix m = Matrix::Identity(dim, dim) / static_cast<double>(dim);
  return DensityMatrix(std::move(m), local_dim, num_factors);
}

PureState apply_local_unitary(const PureState& psi, std::uint32_t site, const Matrix& u) {
  const std::uint32_t d = psi.local_dim();
  const std::uint32_t n = psi.num_factors();
  if (site >= n) throw std::invalid_argument("apply_local_unitary: site out of range");
  if (u.rows() != d || u.cols() != d)
    throw std::invalid_argument("apply_local_unitary: matrix does not match the local dimension");
  const auto stride = factor_strides(d, n);
  const std::size_t s = stride[site];
  const std::size_t dim = psi.dim();
  Vector out(dim);
  Vector x(d), y(d);
  for (std::size_t outer = 0; outer < dim / d; ++outer) {
    const std::size_t hi = outer / s;
    const std::size_t lo = outer % s;
    const std::size_t base = hi * (s * d) + lo;
    for (std::uint32_t a = 0; a < d; ++a) x[a] = psi.amplitudes()[base + a * s];
    y.noalias() = u * x;
    for (std::uint32_t a = 0; a < d; ++a) out[base + a * s] = y[a];
  }
  return PureState(std::move(out), d, n);
}

DensityMatrix partial_trace(const PureState& psi, const std::vector<std::uint32_t>& keep) {
  const std::uint32_t n = psi.num_factors();
  const std::uint32_t d = psi.local_dim();
  const auto kept = checked_subset(keep, n, "partial_trace");
  const auto rest = complement_of(kept, n);
  const auto stride = factor_strides(d, n);
  const auto keep_off = subset_offsets(stride, kept, d);
  const auto rest_off = subset_offsets(stride, rest, d);
  const std::size_t dk = keep_off.size();
  const Vector& a = psi.amplitudes();

  Matrix rho = Matrix::Zero(dk, dk);
  for (std::size_t i = 0; i < dk; ++i) {
    for (std::size_t j = i; j < dk; ++j) {
      Complex acc = 0;
      for (std::size_t e : rest_off) acc += a[keep_off[i] + e] * std::conj(a[keep_off[j] + e]);
      rho(i, j) = acc;
      rho(j, i) = std::conj(acc);
    }
  }
  return DensityMatrix(std::move(rho), d, static_cast<std::uint32_t>(kept.size()));
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::uint32_t>& keep) {
  const std::uint32_t n = rho.num_factors();
  const std::uint32_t d = rho.local_dim();
  const auto kept = checked_subset(keep, n, "partial_trace");
  const auto rest = complement_of(kept, n);
  const auto stride = factor_strides(d, n);
  const auto keep_off = subset_offsets(stride, kept, d);
  const auto rest_off = subset_offsets(stride, rest, d);
  const std::size_t dk = keep_off.size();

  Matrix out = Matrix::Zero(dk, dk);
  for (std::size_t i = 0; i < dk; ++i)
    for (std::size_t j = 0; j < dk; ++j) {
      Complex acc = 0;
      for (std::size_t e : rest_off) acc += rho.matrix()(keep_off[i] + e, keep_off[j] + e);
      out(i, j) = acc;
    }
  return DensityMatrix(std::move(out), d, static_cast<std::uint32_t>(kept.size()));
}

SchmidtData schmidt(const PureState& psi, const std::vector<std::uint32_t>& cut) {
  const std::uint32_t n = psi.num_factors();
  const std::uint32_t d = psi.local_dim();
  const auto rows = checked_subset(cut, n, "schmidt");
  if (rows.size() >= n) throw std::invalid_argument("schmidt: cut must be a proper subset of the factors");
  const auto cols = complement_of(rows, n);
  const auto stride = factor_strides(d, n);
  const auto row_off = subset_offsets(stride, rows, d);
  const auto col_off = subset_offsets(stride, cols, d);

  Matrix m(row_off.size(), col_off.size());
  for (std::size_t i = 0; i < row_off.size(); ++i)
    for (std::size_t j = 0; j < col_off.size(); ++j) m(i, j) = psi.amplitudes()[row_off[i] + col_off[j]];

  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  SchmidtData out;
  out.cut = rows;
  out.coefficients.resize(sv.size());
  double sum = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    out.coefficients[i] = sv[i] * sv[i];
    sum += out.coefficients[i];
  }
  if (std::abs(sum - 1.0) > 1e-10) throw verification_error("schmidt: coefficients do not sum to 1");
  return out;
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("trace_distance: dimension mismatch");
  Matrix diff = a.matrix() - b.matrix();
  diff = (diff + diff.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
  const double dist = 0.5 * es.eigenvalues().cwiseAbs().sum();
  return std::clamp(dist, 0.0, 1.0);
}

double purity(const DensityMatrix& rho) {
  // Tr[rho^2] = ||rho||_F^2 for Hermitian rho
  return rho.matrix().squaredNorm();
}

std::vector<CutLambda> top_schmidt_by_cut(const PureState& psi) {
  const std::uint32_t n = psi.num_factors();
  if (n < 2) throw std::invalid_argument("top_schmidt_by_cut: at least two factors required");
  if (n > kMaxCutFactors) throw limit_error("top_schmidt_by_cut: too many factors for cut enumeration");

  std::vector<CutLambda> out;
  // cuts containing factor 0 enumerate all bipartitions once
  const std::uint32_t full = (1u << n) - 1;
  for (std::uint32_t mask = 1; mask < full; mask += 2) {
    std::vector<std::uint32_t> cut;
    for (std::uint32_t f = 0; f < n; ++f)
      if (mask & (1u << f)) cut.push_back(f);
    const auto rest = complement_of(cut, n);
    const double lambda1 = top_schmidt_coefficient(psi, cut, rest);
    out.push_back(CutLambda{std::move(cut), lambda1});
  }
  return out;
}

CutDistance distance_to_bp(const PureState& psi) {
  const auto lambdas = top_schmidt_by_cut(psi);
  const CutLambda* best = &lambdas.front();
  for (const auto& cl : lambdas)
    if (cl.lambda1 > best->lambda1) best = &cl;
  return CutDistance{std::sqrt(std::max(0.0, 1.0 - best->lambda1)), best->cut};
}

ProductDistance alternating_product_distance(const PureState& psi, int restarts, int iters,
                                             RandomStream& rng) {
  const std::uint32_t n = psi.num_factors();
  const std::uint32_t d = psi.local_dim();
  if (n < 2) throw std::invalid_argument("alternating_product_distance: at least two factors required");
  if (restarts < 1 || iters < 1)
    throw std::invalid_argument("alternating_product_distance: restarts and iters must be positive");
  const std::size_t dim = psi.dim();
  const auto stride = factor_strides(d, n);
  const Vector& amp = psi.amplitudes();

  // contraction of psi against the conjugated factors, skipping one site
  const auto contract = [&](const std::vector<Vector>& factors, std::uint32_t skip) {
    Vector v = Vector::Zero(d);
    for (std::size_t idx = 0; idx < dim; ++idx) {
      Complex w = amp[idx];
      std::uint32_t skip_digit = 0;
      for (std::uint32_t f = 0; f < n; ++f) {
        const std::uint32_t digit = static_cast<std::uint32_t>((idx / stride[f]) % d);
        if (f == skip)
          skip_digit = digit;
        else
          w *= std::conj(factors[f][digit]);
      }
      v[skip_digit] += w;
    }
    return v;
  };

  double best_overlap = 0.0;
  bool best_converged = false;
  for (int r = 0; r < restarts; ++r) {
    std::vector<Vector> factors(n);
    if (r == 0) {
      // seed from the single-site marginals' principal eigenvectors
      for (std::uint32_t f = 0; f < n; ++f) {
        DensityMatrix marg = partial_trace(psi, {f});
        Eigen::SelfAdjointEigenSolver<Matrix> es(marg.matrix());
        Eigen::Index top;
        es.eigenvalues().maxCoeff(&top);
        factors[f] = es.eigenvectors().col(top);
      }
    } else {
      for (std::uint32_t f = 0; f < n; ++f) factors[f] = haar_state(d, rng).amplitudes();
    }

    double prev = -1.0;
    double overlap = 0.0;
    bool converged = false;
    for (int it = 0; it < iters; ++it) {
      double last_norm2 = 0.0;
      for (std::uint32_t f = 0; f < n; ++f) {
        Vector v = contract(factors, f);
        const double nv = v.norm();
        if (nv < 1e-150) {
          factors[f] = Vector::Zero(d);
          factors[f][0] = 1.0;
          last_norm2 = 0.0;
          continue;
        }
        factors[f] = v / nv;
        last_norm2 = nv * nv;
      }
      overlap = last_norm2;
      if (prev >= 0.0 && overlap - prev <= kMpOverlapTol) {
        converged = true;
        break;
      }
      prev = overlap;
    }
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best_converged = converged;
    }
  }
  return ProductDistance{std::sqrt(std::max(0.0, 1.0 - best_overlap)), best_overlap, best_converged};
}

ProductDistance distance_to_mp(const PureState& psi, int restarts, int iters) {
  const std::uint32_t n = psi.num_factors();
  if (n < 2) throw std::invalid_argument("distance_to_mp: at least two factors required");
  RandomStream rng(0x70726f647465ull);
  if (n == 2) {
    const std::vector<std::uint32_t> cut{0};
    const double lambda1 = top_schmidt_coefficient(psi, cut, {1});
    const double exact = std::sqrt(std::max(0.0, 1.0 - lambda1));
    ProductDistance iter = alternating_product_distance(psi, restarts, iters, rng);
    const bool agree = std::abs(iter.value - exact) <= 1e-8;
    return ProductDistance{exact, lambda1, agree && iter.converged};
  }
  return alternating_product_distance(psi, restarts, iters, rng);
}

std::string state_to_json(const PureState& psi) {
  nlohmann::json amps = nlohmann::json::array();
  for (Eigen::Index i = 0; i < psi.amplitudes().size(); ++i)
    amps.push_back({psi.amplitudes()[i].real(), psi.amplitudes()[i].imag()});
  nlohmann::json j{{"amplitudes", std::move(amps)},
                   {"local_dim", psi.local_dim()},
                   {"num_factors", psi.num_factors()}};
  return j.dump();
}

PureState state_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const auto& amps = j.at("amplitudes");
  Vector v(amps.size());
  for (std::size_t i = 0; i < amps.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = Complex(amps[i].at(0).get<double>(), amps[i].at(1).get<double>());
  return PureState(std::move(v), j.at("local_dim").get<std::uint32_t>(),
                   j.at("num_factors").get<std::uint32_t>());
}

}  // namespace prodtest::qcore
