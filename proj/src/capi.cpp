#include "prodtest.h"

#include <cstring>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "prodtest/bounds.hpp"
#include "prodtest/driver.hpp"
#include "prodtest/ensembles.hpp"
#include "prodtest/errors.hpp"
#include "prodtest/permgroup.hpp"
#include "prodtest/qcore.hpp"
#include "prodtest/rng.hpp"

struct pt_rng {
  prodtest::RandomStream stream;
};

struct pt_state {
  prodtest::qcore::PureState state;
};

namespace {

thread_local std::string t_last_error;

template <typename Fn>
pt_status guarded(Fn&& fn) {
  try {
    fn();
    return PT_OK;
  } catch (const prodtest::limit_error& e) {
    t_last_error = e.what();
    return PT_ERR_LIMIT;
  } catch (const std::invalid_argument& e) {
    t_last_error = e.what();
    return PT_ERR_INVALID_ARGUMENT;
  } catch (const nlohmann::json::exception& e) {
    t_last_error = e.what();
    return PT_ERR_INVALID_ARGUMENT;
  } catch (const prodtest::verification_error& e) {
    t_last_error = e.what();
    return PT_ERR_VERIFICATION;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return PT_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return PT_ERR_INTERNAL;
  }
}

pt_status require(bool condition, const char* message) {
  if (condition) return PT_OK;
  t_last_error = message;
  return PT_ERR_INVALID_ARGUMENT;
}

char* copy_to_buffer(const std::string& text) {
  char* buffer = new char[text.size() + 1];
  std::memcpy(buffer, text.c_str(), text.size() + 1);
  return buffer;
}

}  // namespace

extern "C" {

const char* pt_version(void) { return prodtest::driver::version_string(); }

const char* pt_last_error(void) { return t_last_error.c_str(); }

pt_rng* pt_rng_new(uint64_t seed) { return new (std::nothrow) pt_rng{prodtest::RandomStream(seed)}; }

void pt_rng_free(pt_rng* rng) { delete rng; }

pt_status pt_state_haar(uint32_t local_dim, uint32_t num_factors, pt_rng* rng, pt_state** out) {
  if (pt_status s = require(rng && out, "null argument"); s != PT_OK) return s;
  return guarded([&] {
    *out = new pt_state{prodtest::qcore::haar_state(local_dim, num_factors, rng->stream)};
  });
}

pt_status pt_state_product_haar(uint32_t local_dim, uint32_t num_factors, pt_rng* rng,
                                pt_state** out) {
  if (pt_status s = require(rng && out, "null argument"); s != PT_OK) return s;
  return guarded([&] {
    const auto spec =
        prodtest::ensembles::EnsembleSpec::multipartite_product_haar(num_factors, local_dim);
    *out = new pt_state{prodtest::ensembles::sample_pure(spec, rng->stream)};
  });
}

pt_status pt_state_far_from_product(uint32_t local_dim, uint32_t num_factors, double eps,
                                    pt_rng* rng, pt_state** out, double* eps_measured) {
  if (pt_status s = require(rng && out, "null argument"); s != PT_OK) return s;
  return guarded([&] {
    auto cert = prodtest::ensembles::far_state(num_factors, local_dim, eps, rng->stream);
    if (eps_measured) *eps_measured = cert.eps_measured;
    *out = new pt_state{std::move(cert.state)};
  });
}

pt_status pt_state_from_amplitudes(const double* interleaved, size_t count, uint32_t local_dim,
                                   uint32_t num_factors, pt_state** out) {
  if (pt_status s = require(interleaved && out, "null argument"); s != PT_OK) return s;
  return guarded([&] {
    Eigen::VectorXcd v(count);
    for (size_t i = 0; i < count; ++i)
      v[static_cast<Eigen::Index>(i)] = {interleaved[2 * i], interleaved[2 * i + 1]};
    *out = new pt_state{prodtest::qcore::PureState(std::move(v), local_dim, num_factors)};
  });
}

void pt_state_free(pt_state* state) { delete state; }

pt_status pt_state_dim(const pt_state* state, size_t* out) {
  if (pt_status s = require(state && out, "null argument"); s != PT_OK) return s;
  *out = state->state.dim();
  return PT_OK;
}

pt_status pt_state_amplitudes(const pt_state* state, double* interleaved, size_t capacity) {
  if (pt_status s = require(state && interleaved, "null argument"); s != PT_OK) return s;
  const auto& amps = state->state.amplitudes();
  const size_t needed = 2 * static_cast<size_t>(amps.size());
  if (pt_status s = require(capacity >= needed, "buffer too small"); s != PT_OK) return s;
  for (Eigen::Index i = 0; i < amps.size(); ++i) {
    interleaved[2 * i] = amps[i].real();
    interleaved[2 * i + 1] = amps[i].imag();
  }
  return PT_OK;
}

pt_status pt_state_distance_to_product(const pt_state* state, double* out) {
  if (pt_status s = require(state && out, "null argument"); s != PT_OK) return s;
  return guarded([&] { *out = prodtest::qcore::distance_to_mp(state->state).value; });
}

pt_status pt_state_distance_to_cut_product(const pt_state* state, double* out) {
  if (pt_status s = require(state && out, "null argument"); s != PT_OK) return s;
  return guarded([&] { *out = prodtest::qcore::distance_to_bp(state->state).value; });
}

pt_status pt_state_marginal_purity(const pt_state* state, uint32_t site, double* out) {
  if (pt_status s = require(state && out, "null argument"); s != PT_OK) return s;
  return guarded([&] {
    *out = prodtest::qcore::purity(prodtest::qcore::partial_trace(state->state, {site}));
  });
}

pt_status pt_state_product_test_probability(const pt_state* state, double* out) {
  if (pt_status s = require(state && out, "null argument"); s != PT_OK) return s;
  return guarded([&] { *out = prodtest::bounds::p_test(state->state); });
}

pt_status pt_state_schmidt(const pt_state* state, const uint32_t* cut, size_t cut_len,
                           double* coefficients, size_t capacity, size_t* written) {
  if (pt_status s = require(state && cut && coefficients && written, "null argument"); s != PT_OK)
    return s;
  return guarded([&] {
    const std::vector<uint32_t> cut_vec(cut, cut + cut_len);
    const auto data = prodtest::qcore::schmidt(state->state, cut_vec);
    if (capacity < data.coefficients.size())
      throw std::invalid_argument("coefficient buffer too small");
    for (size_t i = 0; i < data.coefficients.size(); ++i) coefficients[i] = data.coefficients[i];
    *written = data.coefficients.size();
  });
}

pt_status pt_permanent(const double* interleaved, size_t side, double* out_re, double* out_im) {
  if (pt_status s = require(interleaved && out_re && out_im, "null argument"); s != PT_OK) return s;
  return guarded([&] {
    Eigen::MatrixXcd m(side, side);
    for (size_t r = 0; r < side; ++r)
      for (size_t c = 0; c < side; ++c) {
        const size_t base = 2 * (r * side + c);
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = {interleaved[base],
                                                                         interleaved[base + 1]};
      }
    const std::complex<double> value = prodtest::permgroup::permanent(m);
    *out_re = value.real();
    *out_im = value.imag();
  });
}

pt_status pt_run(const char* config_json, char** output, int* exit_code) {
  if (pt_status s = require(config_json && output && exit_code, "null argument"); s != PT_OK)
    return s;
  return guarded([&] {
    const nlohmann::json j = nlohmann::json::parse(config_json);
    const prodtest::driver::RunConfig config = prodtest::driver::config_from_json(j);
    const prodtest::driver::RunResult result = prodtest::driver::run(config);
    *output = copy_to_buffer(result.output);
    *exit_code = result.exit_code;
  });
}

void pt_buffer_free(char* buffer) { delete[] buffer; }

}  // extern "C"
