/*
 * C interface to the prodtest library: entanglement-structure analysis of
 * multi-qudit pure states, single-copy measurement protocol simulation, and
 * the reproducible experiment driver.
 *
 * All objects are opaque handles owned by the library. Functions return
 * PT_OK on success; on failure they return an error code and leave output
 * parameters untouched, with a human-readable message available from
 * pt_last_error() (thread-local).
 */
#ifndef PRODTEST_H
#define PRODTEST_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PT_API __declspec(dllexport)
#else
#define PT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pt_status {
  PT_OK = 0,
  PT_ERR_INVALID_ARGUMENT = 1, /* bad input or precondition violation */
  PT_ERR_LIMIT = 2,            /* documented size cap exceeded */
  PT_ERR_VERIFICATION = 3,     /* a checked construction failed its check */
  PT_ERR_INTERNAL = 4
} pt_status;

typedef struct pt_rng pt_rng;
typedef struct pt_state pt_state;

/* library version string, static storage */
PT_API const char* pt_version(void);

/* message for the most recent failure on this thread, static storage */
PT_API const char* pt_last_error(void);

/* ---- random streams ---- */

PT_API pt_rng* pt_rng_new(uint64_t seed);
PT_API void pt_rng_free(pt_rng* rng);

/* ---- pure states ---- */

/* Haar random state on (C^local_dim)^(x)num_factors */
PT_API pt_status pt_state_haar(uint32_t local_dim, uint32_t num_factors, pt_rng* rng,
                               pt_state** out);

/* tensor product of num_factors independent local Haar states */
PT_API pt_status pt_state_product_haar(uint32_t local_dim, uint32_t num_factors, pt_rng* rng,
                                       pt_state** out);

/* state at verified trace distance eps from the fully product set;
 * eps in (0, 1/sqrt(2)], num_factors >= 2 */
PT_API pt_status pt_state_far_from_product(uint32_t local_dim, uint32_t num_factors, double eps,
                                           pt_rng* rng, pt_state** out, double* eps_measured);

/* amplitudes interleaved as re,im pairs; count = local_dim^num_factors */
PT_API pt_status pt_state_from_amplitudes(const double* interleaved, size_t count,
                                          uint32_t local_dim, uint32_t num_factors, pt_state** out);

PT_API void pt_state_free(pt_state* state);

PT_API pt_status pt_state_dim(const pt_state* state, size_t* out);

/* copies 2*dim doubles (re,im interleaved); capacity is in doubles */
PT_API pt_status pt_state_amplitudes(const pt_state* state, double* interleaved, size_t capacity);

/* ---- analysis ---- */

/* trace distance to the fully product states */
PT_API pt_status pt_state_distance_to_product(const pt_state* state, double* out);

/* trace distance to the states product across at least one cut */
PT_API pt_status pt_state_distance_to_cut_product(const pt_state* state, double* out);

/* Tr[rho_site^2] of the reduced state on one factor */
PT_API pt_status pt_state_marginal_purity(const pt_state* state, uint32_t site, double* out);

/* 2^-n sum over factor subsets of the marginal purities */
PT_API pt_status pt_state_product_test_probability(const pt_state* state, double* out);

/* squared Schmidt coefficients across cut:complement, descending; returns
 * the number written through *written */
PT_API pt_status pt_state_schmidt(const pt_state* state, const uint32_t* cut, size_t cut_len,
                                  double* coefficients, size_t capacity, size_t* written);

/* ---- numerics ---- */

/* permanent of a complex side x side matrix, row-major re,im interleaved */
PT_API pt_status pt_permanent(const double* interleaved, size_t side, double* out_re,
                              double* out_im);

/* ---- experiment driver ---- */

/*
 * Runs one driver command described by a JSON config:
 *   {"command": "verify" | "mp-test" | "distinguish" | "far-fraction" | "purity",
 *    "n":, "d":, "T":, "eps":, "delta":, "trials":, "seed":,
 *    "format": "json"|"csv", "threads":, "timing":, "pair":, "state":}
 * The rendered report is returned through *output (free with
 * pt_buffer_free) and the process exit code through *exit_code
 * (0 ok, 1 bound/acceptance failure, 2 usage error).
 */
PT_API pt_status pt_run(const char* config_json, char** output, int* exit_code);

PT_API void pt_buffer_free(char* buffer);

#ifdef __cplusplus
}
#endif

#endif /* PRODTEST_H */
