/*
 * reflow: Monte Carlo engine for stochastic flows with normal reflection at
 * the boundary of the half-space R^{d-1} x [0, inf) or the unit disk.
 *
 * C interface. All objects are opaque handles created and destroyed through
 * this API. Every fallible function returns a reflow_status; on failure a
 * message is available from reflow_last_error() on the calling thread.
 * Matrices are row-major d x d arrays of double.
 */
#ifndef REFLOW_REFLOW_H
#define REFLOW_REFLOW_H

#include <stddef.h>
#include <stdint.h>

#if defined _WIN32 || defined __CYGWIN__
#ifdef REFLOW_BUILDING_LIBRARY
#define REFLOW_API __declspec(dllexport)
#else
#define REFLOW_API __declspec(dllimport)
#endif
#else
#define REFLOW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum reflow_status {
  REFLOW_OK = 0,
  REFLOW_ERR_INVALID_ARGUMENT = 1,
  REFLOW_ERR_OUT_OF_RANGE = 2,
  REFLOW_ERR_DOMAIN = 3,
  REFLOW_ERR_CONFIG = 4,
  REFLOW_ERR_IO = 5,
  REFLOW_ERR_INTERNAL = 6
} reflow_status;

typedef enum reflow_domain_kind { REFLOW_HALF_SPACE = 0, REFLOW_UNIT_DISK = 1 } reflow_domain_kind;

typedef struct reflow_domain {
  reflow_domain_kind kind;
  size_t dim; /* ignored for the disk (always 2) */
} reflow_domain;

/* Sentinel for "never hit the boundary". */
#define REFLOW_NEVER ((int64_t)-1)

typedef struct reflow_noise reflow_noise;
typedef struct reflow_coeffs reflow_coeffs;
typedef struct reflow_flow reflow_flow;
typedef struct reflow_derivative reflow_derivative;

REFLOW_API const char* reflow_version(void);
/* Message of the last failed call on this thread; "" if none. */
REFLOW_API const char* reflow_last_error(void);
/* Frees strings returned through char** out-parameters. */
REFLOW_API void reflow_string_free(char* s);

/* ---- core ---------------------------------------------------------------- */

REFLOW_API reflow_status reflow_domain_contains(reflow_domain domain, const double* x, size_t dim, int* inside);

REFLOW_API reflow_status reflow_noise_create(uint64_t seed, size_t m, double t_end, size_t n_steps,
                                             reflow_noise** out);
REFLOW_API void reflow_noise_destroy(reflow_noise* noise);
/* Copies the n_steps increments of driving process k (0-based). */
REFLOW_API reflow_status reflow_noise_increments(const reflow_noise* noise, size_t k, double* out, size_t len);

/* Presets: "frozen", "bm", "linear-drift", "example2". `params_json` may be
 * NULL or a JSON object with the preset's extra fields ("m" for frozen,
 * "drift_matrix"/"diffusion_matrix" for linear-drift). */
REFLOW_API reflow_status reflow_coeffs_preset(const char* name, size_t dim, const char* params_json,
                                              reflow_coeffs** out);
/* Inline polynomial field: {"drift": [...], "diffusion": [[...], ...]} with
 * terms {"exponents": [...], "value": v}. */
REFLOW_API reflow_status reflow_coeffs_inline(size_t dim, const char* json, reflow_coeffs** out);
REFLOW_API void reflow_coeffs_destroy(reflow_coeffs* coeffs);
REFLOW_API size_t reflow_coeffs_m(const reflow_coeffs* coeffs);

/* ---- skorokhod ----------------------------------------------------------- */

/* phi and xi must hold n values; w[0] must be 0. */
REFLOW_API reflow_status reflow_skorokhod_map_1d(double x0, const double* w, size_t n, double* phi, double* xi);
REFLOW_API reflow_status reflow_reflect_step(reflow_domain domain, const double* z, size_t dim, double* position,
                                             double* xi_increment, int* reflected);

/* ---- flow ---------------------------------------------------------------- */

typedef struct reflow_flow_options {
  size_t threads;       /* 0 or 1: sequential */
  size_t record_stride; /* 0 or 1: every step */
} reflow_flow_options;

/* points: n_points x dim row-major. options may be NULL. */
REFLOW_API reflow_status reflow_flow_simulate(reflow_domain domain, const reflow_coeffs* coeffs, const double* points,
                                              size_t n_points, const reflow_noise* noise,
                                              const reflow_flow_options* options, reflow_flow** out);
REFLOW_API void reflow_flow_destroy(reflow_flow* flow);
REFLOW_API size_t reflow_flow_num_particles(const reflow_flow* flow);
REFLOW_API size_t reflow_flow_num_steps(const reflow_flow* flow);
REFLOW_API size_t reflow_flow_dim(const reflow_flow* flow);
REFLOW_API reflow_status reflow_flow_position(const reflow_flow* flow, size_t step, size_t particle, double* out);
REFLOW_API reflow_status reflow_flow_local_time(const reflow_flow* flow, size_t step, size_t particle, double* out);
REFLOW_API reflow_status reflow_flow_reflected(const reflow_flow* flow, size_t step, size_t particle, int* out);
/* taus: one entry per particle, REFLOW_NEVER if never hit. */
REFLOW_API reflow_status reflow_flow_hitting_times(const reflow_flow* flow, int64_t* taus, size_t len);
/* labels: 0 interior, 1 boundary. */
REFLOW_API reflow_status reflow_flow_classify(const reflow_flow* flow, size_t step, int* labels, size_t len);

typedef struct reflow_merge_pair {
  size_t first;
  size_t second;
  size_t merge_step;
  int persistent;
} reflow_merge_pair;

/* Writes up to `capacity` pairs; *count receives the total number found. */
REFLOW_API reflow_status reflow_flow_coalescence(const reflow_flow* flow, double merge_tol, reflow_merge_pair* pairs,
                                                 size_t capacity, size_t* count);

/* ---- derivative ---------------------------------------------------------- */

REFLOW_API reflow_status reflow_derivative_compute(const reflow_flow* flow, const reflow_coeffs* coeffs,
                                                   size_t particle, reflow_derivative** out);
REFLOW_API void reflow_derivative_destroy(reflow_derivative* track);
REFLOW_API reflow_status reflow_derivative_matrix(const reflow_derivative* track, size_t step, double* out);
REFLOW_API reflow_status reflow_derivative_jump_times(const reflow_derivative* track, size_t* steps, size_t capacity,
                                                      size_t* count);
REFLOW_API reflow_status reflow_linear_flow_u(const reflow_flow* flow, const reflow_coeffs* coeffs, size_t particle,
                                              size_t s_step, size_t t_step, double* out);
REFLOW_API reflow_status reflow_fd_jacobian(reflow_domain domain, const reflow_coeffs* coeffs, const double* x,
                                            size_t dim, const reflow_noise* noise, double h, double* out);

typedef struct reflow_interval {
  size_t begin; /* inclusive */
  size_t end;   /* inclusive */
} reflow_interval;

REFLOW_API reflow_status reflow_excursions(const reflow_flow* flow, size_t particle, reflow_interval* intervals,
                                           size_t capacity, size_t* count);
REFLOW_API reflow_status reflow_rank_condition(const double* u, const double* projection_left,
                                               const double* projection_right, size_t dim, double tol, size_t* rank,
                                               int* satisfied);
REFLOW_API reflow_status reflow_corollary_minor(const double* u, size_t dim, double tol, double* det_minor,
                                                int* nondegenerate);
REFLOW_API reflow_status reflow_example2_check(const reflow_coeffs* coeffs, const double* x, const double* y,
                                               double tol, int* independent);

/* ---- transport ----------------------------------------------------------- */

/* parts[j]: 0 absolutely continuous part, 1 singular part. */
REFLOW_API reflow_status reflow_pushforward_decompose(const reflow_flow* flow, const double* weights, size_t len,
                                                      size_t step, int* parts, double* ac_mass,
                                                      double* singular_mass);
/* cells: bins^dim values, first axis slowest. */
REFLOW_API reflow_status reflow_density_histogram(const double* points, const double* weights, size_t n, size_t dim,
                                                  const double* lower, const double* upper, size_t bins,
                                                  double* cells, double* out_of_box_mass);
REFLOW_API reflow_status reflow_singular_support_distance(const double* singular, size_t n_singular,
                                                          const double* cloud, size_t n_cloud, size_t dim,
                                                          double* distance);
REFLOW_API reflow_status reflow_hausdorff_boxcount(const double* points, size_t n, size_t dim,
                                                   const double* epsilons, size_t n_eps, double radius,
                                                   size_t* counts, double* estimates);

/* ---- experiments --------------------------------------------------------- */

typedef struct reflow_run_options {
  const char* output_dir; /* NULL: use the config's output_dir */
  int has_seed;
  uint64_t seed;          /* used when has_seed != 0 */
  size_t threads;         /* 0 or 1: sequential */
} reflow_run_options;

/* Runs an experiment described by a JSON config and returns the manifest
 * (JSON text) through *manifest_json; free it with reflow_string_free. */
REFLOW_API reflow_status reflow_run_experiment(const char* config_json, const reflow_run_options* options,
                                               char** manifest_json);
REFLOW_API reflow_status reflow_validate_config(const char* config_json);
REFLOW_API reflow_status reflow_presets(char** listing_json);

#ifdef __cplusplus
}
#endif

#endif /* REFLOW_REFLOW_H */
