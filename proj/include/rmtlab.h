#ifndef RMTLAB_H
#define RMTLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RMT_API __declspec(dllexport)
#else
#define RMT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rmt_status {
  RMT_OK = 0,
  RMT_ERR_INVALID_ARGUMENT = 1,
  RMT_ERR_INSUFFICIENT_DATA = 2,
  RMT_ERR_PARSE = 3,
  RMT_ERR_NUMERIC = 4,
  RMT_ERR_DEGENERATE = 5,
  RMT_ERR_CALIBRATION = 6,
  RMT_ERR_OUT_OF_RANGE = 7,
  RMT_ERR_NOT_AVAILABLE = 8,
  RMT_ERR_IO = 9,
  RMT_ERR_INTERNAL = 10
} rmt_status;

/* ------------------------------------------------------------ general */

RMT_API const char* rmt_version(void);
RMT_API const char* rmt_status_string(rmt_status s);
/* Message of the last failed call on this thread; "" when none. */
RMT_API const char* rmt_last_error(void);
/* Process exit code for a status: 0 success, 2 usage, 3 data, 4 numeric. */
RMT_API int rmt_exit_code(rmt_status s);
/* 0 restores the default (RMTLAB_THREADS, then hardware concurrency). */
RMT_API void rmt_set_threads(unsigned n);

/* ------------------------------------------------------------ spectra */

typedef struct rmt_spectra rmt_spectra;

RMT_API rmt_status rmt_spectra_create(rmt_spectra** out);
RMT_API void rmt_spectra_free(rmt_spectra* s);
RMT_API rmt_status rmt_spectra_add(rmt_spectra* s, const double* levels, size_t n, const char* label);
RMT_API size_t rmt_spectra_count(const rmt_spectra* s);
RMT_API rmt_status rmt_spectra_get(const rmt_spectra* s, size_t i, const double** levels, size_t* n);
/* Value of a "# key: value" header line of spectrum i, or NULL. */
RMT_API const char* rmt_spectra_meta(const rmt_spectra* s, size_t i, const char* key);
/* Appends the levels of a file (one per line, '#' comments). */
RMT_API rmt_status rmt_spectra_read(rmt_spectra* s, const char* path);
/* header may hold several lines separated by '\n'; each becomes a comment. */
/* Lifts every repeated level above its predecessor by 1e-9 mean spacings
   so that the spectrum is strictly increasing. */
RMT_API rmt_status rmt_spectra_split_degeneracies(rmt_spectra* s);
RMT_API rmt_status rmt_spectra_write(const rmt_spectra* s, size_t i, const char* path, const char* header);

typedef struct rmt_ensemble_spec {
  const char* model; /* poisson, goe, gue, rp, goe2gue */
  int dim;
  double lambda;
  double xi;
  uint64_t seed;
  int realizations;
} rmt_ensemble_spec;

RMT_API void rmt_ensemble_spec_default(rmt_ensemble_spec* spec);
RMT_API rmt_status rmt_ensemble_validate(const rmt_ensemble_spec* spec);
RMT_API rmt_status rmt_generate(const rmt_ensemble_spec* spec, rmt_spectra** out);
/* Matrix of one realization, column-major dim x dim; im is zero-filled
   for real ensembles. */
RMT_API rmt_status rmt_sample_matrix(const rmt_ensemble_spec* spec, uint64_t index, double* re, double* im);

/* Dirichlet circle billiard levels in GHz up to f_max. */
RMT_API rmt_status rmt_circle_levels(double radius_m, double f_max_ghz, rmt_spectra** out);

/* ---------------------------------------------------------- unfolding */

typedef enum rmt_unfold_method {
  RMT_UNFOLD_NONE = 0,
  RMT_UNFOLD_WEYL = 1,
  RMT_UNFOLD_POLY2 = 2,
  RMT_UNFOLD_POLY3 = 3,
  RMT_UNFOLD_ENSEMBLE = 4
} rmt_unfold_method;

typedef struct rmt_unfolded rmt_unfolded;

/* radius_m is read for RMT_UNFOLD_WEYL only. central_fraction in (0, 1]
   trims by index before unfolding (ignored by RMT_UNFOLD_ENSEMBLE, which
   keeps the 0.2 - 0.8 quantiles of the pooled levels). */
RMT_API rmt_status rmt_unfold(const rmt_spectra* s, rmt_unfold_method method, double radius_m,
                              double central_fraction, rmt_unfolded** out);
RMT_API void rmt_unfolded_free(rmt_unfolded* u);
RMT_API size_t rmt_unfolded_count(const rmt_unfolded* u);
RMT_API rmt_status rmt_unfolded_get(const rmt_unfolded* u, size_t i, const double** eps, size_t* n);
RMT_API size_t rmt_unfolded_warning_count(const rmt_unfolded* u);
RMT_API const char* rmt_unfolded_warning(const rmt_unfolded* u, size_t i);

/* ------------------------------------------------------------- curves */

typedef struct rmt_curve rmt_curve;

/* Observables: nnsd, nnsd_cumulative, ratio, ratio_cumulative, sigma2, y2,
   form_factor, power_spectrum. grid may be NULL for the default grid. */
RMT_API rmt_status rmt_observable(const rmt_unfolded* u, const char* name, const double* grid, size_t n,
                                  rmt_curve** out);
/* Length spectrum of raw levels in GHz of a circle billiard of given radius. */
RMT_API rmt_status rmt_length_spectrum(const rmt_spectra* s, size_t i, double radius_m, const double* grid_m,
                                       size_t n, rmt_curve** out);
/* kind: poisson, goe, gue. */
RMT_API rmt_status rmt_reference(const char* kind, const char* name, const double* grid, size_t n, rmt_curve** out);
/* Analytic Rosenzweig-Porter curve: form_factor, y2, sigma2, nnsd,
   nnsd_cumulative. published != 0 selects the published lambda scales;
   windowed != 0 averages over the 0.2 - 0.8 quantile window. */
RMT_API rmt_status rmt_rp_curve(const char* name, double lambda, int published, int windowed, const double* grid,
                                size_t n, rmt_curve** out);
RMT_API rmt_status rmt_mean_ratio(const rmt_spectra* s, double* out);

RMT_API void rmt_curve_free(rmt_curve* c);
RMT_API const char* rmt_curve_name(const rmt_curve* c);
RMT_API size_t rmt_curve_size(const rmt_curve* c);
RMT_API const double* rmt_curve_grid(const rmt_curve* c);
RMT_API const double* rmt_curve_values(const rmt_curve* c);
/* NULL when no standard errors were estimated. */
RMT_API const double* rmt_curve_stderr(const rmt_curve* c);
RMT_API const char* rmt_curve_meta(const rmt_curve* c, const char* key);
RMT_API size_t rmt_curve_warning_count(const rmt_curve* c);
RMT_API const char* rmt_curve_warning(const rmt_curve* c, size_t i);
RMT_API rmt_status rmt_curve_write(const rmt_curve* c, const char* path, const char* header);
RMT_API rmt_status rmt_curve_read(const char* path, rmt_curve** out);
RMT_API rmt_status rmt_curve_slope(const rmt_curve* c, double lo, double hi, double* slope, double* stderr_out);
/* Writes up to cap local maxima beyond min_position; returns the count found. */
RMT_API size_t rmt_curve_peaks(const rmt_curve* c, double min_position, double* positions, size_t cap);

/* --------------------------------------------------------------- fits */

typedef struct rmt_fit rmt_fit;

RMT_API void rmt_fit_free(rmt_fit* f);
RMT_API double rmt_fit_estimate(const rmt_fit* f);
RMT_API double rmt_fit_objective(const rmt_fit* f);
/* "", "<=" or ">=". */
RMT_API const char* rmt_fit_bound(const rmt_fit* f);
/* Every field, including settings and warnings, as a JSON object. */
RMT_API const char* rmt_fit_json(const rmt_fit* f);

RMT_API rmt_status rmt_fit_lambda(const rmt_curve* sigma2, double L_max, int windowed, rmt_fit** out);

/* --------------------------------------------------------- scattering */

typedef struct rmt_scatter_config {
  int dim;
  int fictitious;
  double T_a;
  double T_b;
  double tau_abs;
  int n_freq;
  double window_spacings;
  int realizations;
  uint64_t seed;
  int secular_window; /* points per secular-average window; 0 = whole grid */
  int calibration_realizations;
} rmt_scatter_config;

typedef struct rmt_scatter rmt_scatter;

RMT_API void rmt_scatter_config_default(rmt_scatter_config* cfg);
/* Simulated run: calibrates couplings, then computes every statistic.
   source->seed and source->realizations are overridden by cfg. */
RMT_API rmt_status rmt_scatter_run(const rmt_scatter_config* cfg, const rmt_ensemble_spec* source, rmt_scatter** out);
/* Measured S-matrix CSV; mean_spacing_ghz converts frequency to mean
   spacings. secular_window as in rmt_scatter_config. */
RMT_API rmt_status rmt_scatter_measured(const char* path, double mean_spacing_ghz, int secular_window,
                                        rmt_scatter** out);
RMT_API void rmt_scatter_free(rmt_scatter* s);
/* Keys: T_a, T_b, c_cross, c_cross_stderr, delta, rayleigh_sup. */
RMT_API rmt_status rmt_scatter_value(const rmt_scatter* s, const char* key, double* out);
/* Keys: c_ab, c_ab_normalized, amplitude. */
RMT_API rmt_status rmt_scatter_curve(const rmt_scatter* s, const char* key, rmt_curve** out);
RMT_API size_t rmt_scatter_series_count(const rmt_scatter* s);
/* Frequency column in mean spacings (simulated) or GHz (measured). */
RMT_API rmt_status rmt_scatter_write_series(const rmt_scatter* s, size_t i, const char* path);
RMT_API const char* rmt_scatter_json(const rmt_scatter* s);

/* Single-frequency diagnostics of one realization with explicit
   couplings v[0..channels): max |S_ab - S_ba| over all channel pairs,
   and max |S^H S - 1| of the full S-matrix, both via the dense solve.
   f and v are in the matrix's own energy units (no window rescaling). */
RMT_API rmt_status rmt_smatrix_check(const rmt_ensemble_spec* source, uint64_t index, const double* v,
                                     size_t channels, double f, double* reciprocity, double* unitarity);

typedef struct rmt_xi_table rmt_xi_table;

RMT_API rmt_status rmt_xi_table_build(const rmt_scatter_config* cfg, const double* xi_grid, size_t n,
                                      rmt_xi_table** out);
RMT_API rmt_status rmt_xi_table_save(const rmt_xi_table* t, const char* path);
RMT_API rmt_status rmt_xi_table_load(const char* path, rmt_xi_table** out);
RMT_API void rmt_xi_table_free(rmt_xi_table* t);
RMT_API const char* rmt_xi_table_json(const rmt_xi_table* t);
/* tables may be NULL when n_tables is 0; c_cross = 1 then still maps to 0. */
RMT_API rmt_status rmt_fit_xi(double c_cross, double T_a, double T_b, double tau_abs,
                              const rmt_xi_table* const* tables, size_t n_tables, rmt_fit** out);

typedef struct rmt_tau_table rmt_tau_table;

/* tau_grid NULL selects 0.25, 0.5, ..., 6; cfg->tau_abs is ignored. */
RMT_API rmt_status rmt_tau_table_build(const rmt_scatter_config* cfg, const rmt_ensemble_spec* source,
                                       const double* tau_grid, size_t n, rmt_tau_table** out);
RMT_API rmt_status rmt_tau_table_save(const rmt_tau_table* t, const char* path);
RMT_API rmt_status rmt_tau_table_load(const char* path, rmt_tau_table** out);
RMT_API void rmt_tau_table_free(rmt_tau_table* t);
RMT_API rmt_status rmt_fit_tau(const rmt_curve* normalized, const rmt_tau_table* t, rmt_fit** out);

/* ----------------------------------------------------------- manifest */

typedef struct rmt_manifest rmt_manifest;

RMT_API rmt_status rmt_manifest_create(const char* command_line, rmt_manifest** out);
RMT_API void rmt_manifest_free(rmt_manifest* m);
/* value is parsed as JSON. */
RMT_API rmt_status rmt_manifest_set_json(rmt_manifest* m, const char* key, const char* json);
RMT_API rmt_status rmt_manifest_set_string(rmt_manifest* m, const char* key, const char* value);
RMT_API rmt_status rmt_manifest_set_number(rmt_manifest* m, const char* key, double value);
RMT_API rmt_status rmt_manifest_add_input(rmt_manifest* m, const char* path);
RMT_API rmt_status rmt_manifest_add_output(rmt_manifest* m, const char* path);
RMT_API rmt_status rmt_manifest_write(rmt_manifest* m, const char* path);

#ifdef __cplusplus
}
#endif

#endif
