/* lpvbat: SOC-scheduled battery model identification from sampled
 * current/voltage data. C interface to the shared library: opaque handles,
 * integer status codes, thread-local error messages. */
#ifndef LPVBAT_H
#define LPVBAT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LPVBAT_API __declspec(dllexport)
#else
#define LPVBAT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lpvbat_status {
  LPVBAT_OK = 0,
  LPVBAT_ERR_ARGUMENT = 1, /* invalid arguments or preconditions */
  LPVBAT_ERR_PARSE = 2,    /* file schema / config errors */
  LPVBAT_ERR_IO = 3,       /* filesystem errors */
  LPVBAT_ERR_NUMERIC = 4,  /* numerical failures */
  LPVBAT_ERR_INTERNAL = 5
} lpvbat_status;

/* Message describing the most recent failure on this thread. */
LPVBAT_API const char* lpvbat_last_error(void);
LPVBAT_API const char* lpvbat_version(void);

LPVBAT_API void lpvbat_string_free(char* s);
LPVBAT_API void lpvbat_buffer_free(double* p);

/* ------------------------------------------------------------------ */
/* Ground-truth cell descriptions (simulator)                          */

typedef struct lpvbat_truth lpvbat_truth;

/* Built-in synthetic cell with SOC-varying parameters. */
LPVBAT_API lpvbat_status lpvbat_truth_default(double capacity_ah,
                                              lpvbat_truth** out);
LPVBAT_API lpvbat_status lpvbat_truth_constant(double r0, double r1,
                                               double tau1, double voc,
                                               double capacity_ah,
                                               lpvbat_truth** out);
/* out4 = { r0, r1, tau1, voc } at the given SOC. */
LPVBAT_API lpvbat_status lpvbat_truth_eval(const lpvbat_truth* t, double z,
                                           double out4[4]);
LPVBAT_API lpvbat_status lpvbat_truth_capacity(const lpvbat_truth* t,
                                               double* out);
/* Writes header z,r0,r1,tau1,voc over a uniform n-point grid. */
LPVBAT_API lpvbat_status lpvbat_truth_write_csv(const lpvbat_truth* t,
                                                double z_lo, double z_hi,
                                                int n_points,
                                                const char* path);
LPVBAT_API void lpvbat_truth_free(lpvbat_truth* t);

/* ------------------------------------------------------------------ */
/* Current profiles                                                    */

typedef struct lpvbat_profile lpvbat_profile;

LPVBAT_API lpvbat_status lpvbat_profile_dst(double duration_s, double scale,
                                            lpvbat_profile** out);
LPVBAT_API lpvbat_status lpvbat_profile_constant(double duration_s,
                                                 double amps,
                                                 lpvbat_profile** out);
LPVBAT_API lpvbat_status lpvbat_profile_prbs(double duration_s,
                                             double amplitude,
                                             double base_step_s,
                                             uint64_t seed,
                                             lpvbat_profile** out);
LPVBAT_API lpvbat_status lpvbat_profile_duration(const lpvbat_profile* p,
                                                 double* out);
/* Net charge of one unscaled 360 s cycle of the built-in drive pattern,
 * in Ampere-seconds (negative). */
LPVBAT_API double lpvbat_dst_cycle_charge_as(void);
LPVBAT_API void lpvbat_profile_free(lpvbat_profile* p);

/* ------------------------------------------------------------------ */
/* Datasets                                                            */

typedef struct lpvbat_dataset lpvbat_dataset;

typedef enum lpvbat_column {
  LPVBAT_COL_TIME = 0,
  LPVBAT_COL_CURRENT = 1,
  LPVBAT_COL_VOLTAGE = 2,
  LPVBAT_COL_SOC = 3,
  LPVBAT_COL_SOC_TRUE = 4
} lpvbat_column;

typedef struct lpvbat_csv_options {
  /* NULL keeps the canonical name (t, i_b, v_b, z, z_true). */
  const char* time_column;
  const char* current_column;
  const char* voltage_column;
  const char* soc_column;
  const char* soc_true_column;
  int discharge_positive; /* negate current on ingest */
} lpvbat_csv_options;

LPVBAT_API lpvbat_status lpvbat_simulate(const lpvbat_truth* truth,
                                         const lpvbat_profile* profile,
                                         double z0, double dt,
                                         double noise_std, uint64_t seed,
                                         lpvbat_dataset** out);
LPVBAT_API lpvbat_status lpvbat_dataset_read_csv(const char* path,
                                                 const lpvbat_csv_options* options,
                                                 lpvbat_dataset** out);
LPVBAT_API lpvbat_status lpvbat_dataset_write_csv(const lpvbat_dataset* ds,
                                                  const char* path);
LPVBAT_API lpvbat_status lpvbat_dataset_size(const lpvbat_dataset* ds,
                                             size_t* out);
LPVBAT_API lpvbat_status lpvbat_dataset_dt(const lpvbat_dataset* ds,
                                           double* out);
/* Borrowed pointer, valid while the dataset lives. Absent optional columns
 * yield LPVBAT_ERR_ARGUMENT. */
LPVBAT_API lpvbat_status lpvbat_dataset_column(const lpvbat_dataset* ds,
                                               lpvbat_column which,
                                               const double** data,
                                               size_t* len);
/* Coulomb-counts the SOC series from the recorded current. */
LPVBAT_API lpvbat_status lpvbat_dataset_fill_soc(lpvbat_dataset* ds, double z0,
                                                 double capacity_ah);
LPVBAT_API void lpvbat_dataset_free(lpvbat_dataset* ds);

/* ------------------------------------------------------------------ */
/* Identification                                                      */

typedef struct lpvbat_model lpvbat_model;
typedef struct lpvbat_result lpvbat_result;

typedef struct lpvbat_config {
  int n_segments;        /* spline segments over the SOC range */
  double nu;             /* filter cutoff, rad/s */
  double lambda1, lambda2, lambda3, lambda4;
  double perturb_sigma;  /* scheduling perturbation std */
  uint64_t seed;
  long warmup_override;  /* rows discarded up front; < 0 = automatic */
  int perturb_all_blocks;
  double z0;             /* initial SOC when the data has no SOC column */
  double capacity_ah;
  double basis_z_min;    /* NaN = observed data range */
  double basis_z_max;
  double solver_tol;
  long solver_max_iter;
} lpvbat_config;

LPVBAT_API void lpvbat_config_default(lpvbat_config* cfg);

LPVBAT_API lpvbat_status lpvbat_identify(const lpvbat_dataset* ds,
                                         const lpvbat_config* cfg,
                                         lpvbat_result** out);
/* New owned model handle. */
LPVBAT_API lpvbat_status lpvbat_result_model(const lpvbat_result* res,
                                             lpvbat_model** out);
/* Identification report (stages, fit metrics) as a JSON string; free with
 * lpvbat_string_free. */
LPVBAT_API lpvbat_status lpvbat_result_report_json(const lpvbat_result* res,
                                                   char** out);
LPVBAT_API void lpvbat_result_free(lpvbat_result* res);

LPVBAT_API lpvbat_status lpvbat_model_save_json(const lpvbat_model* m,
                                                const char* path);
LPVBAT_API lpvbat_status lpvbat_model_load_json(const char* path,
                                                lpvbat_model** out);
/* out4 = { r0, r1, tau1, voc }; *valid = 0 where the inversion is
 * unphysical (tau1 <= 0 or r1 <= 0). */
LPVBAT_API lpvbat_status lpvbat_model_eval(const lpvbat_model* m, double z,
                                           double out4[4], int* valid);
LPVBAT_API lpvbat_status lpvbat_model_domain(const lpvbat_model* m,
                                             double* z_min, double* z_max);
LPVBAT_API lpvbat_status lpvbat_model_meta_json(const lpvbat_model* m,
                                                char** out);
/* Parameter curves over a uniform grid on [z_min+trim, z_max-trim],
 * header z,r0,r1,tau1,voc,valid. */
LPVBAT_API lpvbat_status lpvbat_model_write_curves_csv(const lpvbat_model* m,
                                                       const char* path,
                                                       int n_points,
                                                       double trim);
LPVBAT_API void lpvbat_model_free(lpvbat_model* m);

/* Voltage replay of the model under the dataset's current. Pass NaN for z0
 * or capacity_ah to use the model metadata. The prediction buffer is
 * malloc'd; free with lpvbat_buffer_free. *clamped reports SOC excursions
 * beyond the model's basis domain. */
LPVBAT_API lpvbat_status lpvbat_predict(const lpvbat_model* m,
                                        const lpvbat_dataset* ds, double z0,
                                        double capacity_ah, double** v_pred,
                                        size_t* len, int* clamped);
/* Same replay, written as t,v_b_measured,v_b_predicted,error. */
LPVBAT_API lpvbat_status lpvbat_predict_write_csv(const lpvbat_model* m,
                                                  const lpvbat_dataset* ds,
                                                  double z0,
                                                  double capacity_ah,
                                                  const char* path,
                                                  int* clamped);

/* ------------------------------------------------------------------ */
/* Sliding-window DT baseline                                          */

typedef struct lpvbat_fmrls lpvbat_fmrls;

typedef enum lpvbat_fmrls_column {
  LPVBAT_FMRLS_R0 = 0,
  LPVBAT_FMRLS_R1 = 1,
  LPVBAT_FMRLS_TAU1 = 2,
  LPVBAT_FMRLS_VOC = 3,
  LPVBAT_FMRLS_VALID = 4
} lpvbat_fmrls_column;

LPVBAT_API lpvbat_status lpvbat_fmrls_run(const lpvbat_dataset* ds, int window,
                                          double ridge, lpvbat_fmrls** out);
/* Borrowed pointer; LPVBAT_FMRLS_VALID is 0/1 encoded as double. */
LPVBAT_API lpvbat_status lpvbat_fmrls_column_data(const lpvbat_fmrls* f,
                                                  lpvbat_fmrls_column which,
                                                  const double** data,
                                                  size_t* len);
/* Header t,z,r0,r1,tau1,voc,valid (the dataset must carry a SOC series). */
LPVBAT_API lpvbat_status lpvbat_fmrls_write_csv(const lpvbat_fmrls* f,
                                                const lpvbat_dataset* ds,
                                                const char* path);
/* Voltage replay from estimates binned over a SOC grid. */
LPVBAT_API lpvbat_status lpvbat_fmrls_predict(const lpvbat_fmrls* f,
                                              const lpvbat_dataset* train,
                                              const lpvbat_dataset* test,
                                              double z0, double capacity_ah,
                                              int grid_points,
                                              double** v_pred, size_t* len);
LPVBAT_API void lpvbat_fmrls_free(lpvbat_fmrls* f);

/* ------------------------------------------------------------------ */
/* Metrics and generic tables                                          */

/* variant 0: the library convention (RMSE divides by m+1, VAF normalizes by
 * var(estimate)); variant 1: the usual m / var(reference) forms. */
LPVBAT_API lpvbat_status lpvbat_rmse(const double* y, const double* yhat,
                                     size_t n, int variant, double* out);
LPVBAT_API lpvbat_status lpvbat_vaf(const double* y, const double* yhat,
                                    size_t n, int variant, double* out);

typedef struct lpvbat_table lpvbat_table;

LPVBAT_API lpvbat_status lpvbat_table_read_csv(const char* path,
                                               lpvbat_table** out);
LPVBAT_API lpvbat_status lpvbat_table_rows(const lpvbat_table* t, size_t* out);
/* Borrowed pointer; fails with LPVBAT_ERR_ARGUMENT for unknown names. */
LPVBAT_API lpvbat_status lpvbat_table_column(const lpvbat_table* t,
                                             const char* name,
                                             const double** data, size_t* len);
LPVBAT_API void lpvbat_table_free(lpvbat_table* t);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LPVBAT_H */
