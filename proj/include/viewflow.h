/*
 * viewflow — C API for reconstructing short-term view-count diffusion
 * from repeatedly collected cumulative impression counts.
 *
 * All functions returning vf_status report failure details through
 * vf_last_error_message() (thread-local). Handles are opaque and must be
 * released with their matching *_free function; strings returned through
 * char** out-parameters are released with vf_string_free().
 */

#ifndef VIEWFLOW_H
#define VIEWFLOW_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vf_status {
  VF_OK = 0,
  VF_ERROR_INVALID_ARGUMENT = 1,
  VF_ERROR_PARSE = 2,
  VF_ERROR_VALIDATION = 3,
  VF_ERROR_IO = 4,
  VF_ERROR_EMPTY = 5,
  VF_ERROR_SOURCE = 6,
  VF_ERROR_INTERNAL = 7
} vf_status;

typedef enum vf_model_kind { VF_MODEL_SIGMOID = 0, VF_MODEL_LOG = 1 } vf_model_kind;

typedef enum vf_first_interval {
  VF_FIRST_INTERVAL_SPREAD = 0,
  VF_FIRST_INTERVAL_DROP = 1
} vf_first_interval;

typedef enum vf_crossing {
  VF_CROSSING_INTERPOLATE = 0,
  VF_CROSSING_FIRST_OBSERVATION = 1
} vf_crossing;

typedef enum vf_source_kind { VF_SOURCE_MOCK = 0, VF_SOURCE_HTTP = 1 } vf_source_kind;

typedef struct vf_corpus vf_corpus;
typedef struct vf_fit_results vf_fit_results;
typedef struct vf_rate_curve vf_rate_curve;
typedef struct vf_halflife_results vf_halflife_results;

const char* vf_version_string(void);
const char* vf_status_name(vf_status status);
/* Message for the most recent failure on this thread; empty when none. */
const char* vf_last_error_message(void);
void vf_string_free(char* s);

/* ---- corpus (JSONL series records) ---------------------------------- */

/* Parses JSONL series records. Invalid records are rejected per record
 * (listed in report_json when non-NULL), valid records are kept. */
vf_status vf_corpus_parse_jsonl(const char* data, size_t len, vf_corpus** out,
                                char** report_json);
vf_status vf_corpus_load_jsonl(const char* path, vf_corpus** out, char** report_json);
vf_status vf_corpus_emit_jsonl(const vf_corpus* corpus, char** out);
size_t vf_corpus_count(const vf_corpus* corpus);
/* Borrowed pointer, valid while the corpus lives. NULL when out of range. */
const char* vf_corpus_post_id(const vf_corpus* corpus, size_t index);
vf_status vf_corpus_filter_complete(const vf_corpus* corpus, int required_rounds,
                                    vf_corpus** out);
vf_status vf_corpus_summary_json(const vf_corpus* corpus, char** out);
void vf_corpus_free(vf_corpus* corpus);

/* ---- decay models ---------------------------------------------------- */

/* c * (1/(1 + b*exp(-a*x)) - 1/(1+b)); NaN for invalid parameters. */
double vf_eval_sigmoid(double a, double b, double c, double x);
/* b * log(a*x + 1) / log(a + 1); NaN for invalid parameters. */
double vf_eval_log(double a, double b, double x);

typedef struct vf_fit_item {
  const char* post_id; /* borrowed from the results handle */
  vf_model_kind kind;
  double a;
  double b;
  double c;
  double mse; /* on the 10-second evaluation grid */
  int n_grid_points;
  int converged;
} vf_fit_item;

/* Fits both models to every series with in-window final views >
 * min_views and keeps the better fit (grid-MSE; ties resolve to log). */
vf_status vf_classify(const vf_corpus* corpus, double window_seconds,
                      long long min_views, vf_fit_results** out);
size_t vf_fit_results_count(const vf_fit_results* results);
vf_status vf_fit_results_get(const vf_fit_results* results, size_t index,
                             vf_fit_item* out);
vf_status vf_fit_results_json(const vf_fit_results* results, char** out);
vf_status vf_fit_results_csv(const vf_fit_results* results, char** out);
void vf_fit_results_free(vf_fit_results* results);

/* ---- per-second rate curve ------------------------------------------- */

vf_status vf_rate_curve_build(const vf_corpus* corpus, long long max_seconds,
                              vf_first_interval first_interval, vf_rate_curve** out);
size_t vf_rate_curve_length(const vf_rate_curve* curve);
double vf_rate_curve_mass(const vf_rate_curve* curve, size_t second);
size_t vf_rate_curve_post_count(const vf_rate_curve* curve);
/* Argmax of the centered moving average (odd window); ties -> earliest. */
vf_status vf_rate_curve_peak(const vf_rate_curve* curve, int smoothing_window,
                             long long* out_second);
vf_status vf_rate_curve_csv(const vf_rate_curve* curve, char** out);
void vf_rate_curve_free(vf_rate_curve* curve);

/* ---- half-life and growth -------------------------------------------- */

typedef struct vf_halflife_item {
  const char* post_id; /* borrowed from the results handle */
  double half_life_seconds;
  long long reference_views;
  int censored;
} vf_halflife_item;

vf_status vf_halflife_compute(const vf_corpus* corpus, double horizon_seconds,
                              vf_crossing crossing, vf_halflife_results** out);
size_t vf_halflife_count(const vf_halflife_results* results);
vf_status vf_halflife_get(const vf_halflife_results* results, size_t index,
                          vf_halflife_item* out);
vf_status vf_halflife_stats_json(const vf_halflife_results* results, char** out);
vf_status vf_halflife_csv(const vf_halflife_results* results, char** out);
/* 1-minute bins over the uncensored results. */
vf_status vf_halflife_histogram_csv(const vf_halflife_results* results, char** out);
void vf_halflife_free(vf_halflife_results* results);

/* Growth buckets and median growth factor between two ages. */
vf_status vf_growth_json(const vf_corpus* corpus, double t_early, double t_late,
                         char** out);

/* ---- synthetic corpora ------------------------------------------------ */

/* spec_json: JSON array of generator specs. Deterministic given the spec
 * seeds and master_seed. */
vf_status vf_simulate(const char* spec_json, size_t len, unsigned long long master_seed,
                      vf_corpus** out);

/* ---- collection -------------------------------------------------------- */

/* Runs a collection plan, streaming page records (JSONL) to
 * pages_out_path as they are collected. http_base_url is required for
 * VF_SOURCE_HTTP and ignored for the mock source. */
vf_status vf_collect(const char* plan_json, size_t len, vf_source_kind source_kind,
                     const char* http_base_url, const char* pages_out_path,
                     char** report_json);

/* Converts raw page records to series records. created_at_json maps
 * post_id -> creation time (ms); a {"created_at": {...}} wrapper is also
 * accepted. */
vf_status vf_pages_to_series(const char* pages_path, const char* created_at_json,
                             size_t len, vf_corpus** out, char** report_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* VIEWFLOW_H */
