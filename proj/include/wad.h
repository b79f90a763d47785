/* wad — dual-channel web attack detector.
 *
 * C interface over the core library: opaque handles, integer status codes,
 * thread-local error messages. All returned strings are heap-allocated and
 * must be released with wad_string_free().
 */
#ifndef WAD_H
#define WAD_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef WAD_API
#if defined(_WIN32)
#define WAD_API __declspec(dllexport)
#else
#define WAD_API __attribute__((visibility("default")))
#endif
#endif

typedef enum wad_status {
  WAD_OK = 0,
  WAD_ERR_IO = 1,       /* unreadable/unwritable files, corrupt checkpoints */
  WAD_ERR_CONFIG = 2,   /* bad config keys/values, unusable datasets, usage errors */
  WAD_ERR_NUMERIC = 3,  /* non-finite loss or probability contract violations */
  WAD_ERR_PARSE = 4,    /* malformed request input (strict mode) */
  WAD_ERR_INTERNAL = 5
} wad_status;

typedef struct wad_config wad_config;   /* model + training configuration */
typedef struct wad_dataset wad_dataset; /* labeled request corpus */
typedef struct wad_model wad_model;     /* loaded checkpoint */

WAD_API const char* wad_version(void);

/* Message for the most recent failing call on this thread. */
WAD_API const char* wad_last_error(void);

WAD_API void wad_string_free(char* s);

/* ---- configuration ------------------------------------------------- */

WAD_API wad_status wad_config_create(wad_config** out);
WAD_API wad_status wad_config_load(const char* path, wad_config** out);
/* Dotted keys, e.g. "train.lr", "model.embedding_mode". Unknown keys fail
 * with WAD_ERR_CONFIG and name the key in wad_last_error(). */
WAD_API wad_status wad_config_set(wad_config* cfg, const char* key, const char* value);
WAD_API wad_status wad_config_dump(const wad_config* cfg, char** json_out);
WAD_API void wad_config_free(wad_config* cfg);

/* ---- request parsing ------------------------------------------------ */

/* One raw HTTP request -> parsed-request JSON (normalized url + decoded
 * parameter list). */
WAD_API wad_status wad_parse_request(const char* raw, size_t len, char** json_out);

/* Raw-request corpus ("---"-separated) or JSON lines -> parsed JSON lines.
 * out_path NULL writes to stdout. With strict != 0 any malformed record
 * fails the call; otherwise they are skipped and counted. */
WAD_API wad_status wad_parse_file(const char* in_path, const char* out_path, int strict,
                                  long* n_ok, long* n_skipped);

/* ---- datasets -------------------------------------------------------- */

/* Each spec is "path", "path:0", "path:1" (label for raw corpora) or
 * "synthetic:N[:SEED]". Multiple specs merge into one dataset. */
WAD_API wad_status wad_dataset_open(const char* const* specs, int n_specs, wad_dataset** out);
WAD_API wad_status wad_dataset_synthetic(long n, unsigned long long seed, wad_dataset** out);
WAD_API long wad_dataset_size(const wad_dataset* ds);
WAD_API long wad_dataset_label_count(const wad_dataset* ds, int label);
WAD_API void wad_dataset_free(wad_dataset* ds);

/* ---- training --------------------------------------------------------- */

/* Splits 70/30, trains on the schedule in cfg, evaluates, and writes
 * checkpoint/, loss.csv and metrics.json under a run-stamped subdirectory of
 * out_dir. resume_checkpoint may be NULL. run_dir_out (optional) receives the
 * run directory path. */
WAD_API wad_status wad_train(const wad_config* cfg, const wad_dataset* data, const char* out_dir,
                             const char* resume_checkpoint, char** run_dir_out);

WAD_API wad_status wad_model_open(const char* checkpoint_dir, wad_model** out);
WAD_API void wad_model_free(wad_model* m);

WAD_API wad_status wad_evaluate(const wad_model* m, const wad_dataset* data, int threads,
                                char** metrics_json_out);

/* ---- inference -------------------------------------------------------- */

/* One raw request -> {"label","p_malicious","url"} JSON. */
WAD_API wad_status wad_detect(const wad_model* m, const char* raw_request, size_t len,
                              char** json_out);

/* Per-request detection JSON lines; out_path NULL writes to stdout. */
WAD_API wad_status wad_detect_file(const wad_model* m, const char* in_path, const char* out_path);

/* Per-request traceability reports: request_NNN_heatmap.csv and
 * request_NNN_trace.json under out_dir. */
WAD_API wad_status wad_explain_file(const wad_model* m, const char* in_path, const char* out_dir);

/* ---- ablations --------------------------------------------------------- */

/* suite: "embedding" | "channel" | "payload_order". Trains every variant
 * under the same seed/budget, writes <suite>.csv under out_dir, and returns
 * the table when csv_out is non-NULL. */
WAD_API wad_status wad_ablate(const char* suite, const wad_config* cfg, const wad_dataset* data,
                              const char* out_dir, char** csv_out);

#ifdef __cplusplus
}
#endif

#endif /* WAD_H */
