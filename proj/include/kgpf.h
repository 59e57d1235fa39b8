/* kgpf: multi-hop knowledge-graph link prediction via guided graph search.
 *
 * C interface to the shared library. All functions return kgpf_status
 * (KGPF_OK on success); on failure kgpf_last_error() describes the problem
 * for the calling thread. Strings returned through out-parameters are owned
 * by the caller and released with kgpf_string_free().
 *
 * Stage inputs come as resolved-config JSON (see kgpf_config_resolve), so a
 * CLI or another host language only assembles key/value overrides.
 */
#ifndef KGPF_H
#define KGPF_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kgpf_status {
  KGPF_OK = 0,
  KGPF_ERR_INVALID_ARGUMENT = 1,
  KGPF_ERR_IO = 2,
  KGPF_ERR_CONFIG = 3,
  KGPF_ERR_RUNTIME = 4
} kgpf_status;

/* Thread-local message for the most recent failure in this thread. */
const char* kgpf_last_error(void);

void kgpf_string_free(char* s);

const char* kgpf_version(void);

/* Merges defaults <- config file (optional, may be NULL) <- overrides JSON
 * (optional, may be NULL) <- KGPF_SEED env var, rejecting unknown keys.
 * On success *out_json holds the fully resolved config. */
kgpf_status kgpf_config_resolve(const char* config_path,
                                const char* overrides_json, char** out_json);

/* Pipeline stages. Each takes a resolved config JSON, writes its artifacts
 * under the configured output directory and, when out_summary_json is not
 * NULL, returns a JSON summary (for eval: the full metrics report). */
kgpf_status kgpf_pretrain(const char* config_json, char** out_summary_json);
kgpf_status kgpf_train(const char* config_json, char** out_summary_json);
kgpf_status kgpf_eval(const char* config_json, char** out_summary_json);
kgpf_status kgpf_synth(const char* config_json, char** out_summary_json);

/* Dataset handle: loads a dataset directory (train/valid/test[.txt] plus
 * optional graph.txt) for inspection. */
typedef struct kgpf_dataset kgpf_dataset;

typedef struct kgpf_dataset_stats {
  uint64_t entities;
  uint64_t relations; /* loaded relation types, inverses not counted */
  uint64_t background_edges;
  uint64_t train_triples;
  uint64_t valid_triples;
  uint64_t test_triples;
} kgpf_dataset_stats;

kgpf_status kgpf_dataset_open(const char* dir, kgpf_dataset** out);
kgpf_status kgpf_dataset_stats_get(const kgpf_dataset* ds,
                                   kgpf_dataset_stats* out);
void kgpf_dataset_close(kgpf_dataset* ds);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KGPF_H */
