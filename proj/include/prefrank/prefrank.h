#ifndef PREFRANK_PREFRANK_H
#define PREFRANK_PREFRANK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PREFRANK_API __declspec(dllexport)
#else
#define PREFRANK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every call returns a status; PREFRANK_OK is zero. Library error codes map
   one to one onto the values 1..27. The message of the most recent failure
   on the calling thread is available from prefrank_last_error(). */
typedef enum prefrank_status {
  PREFRANK_OK = 0,
  PREFRANK_ERR_PARSE = 1,
  PREFRANK_ERR_DANGLING_REFERENCE = 2,
  PREFRANK_ERR_DUPLICATE_KEY = 3,
  PREFRANK_ERR_INVALID_DATASET = 4,
  PREFRANK_ERR_INVALID_ARGUMENT = 5,
  PREFRANK_ERR_UNKNOWN_ITEM = 6,
  PREFRANK_ERR_SOLVER_DIVERGED = 7,
  PREFRANK_ERR_DEGENERATE_LIKELIHOOD = 8,
  PREFRANK_ERR_EMPTY_FIELD = 9,
  PREFRANK_ERR_EXHAUSTED = 10,
  PREFRANK_ERR_UNEXPECTED_PAIR = 11,
  PREFRANK_ERR_NOTHING_TO_UNDO = 12,
  PREFRANK_ERR_NO_CANDIDATE = 13,
  PREFRANK_ERR_UNEXPECTED_VENUE = 14,
  PREFRANK_ERR_ALREADY_PRESENT = 15,
  PREFRANK_ERR_NO_ELIGIBLE_COMPARISONS = 16,
  PREFRANK_ERR_RANK_DEFICIENT = 17,
  PREFRANK_ERR_INCOMPLETE_TRANSCRIPT = 18,
  PREFRANK_ERR_NOT_FOUND = 19,
  PREFRANK_ERR_STALE_ANSWER = 20,
  PREFRANK_ERR_STAGE_INCOMPLETE = 21,
  PREFRANK_ERR_IO = 22,
  PREFRANK_ERR_CONFIG = 23,
  PREFRANK_ERR_SESSION_NOT_FOUND = 24,
  PREFRANK_ERR_UNKNOWN_VENUE = 25,
  PREFRANK_ERR_UNKNOWN_FIELD = 26,
  PREFRANK_ERR_CORRUPT_LOG = 27,
  PREFRANK_ERR_NULL_ARGUMENT = 100,
  PREFRANK_ERR_BIND = 101,
  PREFRANK_ERR_INTERNAL = 102
} prefrank_status;

typedef struct prefrank_dataset prefrank_dataset;
typedef struct prefrank_report prefrank_report;
typedef struct prefrank_server prefrank_server;

PREFRANK_API const char* prefrank_version(void);
PREFRANK_API const char* prefrank_status_name(int status);
/* Empty string when the calling thread has not seen a failure. */
PREFRANK_API const char* prefrank_last_error(void);
/* Releases strings returned through char** out-parameters. */
PREFRANK_API void prefrank_string_free(char* text);

/* Loads venues.csv, comparisons.csv, respondents.csv and, when present,
   publications.csv and citations.csv from a directory. */
PREFRANK_API int prefrank_dataset_load(const char* directory, prefrank_dataset** out);
/* publications and citations may be NULL. */
PREFRANK_API int prefrank_dataset_load_files(const char* venues, const char* comparisons, const char* respondents,
                                             const char* publications, const char* citations,
                                             prefrank_dataset** out);
/* Newline-separated violations of a loaded dataset; empty when valid. */
PREFRANK_API int prefrank_dataset_validate(const prefrank_dataset* dataset, char** violations);
PREFRANK_API int prefrank_dataset_hash(const prefrank_dataset* dataset, char** hex);
PREFRANK_API int prefrank_dataset_counts(const prefrank_dataset* dataset, size_t* venues, size_t* respondents,
                                         size_t* comparisons);
PREFRANK_API int prefrank_dataset_write(const prefrank_dataset* dataset, const char* directory);
PREFRANK_API void prefrank_dataset_free(prefrank_dataset* dataset);

/* Reports take a JSON object of options (NULL or "" for defaults). */
PREFRANK_API int prefrank_fit(const prefrank_dataset* dataset, const char* options_json, prefrank_report** out);
PREFRANK_API int prefrank_analyze(const prefrank_dataset* dataset, const char* analysis, const char* options_json,
                                  prefrank_report** out);
/* template_dataset may be NULL except for the "null" experiment. */
PREFRANK_API int prefrank_simulate(const char* experiment, const char* options_json,
                                   const prefrank_dataset* template_dataset, prefrank_report** out);

/* Accessors stay valid until the report is freed. */
PREFRANK_API const char* prefrank_report_csv(const prefrank_report* report);
PREFRANK_API const char* prefrank_report_config(const prefrank_report* report);
PREFRANK_API uint64_t prefrank_report_seed(const prefrank_report* report);
PREFRANK_API size_t prefrank_report_warning_count(const prefrank_report* report);
PREFRANK_API const char* prefrank_report_warning(const prefrank_report* report, size_t index);
PREFRANK_API void prefrank_report_free(prefrank_report* report);

/* "# manifest {...}" line; dataset_hash may be NULL. */
PREFRANK_API int prefrank_manifest(const char* subcommand, const char* config_json, const char* dataset_hash,
                                   uint64_t seed, char** out);

/* Reads the service config file, applies PREFRANK_* environment variables and
   then the overrides object (keys: listen, seed, data_dir, log_path), opens
   the event log and binds the listening socket. A busy address yields
   PREFRANK_ERR_BIND. */
PREFRANK_API int prefrank_server_create(const char* config_path, const char* overrides_json, prefrank_server** out);
PREFRANK_API int prefrank_server_port(const prefrank_server* server);
/* Resolved configuration as JSON. */
PREFRANK_API int prefrank_server_config(const prefrank_server* server, char** json);
/* Blocks until prefrank_server_stop is called from another thread. */
PREFRANK_API int prefrank_server_run(prefrank_server* server);
PREFRANK_API int prefrank_server_stop(prefrank_server* server);
/* Stops the server if needed and closes the event log. */
PREFRANK_API void prefrank_server_free(prefrank_server* server);

#ifdef __cplusplus
}
#endif

#endif
