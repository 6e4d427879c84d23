/*
Copyright 2026 The diarl Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef DIARL_DIARL_H
#define DIARL_DIARL_H

#include <stddef.h>
#include <stdint.h>

#if defined(DIARL_BUILDING_LIBRARY)
#define DIARL_API __attribute__((visibility("default")))
#else
#define DIARL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every call returns a status; on failure diarl_last_error() holds a message
 * for the calling thread until its next call. Strings handed out through
 * char** parameters belong to the caller and go back via diarl_string_free. */
typedef enum diarl_status {
  DIARL_OK = 0,
  DIARL_E_CONFIG = 1,
  DIARL_E_BAD_INPUT = 2,
  DIARL_E_STATE = 3,
  DIARL_E_PROTOCOL = 4,
  DIARL_E_STALE = 5,
  DIARL_E_UNKNOWN_SEGMENT = 6,
  DIARL_E_UNKNOWN_LABEL = 7,
  DIARL_E_DUPLICATE = 8,
  DIARL_E_IO = 9,
  DIARL_E_INTERNAL = 10
} diarl_status;

typedef struct diarl_session diarl_session;

DIARL_API const char* diarl_version(void);
DIARL_API const char* diarl_last_error(void);
/* Wire name of a status, e.g. "STALE". */
DIARL_API const char* diarl_status_name(diarl_status status);
DIARL_API void diarl_string_free(char* s);

/* config_json: SessionConfig object; NULL or "" for defaults. */
DIARL_API diarl_status diarl_session_create(const char* config_json, diarl_session** out);
DIARL_API diarl_status diarl_session_load(const char* snapshot_json, diarl_session** out);
DIARL_API void diarl_session_destroy(diarl_session* s);

DIARL_API diarl_status diarl_session_push_pcm(diarl_session* s, const int16_t* samples, size_t count);
/* Precomputed context; the session must have been created with context_dim. */
DIARL_API diarl_status diarl_session_push_context(diarl_session* s, int64_t segment_id, double t0, double t1,
                                                  const double* x, size_t dim, int speech);

/* feedback_json: a protocol feedback message. On success the reward record
 * (JSON) is returned through reward_json when it is non-NULL. */
DIARL_API diarl_status diarl_session_feedback(diarl_session* s, const char* feedback_json, char** reward_json);
DIARL_API diarl_status diarl_session_register(diarl_session* s, const char* name, size_t* arm);
DIARL_API diarl_status diarl_session_finish(diarl_session* s);

DIARL_API diarl_status diarl_session_snapshot(diarl_session* s, char** snapshot_json);
DIARL_API diarl_status diarl_session_transcript(diarl_session* s, char** transcript);
DIARL_API diarl_status diarl_session_hash(diarl_session* s, char** hash);

/* Next pending event as one protocol line; *line is NULL when none is left. */
DIARL_API diarl_status diarl_session_poll_event(diarl_session* s, char** line);

/* Benchmarks. Requests are JSON objects; see the README for fields. */
DIARL_API diarl_status diarl_bench_run(const char* request_json, char** report_json);
DIARL_API diarl_status diarl_bench_compare(const char* request_json, char** result_json);
DIARL_API diarl_status diarl_bench_generate(const char* request_json, const char* out_dir);

/* Offline transcript of a PCM/WAV file with an optional feedback script. */
DIARL_API diarl_status diarl_replay(const char* request_json, char** result_json);

/* Runs the session service on audio_fd until EOF. on_bound, when set, is
 * called with the listening port before audio is read. */
typedef void (*diarl_bound_fn)(int port, void* user);
DIARL_API diarl_status diarl_serve(const char* request_json, int audio_fd, diarl_bound_fn on_bound, void* user);

DIARL_API diarl_status diarl_snapshot_inspect(const char* snapshot_json, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
