#ifndef QPTORUS_H
#define QPTORUS_H

/* C interface to the torus continuation engine. All functions are
 * thread-compatible: one session per thread. Strings returned by the
 * library stay valid until the next call on the same session (or, for
 * qpt_last_error, the next failing call on the same thread). */

#include <stddef.h>

#if defined(_WIN32)
#  if defined(QPT_BUILDING_LIBRARY)
#    define QPT_API __declspec(dllexport)
#  else
#    define QPT_API __declspec(dllimport)
#  endif
#else
#  define QPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum qpt_status {
    QPT_OK = 0,
    QPT_ERROR = 1,           /* anything not listed below */
    QPT_CONFIG_ERROR = 2,    /* invalid config, missing file or point */
    QPT_BRANCH_STALL = 3,    /* continuation stalled; partial output written */
    QPT_NOT_NS_POINT = 4,
    QPT_BLOWUP = 5,          /* time integration diverged */
    QPT_INVALID_ARGUMENT = 6
} qpt_status;

typedef struct qpt_session qpt_session;

QPT_API qpt_status qpt_session_open(const char* config_path, qpt_session** out);
/* base_dir resolves relative paths in the config; NULL means ".". */
QPT_API qpt_status qpt_session_open_json(const char* json_text, const char* base_dir, qpt_session** out);
QPT_API void qpt_session_close(qpt_session* session);

QPT_API qpt_status qpt_unknown_count(qpt_session* session, size_t* out);

QPT_API qpt_status qpt_run_continue(qpt_session* session);
QPT_API qpt_status qpt_run_stability(qpt_session* session, const char* branch_path);
QPT_API qpt_status qpt_run_ns_init(qpt_session* session, const char* branch_path, size_t index, double epsilon);
QPT_API qpt_status qpt_run_compare(qpt_session* session, const char* branch_path, size_t index, int self_compare);

/* JSON summary of the last successful run, "" before any. */
QPT_API const char* qpt_last_summary_json(const qpt_session* session);

/* Monolithic over staged operation count for the alternating transform. */
QPT_API qpt_status qpt_operation_ratio(int S, int U, int d, double* out);

QPT_API const char* qpt_last_error(void);
QPT_API const char* qpt_version(void);
/* 0 quiet, 1 progress, 2 detail. */
QPT_API void qpt_set_log_level(int level);

#ifdef __cplusplus
}
#endif

#endif
