#ifndef CPD_CPD_H
#define CPD_CPD_H

/* C interface to the cpd analysis library.  Handles are opaque; every call
 * returns a cpd_status and leaves a message in cpd_last_error() on failure.
 * Strings returned by the library stay valid until the owning handle is
 * freed. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CPD_API __declspec(dllexport)
#else
#define CPD_API __attribute__((visibility("default")))
#endif

typedef enum cpd_status {
  CPD_OK = 0,
  CPD_ERR_PARSE = 1,
  CPD_ERR_DOMAIN = 2,
  CPD_ERR_LENGTH = 3,
  CPD_ERR_WINDOW = 4,
  CPD_ERR_UNSUPPORTED = 5,
  CPD_ERR_REFUSED = 6,
  CPD_ERR_INCONCLUSIVE = 7,
  CPD_ERR_NULL = 8,
  CPD_ERR_INTERNAL = 9
} cpd_status;

typedef enum cpd_verdict {
  CPD_FAILS = 0,
  CPD_HOLDS = 1,
  CPD_INCONCLUSIVE = 2
} cpd_verdict;

typedef struct cpd_request cpd_request;
typedef struct cpd_report cpd_report;

CPD_API const char* cpd_version(void);
/* Thread-local message for the last failing call on this thread. */
CPD_API const char* cpd_last_error(void);
CPD_API const char* cpd_status_name(cpd_status s);

CPD_API cpd_status cpd_request_parse(const char* json, cpd_request** out);
CPD_API cpd_status cpd_request_gallery(const char* name, cpd_request** out);
CPD_API void cpd_request_free(cpd_request* r);

CPD_API cpd_status cpd_request_set_truncation(cpd_request* r, size_t n);
CPD_API cpd_status cpd_request_set_window(cpd_request* r, size_t w);
CPD_API cpd_status cpd_request_set_psd_tol(cpd_request* r, double tol);
CPD_API cpd_status cpd_request_set_rank_tol(cpd_request* r, double tol);
CPD_API cpd_status cpd_request_set_seed(cpd_request* r, uint64_t seed);
/* Canonical JSON form of the request. */
CPD_API const char* cpd_request_json(cpd_request* r);

CPD_API size_t cpd_gallery_count(void);
CPD_API const char* cpd_gallery_name(size_t i);

CPD_API cpd_status cpd_run(const cpd_request* r, cpd_report** out);
CPD_API const char* cpd_report_json(const cpd_report* rep);
CPD_API const char* cpd_report_text(const cpd_report* rep);
/* 1 when some analysis ended in a numerical error, else 0. */
CPD_API int cpd_report_inconclusive(const cpd_report* rep);
CPD_API void cpd_report_free(cpd_report* rep);

/* Scalar helpers. */
CPD_API cpd_status cpd_q_poly(size_t n, double x, double* out);
CPD_API cpd_status cpd_sequence_cpd(const double* values, size_t len, double psd_tol,
                                    cpd_verdict* out);
CPD_API cpd_status cpd_sequence_pd(const double* values, size_t len, double psd_tol,
                                   cpd_verdict* out);

#ifdef __cplusplus
}
#endif

#endif
