#include "cpd/cpd.h"

#include "cpd/app.hpp"
#include "cpd/seq.hpp"

#include <string>
#include <vector>

struct cpd_request {
  cpd::app::AnalysisRequest req;
  std::string json;
};

struct cpd_report {
  std::string json;
  std::string text;
  bool inconclusive = false;
};

namespace {

thread_local std::string g_last_error;

cpd_status code_of(cpd::ErrorCode c) {
  using cpd::ErrorCode;
  switch (c) {
    case ErrorCode::parse: return CPD_ERR_PARSE;
    case ErrorCode::domain: return CPD_ERR_DOMAIN;
    case ErrorCode::length: return CPD_ERR_LENGTH;
    case ErrorCode::window: return CPD_ERR_WINDOW;
    case ErrorCode::unsupported: return CPD_ERR_UNSUPPORTED;
    case ErrorCode::refused: return CPD_ERR_REFUSED;
    case ErrorCode::inconclusive: return CPD_ERR_INCONCLUSIVE;
  }
  return CPD_ERR_INTERNAL;
}

template <class F>
cpd_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return CPD_OK;
  } catch (const cpd::Error& e) {
    g_last_error = e.what();
    return code_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CPD_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return CPD_ERR_INTERNAL;
  }
}

cpd_status null_arg(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return CPD_ERR_NULL;
}

cpd_verdict verdict_of(const cpd::Verdict& v) {
  if (v.holds()) return CPD_HOLDS;
  if (v.fails()) return CPD_FAILS;
  return CPD_INCONCLUSIVE;
}

}  // namespace

extern "C" {

const char* cpd_version(void) { return cpd::app::kVersion; }

const char* cpd_last_error(void) { return g_last_error.c_str(); }

const char* cpd_status_name(cpd_status s) {
  switch (s) {
    case CPD_OK: return "ok";
    case CPD_ERR_PARSE: return "parse";
    case CPD_ERR_DOMAIN: return "domain";
    case CPD_ERR_LENGTH: return "length";
    case CPD_ERR_WINDOW: return "window";
    case CPD_ERR_UNSUPPORTED: return "unsupported";
    case CPD_ERR_REFUSED: return "refused";
    case CPD_ERR_INCONCLUSIVE: return "inconclusive";
    case CPD_ERR_NULL: return "null";
    case CPD_ERR_INTERNAL: return "internal";
  }
  return "internal";
}

cpd_status cpd_request_parse(const char* json, cpd_request** out) {
  if (!json) return null_arg("json");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new cpd_request{cpd::app::parse_request(json), {}}; });
}

cpd_status cpd_request_gallery(const char* name, cpd_request** out) {
  if (!name) return null_arg("name");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new cpd_request{cpd::app::gallery(name), {}}; });
}

void cpd_request_free(cpd_request* r) { delete r; }

cpd_status cpd_request_set_truncation(cpd_request* r, size_t n) {
  if (!r) return null_arg("request");
  return guarded([&] {
    cpd::app::AnalysisRequest next = r->req;
    const bool follow = next.window == next.truncation + 8;
    next.truncation = n;
    if (follow) next.window = n + 8;
    next.validate();
    r->req = std::move(next);
  });
}

cpd_status cpd_request_set_window(cpd_request* r, size_t w) {
  if (!r) return null_arg("request");
  return guarded([&] {
    cpd::app::AnalysisRequest next = r->req;
    next.window = w;
    next.validate();
    r->req = std::move(next);
  });
}

cpd_status cpd_request_set_psd_tol(cpd_request* r, double tol) {
  if (!r) return null_arg("request");
  return guarded([&] {
    cpd::app::AnalysisRequest next = r->req;
    next.tolerances.psd_tol = tol;
    next.validate();
    r->req = std::move(next);
  });
}

cpd_status cpd_request_set_rank_tol(cpd_request* r, double tol) {
  if (!r) return null_arg("request");
  return guarded([&] {
    cpd::app::AnalysisRequest next = r->req;
    next.tolerances.rank_tol = tol;
    next.validate();
    r->req = std::move(next);
  });
}

cpd_status cpd_request_set_seed(cpd_request* r, uint64_t seed) {
  if (!r) return null_arg("request");
  r->req.seed = seed;
  return CPD_OK;
}

const char* cpd_request_json(cpd_request* r) {
  if (!r) return nullptr;
  r->json = cpd::app::request_to_json(r->req).dump(2);
  return r->json.c_str();
}

size_t cpd_gallery_count(void) { return cpd::app::gallery_names().size(); }

const char* cpd_gallery_name(size_t i) {
  const auto& names = cpd::app::gallery_names();
  return i < names.size() ? names[i].c_str() : nullptr;
}

cpd_status cpd_run(const cpd_request* r, cpd_report** out) {
  if (!r) return null_arg("request");
  if (!out) return null_arg("out");
  return guarded([&] {
    const cpd::app::Report rep = cpd::app::run(r->req);
    *out = new cpd_report{cpd::app::render_json(rep), cpd::app::render_text(rep), rep.inconclusive};
  });
}

const char* cpd_report_json(const cpd_report* rep) { return rep ? rep->json.c_str() : nullptr; }

const char* cpd_report_text(const cpd_report* rep) { return rep ? rep->text.c_str() : nullptr; }

int cpd_report_inconclusive(const cpd_report* rep) { return rep && rep->inconclusive ? 1 : 0; }

void cpd_report_free(cpd_report* rep) { delete rep; }

cpd_status cpd_q_poly(size_t n, double x, double* out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = cpd::seq::q_poly(n, x); });
}

cpd_status cpd_sequence_cpd(const double* values, size_t len, double psd_tol,
                            cpd_verdict* out) {
  if (!values) return null_arg("values");
  if (!out) return null_arg("out");
  return guarded([&] {
    cpd::ToleranceConfig cfg;
    cfg.psd_tol = psd_tol;
    cfg.validate();
    cpd::seq::RealSequence s(std::vector<double>(values, values + len));
    *out = verdict_of(cpd::seq::is_cpd_truncated(s, cfg));
  });
}

cpd_status cpd_sequence_pd(const double* values, size_t len, double psd_tol,
                           cpd_verdict* out) {
  if (!values) return null_arg("values");
  if (!out) return null_arg("out");
  return guarded([&] {
    cpd::ToleranceConfig cfg;
    cfg.psd_tol = psd_tol;
    cfg.validate();
    cpd::seq::RealSequence s(std::vector<double>(values, values + len));
    *out = verdict_of(cpd::seq::is_pd_truncated(s, cfg));
  });
}

}  // extern "C"
