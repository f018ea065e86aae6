#pragma once

// Request parsing, the example gallery and the analysis pipeline behind the
// command line tool.  Reports are JSON documents with sorted keys, so a run
// is byte-identical for a fixed request.

#include "cpd/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace cpd::app {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kSchemaVersion = "1";

enum class Kind { sequence, dense_operator, weighted_shift, qclass_pair };

const char* to_string(Kind k);

struct AnalysisRequest {
  Kind kind = Kind::sequence;
  std::string label;

  // sequence: explicit values, or a rule sampled on 0..truncation:
  // "power" gamma_n = param_sign * n^param, "theta" gamma_n = param^n/(param-1)^2
  std::vector<double> values;
  std::string rule;
  double param = 0.0;
  double param_sign = 1.0;

  Matrix matrix;  // dense_operator

  // weighted_shift: family in {isometry, two_isometry, three_isometry, wab, explicit}
  std::string family;
  double a = 0.0;
  double b = 0.0;
  std::vector<double> head;
  double tail = 1.0;

  std::vector<double> s;  // qclass_pair
  std::vector<double> t;

  std::size_t truncation = 24;
  std::size_t window = 32;
  ToleranceConfig tolerances;
  std::uint64_t seed = 20240917;
  std::size_t random_probes = 8;
  std::vector<std::string> analyses{"all"};

  // Throws Error(parse) on violated invariants.
  void validate() const;
};

// Throws Error(ErrorCode::parse) with a JSON pointer or byte offset.
AnalysisRequest parse_request(const std::string& text);
nlohmann::json request_to_json(const AnalysisRequest& r);

const std::vector<std::string>& gallery_names();
// Throws Error(ErrorCode::domain) listing valid names.
AnalysisRequest gallery(const std::string& name);

struct Report {
  nlohmann::json doc;
  bool inconclusive = false;  // an analysis ended in a numerical error
};

Report run(const AnalysisRequest& r);

std::string render_json(const Report& r);
std::string render_text(const Report& r);

}  // namespace cpd::app
