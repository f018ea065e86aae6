#include "cpd/app.hpp"

#include "cpd/calc.hpp"
#include "cpd/moments.hpp"
#include "cpd/op.hpp"
#include "cpd/qclass.hpp"
#include "cpd/rep.hpp"
#include "cpd/seq.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace cpd::app {

using nlohmann::json;

const char* to_string(Kind k) {
  switch (k) {
    case Kind::sequence: return "sequence";
    case Kind::dense_operator: return "dense_operator";
    case Kind::weighted_shift: return "weighted_shift";
    case Kind::qclass_pair: return "qclass_pair";
  }
  return "sequence";
}

namespace {

const std::vector<std::string> kSequenceAnalyses{
    "cpd", "pd", "triplet", "pd_decision", "difference_form",
    "monotone", "schoenberg", "scaling", "growth"};
const std::vector<std::string> kOperatorAnalyses{
    "norms", "brackets", "cpd", "measure", "dilation", "classification",
    "subnormal", "boundiff", "calculus", "powers", "hyperexpansive",
    "difference_limit", "associated_shift"};
const std::vector<std::string> kQclassAnalyses{"form", "cpd", "measure", "subnormal_region"};

const std::vector<std::string>& analyses_for(Kind k) {
  switch (k) {
    case Kind::sequence: return kSequenceAnalyses;
    case Kind::qclass_pair: return kQclassAnalyses;
    default: return kOperatorAnalyses;
  }
}

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::parse, where + ": " + what);
}

double to_number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || s.empty()) {
      parse_fail(where, "not a decimal number: \"" + s + "\"");
    }
    return v;
  }
  parse_fail(where, "expected a number or decimal string");
}

std::uint64_t to_unsigned(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() < 0) parse_fail(where, "must be nonnegative");
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    std::uint64_t v = 0;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || s.empty()) {
      parse_fail(where, "not an unsigned integer: \"" + s + "\"");
    }
    return v;
  }
  parse_fail(where, "expected an unsigned integer");
}

cplx to_complex(const json& j, const std::string& where) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() != "re" && it.key() != "im") {
        parse_fail(where + "/" + it.key(), "unknown field");
      }
    }
    const double re = j.contains("re") ? to_number(j["re"], where + "/re") : 0.0;
    const double im = j.contains("im") ? to_number(j["im"], where + "/im") : 0.0;
    return {re, im};
  }
  return {to_number(j, where), 0.0};
}

std::vector<double> to_list(const json& j, const std::string& where) {
  if (!j.is_array()) parse_fail(where, "expected an array");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) {
    v.push_back(to_number(j[i], where + "/" + std::to_string(i)));
  }
  return v;
}

std::string to_str(const json& j, const std::string& where) {
  if (!j.is_string()) parse_fail(where, "expected a string");
  return j.get<std::string>();
}

// --- report helpers --------------------------------------------------------

json complex_list(const std::vector<cplx>& v) {
  json out = json::array();
  bool real = std::all_of(v.begin(), v.end(), [](cplx c) { return c.imag() == 0.0; });
  for (cplx c : v) {
    if (real) out.push_back(c.real());
    else out.push_back(json{{"re", c.real()}, {"im", c.imag()}});
  }
  return out;
}

json verdict_json(const Verdict& v) {
  json j{{"status", to_string(v.status)}, {"note", v.note}};
  if (v.witness) {
    j["witness"] = {{"description", v.witness->description},
                    {"value", v.witness->value},
                    {"vector", complex_list(v.witness->vector)}};
  }
  return j;
}

constexpr Eigen::Index kShownBlock = 6;

json matrix_json(const Matrix& m) {
  const Eigen::Index k = std::min<Eigen::Index>(m.rows(), kShownBlock);
  json re = json::array();
  json im = json::array();
  bool has_im = false;
  for (Eigen::Index i = 0; i < k; ++i) {
    json rr = json::array();
    json ri = json::array();
    for (Eigen::Index j = 0; j < std::min<Eigen::Index>(m.cols(), kShownBlock); ++j) {
      rr.push_back(m(i, j).real());
      ri.push_back(m(i, j).imag());
      has_im = has_im || m(i, j).imag() != 0.0;
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  json j{{"dim", m.rows()}, {"shown", k}, {"re", re}, {"norm", spectral_norm(m)}};
  if (has_im) j["im"] = im;
  return j;
}

json measure_json(const rep::OperatorMeasure& m) {
  json atoms = json::array();
  for (const auto& a : m.atoms()) {
    atoms.push_back({{"location", a.location},
                     {"trace", a.weight.trace().real()},
                     {"weight", matrix_json(a.weight)}});
  }
  return {{"dim", m.dim()}, {"atoms", atoms}};
}

json scalar_measure_json(const moments::AtomicMeasure& m) {
  json atoms = json::array();
  for (const auto& a : m.atoms()) atoms.push_back({{"location", a.location}, {"mass", a.mass}});
  return atoms;
}

json tolerances_json(const ToleranceConfig& c) {
  return {{"psd_tol", c.psd_tol}, {"rank_tol", c.rank_tol}, {"atom_merge_tol", c.atom_merge_tol}};
}

// Runs one analysis; numerical errors become structured entries.
class Runner {
 public:
  Runner(const AnalysisRequest& r, Report& rep) : rep_(rep) {
    for (const auto& a : r.analyses) {
      if (a == "all") {
        for (const auto& x : analyses_for(r.kind)) selected_.insert(x);
      } else {
        selected_.insert(a);
      }
    }
  }

  bool wants(const std::string& name) const { return selected_.count(name) > 0; }

  void section(const std::string& name, const std::function<json()>& body) {
    if (!wants(name)) return;
    try {
      rep_.doc["analyses"][name] = body();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::refused) {
        rep_.doc["analyses"][name] = {{"skipped", e.what()}};
        return;
      }
      if (e.code() == ErrorCode::inconclusive) rep_.inconclusive = true;
      rep_.doc["analyses"][name] = {
          {"error", {{"code", cpd::to_string(e.code())}, {"message", e.what()}}}};
    }
  }

 private:
  Report& rep_;
  std::set<std::string> selected_;
};

seq::RealSequence request_sequence(const AnalysisRequest& r) {
  if (r.rule.empty()) {
    std::vector<double> v(r.values.begin(), r.values.begin() +
                                                static_cast<std::ptrdiff_t>(r.truncation + 1));
    return seq::RealSequence(std::move(v));
  }
  if (r.rule == "power") {
    return seq::RealSequence::from_rule(
        [&](std::size_t n) { return r.param_sign * std::pow(static_cast<double>(n), r.param); },
        r.truncation);
  }
  const double th = r.param;
  return seq::RealSequence::from_rule(
      [th](std::size_t n) {
        return std::pow(th, static_cast<double>(n)) / ((th - 1.0) * (th - 1.0));
      },
      r.truncation);
}

op::LinearOperator request_operator(const AnalysisRequest& r) {
  if (r.kind == Kind::dense_operator) {
    return op::LinearOperator::dense(r.matrix, r.label.empty() ? "dense" : r.label);
  }
  if (r.family == "isometry") return op::LinearOperator::shift(op::ShiftWeights::isometry());
  if (r.family == "two_isometry") {
    return op::LinearOperator::shift(op::ShiftWeights::two_isometry());
  }
  if (r.family == "three_isometry") {
    return op::LinearOperator::shift(op::ShiftWeights::three_isometry());
  }
  if (r.family == "wab") return op::LinearOperator::shift(op::ShiftWeights::wab(r.a, r.b));
  return op::LinearOperator::shift(op::ShiftWeights::explicit_list(r.head, r.tail));
}

void run_sequence(const AnalysisRequest& r, Report& rep) {
  Runner run(r, rep);
  const ToleranceConfig& cfg = r.tolerances;
  const seq::RealSequence s = request_sequence(r);
  json values = json::array();
  for (double v : s.values()) values.push_back(v);
  rep.doc["subject"]["values"] = values;

  const Verdict cpd = seq::is_cpd_truncated(s, cfg);
  const Verdict pd = seq::is_pd_truncated(s, cfg);
  rep.doc["headline"] = {{"cpd", to_string(cpd.status)}, {"pd", to_string(pd.status)}};

  run.section("cpd", [&] { return verdict_json(cpd); });
  run.section("pd", [&] { return verdict_json(pd); });

  std::optional<moments::RepresentingTriplet> trip;
  auto triplet = [&]() -> const moments::RepresentingTriplet& {
    if (!trip) trip = moments::triplet_from_sequence(s, cfg);
    return *trip;
  };
  run.section("triplet", [&]() -> json {
    if (!cpd.holds()) return {{"skipped", "sequence is not CPD at truncation"}};
    const auto& t = triplet();
    const auto back = moments::reconstruct_sequence(t, s[0], s.last());
    double err = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) err = std::max(err, std::abs(back[n] - s[n]));
    return {{"b", t.b}, {"c", t.c}, {"nu", scalar_measure_json(t.nu)},
            {"reconstruction_error", err},
            {"tolerance", cfg.rank_tol * std::max(1.0, s.sup_norm())}};
  });
  run.section("pd_decision", [&]() -> json {
    if (!cpd.holds()) return {{"skipped", "sequence is not CPD at truncation"}};
    const auto d = moments::pd_decision(triplet(), s[0], cfg);
    json j{{"verdict", verdict_json(d.verdict)}, {"delta_one_mass", d.delta_one_mass}};
    if (d.mu) j["mu"] = scalar_measure_json(*d.mu);
    return j;
  });
  run.section("difference_form", [&]() -> json {
    if (!cpd.holds()) return {{"skipped", "sequence is not CPD at truncation"}};
    const auto f = moments::bounded_difference_form(s, cfg);
    json j{{"verdict", verdict_json(f.verdict)}};
    if (f.pair) j["pair"] = {{"d", f.pair->d}, {"nu", scalar_measure_json(f.pair->nu)}};
    return j;
  });
  run.section("monotone", [&]() -> json {
    const auto m = moments::monotone_cpd_check(s, cfg);
    json j{{"verdict", verdict_json(m.verdict)},
           {"differences_to_zero", m.differences_to_zero},
           {"monotone_decreasing", m.monotone_decreasing},
           {"convergent", m.convergent}};
    if (m.pd) j["pd"] = verdict_json(*m.pd);
    return j;
  });
  run.section("schoenberg", [&]() -> json {
    const double ts[] = {0.25, 0.5, 1.0, 2.0};
    return {{"t", ts}, {"verdict", verdict_json(seq::schoenberg_probe(s, ts, cfg))}};
  });
  run.section("scaling", [&]() -> json {
    const double th[] = {0.5, 0.9, 1.1, 2.0};
    const auto sc = moments::gyeon_scaling_probe(s, th, cfg);
    json per = json::array();
    for (const auto& v : sc.per_theta) per.push_back(verdict_json(v));
    return {{"thetas", sc.thetas}, {"per_theta", per}, {"pd", verdict_json(sc.pd)},
            {"inconsistent", sc.inconsistent}, {"diagnostic", sc.diagnostic},
            {"overall", verdict_json(sc.overall)}};
  });
  run.section("growth", [&]() -> json {
    const auto g = seq::growth_rate(s);
    return {{"value", g.value}, {"is_estimate", g.is_estimate}, {"quality", g.quality}};
  });
}

// Max relative gap between two matrices on their common leading block.
double rel_gap(const Matrix& a, const Matrix& b) {
  const Eigen::Index k = std::min(a.rows(), b.rows());
  const Matrix x = leading(a, k);
  const Matrix y = leading(b, k);
  return spectral_norm(x - y) / std::max(1.0, spectral_norm(y));
}

void run_operator(const AnalysisRequest& r, Report& rep) {
  Runner run(r, rep);
  const ToleranceConfig& cfg = r.tolerances;
  const op::LinearOperator t = request_operator(r);
  const std::size_t w = r.window;
  std::size_t upto = r.truncation;
  if (t.is_dense()) {
    const std::size_t d = t.slots();
    upto = std::max(upto, 2 * d * d + 2);
  }
  rep.doc["subject"]["operator"] = t.label();

  // CPD verdict and measure are shared by most sections.
  const auto probes = op::default_probes(t, op::probe_rows(t, r.truncation, w),
                                         r.random_probes, r.seed);
  const op::CpdOperatorReport cpd = op::is_cpd_operator(t, probes, r.truncation, w, cfg);

  std::optional<std::size_t> m_iso;
  for (std::size_t m = 1; m <= 8 && (t.is_dense() || m < w); ++m) {
    if (op::is_m_isometry(t, m, w, cfg).holds()) {
      m_iso = m;
      break;
    }
  }

  std::optional<rep::MeasureRecovery> rec;
  std::optional<std::string> rec_error;
  bool rec_inconclusive = false;
  if (cpd.verdict.holds()) {
    try {
      rec = rep::recover_M(t, upto, w, cfg);
    } catch (const Error& e) {
      rec_error = std::string(cpd::to_string(e.code())) + ": " + e.what();
      rec_inconclusive = e.code() == ErrorCode::inconclusive;
    }
  }
  auto need_measure = [&]() -> const rep::MeasureRecovery& {
    if (!cpd.verdict.holds()) {
      throw Error(ErrorCode::refused, "operator is not CPD at truncation");
    }
    if (!rec) {
      throw Error(rec_inconclusive ? ErrorCode::inconclusive : ErrorCode::refused,
                  "measure unavailable: " + rec_error.value_or("unknown"));
    }
    return *rec;
  };
  std::optional<rep::OperatorTriplet> trip;
  auto need_triplet = [&]() -> const rep::OperatorTriplet& {
    if (!trip) trip = rep::triplet_from_M(t, need_measure().M, w, cfg);
    return *trip;
  };

  json headline{{"cpd", to_string(cpd.verdict.status)},
                {"m_isometry", m_iso ? json(*m_iso) : json(nullptr)},
                {"classification", nullptr},
                {"subnormal", nullptr},
                {"measure_atoms", nullptr}};
  if (rec) {
    json locs = json::array();
    for (double x : rec->M.locations()) locs.push_back(x);
    headline["measure_atoms"] = locs;
    const auto cls = rep::classify_small_support(t, rec->M, w, cfg);
    headline["classification"] = rep::to_string(cls.label);
    try {
      const auto sn = rep::subnormality_decision(t, need_triplet(), w, cfg);
      if (sn.verdict.status != Status::inconclusive) headline["subnormal"] = sn.verdict.holds();
    } catch (const Error&) {
    }
  } else if (cpd.verdict.fails()) {
    headline["subnormal"] = false;
  }
  rep.doc["headline"] = headline;

  run.section("norms", [&]() -> json {
    const auto sr = op::spectral_radius(t, w);
    return {{"norm", op::op_norm(t, w)},
            {"spectral_radius", {{"value", sr.value}, {"is_estimate", sr.is_estimate}}}};
  });
  run.section("brackets", [&]() -> json {
    json norms = json::array();
    for (std::size_t m = 1; m <= 8 && (t.is_dense() || m < w); ++m) {
      norms.push_back(spectral_norm(op::bracket_bm(t, m, w)));
    }
    const Matrix b2 = op::bracket_bm(t, 2, w);
    json j{{"B_m_norms", norms},
           {"m_isometry", m_iso ? json(*m_iso) : json(nullptr)},
           {"B_1", matrix_json(op::bracket_bm(t, 1, w))},
           {"B_2", matrix_json(b2)},
           {"B_2_psd", verdict_json(psd_check(b2, cfg.psd_tol, "B_2 >= 0"))},
           {"tolerance", cfg.psd_tol}};
    if (m_iso && *m_iso >= 2) {
      j["strict"] = verdict_json(op::is_m_isometry(t, *m_iso, w, cfg, true));
    }
    return j;
  });
  run.section("cpd", [&]() -> json {
    json j{{"verdict", verdict_json(cpd.verdict)},
           {"probes_checked", cpd.probes_checked},
           {"seed", cpd.seed},
           {"truncation", r.truncation}};
    j["failing_probe"] = cpd.failing_probe ? json(*cpd.failing_probe) : json(nullptr);
    return j;
  });
  run.section("measure", [&]() -> json {
    const auto& mr = need_measure();
    const auto& tr = need_triplet();
    double gram_err = 0.0;
    for (std::size_t n = 0; n <= std::min<std::size_t>(12, upto); ++n) {
      const Matrix g = op::hereditary_eval(op::Polynomial::monomial(n), t, w);
      gram_err = std::max(gram_err, rel_gap(rep::reconstruct_gram(tr, n), g));
    }
    return {{"M", measure_json(mr.M)},
            {"residual", mr.residual},
            {"tolerance", mr.bound},
            {"upto", upto},
            {"triplet", {{"B", matrix_json(tr.B)}, {"C", matrix_json(tr.C)}, {"F", measure_json(tr.F)}}},
            {"gram_roundtrip_error", gram_err}};
  });
  run.section("dilation", [&]() -> json {
    const auto& mr = need_measure();
    const rep::Dilation dil = rep::naimark_dilation(mr.M, cfg);
    double id_err = 0.0;
    for (std::size_t n = 0; n <= std::min<std::size_t>(12, upto); ++n) {
      id_err = std::max(id_err, spectral_norm(mr.moments[n] - dil.compress(n)));
    }
    double bm_err = 0.0;
    for (std::size_t m = 2; m <= 8 && (t.is_dense() || m < w); ++m) {
      bm_err = std::max(bm_err, rel_gap(rep::bm_from_M(mr.M, m), op::bracket_bm(t, m, w)));
    }
    json s = json::array();
    for (Eigen::Index i = 0; i < dil.S.size(); ++i) s.push_back(dil.S(i));
    return {{"kappa", dil.kappa()},
            {"S", s},
            {"identity_error", id_err},
            {"bm_from_M_error", bm_err},
            {"spectrum", verdict_json(rep::dilation_spectrum_check(t, dil, mr.M, w))}};
  });
  run.section("classification", [&]() -> json {
    const auto cls = rep::classify_small_support(t, need_measure().M, w, cfg);
    json j{{"label", rep::to_string(cls.label)}, {"cross_check", verdict_json(cls.cross_check)}};
    j["subnormal_criterion"] =
        cls.subnormal_criterion ? json(*cls.subnormal_criterion) : json(nullptr);
    return j;
  });
  run.section("subnormal", [&]() -> json {
    const auto sn = rep::subnormality_decision(t, need_triplet(), w, cfg);
    json j{{"verdict", verdict_json(sn.verdict)},
           {"contraction_shortcut", *sn.contraction_shortcut},
           {"integral_gap", sn.integral_gap},
           {"b_residual", sn.b_residual},
           {"tolerance", cfg.rank_tol}};
    if (sn.pushforward) j["pushforward"] = measure_json(*sn.pushforward);
    return j;
  });
  run.section("boundiff", [&]() -> json {
    const auto bd = rep::boundiff_form_operator(t, need_triplet(), r.truncation, w, cfg);
    json j{{"verdict", verdict_json(bd.verdict)},
           {"predicts_unit_spectral_radius", bd.predicts_unit_spectral_radius},
           {"limit_gap", bd.limit_gap}};
    if (bd.D) j["D"] = matrix_json(*bd.D);
    j["limit_agrees"] = bd.limit_agrees ? json(*bd.limit_agrees) : json(nullptr);
    return j;
  });
  run.section("calculus", [&]() -> json {
    const auto& mr = need_measure();
    calc::CalculusHandle h;
    h.M = mr.M;
    h.moments = mr.moments;
    h.B2 = mr.moments.front();
    h.support = mr.M.locations();
    const auto ln = calc::lambda_norm(h);
    const auto ig = calc::ideal_generator(h);
    const rep::Dilation dil = rep::naimark_dilation(mr.M, cfg);
    const double smax = mr.M.max_location();
    const cplx z(0.5 / std::max(1.0, smax), 0.0);
    const auto rc = calc::resolvent_check(h, dil, z);
    const auto ex = calc::exponential_check(h, dil, 1.0);
    json coeffs = json::array();
    for (std::size_t i = 0; i <= ig.w.degree(); ++i) coeffs.push_back(ig.w.coeff(i).real());
    return {{"lambda_norm",
             {{"by_extreme_points", ln.by_extreme_points}, {"by_total", ln.by_total},
              {"agree", ln.agree}}},
            {"ideal_generator", {{"coefficients", coeffs}, {"verdict", verdict_json(ig.verdict)}}},
            {"resolvent", {{"z", z.real()}, {"verdict", verdict_json(rc.verdict)}}},
            {"exponential", {{"x", 1.0}, {"verdict", verdict_json(ex.verdict)}}}};
  });
  run.section("powers", [&]() -> json {
    const auto& mr = need_measure();
    json out = json::array();
    for (std::size_t i = 2; i <= 3; ++i) {
      const op::LinearOperator ti = op::power(t, i);
      std::size_t ui = r.truncation;
      if (!t.is_dense()) {
        const std::size_t fit = (w - 1) / i;
        ui = fit >= 8 ? std::min(ui, fit - 3) : 0;
      }
      if (ui < 4) {
        out.push_back({{"i", i}, {"skipped", "window too small for this power"}});
        continue;
      }
      const auto pr = op::default_probes(ti, op::probe_rows(ti, ui, w), r.random_probes, r.seed);
      const auto c = op::is_cpd_operator(ti, pr, ui, w, cfg);
      json j{{"i", i}, {"upto", ui}, {"cpd", verdict_json(c.verdict)}};
      if (c.verdict.holds()) {
        const std::size_t u_rec = t.is_dense() ? upto : ui;
        const auto mi = rep::recover_M(ti, u_rec, w, cfg);
        const auto push = rep::power_pushforward(mr.M, i, cfg.atom_merge_tol);
        double gap = 0.0;
        for (std::size_t n = 0; n <= u_rec; ++n) {
          gap = std::max(gap, rel_gap(mi.M.moment(n), push.moment(n)));
        }
        j["pushforward_gap"] = gap;
      }
      out.push_back(j);
    }
    return out;
  });
  run.section("hyperexpansive", [&]() -> json {
    json out = json::array();
    for (const auto& v : op::hyperexpansive_window(t, 4, w, cfg)) out.push_back(verdict_json(v));
    return {{"label", "finite-window surrogate: B_m <= 0 for m = 1..4"}, {"per_m", out}};
  });
  run.section("difference_limit", [&]() -> json {
    const auto dl = op::difference_limit(t, r.truncation, w, cfg);
    return {{"monotone", verdict_json(dl.monotone)},
            {"kind", op::to_string(dl.kind)},
            {"estimate", matrix_json(dl.estimate)},
            {"last_increment_norm", dl.increment_norms.back()}};
  });
  run.section("associated_shift", [&]() -> json {
    const Eigen::Index rows = t.is_dense() ? static_cast<Eigen::Index>(t.slots())
                                           : t.block_size(w, r.truncation);
    const Vector h = Vector::Unit(rows, 0);
    const auto as = op::associated_shift_weights(t, h, r.truncation, w, cfg);
    json weights = json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(8, as.weights.size()); ++i) {
      weights.push_back(as.weights[i]);
    }
    json j{{"probe", "e_0"},
           {"weights_head", weights},
           {"bounded_on_window", as.bounded_on_window},
           {"subnormal", verdict_json(as.subnormal)},
           {"dual_complete_hyperexpansive",
            verdict_json(op::complete_hyperexpansive_dual_check(t, h, r.truncation, w, cfg))}};
    j["norm_sq_estimate"] = as.norm_sq_estimate ? json(*as.norm_sq_estimate) : json(nullptr);
    return j;
  });
}

void run_qclass(const AnalysisRequest& r, Report& rep) {
  Runner run(r, rep);
  const ToleranceConfig& cfg = r.tolerances;
  const qclass::QBlockOperator q = qclass::build_qclass(r.s, r.t);
  const std::size_t w = r.window;
  rep.doc["subject"]["operator"] = q.op.label();
  rep.doc["subject"]["constructive_reach"] = "finite joint spectra only";

  const auto cpd = qclass::qclass_cpd_test(q, cfg, w);
  const auto sub = qclass::qclass_subnormal_region(q);
  rep.doc["headline"] = {{"cpd", to_string(cpd.verdict.status)},
                         {"subnormal_region", sub.verdict.holds()}};

  run.section("form", [&] { return verdict_json(qclass::validate_block_form(q, w)); });
  run.section("cpd", [&]() -> json {
    return {{"verdict", verdict_json(cpd.verdict)},
            {"region", cpd.region},
            {"B_2", verdict_json(cpd.b2)},
            {"B_4", verdict_json(cpd.b4)},
            {"outside", cpd.outside}};
  });
  run.section("measure", [&]() -> json {
    json j{{"A", qclass::a_values(q)}, {"a_formula_gap", qclass::a_formula_gap(q, w)}};
    if (!cpd.verdict.holds()) {
      j["skipped"] = "not CPD";
      return j;
    }
    const std::size_t u = std::min<std::size_t>(r.truncation, 12);
    const auto mr = rep::recover_M(q.op, u, w, cfg);
    const auto qm = qclass::qclass_M(q, mr.M.dim(), cfg);
    double gap = 0.0;
    for (std::size_t n = 0; n <= u; ++n) gap = std::max(gap, rel_gap(qm.M.moment(n), mr.moments[n]));
    j["M"] = measure_json(qm.M);
    j["A_psd"] = verdict_json(qm.a_psd);
    j["recover_M_gap"] = gap;
    j["tolerance"] = mr.bound;
    return j;
  });
  run.section("subnormal_region", [&]() -> json {
    return {{"verdict", verdict_json(sub.verdict)}, {"cpd_only_pairs", sub.gap}};
  });
}

}  // namespace

void AnalysisRequest::validate() const {
  tolerances.validate();
  if (truncation < 4) throw Error(ErrorCode::parse, "truncation must be >= 4");
  switch (kind) {
    case Kind::sequence:
      if (rule.empty()) {
        if (values.size() < truncation + 1) {
          throw Error(ErrorCode::parse, "sequence needs truncation + 1 values (have " +
                                            std::to_string(values.size()) + ")");
        }
      } else if (rule != "power" && rule != "theta") {
        throw Error(ErrorCode::parse, "unknown sequence rule \"" + rule + "\"");
      } else if (rule == "theta" && (param == 1.0 || param == 0.0)) {
        throw Error(ErrorCode::parse, "theta rule needs theta != 0, 1");
      }
      break;
    case Kind::dense_operator:
      if (matrix.rows() == 0 || matrix.rows() != matrix.cols()) {
        throw Error(ErrorCode::parse, "matrix must be square and nonempty");
      }
      break;
    case Kind::weighted_shift: {
      static const std::set<std::string> fams{"isometry", "two_isometry", "three_isometry",
                                              "wab", "explicit"};
      if (fams.count(family) == 0) {
        throw Error(ErrorCode::parse, "unknown shift family \"" + family + "\"");
      }
      if (window < truncation + 4) {
        throw Error(ErrorCode::parse, "window must be >= truncation + 4 for shifts");
      }
      break;
    }
    case Kind::qclass_pair:
      if (s.empty() || s.size() != t.size()) {
        throw Error(ErrorCode::parse, "s and t must be nonempty and of equal length");
      }
      if (window < truncation + 4) {
        throw Error(ErrorCode::parse, "window must be >= truncation + 4 for qclass pairs");
      }
      break;
  }
  const auto& allowed = analyses_for(kind);
  for (const auto& a : analyses) {
    if (a != "all" && std::find(allowed.begin(), allowed.end(), a) == allowed.end()) {
      throw Error(ErrorCode::parse, "analysis \"" + a + "\" not available for " +
                                        std::string(to_string(kind)));
    }
  }
}

AnalysisRequest parse_request(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, "byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object()) parse_fail("/", "request must be an object");
  if (!j.contains("kind")) parse_fail("/kind", "missing discriminator");
  AnalysisRequest r;
  const std::string kind = to_str(j["kind"], "/kind");
  if (kind == "sequence") r.kind = Kind::sequence;
  else if (kind == "dense_operator") r.kind = Kind::dense_operator;
  else if (kind == "weighted_shift") r.kind = Kind::weighted_shift;
  else if (kind == "qclass_pair") r.kind = Kind::qclass_pair;
  else parse_fail("/kind", "unknown kind \"" + kind + "\"");

  bool explicit_window = false;
  bool explicit_truncation = false;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    const std::string at = "/" + k;
    if (k == "kind") continue;
    if (k == "label") r.label = to_str(v, at);
    else if (k == "values") r.values = to_list(v, at);
    else if (k == "rule") r.rule = to_str(v, at);
    else if (k == "param") r.param = to_number(v, at);
    else if (k == "param_sign") r.param_sign = to_number(v, at);
    else if (k == "matrix") {
      if (!v.is_array() || v.empty()) parse_fail(at, "expected a nonempty array of rows");
      const std::size_t n = v.size();
      r.matrix = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        const std::string ri = at + "/" + std::to_string(i);
        if (!v[i].is_array() || v[i].size() != n) parse_fail(ri, "row length must equal row count");
        for (std::size_t c = 0; c < n; ++c) {
          r.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
              to_complex(v[i][c], ri + "/" + std::to_string(c));
        }
      }
    } else if (k == "family") r.family = to_str(v, at);
    else if (k == "a") r.a = to_number(v, at);
    else if (k == "b") r.b = to_number(v, at);
    else if (k == "head") r.head = to_list(v, at);
    else if (k == "tail") r.tail = to_number(v, at);
    else if (k == "s") r.s = to_list(v, at);
    else if (k == "t") r.t = to_list(v, at);
    else if (k == "truncation") {
      r.truncation = to_unsigned(v, at);
      explicit_truncation = true;
    }
    else if (k == "window") {
      r.window = to_unsigned(v, at);
      explicit_window = true;
    } else if (k == "seed") r.seed = to_unsigned(v, at);
    else if (k == "random_probes") r.random_probes = to_unsigned(v, at);
    else if (k == "tolerances") {
      if (!v.is_object()) parse_fail(at, "expected an object");
      for (auto t = v.begin(); t != v.end(); ++t) {
        const std::string ta = at + "/" + t.key();
        if (t.key() == "psd_tol") r.tolerances.psd_tol = to_number(t.value(), ta);
        else if (t.key() == "rank_tol") r.tolerances.rank_tol = to_number(t.value(), ta);
        else if (t.key() == "atom_merge_tol") r.tolerances.atom_merge_tol = to_number(t.value(), ta);
        else parse_fail(ta, "unknown field");
      }
    } else if (k == "analyses") {
      if (!v.is_array()) parse_fail(at, "expected an array of names");
      r.analyses.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        r.analyses.push_back(to_str(v[i], at + "/" + std::to_string(i)));
      }
    } else {
      parse_fail(at, "unknown field");
    }
  }
  if (!explicit_truncation && r.kind == Kind::sequence && r.rule.empty() && !r.values.empty()) {
    r.truncation = r.values.size() - 1;
  }
  if (!explicit_window) r.window = r.truncation + 8;
  try {
    r.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::parse, e.what());
  }
  return r;
}

json request_to_json(const AnalysisRequest& r) {
  json j{{"kind", to_string(r.kind)},
         {"label", r.label},
         {"truncation", r.truncation},
         {"window", r.window},
         {"seed", r.seed},
         {"random_probes", r.random_probes},
         {"tolerances", tolerances_json(r.tolerances)},
         {"analyses", r.analyses}};
  switch (r.kind) {
    case Kind::sequence:
      if (r.rule.empty()) {
        j["values"] = r.values;
      } else {
        j["rule"] = r.rule;
        j["param"] = r.param;
        j["param_sign"] = r.param_sign;
      }
      break;
    case Kind::dense_operator: {
      json rows = json::array();
      for (Eigen::Index i = 0; i < r.matrix.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < r.matrix.cols(); ++c) {
          const cplx z = r.matrix(i, c);
          if (z.imag() == 0.0) row.push_back(z.real());
          else row.push_back({{"re", z.real()}, {"im", z.imag()}});
        }
        rows.push_back(row);
      }
      j["matrix"] = rows;
      break;
    }
    case Kind::weighted_shift:
      j["family"] = r.family;
      if (r.family == "wab") {
        j["a"] = r.a;
        j["b"] = r.b;
      } else if (r.family == "explicit") {
        j["head"] = r.head;
        j["tail"] = r.tail;
      }
      break;
    case Kind::qclass_pair:
      j["s"] = r.s;
      j["t"] = r.t;
      break;
  }
  return j;
}

const std::vector<std::string>& gallery_names() {
  static const std::vector<std::string> names{
      "at91shift", "diagsub",    "isometry",      "nilpotent3iso", "qclass_disk",
      "qclass_out", "qclass_strip", "quasinil",   "squares",       "tensor5iso",
      "thetaseq",  "twoiso",     "wa1",           "waa",           "wab"};
  return names;
}

AnalysisRequest gallery(const std::string& name) {
  AnalysisRequest r;
  r.label = name;
  r.window = r.truncation + 8;
  auto shift = [&](const std::string& fam, double a = 0.0, double b = 0.0) {
    r.kind = Kind::weighted_shift;
    r.family = fam;
    r.a = a;
    r.b = b;
  };
  auto dense = [&](Matrix m) {
    r.kind = Kind::dense_operator;
    r.matrix = std::move(m);
  };
  auto pair = [&](double s, double t) {
    r.kind = Kind::qclass_pair;
    r.s = {s};
    r.t = {t};
  };
  Matrix n2(2, 2);
  n2 << 1.0, 1.0, 0.0, 1.0;
  if (name == "nilpotent3iso") {
    dense(n2);
  } else if (name == "tensor5iso") {
    dense(op::tensor(op::LinearOperator::dense(n2), op::LinearOperator::dense(n2)).matrix());
    r.random_probes = 64;
  } else if (name == "at91shift") {
    shift("three_isometry");
  } else if (name == "wab") {
    shift("wab", 4.0, 2.0);
  } else if (name == "wa1") {
    shift("wab", 0.25, 1.0);
  } else if (name == "waa") {
    shift("wab", 2.0, 2.0);
  } else if (name == "isometry") {
    shift("isometry");
  } else if (name == "twoiso") {
    shift("two_isometry");
  } else if (name == "diagsub") {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 0.3;
    m(1, 1) = 0.9;
    dense(m);
  } else if (name == "quasinil") {
    Matrix m(2, 2);
    m << 0.3, 1.0, 0.0, 0.3;
    dense(m);
  } else if (name == "thetaseq") {
    r.kind = Kind::sequence;
    r.rule = "theta";
    r.param = 0.7;
  } else if (name == "squares") {
    r.kind = Kind::sequence;
    r.rule = "power";
    r.param = 2.0;
  } else if (name == "qclass_disk") {
    pair(0.6, 0.7);
  } else if (name == "qclass_out") {
    pair(0.9, 0.9);
  } else if (name == "qclass_strip") {
    pair(1.5, 7.0);
  } else {
    std::string valid;
    for (const auto& g : gallery_names()) valid += (valid.empty() ? "" : ", ") + g;
    throw Error(ErrorCode::domain, "unknown gallery name \"" + name + "\"; valid: " + valid);
  }
  r.validate();
  return r;
}

Report run(const AnalysisRequest& r) {
  r.validate();
  Report rep;
  rep.doc["schema_version"] = kSchemaVersion;
  rep.doc["subject"] = {{"kind", to_string(r.kind)}, {"label", r.label}};
  rep.doc["analyses"] = json::object();
  rep.doc["provenance"] = {
      {"seed", r.seed},
      {"truncation", r.truncation},
      {"window", r.window},
      {"random_probes", r.random_probes},
      {"tolerances", tolerances_json(r.tolerances)},
      {"versions",
       {{"cpd", kVersion},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION)}}},
      {"request", request_to_json(r)}};
  switch (r.kind) {
    case Kind::sequence: run_sequence(r, rep); break;
    case Kind::dense_operator:
    case Kind::weighted_shift: run_operator(r, rep); break;
    case Kind::qclass_pair: run_qclass(r, rep); break;
  }
  rep.doc["inconclusive"] = rep.inconclusive;
  return rep;
}

std::string render_json(const Report& r) { return r.doc.dump(2) + "\n"; }

namespace {

void text_verdicts(std::ostringstream& os, const json& j, const std::string& path) {
  if (j.is_object()) {
    if (j.contains("status") && j["status"].is_string()) {
      os << "  " << path << ": " << j["status"].get<std::string>();
      if (j.contains("note") && !j["note"].get<std::string>().empty()) {
        os << " (" << j["note"].get<std::string>() << ")";
      }
      os << "\n";
      return;
    }
    if (j.contains("error")) {
      os << "  " << path << ": error " << j["error"]["code"].get<std::string>() << ": "
         << j["error"]["message"].get<std::string>() << "\n";
      return;
    }
    if (j.contains("skipped")) {
      os << "  " << path << ": skipped (" << j["skipped"].get<std::string>() << ")\n";
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.value().is_object() || it.value().is_array()) {
        text_verdicts(os, it.value(), path.empty() ? it.key() : path + "." + it.key());
      }
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (j[i].is_object()) text_verdicts(os, j[i], path + "[" + std::to_string(i) + "]");
    }
  }
}

}  // namespace

std::string render_text(const Report& r) {
  std::ostringstream os;
  const json& d = r.doc;
  os << "subject: " << d["subject"]["kind"].get<std::string>();
  if (!d["subject"]["label"].get<std::string>().empty()) {
    os << " \"" << d["subject"]["label"].get<std::string>() << "\"";
  }
  if (d["subject"].contains("operator")) os << " (" << d["subject"]["operator"].get<std::string>() << ")";
  os << "\n";
  os << "headline:\n";
  for (auto it = d["headline"].begin(); it != d["headline"].end(); ++it) {
    os << "  " << it.key() << ": " << it.value().dump() << "\n";
  }
  os << "analyses:\n";
  for (auto it = d["analyses"].begin(); it != d["analyses"].end(); ++it) {
    std::ostringstream sub;
    text_verdicts(sub, it.value(), it.key());
    const std::string s = sub.str();
    os << (s.empty() ? "  " + it.key() + ": done\n" : s);
  }
  const json& p = d["provenance"];
  os << "provenance: seed " << p["seed"].dump() << ", truncation " << p["truncation"].dump()
     << ", window " << p["window"].dump() << ", psd_tol " << p["tolerances"]["psd_tol"].dump()
     << ", rank_tol " << p["tolerances"]["rank_tol"].dump() << ", schema "
     << d["schema_version"].get<std::string>() << "\n";
  if (r.inconclusive) os << "note: at least one analysis was numerically inconclusive\n";
  return os.str();
}

}  // namespace cpd::app
