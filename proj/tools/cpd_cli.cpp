// Batch front end: read a request (file or gallery fixture), run it and print
// the report.  Exit codes: 0 completed, 2 input error, 3 inconclusive.

#include "cpd/cpd.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

constexpr int kExitInput = 2;
constexpr int kExitInconclusive = 3;

int fail(cpd_status st, const std::string& context) {
  std::cerr << "error: " << context << ": " << cpd_status_name(st) << ": "
            << cpd_last_error() << "\n";
  return st == CPD_ERR_INCONCLUSIVE || st == CPD_ERR_INTERNAL ? kExitInconclusive
                                                               : kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional positive definiteness analyses"};
  std::string input;
  std::string gallery;
  std::optional<std::size_t> truncation;
  std::optional<std::size_t> window;
  std::optional<double> tol_psd;
  std::optional<double> tol_rank;
  std::optional<std::uint64_t> seed;
  std::string format = "json";
  std::string output;
  bool list = false;

  auto* in = app.add_option("--input", input, "request file (JSON)")->check(CLI::ExistingFile);
  auto* gal = app.add_option("--gallery", gallery, "named example fixture");
  in->excludes(gal);
  app.add_option("--truncation", truncation, "truncation index N");
  app.add_option("--window", window, "positions per slot for banded operators");
  app.add_option("--tol-psd", tol_psd, "PSD tolerance");
  app.add_option("--tol-rank", tol_rank, "numerical rank tolerance");
  app.add_option("--seed", seed, "seed for random probes");
  app.add_option("--format", format, "report format")->check(CLI::IsMember({"json", "text"}));
  app.add_option("--output", output, "write the report here instead of stdout");
  app.add_flag("--list-gallery", list, "print fixture names and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  if (list) {
    for (std::size_t i = 0; i < cpd_gallery_count(); ++i) std::cout << cpd_gallery_name(i) << "\n";
    return 0;
  }
  if (input.empty() && gallery.empty()) {
    std::cerr << "error: one of --input or --gallery is required\n";
    return kExitInput;
  }

  cpd_request* req = nullptr;
  cpd_status st;
  if (!input.empty()) {
    std::ifstream f(input);
    std::stringstream buf;
    buf << f.rdbuf();
    st = cpd_request_parse(buf.str().c_str(), &req);
    if (st != CPD_OK) return fail(st, input);
  } else {
    st = cpd_request_gallery(gallery.c_str(), &req);
    if (st != CPD_OK) return fail(st, "gallery");
  }

  auto apply = [&](cpd_status s, const char* what) {
    if (s != CPD_OK && st == CPD_OK) {
      st = s;
      fail(s, what);
    }
  };
  if (truncation) apply(cpd_request_set_truncation(req, *truncation), "--truncation");
  if (window) apply(cpd_request_set_window(req, *window), "--window");
  if (tol_psd) apply(cpd_request_set_psd_tol(req, *tol_psd), "--tol-psd");
  if (tol_rank) apply(cpd_request_set_rank_tol(req, *tol_rank), "--tol-rank");
  if (seed) apply(cpd_request_set_seed(req, *seed), "--seed");
  if (st != CPD_OK) {
    cpd_request_free(req);
    return kExitInput;
  }

  cpd_report* rep = nullptr;
  st = cpd_run(req, &rep);
  cpd_request_free(req);
  if (st != CPD_OK) return fail(st, "run");

  const char* body = format == "json" ? cpd_report_json(rep) : cpd_report_text(rep);
  if (output.empty()) {
    std::cout << body;
  } else {
    std::ofstream f(output);
    f << body;
    if (!f) {
      std::cerr << "error: cannot write " << output << "\n";
      cpd_report_free(rep);
      return kExitInput;
    }
  }
  const int rc = cpd_report_inconclusive(rep) ? kExitInconclusive : 0;
  cpd_report_free(rep);
  return rc;
}
