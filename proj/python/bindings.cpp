#include "bugforge/pipeline.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace bugforge;

namespace {

PyObject *g_error = nullptr;

AnalyzeOptions make_options(const std::vector<std::string> &summaries, int max_depth, std::size_t max_paths,
                            const std::vector<std::string> &sink_classes, bool timings) {
  AnalyzeOptions o;
  for (const auto &s : summaries)
    o.summary_files.emplace_back(s);
  o.trace.max_depth = max_depth;
  o.trace.max_paths = max_paths;
  o.timings = timings;
  for (const auto &c : sink_classes) {
    auto v = parse_vuln_class(c);
    if (!v)
      throw PipelineError(exit_code::kFailure, "unknown sink class '" + c + "'");
    o.sink_classes.insert(*v);
  }
  return o;
}

std::string analyze(const std::string &corpus, const std::vector<std::string> &summaries, int max_depth,
                    std::size_t max_paths, const std::vector<std::string> &sink_classes, bool timings) {
  Analysis a = analyze_corpus(corpus, make_options(summaries, max_depth, max_paths, sink_classes, timings));
  return dump_json(to_json(a.report));
}

std::string list_sites(const std::string &corpus, const std::vector<std::string> &summaries, int max_depth,
                       std::size_t max_paths, const std::vector<std::string> &sink_classes) {
  Analysis a = analyze_corpus(corpus, make_options(summaries, max_depth, max_paths, sink_classes, false));
  std::vector<SkippedSite> skipped;
  std::vector<Candidate> candidates = find_candidates(a, &skipped);
  return dump_json(candidates_json(a, candidates, skipped));
}

std::string insert(const std::string &corpus, const std::string &out, std::uint64_t seed, int count,
                   const std::vector<std::string> &summaries, int max_depth, std::size_t max_paths,
                   const std::vector<std::string> &sink_classes) {
  nlohmann::json written = nlohmann::json::array();
  if (count <= 0)
    return dump_json(written);
  Analysis a = analyze_corpus(corpus, make_options(summaries, max_depth, max_paths, sink_classes, false));
  std::vector<Candidate> candidates = find_candidates(a);
  for (int i = 0; i < count; ++i) {
    std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    Variant v = make_variant(a, candidates, s);
    fs::path dir = fs::path(out) / std::to_string(s);
    write_variant(a, v, dir);
    written.push_back({{"seed", s}, {"dir", dir.generic_string()}, {"ground_truth", v.ground_truth}});
  }
  return dump_json(written);
}

std::string verify(const std::string &variant, const std::string &inputs, const std::string &compiler,
                   const std::optional<std::string> &harness, const std::optional<std::string> &original,
                   bool sanitize, int timeout) {
  VerifyOptions o;
  o.compiler = compiler;
  if (harness)
    o.harness = *harness;
  if (original)
    o.original = *original;
  o.sanitize = sanitize;
  o.timeout_seconds = timeout;
  return dump_json(verdicts_json(verify_variant(variant, inputs, o)));
}

} // namespace

PYBIND11_MODULE(_bugforge, m) {
  m.doc() = "Source to sink analysis and bug insertion for C corpora";

  g_error = (new py::exception<PipelineError>(m, "BugforgeError"))->ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p)
        std::rethrow_exception(p);
    } catch (const PipelineError &e) {
      py::object exc = py::reinterpret_borrow<py::object>(g_error)(e.what());
      exc.attr("code") = e.code;
      PyErr_SetObject(g_error, exc.ptr());
    }
  });

  m.attr("EXIT_EMPTY_CORPUS") = exit_code::kEmptyCorpus;
  m.attr("EXIT_SUMMARY_PARSE") = exit_code::kSummaryParse;
  m.attr("EXIT_NOTHING_BUGDOORABLE") = exit_code::kNothingBugdoorable;
  m.attr("EXIT_BUILD_FAILURE") = exit_code::kBuildFailure;
  m.attr("SCHEMA_VERSION") = kSchemaVersion;

  const TraceConfig defaults;
  m.def("analyze", &analyze, py::arg("corpus"), py::arg("summaries") = std::vector<std::string>{},
        py::arg("max_depth") = defaults.max_depth, py::arg("max_paths") = defaults.max_paths,
        py::arg("sink_classes") = std::vector<std::string>{}, py::arg("timings") = false,
        py::call_guard<py::gil_scoped_release>(), "Report JSON for a corpus directory.");
  m.def("list_sites", &list_sites, py::arg("corpus"), py::arg("summaries") = std::vector<std::string>{},
        py::arg("max_depth") = defaults.max_depth, py::arg("max_paths") = defaults.max_paths,
        py::arg("sink_classes") = std::vector<std::string>{}, py::call_guard<py::gil_scoped_release>());
  m.def("insert", &insert, py::arg("corpus"), py::arg("out"), py::arg("seed") = 1, py::arg("count") = 1,
        py::arg("summaries") = std::vector<std::string>{}, py::arg("max_depth") = defaults.max_depth,
        py::arg("max_paths") = defaults.max_paths, py::arg("sink_classes") = std::vector<std::string>{},
        py::call_guard<py::gil_scoped_release>(), "Writes out/<seed+i>/ variants; returns their ground truth.");
  m.def("verify", &verify, py::arg("variant"), py::arg("inputs"), py::arg("compiler") = "gcc",
        py::arg("harness") = std::nullopt, py::arg("original") = std::nullopt, py::arg("sanitize") = true,
        py::arg("timeout") = 20, py::call_guard<py::gil_scoped_release>());
}
