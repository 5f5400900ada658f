#pragma once

#include "bugforge/report.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace bugforge {

/// Process exit codes of the command line driver.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kEmptyCorpus = 2;
inline constexpr int kSummaryParse = 3;
inline constexpr int kNothingBugdoorable = 4;
inline constexpr int kBuildFailure = 5;
} // namespace exit_code

struct PipelineError : std::runtime_error {
  PipelineError(int code, const std::string &what) : std::runtime_error(what), code(code) {}
  int code;
};

/// The bundled C library summaries.
std::string_view builtin_summaries();

struct AnalyzeOptions {
  std::vector<std::filesystem::path> summary_files; // merged over the built-in summaries, in order
  TraceConfig trace;
  std::set<VulnClass> sink_classes; // empty keeps every class
  std::size_t corridor_limit = kDefaultPathLimit;
  bool timings = false;
};

struct AnalyzedPair {
  SourceSinkPair pair;
  std::vector<PathGuards> per_path;
  std::vector<GuardSite> guards; // distinct by condition node
  std::set<NodeId> corridor;     // every corridor node of every path
};

struct Analysis {
  std::filesystem::path root;
  std::vector<std::filesystem::path> files;  // relative to root, sorted
  std::map<std::string, std::string> texts;  // unit path -> bytes
  CodePropertyGraph graph;
  InterprocResult interproc;
  TaintResult taint;
  std::vector<AnalyzedPair> pairs;
  CorpusReport report;
  std::vector<std::string> summary_warnings;
};

/// Every `.c` and `.i` file under `root`, relative and sorted.
std::vector<std::filesystem::path> corpus_files(const std::filesystem::path &root);

/// Throws PipelineError with kEmptyCorpus or kSummaryParse.
Analysis analyze_corpus(const std::filesystem::path &root, const AnalyzeOptions &options = {});

/// A site the rewrite engine may target: a guard, or a format pass-through.
struct Candidate {
  std::size_t pair = 0; // index into Analysis::pairs, or into passthrough pairs when `format` is set
  bool format = false;
  std::optional<GuardSite> guard;
  SinkSite sink;
  SourceSite source;
  std::vector<DataFlowPath> paths;
  DataFlowPath chosen_path;
  std::vector<InstrumentationPlan> plans;
};

struct SkippedSite {
  GuardSite guard;
  SkipReason reason;
  std::string detail;
};

std::vector<Candidate> find_candidates(const Analysis &analysis, std::vector<SkippedSite> *skipped = nullptr);

/// {"bugdoorable": [...], "skipped": [...]} as printed by `list`.
nlohmann::json candidates_json(const Analysis &analysis, const std::vector<Candidate> &candidates,
                               const std::vector<SkippedSite> &skipped);

struct Variant {
  std::uint64_t seed = 0;
  GroundTruthRecord record;
  std::string file; // unit path of the rewritten file
  std::string rewritten_text;
  nlohmann::json ground_truth;
};

/// Picks a candidate and a plan from `seed`. Throws PipelineError.
Variant make_variant(const Analysis &analysis, const std::vector<Candidate> &candidates, std::uint64_t seed);

/// Mirrors the corpus into `dir` with the variant applied, plus ground_truth.json.
void write_variant(const Analysis &analysis, const Variant &variant, const std::filesystem::path &dir);

enum class Verdict { BenignIdentical, DivergenceDetected, SinkViolation };
const char *to_string(Verdict v);

struct RunOutcome {
  int exit_status = 0;
  int signal = 0;
  bool timed_out = false;
  bool memory_error = false;
  std::string stdout_text;
  bool operator==(const RunOutcome &) const = default;
};

struct VerifyOptions {
  std::string compiler = "gcc";
  std::optional<std::filesystem::path> harness; // extra sources linked into both builds
  std::optional<std::filesystem::path> original; // defaults to the corpus named in ground_truth.json
  bool sanitize = true;
  int timeout_seconds = 20;
};

struct InputVerdict {
  std::string input;
  Verdict verdict = Verdict::BenignIdentical;
  RunOutcome original, variant;
};

/// Builds the original corpus and the variant, runs both on every input.
/// Throws PipelineError with kBuildFailure and the compiler output.
std::vector<InputVerdict> verify_variant(const std::filesystem::path &variant_dir, const std::filesystem::path &inputs_dir,
                                         const VerifyOptions &options = {});

nlohmann::json verdicts_json(const std::vector<InputVerdict> &verdicts);

/// Compiles `sources` into `binary`; returns the compiler output and throws PipelineError on failure.
std::string build_program(const std::vector<std::filesystem::path> &sources, const std::filesystem::path &binary,
                          const VerifyOptions &options);
RunOutcome run_program(const std::filesystem::path &binary, const std::filesystem::path &input, const VerifyOptions &options);
Verdict judge(const RunOutcome &original, const RunOutcome &variant);

/// Runs `compiler -E` over every `.c` file under `in`, writing `.i` files to the mirrored path under `out`.
std::vector<std::filesystem::path> preprocess_corpus(const std::filesystem::path &in, const std::filesystem::path &out,
                                                     const std::string &compiler,
                                                     const std::vector<std::string> &flags = {});

} // namespace bugforge
