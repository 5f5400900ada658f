#pragma once

#include "bugforge/instrument.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bugforge {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char *kPathCountCaveat =
    "dataflow_paths counts distinct hop sequences and can be seen as an upper bound on distinct vulnerable flows";

struct Location {
  std::string path; // physical file relative to the corpus root
  std::string file; // logical file named by line markers
  int line = 0;
  int column = 0;
  bool operator==(const Location &) const = default;
};

Location locate(const CodePropertyGraph &graph, NodeId id, const std::filesystem::path &root);
nlohmann::json loc_json(const Location &l);

struct GuardDigest {
  Location location;
  std::string classification;
  std::string polarity;
  bool bugdoorable = false;
  std::string skip_reason; // empty when bugdoorable
  bool operator==(const GuardDigest &) const = default;
};

struct PairDigest {
  Location source;
  std::string source_callee;
  std::string source_kind;
  int source_arg = 0;
  Location sink;
  std::string sink_callee;
  int sink_arg = 0;
  std::string vuln_class;
  std::size_t paths = 0;
  std::vector<GuardDigest> guards;
  bool operator==(const PairDigest &) const = default;
};

struct TruncationFlag {
  Location sink;
  std::string callee;
  std::string reason;
  bool operator==(const TruncationFlag &) const = default;
};

struct PhaseTimings {
  double importing = 0;     // parsing and graph construction
  double summarizing = 0;   // call graph, summaries, graph augmentation
  double finding_paths = 0; // source to sink tracing
  double guards = 0;        // corridors and security checks
  bool operator==(const PhaseTimings &) const = default;
};

struct CorpusReport {
  int schema_version = kSchemaVersion;
  std::string corpus;
  std::size_t files = 0;
  std::size_t lines_of_code = 0;
  std::size_t skipped_regions = 0;
  std::size_t sources_found = 0;
  std::size_t sinks_found = 0;
  std::size_t unique_pairs = 0;
  std::size_t dataflow_paths = 0;
  std::vector<TruncationFlag> truncation_flags;
  std::vector<PairDigest> per_pair;
  std::vector<std::string> diagnostics;
  std::optional<PhaseTimings> timings;
  std::string caveat = kPathCountCaveat;
  bool operator==(const CorpusReport &) const = default;
};

/// Non-blank lines that are not entirely comment.
std::size_t count_loc(std::string_view text);

struct PairGuards {
  const SourceSinkPair *pair = nullptr;
  std::vector<GuardSite> guards;
};

CorpusReport compute_metrics(const CodePropertyGraph &graph, const TaintResult &taint,
                             const std::vector<PairGuards> &guards, const std::filesystem::path &root,
                             std::optional<PhaseTimings> timings = std::nullopt);

nlohmann::json to_json(const CorpusReport &r);
CorpusReport report_from_json(const nlohmann::json &j);

nlohmann::json ground_truth_json(const CodePropertyGraph &graph, const GroundTruthRecord &record,
                                 const std::filesystem::path &root);

/// Serialized form shared by every writer: sorted keys, two-space indent, trailing newline.
std::string dump_json(const nlohmann::json &j);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path &path, const std::string &bytes);

} // namespace bugforge
