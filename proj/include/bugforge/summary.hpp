#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bugforge {

enum class ParamStatus { No, Yes, Maybe };
enum class SourceKind { File, Network, Argv, Stdin, Env };
enum class VulnClass { BufferLength, FormatString, AllocSize, OutboundLeak };

const char *to_string(ParamStatus s);
const char *to_string(SourceKind k);
const char *to_string(VulnClass c);
std::optional<SourceKind> parse_source_kind(std::string_view s);
std::optional<VulnClass> parse_vuln_class(std::string_view s);

// Pseudo parameter indices.
inline constexpr int kReturnValue = -1;
inline constexpr int kVariadicArgs = -2; // every argument past the declared parameters

struct Transfer {
  int from = 0; // parameter index, kReturnValue or kVariadicArgs
  int to = 0;   // parameter index or kReturnValue
  bool operator==(const Transfer &) const = default;
  auto operator<=>(const Transfer &) const = default;
};

struct SinkSpec {
  int param = 0;
  VulnClass vuln_class = VulnClass::BufferLength;
  bool operator==(const SinkSpec &) const = default;
};

struct FunctionSummary {
  std::string name;
  bool external = false;
  std::vector<ParamStatus> param_modified;
  std::vector<Transfer> param_transfers; // data moves from `from` into `to`
  std::vector<int> returns_param_data;   // parameters flowing into the return value
  bool returns_value = true;
  bool variadic = false;
  ParamStatus variadic_modified = ParamStatus::No;
  std::optional<SourceKind> source_kind;
  std::vector<int> source_args; // controlled positions: index, kReturnValue or kVariadicArgs
  std::vector<SinkSpec> sinks;
  bool terminal = false;
  bool confident = true; // false when derived with defaulted callee summaries

  /// Modification status of argument `index`, including variadic arguments.
  [[nodiscard]] ParamStatus status(int index) const;
  /// True if argument `index` is a controlled position of this source.
  [[nodiscard]] bool controls(int index) const;
  /// Parameters (or kVariadicArgs) whose data moves into argument `index` or into the return value.
  [[nodiscard]] std::vector<int> transfers_into(int index) const;
  [[nodiscard]] std::optional<SinkSpec> sink_spec() const {
    return sinks.empty() ? std::nullopt : std::optional<SinkSpec>(sinks.front());
  }
  bool operator==(const FunctionSummary &) const = default;
};

using SummaryMap = std::map<std::string, FunctionSummary, std::less<>>;

struct SummaryParseError : std::runtime_error {
  SummaryParseError(const std::string &origin, int line, const std::string &what)
      : std::runtime_error(origin + ":" + std::to_string(line) + ": " + what), line(line) {}
  int line;
};

struct SummaryLoad {
  SummaryMap summaries;
  std::vector<std::string> warnings;
};

/// Parses summary text. Throws SummaryParseError; duplicate names keep the
/// last entry and add a warning.
SummaryLoad parse_summaries(std::string_view text, const std::string &origin = "<summaries>");
SummaryLoad load_external_summaries(const std::filesystem::path &path);
/// Merges `more` over `base`; later entries win.
void merge_summaries(SummaryLoad &base, SummaryLoad more);

/// Renders one summary in the file format.
std::string format_summary(const FunctionSummary &s);

} // namespace bugforge
