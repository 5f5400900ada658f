#pragma once

#include "bugforge/taint.hpp"

#include <set>
#include <string>
#include <vector>

namespace bugforge {

/// Control flow between two consecutive hops, inside one function.
struct CorridorSegment {
  int hop = 0;                              // spans hops[hop] -> hops[hop + 1]
  std::string function;
  std::string var;                          // overarching variable, valid in `function`
  NodeId from = kNoNode, to = kNoNode;      // endpoints of every sequence
  std::vector<std::vector<NodeId>> sequences;
  bool truncated = false;
};

struct ControlFlowCorridor {
  std::vector<CorridorSegment> segments;
  std::size_t total_enumerated = 0;
  bool truncated = false;

  /// Every node on some sequence.
  [[nodiscard]] std::set<NodeId> nodes() const;
  /// Shortest sequence of every segment, concatenated.
  [[nodiscard]] std::vector<NodeId> shortest(const CodePropertyGraph &graph) const;
};

/// Statements of the shortest corridor: synthetic nodes, repeats and the sink call removed.
std::vector<NodeId> corridor_statements(const CodePropertyGraph &graph, const ControlFlowCorridor &corridor,
                                        const DataFlowPath &path);

enum class GuardClass { AbortingCheck, NonAbortingCheck, UnrecognizedMechanism, Sanitization };
enum class AbortEvidence { ReturnStmt, ExitCall, ErrorValueSet, SignalRaise };
enum class Polarity { MustBeFalseToPass, MustBeTrueToPass, Unknown };

const char *to_string(GuardClass c);
const char *to_string(AbortEvidence e);
const char *to_string(Polarity p);

struct GuardSite {
  NodeId condition_node = kNoNode; // the store node for sanitizations
  std::string function;
  std::string guarded_var;  // overarching variable of the segment
  std::string derived_var;  // variable actually used by the condition (may equal guarded_var)
  int segment = 0;          // index into ControlFlowCorridor::segments
  NodeId segment_target = kNoNode;
  std::vector<NodeId> downstream; // later corridor endpoints in the same function
  GuardClass classification = GuardClass::UnrecognizedMechanism;
  std::set<AbortEvidence> abort_evidence;
  Polarity polarity = Polarity::Unknown;
  bool gating = false; // the sink side lies inside the passing branch

  bool operator==(const GuardSite &) const = default;
};

ControlFlowCorridor enumerate_corridor(const CodePropertyGraph &graph, const DataFlowPath &path,
                                       std::size_t limit = kDefaultPathLimit);

/// Conditions on the corridor that use the overarching variable or data derived from it.
std::vector<GuardSite> find_security_mechanisms(const CodePropertyGraph &graph, const ControlFlowCorridor &corridor);

GuardSite classify_guard(const CodePropertyGraph &graph, GuardSite site);

/// Null-byte truncation stores into an overarched buffer.
std::vector<GuardSite> detect_sanitizations(const CodePropertyGraph &graph, const ControlFlowCorridor &corridor);

struct PathGuards {
  ControlFlowCorridor corridor;
  std::vector<GuardSite> guards;        // classified, ordered by node
  std::vector<GuardSite> sanitizations;
};

PathGuards analyze_guards(const CodePropertyGraph &graph, const DataFlowPath &path, std::size_t limit = kDefaultPathLimit);

} // namespace bugforge
