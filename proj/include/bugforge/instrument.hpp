#pragma once

#include "bugforge/guards.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bugforge {

enum class InstrumentationClass {
  RemoveMechanism,
  SurroundAlwaysFalse,
  SurroundAlwaysTrue,
  ArithmeticInfluence,
  MoveToUnrelatedPath,
  SwapCheckAndSink,
  IntegerOverflowAntiPattern,
  FormatStringAntiPattern, // targets a latent printf("%s", x) sink, not a guard
};

const char *to_string(InstrumentationClass c);
std::optional<InstrumentationClass> parse_instrumentation_class(std::string_view s);

/// Always-false comparisons draw their constant from this table.
inline constexpr std::uint32_t kMagicConstants[] = {0xDEADC0DE, 0xCAFEBABE, 0x5EED5EED};

enum class SkipReason { NotSecurityCritical, NotUnderstood };
const char *to_string(SkipReason r);

struct Bugdoorability {
  bool bugdoorable = false;
  std::optional<SkipReason> reason;
  std::string detail;
};

Bugdoorability is_bugdoorable(const CodePropertyGraph &graph, const GuardSite &site);

/// Byte replacement in one physical file; an empty span inserts.
struct Rewrite {
  std::string file; // unit path as parsed
  std::size_t byte_start = 0, byte_end = 0;
  std::string replacement;
  int line = 0; // logical line of byte_start
  bool operator==(const Rewrite &) const = default;
};

struct InstrumentationPlan {
  InstrumentationClass cls = InstrumentationClass::RemoveMechanism;
  int variant_id = 0;
  std::string description;
  NodeId target_node = kNoNode; // guard condition or sink call
  std::vector<Rewrite> rewrites;  // one file, sorted, pairwise disjoint
  std::uint64_t rng_seed = 0;
  bool operator==(const InstrumentationPlan &) const = default;
};

struct ClassVariants {
  InstrumentationClass cls;
  int variants = 0;
};

/// Every concrete plan for a bugdoorable guard, classes in enum order.
/// `corridor` is the set of nodes on any corridor of the guarded pair.
std::vector<InstrumentationPlan> enumerate_plans(const CodePropertyGraph &graph, const GuardSite &site,
                                                 const SinkSite &sink, const std::set<NodeId> &corridor);

std::vector<ClassVariants> applicable_instrumentations(const CodePropertyGraph &graph, const GuardSite &site,
                                                       const SinkSite &sink, const std::set<NodeId> &corridor);

/// `printf("%s", x)` -> `printf(x)`; nullopt when the call is not such a pass-through.
std::optional<InstrumentationPlan> format_string_antipattern(const CodePropertyGraph &graph, const SinkSite &sink);

/// Applies rewrites to `text`, last span first.
std::string apply_rewrites(const std::string &text, const std::vector<Rewrite> &rewrites);

enum class ApplyError { None, SpanMismatch, ReparseFailure, NoCandidates };
const char *to_string(ApplyError e);

struct AppliedPlan {
  ApplyError error = ApplyError::None;
  InstrumentationPlan plan;
  std::string file;
  std::string rewritten_text;
  std::string original_snippet;  // bytes covered by the rewrites before
  std::string rewritten_snippet; // the same region after
  std::vector<int> rejected_variants; // indices into the candidate list that failed to re-parse
};

/// Seeded uniform choice over `candidates`, rewrite, and re-parse check.
/// `files` maps unit paths to their current bytes.
AppliedPlan choose_and_apply(const CodePropertyGraph &graph, const std::vector<InstrumentationPlan> &candidates,
                             std::uint64_t seed, const std::map<std::string, std::string> &files);

struct GroundTruthRecord {
  SourceSite source;
  SinkSite sink;
  std::vector<DataFlowPath> paths; // every path of the pair
  DataFlowPath chosen_path;
  std::optional<GuardSite> guard;
  InstrumentationPlan plan;
  std::string file;
  std::string original_snippet;
  std::string rewritten_snippet;
  VulnClass vuln_class = VulnClass::BufferLength;
};

} // namespace bugforge
