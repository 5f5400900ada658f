#pragma once

#include "bugforge/ast.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace bugforge {

/// Parses one preprocessed C translation unit. Constructs outside the
/// supported subset become skipped regions or Opaque statements; parsing
/// never fails. When braces or parentheses cannot be matched across the
/// whole file, the file becomes a single skipped region and `unbalanced`
/// is set.
TranslationUnit parse_unit(std::string source_text, std::filesystem::path path);

/// Reads a file as raw bytes (UTF-8 and Latin-1 are both passed through).
std::string read_file(const std::filesystem::path &path);

struct SubsetIssue {
  SourceSpan span;
  std::string reason;
};

/// Every skipped region and Opaque construct of `unit`, in file order. An
/// empty result means the unit is entirely inside the supported subset.
std::vector<SubsetIssue> supported_subset_report(const TranslationUnit &unit);

// Reasons reported for Opaque constructs.
inline constexpr const char *kReasonGoto = "goto: modeled as opaque CFG edge";
inline constexpr const char *kReasonAsm = "inline asm: modeled as opaque statement";
inline constexpr const char *kReasonSetjmp = "setjmp/longjmp: modeled as opaque statement";
inline constexpr const char *kReasonVarargs = "varargs access: modeled as opaque statement";
inline constexpr const char *kReasonStmtExpr = "statement expression: opaque";
inline constexpr const char *kReasonUnparsed = "unparsed statement";

} // namespace bugforge
