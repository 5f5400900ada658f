#pragma once

#include "bugforge/frontend.hpp"

#include <optional>

#include <algorithm>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#ifndef BUGFORGE_SOURCE_DIR
#error "BUGFORGE_SOURCE_DIR must point at the repository root"
#endif

namespace bugforge::test {

inline std::filesystem::path repo_root() { return BUGFORGE_SOURCE_DIR; }
inline std::filesystem::path running_corpus() { return repo_root() / "corpora" / "running" / "src"; }
inline std::filesystem::path fixtures_root() { return repo_root() / "corpora" / "fixtures"; }
inline std::filesystem::path glibc_summaries() { return repo_root() / "summaries" / "glibc.summ"; }

inline std::string running_example_text() { return read_file(running_corpus() / "running_example.c"); }

/// Fixture corpus directories (each holds a `src/` tree), sorted by name.
inline std::vector<std::filesystem::path> fixture_dirs() {
  std::vector<std::filesystem::path> out;
  for (const auto &e : std::filesystem::directory_iterator(fixtures_root()))
    if (e.is_directory())
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

/// (name, text) of every C file in the fixtures and the running example.
inline std::vector<std::pair<std::string, std::string>> fixture_texts() {
  std::vector<std::pair<std::string, std::string>> out;
  std::vector<std::filesystem::path> roots = fixture_dirs();
  roots.push_back(running_corpus().parent_path());
  for (const auto &root : roots) {
    std::vector<std::filesystem::path> files;
    for (const auto &e : std::filesystem::recursive_directory_iterator(root / "src"))
      if (e.path().extension() == ".c" || e.path().extension() == ".i")
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto &f : files)
      out.emplace_back(f.lexically_relative(repo_root()).generic_string(), read_file(f));
  }
  return out;
}

} // namespace bugforge::test

#include "bugforge/cpg.hpp"

namespace bugforge::test {

inline CodePropertyGraph graph_of(const std::string &text, const std::string &name = "t.c") {
  std::vector<TranslationUnit> units;
  units.push_back(parse_unit(text, name));
  return build_cpg(std::move(units));
}

/// First node of `function` starting on `line` (optionally of a given kind).
inline NodeId node_at(const CodePropertyGraph &g, const std::string &function, int line,
                      std::optional<NodeKind> kind = std::nullopt) {
  for (const auto &n : g.nodes)
    if (n.function == function && n.span.start_line == line && n.kind != NodeKind::Entry &&
        n.kind != NodeKind::Exit && (!kind || n.kind == *kind))
      return n.id;
  return kNoNode;
}

} // namespace bugforge::test
