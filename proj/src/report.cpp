#include "bugforge/report.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <unistd.h>

namespace bugforge {

using nlohmann::json;

Location locate(const CodePropertyGraph &graph, NodeId id, const std::filesystem::path &root) {
  const CpgNode &n = graph.node(id);
  std::filesystem::path p = graph.unit_of(id).path;
  std::filesystem::path rel = root.empty() ? p : p.lexically_relative(root);
  if (rel.empty() || rel.native().rfind("..", 0) == 0)
    rel = p;
  return {rel.generic_string(), n.span.file, n.span.start_line, n.span.start_col};
}

std::size_t count_loc(std::string_view text) {
  std::size_t count = 0;
  bool in_block = false;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t end = text.find('\n', i);
    if (end == std::string_view::npos)
      end = text.size();
    bool code = false;
    char quote = 0;
    for (std::size_t k = i; k < end; ++k) {
      char c = text[k];
      if (in_block) {
        if (c == '*' && k + 1 < end && text[k + 1] == '/') {
          in_block = false;
          ++k;
        }
        continue;
      }
      if (quote) {
        if (c == '\\')
          ++k;
        else if (c == quote)
          quote = 0;
        continue;
      }
      if (c == '/' && k + 1 < end && text[k + 1] == '/')
        break;
      if (c == '/' && k + 1 < end && text[k + 1] == '*') {
        in_block = true;
        ++k;
        continue;
      }
      if (c == '"' || c == '\'')
        quote = c;
      if (!std::isspace(static_cast<unsigned char>(c)))
        code = true;
    }
    count += code ? 1 : 0;
    i = end + 1;
  }
  return count;
}

CorpusReport compute_metrics(const CodePropertyGraph &graph, const TaintResult &taint,
                             const std::vector<PairGuards> &guards, const std::filesystem::path &root,
                             std::optional<PhaseTimings> timings) {
  CorpusReport r;
  r.corpus = root.generic_string();
  r.files = graph.units.size();
  for (const auto &u : graph.units) {
    r.lines_of_code += count_loc(u->source);
    r.skipped_regions += u->skipped_regions.size();
  }
  r.sources_found = taint.sources.size();
  r.sinks_found = taint.sinks.size();
  // per sink, the distinct sources reaching it
  std::map<SinkSite, std::set<SourceSite>> per_sink;
  for (const auto &p : taint.pairs)
    per_sink[p.sink].insert(p.source);
  for (const auto &[sink, sources] : per_sink)
    r.unique_pairs += sources.size();
  r.dataflow_paths = taint.paths.size();
  for (const auto &s : taint.truncated)
    r.truncation_flags.push_back({locate(graph, s.call_node, root), s.callee, "trace budget exhausted"});
  for (const auto &pg : guards) {
    const SourceSinkPair &p = *pg.pair;
    PairDigest d;
    d.source = locate(graph, p.source.call_node, root);
    d.source_callee = p.source.callee;
    d.source_kind = to_string(p.source.source_kind);
    d.source_arg = p.source.controlled_arg;
    d.sink = locate(graph, p.sink.call_node, root);
    d.sink_callee = p.sink.callee;
    d.sink_arg = p.sink.sensitive_arg_index;
    d.vuln_class = to_string(p.sink.vuln_class);
    d.paths = p.paths.size();
    for (const auto &g : pg.guards) {
      Bugdoorability b = is_bugdoorable(graph, g);
      d.guards.push_back({locate(graph, g.condition_node, root), to_string(g.classification), to_string(g.polarity),
                          b.bugdoorable, b.reason ? to_string(*b.reason) : ""});
    }
    r.per_pair.push_back(std::move(d));
  }
  for (const auto &d : taint.diagnostics)
    r.diagnostics.push_back(d.code + ": " + d.message);
  r.timings = timings;
  return r;
}

json loc_json(const Location &l) { return {{"path", l.path}, {"file", l.file}, {"line", l.line}, {"column", l.column}}; }

namespace {


Location loc_from(const json &j) {
  return {j.at("path").get<std::string>(), j.at("file").get<std::string>(), j.at("line").get<int>(),
          j.at("column").get<int>()};
}

json path_json(const CodePropertyGraph &g, const DataFlowPath &p, const std::filesystem::path &root) {
  json hops = json::array();
  for (std::size_t i = 0; i < p.hops.size(); ++i) {
    json h = loc_json(locate(g, p.hops[i], root));
    h["function"] = g.node(p.hops[i]).function;
    h["case"] = to_string(p.hop_cases[i]);
    if (i < p.hop_vars.size())
      h["var"] = p.hop_vars[i];
    hops.push_back(std::move(h));
  }
  return {{"hops", hops}, {"functions", p.crossed_functions}};
}

} // namespace

json to_json(const CorpusReport &r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["corpus"] = r.corpus;
  j["files"] = r.files;
  j["lines_of_code"] = r.lines_of_code;
  j["skipped_regions"] = r.skipped_regions;
  j["sources_found"] = r.sources_found;
  j["sinks_found"] = r.sinks_found;
  j["unique_pairs"] = r.unique_pairs;
  j["dataflow_paths"] = r.dataflow_paths;
  j["caveat"] = r.caveat;
  j["diagnostics"] = r.diagnostics;
  json flags = json::array();
  for (const auto &f : r.truncation_flags)
    flags.push_back({{"sink", loc_json(f.sink)}, {"callee", f.callee}, {"reason", f.reason}});
  j["truncation_flags"] = flags;
  json pairs = json::array();
  for (const auto &d : r.per_pair) {
    json guards = json::array();
    for (const auto &g : d.guards)
      guards.push_back({{"location", loc_json(g.location)},
                        {"classification", g.classification},
                        {"polarity", g.polarity},
                        {"bugdoorable", g.bugdoorable},
                        {"skip_reason", g.skip_reason}});
    pairs.push_back({{"source", {{"location", loc_json(d.source)}, {"callee", d.source_callee},
                                 {"kind", d.source_kind}, {"arg", d.source_arg}}},
                     {"sink", {{"location", loc_json(d.sink)}, {"callee", d.sink_callee}, {"arg", d.sink_arg},
                               {"vuln_class", d.vuln_class}}},
                     {"paths", d.paths},
                     {"guards", guards}});
  }
  j["per_pair"] = pairs;
  if (r.timings)
    j["timings"] = {{"importing", r.timings->importing},
                    {"summarizing", r.timings->summarizing},
                    {"finding_paths", r.timings->finding_paths},
                    {"guards", r.timings->guards}};
  return j;
}

CorpusReport report_from_json(const json &j) {
  CorpusReport r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kSchemaVersion)
    throw std::runtime_error("unsupported report schema version " + std::to_string(r.schema_version));
  r.corpus = j.at("corpus").get<std::string>();
  r.files = j.at("files").get<std::size_t>();
  r.lines_of_code = j.at("lines_of_code").get<std::size_t>();
  r.skipped_regions = j.at("skipped_regions").get<std::size_t>();
  r.sources_found = j.at("sources_found").get<std::size_t>();
  r.sinks_found = j.at("sinks_found").get<std::size_t>();
  r.unique_pairs = j.at("unique_pairs").get<std::size_t>();
  r.dataflow_paths = j.at("dataflow_paths").get<std::size_t>();
  r.caveat = j.at("caveat").get<std::string>();
  r.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  for (const auto &f : j.at("truncation_flags"))
    r.truncation_flags.push_back({loc_from(f.at("sink")), f.at("callee").get<std::string>(), f.at("reason").get<std::string>()});
  for (const auto &p : j.at("per_pair")) {
    PairDigest d;
    const json &src = p.at("source");
    const json &snk = p.at("sink");
    d.source = loc_from(src.at("location"));
    d.source_callee = src.at("callee").get<std::string>();
    d.source_kind = src.at("kind").get<std::string>();
    d.source_arg = src.at("arg").get<int>();
    d.sink = loc_from(snk.at("location"));
    d.sink_callee = snk.at("callee").get<std::string>();
    d.sink_arg = snk.at("arg").get<int>();
    d.vuln_class = snk.at("vuln_class").get<std::string>();
    d.paths = p.at("paths").get<std::size_t>();
    for (const auto &g : p.at("guards"))
      d.guards.push_back({loc_from(g.at("location")), g.at("classification").get<std::string>(),
                          g.at("polarity").get<std::string>(), g.at("bugdoorable").get<bool>(),
                          g.at("skip_reason").get<std::string>()});
    r.per_pair.push_back(std::move(d));
  }
  if (j.contains("timings")) {
    const json &t = j.at("timings");
    r.timings = PhaseTimings{t.at("importing").get<double>(), t.at("summarizing").get<double>(),
                             t.at("finding_paths").get<double>(), t.at("guards").get<double>()};
  }
  return r;
}

json ground_truth_json(const CodePropertyGraph &graph, const GroundTruthRecord &rec, const std::filesystem::path &root) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["vuln_class"] = to_string(rec.vuln_class);
  j["source"] = {{"location", loc_json(locate(graph, rec.source.call_node, root))},
                 {"callee", rec.source.callee},
                 {"kind", to_string(rec.source.source_kind)},
                 {"arg", rec.source.controlled_arg}};
  j["sink"] = {{"location", loc_json(locate(graph, rec.sink.call_node, root))},
               {"callee", rec.sink.callee},
               {"arg", rec.sink.sensitive_arg_index},
               {"vuln_class", to_string(rec.sink.vuln_class)}};
  j["chosen_path"] = path_json(graph, rec.chosen_path, root);
  json paths = json::array();
  for (const auto &p : rec.paths)
    paths.push_back(path_json(graph, p, root));
  j["paths"] = paths;
  if (rec.guard) {
    const GuardSite &g = *rec.guard;
    std::vector<std::string> evidence;
    for (AbortEvidence e : g.abort_evidence)
      evidence.emplace_back(to_string(e));
    j["guard"] = {{"location", loc_json(locate(graph, g.condition_node, root))},
                  {"function", g.function},
                  {"classification", to_string(g.classification)},
                  {"polarity", to_string(g.polarity)},
                  {"abort_evidence", evidence},
                  {"guarded_var", g.guarded_var},
                  {"derived_var", g.derived_var},
                  {"gating", g.gating}};
  } else {
    j["guard"] = nullptr;
  }
  json rewrites = json::array();
  for (const auto &rw : rec.plan.rewrites) {
    std::filesystem::path p = rw.file;
    std::string rel = p.lexically_relative(root).generic_string();
    rewrites.push_back({{"path", rel.empty() || rel.rfind("..", 0) == 0 ? rw.file : rel},
                        {"byte_start", rw.byte_start},
                        {"byte_end", rw.byte_end},
                        {"line", rw.line},
                        {"replacement", rw.replacement}});
  }
  j["instrumentation"] = {{"class", to_string(rec.plan.cls)},
                          {"variant_id", rec.plan.variant_id},
                          {"description", rec.plan.description},
                          {"rng_seed", rec.plan.rng_seed},
                          {"rewrites", rewrites}};
  j["original_snippet"] = rec.original_snippet;
  j["rewritten_snippet"] = rec.rewritten_snippet;
  return j;
}

std::string dump_json(const json &j) {
  // invalid UTF-8 in snippets is replaced rather than rejected
  return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

void write_file_atomic(const std::filesystem::path &path, const std::string &bytes) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
      throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

} // namespace bugforge
