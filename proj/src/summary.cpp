#include "bugforge/summary.hpp"

#include "bugforge/frontend.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace bugforge {

const char *to_string(ParamStatus s) {
  switch (s) {
  case ParamStatus::No: return "No";
  case ParamStatus::Yes: return "Yes";
  case ParamStatus::Maybe: return "Maybe";
  }
  return "?";
}

const char *to_string(SourceKind k) {
  switch (k) {
  case SourceKind::File: return "File";
  case SourceKind::Network: return "Network";
  case SourceKind::Argv: return "Argv";
  case SourceKind::Stdin: return "Stdin";
  case SourceKind::Env: return "Env";
  }
  return "?";
}

const char *to_string(VulnClass c) {
  switch (c) {
  case VulnClass::BufferLength: return "BufferLength";
  case VulnClass::FormatString: return "FormatString";
  case VulnClass::AllocSize: return "AllocSize";
  case VulnClass::OutboundLeak: return "OutboundLeak";
  }
  return "?";
}

std::optional<SourceKind> parse_source_kind(std::string_view s) {
  if (s == "file" || s == "File") return SourceKind::File;
  if (s == "network" || s == "Network") return SourceKind::Network;
  if (s == "argv" || s == "Argv") return SourceKind::Argv;
  if (s == "stdin" || s == "Stdin") return SourceKind::Stdin;
  if (s == "env" || s == "Env") return SourceKind::Env;
  return std::nullopt;
}

std::optional<VulnClass> parse_vuln_class(std::string_view s) {
  if (s == "buffer_length" || s == "BufferLength") return VulnClass::BufferLength;
  if (s == "format_string" || s == "FormatString") return VulnClass::FormatString;
  if (s == "alloc_size" || s == "AllocSize") return VulnClass::AllocSize;
  if (s == "outbound_leak" || s == "OutboundLeak") return VulnClass::OutboundLeak;
  return std::nullopt;
}

ParamStatus FunctionSummary::status(int index) const {
  if (index >= 0 && index < static_cast<int>(param_modified.size()))
    return param_modified[static_cast<std::size_t>(index)];
  return variadic ? variadic_modified : ParamStatus::Maybe;
}

bool FunctionSummary::controls(int index) const {
  if (!source_kind)
    return false;
  for (int a : source_args) {
    if (a == index)
      return true;
    if (a == kVariadicArgs && index >= static_cast<int>(param_modified.size()))
      return true;
  }
  return false;
}

std::vector<int> FunctionSummary::transfers_into(int index) const {
  std::vector<int> out;
  if (index == kReturnValue)
    out = returns_param_data;
  bool variadic_target = index >= static_cast<int>(param_modified.size());
  for (const auto &t : param_transfers)
    if (t.to == index || (variadic_target && t.to == kVariadicArgs))
      out.push_back(t.from);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

int parse_position(std::string_view s, const std::string &origin, int line) {
  if (s == "ret")
    return kReturnValue;
  if (s == "va")
    return kVariadicArgs;
  if (s.size() < 2 || s[0] != 'p')
    throw SummaryParseError(origin, line, "bad parameter reference '" + std::string(s) + "'");
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data() + 1, s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || value < 0 || value > 64)
    throw SummaryParseError(origin, line, "bad parameter reference '" + std::string(s) + "'");
  return value;
}

ParamStatus parse_status(std::string_view s, const std::string &origin, int line) {
  if (s == "Y") return ParamStatus::Yes;
  if (s == "N") return ParamStatus::No;
  if (s == "M") return ParamStatus::Maybe;
  throw SummaryParseError(origin, line, "bad status '" + std::string(s) + "' (expected Y, N or M)");
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t at = s.find(sep, start);
    out.push_back(s.substr(start, at - start));
    if (at == std::string_view::npos)
      return out;
    start = at + 1;
  }
}

std::string position_name(int p) {
  if (p == kReturnValue) return "ret";
  if (p == kVariadicArgs) return "va";
  return "p" + std::to_string(p);
}

char status_letter(ParamStatus s) { return s == ParamStatus::Yes ? 'Y' : s == ParamStatus::No ? 'N' : 'M'; }

std::string source_word(SourceKind k) {
  std::string s = to_string(k);
  s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

std::string class_word(VulnClass c) {
  switch (c) {
  case VulnClass::BufferLength: return "buffer_length";
  case VulnClass::FormatString: return "format_string";
  case VulnClass::AllocSize: return "alloc_size";
  case VulnClass::OutboundLeak: return "outbound_leak";
  }
  return "?";
}

} // namespace

SummaryLoad parse_summaries(std::string_view text, const std::string &origin) {
  SummaryLoad out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    std::istringstream words{std::string(line)};
    std::string name;
    if (!(words >> name))
      continue;
    FunctionSummary s;
    s.name = name;
    s.external = true;
    s.returns_value = false;
    std::map<int, ParamStatus> params;
    std::string field;
    while (words >> field) {
      if (field == "terminal") {
        s.terminal = true;
        continue;
      }
      auto eq = field.find('=');
      if (eq == std::string::npos)
        throw SummaryParseError(origin, line_no, "field '" + field + "' has no value");
      std::string_view head = std::string_view(field).substr(0, eq);
      std::vector<std::string_view> parts = split(std::string_view(field).substr(eq + 1), ',');
      int position = parse_position(head, origin, line_no);
      if (position == kReturnValue) {
        if (parts[0] != "V" && parts[0] != "N")
          throw SummaryParseError(origin, line_no, "ret expects V or N");
        s.returns_value = parts[0] == "V";
      } else {
        ParamStatus st = parse_status(parts[0], origin, line_no);
        if (position == kVariadicArgs) {
          s.variadic = true;
          s.variadic_modified = st;
        } else {
          if (params.count(position))
            throw SummaryParseError(origin, line_no, "parameter " + std::string(head) + " given twice");
          params[position] = st;
        }
      }
      for (std::size_t i = 1; i < parts.size(); ++i) {
        std::string_view part = parts[i];
        auto peq = part.find('=');
        if (peq == std::string_view::npos)
          throw SummaryParseError(origin, line_no, "attribute '" + std::string(part) + "' has no value");
        std::string_view key = part.substr(0, peq);
        std::string_view value = part.substr(peq + 1);
        if (key == "transfer") {
          int other = parse_position(value, origin, line_no);
          if (position == kReturnValue)
            s.returns_param_data.push_back(other);
          else if (other == kReturnValue)
            s.returns_param_data.push_back(position);
          else
            s.param_transfers.push_back({other, position});
        } else if (key == "source") {
          auto kind = parse_source_kind(value);
          if (!kind)
            throw SummaryParseError(origin, line_no, "unknown source kind '" + std::string(value) + "'");
          if (s.source_kind && *s.source_kind != *kind)
            throw SummaryParseError(origin, line_no, "conflicting source kinds");
          s.source_kind = kind;
          s.source_args.push_back(position);
        } else if (key == "sink") {
          auto cls = parse_vuln_class(value);
          if (!cls)
            throw SummaryParseError(origin, line_no, "unknown sink class '" + std::string(value) + "'");
          if (position < 0)
            throw SummaryParseError(origin, line_no, "sinks must name a declared parameter");
          s.sinks.push_back({position, *cls});
        } else {
          throw SummaryParseError(origin, line_no, "unknown attribute '" + std::string(key) + "'");
        }
      }
    }
    int count = params.empty() ? 0 : params.rbegin()->first + 1;
    s.param_modified.assign(static_cast<std::size_t>(count), ParamStatus::No);
    for (int i = 0; i < count; ++i) {
      if (!params.count(i))
        throw SummaryParseError(origin, line_no, "parameter p" + std::to_string(i) + " missing for " + name);
      s.param_modified[static_cast<std::size_t>(i)] = params[i];
    }
    std::sort(s.param_transfers.begin(), s.param_transfers.end());
    std::sort(s.returns_param_data.begin(), s.returns_param_data.end());
    s.returns_param_data.erase(std::unique(s.returns_param_data.begin(), s.returns_param_data.end()),
                               s.returns_param_data.end());
    if (!s.returns_param_data.empty())
      s.returns_value = true;
    if (out.summaries.count(name))
      out.warnings.push_back(origin + ":" + std::to_string(line_no) + ": duplicate summary for '" + name +
                             "', last one wins");
    out.summaries[name] = std::move(s);
  }
  return out;
}

SummaryLoad load_external_summaries(const std::filesystem::path &path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception &e) {
    throw SummaryParseError(path.generic_string(), 0, e.what());
  }
  return parse_summaries(text, path.generic_string());
}

void merge_summaries(SummaryLoad &base, SummaryLoad more) {
  for (auto &w : more.warnings)
    base.warnings.push_back(std::move(w));
  for (auto &[name, s] : more.summaries)
    base.summaries[name] = std::move(s);
}

std::string format_summary(const FunctionSummary &s) {
  std::ostringstream out;
  out << s.name;
  if (s.returns_value) {
    out << " ret=V";
    for (int p : s.returns_param_data)
      out << ",transfer=" << position_name(p);
    if (s.source_kind && std::count(s.source_args.begin(), s.source_args.end(), kReturnValue))
      out << ",source=" << source_word(*s.source_kind);
  }
  auto attrs = [&](int position) {
    for (const auto &t : s.param_transfers)
      if (t.to == position)
        out << ",transfer=" << position_name(t.from);
    if (s.source_kind && std::count(s.source_args.begin(), s.source_args.end(), position))
      out << ",source=" << source_word(*s.source_kind);
    for (const auto &k : s.sinks)
      if (k.param == position)
        out << ",sink=" << class_word(k.vuln_class);
  };
  for (std::size_t i = 0; i < s.param_modified.size(); ++i) {
    out << " p" << i << "=" << status_letter(s.param_modified[i]);
    attrs(static_cast<int>(i));
  }
  if (s.variadic) {
    out << " va=" << status_letter(s.variadic_modified);
    attrs(kVariadicArgs);
  }
  if (s.terminal)
    out << " terminal";
  return out.str();
}

} // namespace bugforge
