#include "bugforge/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

namespace bugforge {
namespace {

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

constexpr std::array<std::string_view, 24> kMultiPunct = {
    "...", "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&",  "||",  "*=",  "/=", "%=", "+=", "-=", "&=", "^=", "|=", "##", "::"};

// Parses `# 12 "file" flags` or `#line 12 "file"`; returns false for any other directive.
bool parse_line_marker(std::string_view line, int &number, std::string &file) {
  std::size_t i = 1;
  auto skip_ws = [&] {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t'))
      ++i;
  };
  skip_ws();
  if (line.substr(i, 4) == "line") {
    i += 4;
    skip_ws();
  }
  std::size_t digits = i;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])))
    ++i;
  if (i == digits)
    return false;
  std::from_chars(line.data() + digits, line.data() + i, number);
  skip_ws();
  file.clear();
  if (i < line.size() && line[i] == '"') {
    ++i;
    while (i < line.size() && line[i] != '"') {
      if (line[i] == '\\' && i + 1 < line.size())
        ++i;
      file.push_back(line[i++]);
    }
  }
  return true;
}

} // namespace

LexResult lex(std::string_view text) {
  LexResult out;
  std::size_t i = 0;
  int line = 1;
  bool at_line_start = true;
  std::string last_file;

  auto push = [&](TokenKind kind, std::size_t begin) {
    out.tokens.push_back({kind, text.substr(begin, i - begin), begin});
  };
  // Consumes a quoted literal starting at text[i]; `begin` may include a prefix.
  auto quoted = [&](std::size_t begin) {
    char quote = text[i];
    ++i;
    while (i < text.size() && text[i] != quote && text[i] != '\n') {
      if (text[i] == '\\' && i + 1 < text.size())
        ++i;
      ++i;
    }
    if (i < text.size() && text[i] == quote)
      ++i;
    push(quote == '"' ? TokenKind::String : TokenKind::Char, begin);
  };

  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (c == '\n') {
      ++line;
      ++i;
      at_line_start = true;
      continue;
    }
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n')
        ++i;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
      i += 2;
      while (i + 1 < text.size() && !(text[i] == '*' && text[i + 1] == '/')) {
        if (text[i] == '\n')
          ++line;
        ++i;
      }
      i = std::min(text.size(), i + 2);
      continue;
    }
    if (c == '#' && at_line_start) {
      std::size_t begin = i;
      // Directives may continue over backslash-newlines.
      while (i < text.size() && text[i] != '\n') {
        if (text[i] == '\\' && i + 1 < text.size() && text[i + 1] == '\n') {
          ++line;
          i += 2;
          continue;
        }
        ++i;
      }
      std::string_view directive = text.substr(begin, i - begin);
      int number = 0;
      std::string file;
      if (parse_line_marker(directive, number, file)) {
        if (file.empty())
          file = last_file;
        last_file = file;
        out.markers.push_back({line, number, file});
      } else {
        out.directives.push_back({TokenKind::Directive, directive, begin});
      }
      continue;
    }
    at_line_start = false;
    std::size_t begin = i;
    if (ident_start(c)) {
      while (i < text.size() && ident_char(static_cast<unsigned char>(text[i])))
        ++i;
      // Encoding prefixes of string and character literals.
      if (i < text.size() && (text[i] == '"' || text[i] == '\'')) {
        std::string_view prefix = text.substr(begin, i - begin);
        if (prefix == "L" || prefix == "u" || prefix == "U" || prefix == "u8") {
          quoted(begin);
          continue;
        }
      }
      push(TokenKind::Identifier, begin);
      continue;
    }
    if (std::isdigit(c) || (c == '.' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      while (i < text.size()) {
        unsigned char d = static_cast<unsigned char>(text[i]);
        if ((d == '+' || d == '-') && (text[i - 1] == 'e' || text[i - 1] == 'E' || text[i - 1] == 'p' || text[i - 1] == 'P')) {
          ++i;
          continue;
        }
        if (!(std::isalnum(d) || d == '.' || d == '_'))
          break;
        ++i;
      }
      push(TokenKind::Number, begin);
      continue;
    }
    if (c == '"' || c == '\'') {
      quoted(begin);
      continue;
    }
    bool matched = false;
    for (std::string_view p : kMultiPunct) {
      if (text.substr(i, p.size()) == p) {
        i += p.size();
        matched = true;
        break;
      }
    }
    if (!matched) {
      static constexpr std::string_view kSingle = "{}[]()<>;:,.?!~+-*/%&|^=#";
      ++i;
      if (kSingle.find(static_cast<char>(c)) == std::string_view::npos) {
        push(TokenKind::Unknown, begin);
        continue;
      }
    }
    push(TokenKind::Punct, begin);
  }
  out.tokens.push_back({TokenKind::End, text.substr(text.size()), text.size()});
  return out;
}

} // namespace bugforge
