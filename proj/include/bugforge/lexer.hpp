#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace bugforge {

enum class TokenKind { Identifier, Number, String, Char, Punct, Directive, Unknown, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string_view text;
  std::size_t offset = 0;

  [[nodiscard]] std::size_t end() const { return offset + text.size(); }
  [[nodiscard]] bool is(std::string_view s) const {
    return (kind == TokenKind::Punct || kind == TokenKind::Identifier) && text == s;
  }
};

/// A preprocessor line marker found while lexing: the line following
/// `physical_line` is logical `line` of `file`.
struct LineMarker {
  int physical_line;
  int line;
  std::string file;
};

struct LexResult {
  std::vector<Token> tokens; // terminated by an End token
  std::vector<LineMarker> markers;
  std::vector<Token> directives; // residual directives other than line markers
};

/// Tokenizes C source. Comments are dropped; `#` lines are either consumed as
/// line markers or reported as residual directives.
LexResult lex(std::string_view text);

} // namespace bugforge
