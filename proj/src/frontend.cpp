#include "bugforge/frontend.hpp"

#include "bugforge/lexer.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace bugforge {
namespace {

struct ParseFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::unordered_set<std::string_view> kTypeKeywords = {
    "void",   "char",     "short",    "int",     "long",        "float",     "double",
    "signed", "unsigned", "_Bool",    "_Complex", "_Imaginary", "__int128",  "__signed__",
    "__signed", "__auto_type", "__float128"};

const std::unordered_set<std::string_view> kQualifiers = {
    "const",     "volatile", "restrict", "__restrict", "__restrict__", "__const",
    "__volatile__", "__volatile", "_Atomic", "static", "extern", "auto", "register",
    "typedef",   "inline",   "__inline", "__inline__", "_Thread_local", "__thread",
    "_Noreturn", "__extension__"};

const std::set<std::string, std::less<>> kBuiltinTypedefs = {
    "FILE",     "size_t",   "ssize_t",  "off_t",    "ptrdiff_t", "wchar_t",  "int8_t",
    "int16_t",  "int32_t",  "int64_t",  "uint8_t",  "uint16_t",  "uint32_t", "uint64_t",
    "intptr_t", "uintptr_t", "pid_t",   "time_t",   "socklen_t", "va_list",  "__builtin_va_list",
    "bool",     "__gnuc_va_list", "jmp_buf", "sigjmp_buf"};

const std::unordered_set<std::string_view> kAssignOps = {"=",  "+=", "-=", "*=",  "/=", "%=",
                                                         "&=", "|=", "^=", "<<=", ">>="};

int binary_precedence(std::string_view op) {
  if (op == "||") return 1;
  if (op == "&&") return 2;
  if (op == "|") return 3;
  if (op == "^") return 4;
  if (op == "&") return 5;
  if (op == "==" || op == "!=") return 6;
  if (op == "<" || op == ">" || op == "<=" || op == ">=") return 7;
  if (op == "<<" || op == ">>") return 8;
  if (op == "+" || op == "-") return 9;
  if (op == "*" || op == "/" || op == "%") return 10;
  return 0;
}

bool is_asm_keyword(std::string_view s) { return s == "asm" || s == "__asm__" || s == "__asm"; }
bool is_attribute_keyword(std::string_view s) {
  return s == "__attribute__" || s == "__attribute" || s == "__declspec" || s == "_Alignas";
}

struct DeclaratorResult {
  std::string name;
  SourceSpan name_span;
  int pointer_depth = 0;
  bool array = false;
  bool function = false;       // outermost suffix applied to the name is a parameter list
  std::size_t params_open = 0; // token index of '(' of that parameter list
  std::size_t params_close = 0;
  std::string suffix_text; // declarator text with the name removed
};

class Parser {
public:
  Parser(std::string_view text, const LexResult &lexed, const LineMap &lines, TranslationUnit &unit)
      : text_(text), toks_(lexed.tokens), lines_(lines), unit_(unit),
        typedefs_(kBuiltinTypedefs.begin(), kBuiltinTypedefs.end()) {}

  void parse_translation_unit();

private:
  // --- token helpers -------------------------------------------------------
  const Token &peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at(std::string_view s, std::size_t k = 0) const { return peek(k).is(s); }
  bool at_end() const { return peek().kind == TokenKind::End; }
  const Token &advance() {
    const Token &t = peek();
    if (!at_end()) {
      last_end_ = t.end();
      ++pos_;
    }
    return t;
  }
  void expect(std::string_view s) {
    if (!at(s))
      fail("expected '" + std::string(s) + "'");
    advance();
  }
  bool accept(std::string_view s) {
    if (!at(s))
      return false;
    advance();
    return true;
  }
  [[noreturn]] void fail(const std::string &what) const {
    throw ParseFailure(what + " at offset " + std::to_string(peek().offset));
  }
  SourceSpan span_from(std::size_t begin) const { return lines_.span(begin, std::max(last_end_, begin + 1)); }
  std::size_t start() const { return peek().offset; }

  // Skips a balanced group starting at the current opening token.
  void skip_balanced() {
    std::string_view open = peek().text;
    std::string_view close = open == "(" ? ")" : open == "[" ? "]" : "}";
    int depth = 0;
    do {
      if (at_end())
        fail("unterminated group");
      if (peek().is(open))
        ++depth;
      else if (peek().is(close))
        --depth;
      advance();
    } while (depth > 0);
  }

  void skip_attributes() {
    while (true) {
      if (is_attribute_keyword(peek().text) && peek().kind == TokenKind::Identifier) {
        advance();
        if (at("("))
          skip_balanced();
      } else if (is_asm_keyword(peek().text) && at("(", 1)) {
        advance();
        skip_balanced();
      } else {
        return;
      }
    }
  }

  // --- declarations --------------------------------------------------------
  bool is_type_name(std::string_view s) const { return typedefs_.count(std::string(s)) > 0; }

  bool is_specifier_token(const Token &t) const {
    if (t.kind != TokenKind::Identifier)
      return false;
    return kTypeKeywords.count(t.text) || kQualifiers.count(t.text) || t.text == "struct" || t.text == "union" ||
           t.text == "enum" || is_attribute_keyword(t.text) || t.text == "__typeof__" || t.text == "typeof" ||
           t.text == "__typeof";
  }

  bool starts_type_name(std::size_t k = 0) const {
    const Token &t = peek(k);
    if (is_specifier_token(t))
      return true;
    return t.kind == TokenKind::Identifier && is_type_name(t.text);
  }

  /// Heuristic for a declaration at statement level.
  bool is_declaration_start() const {
    const Token &t = peek();
    if (t.kind != TokenKind::Identifier)
      return false;
    if (t.text == "_Static_assert")
      return true;
    if (is_specifier_token(t))
      return true;
    const Token &n = peek(1);
    if (is_type_name(t.text))
      return n.kind == TokenKind::Identifier || n.is("*") || is_specifier_token(n);
    // Unknown identifiers: `T x ...` or `T *x ...` shapes.
    auto declarator_follow = [](const Token &f) {
      return f.is(";") || f.is("=") || f.is("[") || f.is(",") || f.is(")");
    };
    if (n.kind == TokenKind::Identifier && !is_specifier_token(n))
      return declarator_follow(peek(2)) || is_attribute_keyword(peek(2).text);
    if (n.is("*")) {
      std::size_t k = 1;
      while (peek(k).is("*"))
        ++k;
      return peek(k).kind == TokenKind::Identifier && declarator_follow(peek(k + 1));
    }
    return false;
  }

  struct Specifiers {
    std::string text;
    bool is_typedef = false;
    bool any = false;
  };

  void parse_enum_body() {
    // Records enumerator names so the graph can ignore them as constants.
    expect("{");
    bool expect_name = true;
    int depth = 0;
    while (!at_end()) {
      if (depth == 0 && at("}"))
        break;
      if (at("(") || at("[") || at("{")) {
        skip_balanced();
        continue;
      }
      if (depth == 0 && expect_name && peek().kind == TokenKind::Identifier)
        unit_constants_.insert(std::string(peek().text));
      expect_name = at(",");
      advance();
    }
    expect("}");
  }

  Specifiers parse_specifiers() {
    Specifiers spec;
    bool have_base = false;
    std::vector<std::string> words;
    while (!at_end()) {
      const Token &t = peek();
      if (t.kind != TokenKind::Identifier)
        break;
      if (t.text == "typedef") {
        spec.is_typedef = true;
        spec.any = true;
        advance();
        continue;
      }
      if (is_attribute_keyword(t.text)) {
        advance();
        if (at("("))
          skip_balanced();
        continue;
      }
      if (kQualifiers.count(t.text)) {
        words.emplace_back(t.text);
        spec.any = true;
        advance();
        continue;
      }
      if (kTypeKeywords.count(t.text)) {
        words.emplace_back(t.text);
        have_base = true;
        spec.any = true;
        advance();
        continue;
      }
      if (t.text == "__typeof__" || t.text == "typeof" || t.text == "__typeof") {
        std::size_t b = t.offset;
        advance();
        if (at("("))
          skip_balanced();
        words.emplace_back(text_.substr(b, last_end_ - b));
        have_base = true;
        spec.any = true;
        continue;
      }
      if (t.text == "struct" || t.text == "union" || t.text == "enum") {
        bool is_enum = t.text == "enum";
        std::string word(t.text);
        advance();
        skip_attributes();
        if (peek().kind == TokenKind::Identifier) {
          word += " " + std::string(peek().text);
          advance();
        }
        if (at("{")) {
          if (is_enum)
            parse_enum_body();
          else
            skip_balanced();
        }
        words.push_back(word);
        have_base = true;
        spec.any = true;
        continue;
      }
      if (!have_base && is_type_name(t.text)) {
        words.emplace_back(t.text);
        have_base = true;
        spec.any = true;
        advance();
        continue;
      }
      // Unknown identifier used as a type name: only in `T x` / `T *x` positions.
      if (!have_base && (peek(1).kind == TokenKind::Identifier || peek(1).is("*"))) {
        if (peek(1).kind == TokenKind::Identifier && is_specifier_token(peek(1)) && !kQualifiers.count(peek(1).text))
          break;
        words.emplace_back(t.text);
        have_base = true;
        spec.any = true;
        advance();
        continue;
      }
      break;
    }
    for (std::size_t i = 0; i < words.size(); ++i)
      spec.text += (i ? " " : "") + words[i];
    return spec;
  }

  DeclaratorResult parse_declarator(bool allow_abstract) {
    DeclaratorResult d;
    std::string prefix;
    while (true) {
      if (accept("*")) {
        ++d.pointer_depth;
        prefix += "*";
        continue;
      }
      if (peek().kind == TokenKind::Identifier && kQualifiers.count(peek().text)) {
        advance();
        continue;
      }
      if (is_attribute_keyword(peek().text)) {
        skip_attributes();
        continue;
      }
      break;
    }
    bool grouped = false;
    std::string inner_suffix;
    if (peek().kind == TokenKind::Identifier && !is_specifier_token(peek())) {
      d.name = std::string(peek().text);
      d.name_span = lines_.span(peek().offset, peek().end());
      advance();
    } else if (at("(") && (at("*", 1) || at("^", 1) || (peek(1).kind == TokenKind::Identifier && !starts_type_name(1)) || at("(", 1))) {
      // Parenthesized declarator such as (*fp) or (*arr)[4].
      advance();
      DeclaratorResult inner = parse_declarator(allow_abstract);
      expect(")");
      d.name = inner.name;
      d.name_span = inner.name_span;
      d.pointer_depth += inner.pointer_depth;
      d.array = inner.array;
      grouped = true;
      inner_suffix = "(" + inner.suffix_text + ")";
    } else if (!allow_abstract) {
      fail("expected declarator");
    }
    std::string suffix;
    bool first_suffix = true;
    while (true) {
      if (at("[")) {
        std::size_t b = peek().offset;
        skip_balanced();
        suffix += std::string(text_.substr(b, last_end_ - b));
        d.array = true;
        first_suffix = false;
        continue;
      }
      if (at("(")) {
        if (first_suffix && !grouped) {
          d.function = true;
          d.params_open = pos_;
        }
        std::size_t b = peek().offset;
        skip_balanced();
        if (first_suffix && !grouped)
          d.params_close = pos_ - 1;
        suffix += std::string(text_.substr(b, last_end_ - b));
        if (grouped)
          d.pointer_depth = std::max(d.pointer_depth, 1); // function pointer
        first_suffix = false;
        continue;
      }
      break;
    }
    skip_attributes();
    d.suffix_text = prefix + inner_suffix + suffix;
    return d;
  }

  static std::string join_type(const std::string &spec, const std::string &suffix) {
    if (suffix.empty())
      return spec;
    return spec + " " + suffix;
  }

  ExprPtr parse_initializer() {
    if (!at("{"))
      return parse_assignment();
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::InitList;
    std::size_t b = start();
    expect("{");
    while (!at("}")) {
      if (at_end())
        fail("unterminated initializer");
      // Designators are dropped; only the values matter for data flow.
      bool designated = false;
      while (at(".") || at("[")) {
        if (at(".")) {
          advance();
          advance();
        } else {
          skip_balanced();
        }
        designated = true;
      }
      if (designated)
        expect("=");
      e->operands.push_back(parse_initializer());
      if (!accept(","))
        break;
    }
    expect("}");
    e->span = span_from(b);
    return e;
  }

  // Parses declarators after the specifiers, up to and including ';'.
  std::vector<Declarator> parse_init_declarators(const Specifiers &spec) {
    std::vector<Declarator> out;
    if (accept(";"))
      return out;
    while (true) {
      std::size_t b = start();
      DeclaratorResult dr = parse_declarator(false);
      Declarator d;
      d.name = dr.name;
      d.type = join_type(spec.text, dr.suffix_text);
      d.pointer = dr.pointer_depth > 0 || dr.array;
      d.array = dr.array;
      d.function = dr.function;
      skip_attributes();
      if (accept("="))
        d.init = parse_initializer();
      d.span = span_from(b);
      if (spec.is_typedef && !d.name.empty())
        typedefs_.insert(d.name);
      out.push_back(std::move(d));
      if (accept(","))
        continue;
      expect(";");
      break;
    }
    return out;
  }

  std::vector<Parameter> parse_parameters(std::size_t open, std::size_t close, bool &variadic, bool &knr) {
    std::vector<Parameter> params;
    std::size_t saved = pos_;
    std::size_t saved_end = last_end_;
    pos_ = open + 1;
    variadic = false;
    knr = false;
    if (pos_ == close || (at("void") && pos_ + 1 == close)) {
      pos_ = saved;
      last_end_ = saved_end;
      return params;
    }
    while (pos_ < close) {
      if (accept("...")) {
        variadic = true;
        break;
      }
      std::size_t b = start();
      Specifiers spec = parse_specifiers();
      DeclaratorResult dr = parse_declarator(true);
      Parameter p;
      p.name = dr.name;
      p.type = join_type(spec.text, dr.suffix_text);
      p.pointer = dr.pointer_depth > 0 || dr.array || dr.function;
      p.span = span_from(b);
      if (!spec.any)
        knr = true;
      params.push_back(std::move(p));
      if (pos_ < close)
        expect(",");
    }
    pos_ = saved;
    last_end_ = saved_end;
    return params;
  }

  // --- expressions ---------------------------------------------------------
  ExprPtr make(ExprKind kind, std::size_t begin, std::string op = {}) {
    auto e = std::make_unique<Expr>();
    e->kind = kind;
    e->op = std::move(op);
    e->span = lines_.span(begin, std::max(last_end_, begin + 1));
    return e;
  }

  ExprPtr opaque_group(std::size_t begin, std::string reason) {
    auto e = make(ExprKind::Opaque, begin);
    e->opaque_reason = std::move(reason);
    return e;
  }

  ExprPtr parse_expression() {
    std::size_t b = start();
    ExprPtr lhs = parse_assignment();
    if (!at(","))
      return lhs;
    auto comma = std::make_unique<Expr>();
    comma->kind = ExprKind::Comma;
    comma->operands.push_back(std::move(lhs));
    while (accept(","))
      comma->operands.push_back(parse_assignment());
    comma->span = span_from(b);
    return comma;
  }

  ExprPtr parse_assignment() {
    std::size_t b = start();
    ExprPtr lhs = parse_conditional();
    if (peek().kind == TokenKind::Punct && kAssignOps.count(peek().text)) {
      std::string op(advance().text);
      ExprPtr rhs = parse_assignment();
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Assign;
      e->op = op;
      e->operands.push_back(std::move(lhs));
      e->operands.push_back(std::move(rhs));
      e->span = span_from(b);
      return e;
    }
    return lhs;
  }

  ExprPtr parse_conditional() {
    std::size_t b = start();
    ExprPtr c = parse_binary(1);
    if (!at("?"))
      return c;
    advance();
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Conditional;
    e->operands.push_back(std::move(c));
    if (at(":")) // GNU `a ?: b`
      e->operands.push_back(nullptr);
    else
      e->operands.push_back(parse_expression());
    expect(":");
    e->operands.push_back(parse_conditional());
    e->span = span_from(b);
    return e;
  }

  ExprPtr parse_binary(int min_prec) {
    std::size_t b = start();
    ExprPtr lhs = parse_unary();
    while (true) {
      if (peek().kind != TokenKind::Punct)
        break;
      int prec = binary_precedence(peek().text);
      if (prec == 0 || prec < min_prec)
        break;
      std::string op(advance().text);
      ExprPtr rhs = parse_binary(prec + 1);
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Binary;
      e->op = op;
      e->operands.push_back(std::move(lhs));
      e->operands.push_back(std::move(rhs));
      e->span = span_from(b);
      lhs = std::move(e);
    }
    return lhs;
  }

  // Cast or compound literal type: `( type-name )`.
  bool at_parenthesized_type() const {
    if (!at("("))
      return false;
    if (starts_type_name(1))
      return true;
    // Unknown `(T *)` or `(T **)`.
    if (peek(1).kind == TokenKind::Identifier && at("*", 2)) {
      std::size_t k = 2;
      while (peek(k).is("*"))
        ++k;
      return peek(k).is(")");
    }
    return false;
  }

  std::string parse_type_name() {
    std::size_t b = start();
    Specifiers spec = parse_specifiers();
    if (!spec.any && peek().kind == TokenKind::Identifier)
      advance();
    parse_declarator(true);
    return std::string(text_.substr(b, last_end_ - b));
  }

  ExprPtr parse_unary() {
    std::size_t b = start();
    if (peek().kind == TokenKind::Identifier && peek().text == "__extension__") {
      advance();
      return parse_unary();
    }
    if (peek().kind == TokenKind::Punct) {
      std::string_view t = peek().text;
      if (t == "++" || t == "--" || t == "&" || t == "*" || t == "+" || t == "-" || t == "~" || t == "!") {
        std::string op(advance().text);
        if (op == "&" && at("&")) // GNU label address, `&&label` is lexed as `&&`
          fail("label address");
        ExprPtr inner = parse_unary();
        auto e = make(ExprKind::Unary, b, op);
        e->operands.push_back(std::move(inner));
        e->span = span_from(b);
        return e;
      }
      if (t == "&&")
        fail("label address");
      if (at_parenthesized_type()) {
        advance();
        std::string type = parse_type_name();
        expect(")");
        if (at("{")) {
          ExprPtr init = parse_initializer();
          auto e = make(ExprKind::Cast, b);
          e->type_text = type;
          e->operands.push_back(std::move(init));
          e->span = span_from(b);
          return parse_postfix(std::move(e), b);
        }
        ExprPtr inner = parse_unary();
        auto e = make(ExprKind::Cast, b);
        e->type_text = type;
        e->operands.push_back(std::move(inner));
        e->span = span_from(b);
        return e;
      }
    }
    if (peek().kind == TokenKind::Identifier &&
        (peek().text == "sizeof" || peek().text == "_Alignof" || peek().text == "__alignof__" || peek().text == "alignof")) {
      advance();
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Sizeof;
      if (at_parenthesized_type()) {
        advance();
        e->type_text = parse_type_name();
        expect(")");
      } else {
        e->operands.push_back(parse_unary());
      }
      e->span = span_from(b);
      return e;
    }
    return parse_postfix(parse_primary(), b);
  }

  ExprPtr parse_postfix(ExprPtr base, std::size_t b) {
    while (true) {
      if (at("[")) {
        advance();
        ExprPtr index = parse_expression();
        expect("]");
        auto e = std::make_unique<Expr>();
        e->kind = ExprKind::Index;
        e->operands.push_back(std::move(base));
        e->operands.push_back(std::move(index));
        e->span = span_from(b);
        base = std::move(e);
      } else if (at("(")) {
        advance();
        auto e = std::make_unique<Expr>();
        e->kind = ExprKind::Call;
        e->operands.push_back(std::move(base));
        while (!at(")")) {
          e->operands.push_back(parse_assignment());
          if (!accept(","))
            break;
        }
        expect(")");
        e->span = span_from(b);
        base = std::move(e);
      } else if (at(".") || at("->")) {
        bool arrow = at("->");
        advance();
        if (peek().kind != TokenKind::Identifier)
          fail("expected member name");
        std::string member(advance().text);
        auto e = std::make_unique<Expr>();
        e->kind = ExprKind::Member;
        e->op = member;
        e->arrow = arrow;
        e->operands.push_back(std::move(base));
        e->span = span_from(b);
        base = std::move(e);
      } else if (at("++") || at("--")) {
        std::string op(advance().text);
        auto e = std::make_unique<Expr>();
        e->kind = ExprKind::Postfix;
        e->op = op;
        e->operands.push_back(std::move(base));
        e->span = span_from(b);
        base = std::move(e);
      } else {
        return base;
      }
    }
  }

  ExprPtr parse_primary() {
    std::size_t b = start();
    const Token &t = peek();
    switch (t.kind) {
    case TokenKind::Identifier: {
      std::string_view name = t.text;
      if (is_asm_keyword(name)) {
        advance();
        while (peek().kind == TokenKind::Identifier && !at("("))
          advance();
        if (at("("))
          skip_balanced();
        return opaque_group(b, kReasonAsm);
      }
      if (name == "__builtin_va_arg" || name == "__builtin_offsetof" || name == "_Generic" ||
          name == "__builtin_types_compatible_p") {
        advance();
        if (at("("))
          skip_balanced();
        return opaque_group(b, name == "__builtin_va_arg" ? kReasonVarargs : "builtin with type operand: opaque");
      }
      if (is_specifier_token(t) && !kQualifiers.count(name))
        fail("unexpected type keyword");
      advance();
      return make(ExprKind::Identifier, b, std::string(name));
    }
    case TokenKind::Number: {
      advance();
      std::string s(t.text);
      bool is_float = s.find('.') != std::string::npos ||
                      (s.rfind("0x", 0) != 0 && s.rfind("0X", 0) != 0 && s.find_first_of("eE") != std::string::npos);
      return make(is_float ? ExprKind::FloatLiteral : ExprKind::IntLiteral, b, s);
    }
    case TokenKind::Char:
      advance();
      return make(ExprKind::CharLiteral, b, std::string(t.text));
    case TokenKind::String: {
      std::string s;
      while (peek().kind == TokenKind::String)
        s += advance().text;
      return make(ExprKind::StringLiteral, b, s);
    }
    case TokenKind::Punct:
      if (t.is("(")) {
        if (at("{", 1)) {
          skip_balanced();
          return opaque_group(b, kReasonStmtExpr);
        }
        advance();
        ExprPtr inner = parse_expression();
        expect(")");
        return inner;
      }
      break;
    default:
      break;
    }
    fail("unexpected token in expression");
  }

  // --- statements ----------------------------------------------------------
  StmtPtr make_stmt(StmtKind kind, std::size_t begin) {
    auto s = std::make_unique<Stmt>();
    s->kind = kind;
    s->span = span_from(begin);
    return s;
  }

  StmtPtr parse_compound() {
    std::size_t b = start();
    expect("{");
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::Compound;
    auto saved_typedefs = typedefs_;
    while (!at("}")) {
      if (at_end())
        fail("unterminated block");
      s->children.push_back(parse_statement());
    }
    expect("}");
    typedefs_ = std::move(saved_typedefs);
    s->span = span_from(b);
    return s;
  }

  StmtPtr recover_statement(std::size_t begin_pos) {
    pos_ = begin_pos;
    std::size_t b = start();
    int depth = 0;
    bool consumed = false;
    while (!at_end()) {
      if (depth == 0 && at("}") && consumed)
        break;
      if (at("(") || at("[") || at("{"))
        ++depth;
      else if (at(")") || at("]") || at("}"))
        --depth;
      bool semi = at(";");
      advance();
      consumed = true;
      if (depth <= 0 && (semi || (depth == 0 && toks_[pos_ - 1].is("}"))))
        break;
      if (depth < 0)
        break;
    }
    auto s = make_stmt(StmtKind::Opaque, b);
    s->opaque_reason = kReasonUnparsed;
    return s;
  }

  StmtPtr parse_statement() {
    std::size_t begin_pos = pos_;
    try {
      return parse_statement_inner();
    } catch (const ParseFailure &) {
      return recover_statement(begin_pos);
    }
  }

  StmtPtr parse_declaration_statement() {
    std::size_t b = start();
    if (at("_Static_assert")) {
      advance();
      skip_balanced();
      expect(";");
      return make_stmt(StmtKind::Empty, b);
    }
    Specifiers spec = parse_specifiers();
    if (!spec.any)
      fail("expected declaration");
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::Declaration;
    s->decls = parse_init_declarators(spec);
    s->span = span_from(b);
    return s;
  }

  StmtPtr parse_statement_inner() {
    std::size_t b = start();
    const Token &t = peek();
    if (t.is("{"))
      return parse_compound();
    if (t.is(";")) {
      advance();
      return make_stmt(StmtKind::Empty, b);
    }
    if (t.kind == TokenKind::Identifier) {
      std::string_view kw = t.text;
      if (kw == "if") {
        advance();
        expect("(");
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::If;
        s->expr = parse_expression();
        expect(")");
        s->children.push_back(parse_statement());
        if (accept("else"))
          s->children.push_back(parse_statement());
        s->span = span_from(b);
        return s;
      }
      if (kw == "while") {
        advance();
        expect("(");
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::While;
        s->expr = parse_expression();
        expect(")");
        s->children.push_back(parse_statement());
        s->span = span_from(b);
        return s;
      }
      if (kw == "do") {
        advance();
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::DoWhile;
        s->children.push_back(parse_statement());
        expect("while");
        expect("(");
        s->expr = parse_expression();
        expect(")");
        expect(";");
        s->span = span_from(b);
        return s;
      }
      if (kw == "for") {
        advance();
        expect("(");
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::For;
        auto saved_typedefs = typedefs_;
        if (accept(";")) {
        } else if (is_declaration_start()) {
          s->init = parse_declaration_statement();
        } else {
          std::size_t ib = start();
          auto init = std::make_unique<Stmt>();
          init->kind = StmtKind::Expression;
          init->expr = parse_expression();
          expect(";");
          init->span = span_from(ib);
          s->init = std::move(init);
        }
        if (!at(";"))
          s->expr = parse_expression();
        expect(";");
        if (!at(")"))
          s->step = parse_expression();
        expect(")");
        s->children.push_back(parse_statement());
        typedefs_ = std::move(saved_typedefs);
        s->span = span_from(b);
        return s;
      }
      if (kw == "switch") {
        advance();
        expect("(");
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::Switch;
        s->expr = parse_expression();
        expect(")");
        s->children.push_back(parse_statement());
        s->span = span_from(b);
        return s;
      }
      if (kw == "case") {
        advance();
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::Case;
        s->expr = parse_conditional();
        if (accept("..."))
          parse_conditional();
        expect(":");
        if (!at("}"))
          s->children.push_back(parse_statement());
        s->span = span_from(b);
        return s;
      }
      if (kw == "default" && at(":", 1)) {
        advance();
        advance();
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::Default;
        if (!at("}"))
          s->children.push_back(parse_statement());
        s->span = span_from(b);
        return s;
      }
      if (kw == "return") {
        advance();
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::Return;
        if (!at(";"))
          s->expr = parse_expression();
        expect(";");
        s->span = span_from(b);
        return s;
      }
      if (kw == "break" || kw == "continue") {
        advance();
        expect(";");
        return make_stmt(kw == "break" ? StmtKind::Break : StmtKind::Continue, b);
      }
      if (kw == "goto") {
        advance();
        std::string target;
        if (peek().kind == TokenKind::Identifier)
          target = std::string(advance().text);
        else
          parse_expression(); // computed goto
        expect(";");
        auto s = make_stmt(StmtKind::Opaque, b);
        s->opaque_reason = kReasonGoto;
        s->label = target;
        return s;
      }
      if (is_asm_keyword(kw)) {
        advance();
        while (peek().kind == TokenKind::Identifier)
          advance();
        if (at("("))
          skip_balanced();
        expect(";");
        auto s = make_stmt(StmtKind::Opaque, b);
        s->opaque_reason = kReasonAsm;
        return s;
      }
      if (at(":", 1) && !is_specifier_token(t)) {
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::Labeled;
        s->label = std::string(advance().text);
        advance();
        if (!at("}"))
          s->children.push_back(parse_statement());
        s->span = span_from(b);
        return s;
      }
      if (is_declaration_start())
        return parse_declaration_statement();
    }
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::Expression;
    s->expr = parse_expression();
    expect(";");
    s->span = span_from(b);
    return s;
  }

  // --- top level -----------------------------------------------------------
  void skip_region(std::size_t begin_pos, std::string reason) {
    pos_ = begin_pos;
    std::size_t b = start();
    int depth = 0;
    while (!at_end()) {
      if (at("(") || at("[") || at("{")) {
        ++depth;
      } else if (at(")") || at("]") || at("}")) {
        --depth;
        if (depth == 0 && at("}")) {
          advance();
          accept(";");
          break;
        }
      } else if (depth == 0 && at(";")) {
        advance();
        break;
      }
      advance();
    }
    unit_.skipped_regions.push_back({span_from(b), std::move(reason)});
  }

  // Old-style parameter declarations run up to the body; the body goes with them.
  void skip_knr_definition(std::size_t begin_pos) {
    pos_ = begin_pos;
    std::size_t b = start();
    int depth = 0;
    while (!at_end() && !(depth == 0 && at("{"))) {
      if (at("(") || at("["))
        ++depth;
      else if (at(")") || at("]"))
        --depth;
      advance();
    }
    if (at("{"))
      skip_balanced();
    unit_.skipped_regions.push_back({span_from(b), "K&R-style definition"});
  }

  void parse_external() {
    std::size_t begin_pos = pos_;
    std::size_t b = start();
    if (accept(";"))
      return;
    if (is_asm_keyword(peek().text)) {
      skip_region(begin_pos, "top-level asm");
      return;
    }
    if (at("_Static_assert")) {
      advance();
      skip_balanced();
      expect(";");
      return;
    }
    Specifiers spec = parse_specifiers();
    if (!spec.any && !(peek().kind == TokenKind::Identifier && at("(", 1)))
      fail("unrecognized top-level construct");
    if (accept(";"))
      return; // struct/union/enum definition only
    std::size_t decl_begin = start();
    DeclaratorResult dr = parse_declarator(false);
    skip_attributes();
    if (dr.function && !at(";") && !at(",") && !at("=")) {
      if (!at("{")) {
        skip_knr_definition(begin_pos);
        return;
      }
      FunctionAst fn;
      fn.name = dr.name;
      fn.return_type = join_type(spec.text, std::string(dr.pointer_depth, '*'));
      bool knr = false;
      fn.parameters = parse_parameters(dr.params_open, dr.params_close, fn.variadic, knr);
      if (knr) {
        skip_knr_definition(begin_pos);
        return;
      }
      for (std::size_t i = 0; i < fn.parameters.size(); ++i)
        for (std::size_t j = i + 1; j < fn.parameters.size(); ++j)
          if (!fn.parameters[i].name.empty() && fn.parameters[i].name == fn.parameters[j].name)
            fail("duplicate parameter name");
      auto saved_typedefs = typedefs_;
      std::size_t body_begin = start();
      fn.body = parse_compound();
      typedefs_ = std::move(saved_typedefs);
      fn.body_span = span_from(body_begin);
      fn.span = span_from(b);
      unit_.functions.push_back(std::move(fn));
      return;
    }
    // Ordinary declaration: rewind to the first declarator and parse all of them.
    pos_ = std::find_if(toks_.begin(), toks_.end(), [&](const Token &t) { return t.offset == decl_begin; }) - toks_.begin();
    std::vector<Declarator> decls = parse_init_declarators(spec);
    for (auto &d : decls) {
      GlobalDecl g;
      g.name = d.name;
      g.type = d.type;
      g.is_typedef = spec.is_typedef;
      g.is_prototype = d.function;
      g.init = std::move(d.init);
      g.span = d.span;
      unit_.globals.push_back(std::move(g));
    }
  }

public:
  std::set<std::string> unit_constants_;

private:
  std::string_view text_;
  const std::vector<Token> &toks_;
  const LineMap &lines_;
  TranslationUnit &unit_;
  std::set<std::string, std::less<>> typedefs_;
  std::size_t pos_ = 0;
  std::size_t last_end_ = 0;
};

void Parser::parse_translation_unit() {
  while (!at_end()) {
    std::size_t begin_pos = pos_;
    try {
      parse_external();
    } catch (const ParseFailure &) {
      skip_region(begin_pos, "unrecognized top-level construct");
    }
    if (pos_ == begin_pos)
      skip_region(begin_pos, "unrecognized top-level construct");
  }
}

bool balanced(const std::vector<Token> &toks) {
  std::vector<char> stack;
  for (const auto &t : toks) {
    if (t.kind != TokenKind::Punct || t.text.size() != 1)
      continue;
    char c = t.text[0];
    if (c == '(' || c == '[' || c == '{') {
      stack.push_back(c);
    } else if (c == ')' || c == ']' || c == '}') {
      char open = c == ')' ? '(' : c == ']' ? '[' : '{';
      if (stack.empty() || stack.back() != open)
        return false;
      stack.pop_back();
    }
  }
  return stack.empty();
}

bool calls_any(const Expr &e, std::initializer_list<std::string_view> names, std::string_view prefix = {}) {
  bool found = false;
  visit_expr(e, [&](const Expr &x) {
    if (x.kind != ExprKind::Identifier)
      return;
    for (auto n : names)
      if (x.op == n)
        found = true;
    if (!prefix.empty() && x.op.rfind(prefix, 0) == 0)
      found = true;
  });
  return found;
}

// Marks setjmp/longjmp and varargs statements opaque; they keep their expressions.
void mark_opaque_statements(Stmt &s, bool variadic) {
  if (s.kind == StmtKind::Expression || s.kind == StmtKind::Declaration) {
    bool jmp = false, va = false;
    for_each_own_expr(s, [&](const Expr &e) {
      jmp = jmp || calls_any(e, {"setjmp", "longjmp", "_setjmp", "_longjmp", "sigsetjmp", "siglongjmp",
                                 "__builtin_setjmp", "__builtin_longjmp"});
      va = va || calls_any(e, {"va_start", "va_arg", "va_end", "va_copy"}, "__builtin_va_");
    });
    if (jmp) {
      s.kind = StmtKind::Opaque;
      s.opaque_reason = kReasonSetjmp;
    } else if (va && variadic) {
      s.kind = StmtKind::Opaque;
      s.opaque_reason = kReasonVarargs;
    }
  }
  if (s.init)
    mark_opaque_statements(*s.init, variadic);
  for (auto &c : s.children)
    if (c)
      mark_opaque_statements(*c, variadic);
}

} // namespace

const FunctionAst *TranslationUnit::find_function(std::string_view name) const {
  for (const auto &f : functions)
    if (f.name == name)
      return &f;
  return nullptr;
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TranslationUnit parse_unit(std::string source_text, std::filesystem::path path) {
  TranslationUnit unit;
  unit.path = std::move(path);
  unit.source = std::move(source_text);
  std::string_view text = unit.source;
  LexResult lexed = lex(text);
  LineMap lines(unit.path.generic_string(), text);
  for (const auto &m : lexed.markers)
    lines.add_marker(m.physical_line, m.line, m.file);

  if (!balanced(lexed.tokens)) {
    unit.unbalanced = true;
    if (!text.empty())
      unit.skipped_regions.push_back({lines.span(0, text.size()), "unbalanced delimiters"});
    return unit;
  }

  Parser parser(text, lexed, lines, unit);
  parser.parse_translation_unit();
  for (auto &fn : unit.functions)
    mark_opaque_statements(*fn.body, fn.variadic);

  for (const auto &d : lexed.directives) {
    SkippedRegion region{lines.span(d.offset, d.end()), "residual preprocessor directive"};
    bool inside = std::any_of(unit.functions.begin(), unit.functions.end(),
                              [&](const FunctionAst &f) { return f.body_span.overlaps(region.span); });
    (inside ? unit.inline_directives : unit.skipped_regions).push_back(std::move(region));
  }
  std::sort(unit.skipped_regions.begin(), unit.skipped_regions.end(),
            [](const SkippedRegion &a, const SkippedRegion &b) { return a.span.byte_start < b.span.byte_start; });
  // Enumerators are recorded as typedef-less globals so later stages can treat them as constants.
  for (const auto &c : parser.unit_constants_) {
    GlobalDecl g;
    g.name = c;
    g.type = "enum constant";
    unit.globals.push_back(std::move(g));
  }
  return unit;
}

std::vector<SubsetIssue> supported_subset_report(const TranslationUnit &unit) {
  std::vector<SubsetIssue> out;
  for (const auto &r : unit.skipped_regions)
    out.push_back({r.span, r.reason});
  for (const auto &r : unit.inline_directives)
    out.push_back({r.span, r.reason});
  for (const auto &fn : unit.functions) {
    visit_stmt(*fn.body, [&](const Stmt &s) {
      if (s.kind == StmtKind::Opaque) {
        out.push_back({s.span, s.opaque_reason});
        return;
      }
      for_each_own_expr(s, [&](const Expr &e) {
        visit_expr(e, [&](const Expr &x) {
          if (x.kind == ExprKind::Opaque)
            out.push_back({x.span, x.opaque_reason});
        });
      });
    });
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SubsetIssue &a, const SubsetIssue &b) { return a.span.byte_start < b.span.byte_start; });
  return out;
}

} // namespace bugforge
