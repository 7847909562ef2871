#pragma once

// Line- and indentation-aware lexer for .tsl source. Indentation uses spaces
// only; newlines inside parentheses or brackets do not terminate statements.

#include <string>
#include <vector>

#include "shapecheck/source_pos.hpp"

namespace shapecheck::lex {

enum class Tok {
  Ident, Int, Str,
  KwDef, KwIf, KwElse, KwFor, KwIn, KwReturn, KwPass, KwAnd, KwOr, KwNot, KwTrue, KwFalse, KwArgs,
  Newline, Indent, Dedent,
  LParen, RParen, LBracket, RBracket, Colon, Comma, Dot,
  Assign, EqEq, NotEq, Less, LessEq, Greater, GreaterEq,
  Plus, Minus, Star, FloorDiv, Percent,
  End
};

struct Token {
  Tok kind;
  std::string text;
  long long intValue = 0;
  SourcePos pos;
};

class Lexer {
 public:
  Lexer(std::string source, std::string file) : src_(std::move(source)), file_(std::move(file)) {}

  /// Tokenizes the whole input; collects every error instead of stopping.
  std::vector<Token> run(std::vector<Diag>& errors) {
    std::vector<Token> out;
    indents_.push_back(0);
    size_t i = 0;
    size_t line = 1;
    bool atLineStart = true;
    int nesting = 0;

    auto pos = [&](size_t col, size_t span) {
      return SourcePos{file_, static_cast<int>(line), static_cast<int>(col), static_cast<int>(span)};
    };

    size_t lineBegin = 0;
    while (i <= src_.size()) {
      if (atLineStart && nesting == 0) {
        lineBegin = i;
        size_t spaces = 0;
        bool sawTab = false;
        while (i < src_.size() && (src_[i] == ' ' || src_[i] == '\t')) {
          if (src_[i] == '\t') sawTab = true;
          ++spaces;
          ++i;
        }
        if (i >= src_.size()) break;
        if (src_[i] == '\n' || src_[i] == '\r' || src_[i] == '#') {
          // blank or comment-only line
          while (i < src_.size() && src_[i] != '\n') ++i;
          if (i < src_.size()) ++i;
          ++line;
          continue;
        }
        if (sawTab) errors.push_back({pos(1, spaces), "tabs are not allowed in indentation"});
        size_t col = i - lineBegin + 1;
        if (spaces > indents_.back()) {
          indents_.push_back(spaces);
          out.push_back({Tok::Indent, "", 0, pos(col, 0)});
        } else {
          while (spaces < indents_.back()) {
            indents_.pop_back();
            out.push_back({Tok::Dedent, "", 0, pos(col, 0)});
          }
          if (spaces != indents_.back())
            errors.push_back({pos(col, 0), "unindent does not match any outer indentation level"});
        }
        atLineStart = false;
        continue;
      }
      if (i >= src_.size()) break;
      char c = src_[i];
      size_t col = i - lineBegin + 1;

      if (c == '#') {
        while (i < src_.size() && src_[i] != '\n') ++i;
        continue;
      }
      if (c == '\r') {
        ++i;
        continue;
      }
      if (c == '\n') {
        ++i;
        ++line;
        if (nesting == 0) {
          out.push_back({Tok::Newline, "", 0, pos(col, 1)});
          atLineStart = true;
        }
        if (nesting > 0) lineBegin = i;  // keep columns roughly sane inside groups
        if (nesting == 0) lineBegin = i;
        continue;
      }
      if (c == ' ' || c == '\t') {
        ++i;
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        size_t start = i;
        while (i < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i]))) ++i;
        std::string text = src_.substr(start, i - start);
        Token t{Tok::Int, text, 0, pos(col, i - start)};
        try {
          t.intValue = std::stoll(text);
        } catch (...) {
          errors.push_back({t.pos, "integer literal out of range"});
        }
        out.push_back(std::move(t));
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t start = i;
        while (i < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[i])) || src_[i] == '_'))
          ++i;
        std::string text = src_.substr(start, i - start);
        Tok k = keyword(text);
        out.push_back({k, text, 0, pos(col, i - start)});
        continue;
      }
      if (c == '\'' || c == '"') {
        char quote = c;
        size_t start = ++i;
        while (i < src_.size() && src_[i] != quote && src_[i] != '\n') ++i;
        if (i >= src_.size() || src_[i] != quote) {
          errors.push_back({pos(col, i - start), "unterminated string literal"});
        }
        std::string text = src_.substr(start, i - start);
        if (i < src_.size() && src_[i] == quote) ++i;
        out.push_back({Tok::Str, text, 0, pos(col, text.size() + 2)});
        continue;
      }
      auto two = [&](char a, char b) { return c == a && i + 1 < src_.size() && src_[i + 1] == b; };
      if (two('/', '/')) { out.push_back({Tok::FloorDiv, "//", 0, pos(col, 2)}); i += 2; continue; }
      if (two('=', '=')) { out.push_back({Tok::EqEq, "==", 0, pos(col, 2)}); i += 2; continue; }
      if (two('!', '=')) { out.push_back({Tok::NotEq, "!=", 0, pos(col, 2)}); i += 2; continue; }
      if (two('<', '=')) { out.push_back({Tok::LessEq, "<=", 0, pos(col, 2)}); i += 2; continue; }
      if (two('>', '=')) { out.push_back({Tok::GreaterEq, ">=", 0, pos(col, 2)}); i += 2; continue; }
      Tok k;
      switch (c) {
        case '(': k = Tok::LParen; ++nesting; break;
        case ')': k = Tok::RParen; if (nesting > 0) --nesting; break;
        case '[': k = Tok::LBracket; ++nesting; break;
        case ']': k = Tok::RBracket; if (nesting > 0) --nesting; break;
        case ':': k = Tok::Colon; break;
        case ',': k = Tok::Comma; break;
        case '.': k = Tok::Dot; break;
        case '=': k = Tok::Assign; break;
        case '<': k = Tok::Less; break;
        case '>': k = Tok::Greater; break;
        case '+': k = Tok::Plus; break;
        case '-': k = Tok::Minus; break;
        case '*': k = Tok::Star; break;
        case '%': k = Tok::Percent; break;
        default:
          errors.push_back({pos(col, 1), std::string("unexpected character '") + c + "'"});
          ++i;
          continue;
      }
      out.push_back({k, std::string(1, c), 0, pos(col, 1)});
      ++i;
    }

    SourcePos endPos{file_, static_cast<int>(line), 1, 0};
    if (!out.empty() && out.back().kind != Tok::Newline && out.back().kind != Tok::Dedent)
      out.push_back({Tok::Newline, "", 0, endPos});
    while (indents_.size() > 1) {
      indents_.pop_back();
      out.push_back({Tok::Dedent, "", 0, endPos});
    }
    out.push_back({Tok::End, "", 0, endPos});
    return out;
  }

 private:
  static Tok keyword(const std::string& text) {
    if (text == "def") return Tok::KwDef;
    if (text == "if") return Tok::KwIf;
    if (text == "else") return Tok::KwElse;
    if (text == "for") return Tok::KwFor;
    if (text == "in") return Tok::KwIn;
    if (text == "return") return Tok::KwReturn;
    if (text == "pass") return Tok::KwPass;
    if (text == "and") return Tok::KwAnd;
    if (text == "or") return Tok::KwOr;
    if (text == "not") return Tok::KwNot;
    if (text == "True") return Tok::KwTrue;
    if (text == "False") return Tok::KwFalse;
    if (text == "args") return Tok::KwArgs;
    return Tok::Ident;
  }

  std::string src_;
  std::string file_;
  std::vector<size_t> indents_;
};

}  // namespace shapecheck::lex
