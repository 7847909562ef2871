#pragma once

// Recursive-descent parser for the .tsl kernel language. Collects every
// syntax error (with positions) rather than stopping at the first, then
// validates names, call targets, and the no-recursion rule.

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "shapecheck/ast.hpp"
#include "shapecheck/lexer.hpp"
#include "shapecheck/shapeops.hpp"

namespace shapecheck {

namespace parsedetail {

using namespace ast;
using lex::Tok;
using lex::Token;

struct Bail {};  // statement-level error recovery

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string file) : toks_(std::move(toks)), file_(std::move(file)) {}

  Program run(std::vector<Diag>& errors) {
    errors_ = &errors;
    Program p;
    p.file = file_;
    while (!at(Tok::End)) {
      if (accept(Tok::Newline)) continue;
      try {
        if (at(Tok::KwDef)) {
          p.functions.push_back(parseFuncDef());
        } else {
          p.entry.push_back(parseStatement());
        }
      } catch (const Bail&) {
        sync();
      }
    }
    validate(p);
    return p;
  }

 private:
  // -- token plumbing --
  const Token& peek(size_t ahead = 0) const {
    size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  bool at(Tok k) const { return peek().kind == k; }
  bool accept(Tok k) {
    if (!at(k)) return false;
    ++pos_;
    return true;
  }
  const Token& advance() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  const Token& expect(Tok k, const std::string& what) {
    if (!at(k)) fail(peek().pos, "expected " + what);
    return toks_[pos_++];
  }
  [[noreturn]] void fail(SourcePos pos, const std::string& msg) {
    errors_->push_back({std::move(pos), msg});
    throw Bail{};
  }
  void sync() {
    int depth = 0;
    while (!at(Tok::End)) {
      Tok k = peek().kind;
      if (k == Tok::Indent) ++depth;
      if (k == Tok::Dedent) {
        if (depth == 0) return;
        --depth;
      }
      ++pos_;
      if (k == Tok::Newline && depth == 0) return;
    }
  }

  // -- declarations and statements --
  FuncDef parseFuncDef() {
    FuncDef fn;
    fn.pos = peek().pos;
    expect(Tok::KwDef, "'def'");
    fn.name = expect(Tok::Ident, "function name").text;
    expect(Tok::LParen, "'('");
    if (!at(Tok::RParen)) {
      fn.params.push_back(expect(Tok::Ident, "parameter name").text);
      while (accept(Tok::Comma)) fn.params.push_back(expect(Tok::Ident, "parameter name").text);
    }
    expect(Tok::RParen, "')'");
    expect(Tok::Colon, "':'");
    fn.body = parseBlock();
    // `return` is only legal as the final statement of a function body
    for (size_t i = 0; i < fn.body.size(); ++i) {
      if (std::holds_alternative<Return>(fn.body[i]->v) && i + 1 != fn.body.size())
        errors_->push_back({fn.body[i]->pos, "'return' must be the last statement of the function body"});
    }
    inFunction_ = false;
    return fn;
  }

  Block parseBlock() {
    expect(Tok::Newline, "end of line");
    expect(Tok::Indent, "an indented block");
    Block b;
    while (!at(Tok::Dedent) && !at(Tok::End)) {
      if (accept(Tok::Newline)) continue;
      try {
        b.push_back(parseStatement());
      } catch (const Bail&) {
        sync();
      }
    }
    accept(Tok::Dedent);
    if (b.empty()) errors_->push_back({peek().pos, "empty block"});
    return b;
  }

  StmtPtr parseStatement() {
    const Token& t = peek();
    if (t.kind == Tok::KwIf) return parseIf();
    if (t.kind == Tok::KwFor) return parseFor();
    if (t.kind == Tok::KwReturn) {
      SourcePos pos = advance().pos;
      ExprPtr v = parseExpr();
      expect(Tok::Newline, "end of line");
      return stmt(Return{std::move(v)}, pos);
    }
    if (t.kind == Tok::KwPass) {
      SourcePos pos = advance().pos;
      expect(Tok::Newline, "end of line");
      return stmt(Pass{}, pos);
    }
    if (t.kind == Tok::KwDef) fail(t.pos, "nested function definitions are not supported");
    if (t.kind == Tok::Ident && peek(1).kind == Tok::Assign) {
      SourcePos pos = t.pos;
      std::string name = advance().text;
      advance();  // '='
      ExprPtr v = parseExpr();
      expect(Tok::Newline, "end of line");
      return stmt(Assign{std::move(name), std::move(v)}, pos);
    }
    SourcePos pos = t.pos;
    ExprPtr e = parseExpr();
    expect(Tok::Newline, "end of line");
    return stmt(ExprStmt{std::move(e)}, pos);
  }

  StmtPtr parseIf() {
    SourcePos pos = expect(Tok::KwIf, "'if'").pos;
    ExprPtr cond = parseExpr();
    expect(Tok::Colon, "':'");
    Block thenB = parseBlock();
    std::optional<Block> elseB;
    if (at(Tok::KwElse)) {
      advance();
      expect(Tok::Colon, "':'");
      elseB = parseBlock();
    }
    return stmt(If{std::move(cond), std::move(thenB), std::move(elseB)}, pos);
  }

  StmtPtr parseFor() {
    SourcePos pos = expect(Tok::KwFor, "'for'").pos;
    std::string var = expect(Tok::Ident, "loop variable").text;
    expect(Tok::KwIn, "'in'");
    ExprPtr iter = parseExpr();
    forIters_.insert(iter.get());
    expect(Tok::Colon, "':'");
    Block body = parseBlock();
    return stmt(For{std::move(var), std::move(iter), std::move(body)}, pos);
  }

  // -- expressions --
  ExprPtr parseExpr() { return parseOr(); }

  ExprPtr parseOr() {
    ExprPtr e = parseAnd();
    while (at(Tok::KwOr)) {
      SourcePos pos = advance().pos;
      e = expr(Bin{BinOp::Or, e, parseAnd()}, pos);
    }
    return e;
  }

  ExprPtr parseAnd() {
    ExprPtr e = parseNot();
    while (at(Tok::KwAnd)) {
      SourcePos pos = advance().pos;
      e = expr(Bin{BinOp::And, e, parseNot()}, pos);
    }
    return e;
  }

  ExprPtr parseNot() {
    if (at(Tok::KwNot)) {
      SourcePos pos = advance().pos;
      return expr(Unary{UnOp::Not, parseNot()}, pos);
    }
    return parseComparison();
  }

  ExprPtr parseComparison() {
    ExprPtr e = parseArith();
    BinOp op;
    switch (peek().kind) {
      case Tok::Less: op = BinOp::Lt; break;
      case Tok::LessEq: op = BinOp::Le; break;
      case Tok::Greater: op = BinOp::Gt; break;
      case Tok::GreaterEq: op = BinOp::Ge; break;
      case Tok::EqEq: op = BinOp::Eq; break;
      case Tok::NotEq: op = BinOp::Ne; break;
      default: return e;
    }
    SourcePos pos = advance().pos;
    return expr(Bin{op, e, parseArith()}, pos);  // comparisons do not chain
  }

  ExprPtr parseArith() {
    ExprPtr e = parseTerm();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      BinOp op = at(Tok::Plus) ? BinOp::Add : BinOp::Sub;
      SourcePos pos = advance().pos;
      e = expr(Bin{op, e, parseTerm()}, pos);
    }
    return e;
  }

  ExprPtr parseTerm() {
    ExprPtr e = parseUnary();
    while (at(Tok::Star) || at(Tok::FloorDiv) || at(Tok::Percent)) {
      BinOp op = at(Tok::Star) ? BinOp::Mul : at(Tok::FloorDiv) ? BinOp::FloorDiv : BinOp::Mod;
      SourcePos pos = advance().pos;
      e = expr(Bin{op, e, parseUnary()}, pos);
    }
    return e;
  }

  ExprPtr parseUnary() {
    if (at(Tok::Minus)) {
      SourcePos pos = advance().pos;
      return expr(Unary{UnOp::Neg, parseUnary()}, pos);
    }
    return parsePostfix();
  }

  ExprPtr parsePostfix() {
    ExprPtr e = parseAtom();
    while (true) {
      if (at(Tok::LParen)) {
        const auto* name = std::get_if<Name>(&e->v);
        if (name == nullptr) fail(peek().pos, "only named functions and ops can be called");
        e = parseCall(name->id, e->pos);
        continue;
      }
      if (at(Tok::LBracket)) {
        SourcePos pos = advance().pos;
        ExprPtr lo = parseExpr();
        if (accept(Tok::Colon)) {
          ExprPtr hi = parseExpr();
          expect(Tok::RBracket, "']'");
          e = expr(SliceSuffix{e, lo, hi}, pos);
        } else {
          expect(Tok::RBracket, "']'");
          e = expr(IndexSuffix{e, lo}, pos);
        }
        continue;
      }
      if (at(Tok::Dot)) {
        SourcePos pos = advance().pos;
        const Token& attr = expect(Tok::Ident, "attribute name");
        if (attr.text != "shape") fail(attr.pos, "only the '.shape' attribute is supported");
        e = expr(ShapeAttr{e}, pos);
        continue;
      }
      break;
    }
    return e;
  }

  ExprPtr parseCall(const std::string& callee, SourcePos pos) {
    expect(Tok::LParen, "'('");
    Call call;
    call.callee = callee;
    bool sawKw = false;
    if (!at(Tok::RParen)) {
      do {
        if (at(Tok::Ident) && peek(1).kind == Tok::Assign) {
          std::string kw = advance().text;
          advance();
          call.kwargs.emplace_back(kw, parseExpr());
          sawKw = true;
          continue;
        }
        if (sawKw) fail(peek().pos, "positional argument after keyword argument");
        if (at(Tok::Str)) {
          const Token& s = advance();
          if (!call.args.empty())
            errors_->push_back({s.pos, "a path literal is only allowed as the first argument"});
          call.args.push_back(expr(StrLit{s.text}, s.pos));
          continue;
        }
        call.args.push_back(parseExpr());
      } while (accept(Tok::Comma));
    }
    expect(Tok::RParen, "')'");
    return expr(std::move(call), pos);
  }

  ExprPtr parseAtom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Int: {
        advance();
        return expr(IntLit{t.intValue}, t.pos);
      }
      case Tok::KwTrue:
        advance();
        return expr(BoolLit{true}, t.pos);
      case Tok::KwFalse:
        advance();
        return expr(BoolLit{false}, t.pos);
      case Tok::KwArgs: {
        advance();
        expect(Tok::Dot, "'.' after 'args'");
        const Token& name = expect(Tok::Ident, "argument name");
        return expr(ArgRef{name.text}, t.pos);
      }
      case Tok::Ident:
        advance();
        return expr(Name{t.text}, t.pos);
      case Tok::LParen: {
        advance();
        ExprPtr e = parseExpr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::Str:
        fail(t.pos, "string literals are only allowed as call arguments");
      default:
        fail(t.pos, "expected an expression");
    }
  }

  // -- validation --
  void validate(Program& p) {
    std::set<std::string> names;
    for (const auto& fn : p.functions) {
      if (!names.insert(fn.name).second)
        errors_->push_back({fn.pos, "duplicate function name '" + fn.name + "'"});
      if (OpCatalog::instance().lookup(fn.name) != nullptr)
        errors_->push_back({fn.pos, "function name '" + fn.name + "' shadows a tensor op"});
    }

    // Call targets must exist; `range` appears only as a loop iterator.
    auto checkExpr = [&](const ExprPtr& e, auto&& self) -> void {
      if (const auto* c = std::get_if<Call>(&e->v)) {
        if (c->callee == "range") {
          if (forIters_.count(e.get()) == 0)
            errors_->push_back({e->pos, "'range' is only allowed as a for-loop iterator"});
        } else if (p.findFunction(c->callee) == nullptr &&
                   OpCatalog::instance().lookup(c->callee) == nullptr) {
          errors_->push_back({e->pos, "unknown function or tensor op '" + c->callee + "'"});
        }
        if (!c->kwargs.empty() && c->callee != "dataset")
          errors_->push_back({e->pos, "keyword arguments are only supported by 'dataset'"});
        for (const auto& [kw, v] : c->kwargs) {
          if (kw != "batch_size" && kw != "drop_last")
            errors_->push_back({v->pos, "unknown keyword '" + kw + "'"});
          if (kw == "drop_last" && std::get_if<BoolLit>(&v->v) == nullptr)
            errors_->push_back({v->pos, "'drop_last' must be a True/False literal"});
        }
        for (const auto& a : c->args) self(a, self);
        for (const auto& [_, v] : c->kwargs) self(v, self);
        return;
      }
      if (const auto* u = std::get_if<Unary>(&e->v)) return self(u->operand, self);
      if (const auto* b = std::get_if<Bin>(&e->v)) {
        self(b->lhs, self);
        self(b->rhs, self);
        return;
      }
      if (const auto* ix = std::get_if<IndexSuffix>(&e->v)) {
        self(ix->base, self);
        self(ix->index, self);
        return;
      }
      if (const auto* sl = std::get_if<SliceSuffix>(&e->v)) {
        self(sl->base, self);
        self(sl->lo, self);
        self(sl->hi, self);
        return;
      }
      if (const auto* sa = std::get_if<ShapeAttr>(&e->v)) return self(sa->base, self);
    };
    std::function<void(const Block&)> checkBlock = [&](const Block& b) {
      for (const auto& s : b) {
        if (const auto* a = std::get_if<Assign>(&s->v)) checkExpr(a->value, checkExpr);
        else if (const auto* e = std::get_if<ExprStmt>(&s->v)) checkExpr(e->expr, checkExpr);
        else if (const auto* r = std::get_if<Return>(&s->v)) checkExpr(r->value, checkExpr);
        else if (const auto* f = std::get_if<If>(&s->v)) {
          checkExpr(f->cond, checkExpr);
          checkBlock(f->thenBlock);
          if (f->elseBlock) checkBlock(*f->elseBlock);
        } else if (const auto* l = std::get_if<For>(&s->v)) {
          checkExpr(l->iter, checkExpr);
          checkBlock(l->body);
        }
      }
    };
    for (const auto& fn : p.functions) checkBlock(fn.body);
    checkBlock(p.entry);

    if (errors_->empty()) checkAcyclic(p);
  }

  /// The call graph over user functions must be acyclic.
  void checkAcyclic(const Program& p) {
    std::map<std::string, std::set<std::string>> edges;
    std::map<std::string, SourcePos> defPos;
    for (const auto& fn : p.functions) {
      defPos[fn.name] = fn.pos;
      std::set<std::string>& out = edges[fn.name];
      std::function<void(const ExprPtr&)> visitE = [&](const ExprPtr& e) {
        if (const auto* c = std::get_if<Call>(&e->v)) {
          if (p.findFunction(c->callee) != nullptr) out.insert(c->callee);
          for (const auto& a : c->args) visitE(a);
          for (const auto& [_, v] : c->kwargs) visitE(v);
          return;
        }
        if (const auto* u = std::get_if<Unary>(&e->v)) return visitE(u->operand);
        if (const auto* b = std::get_if<Bin>(&e->v)) {
          visitE(b->lhs);
          visitE(b->rhs);
          return;
        }
        if (const auto* ix = std::get_if<IndexSuffix>(&e->v)) {
          visitE(ix->base);
          visitE(ix->index);
          return;
        }
        if (const auto* sl = std::get_if<SliceSuffix>(&e->v)) {
          visitE(sl->base);
          visitE(sl->lo);
          visitE(sl->hi);
          return;
        }
        if (const auto* sa = std::get_if<ShapeAttr>(&e->v)) return visitE(sa->base);
      };
      std::function<void(const Block&)> visitB = [&](const Block& b) {
        for (const auto& s : b) {
          if (const auto* a = std::get_if<Assign>(&s->v)) visitE(a->value);
          else if (const auto* e = std::get_if<ExprStmt>(&s->v)) visitE(e->expr);
          else if (const auto* r = std::get_if<Return>(&s->v)) visitE(r->value);
          else if (const auto* f = std::get_if<If>(&s->v)) {
            visitE(f->cond);
            visitB(f->thenBlock);
            if (f->elseBlock) visitB(*f->elseBlock);
          } else if (const auto* l = std::get_if<For>(&s->v)) {
            visitE(l->iter);
            visitB(l->body);
          }
        }
      };
      visitB(fn.body);
    }
    std::set<std::string> done, onPath;
    std::vector<std::string> trail;
    std::function<void(const std::string&)> dfs = [&](const std::string& f) {
      if (done.count(f)) return;
      if (onPath.count(f)) {
        std::string cycle;
        bool in = false;
        for (const auto& g : trail) {
          if (g == f) in = true;
          if (in) cycle += g + " -> ";
        }
        cycle += f;
        throw RecursionError(cycle, defPos[f]);
      }
      onPath.insert(f);
      trail.push_back(f);
      for (const auto& g : edges[f]) dfs(g);
      trail.pop_back();
      onPath.erase(f);
      done.insert(f);
    };
    for (const auto& [f, _] : edges) dfs(f);
  }

  std::vector<Token> toks_;
  std::string file_;
  std::vector<Diag>* errors_ = nullptr;
  bool inFunction_ = false;
  std::set<const Expr*> forIters_;
  size_t pos_ = 0;
};

}  // namespace parsedetail

/// Parses .tsl source. Throws ParseError listing every syntax error, or
/// RecursionError when the call graph is cyclic.
inline ast::Program parse_source(const std::string& text, const std::string& file) {
  std::vector<Diag> errors;
  lex::Lexer lexer(text, file);
  std::vector<lex::Token> toks = lexer.run(errors);
  parsedetail::Parser parser(std::move(toks), file);
  ast::Program p = parser.run(errors);
  if (!errors.empty()) throw ParseError(std::move(errors));
  return p;
}

}  // namespace shapecheck
