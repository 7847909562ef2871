#pragma once

// Canonical pretty-printer for the surface AST. parse . pretty is a fixpoint:
// pretty(parse(pretty(parse(s)))) == pretty(parse(s)).

#include <sstream>
#include <string>

#include "shapecheck/ast.hpp"

namespace shapecheck {

namespace prettydetail {

using namespace ast;

inline int prec_of(BinOp op) {
  switch (op) {
    case BinOp::Or: return 1;
    case BinOp::And: return 2;
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge:
    case BinOp::Eq:
    case BinOp::Ne: return 4;
    case BinOp::Add:
    case BinOp::Sub: return 5;
    case BinOp::Mul:
    case BinOp::FloorDiv:
    case BinOp::Mod: return 6;
  }
  return 0;
}

inline const char* token_of(BinOp op) {
  switch (op) {
    case BinOp::Or: return "or";
    case BinOp::And: return "and";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::FloorDiv: return "//";
    case BinOp::Mod: return "%";
  }
  return "?";
}

struct Printer {
  std::ostringstream os;

  void expr(const ExprPtr& e, int minPrec = 0) {
    const auto& n = e->v;
    if (const auto* i = std::get_if<IntLit>(&n)) {
      os << i->value;
      return;
    }
    if (const auto* b = std::get_if<BoolLit>(&n)) {
      os << (b->value ? "True" : "False");
      return;
    }
    if (const auto* s = std::get_if<StrLit>(&n)) {
      os << '\'' << s->value << '\'';
      return;
    }
    if (const auto* v = std::get_if<Name>(&n)) {
      os << v->id;
      return;
    }
    if (const auto* a = std::get_if<ArgRef>(&n)) {
      os << "args." << a->name;
      return;
    }
    if (const auto* u = std::get_if<Unary>(&n)) {
      int prec = u->op == UnOp::Not ? 3 : 7;
      bool paren = prec < minPrec;
      if (paren) os << '(';
      os << (u->op == UnOp::Not ? "not " : "-");
      expr(u->operand, prec);
      if (paren) os << ')';
      return;
    }
    if (const auto* b = std::get_if<Bin>(&n)) {
      int prec = prec_of(b->op);
      bool paren = prec < minPrec;
      if (paren) os << '(';
      expr(b->lhs, prec);
      os << ' ' << token_of(b->op) << ' ';
      expr(b->rhs, prec + 1);
      if (paren) os << ')';
      return;
    }
    if (const auto* c = std::get_if<Call>(&n)) {
      os << c->callee << '(';
      bool first = true;
      for (const auto& a : c->args) {
        if (!first) os << ", ";
        expr(a);
        first = false;
      }
      for (const auto& [k, v] : c->kwargs) {
        if (!first) os << ", ";
        os << k << '=';
        expr(v);
        first = false;
      }
      os << ')';
      return;
    }
    if (const auto* ix = std::get_if<IndexSuffix>(&n)) {
      expr(ix->base, 8);
      os << '[';
      expr(ix->index);
      os << ']';
      return;
    }
    if (const auto* sl = std::get_if<SliceSuffix>(&n)) {
      expr(sl->base, 8);
      os << '[';
      expr(sl->lo);
      os << ':';
      expr(sl->hi);
      os << ']';
      return;
    }
    const auto& sa = std::get<ShapeAttr>(n);
    expr(sa.base, 8);
    os << ".shape";
  }

  void indent(int level) {
    for (int i = 0; i < level; ++i) os << "    ";
  }

  void block(const Block& b, int level) {
    for (const auto& s : b) statement(s, level);
  }

  void statement(const StmtPtr& s, int level) {
    const auto& n = s->v;
    indent(level);
    if (const auto* a = std::get_if<Assign>(&n)) {
      os << a->name << " = ";
      expr(a->value);
      os << '\n';
      return;
    }
    if (const auto* e = std::get_if<ExprStmt>(&n)) {
      expr(e->expr);
      os << '\n';
      return;
    }
    if (const auto* r = std::get_if<Return>(&n)) {
      os << "return ";
      expr(r->value);
      os << '\n';
      return;
    }
    if (std::holds_alternative<Pass>(n)) {
      os << "pass\n";
      return;
    }
    if (const auto* f = std::get_if<If>(&n)) {
      os << "if ";
      expr(f->cond);
      os << ":\n";
      block(f->thenBlock, level + 1);
      if (f->elseBlock) {
        indent(level);
        os << "else:\n";
        block(*f->elseBlock, level + 1);
      }
      return;
    }
    const auto& l = std::get<For>(n);
    os << "for " << l.var << " in ";
    expr(l.iter);
    os << ":\n";
    block(l.body, level + 1);
  }
};

}  // namespace prettydetail

inline std::string pretty(const ast::Program& p) {
  prettydetail::Printer pr;
  for (const auto& fn : p.functions) {
    pr.os << "def " << fn.name << '(';
    for (size_t i = 0; i < fn.params.size(); ++i) pr.os << (i ? ", " : "") << fn.params[i];
    pr.os << "):\n";
    pr.block(fn.body, 1);
    pr.os << '\n';
  }
  pr.block(p.entry, 0);
  return pr.os.str();
}

}  // namespace shapecheck
