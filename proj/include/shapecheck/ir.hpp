#pragma once

// Lowered intermediate representation. Closed after lowering: argument
// references are replaced by constants and counted-loop bounds are integer
// literals.

#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "shapecheck/source_pos.hpp"

namespace shapecheck::ir {

struct IRExpr;
using IRPtr = std::shared_ptr<const IRExpr>;

enum class IROp { Add, Sub, Mul, FloorDiv, Mod, Lt, Eq, And, Or, Not };

inline const char* ir_op_token(IROp op) {
  switch (op) {
    case IROp::Add: return "+";
    case IROp::Sub: return "-";
    case IROp::Mul: return "*";
    case IROp::FloorDiv: return "//";
    case IROp::Mod: return "%";
    case IROp::Lt: return "<";
    case IROp::Eq: return "=";
    case IROp::And: return "and";
    case IROp::Or: return "or";
    case IROp::Not: return "not";
  }
  return "?";
}

struct IRInt { long long value; };
struct IRBool { bool value; };
struct IRVar { std::string name; };
struct IRLet { std::string name; IRPtr bound, body; };
struct IRIf { IRPtr cond, thenE, elseE; };
struct IRBin { IROp op; IRPtr lhs, rhs; };  // Not is unary: rhs is null
struct IRCall { std::string fname; std::vector<IRPtr> args; };
struct IRTensor { std::string op; std::vector<IRPtr> args; std::string strArg; };
struct IRSeq { std::vector<IRPtr> items; };
struct IRForRange { std::string var; long long lo, hi; IRPtr body; };
struct IRForDataset { std::string var; IRPtr dataset; IRPtr body; };

struct IRExpr {
  std::variant<IRInt, IRBool, IRVar, IRLet, IRIf, IRBin, IRCall, IRTensor, IRSeq, IRForRange, IRForDataset> v;
  SourcePos pos;
};

template <typename T>
IRPtr make(T node, SourcePos pos) {
  return std::make_shared<IRExpr>(IRExpr{std::move(node), std::move(pos)});
}

struct LoweredFunction {
  std::vector<std::string> params;
  IRPtr body;
  SourcePos pos;
};

struct LoweredUnit {
  IRPtr entry;
  std::map<std::string, LoweredFunction> functions;
};

// Structural dump with positions; two lowerings are identical iff their
// dumps match byte for byte.
inline void dump(const IRPtr& e, std::ostream& os) {
  const auto& n = e->v;
  os << '{' << e->pos.line << ':' << e->pos.column << ' ';
  if (const auto* i = std::get_if<IRInt>(&n)) os << i->value;
  else if (const auto* b = std::get_if<IRBool>(&n)) os << (b->value ? "true" : "false");
  else if (const auto* v = std::get_if<IRVar>(&n)) os << v->name;
  else if (const auto* l = std::get_if<IRLet>(&n)) {
    os << "(let " << l->name << ' ';
    dump(l->bound, os);
    os << ' ';
    dump(l->body, os);
    os << ')';
  } else if (const auto* f = std::get_if<IRIf>(&n)) {
    os << "(if ";
    dump(f->cond, os);
    os << ' ';
    dump(f->thenE, os);
    os << ' ';
    dump(f->elseE, os);
    os << ')';
  } else if (const auto* b2 = std::get_if<IRBin>(&n)) {
    os << '(' << ir_op_token(b2->op) << ' ';
    dump(b2->lhs, os);
    if (b2->rhs) {
      os << ' ';
      dump(b2->rhs, os);
    }
    os << ')';
  } else if (const auto* c = std::get_if<IRCall>(&n)) {
    os << "(call " << c->fname;
    for (const auto& a : c->args) {
      os << ' ';
      dump(a, os);
    }
    os << ')';
  } else if (const auto* t = std::get_if<IRTensor>(&n)) {
    os << "(op " << t->op;
    if (!t->strArg.empty()) os << " \"" << t->strArg << '"';
    for (const auto& a : t->args) {
      os << ' ';
      dump(a, os);
    }
    os << ')';
  } else if (const auto* s = std::get_if<IRSeq>(&n)) {
    os << "(seq";
    for (const auto& a : s->items) {
      os << ' ';
      dump(a, os);
    }
    os << ')';
  } else if (const auto* r = std::get_if<IRForRange>(&n)) {
    os << "(for " << r->var << ' ' << r->lo << ' ' << r->hi << ' ';
    dump(r->body, os);
    os << ')';
  } else {
    const auto& d = std::get<IRForDataset>(n);
    os << "(for-dataset " << d.var << ' ';
    dump(d.dataset, os);
    os << ' ';
    dump(d.body, os);
    os << ')';
  }
  os << '}';
}

inline std::string dump(const LoweredUnit& u) {
  std::ostringstream os;
  for (const auto& [name, fn] : u.functions) {
    os << "def " << name << '(';
    for (size_t i = 0; i < fn.params.size(); ++i) os << (i ? "," : "") << fn.params[i];
    os << ") ";
    dump(fn.body, os);
    os << '\n';
  }
  os << "entry ";
  dump(u.entry, os);
  os << '\n';
  return os.str();
}

}  // namespace shapecheck::ir
