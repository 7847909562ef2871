#pragma once

// Structural utilities over value expressions and constraint formulas:
// substitution, free-symbol collection, ground evaluation, and the canonical
// s-expression serialization used in reports and golden tests.

#include <map>
#include <set>
#include <sstream>
#include <string>

#include "shapecheck/constraint.hpp"
#include "shapecheck/expr.hpp"

namespace shapecheck {

// ---- free symbols ----

namespace detail {
inline void collect(const NumExpr& e, std::set<Sym>& out);
inline void collect(const ShapeExpr& e, std::set<Sym>& out);
inline void collect(const BoolExpr& e, std::set<Sym>& out);

inline void collect(const ValueExpr& v, std::set<Sym>& out) {
  if (const auto* n = std::get_if<NumExpr>(&v)) collect(*n, out);
  else if (const auto* s = std::get_if<ShapeExpr>(&v)) collect(*s, out);
  else collect(std::get<BoolExpr>(v), out);
}

inline void collect(const NumExpr& e, std::set<Sym>& out) {
  const auto& n = e.node().v;
  if (const auto* s = std::get_if<NumSym>(&n)) { out.insert(s->sym); return; }
  if (const auto* b = std::get_if<NumBin>(&n)) { collect(b->lhs, out); collect(b->rhs, out); return; }
  if (const auto* r = std::get_if<NumRank>(&n)) { collect(r->arg, out); return; }
  if (const auto* i = std::get_if<NumIndexOf>(&n)) { collect(i->shape, out); collect(i->index, out); return; }
  if (const auto* p = std::get_if<NumProd>(&n)) { collect(p->arg, out); return; }
}

inline void collect(const ShapeExpr& e, std::set<Sym>& out) {
  const auto& n = e.node().v;
  if (const auto* t = std::get_if<ShapeTuple>(&n)) {
    for (const auto& d : t->dims) collect(d, out);
    return;
  }
  if (const auto* s = std::get_if<ShapeSym>(&n)) { out.insert(s->sym); return; }
  if (const auto* sl = std::get_if<ShapeSlice>(&n)) {
    collect(sl->base, out); collect(sl->lo, out); collect(sl->hi, out);
    return;
  }
  const auto& c = std::get<ShapeConcat>(n);
  collect(c.lhs, out); collect(c.rhs, out);
}

inline void collect(const BoolExpr& e, std::set<Sym>& out) {
  const auto& n = e.node().v;
  if (const auto* s = std::get_if<BoolSym>(&n)) { out.insert(s->sym); return; }
  if (const auto* a = std::get_if<BoolAnd>(&n)) { collect(a->lhs, out); collect(a->rhs, out); return; }
  if (const auto* o = std::get_if<BoolOr>(&n)) { collect(o->lhs, out); collect(o->rhs, out); return; }
  if (const auto* nn = std::get_if<BoolNot>(&n)) { collect(nn->arg, out); return; }
  if (const auto* q = std::get_if<BoolEq>(&n)) { collect(q->lhs, out); collect(q->rhs, out); return; }
  if (const auto* l = std::get_if<BoolLt>(&n)) { collect(l->lhs, out); collect(l->rhs, out); return; }
}
}  // namespace detail

template <typename E>
std::set<Sym> free_symbols(const E& e) {
  std::set<Sym> out;
  detail::collect(e, out);
  return out;
}

/// Symbols occurring outside Forall binders.
inline std::set<Sym> free_symbols(const Formula& f) {
  std::set<Sym> out;
  const auto& n = f.node().v;
  if (const auto* a = std::get_if<FAtom>(&n)) detail::collect(a->expr, out);
  else if (const auto* an = std::get_if<FAnd>(&n)) {
    for (auto s : free_symbols(an->lhs)) out.insert(s);
    for (auto s : free_symbols(an->rhs)) out.insert(s);
  } else if (const auto* o = std::get_if<FOr>(&n)) {
    for (auto s : free_symbols(o->lhs)) out.insert(s);
    for (auto s : free_symbols(o->rhs)) out.insert(s);
  } else if (const auto* nn = std::get_if<FNot>(&n)) {
    out = free_symbols(nn->arg);
  } else {
    const auto& q = std::get<FForall>(n);
    detail::collect(q.lo, out);
    detail::collect(q.hi, out);
    auto body = free_symbols(q.body);
    body.erase(q.binder);
    for (auto s : body) out.insert(s);
  }
  return out;
}

// ---- substitution ----

using Binding = std::map<int32_t, ValueExpr>;  // symbol id -> replacement

namespace detail {
inline void check_binding_sort(Sym s, const ValueExpr& v) {
  if (sort_of(v) != s.sort)
    throw SortError(std::string("substitution binds ") + sort_name(s.sort) + " symbol to a " +
                    sort_name(sort_of(v)) + " expression");
}
}  // namespace detail

inline NumExpr substitute(const NumExpr& e, const Binding& b);
inline ShapeExpr substitute(const ShapeExpr& e, const Binding& b);
inline BoolExpr substitute(const BoolExpr& e, const Binding& b);

inline ValueExpr substitute(const ValueExpr& v, const Binding& b) {
  if (const auto* n = std::get_if<NumExpr>(&v)) return substitute(*n, b);
  if (const auto* s = std::get_if<ShapeExpr>(&v)) return substitute(*s, b);
  return substitute(std::get<BoolExpr>(v), b);
}

inline NumExpr substitute(const NumExpr& e, const Binding& b) {
  const auto& n = e.node().v;
  if (std::holds_alternative<NumConst>(n)) return e;
  if (const auto* s = std::get_if<NumSym>(&n)) {
    auto it = b.find(s->sym.id);
    if (it == b.end()) return e;
    detail::check_binding_sort(s->sym, it->second);
    return std::get<NumExpr>(it->second);
  }
  if (const auto* o = std::get_if<NumBin>(&n)) return nbin(o->op, substitute(o->lhs, b), substitute(o->rhs, b));
  if (const auto* r = std::get_if<NumRank>(&n)) return nrank(substitute(r->arg, b));
  if (const auto* i = std::get_if<NumIndexOf>(&n)) return nindex(substitute(i->shape, b), substitute(i->index, b));
  return nprod(substitute(std::get<NumProd>(n).arg, b));
}

inline ShapeExpr substitute(const ShapeExpr& e, const Binding& b) {
  const auto& n = e.node().v;
  if (const auto* t = std::get_if<ShapeTuple>(&n)) {
    std::vector<NumExpr> dims;
    dims.reserve(t->dims.size());
    for (const auto& d : t->dims) dims.push_back(substitute(d, b));
    return stuple(std::move(dims));
  }
  if (const auto* s = std::get_if<ShapeSym>(&n)) {
    auto it = b.find(s->sym.id);
    if (it == b.end()) return e;
    detail::check_binding_sort(s->sym, it->second);
    return std::get<ShapeExpr>(it->second);
  }
  if (const auto* sl = std::get_if<ShapeSlice>(&n))
    return sslice(substitute(sl->base, b), substitute(sl->lo, b), substitute(sl->hi, b));
  const auto& c = std::get<ShapeConcat>(n);
  return sconcat(substitute(c.lhs, b), substitute(c.rhs, b));
}

inline BoolExpr substitute(const BoolExpr& e, const Binding& b) {
  const auto& n = e.node().v;
  if (std::holds_alternative<BoolConst>(n)) return e;
  if (const auto* s = std::get_if<BoolSym>(&n)) {
    auto it = b.find(s->sym.id);
    if (it == b.end()) return e;
    detail::check_binding_sort(s->sym, it->second);
    return std::get<BoolExpr>(it->second);
  }
  if (const auto* a = std::get_if<BoolAnd>(&n)) return band(substitute(a->lhs, b), substitute(a->rhs, b));
  if (const auto* o = std::get_if<BoolOr>(&n)) return bor(substitute(o->lhs, b), substitute(o->rhs, b));
  if (const auto* nn = std::get_if<BoolNot>(&n)) return bnot(substitute(nn->arg, b));
  if (const auto* q = std::get_if<BoolEq>(&n)) return beq(substitute(q->lhs, b), substitute(q->rhs, b));
  const auto& l = std::get<BoolLt>(n);
  return blt(substitute(l.lhs, b), substitute(l.rhs, b));
}

/// Substitution over formulas; the Forall binder shadows any binding for it.
inline Formula substitute(const Formula& f, const Binding& b) {
  const auto& n = f.node().v;
  if (const auto* a = std::get_if<FAtom>(&n)) return fatom(substitute(a->expr, b));
  if (const auto* an = std::get_if<FAnd>(&n)) return fand(substitute(an->lhs, b), substitute(an->rhs, b));
  if (const auto* o = std::get_if<FOr>(&n)) return for_(substitute(o->lhs, b), substitute(o->rhs, b));
  if (const auto* nn = std::get_if<FNot>(&n)) return fnot(substitute(nn->arg, b));
  const auto& q = std::get<FForall>(n);
  Binding inner = b;
  inner.erase(q.binder.id);
  return fforall(q.binder, substitute(q.lo, b), substitute(q.hi, b), substitute(q.body, inner));
}

// ---- ground evaluation ----

using GroundValue = std::variant<long long, std::vector<long long>, bool>;
using Assignment = std::map<int32_t, GroundValue>;  // symbol id -> constant

/// Floor division; throws on zero divisor.
inline long long floor_div(long long a, long long b) {
  if (b == 0) throw EvalError(EvalError::Code::DivisionByZero, "division by zero");
  long long q = a / b;
  if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
  return q;
}

inline long long floor_mod(long long a, long long b) {
  return a - b * floor_div(a, b);
}

inline long long eval_num(const NumExpr& e, const Assignment& a);
inline std::vector<long long> eval_shape(const ShapeExpr& e, const Assignment& a);
inline bool eval_bool(const BoolExpr& e, const Assignment& a);

inline GroundValue concrete_eval(const ValueExpr& v, const Assignment& a) {
  if (const auto* n = std::get_if<NumExpr>(&v)) return eval_num(*n, a);
  if (const auto* s = std::get_if<ShapeExpr>(&v)) return eval_shape(*s, a);
  return eval_bool(std::get<BoolExpr>(v), a);
}

inline long long eval_num(const NumExpr& e, const Assignment& a) {
  const auto& n = e.node().v;
  if (const auto* c = std::get_if<NumConst>(&n)) return c->value;
  if (const auto* s = std::get_if<NumSym>(&n)) {
    auto it = a.find(s->sym.id);
    if (it == a.end())
      throw EvalError(EvalError::Code::UnboundSymbol, "unbound symbol n" + std::to_string(s->sym.id));
    if (const auto* v = std::get_if<long long>(&it->second)) return *v;
    throw EvalError(EvalError::Code::SortMismatch, "number symbol bound to non-integer");
  }
  if (const auto* o = std::get_if<NumBin>(&n)) {
    long long l = eval_num(o->lhs, a);
    long long r = eval_num(o->rhs, a);
    switch (o->op) {
      case NumOp::Add: return l + r;
      case NumOp::Sub: return l - r;
      case NumOp::Mul: return l * r;
      case NumOp::FloorDiv: return floor_div(l, r);
      case NumOp::Mod: return floor_mod(l, r);
    }
  }
  if (const auto* r = std::get_if<NumRank>(&n)) return static_cast<long long>(eval_shape(r->arg, a).size());
  if (const auto* i = std::get_if<NumIndexOf>(&n)) {
    auto dims = eval_shape(i->shape, a);
    long long idx = eval_num(i->index, a);
    if (idx < 0 || idx >= static_cast<long long>(dims.size()))
      throw EvalError(EvalError::Code::IndexOutOfRange,
                      "index " + std::to_string(idx) + " out of range for rank " + std::to_string(dims.size()));
    return dims[static_cast<size_t>(idx)];
  }
  const auto& p = std::get<NumProd>(n);
  long long prod = 1;
  for (long long d : eval_shape(p.arg, a)) prod *= d;
  return prod;
}

inline std::vector<long long> eval_shape(const ShapeExpr& e, const Assignment& a) {
  const auto& n = e.node().v;
  if (const auto* t = std::get_if<ShapeTuple>(&n)) {
    std::vector<long long> dims;
    dims.reserve(t->dims.size());
    for (const auto& d : t->dims) dims.push_back(eval_num(d, a));
    return dims;
  }
  if (const auto* s = std::get_if<ShapeSym>(&n)) {
    auto it = a.find(s->sym.id);
    if (it == a.end())
      throw EvalError(EvalError::Code::UnboundSymbol, "unbound symbol s" + std::to_string(s->sym.id));
    if (const auto* v = std::get_if<std::vector<long long>>(&it->second)) return *v;
    throw EvalError(EvalError::Code::SortMismatch, "shape symbol bound to non-tuple");
  }
  if (const auto* sl = std::get_if<ShapeSlice>(&n)) {
    auto base = eval_shape(sl->base, a);
    long long lo = eval_num(sl->lo, a);
    long long hi = eval_num(sl->hi, a);
    // No clamping: out-of-range slice bounds are an error.
    if (lo < 0 || lo > hi || hi > static_cast<long long>(base.size()))
      throw EvalError(EvalError::Code::IndexOutOfRange,
                      "slice [" + std::to_string(lo) + ":" + std::to_string(hi) + "] out of range for rank " +
                          std::to_string(base.size()));
    return std::vector<long long>(base.begin() + lo, base.begin() + hi);
  }
  const auto& c = std::get<ShapeConcat>(n);
  auto l = eval_shape(c.lhs, a);
  auto r = eval_shape(c.rhs, a);
  l.insert(l.end(), r.begin(), r.end());
  return l;
}

inline bool eval_bool(const BoolExpr& e, const Assignment& a) {
  const auto& n = e.node().v;
  if (const auto* c = std::get_if<BoolConst>(&n)) return c->value;
  if (const auto* s = std::get_if<BoolSym>(&n)) {
    auto it = a.find(s->sym.id);
    if (it == a.end())
      throw EvalError(EvalError::Code::UnboundSymbol, "unbound symbol b" + std::to_string(s->sym.id));
    if (const auto* v = std::get_if<bool>(&it->second)) return *v;
    throw EvalError(EvalError::Code::SortMismatch, "boolean symbol bound to non-boolean");
  }
  if (const auto* an = std::get_if<BoolAnd>(&n)) return eval_bool(an->lhs, a) && eval_bool(an->rhs, a);
  if (const auto* o = std::get_if<BoolOr>(&n)) return eval_bool(o->lhs, a) || eval_bool(o->rhs, a);
  if (const auto* nn = std::get_if<BoolNot>(&n)) return !eval_bool(nn->arg, a);
  if (const auto* q = std::get_if<BoolEq>(&n)) {
    GroundValue l = concrete_eval(q->lhs, a);
    GroundValue r = concrete_eval(q->rhs, a);
    if (l.index() != r.index()) throw EvalError(EvalError::Code::SortMismatch, "equality across sorts");
    return l == r;
  }
  const auto& l = std::get<BoolLt>(n);
  return eval_num(l.lhs, a) < eval_num(l.rhs, a);
}

inline bool eval_formula(const Formula& f, const Assignment& a) {
  const auto& n = f.node().v;
  if (const auto* at = std::get_if<FAtom>(&n)) return eval_bool(at->expr, a);
  if (const auto* an = std::get_if<FAnd>(&n)) return eval_formula(an->lhs, a) && eval_formula(an->rhs, a);
  if (const auto* o = std::get_if<FOr>(&n)) return eval_formula(o->lhs, a) || eval_formula(o->rhs, a);
  if (const auto* nn = std::get_if<FNot>(&n)) return !eval_formula(nn->arg, a);
  const auto& q = std::get<FForall>(n);
  long long lo = eval_num(q.lo, a);
  long long hi = eval_num(q.hi, a);
  for (long long k = lo; k <= hi; ++k) {
    Assignment inner = a;
    inner[q.binder.id] = k;
    if (!eval_formula(q.body, inner)) return false;
  }
  return true;
}

// ---- s-expression serialization ----

namespace detail {
inline void sexpr(const NumExpr& e, std::ostream& os, const SymbolPool* pool);
inline void sexpr(const ShapeExpr& e, std::ostream& os, const SymbolPool* pool);
inline void sexpr(const BoolExpr& e, std::ostream& os, const SymbolPool* pool);

inline void sym_name(Sym s, std::ostream& os, const SymbolPool* pool) {
  if (pool != nullptr && !pool->hint(s).empty()) {
    os << pool->hint(s);
    return;
  }
  switch (s.sort) {
    case Sort::Num: os << 'n'; break;
    case Sort::Shape: os << 's'; break;
    case Sort::Bool: os << 'b'; break;
  }
  os << s.id;
}

inline void sexpr(const ValueExpr& v, std::ostream& os, const SymbolPool* pool) {
  if (const auto* n = std::get_if<NumExpr>(&v)) sexpr(*n, os, pool);
  else if (const auto* s = std::get_if<ShapeExpr>(&v)) sexpr(*s, os, pool);
  else sexpr(std::get<BoolExpr>(v), os, pool);
}

inline void sexpr(const NumExpr& e, std::ostream& os, const SymbolPool* pool) {
  const auto& n = e.node().v;
  if (const auto* c = std::get_if<NumConst>(&n)) { os << c->value; return; }
  if (const auto* s = std::get_if<NumSym>(&n)) { sym_name(s->sym, os, pool); return; }
  if (const auto* o = std::get_if<NumBin>(&n)) {
    os << '(' << num_op_token(o->op) << ' ';
    sexpr(o->lhs, os, pool);
    os << ' ';
    sexpr(o->rhs, os, pool);
    os << ')';
    return;
  }
  if (const auto* r = std::get_if<NumRank>(&n)) {
    os << "(rank ";
    sexpr(r->arg, os, pool);
    os << ')';
    return;
  }
  if (const auto* i = std::get_if<NumIndexOf>(&n)) {
    os << "(index ";
    sexpr(i->shape, os, pool);
    os << ' ';
    sexpr(i->index, os, pool);
    os << ')';
    return;
  }
  os << "(prod ";
  sexpr(std::get<NumProd>(n).arg, os, pool);
  os << ')';
}

inline void sexpr(const ShapeExpr& e, std::ostream& os, const SymbolPool* pool) {
  const auto& n = e.node().v;
  if (const auto* t = std::get_if<ShapeTuple>(&n)) {
    os << "(shape";
    for (const auto& d : t->dims) {
      os << ' ';
      sexpr(d, os, pool);
    }
    os << ')';
    return;
  }
  if (const auto* s = std::get_if<ShapeSym>(&n)) { sym_name(s->sym, os, pool); return; }
  if (const auto* sl = std::get_if<ShapeSlice>(&n)) {
    os << "(slice ";
    sexpr(sl->base, os, pool);
    os << ' ';
    sexpr(sl->lo, os, pool);
    os << ' ';
    sexpr(sl->hi, os, pool);
    os << ')';
    return;
  }
  const auto& c = std::get<ShapeConcat>(n);
  os << "(concat ";
  sexpr(c.lhs, os, pool);
  os << ' ';
  sexpr(c.rhs, os, pool);
  os << ')';
}

inline void sexpr(const BoolExpr& e, std::ostream& os, const SymbolPool* pool) {
  const auto& n = e.node().v;
  if (const auto* c = std::get_if<BoolConst>(&n)) { os << (c->value ? "true" : "false"); return; }
  if (const auto* s = std::get_if<BoolSym>(&n)) { sym_name(s->sym, os, pool); return; }
  if (const auto* a = std::get_if<BoolAnd>(&n)) {
    os << "(and ";
    sexpr(a->lhs, os, pool);
    os << ' ';
    sexpr(a->rhs, os, pool);
    os << ')';
    return;
  }
  if (const auto* o = std::get_if<BoolOr>(&n)) {
    os << "(or ";
    sexpr(o->lhs, os, pool);
    os << ' ';
    sexpr(o->rhs, os, pool);
    os << ')';
    return;
  }
  if (const auto* nn = std::get_if<BoolNot>(&n)) {
    os << "(not ";
    sexpr(nn->arg, os, pool);
    os << ')';
    return;
  }
  if (const auto* q = std::get_if<BoolEq>(&n)) {
    os << "(= ";
    sexpr(q->lhs, os, pool);
    os << ' ';
    sexpr(q->rhs, os, pool);
    os << ')';
    return;
  }
  const auto& l = std::get<BoolLt>(n);
  os << "(< ";
  sexpr(l.lhs, os, pool);
  os << ' ';
  sexpr(l.rhs, os, pool);
  os << ')';
}

inline void sexpr(const Formula& f, std::ostream& os, const SymbolPool* pool) {
  const auto& n = f.node().v;
  if (const auto* a = std::get_if<FAtom>(&n)) { sexpr(a->expr, os, pool); return; }
  if (const auto* an = std::get_if<FAnd>(&n)) {
    os << "(and ";
    sexpr(an->lhs, os, pool);
    os << ' ';
    sexpr(an->rhs, os, pool);
    os << ')';
    return;
  }
  if (const auto* o = std::get_if<FOr>(&n)) {
    os << "(or ";
    sexpr(o->lhs, os, pool);
    os << ' ';
    sexpr(o->rhs, os, pool);
    os << ')';
    return;
  }
  if (const auto* nn = std::get_if<FNot>(&n)) {
    os << "(not ";
    sexpr(nn->arg, os, pool);
    os << ')';
    return;
  }
  const auto& q = std::get<FForall>(n);
  os << "(forall ";
  sym_name(q.binder, os, pool);
  os << ' ';
  sexpr(q.lo, os, pool);
  os << ' ';
  sexpr(q.hi, os, pool);
  os << ' ';
  sexpr(q.body, os, pool);
  os << ')';
}
}  // namespace detail

template <typename E>
std::string to_sexpr(const E& e, const SymbolPool* pool = nullptr) {
  std::ostringstream os;
  detail::sexpr(e, os, pool);
  return os.str();
}

}  // namespace shapecheck
