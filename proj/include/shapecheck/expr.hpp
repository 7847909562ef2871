#pragma once

// Symbolic value expressions: shapes, numbers, and booleans. Tensors are
// abstracted to their shapes, so a tensor-valued variable holds a ShapeExpr.
// All nodes are immutable and shared; handles have value semantics.

#include <cassert>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "shapecheck/source_pos.hpp"

namespace shapecheck {

enum class Sort : uint8_t { Num, Shape, Bool };

inline const char* sort_name(Sort s) {
  switch (s) {
    case Sort::Num: return "number";
    case Sort::Shape: return "shape";
    case Sort::Bool: return "boolean";
  }
  return "?";
}

/// A symbolic unknown. Ids are unique per analysis run (per SymbolPool).
struct Sym {
  int32_t id = -1;
  Sort sort = Sort::Num;

  bool operator==(const Sym& o) const { return id == o.id; }
  bool operator<(const Sym& o) const { return id < o.id; }
};

/// Issues fresh symbols and remembers a human-readable hint per symbol
/// (e.g. "channels@img.tsl:3:7") for counterexample reports.
class SymbolPool {
 public:
  Sym fresh(Sort sort, std::string hint) {
    Sym s{static_cast<int32_t>(hints_.size()), sort};
    hints_.push_back(std::move(hint));
    return s;
  }

  const std::string& hint(Sym s) const {
    static const std::string empty;
    if (s.id < 0 || s.id >= static_cast<int32_t>(hints_.size())) return empty;
    return hints_[static_cast<size_t>(s.id)];
  }

  int32_t size() const { return static_cast<int32_t>(hints_.size()); }

 private:
  std::vector<std::string> hints_;
};

struct NumNode;
struct ShapeNode;
struct BoolNode;

class NumExpr {
 public:
  NumExpr() = default;
  explicit NumExpr(std::shared_ptr<const NumNode> p) : p_(std::move(p)) {}
  const NumNode& node() const { return *p_; }
  const NumNode* get() const { return p_.get(); }
  bool valid() const { return p_ != nullptr; }

 private:
  std::shared_ptr<const NumNode> p_;
};

class ShapeExpr {
 public:
  ShapeExpr() = default;
  explicit ShapeExpr(std::shared_ptr<const ShapeNode> p) : p_(std::move(p)) {}
  const ShapeNode& node() const { return *p_; }
  const ShapeNode* get() const { return p_.get(); }
  bool valid() const { return p_ != nullptr; }

 private:
  std::shared_ptr<const ShapeNode> p_;
};

class BoolExpr {
 public:
  BoolExpr() = default;
  explicit BoolExpr(std::shared_ptr<const BoolNode> p) : p_(std::move(p)) {}
  const BoolNode& node() const { return *p_; }
  const BoolNode* get() const { return p_.get(); }
  bool valid() const { return p_ != nullptr; }

 private:
  std::shared_ptr<const BoolNode> p_;
};

using ValueExpr = std::variant<NumExpr, ShapeExpr, BoolExpr>;

inline Sort sort_of(const ValueExpr& v) {
  if (std::holds_alternative<NumExpr>(v)) return Sort::Num;
  if (std::holds_alternative<ShapeExpr>(v)) return Sort::Shape;
  return Sort::Bool;
}

enum class NumOp : uint8_t { Add, Sub, Mul, FloorDiv, Mod };

inline const char* num_op_token(NumOp op) {
  switch (op) {
    case NumOp::Add: return "+";
    case NumOp::Sub: return "-";
    case NumOp::Mul: return "*";
    case NumOp::FloorDiv: return "//";
    case NumOp::Mod: return "%";
  }
  return "?";
}

struct NumConst { long long value = 0; };
struct NumSym { Sym sym; };
struct NumBin { NumOp op; NumExpr lhs, rhs; };
struct NumRank { ShapeExpr arg; };
struct NumIndexOf { ShapeExpr shape; NumExpr index; };
struct NumProd { ShapeExpr arg; };

struct NumNode {
  std::variant<NumConst, NumSym, NumBin, NumRank, NumIndexOf, NumProd> v;
};

struct ShapeTuple { std::vector<NumExpr> dims; };
struct ShapeSym { Sym sym; };
struct ShapeSlice { ShapeExpr base; NumExpr lo, hi; };
struct ShapeConcat { ShapeExpr lhs, rhs; };

struct ShapeNode {
  std::variant<ShapeTuple, ShapeSym, ShapeSlice, ShapeConcat> v;
};

struct BoolConst { bool value = false; };
struct BoolSym { Sym sym; };
struct BoolAnd { BoolExpr lhs, rhs; };
struct BoolOr { BoolExpr lhs, rhs; };
struct BoolNot { BoolExpr arg; };
struct BoolEq { ValueExpr lhs, rhs; };  // operands share one sort
struct BoolLt { NumExpr lhs, rhs; };

struct BoolNode {
  std::variant<BoolConst, BoolSym, BoolAnd, BoolOr, BoolNot, BoolEq, BoolLt> v;
};

// ---- builders ----

inline NumExpr nconst(long long v) { return NumExpr(std::make_shared<NumNode>(NumNode{NumConst{v}})); }
inline NumExpr nsym(Sym s) {
  assert(s.sort == Sort::Num);
  return NumExpr(std::make_shared<NumNode>(NumNode{NumSym{s}}));
}
inline NumExpr nbin(NumOp op, NumExpr a, NumExpr b) {
  return NumExpr(std::make_shared<NumNode>(NumNode{NumBin{op, std::move(a), std::move(b)}}));
}
inline NumExpr nadd(NumExpr a, NumExpr b) { return nbin(NumOp::Add, std::move(a), std::move(b)); }
inline NumExpr nsub(NumExpr a, NumExpr b) { return nbin(NumOp::Sub, std::move(a), std::move(b)); }
inline NumExpr nmul(NumExpr a, NumExpr b) { return nbin(NumOp::Mul, std::move(a), std::move(b)); }
inline NumExpr nfdiv(NumExpr a, NumExpr b) { return nbin(NumOp::FloorDiv, std::move(a), std::move(b)); }
inline NumExpr nmod(NumExpr a, NumExpr b) { return nbin(NumOp::Mod, std::move(a), std::move(b)); }
inline NumExpr nrank(ShapeExpr s) { return NumExpr(std::make_shared<NumNode>(NumNode{NumRank{std::move(s)}})); }
inline NumExpr nindex(ShapeExpr s, NumExpr i) {
  return NumExpr(std::make_shared<NumNode>(NumNode{NumIndexOf{std::move(s), std::move(i)}}));
}
inline NumExpr nprod(ShapeExpr s) { return NumExpr(std::make_shared<NumNode>(NumNode{NumProd{std::move(s)}})); }

inline ShapeExpr stuple(std::vector<NumExpr> dims) {
  return ShapeExpr(std::make_shared<ShapeNode>(ShapeNode{ShapeTuple{std::move(dims)}}));
}
inline ShapeExpr stuple_of(std::initializer_list<long long> dims) {
  std::vector<NumExpr> v;
  for (long long d : dims) v.push_back(nconst(d));
  return stuple(std::move(v));
}
inline ShapeExpr ssym(Sym s) {
  assert(s.sort == Sort::Shape);
  return ShapeExpr(std::make_shared<ShapeNode>(ShapeNode{ShapeSym{s}}));
}
inline ShapeExpr sslice(ShapeExpr base, NumExpr lo, NumExpr hi) {
  return ShapeExpr(std::make_shared<ShapeNode>(ShapeNode{ShapeSlice{std::move(base), std::move(lo), std::move(hi)}}));
}
inline ShapeExpr sconcat(ShapeExpr a, ShapeExpr b) {
  return ShapeExpr(std::make_shared<ShapeNode>(ShapeNode{ShapeConcat{std::move(a), std::move(b)}}));
}

inline BoolExpr bconst(bool v) { return BoolExpr(std::make_shared<BoolNode>(BoolNode{BoolConst{v}})); }
inline BoolExpr btrue() { return bconst(true); }
inline BoolExpr bfalse() { return bconst(false); }
inline BoolExpr bsym(Sym s) {
  assert(s.sort == Sort::Bool);
  return BoolExpr(std::make_shared<BoolNode>(BoolNode{BoolSym{s}}));
}
inline BoolExpr band(BoolExpr a, BoolExpr b) {
  return BoolExpr(std::make_shared<BoolNode>(BoolNode{BoolAnd{std::move(a), std::move(b)}}));
}
inline BoolExpr bor(BoolExpr a, BoolExpr b) {
  return BoolExpr(std::make_shared<BoolNode>(BoolNode{BoolOr{std::move(a), std::move(b)}}));
}
inline BoolExpr bnot(BoolExpr a) { return BoolExpr(std::make_shared<BoolNode>(BoolNode{BoolNot{std::move(a)}})); }
inline BoolExpr beq(ValueExpr a, ValueExpr b) {
  if (sort_of(a) != sort_of(b))
    throw SortError(std::string("equality between ") + sort_name(sort_of(a)) + " and " + sort_name(sort_of(b)));
  return BoolExpr(std::make_shared<BoolNode>(BoolNode{BoolEq{std::move(a), std::move(b)}}));
}
inline BoolExpr blt(NumExpr a, NumExpr b) {
  return BoolExpr(std::make_shared<BoolNode>(BoolNode{BoolLt{std::move(a), std::move(b)}}));
}
// a <= b encoded as not(b < a); the constraint language has < and = only.
inline BoolExpr ble(NumExpr a, NumExpr b) { return bnot(blt(std::move(b), std::move(a))); }

// ---- structural equality and total ordering ----

inline bool expr_eq(const NumExpr& a, const NumExpr& b);
inline bool expr_eq(const ShapeExpr& a, const ShapeExpr& b);
inline bool expr_eq(const BoolExpr& a, const BoolExpr& b);

inline bool expr_eq(const ValueExpr& a, const ValueExpr& b) {
  if (a.index() != b.index()) return false;
  if (const auto* n = std::get_if<NumExpr>(&a)) return expr_eq(*n, std::get<NumExpr>(b));
  if (const auto* s = std::get_if<ShapeExpr>(&a)) return expr_eq(*s, std::get<ShapeExpr>(b));
  return expr_eq(std::get<BoolExpr>(a), std::get<BoolExpr>(b));
}

inline bool expr_eq(const NumExpr& a, const NumExpr& b) {
  if (a.get() == b.get()) return true;
  const auto& x = a.node().v;
  const auto& y = b.node().v;
  if (x.index() != y.index()) return false;
  if (const auto* c = std::get_if<NumConst>(&x)) return c->value == std::get<NumConst>(y).value;
  if (const auto* s = std::get_if<NumSym>(&x)) return s->sym == std::get<NumSym>(y).sym;
  if (const auto* o = std::get_if<NumBin>(&x)) {
    const auto& p = std::get<NumBin>(y);
    return o->op == p.op && expr_eq(o->lhs, p.lhs) && expr_eq(o->rhs, p.rhs);
  }
  if (const auto* r = std::get_if<NumRank>(&x)) return expr_eq(r->arg, std::get<NumRank>(y).arg);
  if (const auto* i = std::get_if<NumIndexOf>(&x)) {
    const auto& p = std::get<NumIndexOf>(y);
    return expr_eq(i->shape, p.shape) && expr_eq(i->index, p.index);
  }
  return expr_eq(std::get<NumProd>(x).arg, std::get<NumProd>(y).arg);
}

inline bool expr_eq(const ShapeExpr& a, const ShapeExpr& b) {
  if (a.get() == b.get()) return true;
  const auto& x = a.node().v;
  const auto& y = b.node().v;
  if (x.index() != y.index()) return false;
  if (const auto* t = std::get_if<ShapeTuple>(&x)) {
    const auto& p = std::get<ShapeTuple>(y);
    if (t->dims.size() != p.dims.size()) return false;
    for (size_t i = 0; i < t->dims.size(); ++i)
      if (!expr_eq(t->dims[i], p.dims[i])) return false;
    return true;
  }
  if (const auto* s = std::get_if<ShapeSym>(&x)) return s->sym == std::get<ShapeSym>(y).sym;
  if (const auto* sl = std::get_if<ShapeSlice>(&x)) {
    const auto& p = std::get<ShapeSlice>(y);
    return expr_eq(sl->base, p.base) && expr_eq(sl->lo, p.lo) && expr_eq(sl->hi, p.hi);
  }
  const auto& c = std::get<ShapeConcat>(x);
  const auto& p = std::get<ShapeConcat>(y);
  return expr_eq(c.lhs, p.lhs) && expr_eq(c.rhs, p.rhs);
}

inline bool expr_eq(const BoolExpr& a, const BoolExpr& b) {
  if (a.get() == b.get()) return true;
  const auto& x = a.node().v;
  const auto& y = b.node().v;
  if (x.index() != y.index()) return false;
  if (const auto* c = std::get_if<BoolConst>(&x)) return c->value == std::get<BoolConst>(y).value;
  if (const auto* s = std::get_if<BoolSym>(&x)) return s->sym == std::get<BoolSym>(y).sym;
  if (const auto* o = std::get_if<BoolAnd>(&x)) {
    const auto& p = std::get<BoolAnd>(y);
    return expr_eq(o->lhs, p.lhs) && expr_eq(o->rhs, p.rhs);
  }
  if (const auto* o = std::get_if<BoolOr>(&x)) {
    const auto& p = std::get<BoolOr>(y);
    return expr_eq(o->lhs, p.lhs) && expr_eq(o->rhs, p.rhs);
  }
  if (const auto* n = std::get_if<BoolNot>(&x)) return expr_eq(n->arg, std::get<BoolNot>(y).arg);
  if (const auto* e = std::get_if<BoolEq>(&x)) {
    const auto& p = std::get<BoolEq>(y);
    return expr_eq(e->lhs, p.lhs) && expr_eq(e->rhs, p.rhs);
  }
  const auto& l = std::get<BoolLt>(x);
  const auto& p = std::get<BoolLt>(y);
  return expr_eq(l.lhs, p.lhs) && expr_eq(l.rhs, p.rhs);
}

// Total order used by the simplifier's canonical forms. Returns <0, 0, >0.
inline int expr_cmp(const NumExpr& a, const NumExpr& b);
inline int expr_cmp(const ShapeExpr& a, const ShapeExpr& b);
inline int expr_cmp(const BoolExpr& a, const BoolExpr& b);

namespace detail {
inline int cmp_ll(long long a, long long b) { return a < b ? -1 : (a > b ? 1 : 0); }
inline int cmp_sz(size_t a, size_t b) { return a < b ? -1 : (a > b ? 1 : 0); }
}  // namespace detail

inline int expr_cmp(const ValueExpr& a, const ValueExpr& b) {
  if (a.index() != b.index()) return detail::cmp_sz(a.index(), b.index());
  if (const auto* n = std::get_if<NumExpr>(&a)) return expr_cmp(*n, std::get<NumExpr>(b));
  if (const auto* s = std::get_if<ShapeExpr>(&a)) return expr_cmp(*s, std::get<ShapeExpr>(b));
  return expr_cmp(std::get<BoolExpr>(a), std::get<BoolExpr>(b));
}

inline int expr_cmp(const NumExpr& a, const NumExpr& b) {
  if (a.get() == b.get()) return 0;
  const auto& x = a.node().v;
  const auto& y = b.node().v;
  if (x.index() != y.index()) return detail::cmp_sz(x.index(), y.index());
  if (const auto* c = std::get_if<NumConst>(&x)) return detail::cmp_ll(c->value, std::get<NumConst>(y).value);
  if (const auto* s = std::get_if<NumSym>(&x)) return detail::cmp_ll(s->sym.id, std::get<NumSym>(y).sym.id);
  if (const auto* o = std::get_if<NumBin>(&x)) {
    const auto& p = std::get<NumBin>(y);
    if (o->op != p.op) return static_cast<int>(o->op) - static_cast<int>(p.op);
    if (int c = expr_cmp(o->lhs, p.lhs)) return c;
    return expr_cmp(o->rhs, p.rhs);
  }
  if (const auto* r = std::get_if<NumRank>(&x)) return expr_cmp(r->arg, std::get<NumRank>(y).arg);
  if (const auto* i = std::get_if<NumIndexOf>(&x)) {
    const auto& p = std::get<NumIndexOf>(y);
    if (int c = expr_cmp(i->shape, p.shape)) return c;
    return expr_cmp(i->index, p.index);
  }
  return expr_cmp(std::get<NumProd>(x).arg, std::get<NumProd>(y).arg);
}

inline int expr_cmp(const ShapeExpr& a, const ShapeExpr& b) {
  if (a.get() == b.get()) return 0;
  const auto& x = a.node().v;
  const auto& y = b.node().v;
  if (x.index() != y.index()) return detail::cmp_sz(x.index(), y.index());
  if (const auto* t = std::get_if<ShapeTuple>(&x)) {
    const auto& p = std::get<ShapeTuple>(y);
    if (int c = detail::cmp_sz(t->dims.size(), p.dims.size())) return c;
    for (size_t i = 0; i < t->dims.size(); ++i)
      if (int c = expr_cmp(t->dims[i], p.dims[i])) return c;
    return 0;
  }
  if (const auto* s = std::get_if<ShapeSym>(&x)) return detail::cmp_ll(s->sym.id, std::get<ShapeSym>(y).sym.id);
  if (const auto* sl = std::get_if<ShapeSlice>(&x)) {
    const auto& p = std::get<ShapeSlice>(y);
    if (int c = expr_cmp(sl->base, p.base)) return c;
    if (int c = expr_cmp(sl->lo, p.lo)) return c;
    return expr_cmp(sl->hi, p.hi);
  }
  const auto& c0 = std::get<ShapeConcat>(x);
  const auto& p = std::get<ShapeConcat>(y);
  if (int c = expr_cmp(c0.lhs, p.lhs)) return c;
  return expr_cmp(c0.rhs, p.rhs);
}

inline int expr_cmp(const BoolExpr& a, const BoolExpr& b) {
  if (a.get() == b.get()) return 0;
  const auto& x = a.node().v;
  const auto& y = b.node().v;
  if (x.index() != y.index()) return detail::cmp_sz(x.index(), y.index());
  if (const auto* c = std::get_if<BoolConst>(&x))
    return (c->value ? 1 : 0) - (std::get<BoolConst>(y).value ? 1 : 0);
  if (const auto* s = std::get_if<BoolSym>(&x)) return detail::cmp_ll(s->sym.id, std::get<BoolSym>(y).sym.id);
  if (const auto* o = std::get_if<BoolAnd>(&x)) {
    const auto& p = std::get<BoolAnd>(y);
    if (int c = expr_cmp(o->lhs, p.lhs)) return c;
    return expr_cmp(o->rhs, p.rhs);
  }
  if (const auto* o = std::get_if<BoolOr>(&x)) {
    const auto& p = std::get<BoolOr>(y);
    if (int c = expr_cmp(o->lhs, p.lhs)) return c;
    return expr_cmp(o->rhs, p.rhs);
  }
  if (const auto* n = std::get_if<BoolNot>(&x)) return expr_cmp(n->arg, std::get<BoolNot>(y).arg);
  if (const auto* e = std::get_if<BoolEq>(&x)) {
    const auto& p = std::get<BoolEq>(y);
    if (int c = expr_cmp(e->lhs, p.lhs)) return c;
    return expr_cmp(e->rhs, p.rhs);
  }
  const auto& l = std::get<BoolLt>(x);
  const auto& p = std::get<BoolLt>(y);
  if (int c = expr_cmp(l.lhs, p.lhs)) return c;
  return expr_cmp(l.rhs, p.rhs);
}

// ---- constant inspection helpers ----

inline const long long* as_const(const NumExpr& e) {
  if (const auto* c = std::get_if<NumConst>(&e.node().v)) return &c->value;
  return nullptr;
}

inline const bool* as_const(const BoolExpr& e) {
  if (const auto* c = std::get_if<BoolConst>(&e.node().v)) return &c->value;
  return nullptr;
}

inline const ShapeTuple* as_tuple(const ShapeExpr& e) { return std::get_if<ShapeTuple>(&e.node().v); }

}  // namespace shapecheck
