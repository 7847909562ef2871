#pragma once

// Online constraint check: eager algebraic simplification, constant folding,
// and interval reasoning. Numeric expressions are canonicalized into a
// sum-of-products normal form with sorted monomials so that structural
// equality works as the path-merge test (e.g. B*1 and B compare equal).
//
// Rewrites over Slice/Index/Rank assume in-range operands; on assignments
// where the original expression would fault (out-of-range slice or index),
// the simplified form may instead denote a value. Everywhere else the
// rewrite set is semantics-preserving.

#include <map>
#include <optional>
#include <vector>

#include "shapecheck/constraint.hpp"
#include "shapecheck/expr.hpp"
#include "shapecheck/expr_ops.hpp"
#include "shapecheck/interval.hpp"

namespace shapecheck {

inline NumExpr simplify_num(const NumExpr& e, const IntervalCtx& ctx);
inline ShapeExpr simplify_shape(const ShapeExpr& e, const IntervalCtx& ctx);
inline BoolExpr simplify_bool(const BoolExpr& e, const IntervalCtx& ctx);

inline ValueExpr simplify(const ValueExpr& v, const IntervalCtx& ctx = {}) {
  if (const auto* n = std::get_if<NumExpr>(&v)) return simplify_num(*n, ctx);
  if (const auto* s = std::get_if<ShapeExpr>(&v)) return simplify_shape(*s, ctx);
  return simplify_bool(std::get<BoolExpr>(v), ctx);
}

// ---- interval evaluation ----

inline Interval interval_of_num(const NumExpr& e, const IntervalCtx& ctx) {
  const auto& n = e.node().v;
  if (const auto* c = std::get_if<NumConst>(&n)) return Interval::point(c->value);
  if (const auto* s = std::get_if<NumSym>(&n)) {
    auto it = ctx.find(s->sym.id);
    return it == ctx.end() ? Interval::top() : it->second;
  }
  if (const auto* o = std::get_if<NumBin>(&n)) {
    Interval l = interval_of_num(o->lhs, ctx);
    Interval r = interval_of_num(o->rhs, ctx);
    switch (o->op) {
      case NumOp::Add: return ivl::add(l, r);
      case NumOp::Sub: return ivl::sub(l, r);
      case NumOp::Mul: return ivl::mul(l, r);
      case NumOp::FloorDiv: {
        if (const auto* k = as_const(o->rhs); k != nullptr && *k != 0) return ivl::fdiv_const(l, *k);
        return Interval::top();
      }
      case NumOp::Mod:
        if (l.isPoint() && r.isPoint() && r.lo != 0) return Interval::point(floor_mod(l.lo, r.lo));
        return ivl::fmod_range(r);
    }
  }
  if (std::holds_alternative<NumRank>(n)) return Interval{0, Interval::kPosInf};
  if (const auto* i = std::get_if<NumIndexOf>(&n)) {
    if (const auto* t = as_tuple(i->shape)) {
      if (t->dims.empty()) return Interval::top();
      if (const auto* k = as_const(i->index)) {
        if (*k >= 0 && *k < static_cast<long long>(t->dims.size()))
          return interval_of_num(t->dims[static_cast<size_t>(*k)], ctx);
        return Interval::top();
      }
      Interval hull = interval_of_num(t->dims[0], ctx);
      for (size_t k = 1; k < t->dims.size(); ++k) {
        Interval d = interval_of_num(t->dims[k], ctx);
        hull = {std::min(hull.lo, d.lo), std::max(hull.hi, d.hi)};
      }
      return hull;
    }
    return Interval::top();
  }
  if (const auto* p = std::get_if<NumProd>(&n)) {
    if (const auto* t = as_tuple(p->arg)) {
      Interval acc = Interval::point(1);
      for (const auto& d : t->dims) acc = ivl::mul(acc, interval_of_num(d, ctx));
      return acc;
    }
    return Interval::top();
  }
  return Interval::top();
}

// ---- sum-of-products normal form ----

namespace nf {

struct MonoLess {
  bool operator()(const std::vector<NumExpr>& a, const std::vector<NumExpr>& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    for (size_t i = 0; i < a.size(); ++i) {
      int c = expr_cmp(a[i], b[i]);
      if (c != 0) return c < 0;
    }
    return false;
  }
};

struct LinForm {
  std::map<std::vector<NumExpr>, long long, MonoLess> terms;  // monomial -> coeff
  long long constant = 0;
  bool overflow = false;  // bail out flag; caller keeps the unlinearized expr

  void addTerm(std::vector<NumExpr> mono, long long coeff) {
    if (coeff == 0) return;
    auto it = terms.find(mono);
    if (it == terms.end()) {
      terms.emplace(std::move(mono), coeff);
    } else {
      it->second += coeff;
      if (it->second == 0) terms.erase(it);
    }
  }
};

inline bool mul_ll(long long a, long long b, long long& out) {
  __int128 r = static_cast<__int128>(a) * b;
  if (r > INT64_MAX / 2 || r < INT64_MIN / 2) return false;
  out = static_cast<long long>(r);
  return true;
}

constexpr size_t kDistributeCap = 24;

inline LinForm linearize(const NumExpr& e);

inline LinForm lin_mul(const LinForm& a, const LinForm& b, const NumExpr& orig) {
  LinForm out;
  size_t total = (a.terms.size() + (a.constant != 0 ? 1 : 0)) * (b.terms.size() + (b.constant != 0 ? 1 : 0));
  if (a.overflow || b.overflow || total > kDistributeCap) {
    out.addTerm({orig}, 1);
    return out;
  }
  auto cross = [&out](const std::vector<NumExpr>& m1, long long c1, const std::vector<NumExpr>& m2, long long c2) {
    long long c;
    if (!mul_ll(c1, c2, c)) {
      out.overflow = true;
      return;
    }
    std::vector<NumExpr> m;
    m.reserve(m1.size() + m2.size());
    m.insert(m.end(), m1.begin(), m1.end());
    m.insert(m.end(), m2.begin(), m2.end());
    std::sort(m.begin(), m.end(), [](const NumExpr& x, const NumExpr& y) { return expr_cmp(x, y) < 0; });
    out.addTerm(std::move(m), c);
  };
  for (const auto& [m1, c1] : a.terms) {
    for (const auto& [m2, c2] : b.terms) cross(m1, c1, m2, c2);
    if (b.constant != 0) cross(m1, c1, {}, b.constant);
  }
  if (a.constant != 0) {
    for (const auto& [m2, c2] : b.terms) cross({}, a.constant, m2, c2);
    long long c;
    if (mul_ll(a.constant, b.constant, c)) out.constant = c;
    else out.overflow = true;
  }
  if (out.overflow) {
    LinForm atom;
    atom.addTerm({orig}, 1);
    return atom;
  }
  return out;
}

/// Decomposes an already-simplified expression into a linear combination.
/// Non-distributable nodes (symbols, rank/index/prod, //, %) are monomial
/// factors.
inline LinForm linearize(const NumExpr& e) {
  LinForm out;
  const auto& n = e.node().v;
  if (const auto* c = std::get_if<NumConst>(&n)) {
    out.constant = c->value;
    return out;
  }
  if (const auto* o = std::get_if<NumBin>(&n)) {
    if (o->op == NumOp::Add || o->op == NumOp::Sub) {
      LinForm l = linearize(o->lhs);
      LinForm r = linearize(o->rhs);
      long long sign = o->op == NumOp::Add ? 1 : -1;
      __int128 k = static_cast<__int128>(l.constant) + static_cast<__int128>(sign) * r.constant;
      if (k > INT64_MAX / 2 || k < INT64_MIN / 2) {
        out.addTerm({e}, 1);
        return out;
      }
      out = std::move(l);
      out.constant = static_cast<long long>(k);
      for (const auto& [m, c] : r.terms) out.addTerm(m, sign * c);
      return out;
    }
    if (o->op == NumOp::Mul) return lin_mul(linearize(o->lhs), linearize(o->rhs), e);
  }
  out.addTerm({e}, 1);
  return out;
}

inline NumExpr mono_expr(const std::vector<NumExpr>& mono, long long coeff) {
  NumExpr acc;
  if (mono.empty()) return nconst(coeff);
  acc = mono[0];
  for (size_t i = 1; i < mono.size(); ++i) acc = nmul(acc, mono[i]);
  if (coeff == 1) return acc;
  return nmul(nconst(coeff), acc);
}

inline NumExpr rebuild(const LinForm& f) {
  NumExpr acc;
  bool first = true;
  for (const auto& [m, c] : f.terms) {
    if (first) {
      acc = mono_expr(m, c);
      first = false;
    } else if (c > 0) {
      acc = nadd(acc, mono_expr(m, c));
    } else {
      acc = nsub(acc, mono_expr(m, -c));
    }
  }
  if (first) return nconst(f.constant);
  if (f.constant > 0) return nadd(acc, nconst(f.constant));
  if (f.constant < 0) return nsub(acc, nconst(-f.constant));
  return acc;
}

}  // namespace nf

// ---- numeric simplification ----

namespace detail {

inline std::optional<long long> rank_const(const ShapeExpr& s);

/// Rank of a simplified shape as an expression.
inline NumExpr rank_expr(const ShapeExpr& s, const IntervalCtx& ctx) {
  const auto& n = s.node().v;
  if (const auto* t = std::get_if<ShapeTuple>(&n)) return nconst(static_cast<long long>(t->dims.size()));
  if (const auto* c = std::get_if<ShapeConcat>(&n))
    return simplify_num(nadd(rank_expr(c->lhs, ctx), rank_expr(c->rhs, ctx)), ctx);
  if (const auto* sl = std::get_if<ShapeSlice>(&n))
    return simplify_num(nsub(sl->hi, sl->lo), ctx);
  return nrank(s);
}

inline std::optional<long long> rank_const(const ShapeExpr& s) {
  const auto& n = s.node().v;
  if (const auto* t = std::get_if<ShapeTuple>(&n)) return static_cast<long long>(t->dims.size());
  if (const auto* c = std::get_if<ShapeConcat>(&n)) {
    auto l = rank_const(c->lhs);
    auto r = rank_const(c->rhs);
    if (l && r) return *l + *r;
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace detail

inline NumExpr simplify_num(const NumExpr& e, const IntervalCtx& ctx) {
  const auto& n = e.node().v;
  if (std::holds_alternative<NumConst>(n)) return e;
  if (const auto* s = std::get_if<NumSym>(&n)) {
    auto it = ctx.find(s->sym.id);
    if (it != ctx.end() && it->second.isPoint()) return nconst(it->second.lo);
    return e;
  }
  if (const auto* o = std::get_if<NumBin>(&n)) {
    NumExpr l = simplify_num(o->lhs, ctx);
    NumExpr r = simplify_num(o->rhs, ctx);
    if (o->op == NumOp::Add || o->op == NumOp::Sub || o->op == NumOp::Mul)
      return nf::rebuild(nf::linearize(nbin(o->op, l, r)));
    const long long* lc = as_const(l);
    const long long* rc = as_const(r);
    if (o->op == NumOp::FloorDiv) {
      if (rc != nullptr && *rc != 0) {
        if (lc != nullptr) return nconst(floor_div(*lc, *rc));
        if (*rc == 1) return l;
        nf::LinForm lf = nf::linearize(l);
        bool divisible = !lf.overflow && lf.constant % *rc == 0;
        for (const auto& [m, c] : lf.terms)
          if (c % *rc != 0) divisible = false;
        if (divisible) {
          nf::LinForm q;
          q.constant = lf.constant / *rc;
          for (const auto& [m, c] : lf.terms) q.addTerm(m, c / *rc);
          return nf::rebuild(q);
        }
      }
      return nfdiv(l, r);
    }
    // Mod
    if (rc != nullptr && *rc != 0) {
      if (lc != nullptr) return nconst(floor_mod(*lc, *rc));
      if (*rc == 1) return nconst(0);
      nf::LinForm lf = nf::linearize(l);
      bool divisible = !lf.overflow && lf.constant % *rc == 0;
      for (const auto& [m, c] : lf.terms)
        if (c % *rc != 0) divisible = false;
      if (divisible) return nconst(0);
      if (*rc > 1) {
        Interval li = interval_of_num(l, ctx);
        if (li.lo >= 0 && li.hi <= *rc - 1) return l;
      }
    }
    return nmod(l, r);
  }
  if (const auto* rk = std::get_if<NumRank>(&n)) {
    ShapeExpr s = simplify_shape(rk->arg, ctx);
    return detail::rank_expr(s, ctx);
  }
  if (const auto* ix = std::get_if<NumIndexOf>(&n)) {
    ShapeExpr s = simplify_shape(ix->shape, ctx);
    NumExpr i = simplify_num(ix->index, ctx);
    if (const auto* sl = std::get_if<ShapeSlice>(&s.node().v))
      return simplify_num(nindex(sl->base, nadd(sl->lo, i)), ctx);
    if (const auto* cc = std::get_if<ShapeConcat>(&s.node().v)) {
      auto lrank = detail::rank_const(cc->lhs);
      if (lrank && as_const(i) != nullptr) {
        long long k = *as_const(i);
        if (k < *lrank) return simplify_num(nindex(cc->lhs, i), ctx);
        return simplify_num(nindex(cc->rhs, nconst(k - *lrank)), ctx);
      }
    }
    if (const auto* t = as_tuple(s)) {
      if (const auto* k = as_const(i)) {
        if (*k >= 0 && *k < static_cast<long long>(t->dims.size())) return t->dims[static_cast<size_t>(*k)];
      } else if (!t->dims.empty()) {
        bool uniform = true;
        for (size_t k = 1; k < t->dims.size(); ++k)
          if (!expr_eq(t->dims[0], t->dims[k])) uniform = false;
        if (uniform) return t->dims[0];
      }
    }
    return nindex(s, i);
  }
  const auto& pr = std::get<NumProd>(n);
  ShapeExpr s = simplify_shape(pr.arg, ctx);
  if (const auto* t = as_tuple(s)) {
    NumExpr acc = nconst(1);
    for (const auto& d : t->dims) acc = nmul(acc, d);
    return nf::rebuild(nf::linearize(simplify_num(acc, ctx)));
  }
  if (const auto* cc = std::get_if<ShapeConcat>(&s.node().v))
    return simplify_num(nmul(nprod(cc->lhs), nprod(cc->rhs)), ctx);
  return nprod(s);
}

inline ShapeExpr simplify_shape(const ShapeExpr& e, const IntervalCtx& ctx) {
  const auto& n = e.node().v;
  if (const auto* t = std::get_if<ShapeTuple>(&n)) {
    std::vector<NumExpr> dims;
    dims.reserve(t->dims.size());
    for (const auto& d : t->dims) dims.push_back(simplify_num(d, ctx));
    return stuple(std::move(dims));
  }
  if (std::holds_alternative<ShapeSym>(n)) return e;
  if (const auto* sl = std::get_if<ShapeSlice>(&n)) {
    ShapeExpr base = simplify_shape(sl->base, ctx);
    NumExpr lo = simplify_num(sl->lo, ctx);
    NumExpr hi = simplify_num(sl->hi, ctx);
    // s[0:rank(s)] == s
    if (const auto* lc = as_const(lo); lc != nullptr && *lc == 0) {
      if (expr_eq(hi, detail::rank_expr(base, ctx))) return base;
    }
    const long long* lc = as_const(lo);
    const long long* hc = as_const(hi);
    if (lc != nullptr && hc != nullptr && *lc == *hc) return stuple({});
    if (const auto* inner = std::get_if<ShapeSlice>(&base.node().v)) {
      return simplify_shape(
          sslice(inner->base, nadd(inner->lo, lo), nadd(inner->lo, hi)), ctx);
    }
    if (const auto* t = as_tuple(base); t != nullptr && lc != nullptr && hc != nullptr) {
      long long size = static_cast<long long>(t->dims.size());
      if (*lc >= 0 && *lc <= *hc && *hc <= size) {
        std::vector<NumExpr> dims(t->dims.begin() + *lc, t->dims.begin() + *hc);
        return stuple(std::move(dims));
      }
    }
    if (const auto* cc = std::get_if<ShapeConcat>(&base.node().v)) {
      auto lrank = detail::rank_const(cc->lhs);
      if (lrank && lc != nullptr && hc != nullptr && *lc <= *hc) {
        if (*hc <= *lrank) return simplify_shape(sslice(cc->lhs, lo, hi), ctx);
        if (*lc >= *lrank)
          return simplify_shape(sslice(cc->rhs, nconst(*lc - *lrank), nconst(*hc - *lrank)), ctx);
        return simplify_shape(sconcat(sslice(cc->lhs, lo, nconst(*lrank)),
                                      sslice(cc->rhs, nconst(0), nconst(*hc - *lrank))),
                               ctx);
      }
    }
    return sslice(base, lo, hi);
  }
  // Concat: flatten segments, drop empty tuples, fuse adjacent tuples.
  std::vector<ShapeExpr> segs;
  auto flatten = [&segs](auto&& self, const ShapeExpr& s) -> void {
    if (const auto* c = std::get_if<ShapeConcat>(&s.node().v)) {
      self(self, c->lhs);
      self(self, c->rhs);
      return;
    }
    segs.push_back(s);
  };
  const auto& c = std::get<ShapeConcat>(n);
  flatten(flatten, simplify_shape(c.lhs, ctx));
  flatten(flatten, simplify_shape(c.rhs, ctx));
  std::vector<ShapeExpr> fused;
  for (auto& seg : segs) {
    const auto* t = as_tuple(seg);
    if (t != nullptr && t->dims.empty()) continue;
    if (t != nullptr && !fused.empty()) {
      if (const auto* prev = as_tuple(fused.back())) {
        std::vector<NumExpr> dims = prev->dims;
        dims.insert(dims.end(), t->dims.begin(), t->dims.end());
        fused.back() = stuple(std::move(dims));
        continue;
      }
    }
    fused.push_back(seg);
  }
  if (fused.empty()) return stuple({});
  ShapeExpr acc = fused[0];
  for (size_t i = 1; i < fused.size(); ++i) acc = sconcat(acc, fused[i]);
  return acc;
}

inline BoolExpr simplify_bool(const BoolExpr& e, const IntervalCtx& ctx) {
  const auto& n = e.node().v;
  if (std::holds_alternative<BoolConst>(n) || std::holds_alternative<BoolSym>(n)) return e;
  if (const auto* a = std::get_if<BoolAnd>(&n)) {
    BoolExpr l = simplify_bool(a->lhs, ctx);
    BoolExpr r = simplify_bool(a->rhs, ctx);
    if (const auto* lc = as_const(l)) return *lc ? r : bfalse();
    if (const auto* rc = as_const(r)) return *rc ? l : bfalse();
    if (expr_eq(l, r)) return l;
    return band(l, r);
  }
  if (const auto* o = std::get_if<BoolOr>(&n)) {
    BoolExpr l = simplify_bool(o->lhs, ctx);
    BoolExpr r = simplify_bool(o->rhs, ctx);
    if (const auto* lc = as_const(l)) return *lc ? btrue() : r;
    if (const auto* rc = as_const(r)) return *rc ? btrue() : l;
    if (expr_eq(l, r)) return l;
    return bor(l, r);
  }
  if (const auto* nn = std::get_if<BoolNot>(&n)) {
    BoolExpr a2 = simplify_bool(nn->arg, ctx);
    if (const auto* c = as_const(a2)) return bconst(!*c);
    if (const auto* inner = std::get_if<BoolNot>(&a2.node().v)) return inner->arg;
    return bnot(a2);
  }
  if (const auto* q = std::get_if<BoolEq>(&n)) {
    Sort sort = sort_of(q->lhs);
    if (sort == Sort::Num) {
      NumExpr l = simplify_num(std::get<NumExpr>(q->lhs), ctx);
      NumExpr r = simplify_num(std::get<NumExpr>(q->rhs), ctx);
      if (expr_eq(l, r)) return btrue();
      NumExpr d = simplify_num(nsub(l, r), ctx);
      if (const auto* dc = as_const(d)) return bconst(*dc == 0);
      Interval di = interval_of_num(d, ctx);
      if (!di.contains(0)) return bfalse();
      return beq(l, r);
    }
    if (sort == Sort::Shape) {
      ShapeExpr l = simplify_shape(std::get<ShapeExpr>(q->lhs), ctx);
      ShapeExpr r = simplify_shape(std::get<ShapeExpr>(q->rhs), ctx);
      if (expr_eq(l, r)) return btrue();
      auto lr = detail::rank_const(l);
      auto rr = detail::rank_const(r);
      if (lr && rr && *lr != *rr) return bfalse();
      const auto* lt = as_tuple(l);
      const auto* rt = as_tuple(r);
      if (lt != nullptr && rt != nullptr && lt->dims.size() == rt->dims.size()) {
        BoolExpr acc = btrue();
        for (size_t i = 0; i < lt->dims.size(); ++i)
          acc = simplify_bool(band(acc, beq(lt->dims[i], rt->dims[i])), ctx);
        return acc;
      }
      return beq(l, r);
    }
    BoolExpr l = simplify_bool(std::get<BoolExpr>(q->lhs), ctx);
    BoolExpr r = simplify_bool(std::get<BoolExpr>(q->rhs), ctx);
    if (expr_eq(l, r)) return btrue();
    const auto* lc = as_const(l);
    const auto* rc = as_const(r);
    if (lc != nullptr && rc != nullptr) return bconst(*lc == *rc);
    if (lc != nullptr) return *lc ? r : simplify_bool(bnot(r), ctx);
    if (rc != nullptr) return *rc ? l : simplify_bool(bnot(l), ctx);
    return beq(l, r);
  }
  const auto& lt = std::get<BoolLt>(n);
  NumExpr l = simplify_num(lt.lhs, ctx);
  NumExpr r = simplify_num(lt.rhs, ctx);
  if (expr_eq(l, r)) return bfalse();
  NumExpr d = simplify_num(nsub(r, l), ctx);
  if (const auto* dc = as_const(d)) return bconst(*dc > 0);
  Interval di = interval_of_num(d, ctx);
  if (di.lo >= 1) return btrue();
  if (di.hi <= 0) return bfalse();
  return blt(l, r);
}

inline Formula simplify_formula(const Formula& f, const IntervalCtx& ctx = {}) {
  const auto& n = f.node().v;
  if (const auto* a = std::get_if<FAtom>(&n)) return fatom(simplify_bool(a->expr, ctx));
  if (const auto* an = std::get_if<FAnd>(&n)) {
    Formula l = simplify_formula(an->lhs, ctx);
    Formula r = simplify_formula(an->rhs, ctx);
    if (const auto* lc = formula_const(l)) return *lc ? r : fatom(bfalse());
    if (const auto* rc = formula_const(r)) return *rc ? l : fatom(bfalse());
    return fand(l, r);
  }
  if (const auto* o = std::get_if<FOr>(&n)) {
    Formula l = simplify_formula(o->lhs, ctx);
    Formula r = simplify_formula(o->rhs, ctx);
    if (const auto* lc = formula_const(l)) return *lc ? fatom(btrue()) : r;
    if (const auto* rc = formula_const(r)) return *rc ? fatom(btrue()) : l;
    return for_(l, r);
  }
  if (const auto* nn = std::get_if<FNot>(&n)) {
    Formula a2 = simplify_formula(nn->arg, ctx);
    if (const auto* c = formula_const(a2)) return fatom(bconst(!*c));
    if (const auto* atom = as_atom(a2)) return fatom(simplify_bool(bnot(*atom), ctx));
    return fnot(a2);
  }
  const auto& q = std::get<FForall>(n);
  NumExpr lo = simplify_num(q.lo, ctx);
  NumExpr hi = simplify_num(q.hi, ctx);
  const auto* lc = as_const(lo);
  const auto* hc = as_const(hi);
  if (lc != nullptr && hc != nullptr && *lc > *hc) return fatom(btrue());  // empty range
  IntervalCtx inner = ctx;
  if (lc != nullptr && hc != nullptr) inner[q.binder.id] = Interval{*lc, *hc};
  else inner.erase(q.binder.id);
  Formula body = simplify_formula(q.body, inner);
  if (const auto* bc = formula_const(body)) {
    if (*bc) return fatom(btrue());
    if (lc != nullptr && hc != nullptr && *lc <= *hc) return fatom(bfalse());
  }
  return fforall(q.binder, lo, hi, body);
}

// ---- interval propagation over hard constraints ----

namespace detail {

struct NarrowState {
  IntervalCtx ctx;
  bool contradiction = false;
  bool changed = false;

  bool narrowTo(int32_t sym, Interval bound) {
    Interval cur = Interval::top();
    auto it = ctx.find(sym);
    if (it != ctx.end()) cur = it->second;
    auto met = ivl::meet(cur, bound);
    if (!met) {
      contradiction = true;
      return false;
    }
    if (!(cur == *met)) {
      ctx[sym] = *met;
      changed = true;
    }
    return true;
  }
};

/// Narrows symbol intervals from `linform >= 0`.
inline void narrow_ge0(const nf::LinForm& f, NarrowState& st) {
  if (f.overflow) return;
  // Precompute monomial intervals.
  std::vector<std::pair<const std::vector<NumExpr>*, long long>> items;
  std::vector<Interval> ivls;
  for (const auto& [m, c] : f.terms) {
    items.emplace_back(&m, c);
    NumExpr me = nf::mono_expr(m, 1);
    ivls.push_back(interval_of_num(me, st.ctx));
  }
  for (size_t i = 0; i < items.size(); ++i) {
    const auto& mono = *items[i].first;
    long long ci = items[i].second;
    if (mono.size() != 1) continue;
    const auto* s = std::get_if<NumSym>(&mono[0].node().v);
    if (s == nullptr) continue;
    // ci*x >= -(const + sum of other terms' max)
    Interval rest = Interval::point(f.constant);
    bool restKnown = true;
    for (size_t j = 0; j < items.size(); ++j) {
      if (j == i) continue;
      Interval t = ivl::mul_const(ivls[j], items[j].second);
      rest = ivl::add(rest, t);
      if (!rest.boundedAbove()) restKnown = false;
    }
    if (!restKnown || rest.hi == Interval::kPosInf) continue;
    // ci*x >= -rest.hi
    long long bound = rest.hi;
    if (ci > 0) {
      // x >= ceil(-bound/ci)
      long long lo = -floor_div(bound, ci);
      if (!st.narrowTo(s->sym.id, Interval{lo, Interval::kPosInf})) return;
    } else {
      // x <= floor(-bound / ci) == floor(bound / -ci)
      long long hi = floor_div(bound, -ci);
      if (!st.narrowTo(s->sym.id, Interval{Interval::kNegInf, hi})) return;
    }
  }
}

inline void narrow_atom(const BoolExpr& atom, bool positive, NarrowState& st);

inline void narrow_num_rel(const NumExpr& a, const NumExpr& b, long long slack, NarrowState& st) {
  // a + slack <= b  i.e.  (b - a - slack) >= 0
  nf::LinForm f = nf::linearize(simplify_num(nsub(b, a), st.ctx));
  f.constant -= slack;
  narrow_ge0(f, st);
}

inline void narrow_atom(const BoolExpr& atom, bool positive, NarrowState& st) {
  if (st.contradiction) return;
  const auto& n = atom.node().v;
  if (const auto* c = std::get_if<BoolConst>(&n)) {
    if (c->value != positive) st.contradiction = true;
    return;
  }
  if (const auto* nn = std::get_if<BoolNot>(&n)) {
    narrow_atom(nn->arg, !positive, st);
    return;
  }
  if (const auto* a = std::get_if<BoolAnd>(&n)) {
    if (positive) {
      narrow_atom(a->lhs, true, st);
      narrow_atom(a->rhs, true, st);
    }
    return;  // negated conjunction is a disjunction; skipping is sound
  }
  if (const auto* o = std::get_if<BoolOr>(&n)) {
    if (!positive) {
      narrow_atom(o->lhs, false, st);
      narrow_atom(o->rhs, false, st);
    }
    return;
  }
  if (const auto* l = std::get_if<BoolLt>(&n)) {
    if (positive) narrow_num_rel(l->lhs, l->rhs, 1, st);  // lhs < rhs
    else narrow_num_rel(l->rhs, l->lhs, 0, st);           // rhs <= lhs
    return;
  }
  if (const auto* q = std::get_if<BoolEq>(&n)) {
    if (!positive) return;  // disequality contributes no interval bound
    if (sort_of(q->lhs) == Sort::Num) {
      const auto& a2 = std::get<NumExpr>(q->lhs);
      const auto& b2 = std::get<NumExpr>(q->rhs);
      narrow_num_rel(a2, b2, 0, st);
      narrow_num_rel(b2, a2, 0, st);
      return;
    }
    if (sort_of(q->lhs) == Sort::Shape) {
      const auto* lt = as_tuple(std::get<ShapeExpr>(q->lhs));
      const auto* rt = as_tuple(std::get<ShapeExpr>(q->rhs));
      if (lt != nullptr && rt != nullptr && lt->dims.size() == rt->dims.size()) {
        for (size_t i = 0; i < lt->dims.size(); ++i) {
          narrow_num_rel(lt->dims[i], rt->dims[i], 0, st);
          narrow_num_rel(rt->dims[i], lt->dims[i], 0, st);
        }
      }
      return;
    }
  }
}

inline void narrow_formula(const Formula& f, bool positive, NarrowState& st) {
  const auto& n = f.node().v;
  if (const auto* a = std::get_if<FAtom>(&n)) {
    narrow_atom(a->expr, positive, st);
    return;
  }
  if (const auto* an = std::get_if<FAnd>(&n)) {
    if (positive) {
      narrow_formula(an->lhs, true, st);
      narrow_formula(an->rhs, true, st);
    }
    return;
  }
  if (const auto* o = std::get_if<FOr>(&n)) {
    if (!positive) {
      narrow_formula(o->lhs, false, st);
      narrow_formula(o->rhs, false, st);
    }
    return;
  }
  if (const auto* nn = std::get_if<FNot>(&n)) {
    narrow_formula(nn->arg, !positive, st);
    return;
  }
  // Forall contributes nothing to intervals.
}

}  // namespace detail

/// Interval fixpoint over the hard constraints. Every assignment satisfying
/// the hard set lies within the returned intervals. `contradiction` (when
/// given) reports an empty interval, i.e. an unsatisfiable hard set.
inline IntervalCtx propagate(const ConstraintSet& cs, bool* contradiction = nullptr) {
  detail::NarrowState st;
  for (int iter = 0; iter < 100; ++iter) {
    st.changed = false;
    for (const auto& c : cs.all()) {
      if (c.kind != ConstraintKind::Hard) continue;
      const Formula& f = c.reduced.valid() ? c.reduced : c.formula;
      detail::narrow_formula(f, true, st);
      if (st.contradiction) break;
    }
    if (st.contradiction || !st.changed) break;
  }
  if (contradiction != nullptr) *contradiction = st.contradiction;
  return std::move(st.ctx);
}

// ---- online disposition ----

enum class Disposition { Record, TriviallyTrue, ImmediateFail, ResolvedBranch };

struct OnlineCheck {
  Disposition disposition = Disposition::Record;
  bool branchValue = false;
  Formula reduced;
};

/// Classifies a constraint as it is generated. `hasUnresolvedBranch` tells
/// whether the path already carries symbolic branch conditions: a constraint
/// reduced to false is then only potentially unreachable, not an immediate
/// fail, and the offline check decides.
inline OnlineCheck online_check(const Formula& f, ConstraintKind kind, bool fromBranch,
                                const IntervalCtx& ctx, bool hasUnresolvedBranch) {
  OnlineCheck out;
  out.reduced = simplify_formula(f, ctx);
  const bool* c = formula_const(out.reduced);
  if (fromBranch && c != nullptr) {
    out.disposition = Disposition::ResolvedBranch;
    out.branchValue = *c;
    return out;
  }
  if (c != nullptr && *c) {
    out.disposition = Disposition::TriviallyTrue;
    return out;
  }
  if (c != nullptr && !*c && kind == ConstraintKind::Soft && !hasUnresolvedBranch) {
    out.disposition = Disposition::ImmediateFail;
    return out;
  }
  out.disposition = Disposition::Record;
  return out;
}

}  // namespace shapecheck
