#pragma once

// The tensor-operation catalog: each op computes a symbolic result value and
// emits hard/soft constraints. Soft constraints are the op's preconditions
// (violations are shape errors); hard constraints describe input ranges
// (image channels, random bounds, dataset lengths).
//
// Ops marked `extrapolated` follow standard framework documentation for
// arithmetic the source material only names.

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "shapecheck/constraint.hpp"
#include "shapecheck/expr.hpp"
#include "shapecheck/simplify.hpp"

namespace shapecheck {

/// Abstraction of a data loader: total length, batch size, drop_last flag,
/// and the per-sample shape.
struct EpochValue {
  NumExpr length;
  NumExpr batchSize;
  bool dropLast = false;
  ShapeExpr itemShape;
  std::string name;
};

struct DatasetSpec {
  std::optional<long long> length;                    // absent -> symbolic
  std::optional<std::vector<long long>> itemShape;    // absent -> fresh dims
};
using DatasetOverrides = std::map<std::string, DatasetSpec>;

struct EmittedConstraint {
  Formula formula;
  ConstraintKind kind = ConstraintKind::Soft;
};

struct RuleOutput {
  std::optional<ValueExpr> value;
  std::optional<EpochValue> epoch;
  std::vector<EmittedConstraint> constraints;
};

struct RuleError {
  enum class Code { UnknownOp, DontKnowRank, MultipleInferredDims, NeedsConstant, BadArity, BadSort };
  Code code;
  std::string message;
};

using RuleResult = std::variant<RuleOutput, RuleError>;

struct OpContext {
  SymbolPool* pool = nullptr;
  const IntervalCtx* intervals = nullptr;
  SourcePos origin;
  std::string strArg;  // opaque path literal, when the call had one
  const DatasetOverrides* datasets = nullptr;

  const IntervalCtx& ctx() const {
    static const IntervalCtx empty;
    return intervals != nullptr ? *intervals : empty;
  }

  Sym fresh(Sort sort, const std::string& name) const {
    return pool->fresh(sort, name + "@" + origin.str());
  }
};

namespace oprules {

struct Emitter {
  std::vector<EmittedConstraint> out;
  void soft(Formula f) { out.push_back({std::move(f), ConstraintKind::Soft}); }
  void soft(BoolExpr e) { soft(fatom(std::move(e))); }
  void hard(Formula f) { out.push_back({std::move(f), ConstraintKind::Hard}); }
  void hard(BoolExpr e) { hard(fatom(std::move(e))); }
};

inline RuleError bad_sort(const std::string& op, size_t idx, Sort want, Sort got) {
  return RuleError{RuleError::Code::BadSort,
                   op + ": argument " + std::to_string(idx + 1) + " must be a " + sort_name(want) + ", got " +
                       sort_name(got)};
}

inline RuleError bad_arity(const std::string& op, size_t got, const std::string& want) {
  return RuleError{RuleError::Code::BadArity, op + ": expected " + want + " arguments, got " + std::to_string(got)};
}

inline const ShapeExpr* shape_arg(std::span<const ValueExpr> args, size_t i) {
  return std::get_if<ShapeExpr>(&args[i]);
}
inline const NumExpr* num_arg(std::span<const ValueExpr> args, size_t i) {
  return std::get_if<NumExpr>(&args[i]);
}

inline NumExpr dim(const ShapeExpr& s, long long i, const OpContext& c) {
  return simplify_num(nindex(s, nconst(i)), c.ctx());
}
inline NumExpr dim(const ShapeExpr& s, NumExpr i, const OpContext& c) {
  return simplify_num(nindex(s, std::move(i)), c.ctx());
}
inline NumExpr rank_of(const ShapeExpr& s, const OpContext& c) {
  return simplify_num(nrank(s), c.ctx());
}
inline std::optional<long long> static_rank(const ShapeExpr& s, const OpContext& c) {
  NumExpr r = rank_of(s, c);
  if (const auto* k = as_const(r)) return *k;
  return std::nullopt;
}
inline ShapeExpr seg(const ShapeExpr& s, NumExpr lo, NumExpr hi, const OpContext& c) {
  return simplify_shape(sslice(s, std::move(lo), std::move(hi)), c.ctx());
}
inline ShapeExpr single(NumExpr d) { return stuple({std::move(d)}); }

/// Right-aligned broadcasting; requires statically known ranks.
/// Constant-1 dims resolve at emission; symbolic pairs emit a soft equality
/// and keep the left dim (a documented over-approximation for symbolic
/// size-1 dims).
inline std::optional<std::vector<NumExpr>> broadcast_dims(const ShapeExpr& a, const ShapeExpr& b,
                                                          const OpContext& c, Emitter& em) {
  auto ra = static_rank(a, c);
  auto rb = static_rank(b, c);
  if (!ra || !rb) return std::nullopt;
  long long n = std::max(*ra, *rb);
  std::vector<NumExpr> dims(static_cast<size_t>(n), NumExpr());
  for (long long i = 0; i < n; ++i) {
    long long ai = *ra - 1 - i;
    long long bi = *rb - 1 - i;
    size_t pos = static_cast<size_t>(n - 1 - i);
    if (ai < 0) {
      dims[pos] = dim(b, bi, c);
    } else if (bi < 0) {
      dims[pos] = dim(a, ai, c);
    } else {
      NumExpr x = dim(a, ai, c);
      NumExpr y = dim(b, bi, c);
      const long long* xc = as_const(x);
      const long long* yc = as_const(y);
      if (xc != nullptr && *xc == 1) {
        dims[pos] = y;
      } else if (yc != nullptr && *yc == 1) {
        dims[pos] = x;
      } else {
        em.soft(beq(ValueExpr(x), ValueExpr(y)));
        dims[pos] = x;
      }
    }
  }
  return dims;
}

}  // namespace oprules

struct OpRule {
  std::string name;
  std::string args;         // documentation: argument sorts
  std::string result;       // documentation: result description
  std::string constraints;  // documentation: emitted constraints
  bool extrapolated = false;
  std::function<RuleResult(std::span<const ValueExpr>, const OpContext&)> apply;
};

class OpCatalog {
 public:
  static const OpCatalog& instance() {
    static OpCatalog cat;
    return cat;
  }

  /// nullptr means UnknownOp; analysis of that path degrades to dontknow.
  const OpRule* lookup(std::string_view name) const {
    auto it = rules_.find(std::string(name));
    return it == rules_.end() ? nullptr : &it->second;
  }

  std::vector<const OpRule*> all() const {
    std::vector<const OpRule*> out;
    for (const auto& [_, r] : rules_) out.push_back(&r);
    return out;
  }

  /// Markdown table of the whole catalog (op, arguments, result, constraints).
  std::string markdown() const {
    std::string md = "| op | arguments | result | constraints |\n|---|---|---|---|\n";
    for (const auto& [_, r] : rules_) {
      md += "| `" + r.name + "`" + (r.extrapolated ? " *" : "") + " | " + r.args + " | " + r.result + " | " +
            r.constraints + " |\n";
    }
    md += "\n`*` semantics extrapolated from standard framework documentation.\n";
    return md;
  }

 private:
  OpCatalog();
  std::map<std::string, OpRule> rules_;
};

namespace oprules {

using Args = std::span<const ValueExpr>;

// -- core rules --

inline RuleResult rule_mm(Args args, const OpContext& c) {
  const auto* a = shape_arg(args, 0);
  const auto* b = shape_arg(args, 1);
  if (a == nullptr) return bad_sort("mm", 0, Sort::Shape, sort_of(args[0]));
  if (b == nullptr) return bad_sort("mm", 1, Sort::Shape, sort_of(args[1]));
  Emitter em;
  em.soft(beq(ValueExpr(rank_of(*a, c)), ValueExpr(nconst(2))));
  em.soft(beq(ValueExpr(rank_of(*b, c)), ValueExpr(nconst(2))));
  em.soft(beq(ValueExpr(dim(*a, 1, c)), ValueExpr(dim(*b, 0, c))));
  ShapeExpr result = stuple({dim(*a, 0, c), dim(*b, 1, c)});
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_reshape_like(const std::string& op, Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort(op, 0, Sort::Shape, sort_of(args[0]));
  if (args.size() < 2) return bad_arity(op, args.size(), "at least 2");
  std::vector<NumExpr> dims;
  int inferredAt = -1;
  for (size_t i = 1; i < args.size(); ++i) {
    const auto* d = num_arg(args, i);
    if (d == nullptr) return bad_sort(op, i, Sort::Num, sort_of(args[i]));
    NumExpr ds = simplify_num(*d, c.ctx());
    const long long* k = as_const(ds);
    if (k != nullptr && *k == -1) {
      if (inferredAt >= 0)
        return RuleError{RuleError::Code::MultipleInferredDims, op + ": more than one inferred (-1) dimension"};
      inferredAt = static_cast<int>(i - 1);
    }
    dims.push_back(ds);
  }
  Emitter em;
  NumExpr srcElems = simplify_num(nprod(*t), c.ctx());
  if (inferredAt < 0) {
    for (const auto& d : dims) em.soft(blt(nconst(0), d));
    ShapeExpr result = simplify_shape(stuple(dims), c.ctx());
    em.soft(beq(ValueExpr(srcElems), ValueExpr(simplify_num(nprod(result), c.ctx()))));
    return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
  }
  NumExpr others = nconst(1);
  for (size_t i = 0; i < dims.size(); ++i)
    if (static_cast<int>(i) != inferredAt) others = nmul(others, dims[i]);
  others = simplify_num(others, c.ctx());
  for (size_t i = 0; i < dims.size(); ++i)
    if (static_cast<int>(i) != inferredAt) em.soft(blt(nconst(0), dims[i]));
  em.soft(beq(ValueExpr(simplify_num(nmod(srcElems, others), c.ctx())), ValueExpr(nconst(0))));
  dims[static_cast<size_t>(inferredAt)] = simplify_num(nfdiv(srcElems, others), c.ctx());
  ShapeExpr result = simplify_shape(stuple(dims), c.ctx());
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_transpose(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  const auto* d0 = num_arg(args, 1);
  const auto* d1 = num_arg(args, 2);
  if (t == nullptr) return bad_sort("transpose", 0, Sort::Shape, sort_of(args[0]));
  if (d0 == nullptr) return bad_sort("transpose", 1, Sort::Num, sort_of(args[1]));
  if (d1 == nullptr) return bad_sort("transpose", 2, Sort::Num, sort_of(args[2]));
  Emitter em;
  NumExpr a = simplify_num(*d0, c.ctx());
  NumExpr b = simplify_num(*d1, c.ctx());
  NumExpr rk = rank_of(*t, c);
  // 0 <= d0 < d1 < rank(t)
  em.soft(band(band(ble(nconst(0), a), blt(a, b)), blt(b, rk)));
  ShapeExpr result = seg(*t, nconst(0), a, c);
  result = sconcat(result, single(dim(*t, b, c)));
  result = sconcat(result, sslice(*t, nadd(a, nconst(1)), b));
  result = sconcat(result, single(dim(*t, a, c)));
  result = sconcat(result, sslice(*t, nadd(b, nconst(1)), nrank(*t)));
  return RuleOutput{ValueExpr(simplify_shape(result, c.ctx())), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_read_image(Args args, const OpContext& c) {
  (void)args;
  Emitter em;
  Sym ch = c.fresh(Sort::Num, "channels");
  Sym h = c.fresh(Sort::Num, "height");
  Sym w = c.fresh(Sort::Num, "width");
  // channels range from monochrome to RGBA
  em.hard(band(ble(nconst(1), nsym(ch)), ble(nsym(ch), nconst(4))));
  em.hard(blt(nconst(0), nsym(h)));
  em.hard(blt(nconst(0), nsym(w)));
  ShapeExpr result = stuple({nsym(ch), nsym(h), nsym(w)});
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_rand_int(Args args, const OpContext& c) {
  const auto* lo = num_arg(args, 0);
  const auto* hi = num_arg(args, 1);
  if (lo == nullptr) return bad_sort("randint", 0, Sort::Num, sort_of(args[0]));
  if (hi == nullptr) return bad_sort("randint", 1, Sort::Num, sort_of(args[1]));
  Emitter em;
  Sym v = c.fresh(Sort::Num, "randint");
  em.hard(band(ble(simplify_num(*lo, c.ctx()), nsym(v)), ble(nsym(v), simplify_num(*hi, c.ctx()))));
  return RuleOutput{ValueExpr(nsym(v)), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_broadcast(Args args, const OpContext& c) {
  const auto* a = shape_arg(args, 0);
  const auto* b = shape_arg(args, 1);
  if (a == nullptr) return bad_sort("broadcast", 0, Sort::Shape, sort_of(args[0]));
  if (b == nullptr) return bad_sort("broadcast", 1, Sort::Shape, sort_of(args[1]));
  Emitter em;
  auto dims = broadcast_dims(*a, *b, c, em);
  if (!dims)
    return RuleError{RuleError::Code::DontKnowRank, "broadcast: operand ranks are not statically known"};
  return RuleOutput{ValueExpr(simplify_shape(stuple(*dims), c.ctx())), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_nll_loss(Args args, const OpContext& c) {
  const auto* out = shape_arg(args, 0);
  const auto* tgt = shape_arg(args, 1);
  if (out == nullptr) return bad_sort("nll_loss", 0, Sort::Shape, sort_of(args[0]));
  if (tgt == nullptr) return bad_sort("nll_loss", 1, Sort::Shape, sort_of(args[1]));
  Emitter em;
  em.soft(ble(nconst(2), rank_of(*out, c)));
  // output shape without its second dimension equals the target shape
  ShapeExpr squeezed = simplify_shape(sconcat(sslice(*out, nconst(0), nconst(1)),
                                              sslice(*out, nconst(2), nrank(*out))),
                                      c.ctx());
  em.soft(beq(ValueExpr(squeezed), ValueExpr(*tgt)));
  return RuleOutput{ValueExpr(stuple({})), std::nullopt, std::move(em.out)};
}

inline RuleResult conv_output(const std::string& op, Args args, const OpContext& c, bool transposed) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort(op, 0, Sort::Shape, sort_of(args[0]));
  // input, in_channels, out_channels, kernel [, stride [, padding [, dilation]]]
  if (args.size() < 4 || args.size() > 7) return bad_arity(op, args.size(), "4 to 7");
  std::vector<NumExpr> p;
  for (size_t i = 1; i < args.size(); ++i) {
    const auto* n = num_arg(args, i);
    if (n == nullptr) return bad_sort(op, i, Sort::Num, sort_of(args[i]));
    p.push_back(simplify_num(*n, c.ctx()));
  }
  while (p.size() < 4) p.push_back(nconst(1));   // stride
  if (p.size() < 5) p.push_back(nconst(0));      // padding
  if (p.size() < 6) p.push_back(nconst(1));      // dilation
  NumExpr inCh = p[0], outCh = p[1], kernel = p[2], stride = p[3], pad = p[4], dil = p[5];
  Emitter em;
  em.soft(beq(ValueExpr(rank_of(*t, c)), ValueExpr(nconst(4))));
  em.soft(beq(ValueExpr(dim(*t, 1, c)), ValueExpr(inCh)));
  auto spatial = [&](long long axis) {
    NumExpr size = dim(*t, axis, c);
    NumExpr e;
    if (!transposed) {
      // (size + 2*pad - dilation*(kernel-1) - 1) // stride + 1
      e = nadd(nfdiv(nsub(nsub(nadd(size, nmul(nconst(2), pad)), nmul(dil, nsub(kernel, nconst(1)))), nconst(1)),
                     stride),
               nconst(1));
    } else {
      // (size - 1)*stride - 2*pad + dilation*(kernel-1) + 1
      e = nadd(nadd(nsub(nmul(nsub(size, nconst(1)), stride), nmul(nconst(2), pad)),
                    nmul(dil, nsub(kernel, nconst(1)))),
               nconst(1));
    }
    return simplify_num(e, c.ctx());
  };
  NumExpr outH = spatial(2);
  NumExpr outW = spatial(3);
  em.soft(ble(nconst(1), outH));
  em.soft(ble(nconst(1), outW));
  ShapeExpr result = stuple({dim(*t, 0, c), outCh, outH, outW});
  return RuleOutput{ValueExpr(simplify_shape(result, c.ctx())), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_cat(Args args, const OpContext& c) {
  if (args.size() < 2) return bad_arity("cat", args.size(), "at least 2 (tensors..., dim)");
  const auto* d = num_arg(args, args.size() - 1);
  if (d == nullptr) return bad_sort("cat", args.size() - 1, Sort::Num, sort_of(args.back()));
  std::vector<const ShapeExpr*> ts;
  for (size_t i = 0; i + 1 < args.size(); ++i) {
    const auto* t = shape_arg(args, i);
    if (t == nullptr) return bad_sort("cat", i, Sort::Shape, sort_of(args[i]));
    ts.push_back(t);
  }
  NumExpr dimIdx = simplify_num(*d, c.ctx());
  const long long* dk = as_const(dimIdx);
  auto r0 = static_rank(*ts[0], c);
  if (!r0 || dk == nullptr)
    return RuleError{RuleError::Code::DontKnowRank, "cat: rank or dim index not statically known"};
  Emitter em;
  em.soft(band(ble(nconst(0), dimIdx), blt(dimIdx, rank_of(*ts[0], c))));
  for (size_t i = 1; i < ts.size(); ++i)
    em.soft(beq(ValueExpr(rank_of(*ts[i], c)), ValueExpr(rank_of(*ts[0], c))));
  std::vector<NumExpr> dims;
  for (long long j = 0; j < *r0; ++j) {
    if (j == *dk) {
      NumExpr sum = dim(*ts[0], j, c);
      for (size_t i = 1; i < ts.size(); ++i) sum = nadd(sum, dim(*ts[i], j, c));
      dims.push_back(simplify_num(sum, c.ctx()));
    } else {
      for (size_t i = 1; i < ts.size(); ++i) {
        auto ri = static_rank(*ts[i], c);
        if (!ri || j < *ri)
          em.soft(beq(ValueExpr(dim(*ts[0], j, c)), ValueExpr(dim(*ts[i], j, c))));
      }
      dims.push_back(dim(*ts[0], j, c));
    }
  }
  return RuleOutput{ValueExpr(simplify_shape(stuple(dims), c.ctx())), std::nullopt, std::move(em.out)};
}

// -- catalog ops with semantics analogous to the core rules --

inline RuleResult rule_identity(Args args, const OpContext&) {
  return RuleOutput{args[0], std::nullopt, {}};
}

inline RuleResult rule_scalar(Args args, const OpContext& c) {
  if (!args.empty() && num_arg(args, 0) == nullptr) return bad_sort("scalar", 0, Sort::Num, sort_of(args[0]));
  (void)c;
  return RuleOutput{ValueExpr(stuple({})), std::nullopt, {}};
}

inline RuleResult rule_is_same_shape(Args args, const OpContext& c) {
  const auto* a = shape_arg(args, 0);
  const auto* b = shape_arg(args, 1);
  if (a == nullptr) return bad_sort("isSameShape", 0, Sort::Shape, sort_of(args[0]));
  if (b == nullptr) return bad_sort("isSameShape", 1, Sort::Shape, sort_of(args[1]));
  return RuleOutput{ValueExpr(simplify_bool(beq(ValueExpr(*a), ValueExpr(*b)), c.ctx())), std::nullopt, {}};
}

inline RuleResult rule_matmul(Args args, const OpContext& c) {
  const auto* a = shape_arg(args, 0);
  const auto* b = shape_arg(args, 1);
  if (a == nullptr) return bad_sort("matmul", 0, Sort::Shape, sort_of(args[0]));
  if (b == nullptr) return bad_sort("matmul", 1, Sort::Shape, sort_of(args[1]));
  auto ra = static_rank(*a, c);
  auto rb = static_rank(*b, c);
  if (!ra || !rb)
    return RuleError{RuleError::Code::DontKnowRank, "matmul: operand ranks are not statically known"};
  Emitter em;
  if (*ra == 0 || *rb == 0) {
    em.soft(band(ble(nconst(1), rank_of(*a, c)), ble(nconst(1), rank_of(*b, c))));
    return RuleOutput{ValueExpr(stuple({})), std::nullopt, std::move(em.out)};
  }
  if (*ra == 1 && *rb == 1) {
    em.soft(beq(ValueExpr(dim(*a, 0, c)), ValueExpr(dim(*b, 0, c))));
    return RuleOutput{ValueExpr(stuple({})), std::nullopt, std::move(em.out)};
  }
  if (*ra == 1) {
    em.soft(beq(ValueExpr(dim(*a, 0, c)), ValueExpr(dim(*b, *rb - 2, c))));
    ShapeExpr result = simplify_shape(
        sconcat(sslice(*b, nconst(0), nconst(*rb - 2)), single(dim(*b, *rb - 1, c))), c.ctx());
    return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
  }
  if (*rb == 1) {
    em.soft(beq(ValueExpr(dim(*a, *ra - 1, c)), ValueExpr(dim(*b, 0, c))));
    ShapeExpr result = seg(*a, nconst(0), nconst(*ra - 1), c);
    return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
  }
  em.soft(beq(ValueExpr(dim(*a, *ra - 1, c)), ValueExpr(dim(*b, *rb - 2, c))));
  ShapeExpr batchA = seg(*a, nconst(0), nconst(*ra - 2), c);
  ShapeExpr batchB = seg(*b, nconst(0), nconst(*rb - 2), c);
  auto batch = broadcast_dims(batchA, batchB, c, em);
  if (!batch) return RuleError{RuleError::Code::DontKnowRank, "matmul: batch ranks unknown"};
  std::vector<NumExpr> dims = *batch;
  dims.push_back(dim(*a, *ra - 2, c));
  dims.push_back(dim(*b, *rb - 1, c));
  return RuleOutput{ValueExpr(simplify_shape(stuple(dims), c.ctx())), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_bmm(Args args, const OpContext& c) {
  const auto* a = shape_arg(args, 0);
  const auto* b = shape_arg(args, 1);
  if (a == nullptr) return bad_sort("bmm", 0, Sort::Shape, sort_of(args[0]));
  if (b == nullptr) return bad_sort("bmm", 1, Sort::Shape, sort_of(args[1]));
  Emitter em;
  em.soft(beq(ValueExpr(rank_of(*a, c)), ValueExpr(nconst(3))));
  em.soft(beq(ValueExpr(rank_of(*b, c)), ValueExpr(nconst(3))));
  em.soft(beq(ValueExpr(dim(*a, 0, c)), ValueExpr(dim(*b, 0, c))));
  em.soft(beq(ValueExpr(dim(*a, 2, c)), ValueExpr(dim(*b, 1, c))));
  ShapeExpr result = stuple({dim(*a, 0, c), dim(*a, 1, c), dim(*b, 2, c)});
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_item(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort("item", 0, Sort::Shape, sort_of(args[0]));
  Emitter em;
  em.soft(beq(ValueExpr(simplify_num(nprod(*t), c.ctx())), ValueExpr(nconst(1))));
  Sym v = c.fresh(Sort::Num, "item");
  return RuleOutput{ValueExpr(nsym(v)), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_repeat(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort("repeat", 0, Sort::Shape, sort_of(args[0]));
  if (args.size() < 2) return bad_arity("repeat", args.size(), "at least 2");
  auto r = static_rank(*t, c);
  if (!r) return RuleError{RuleError::Code::DontKnowRank, "repeat: input rank not statically known"};
  long long m = static_cast<long long>(args.size()) - 1;
  Emitter em;
  // number of repeat factors must cover the rank
  em.soft(ble(rank_of(*t, c), nconst(m)));
  std::vector<NumExpr> dims;
  for (long long i = 0; i < m; ++i) {
    const auto* s = num_arg(args, static_cast<size_t>(i + 1));
    if (s == nullptr) return bad_sort("repeat", static_cast<size_t>(i + 1), Sort::Num, sort_of(args[i + 1]));
    NumExpr factor = simplify_num(*s, c.ctx());
    long long j = i - (m - *r);
    if (j >= 0 && m >= *r)
      dims.push_back(simplify_num(nmul(factor, dim(*t, j, c)), c.ctx()));
    else
      dims.push_back(factor);
  }
  return RuleOutput{ValueExpr(simplify_shape(stuple(dims), c.ctx())), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_expand(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort("expand", 0, Sort::Shape, sort_of(args[0]));
  if (args.size() < 2) return bad_arity("expand", args.size(), "at least 2");
  auto r = static_rank(*t, c);
  if (!r) return RuleError{RuleError::Code::DontKnowRank, "expand: input rank not statically known"};
  long long m = static_cast<long long>(args.size()) - 1;
  Emitter em;
  em.soft(ble(rank_of(*t, c), nconst(m)));
  std::vector<NumExpr> dims;
  for (long long i = 0; i < m; ++i) {
    const auto* s = num_arg(args, static_cast<size_t>(i + 1));
    if (s == nullptr) return bad_sort("expand", static_cast<size_t>(i + 1), Sort::Num, sort_of(args[i + 1]));
    NumExpr size = simplify_num(*s, c.ctx());
    const long long* sc = as_const(size);
    long long j = i - (m - *r);
    if (j < 0 || m < *r) {
      // new leading dim: -1 is not allowed here
      em.soft(ble(nconst(0), size));
      dims.push_back(size);
      continue;
    }
    NumExpr cur = dim(*t, j, c);
    if (sc != nullptr && *sc == -1) {
      dims.push_back(cur);
      continue;
    }
    const long long* cc = as_const(cur);
    if (cc != nullptr && *cc == 1) {
      em.soft(ble(nconst(0), size));
      dims.push_back(size);
      continue;
    }
    em.soft(beq(ValueExpr(cur), ValueExpr(size)));
    dims.push_back(size);
  }
  return RuleOutput{ValueExpr(simplify_shape(stuple(dims), c.ctx())), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_expand_as(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  const auto* o = shape_arg(args, 1);
  if (t == nullptr) return bad_sort("expand_as", 0, Sort::Shape, sort_of(args[0]));
  if (o == nullptr) return bad_sort("expand_as", 1, Sort::Shape, sort_of(args[1]));
  auto rt = static_rank(*t, c);
  auto ro = static_rank(*o, c);
  if (!rt || !ro) return RuleError{RuleError::Code::DontKnowRank, "expand_as: ranks not statically known"};
  Emitter em;
  em.soft(ble(rank_of(*t, c), rank_of(*o, c)));
  for (long long i = 0; i < *rt; ++i) {
    NumExpr cur = dim(*t, *rt - 1 - i, c);
    NumExpr tgt = dim(*o, *ro - 1 - i, c);
    const long long* cc = as_const(cur);
    if (cc != nullptr && *cc == 1) continue;
    em.soft(beq(ValueExpr(cur), ValueExpr(tgt)));
  }
  return RuleOutput{ValueExpr(*o), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_reduce(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort("reduce", 0, Sort::Shape, sort_of(args[0]));
  if (args.size() == 1) return RuleOutput{ValueExpr(stuple({})), std::nullopt, {}};
  const auto* d = num_arg(args, 1);
  if (d == nullptr) return bad_sort("reduce", 1, Sort::Num, sort_of(args[1]));
  NumExpr dimIdx = simplify_num(*d, c.ctx());
  Emitter em;
  em.soft(band(ble(nconst(0), dimIdx), blt(dimIdx, rank_of(*t, c))));
  ShapeExpr result = simplify_shape(
      sconcat(sslice(*t, nconst(0), dimIdx), sslice(*t, nadd(dimIdx, nconst(1)), nrank(*t))), c.ctx());
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_topk(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  const auto* k = num_arg(args, 1);
  if (t == nullptr) return bad_sort("topk", 0, Sort::Shape, sort_of(args[0]));
  if (k == nullptr) return bad_sort("topk", 1, Sort::Num, sort_of(args[1]));
  NumExpr kk = simplify_num(*k, c.ctx());
  Emitter em;
  NumExpr dimIdx;
  if (args.size() >= 3) {
    const auto* d = num_arg(args, 2);
    if (d == nullptr) return bad_sort("topk", 2, Sort::Num, sort_of(args[2]));
    dimIdx = simplify_num(*d, c.ctx());
    em.soft(band(ble(nconst(0), dimIdx), blt(dimIdx, rank_of(*t, c))));
  } else {
    dimIdx = simplify_num(nsub(nrank(*t), nconst(1)), c.ctx());
    em.soft(ble(nconst(1), rank_of(*t, c)));
  }
  em.soft(band(blt(nconst(0), kk), ble(kk, dim(*t, dimIdx, c))));
  ShapeExpr result = simplify_shape(
      sconcat(sconcat(sslice(*t, nconst(0), dimIdx), single(kk)), sslice(*t, nadd(dimIdx, nconst(1)), nrank(*t))),
      c.ctx());
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_pool2d(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort("pool2d", 0, Sort::Shape, sort_of(args[0]));
  if (args.size() < 2 || args.size() > 4) return bad_arity("pool2d", args.size(), "2 to 4");
  std::vector<NumExpr> p;
  for (size_t i = 1; i < args.size(); ++i) {
    const auto* n = num_arg(args, i);
    if (n == nullptr) return bad_sort("pool2d", i, Sort::Num, sort_of(args[i]));
    p.push_back(simplify_num(*n, c.ctx()));
  }
  NumExpr kernel = p[0];
  NumExpr stride = p.size() > 1 ? p[1] : kernel;  // stride defaults to kernel
  NumExpr pad = p.size() > 2 ? p[2] : nconst(0);
  Emitter em;
  em.soft(beq(ValueExpr(rank_of(*t, c)), ValueExpr(nconst(4))));
  auto spatial = [&](long long axis) {
    NumExpr size = dim(*t, axis, c);
    return simplify_num(nadd(nfdiv(nsub(nadd(size, nmul(nconst(2), pad)), kernel), stride), nconst(1)), c.ctx());
  };
  NumExpr outH = spatial(2);
  NumExpr outW = spatial(3);
  em.soft(ble(nconst(1), outH));
  em.soft(ble(nconst(1), outW));
  ShapeExpr result = stuple({dim(*t, 0, c), dim(*t, 1, c), outH, outW});
  return RuleOutput{ValueExpr(simplify_shape(result, c.ctx())), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_batchnorm2d(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  const auto* f = num_arg(args, 1);
  if (t == nullptr) return bad_sort("batchnorm2d", 0, Sort::Shape, sort_of(args[0]));
  if (f == nullptr) return bad_sort("batchnorm2d", 1, Sort::Num, sort_of(args[1]));
  Emitter em;
  em.soft(beq(ValueExpr(rank_of(*t, c)), ValueExpr(nconst(4))));
  em.soft(beq(ValueExpr(dim(*t, 1, c)), ValueExpr(simplify_num(*f, c.ctx()))));
  return RuleOutput{args[0], std::nullopt, std::move(em.out)};
}

inline RuleResult rule_stack(Args args, const OpContext& c) {
  if (args.size() < 2) return bad_arity("stack", args.size(), "at least 2 (tensors..., dim)");
  const auto* d = num_arg(args, args.size() - 1);
  if (d == nullptr) return bad_sort("stack", args.size() - 1, Sort::Num, sort_of(args.back()));
  std::vector<const ShapeExpr*> ts;
  for (size_t i = 0; i + 1 < args.size(); ++i) {
    const auto* t = shape_arg(args, i);
    if (t == nullptr) return bad_sort("stack", i, Sort::Shape, sort_of(args[i]));
    ts.push_back(t);
  }
  NumExpr dimIdx = simplify_num(*d, c.ctx());
  Emitter em;
  em.soft(band(ble(nconst(0), dimIdx), ble(dimIdx, rank_of(*ts[0], c))));
  for (size_t i = 1; i < ts.size(); ++i) em.soft(beq(ValueExpr(*ts[0]), ValueExpr(*ts[i])));
  ShapeExpr result = simplify_shape(
      sconcat(sconcat(sslice(*ts[0], nconst(0), dimIdx), single(nconst(static_cast<long long>(ts.size())))),
              sslice(*ts[0], dimIdx, nrank(*ts[0]))),
      c.ctx());
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_unsqueeze(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  const auto* d = num_arg(args, 1);
  if (t == nullptr) return bad_sort("unsqueeze", 0, Sort::Shape, sort_of(args[0]));
  if (d == nullptr) return bad_sort("unsqueeze", 1, Sort::Num, sort_of(args[1]));
  NumExpr dimIdx = simplify_num(*d, c.ctx());
  Emitter em;
  em.soft(band(ble(nconst(0), dimIdx), ble(dimIdx, rank_of(*t, c))));
  ShapeExpr result = simplify_shape(
      sconcat(sconcat(sslice(*t, nconst(0), dimIdx), single(nconst(1))), sslice(*t, dimIdx, nrank(*t))), c.ctx());
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_squeeze(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort("squeeze", 0, Sort::Shape, sort_of(args[0]));
  if (args.size() == 1) {
    ShapeExpr st = simplify_shape(*t, c.ctx());
    const auto* tup = as_tuple(st);
    if (tup == nullptr)
      return RuleError{RuleError::Code::NeedsConstant, "squeeze: shape not statically known"};
    std::vector<NumExpr> dims;
    for (const auto& dm : tup->dims) {
      const long long* k = as_const(dm);
      if (k == nullptr)
        return RuleError{RuleError::Code::NeedsConstant, "squeeze: dimension value not statically known"};
      if (*k != 1) dims.push_back(dm);
    }
    return RuleOutput{ValueExpr(stuple(dims)), std::nullopt, {}};
  }
  const auto* d = num_arg(args, 1);
  if (d == nullptr) return bad_sort("squeeze", 1, Sort::Num, sort_of(args[1]));
  NumExpr dimIdx = simplify_num(*d, c.ctx());
  Emitter em;
  em.soft(band(ble(nconst(0), dimIdx), blt(dimIdx, rank_of(*t, c))));
  NumExpr size = dim(*t, dimIdx, c);
  const long long* k = as_const(size);
  if (k == nullptr)
    return RuleError{RuleError::Code::NeedsConstant, "squeeze: dimension value not statically known"};
  if (*k != 1) return RuleOutput{args[0], std::nullopt, std::move(em.out)};
  ShapeExpr result = simplify_shape(
      sconcat(sslice(*t, nconst(0), dimIdx), sslice(*t, nadd(dimIdx, nconst(1)), nrank(*t))), c.ctx());
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_diag(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort("diag", 0, Sort::Shape, sort_of(args[0]));
  NumExpr off = nconst(0);
  if (args.size() >= 2) {
    const auto* o = num_arg(args, 1);
    if (o == nullptr) return bad_sort("diag", 1, Sort::Num, sort_of(args[1]));
    off = simplify_num(*o, c.ctx());
  }
  auto r = static_rank(*t, c);
  if (!r) return RuleError{RuleError::Code::DontKnowRank, "diag: input rank not statically known"};
  Emitter em;
  if (*r == 1) {
    NumExpr n = dim(*t, 0, c);
    const long long* nc = as_const(n);
    const long long* oc = as_const(off);
    if (nc != nullptr && oc != nullptr) {
      long long len = *nc + (*oc < 0 ? -*oc : *oc);
      return RuleOutput{ValueExpr(stuple_of({len, len})), std::nullopt, std::move(em.out)};
    }
    Sym len = c.fresh(Sort::Num, "diag_size");
    em.hard(ble(n, nsym(len)));
    return RuleOutput{ValueExpr(stuple({nsym(len), nsym(len)})), std::nullopt, std::move(em.out)};
  }
  if (*r != 2) {
    em.soft(beq(ValueExpr(rank_of(*t, c)), ValueExpr(nconst(2))));
    Sym len = c.fresh(Sort::Num, "diag_len");
    return RuleOutput{ValueExpr(stuple({nsym(len)})), std::nullopt, std::move(em.out)};
  }
  NumExpr rows = dim(*t, 0, c);
  NumExpr cols = dim(*t, 1, c);
  // offset stays within the first dimension: -t[0] <= off <= t[0]
  em.soft(band(ble(simplify_num(nsub(nconst(0), rows), c.ctx()), off), ble(off, rows)));
  const long long* rc = as_const(rows);
  const long long* cc = as_const(cols);
  const long long* oc = as_const(off);
  if (rc != nullptr && cc != nullptr && oc != nullptr) {
    long long len = *oc >= 0 ? std::min(*rc, *cc - *oc) : std::min(*rc + *oc, *cc);
    len = std::max(len, 0LL);
    return RuleOutput{ValueExpr(stuple_of({len})), std::nullopt, std::move(em.out)};
  }
  Sym len = c.fresh(Sort::Num, "diag_len");
  em.hard(ble(nconst(0), nsym(len)));
  return RuleOutput{ValueExpr(stuple({nsym(len)})), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_flatten(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort("flatten", 0, Sort::Shape, sort_of(args[0]));
  if (args.size() == 1)
    return RuleOutput{ValueExpr(simplify_shape(single(simplify_num(nprod(*t), c.ctx())), c.ctx())), std::nullopt, {}};
  const auto* s = num_arg(args, 1);
  if (s == nullptr) return bad_sort("flatten", 1, Sort::Num, sort_of(args[1]));
  NumExpr start = simplify_num(*s, c.ctx());
  Emitter em;
  if (args.size() == 2) {
    em.soft(band(ble(nconst(0), start), blt(start, rank_of(*t, c))));
    ShapeExpr result = simplify_shape(
        sconcat(sslice(*t, nconst(0), start), single(nprod(sslice(*t, start, nrank(*t))))), c.ctx());
    return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
  }
  const auto* e = num_arg(args, 2);
  if (e == nullptr) return bad_sort("flatten", 2, Sort::Num, sort_of(args[2]));
  NumExpr end = simplify_num(*e, c.ctx());
  em.soft(band(band(ble(nconst(0), start), ble(start, end)), blt(end, rank_of(*t, c))));
  ShapeExpr result = simplify_shape(
      sconcat(sconcat(sslice(*t, nconst(0), start), single(nprod(sslice(*t, start, nadd(end, nconst(1)))))),
              sslice(*t, nadd(end, nconst(1)), nrank(*t))),
      c.ctx());
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_narrow(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  const auto* d = num_arg(args, 1);
  const auto* s = num_arg(args, 2);
  const auto* l = num_arg(args, 3);
  if (t == nullptr) return bad_sort("narrow", 0, Sort::Shape, sort_of(args[0]));
  if (d == nullptr) return bad_sort("narrow", 1, Sort::Num, sort_of(args[1]));
  if (s == nullptr) return bad_sort("narrow", 2, Sort::Num, sort_of(args[2]));
  if (l == nullptr) return bad_sort("narrow", 3, Sort::Num, sort_of(args[3]));
  NumExpr dimIdx = simplify_num(*d, c.ctx());
  NumExpr start = simplify_num(*s, c.ctx());
  NumExpr len = simplify_num(*l, c.ctx());
  Emitter em;
  em.soft(band(ble(nconst(0), dimIdx), blt(dimIdx, rank_of(*t, c))));
  em.soft(ble(nconst(0), start));
  em.soft(ble(nconst(0), len));
  em.soft(ble(simplify_num(nadd(start, len), c.ctx()), dim(*t, dimIdx, c)));
  ShapeExpr result = simplify_shape(
      sconcat(sconcat(sslice(*t, nconst(0), dimIdx), single(len)), sslice(*t, nadd(dimIdx, nconst(1)), nrank(*t))),
      c.ctx());
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_pixel_shuffle(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  const auto* r = num_arg(args, 1);
  if (t == nullptr) return bad_sort("pixel_shuffle", 0, Sort::Shape, sort_of(args[0]));
  if (r == nullptr) return bad_sort("pixel_shuffle", 1, Sort::Num, sort_of(args[1]));
  NumExpr f = simplify_num(*r, c.ctx());
  NumExpr f2 = simplify_num(nmul(f, f), c.ctx());
  Emitter em;
  em.soft(beq(ValueExpr(rank_of(*t, c)), ValueExpr(nconst(4))));
  em.soft(blt(nconst(0), f));
  em.soft(beq(ValueExpr(simplify_num(nmod(dim(*t, 1, c), f2), c.ctx())), ValueExpr(nconst(0))));
  ShapeExpr result = stuple({dim(*t, 0, c), simplify_num(nfdiv(dim(*t, 1, c), f2), c.ctx()),
                             simplify_num(nmul(dim(*t, 2, c), f), c.ctx()),
                             simplify_num(nmul(dim(*t, 3, c), f), c.ctx())});
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_layer_norm(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort("layer_norm", 0, Sort::Shape, sort_of(args[0]));
  if (args.size() < 2) return bad_arity("layer_norm", args.size(), "at least 2");
  std::vector<NumExpr> norm;
  for (size_t i = 1; i < args.size(); ++i) {
    const auto* n = num_arg(args, i);
    if (n == nullptr) return bad_sort("layer_norm", i, Sort::Num, sort_of(args[i]));
    norm.push_back(simplify_num(*n, c.ctx()));
  }
  long long k = static_cast<long long>(norm.size());
  Emitter em;
  em.soft(ble(nconst(k), rank_of(*t, c)));
  ShapeExpr trailing = seg(*t, nsub(nrank(*t), nconst(k)), nrank(*t), c);
  em.soft(beq(ValueExpr(trailing), ValueExpr(stuple(norm))));
  return RuleOutput{args[0], std::nullopt, std::move(em.out)};
}

inline RuleResult rule_pad(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort("pad", 0, Sort::Shape, sort_of(args[0]));
  if (args.size() != 3 && args.size() != 5) return bad_arity("pad", args.size(), "3 or 5");
  std::vector<NumExpr> p;
  for (size_t i = 1; i < args.size(); ++i) {
    const auto* n = num_arg(args, i);
    if (n == nullptr) return bad_sort("pad", i, Sort::Num, sort_of(args[i]));
    p.push_back(simplify_num(*n, c.ctx()));
  }
  Emitter em;
  NumExpr rk = rank_of(*t, c);
  if (args.size() == 3) {
    em.soft(ble(nconst(1), rk));
    NumExpr last = simplify_num(nadd(nadd(dim(*t, nsub(rk, nconst(1)), c), p[0]), p[1]), c.ctx());
    em.soft(ble(nconst(0), last));
    ShapeExpr result = simplify_shape(sconcat(sslice(*t, nconst(0), nsub(rk, nconst(1))), single(last)), c.ctx());
    return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
  }
  em.soft(ble(nconst(2), rk));
  NumExpr h = simplify_num(nadd(nadd(dim(*t, nsub(rk, nconst(2)), c), p[2]), p[3]), c.ctx());
  NumExpr w = simplify_num(nadd(nadd(dim(*t, nsub(rk, nconst(1)), c), p[0]), p[1]), c.ctx());
  em.soft(ble(nconst(0), h));
  em.soft(ble(nconst(0), w));
  ShapeExpr result = simplify_shape(
      sconcat(sslice(*t, nconst(0), nsub(rk, nconst(2))), stuple({h, w})), c.ctx());
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_spatial_resize4(const std::string& op, Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  const auto* h = num_arg(args, 1);
  const auto* w = num_arg(args, 2);
  if (t == nullptr) return bad_sort(op, 0, Sort::Shape, sort_of(args[0]));
  if (h == nullptr) return bad_sort(op, 1, Sort::Num, sort_of(args[1]));
  if (w == nullptr) return bad_sort(op, 2, Sort::Num, sort_of(args[2]));
  NumExpr oh = simplify_num(*h, c.ctx());
  NumExpr ow = simplify_num(*w, c.ctx());
  Emitter em;
  em.soft(beq(ValueExpr(rank_of(*t, c)), ValueExpr(nconst(4))));
  em.soft(blt(nconst(0), oh));
  em.soft(blt(nconst(0), ow));
  ShapeExpr result = stuple({dim(*t, 0, c), dim(*t, 1, c), oh, ow});
  return RuleOutput{ValueExpr(simplify_shape(result, c.ctx())), std::nullopt, std::move(em.out)};
}

// -- stubs for the modeled library surface --

inline RuleResult rule_dataset(Args args, const OpContext& c) {
  if (args.empty() || args.size() > 2) return bad_arity("dataset", args.size(), "1 or 2 (batch_size[, drop_last])");
  const auto* b = num_arg(args, 0);
  if (b == nullptr) return bad_sort("dataset", 0, Sort::Num, sort_of(args[0]));
  bool dropLast = false;
  if (args.size() == 2) {
    const auto* fl = std::get_if<BoolExpr>(&args[1]);
    if (fl == nullptr || as_const(*fl) == nullptr)
      return RuleError{RuleError::Code::NeedsConstant, "dataset: drop_last must be a boolean literal"};
    dropLast = *as_const(*fl);
  }
  std::string name = c.strArg;
  auto lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });

  std::optional<long long> length;
  std::optional<std::vector<long long>> item;
  if (c.datasets != nullptr) {
    auto it = c.datasets->find(name);
    if (it != c.datasets->end()) {
      length = it->second.length;
      item = it->second.itemShape;
    }
  }
  // built-in stubs for well-known datasets
  if (!length && !item) {
    if (lower.find("mnist") != std::string::npos) {
      length = 60000;
      item = std::vector<long long>{1, 28, 28};
    } else if (lower.find("cifar") != std::string::npos) {
      length = 50000;
      item = std::vector<long long>{3, 32, 32};
    }
  }

  Emitter em;
  EpochValue epoch;
  epoch.name = name;
  epoch.batchSize = simplify_num(*b, c.ctx());
  epoch.dropLast = dropLast;
  em.hard(blt(nconst(0), epoch.batchSize));
  if (length) {
    epoch.length = nconst(*length);
  } else {
    Sym n = c.fresh(Sort::Num, "dataset_len(" + name + ")");
    em.hard(ble(nconst(1), nsym(n)));
    epoch.length = nsym(n);
  }
  if (item) {
    std::vector<NumExpr> dims;
    for (long long d : *item) dims.push_back(nconst(d));
    epoch.itemShape = stuple(std::move(dims));
  } else {
    std::vector<NumExpr> dims;
    for (const char* nm : {"item_c", "item_h", "item_w"}) {
      Sym d = c.fresh(Sort::Num, std::string(nm) + "(" + name + ")");
      em.hard(blt(nconst(0), nsym(d)));
      dims.push_back(nsym(d));
    }
    epoch.itemShape = stuple(std::move(dims));
  }
  RuleOutput out;
  out.epoch = std::move(epoch);
  out.constraints = std::move(em.out);
  return out;
}

inline RuleResult rule_linear(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  const auto* in = num_arg(args, 1);
  const auto* out = num_arg(args, 2);
  if (t == nullptr) return bad_sort("linear", 0, Sort::Shape, sort_of(args[0]));
  if (in == nullptr) return bad_sort("linear", 1, Sort::Num, sort_of(args[1]));
  if (out == nullptr) return bad_sort("linear", 2, Sort::Num, sort_of(args[2]));
  Emitter em;
  NumExpr rk = rank_of(*t, c);
  em.soft(ble(nconst(1), rk));
  em.soft(beq(ValueExpr(dim(*t, nsub(rk, nconst(1)), c)), ValueExpr(simplify_num(*in, c.ctx()))));
  ShapeExpr result = simplify_shape(
      sconcat(sslice(*t, nconst(0), nsub(rk, nconst(1))), single(simplify_num(*out, c.ctx()))), c.ctx());
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_ones(Args args, const OpContext& c) {
  std::vector<NumExpr> dims;
  Emitter em;
  for (size_t i = 0; i < args.size(); ++i) {
    const auto* d = num_arg(args, i);
    if (d == nullptr) return bad_sort("ones", i, Sort::Num, sort_of(args[i]));
    NumExpr ds = simplify_num(*d, c.ctx());
    em.soft(ble(nconst(0), ds));
    dims.push_back(ds);
  }
  return RuleOutput{ValueExpr(stuple(dims)), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_convert_monochrome(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort("convert_monochrome", 0, Sort::Shape, sort_of(args[0]));
  Emitter em;
  em.soft(beq(ValueExpr(rank_of(*t, c)), ValueExpr(nconst(3))));
  ShapeExpr result = stuple({nconst(1), dim(*t, 1, c), dim(*t, 2, c)});
  return RuleOutput{ValueExpr(simplify_shape(result, c.ctx())), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_resize(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  const auto* h = num_arg(args, 1);
  const auto* w = num_arg(args, 2);
  if (t == nullptr) return bad_sort("resize", 0, Sort::Shape, sort_of(args[0]));
  if (h == nullptr) return bad_sort("resize", 1, Sort::Num, sort_of(args[1]));
  if (w == nullptr) return bad_sort("resize", 2, Sort::Num, sort_of(args[2]));
  NumExpr oh = simplify_num(*h, c.ctx());
  NumExpr ow = simplify_num(*w, c.ctx());
  Emitter em;
  em.soft(beq(ValueExpr(rank_of(*t, c)), ValueExpr(nconst(3))));
  em.soft(blt(nconst(0), oh));
  em.soft(blt(nconst(0), ow));
  ShapeExpr result = stuple({dim(*t, 0, c), oh, ow});
  return RuleOutput{ValueExpr(simplify_shape(result, c.ctx())), std::nullopt, std::move(em.out)};
}

// -- tensor indexing / accessors --

inline RuleResult rule_index(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  const auto* i = num_arg(args, 1);
  if (t == nullptr) return bad_sort("index", 0, Sort::Shape, sort_of(args[0]));
  if (i == nullptr) return bad_sort("index", 1, Sort::Num, sort_of(args[1]));
  NumExpr idx = simplify_num(*i, c.ctx());
  Emitter em;
  em.soft(ble(nconst(1), rank_of(*t, c)));
  em.soft(band(ble(nconst(0), idx), blt(idx, dim(*t, 0, c))));
  ShapeExpr result = seg(*t, nconst(1), nrank(*t), c);
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_slice(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  const auto* lo = num_arg(args, 1);
  const auto* hi = num_arg(args, 2);
  if (t == nullptr) return bad_sort("slice", 0, Sort::Shape, sort_of(args[0]));
  if (lo == nullptr) return bad_sort("slice", 1, Sort::Num, sort_of(args[1]));
  if (hi == nullptr) return bad_sort("slice", 2, Sort::Num, sort_of(args[2]));
  NumExpr l = simplify_num(*lo, c.ctx());
  NumExpr h = simplify_num(*hi, c.ctx());
  Emitter em;
  em.soft(ble(nconst(1), rank_of(*t, c)));
  em.soft(band(band(ble(nconst(0), l), ble(l, h)), ble(h, dim(*t, 0, c))));
  ShapeExpr result = simplify_shape(
      sconcat(single(nsub(h, l)), sslice(*t, nconst(1), nrank(*t))), c.ctx());
  return RuleOutput{ValueExpr(result), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_mask_select(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  const auto* m = shape_arg(args, 1);
  if (t == nullptr) return bad_sort("mask_select", 0, Sort::Shape, sort_of(args[0]));
  if (m == nullptr) return bad_sort("mask_select", 1, Sort::Shape, sort_of(args[1]));
  Emitter em;
  em.soft(beq(ValueExpr(*t), ValueExpr(*m)));
  // The result length depends on the mask's values, which are not tracked:
  // a fresh nonnegative symbol stands in for it.
  Sym len = c.fresh(Sort::Num, "masked_len");
  em.hard(ble(nconst(0), nsym(len)));
  return RuleOutput{ValueExpr(stuple({nsym(len)})), std::nullopt, std::move(em.out)};
}

inline RuleResult rule_dim(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  const auto* i = num_arg(args, 1);
  if (t == nullptr) return bad_sort("dim", 0, Sort::Shape, sort_of(args[0]));
  if (i == nullptr) return bad_sort("dim", 1, Sort::Num, sort_of(args[1]));
  return RuleOutput{ValueExpr(dim(*t, simplify_num(*i, c.ctx()), c)), std::nullopt, {}};
}

inline RuleResult rule_shapeof(Args args, const OpContext&) {
  if (std::get_if<ShapeExpr>(&args[0]) == nullptr)
    return bad_sort("shapeof", 0, Sort::Shape, sort_of(args[0]));
  return RuleOutput{args[0], std::nullopt, {}};
}

inline RuleResult rule_rank(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort("rank", 0, Sort::Shape, sort_of(args[0]));
  return RuleOutput{ValueExpr(rank_of(*t, c)), std::nullopt, {}};
}

inline RuleResult rule_numel(Args args, const OpContext& c) {
  const auto* t = shape_arg(args, 0);
  if (t == nullptr) return bad_sort("numel", 0, Sort::Shape, sort_of(args[0]));
  return RuleOutput{ValueExpr(simplify_num(nprod(*t), c.ctx())), std::nullopt, {}};
}

}  // namespace oprules

inline OpCatalog::OpCatalog() {
  using namespace oprules;
  auto add = [this](std::string name, std::string args, std::string result, std::string constraints,
                    bool extrapolated, auto fn, int minArity, int maxArity) {
    OpRule r;
    r.name = name;
    r.args = std::move(args);
    r.result = std::move(result);
    r.constraints = std::move(constraints);
    r.extrapolated = extrapolated;
    r.apply = [name, fn, minArity, maxArity](Args a, const OpContext& c) -> RuleResult {
      int n = static_cast<int>(a.size());
      if (n < minArity || (maxArity >= 0 && n > maxArity)) {
        std::string want = maxArity < 0 ? ("at least " + std::to_string(minArity))
                           : minArity == maxArity
                               ? std::to_string(minArity)
                               : (std::to_string(minArity) + " to " + std::to_string(maxArity));
        return bad_arity(name, a.size(), want);
      }
      return fn(a, c);
    };
    rules_.emplace(std::move(name), std::move(r));
  };

  add("mm", "t1: shape, t2: shape", "(t1[0], t2[1])", "soft rank(t1)=2, rank(t2)=2, t1[1]=t2[0]", false, rule_mm, 2, 2);
  add("reshape", "t: shape, dims: number... (one may be -1)", "(dims) with -1 inferred",
      "soft 0<dim each, prod(t)=prod(result); -1: prod(t) % rest = 0", false,
      [](Args a, const OpContext& c) { return rule_reshape_like("reshape", a, c); }, 2, -1);
  add("view", "t: shape, dims: number...", "alias of reshape", "same as reshape", false,
      [](Args a, const OpContext& c) { return rule_reshape_like("view", a, c); }, 2, -1);
  add("transpose", "t: shape, d0: number, d1: number", "t with axes d0,d1 swapped",
      "soft 0<=d0<d1<rank(t)", false, rule_transpose, 3, 3);
  add("readImage", "[path]", "(c, h, w) fresh", "hard 1<=c<=4, 0<h, 0<w", false, rule_read_image, 0, 0);
  add("randint", "lo: number, hi: number", "fresh n", "hard lo<=n<=hi", false, rule_rand_int, 2, 2);
  add("broadcast", "t1: shape, t2: shape", "right-aligned broadcast",
      "soft x=y per aligned non-1 pair; needs static ranks", false, rule_broadcast, 2, 2);
  add("nll_loss", "output: shape, target: shape", "()",
      "soft rank(output)>=2, output-without-dim-1 = target", false, rule_nll_loss, 2, 2);
  add("cross_entropy", "output: shape, target: shape", "()", "same as nll_loss", false, rule_nll_loss, 2, 2);
  add("conv2d", "t, in_ch, out_ch, kernel[, stride[, pad[, dilation]]]",
      "(t[0], out_ch, H', W') floor arithmetic", "soft rank(t)=4, t[1]=in_ch, H'>=1, W'>=1", true,
      [](Args a, const OpContext& c) { return conv_output("conv2d", a, c, false); }, 4, 7);
  add("conv_transpose2d", "t, in_ch, out_ch, kernel[, stride[, pad[, dilation]]]",
      "(t[0], out_ch, H', W') transposed arithmetic", "soft rank(t)=4, t[1]=in_ch, H'>=1, W'>=1", true,
      [](Args a, const OpContext& c) { return conv_output("conv_transpose2d", a, c, true); }, 4, 7);
  add("cat", "tensors: shape..., dim: number", "first shape with dim summed",
      "soft equal ranks, equal dims off-axis, 0<=dim<rank", false, rule_cat, 2, -1);
  add("identity", "v", "v", "none", false, rule_identity, 1, 1);
  add("scalar", "[n: number]", "()", "none", false, rule_scalar, 0, 1);
  add("isSameShape", "t1: shape, t2: shape", "boolean t1=t2", "none", false, rule_is_same_shape, 2, 2);
  add("matmul", "t1: shape, t2: shape", "broadcasted batched matrix product",
      "soft inner dims equal, batch dims broadcast; needs static ranks", false, rule_matmul, 2, 2);
  add("bmm", "t1: shape, t2: shape", "(b, n, p)",
      "soft rank=3 both, t1[0]=t2[0], t1[2]=t2[1]", false, rule_bmm, 2, 2);
  add("item", "t: shape", "fresh n", "soft prod(t)=1", false, rule_item, 1, 1);
  add("repeat", "t: shape, reps: number...", "right-aligned repeat", "soft rank(t)<=len(reps)", true,
      rule_repeat, 2, -1);
  add("expand", "t: shape, sizes: number... (-1 keeps)", "expanded shape",
      "soft rank(t)<=len(sizes); non-1 dims must match", true, rule_expand, 2, -1);
  add("expand_as", "t: shape, other: shape", "other",
      "soft rank(t)<=rank(other); non-1 dims must match", true, rule_expand_as, 2, 2);
  add("reduce", "t: shape[, dim: number]", "() or t without dim", "soft 0<=dim<rank(t)", false, rule_reduce, 1, 2);
  add("topk", "t: shape, k: number[, dim: number]", "t with dim replaced by k",
      "soft 0<k<=t[dim], 0<=dim<rank", true, rule_topk, 2, 3);
  add("pool2d", "t, kernel[, stride[, pad]]", "(t[0], t[1], H', W') floor arithmetic",
      "soft rank(t)=4, H'>=1, W'>=1", true, rule_pool2d, 2, 4);
  add("batchnorm2d", "t: shape, features: number", "t", "soft rank(t)=4, t[1]=features", false,
      rule_batchnorm2d, 2, 2);
  add("stack", "tensors: shape..., dim: number", "shapes stacked on a new axis",
      "soft all shapes equal, 0<=dim<=rank", false, rule_stack, 2, -1);
  add("unsqueeze", "t: shape, dim: number", "t with 1 inserted", "soft 0<=dim<=rank(t)", false,
      rule_unsqueeze, 2, 2);
  add("squeeze", "t: shape[, dim: number]", "t without 1-dims",
      "soft 0<=dim<rank(t); needs static dim values", false, rule_squeeze, 1, 2);
  add("diag", "t: shape[, offset: number]", "diagonal (rank 2) or square matrix (rank 1)",
      "soft -t[0]<=offset<=t[0] for matrices", false, rule_diag, 1, 2);
  add("flatten", "t: shape[, start[, end]]", "dims in [start,end] collapsed",
      "soft 0<=start<=end<rank(t)", false, rule_flatten, 1, 3);
  add("narrow", "t, dim, start, length", "t with dim narrowed to length",
      "soft 0<=dim<rank, 0<=start, start+length<=t[dim], 0<=length", false, rule_narrow, 4, 4);
  add("pixel_shuffle", "t: shape, r: number", "(t[0], t[1]/r^2, t[2]*r, t[3]*r)",
      "soft rank(t)=4, 0<r, t[1]%r^2=0", true, rule_pixel_shuffle, 2, 2);
  add("layer_norm", "t: shape, norm: number...", "t",
      "soft trailing dims of t equal (norm...)", true, rule_layer_norm, 2, -1);
  add("pad", "t, left, right[, top, bottom]", "t with last (two) dims padded",
      "soft rank bound, padded dims >= 0", true, rule_pad, 3, 5);
  add("adaptive", "t: shape, out_h, out_w", "(t[0], t[1], out_h, out_w)",
      "soft rank(t)=4, 0<out_h, 0<out_w", true,
      [](Args a, const OpContext& c) { return rule_spatial_resize4("adaptive", a, c); }, 3, 3);
  add("interpolate", "t: shape, out_h, out_w", "(t[0], t[1], out_h, out_w)",
      "soft rank(t)=4, 0<out_h, 0<out_w", true,
      [](Args a, const OpContext& c) { return rule_spatial_resize4("interpolate", a, c); }, 3, 3);
  add("dataset", "path, batch_size: number[, drop_last: bool literal]", "epoch object",
      "hard 0<batch; hard 1<=N when length unknown", false, rule_dataset, 1, 2);
  add("linear", "t: shape, in: number, out: number", "t with last dim replaced by out",
      "soft rank(t)>=1, t[rank-1]=in", false, rule_linear, 3, 3);
  add("relu", "t", "t", "none", false, rule_identity, 1, 1);
  add("ones", "dims: number...", "(dims)", "soft 0<=dim each", false, rule_ones, 0, -1);
  add("convert_monochrome", "t: shape", "(1, t[1], t[2])", "soft rank(t)=3", false,
      rule_convert_monochrome, 1, 1);
  add("resize", "t: shape, h: number, w: number", "(t[0], h, w)", "soft rank(t)=3, 0<h, 0<w", false,
      rule_resize, 3, 3);
  add("index", "t: shape, i: number", "t[1:rank]", "soft rank(t)>=1, 0<=i<t[0]", false, rule_index, 2, 2);
  add("slice", "t: shape, lo: number, hi: number", "(hi-lo) @ t[1:rank]",
      "soft rank(t)>=1, 0<=lo<=hi<=t[0]", true, rule_slice, 3, 3);
  add("mask_select", "t: shape, mask: shape", "(fresh n)", "soft t=mask; hard 0<=n", false,
      rule_mask_select, 2, 2);
  add("dim", "t: shape, i: number", "number t[i]", "none", false, rule_dim, 2, 2);
  add("shapeof", "t: shape", "t", "none", false, rule_shapeof, 1, 1);
  add("rank", "t: shape", "number rank(t)", "none", false, rule_rank, 1, 1);
  add("numel", "t: shape", "number prod(t)", "none", false, rule_numel, 1, 1);
}

}  // namespace shapecheck
