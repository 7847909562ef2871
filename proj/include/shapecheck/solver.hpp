#pragma once

// Offline constraint check: decides each path's verdict from its constraint
// set. The procedure is interval narrowing plus bounded enumeration with
// case-splitting over disjunctions; sat answers carry a model that is
// re-verified by ground evaluation, unsat answers require fully enumerated
// finite domains (or an interval contradiction), anything else degrades to
// unknown.

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "shapecheck/constraint.hpp"
#include "shapecheck/expr_ops.hpp"
#include "shapecheck/simplify.hpp"

namespace shapecheck {

struct SolverBudget {
  long long timeMs = 10000;
  long long tuples = 1000000;
  long long forallSpan = 1000;
  long long window = 4096;  // enumeration clamp for unbounded symbols
};

// ---- elaboration: shape sorts reduced to integer form ----

struct ElabConstraint {
  Formula formula;  // simplified under the final hard-interval context
  size_t srcIndex;  // index into the original ConstraintSet
};

struct Elaboration {
  bool ok = true;
  std::string failReason;
  std::vector<ElabConstraint> hard;
  std::vector<ElabConstraint> soft;
  IntervalCtx ctx;
  std::set<Sym> allSyms;  // free symbols of the original constraints
};

namespace solverdetail {

// After simplification the only shape expressions the solver accepts are
// constant-rank tuples reachABLE through Index nodes; anything still carrying
// a shape symbol or an unresolved rank cannot be reduced to integer atoms.
inline bool int_reducible(const ShapeExpr& s);
inline bool int_reducible(const NumExpr& e);
inline bool int_reducible(const BoolExpr& e);

inline bool int_reducible(const ShapeExpr& s) {
  const auto& n = s.node().v;
  if (const auto* t = std::get_if<ShapeTuple>(&n)) {
    for (const auto& d : t->dims)
      if (!int_reducible(d)) return false;
    return true;
  }
  return false;  // symbols, slices, concats: rank not determined
}

inline bool int_reducible(const NumExpr& e) {
  const auto& n = e.node().v;
  if (std::holds_alternative<NumConst>(n) || std::holds_alternative<NumSym>(n)) return true;
  if (const auto* b = std::get_if<NumBin>(&n)) return int_reducible(b->lhs) && int_reducible(b->rhs);
  if (const auto* r = std::get_if<NumRank>(&n)) return int_reducible(r->arg);
  if (const auto* i = std::get_if<NumIndexOf>(&n)) return int_reducible(i->shape) && int_reducible(i->index);
  if (const auto* p = std::get_if<NumProd>(&n)) return int_reducible(p->arg);
  return false;
}

inline bool int_reducible(const BoolExpr& e) {
  const auto& n = e.node().v;
  if (std::holds_alternative<BoolConst>(n) || std::holds_alternative<BoolSym>(n)) return true;
  if (const auto* a = std::get_if<BoolAnd>(&n)) return int_reducible(a->lhs) && int_reducible(a->rhs);
  if (const auto* o = std::get_if<BoolOr>(&n)) return int_reducible(o->lhs) && int_reducible(o->rhs);
  if (const auto* nn = std::get_if<BoolNot>(&n)) return int_reducible(nn->arg);
  if (const auto* q = std::get_if<BoolEq>(&n)) {
    if (sort_of(q->lhs) == Sort::Num)
      return int_reducible(std::get<NumExpr>(q->lhs)) && int_reducible(std::get<NumExpr>(q->rhs));
    if (sort_of(q->lhs) == Sort::Bool)
      return int_reducible(std::get<BoolExpr>(q->lhs)) && int_reducible(std::get<BoolExpr>(q->rhs));
    return false;  // unresolved shape equality
  }
  const auto& l = std::get<BoolLt>(n);
  return int_reducible(l.lhs) && int_reducible(l.rhs);
}

inline bool int_reducible(const Formula& f) {
  const auto& n = f.node().v;
  if (const auto* a = std::get_if<FAtom>(&n)) return int_reducible(a->expr);
  if (const auto* an = std::get_if<FAnd>(&n)) return int_reducible(an->lhs) && int_reducible(an->rhs);
  if (const auto* o = std::get_if<FOr>(&n)) return int_reducible(o->lhs) && int_reducible(o->rhs);
  if (const auto* nn = std::get_if<FNot>(&n)) return int_reducible(nn->arg);
  const auto& q = std::get<FForall>(n);
  return int_reducible(q.lo) && int_reducible(q.hi) && int_reducible(q.body);
}

}  // namespace solverdetail

inline Elaboration elaborate(const ConstraintSet& cs) {
  Elaboration out;
  out.ctx = propagate(cs);
  for (size_t i = 0; i < cs.all().size(); ++i) {
    const Constraint& c = cs.all()[i];
    Formula base = c.reduced.valid() ? c.reduced : c.formula;
    for (Sym s : free_symbols(base)) out.allSyms.insert(s);
    // Hard constraints must not be folded against the interval context they
    // themselves induced, or the query would lose its bounds. Softs may use
    // it: the context over-approximates every assignment satisfying H.
    Formula f = c.kind == ConstraintKind::Hard ? simplify_formula(base, {})
                                               : simplify_formula(base, out.ctx);
    if (!solverdetail::int_reducible(f)) {
      out.ok = false;
      out.failReason = "unresolved-rank: " + to_sexpr(f);
      return out;
    }
    ElabConstraint ec{f, i};
    if (c.kind == ConstraintKind::Hard) out.hard.push_back(std::move(ec));
    else out.soft.push_back(std::move(ec));
  }
  return out;
}

// ---- satisfiability ----

enum class SatStatus { Sat, Unsat, Unknown };

struct SatResult {
  SatStatus status = SatStatus::Unknown;
  Assignment model;
  std::string reason;
};

namespace solverdetail {

struct Lit {
  BoolExpr expr;
  bool positive = true;
};

struct Budget {
  std::chrono::steady_clock::time_point deadline;
  long long tuplesLeft = 0;
  bool exhausted = false;

  bool spend(long long n = 1) {
    tuplesLeft -= n;
    if (tuplesLeft < 0) {
      exhausted = true;
      return false;
    }
    if ((tuplesLeft & 1023) == 0 && std::chrono::steady_clock::now() > deadline) {
      exhausted = true;
      return false;
    }
    return true;
  }
};

struct Task {
  std::vector<std::pair<Formula, bool>> pending;
  std::vector<Lit> lits;
};

inline bool lit_holds(const Lit& l, const Assignment& a) {
  try {
    return eval_bool(l.expr, a) == l.positive;
  } catch (const EvalError&) {
    return false;  // faulting assignments do not satisfy a constraint
  }
}

struct ConjunctionSolver {
  const std::vector<Lit>& lits;
  const std::set<Sym>& allFreeSyms;
  Budget& budget;
  const SolverBudget& cfg;

  std::optional<Assignment> solve(bool& unknown) {
    unknown = false;
    // Forced boolean literals; conflicting polarities are a contradiction.
    Assignment forced;
    std::vector<const Lit*> intLits;
    for (const auto& l : lits) {
      if (const auto* s = std::get_if<BoolSym>(&l.expr.node().v)) {
        auto it = forced.find(s->sym.id);
        if (it != forced.end() && std::get<bool>(it->second) != l.positive) return std::nullopt;
        forced[s->sym.id] = l.positive;
        continue;
      }
      if (const auto* c = std::get_if<BoolConst>(&l.expr.node().v)) {
        if (c->value != l.positive) return std::nullopt;
        continue;
      }
      intLits.push_back(&l);
    }
    // Interval narrowing to a fixpoint.
    detail::NarrowState st;
    for (int iter = 0; iter < 100; ++iter) {
      st.changed = false;
      for (const auto* l : intLits) {
        detail::narrow_atom(l->expr, l->positive, st);
        if (st.contradiction) return std::nullopt;
      }
      if (!st.changed) break;
    }
    // Enumeration variables: integer symbols mentioned by the literals.
    std::set<Sym> vars;
    for (const auto* l : intLits)
      for (Sym s : free_symbols(l->expr))
        if (s.sort == Sort::Num) vars.insert(s);
    std::vector<Sym> order(vars.begin(), vars.end());
    std::vector<Interval> domains;
    bool clamped = false;
    for (Sym s : order) {
      Interval iv = Interval::top();
      auto it = st.ctx.find(s.id);
      if (it != st.ctx.end()) iv = it->second;
      if (!iv.boundedBelow()) {
        iv.lo = -cfg.window;
        clamped = true;
      }
      if (!iv.boundedAbove()) {
        iv.hi = cfg.window;
        clamped = true;
      }
      if (iv.lo > iv.hi) return std::nullopt;
      domains.push_back(iv);
    }
    Assignment model = forced;
    bool complete = true;
    bool found = dfs(0, order, domains, intLits, model, complete);
    if (found) {
      // Total model: unconstrained symbols default to 0 (or their bound).
      for (Sym s : allFreeSyms) {
        if (model.count(s.id)) continue;
        if (s.sort == Sort::Bool) {
          model[s.id] = false;
        } else {
          Interval iv = Interval::top();
          auto it = st.ctx.find(s.id);
          if (it != st.ctx.end()) iv = it->second;
          long long v = iv.contains(0) ? 0 : (iv.boundedBelow() ? iv.lo : iv.hi);
          model[s.id] = v;
        }
      }
      return model;
    }
    if (!complete || clamped || budget.exhausted) unknown = true;
    return std::nullopt;
  }

  bool dfs(size_t level, const std::vector<Sym>& order, const std::vector<Interval>& domains,
           const std::vector<const Lit*>& intLits, Assignment& model, bool& complete) {
    if (level == order.size()) {
      if (!budget.spend()) {
        complete = false;
        return false;
      }
      for (const auto* l : intLits)
        if (!lit_holds(*l, model)) return false;
      return true;
    }
    const Interval& d = domains[level];
    for (long long v = d.lo; v <= d.hi; ++v) {
      if (budget.exhausted) {
        complete = false;
        return false;
      }
      model[order[level].id] = v;
      if (!budget.spend()) {
        complete = false;
        return false;
      }
      // Cheap forward check: with this prefix fixed, re-narrow remaining.
      if (level + 1 < order.size()) {
        detail::NarrowState probe;
        for (size_t i = 0; i <= level; ++i)
          probe.ctx[order[i].id] = Interval::point(std::get<long long>(model[order[i].id]));
        bool dead = false;
        for (const auto* l : intLits) {
          detail::narrow_atom(l->expr, l->positive, probe);
          if (probe.contradiction) {
            dead = true;
            break;
          }
        }
        if (dead) continue;
      }
      if (dfs(level + 1, order, domains, intLits, model, complete)) return true;
      if (!complete) return false;
    }
    model.erase(order[level].id);
    return false;
  }
};

inline bool model_less(const Assignment& a, const Assignment& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first != ib->first) return ia->first < ib->first;
    const auto* va = std::get_if<long long>(&ia->second);
    const auto* vb = std::get_if<long long>(&ib->second);
    if (va != nullptr && vb != nullptr && *va != *vb) return *va < *vb;
    if (ia->second != ib->second) return ia->second < b.at(ib->first);
    ++ia;
    ++ib;
  }
  return false;
}

}  // namespace solverdetail

/// Satisfiability of a conjunction of formulas.
inline SatResult check_sat(const std::vector<Formula>& conjuncts, const SolverBudget& cfg = {}) {
  using namespace solverdetail;
  SatResult out;
  Budget budget;
  budget.deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(cfg.timeMs);
  budget.tuplesLeft = cfg.tuples;

  std::set<Sym> freeSyms;
  for (const auto& f : conjuncts)
    for (Sym s : free_symbols(f)) freeSyms.insert(s);

  std::vector<Task> stack;
  Task root;
  for (auto it = conjuncts.rbegin(); it != conjuncts.rend(); ++it) root.pending.push_back({*it, true});
  stack.push_back(std::move(root));

  bool anyUnknown = false;
  std::optional<Assignment> best;

  auto pushBool = [](Task& t, const BoolExpr& e, bool pos) { t.pending.push_back({fatom(e), pos}); };

  while (!stack.empty()) {
    if (!budget.spend()) {
      anyUnknown = true;
      break;
    }
    Task task = std::move(stack.back());
    stack.pop_back();
    bool dropped = false;
    while (!task.pending.empty()) {
      auto [f, pos] = task.pending.back();
      task.pending.pop_back();
      const auto& n = f.node().v;
      if (const auto* an = std::get_if<FAnd>(&n)) {
        if (pos) {
          task.pending.push_back({an->lhs, true});
          task.pending.push_back({an->rhs, true});
        } else {
          Task other = task;
          other.pending.push_back({an->rhs, false});
          stack.push_back(std::move(other));
          task.pending.push_back({an->lhs, false});
        }
        continue;
      }
      if (const auto* o = std::get_if<FOr>(&n)) {
        if (pos) {
          Task other = task;
          other.pending.push_back({o->rhs, true});
          stack.push_back(std::move(other));
          task.pending.push_back({o->lhs, true});
        } else {
          task.pending.push_back({o->lhs, false});
          task.pending.push_back({o->rhs, false});
        }
        continue;
      }
      if (const auto* nn = std::get_if<FNot>(&n)) {
        task.pending.push_back({nn->arg, !pos});
        continue;
      }
      if (const auto* q = std::get_if<FForall>(&n)) {
        const long long* lo = as_const(q->lo);
        const long long* hi = as_const(q->hi);
        if (lo == nullptr || hi == nullptr || *hi - *lo + 1 > cfg.forallSpan) {
          anyUnknown = true;
          dropped = true;
          break;
        }
        if (pos) {
          for (long long k = *lo; k <= *hi; ++k)
            task.pending.push_back({substitute(q->body, Binding{{q->binder.id, ValueExpr(nconst(k))}}), true});
        } else {
          // exists a violating instance: one branch per instantiation
          bool first = true;
          for (long long k = *lo; k <= *hi; ++k) {
            Formula inst = substitute(q->body, Binding{{q->binder.id, ValueExpr(nconst(k))}});
            if (first) {
              task.pending.push_back({inst, false});
              first = false;
            } else {
              Task other = task;
              other.pending.push_back({inst, false});
              stack.push_back(std::move(other));
            }
          }
          if (first) {
            // empty range: not-forall over nothing is false
            task.lits.push_back({bfalse(), true});
          }
        }
        continue;
      }
      // atom
      const BoolExpr& e = std::get<FAtom>(n).expr;
      const auto& en = e.node().v;
      if (const auto* a2 = std::get_if<BoolAnd>(&en)) {
        if (pos) {
          pushBool(task, a2->lhs, true);
          pushBool(task, a2->rhs, true);
        } else {
          Task other = task;
          pushBool(other, a2->rhs, false);
          stack.push_back(std::move(other));
          pushBool(task, a2->lhs, false);
        }
        continue;
      }
      if (const auto* o2 = std::get_if<BoolOr>(&en)) {
        if (pos) {
          Task other = task;
          pushBool(other, o2->rhs, true);
          stack.push_back(std::move(other));
          pushBool(task, o2->lhs, true);
        } else {
          pushBool(task, o2->lhs, false);
          pushBool(task, o2->rhs, false);
        }
        continue;
      }
      if (const auto* n2 = std::get_if<BoolNot>(&en)) {
        pushBool(task, n2->arg, !pos);
        continue;
      }
      if (const auto* q2 = std::get_if<BoolEq>(&en)) {
        if (sort_of(q2->lhs) == Sort::Bool) {
          const auto& bl = std::get<BoolExpr>(q2->lhs);
          const auto& br = std::get<BoolExpr>(q2->rhs);
          // iff: (l&r) | (!l&!r); negated: (l&!r) | (!l&r)
          Task other = task;
          pushBool(other, bl, false);
          pushBool(other, br, !pos);
          stack.push_back(std::move(other));
          pushBool(task, bl, true);
          pushBool(task, br, pos);
          continue;
        }
        if (!pos && sort_of(q2->lhs) == Sort::Num) {
          // a != b  ->  a < b  |  b < a
          const auto& a2 = std::get<NumExpr>(q2->lhs);
          const auto& b2 = std::get<NumExpr>(q2->rhs);
          Task other = task;
          other.lits.push_back({blt(b2, a2), true});
          stack.push_back(std::move(other));
          task.lits.push_back({blt(a2, b2), true});
          continue;
        }
        task.lits.push_back({e, pos});
        continue;
      }
      task.lits.push_back({e, pos});
    }
    if (dropped) continue;
    if (!task.pending.empty()) continue;

    ConjunctionSolver solver{task.lits, freeSyms, budget, cfg};
    bool unknown = false;
    auto model = solver.solve(unknown);
    if (model) {
      if (!best || model_less(*model, *best)) best = model;
    } else if (unknown) {
      anyUnknown = true;
    }
    if (budget.exhausted) {
      anyUnknown = true;
      break;
    }
  }

  if (best) {
    out.status = SatStatus::Sat;
    out.model = *best;
    return out;
  }
  if (anyUnknown) {
    out.status = SatStatus::Unknown;
    out.reason = budget.exhausted ? "solver budget exhausted" : "outside the decision fragment";
    return out;
  }
  out.status = SatStatus::Unsat;
  return out;
}

// ---- Algorithm-level path analysis ----

struct PathVerdict {
  enum class Kind { Valid, Invalid, Unreachable, DontKnow };
  Kind kind = Kind::DontKnow;
  Assignment model;                          // Invalid: counterexample
  std::optional<Constraint> firstViolation;  // Invalid: minimal genIndex soft false under model
  std::string reason;                        // DontKnow
};

inline const char* verdict_name(PathVerdict::Kind k) {
  switch (k) {
    case PathVerdict::Kind::Valid: return "valid";
    case PathVerdict::Kind::Invalid: return "invalid";
    case PathVerdict::Kind::Unreachable: return "unreachable";
    case PathVerdict::Kind::DontKnow: return "dontknow";
  }
  return "?";
}

/// Offline check of one path's constraints: unreachable when the hard set is
/// unsatisfiable, valid when no counterexample to the softs exists, invalid
/// with a model and first-violation attribution otherwise.
inline PathVerdict analyze_path(const ConstraintSet& cs, const SolverBudget& cfg = {}) {
  PathVerdict out;
  Elaboration elab = elaborate(cs);
  if (!elab.ok) {
    out.kind = PathVerdict::Kind::DontKnow;
    out.reason = elab.failReason;
    return out;
  }
  std::vector<Formula> hard;
  for (const auto& h : elab.hard) hard.push_back(h.formula);

  SatResult rh = check_sat(hard, cfg);
  if (rh.status == SatStatus::Unsat) {
    out.kind = PathVerdict::Kind::Unreachable;
    return out;
  }
  if (elab.soft.empty()) {
    out.kind = PathVerdict::Kind::Valid;
    return out;
  }
  Formula softConj = elab.soft[0].formula;
  for (size_t i = 1; i < elab.soft.size(); ++i) softConj = fand(softConj, elab.soft[i].formula);
  std::vector<Formula> query = hard;
  query.push_back(fnot(softConj));

  SatResult rq = check_sat(query, cfg);
  if (rq.status == SatStatus::Unsat) {
    out.kind = PathVerdict::Kind::Valid;
    return out;
  }
  if (rq.status == SatStatus::Unknown) {
    out.kind = PathVerdict::Kind::DontKnow;
    out.reason = rq.reason;
    return out;
  }
  out.kind = PathVerdict::Kind::Invalid;
  out.model = rq.model;
  // Totalize over every symbol of the original set: symbols whose
  // constraints folded away are pinned by the interval context.
  for (Sym s : elab.allSyms) {
    if (out.model.count(s.id)) continue;
    if (s.sort == Sort::Bool) {
      out.model[s.id] = false;
      continue;
    }
    if (s.sort == Sort::Shape) continue;  // cannot occur: elaboration rejected it
    Interval iv = Interval::top();
    auto it = elab.ctx.find(s.id);
    if (it != elab.ctx.end()) iv = it->second;
    out.model[s.id] = iv.contains(0) ? 0 : (iv.boundedBelow() ? iv.lo : iv.hi);
  }
  // Model validity self-check: the counterexample must satisfy every hard
  // constraint and falsify at least one soft.
  bool anyFalse = false;
  for (const auto& h : elab.hard) {
    try {
      if (!eval_formula(h.formula, rq.model)) {
        out.kind = PathVerdict::Kind::DontKnow;
        out.reason = "internal: model violates hard constraints";
        return out;
      }
    } catch (const EvalError&) {
      out.kind = PathVerdict::Kind::DontKnow;
      out.reason = "internal: model does not evaluate";
      return out;
    }
  }
  for (const auto& s : elab.soft) {
    bool holds = true;
    try {
      holds = eval_formula(s.formula, rq.model);
    } catch (const EvalError&) {
      continue;  // cannot claim this one violated
    }
    if (!holds) {
      anyFalse = true;
      out.firstViolation = cs.all()[s.srcIndex];
      break;  // softs are in genIndex order: first false is minimal
    }
  }
  if (!anyFalse) {
    out.kind = PathVerdict::Kind::DontKnow;
    out.reason = "internal: model falsifies no soft constraint";
  }
  return out;
}

// ---- program-level summary ----

enum class ProgramVerdict { NoError, ShapeError, Inconclusive };

inline const char* program_verdict_name(ProgramVerdict v) {
  switch (v) {
    case ProgramVerdict::NoError: return "no-error";
    case ProgramVerdict::ShapeError: return "shape-error";
    case ProgramVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

/// No-error iff every path is valid or unreachable.
inline ProgramVerdict summarize(const std::vector<PathVerdict>& verdicts) {
  bool anyInvalid = false;
  bool anyDontKnow = false;
  for (const auto& v : verdicts) {
    if (v.kind == PathVerdict::Kind::Invalid) anyInvalid = true;
    if (v.kind == PathVerdict::Kind::DontKnow) anyDontKnow = true;
  }
  if (anyInvalid) return ProgramVerdict::ShapeError;
  if (anyDontKnow) return ProgramVerdict::Inconclusive;
  return ProgramVerdict::NoError;
}

}  // namespace shapecheck
