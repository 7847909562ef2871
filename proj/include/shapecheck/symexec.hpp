#pragma once

// Path-sensitive symbolic evaluation of the IR. Evaluation produces one
// (value, state) pair per surviving execution path; branch conditions become
// hard constraints, tensor ops emit their rule constraints through the
// online check, counted loops unroll, and dataset loops are analyzed for the
// regular and the residual minibatch case.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "shapecheck/constraint.hpp"
#include "shapecheck/expr_ops.hpp"
#include "shapecheck/ir.hpp"
#include "shapecheck/shapeops.hpp"
#include "shapecheck/simplify.hpp"

namespace shapecheck {

using RuntimeValue = std::variant<ValueExpr, EpochValue>;

inline bool runtime_value_eq(const RuntimeValue& a, const RuntimeValue& b) {
  if (a.index() != b.index()) return false;
  if (const auto* v = std::get_if<ValueExpr>(&a)) return expr_eq(*v, std::get<ValueExpr>(b));
  const auto& ea = std::get<EpochValue>(a);
  const auto& eb = std::get<EpochValue>(b);
  return ea.name == eb.name && ea.dropLast == eb.dropLast && expr_eq(ea.length, eb.length) &&
         expr_eq(ea.batchSize, eb.batchSize) && expr_eq(ea.itemShape, eb.itemShape);
}

/// Lexically scoped environment: one frame per function activation. Writes
/// update the innermost visible binding (or create one in the current
/// frame); frames are copy-on-write so forked paths stay independent.
class Env {
 public:
  struct Frame {
    std::map<std::string, RuntimeValue> vars;
  };

  Env() { frames_.push_back(std::make_shared<Frame>()); }

  const RuntimeValue* lookup(const std::string& name) const {
    for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
      auto f = (*it)->vars.find(name);
      if (f != (*it)->vars.end()) return &f->second;
    }
    return nullptr;
  }

  bool bound(const std::string& name) const { return lookup(name) != nullptr; }

  /// Assignment: updates the innermost existing binding, else binds in the
  /// current frame. Returns whether the name existed before.
  bool set(const std::string& name, RuntimeValue v) {
    for (size_t i = frames_.size(); i-- > 0;) {
      if (frames_[i]->vars.count(name)) {
        mutate(i).vars[name] = std::move(v);
        return true;
      }
    }
    mutate(frames_.size() - 1).vars[name] = std::move(v);
    return false;
  }

  /// Fresh binding in the current frame (parameters, loop variables that
  /// should shadow).
  void bindLocal(const std::string& name, RuntimeValue v) {
    mutate(frames_.size() - 1).vars[name] = std::move(v);
  }

  void pushFrame() { frames_.push_back(std::make_shared<Frame>()); }
  void popFrame() { frames_.pop_back(); }
  size_t depth() const { return frames_.size(); }

  std::set<std::string> visibleNames() const {
    std::set<std::string> out;
    for (const auto& f : frames_)
      for (const auto& [k, _] : f->vars) out.insert(k);
    return out;
  }

  /// Innermost visible binding per name.
  std::map<std::string, const RuntimeValue*> visibleBindings() const {
    std::map<std::string, const RuntimeValue*> out;
    for (auto it = frames_.rbegin(); it != frames_.rend(); ++it)
      for (const auto& [k, v] : (*it)->vars) out.emplace(k, &v);
    return out;
  }

 private:
  Frame& mutate(size_t i) {
    if (frames_[i].use_count() > 1) frames_[i] = std::make_shared<Frame>(*frames_[i]);
    return const_cast<Frame&>(*frames_[i]);
  }

  std::vector<std::shared_ptr<Frame>> frames_;
};

/// One execution path: environment, accumulated constraints, interval
/// knowledge, and the online status.
struct PathState {
  enum class Status { Open, ImmediateFail, PotentialUnreachable };

  Env env;
  ConstraintSet cs;
  IntervalCtx intervals;
  int nextGen = 0;
  Status status = Status::Open;
  std::optional<Constraint> failConstraint;     // first constraint reduced to false
  std::optional<std::string> degradeReason;     // forces a dontknow verdict
  int symbolicBranches = 0;                     // unresolved branch conditions
  int pathId = 0;

  // Writes to variables that existed when the scope was entered; one scope
  // per if-arm under merge consideration.
  struct EffectScope {
    std::set<std::string> preexisting;
    std::set<std::string> writes;
  };
  std::vector<EffectScope> effectScopes;

  bool isOpen() const { return status == Status::Open; }

  const char* onlineStatusName() const {
    if (degradeReason) return "dontknow";
    switch (status) {
      case Status::Open: return "potential-success";
      case Status::ImmediateFail: return "immediate-fail";
      case Status::PotentialUnreachable: return "potential-unreachable";
    }
    return "?";
  }
};

struct ExecOptions {
  int pathCap = 4096;
  bool mergePaths = true;
  DatasetOverrides datasets;
};

class Executor {
 public:
  Executor(const ir::LoweredUnit& unit, ExecOptions opts = {}) : unit_(unit), opts_(std::move(opts)) {}

  /// Evaluates the entry expression; returns every surviving path (failed
  /// and potentially-unreachable paths included, marked by their status).
  std::vector<PathState> run() {
    PathState init;
    Paths out = eval(std::move(init), unit_.entry);
    std::vector<PathState> states;
    states.reserve(out.size());
    for (auto& [v, st] : out) {
      st.pathId = static_cast<int>(states.size());
      states.push_back(std::move(st));
    }
    return states;
  }

  SymbolPool& pool() { return pool_; }
  const SymbolPool& pool() const { return pool_; }

  using Paths = std::vector<std::pair<RuntimeValue, PathState>>;

  Paths eval(PathState st, const ir::IRPtr& e) {
    if (!st.isOpen()) return single(unitValue(), std::move(st));
    using namespace ir;
    const auto& n = e->v;
    if (const auto* i = std::get_if<IRInt>(&n)) return single(ValueExpr(nconst(i->value)), std::move(st));
    if (const auto* b = std::get_if<IRBool>(&n)) return single(ValueExpr(bconst(b->value)), std::move(st));
    if (const auto* v = std::get_if<IRVar>(&n)) {
      const RuntimeValue* rv = st.env.lookup(v->name);
      if (rv == nullptr) throw UnboundVariableError(v->name, e->pos);
      return single(*rv, std::move(st));
    }
    if (const auto* l = std::get_if<IRLet>(&n)) return evalLet(std::move(st), *l);
    if (const auto* f = std::get_if<IRIf>(&n)) return evalIf(std::move(st), *f, e->pos);
    if (const auto* b2 = std::get_if<IRBin>(&n)) return evalBin(std::move(st), *b2, e->pos);
    if (const auto* c = std::get_if<IRCall>(&n)) return evalCall(std::move(st), *c, e->pos);
    if (const auto* t = std::get_if<IRTensor>(&n)) return evalTensor(std::move(st), *t, e->pos);
    if (const auto* s = std::get_if<IRSeq>(&n)) return evalSeq(std::move(st), *s);
    if (const auto* r = std::get_if<IRForRange>(&n)) return evalForRange(std::move(st), *r);
    const auto& d = std::get<IRForDataset>(n);
    return evalForDataset(std::move(st), d, e->pos);
  }

 private:
  static RuntimeValue unitValue() { return ValueExpr(nconst(0)); }

  static Paths single(RuntimeValue v, PathState st) {
    Paths out;
    out.emplace_back(std::move(v), std::move(st));
    return out;
  }

  void markWrite(PathState& st, const std::string& name) {
    for (auto& scope : st.effectScopes)
      if (scope.preexisting.count(name)) scope.writes.insert(name);
  }

  void degrade(PathState& st, std::string reason) {
    if (!st.degradeReason) st.degradeReason = std::move(reason);
  }

  /// Records a constraint through the online check.
  void record(PathState& st, Formula f, ConstraintKind kind, const SourcePos& pos, const std::string& opName,
              bool fromBranch = false) {
    if (!st.isOpen()) return;
    OnlineCheck oc = online_check(f, kind, false, st.intervals, st.symbolicBranches > 0);
    if (oc.disposition == Disposition::TriviallyTrue) return;
    Constraint c;
    c.formula = std::move(f);
    c.reduced = oc.reduced;
    c.kind = kind;
    c.genIndex = st.nextGen++;
    c.origin = pos;
    c.opName = opName;
    c.fromBranch = fromBranch;
    st.cs.push(c);
    if (oc.disposition == Disposition::ImmediateFail) {
      st.status = PathState::Status::ImmediateFail;
      st.failConstraint = c;
      return;
    }
    const bool* k = formula_const(oc.reduced);
    if (k != nullptr && !*k) {
      // false under unresolved branches, or a false hard constraint
      st.status = PathState::Status::PotentialUnreachable;
      st.failConstraint = c;
      return;
    }
    if (fromBranch) ++st.symbolicBranches;
    if (kind == ConstraintKind::Hard) {
      bool contradiction = false;
      st.intervals = propagate(st.cs, &contradiction);
      if (contradiction) {
        st.status = PathState::Status::PotentialUnreachable;
        st.failConstraint = c;
      }
    }
  }

  using ListPaths = std::vector<std::pair<std::vector<RuntimeValue>, PathState>>;

  ListPaths evalList(PathState st, const std::vector<ir::IRPtr>& es) {
    ListPaths acc;
    acc.emplace_back(std::vector<RuntimeValue>{}, std::move(st));
    for (const auto& e : es) {
      ListPaths next;
      for (auto& [vals, s] : acc) {
        if (!s.isOpen()) {
          auto vs = vals;
          vs.push_back(unitValue());
          next.emplace_back(std::move(vs), std::move(s));
          continue;
        }
        for (auto& [v, s2] : eval(std::move(s), e)) {
          auto vs = vals;
          vs.push_back(std::move(v));
          next.emplace_back(std::move(vs), std::move(s2));
        }
      }
      acc = std::move(next);
    }
    return acc;
  }

  Paths evalLet(PathState st, const ir::IRLet& l) {
    Paths out;
    for (auto& [v, s] : eval(std::move(st), l.bound)) {
      if (!s.isOpen()) {
        out.emplace_back(unitValue(), std::move(s));
        continue;
      }
      bool existed = s.env.set(l.name, v);
      if (existed) markWrite(s, l.name);
      for (auto& r : eval(std::move(s), l.body)) out.push_back(std::move(r));
    }
    return out;
  }

  Paths evalSeq(PathState st, const ir::IRSeq& s) {
    Paths acc = single(unitValue(), std::move(st));
    for (const auto& item : s.items) {
      Paths next;
      for (auto& [v, st2] : acc) {
        if (!st2.isOpen()) {
          next.emplace_back(unitValue(), std::move(st2));
          continue;
        }
        for (auto& r : eval(std::move(st2), item)) next.push_back(std::move(r));
      }
      acc = std::move(next);
    }
    return acc;
  }

  Paths evalBin(PathState st, const ir::IRBin& b, const SourcePos& pos) {
    using ir::IROp;
    if (b.op == IROp::Not) {
      Paths out;
      for (auto& [v, s] : eval(std::move(st), b.lhs)) {
        if (!s.isOpen()) {
          out.emplace_back(unitValue(), std::move(s));
          continue;
        }
        const auto* ve = std::get_if<ValueExpr>(&v);
        if (ve == nullptr || sort_of(*ve) != Sort::Bool)
          throw SortError("'not' needs a boolean operand", pos);
        out.emplace_back(ValueExpr(simplify_bool(bnot(std::get<BoolExpr>(*ve)), s.intervals)), std::move(s));
      }
      return out;
    }
    Paths out;
    for (auto& [vals, s] : evalList(std::move(st), {b.lhs, b.rhs})) {
      if (!s.isOpen()) {
        out.emplace_back(unitValue(), std::move(s));
        continue;
      }
      out.push_back(applyBin(std::move(s), b.op, vals[0], vals[1], pos));
    }
    return out;
  }

  std::pair<RuntimeValue, PathState> applyBin(PathState st, ir::IROp op, const RuntimeValue& lhs,
                                              const RuntimeValue& rhs, const SourcePos& pos) {
    using ir::IROp;
    const auto* lv = std::get_if<ValueExpr>(&lhs);
    const auto* rv = std::get_if<ValueExpr>(&rhs);
    if (lv == nullptr || rv == nullptr) throw SortError("dataset values do not support operators", pos);
    Sort ls = sort_of(*lv);
    Sort rs = sort_of(*rv);

    auto numOp = [&](NumOp o) -> std::optional<NumOp> { return o; };
    (void)numOp;

    if (ls == Sort::Num && rs == Sort::Num) {
      const auto& a = std::get<NumExpr>(*lv);
      const auto& b = std::get<NumExpr>(*rv);
      switch (op) {
        case IROp::Add: return {ValueExpr(simplify_num(nadd(a, b), st.intervals)), std::move(st)};
        case IROp::Sub: return {ValueExpr(simplify_num(nsub(a, b), st.intervals)), std::move(st)};
        case IROp::Mul: return {ValueExpr(simplify_num(nmul(a, b), st.intervals)), std::move(st)};
        case IROp::FloorDiv: return {ValueExpr(simplify_num(nfdiv(a, b), st.intervals)), std::move(st)};
        case IROp::Mod: return {ValueExpr(simplify_num(nmod(a, b), st.intervals)), std::move(st)};
        case IROp::Lt: return {ValueExpr(simplify_bool(blt(a, b), st.intervals)), std::move(st)};
        case IROp::Eq: return {ValueExpr(simplify_bool(beq(*lv, *rv), st.intervals)), std::move(st)};
        default: throw SortError("boolean operator on numbers", pos);
      }
    }
    if (ls == Sort::Bool && rs == Sort::Bool) {
      const auto& a = std::get<BoolExpr>(*lv);
      const auto& b = std::get<BoolExpr>(*rv);
      switch (op) {
        case IROp::And: return {ValueExpr(simplify_bool(band(a, b), st.intervals)), std::move(st)};
        case IROp::Or: return {ValueExpr(simplify_bool(bor(a, b), st.intervals)), std::move(st)};
        case IROp::Eq: return {ValueExpr(simplify_bool(beq(*lv, *rv), st.intervals)), std::move(st)};
        default: throw SortError("arithmetic operator on booleans", pos);
      }
    }
    // Tensor arithmetic: elementwise ops broadcast; a scalar operand leaves
    // the tensor shape unchanged.
    bool arith = op == IROp::Add || op == IROp::Sub || op == IROp::Mul || op == IROp::FloorDiv ||
                 op == IROp::Mod;
    if (ls == Sort::Shape && rs == Sort::Shape) {
      if (op == IROp::Eq) return {ValueExpr(simplify_bool(beq(*lv, *rv), st.intervals)), std::move(st)};
      if (!arith) throw SortError("tensor comparison is not supported; use explicit ops", pos);
      return applyCatalog(std::move(st), "broadcast", {*lv, *rv}, "", pos);
    }
    if (arith && ((ls == Sort::Shape && rs == Sort::Num) || (ls == Sort::Num && rs == Sort::Shape))) {
      const ValueExpr& shape = ls == Sort::Shape ? *lv : *rv;
      return {shape, std::move(st)};
    }
    throw SortError(std::string("operator '") + ir::ir_op_token(op) + "' between " + sort_name(ls) + " and " +
                        sort_name(rs),
                    pos);
  }

  Paths evalCall(PathState st, const ir::IRCall& c, const SourcePos& pos) {
    auto it = unit_.functions.find(c.fname);
    if (it == unit_.functions.end()) throw UnboundVariableError(c.fname, pos);
    const ir::LoweredFunction& fn = it->second;
    if (fn.params.size() != c.args.size())
      throw ArityMismatchError("call to '" + c.fname + "' expects " + std::to_string(fn.params.size()) +
                                   " arguments, got " + std::to_string(c.args.size()),
                               pos);
    Paths out;
    for (auto& [vals, s] : evalList(std::move(st), c.args)) {
      if (!s.isOpen()) {
        out.emplace_back(unitValue(), std::move(s));
        continue;
      }
      s.env.pushFrame();
      for (size_t i = 0; i < fn.params.size(); ++i) s.env.bindLocal(fn.params[i], vals[i]);
      for (auto& [rv, s2] : eval(std::move(s), fn.body)) {
        s2.env.popFrame();
        out.emplace_back(std::move(rv), std::move(s2));
      }
    }
    return out;
  }

  Paths evalTensor(PathState st, const ir::IRTensor& t, const SourcePos& pos) {
    Paths out;
    const OpRule* rule = OpCatalog::instance().lookup(t.op);
    for (auto& [vals, s] : evalList(std::move(st), t.args)) {
      if (!s.isOpen()) {
        out.emplace_back(unitValue(), std::move(s));
        continue;
      }
      if (rule == nullptr) {
        // Unknown ops poison the path instead of silently passing.
        degrade(s, "unknown tensor op '" + t.op + "' at " + pos.str());
        out.emplace_back(ValueExpr(ssym(pool_.fresh(Sort::Shape, t.op + "@" + pos.str()))), std::move(s));
        continue;
      }
      std::vector<ValueExpr> args;
      args.reserve(vals.size());
      bool epochArg = false;
      for (const auto& v : vals) {
        if (const auto* ve = std::get_if<ValueExpr>(&v)) args.push_back(*ve);
        else epochArg = true;
      }
      if (epochArg) throw SortError("dataset value passed to tensor op '" + t.op + "'", pos);
      out.push_back(applyCatalog(std::move(s), t.op, args, t.strArg, pos));
    }
    return out;
  }

  std::pair<RuntimeValue, PathState> applyCatalog(PathState st, const std::string& op,
                                                  const std::vector<ValueExpr>& args,
                                                  const std::string& strArg, const SourcePos& pos) {
    const OpRule* rule = OpCatalog::instance().lookup(op);
    OpContext c;
    c.pool = &pool_;
    c.intervals = &st.intervals;
    c.origin = pos;
    c.strArg = strArg;
    c.datasets = &opts_.datasets;
    RuleResult r = rule->apply(args, c);
    if (const auto* err = std::get_if<RuleError>(&r)) {
      switch (err->code) {
        case RuleError::Code::BadArity:
          throw ArityMismatchError(err->message, pos);
        case RuleError::Code::BadSort:
          throw SortError(err->message, pos);
        default:
          degrade(st, err->message + " at " + pos.str());
          return {ValueExpr(ssym(pool_.fresh(Sort::Shape, op + "@" + pos.str()))), std::move(st)};
      }
    }
    const auto& ok = std::get<RuleOutput>(r);
    for (const auto& ec : ok.constraints) {
      record(st, ec.formula, ec.kind, pos, op);
      if (!st.isOpen()) break;
    }
    if (ok.epoch) return {RuntimeValue(*ok.epoch), std::move(st)};
    return {RuntimeValue(*ok.value), std::move(st)};
  }

  Paths evalIf(PathState st, const ir::IRIf& f, const SourcePos& pos) {
    Paths out;
    for (auto& [cv, s] : eval(std::move(st), f.cond)) {
      if (!s.isOpen()) {
        out.emplace_back(unitValue(), std::move(s));
        continue;
      }
      const auto* ve = std::get_if<ValueExpr>(&cv);
      if (ve == nullptr || sort_of(*ve) != Sort::Bool)
        throw SortError("branch condition must be a boolean", pos);
      BoolExpr cond = std::get<BoolExpr>(*ve);
      OnlineCheck oc = online_check(fatom(cond), ConstraintKind::Hard, true, s.intervals,
                                    s.symbolicBranches > 0);
      if (oc.disposition == Disposition::ResolvedBranch) {
        // single branch without splitting the path
        for (auto& r : eval(std::move(s), oc.branchValue ? f.thenE : f.elseE)) out.push_back(std::move(r));
        continue;
      }
      if (activePaths_ >= opts_.pathCap) {
        degrade(s, "path cap (" + std::to_string(opts_.pathCap) + ") exceeded at " + pos.str());
        record(s, fatom(cond), ConstraintKind::Hard, pos, "if", true);
        for (auto& r : eval(std::move(s), f.thenE)) out.push_back(std::move(r));
        continue;
      }
      ++activePaths_;

      PathState preSplit = s;
      PathState thenState = s;
      record(thenState, fatom(cond), ConstraintKind::Hard, pos, "if", true);
      thenState.effectScopes.push_back({thenState.env.visibleNames(), {}});
      Paths thenPaths = eval(std::move(thenState), f.thenE);

      PathState elseState = std::move(s);
      record(elseState, fatom(simplify_bool(bnot(cond), elseState.intervals)), ConstraintKind::Hard, pos,
             "if", true);
      elseState.effectScopes.push_back({elseState.env.visibleNames(), {}});
      Paths elsePaths = eval(std::move(elseState), f.elseE);

      if (auto merged = tryMerge(preSplit, cond, thenPaths, elsePaths)) {
        --activePaths_;
        out.push_back(std::move(*merged));
        continue;
      }
      for (auto& r : thenPaths) {
        r.second.effectScopes.pop_back();
        out.push_back(std::move(r));
      }
      for (auto& r : elsePaths) {
        r.second.effectScopes.pop_back();
        out.push_back(std::move(r));
      }
    }
    return out;
  }

  /// Branch-path merging. Both arms must have produced exactly one open
  /// path, the constraints emitted inside the arms must not mention symbols
  /// of the branch condition, the arms must have no writes to pre-existing
  /// variables, and the results (and fresh bindings) must be structurally
  /// identical after simplification. The merged path keeps both arms'
  /// emitted constraints and drops the branch-condition hard constraints.
  std::optional<std::pair<RuntimeValue, PathState>> tryMerge(const PathState& pre, const BoolExpr& cond,
                                                             const Paths& thenPaths, const Paths& elsePaths) {
    if (!opts_.mergePaths) return std::nullopt;
    if (thenPaths.size() != 1 || elsePaths.size() != 1) return std::nullopt;
    const auto& [vT, sT] = thenPaths[0];
    const auto& [vE, sE] = elsePaths[0];
    if (!sT.isOpen() || !sE.isOpen()) return std::nullopt;
    if (sT.degradeReason || sE.degradeReason) return std::nullopt;

    // (2) no writes outside the arm
    if (!sT.effectScopes.back().writes.empty() || !sE.effectScopes.back().writes.empty())
      return std::nullopt;

    // (1) arm constraints are independent of the branch condition
    std::set<Sym> condSyms = free_symbols(cond);
    auto armConstraints = [&](const PathState& s) {
      std::vector<const Constraint*> out;
      for (const auto& c : s.cs.all())
        if (c.genIndex >= pre.nextGen && !(c.fromBranch && c.genIndex == pre.nextGen)) out.push_back(&c);
      return out;
    };
    auto disjoint = [&](const std::vector<const Constraint*>& cs) {
      for (const auto* c : cs)
        for (Sym sym : free_symbols(c->formula))
          if (condSyms.count(sym)) return false;
      return true;
    };
    std::vector<const Constraint*> thenCs = armConstraints(sT);
    std::vector<const Constraint*> elseCs = armConstraints(sE);
    if (!disjoint(thenCs) || !disjoint(elseCs)) return std::nullopt;

    // (3) same result value and same fresh bindings, compared under the
    // pre-split interval context
    auto simplifyRv = [&](const RuntimeValue& v) -> RuntimeValue {
      if (const auto* ve = std::get_if<ValueExpr>(&v)) return simplify(*ve, pre.intervals);
      return v;
    };
    if (!runtime_value_eq(simplifyRv(vT), simplifyRv(vE))) return std::nullopt;
    auto bindT = sT.env.visibleBindings();
    auto bindE = sE.env.visibleBindings();
    if (bindT.size() != bindE.size()) return std::nullopt;
    std::set<std::string> preNames = pre.env.visibleNames();
    for (auto itT = bindT.begin(), itE = bindE.begin(); itT != bindT.end(); ++itT, ++itE) {
      if (itT->first != itE->first) return std::nullopt;
      if (preNames.count(itT->first)) continue;  // unchanged: condition (2) holds
      if (!runtime_value_eq(simplifyRv(*itT->second), simplifyRv(*itE->second))) return std::nullopt;
    }

    // build the merged path
    PathState merged = pre;
    merged.env = sT.env;
    auto append = [&merged](const std::vector<const Constraint*>& cs) {
      for (const auto* c : cs) {
        bool dup = false;
        for (const auto& existing : merged.cs.all())
          if (existing.kind == c->kind && formula_eq(existing.formula, c->formula)) dup = true;
        if (dup) continue;
        Constraint copy = *c;
        copy.genIndex = merged.nextGen++;
        merged.cs.push(std::move(copy));
      }
    };
    append(thenCs);
    append(elseCs);
    bool contradiction = false;
    merged.intervals = propagate(merged.cs, &contradiction);
    if (contradiction) {
      merged.status = PathState::Status::PotentialUnreachable;
      if (!merged.cs.empty()) merged.failConstraint = merged.cs.all().back();
    }
    return std::make_pair(simplifyRv(vT), std::move(merged));
  }

  Paths evalForRange(PathState st, const ir::IRForRange& r) {
    Paths acc = single(unitValue(), std::move(st));
    for (long long k = r.lo; k < r.hi; ++k) {
      Paths next;
      for (auto& [v, s] : acc) {
        if (!s.isOpen()) {
          next.emplace_back(unitValue(), std::move(s));
          continue;
        }
        bool existed = s.env.set(r.var, ValueExpr(nconst(k)));
        if (existed) markWrite(s, r.var);
        for (auto& r2 : eval(std::move(s), r.body)) next.push_back(std::move(r2));
      }
      acc = std::move(next);
    }
    for (auto& [v, s] : acc) v = unitValue();
    return acc;
  }

  /// Dataset loops are analyzed for exactly two cases: the regular minibatch
  /// (leading dim = batch size, with N >= B) and, unless drop_last is set,
  /// the residual minibatch (fresh R with R = N % B and 0 < R < B).
  Paths evalForDataset(PathState st, const ir::IRForDataset& d, const SourcePos& pos) {
    Paths out;
    for (auto& [dv, s] : eval(std::move(st), d.dataset)) {
      if (!s.isOpen()) {
        out.emplace_back(unitValue(), std::move(s));
        continue;
      }
      const auto* epoch = std::get_if<EpochValue>(&dv);
      if (epoch == nullptr) throw SortError("for-in expects a dataset value", pos);

      bool splitResidual = !epoch->dropLast;
      if (splitResidual && activePaths_ >= opts_.pathCap) {
        degrade(s, "path cap (" + std::to_string(opts_.pathCap) + ") exceeded at " + pos.str());
        splitResidual = false;
      }
      if (splitResidual) ++activePaths_;

      // regular minibatch
      PathState regular = s;
      record(regular, fatom(ble(epoch->batchSize, epoch->length)), ConstraintKind::Hard, pos, "dataset-loop");
      if (regular.isOpen()) {
        ShapeExpr batch = simplify_shape(sconcat(stuple({epoch->batchSize}), epoch->itemShape),
                                         regular.intervals);
        bool existed = regular.env.set(d.var, ValueExpr(batch));
        if (existed) markWrite(regular, d.var);
        for (auto& r : eval(std::move(regular), d.body)) {
          r.first = unitValue();
          out.push_back(std::move(r));
        }
      } else {
        out.emplace_back(unitValue(), std::move(regular));
      }

      if (!splitResidual) continue;

      // residual minibatch
      PathState residual = std::move(s);
      Sym rsym = pool_.fresh(Sort::Num, "residual_batch(" + epoch->name + ")@" + pos.str());
      record(residual, fatom(beq(ValueExpr(nsym(rsym)), ValueExpr(nmod(epoch->length, epoch->batchSize)))),
             ConstraintKind::Hard, pos, "dataset-loop");
      record(residual, fatom(blt(nconst(0), nsym(rsym))), ConstraintKind::Hard, pos, "dataset-loop");
      record(residual, fatom(blt(nsym(rsym), epoch->batchSize)), ConstraintKind::Hard, pos, "dataset-loop");
      if (residual.isOpen()) {
        ShapeExpr batch = simplify_shape(sconcat(stuple({nsym(rsym)}), epoch->itemShape),
                                         residual.intervals);
        bool existed = residual.env.set(d.var, ValueExpr(batch));
        if (existed) markWrite(residual, d.var);
        for (auto& r : eval(std::move(residual), d.body)) {
          r.first = unitValue();
          out.push_back(std::move(r));
        }
      } else {
        out.emplace_back(unitValue(), std::move(residual));
      }
    }
    return out;
  }

  const ir::LoweredUnit& unit_;
  ExecOptions opts_;
  SymbolPool pool_;
  int activePaths_ = 1;
};

}  // namespace shapecheck
