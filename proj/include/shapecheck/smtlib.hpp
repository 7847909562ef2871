#pragma once

// SMT-LIB2 export of a path's constraint set. The script asserts the hard
// conjunction plus the negated soft conjunction (H and not S), so an external
// check-sat answering `sat` exhibits a counterexample and `unsat` proves the
// path valid. Symbol naming is deterministic: s<id>_<hint>.

#include <set>
#include <sstream>
#include <string>

#include "shapecheck/solver.hpp"

namespace shapecheck {

namespace smtdetail {

inline std::string sanitize(const std::string& hint) {
  std::string out;
  for (char c : hint) {
    if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(c);
    else out.push_back('_');
    if (out.size() >= 40) break;
  }
  return out;
}

inline std::string sym_name(Sym s, const SymbolPool* pool) {
  std::string name = "s" + std::to_string(s.id);
  if (pool != nullptr && !pool->hint(s).empty()) name += "_" + sanitize(pool->hint(s));
  return name;
}

struct Printer {
  const SymbolPool* pool;
  bool usesFdiv = false;
  bool usesFmod = false;

  std::string num(const NumExpr& e) {
    const auto& n = e.node().v;
    if (const auto* c = std::get_if<NumConst>(&n))
      return c->value < 0 ? "(- " + std::to_string(-c->value) + ")" : std::to_string(c->value);
    if (const auto* s = std::get_if<NumSym>(&n)) return sym_name(s->sym, pool);
    if (const auto* o = std::get_if<NumBin>(&n)) {
      std::string l = num(o->lhs);
      std::string r = num(o->rhs);
      switch (o->op) {
        case NumOp::Add: return "(+ " + l + " " + r + ")";
        case NumOp::Sub: return "(- " + l + " " + r + ")";
        case NumOp::Mul: return "(* " + l + " " + r + ")";
        case NumOp::FloorDiv:
          usesFdiv = true;
          return "(fdiv " + l + " " + r + ")";
        case NumOp::Mod:
          usesFmod = true;
          return "(fmod " + l + " " + r + ")";
      }
    }
    if (const auto* ix = std::get_if<NumIndexOf>(&n)) {
      const auto* t = as_tuple(ix->shape);
      if (t == nullptr) throw UnresolvedRankError("smtlib: index over unresolved shape");
      if (const auto* k = as_const(ix->index)) {
        if (*k >= 0 && *k < static_cast<long long>(t->dims.size()))
          return num(t->dims[static_cast<size_t>(*k)]);
        return "(- 1)";  // out-of-range constant index
      }
      // symbolic index: nested ite over the tuple's known rank
      std::string idx = num(ix->index);
      std::string expr = "(- 1)";
      for (size_t i = t->dims.size(); i-- > 0;)
        expr = "(ite (= " + idx + " " + std::to_string(i) + ") " + num(t->dims[i]) + " " + expr + ")";
      return expr;
    }
    if (const auto* rk = std::get_if<NumRank>(&n)) {
      const auto* t = as_tuple(rk->arg);
      if (t == nullptr) throw UnresolvedRankError("smtlib: rank over unresolved shape");
      return std::to_string(t->dims.size());
    }
    const auto& p = std::get<NumProd>(n);
    const auto* t = as_tuple(p.arg);
    if (t == nullptr) throw UnresolvedRankError("smtlib: prod over unresolved shape");
    if (t->dims.empty()) return "1";
    std::string expr = num(t->dims[0]);
    for (size_t i = 1; i < t->dims.size(); ++i) expr = "(* " + expr + " " + num(t->dims[i]) + ")";
    return expr;
  }

  std::string boolean(const BoolExpr& e) {
    const auto& n = e.node().v;
    if (const auto* c = std::get_if<BoolConst>(&n)) return c->value ? "true" : "false";
    if (const auto* s = std::get_if<BoolSym>(&n)) return sym_name(s->sym, pool);
    if (const auto* a = std::get_if<BoolAnd>(&n)) return "(and " + boolean(a->lhs) + " " + boolean(a->rhs) + ")";
    if (const auto* o = std::get_if<BoolOr>(&n)) return "(or " + boolean(o->lhs) + " " + boolean(o->rhs) + ")";
    if (const auto* nn = std::get_if<BoolNot>(&n)) return "(not " + boolean(nn->arg) + ")";
    if (const auto* q = std::get_if<BoolEq>(&n)) {
      if (sort_of(q->lhs) == Sort::Num)
        return "(= " + num(std::get<NumExpr>(q->lhs)) + " " + num(std::get<NumExpr>(q->rhs)) + ")";
      if (sort_of(q->lhs) == Sort::Bool)
        return "(= " + boolean(std::get<BoolExpr>(q->lhs)) + " " + boolean(std::get<BoolExpr>(q->rhs)) + ")";
      throw UnresolvedRankError("smtlib: shape equality not reduced");
    }
    const auto& l = std::get<BoolLt>(n);
    return "(< " + num(l.lhs) + " " + num(l.rhs) + ")";
  }

  std::string formula(const Formula& f) {
    const auto& n = f.node().v;
    if (const auto* a = std::get_if<FAtom>(&n)) return boolean(a->expr);
    if (const auto* an = std::get_if<FAnd>(&n)) return "(and " + formula(an->lhs) + " " + formula(an->rhs) + ")";
    if (const auto* o = std::get_if<FOr>(&n)) return "(or " + formula(o->lhs) + " " + formula(o->rhs) + ")";
    if (const auto* nn = std::get_if<FNot>(&n)) return "(not " + formula(nn->arg) + ")";
    const auto& q = std::get<FForall>(n);
    std::string x = sym_name(q.binder, pool);
    return "(forall ((" + x + " Int)) (=> (and (<= " + num(q.lo) + " " + x + ") (<= " + x + " " + num(q.hi) +
           ")) " + formula(q.body) + "))";
  }

  static bool has_forall(const Formula& f) {
    const auto& n = f.node().v;
    if (std::holds_alternative<FForall>(n)) return true;
    if (const auto* an = std::get_if<FAnd>(&n)) return has_forall(an->lhs) || has_forall(an->rhs);
    if (const auto* o = std::get_if<FOr>(&n)) return has_forall(o->lhs) || has_forall(o->rhs);
    if (const auto* nn = std::get_if<FNot>(&n)) return has_forall(nn->arg);
    return false;
  }
};

}  // namespace smtdetail

/// Emits the SMT-LIB2 script for Algorithm-style offline checking of `cs`.
/// Throws UnresolvedRankError when the set cannot be reduced to integers.
inline std::string emit_smtlib(const ConstraintSet& cs, const SymbolPool* pool = nullptr) {
  Elaboration elab = elaborate(cs);
  if (!elab.ok) throw UnresolvedRankError(elab.failReason);

  smtdetail::Printer pr{pool};
  std::vector<std::string> hardAsserts;
  bool quantified = false;
  for (const auto& h : elab.hard) {
    quantified = quantified || smtdetail::Printer::has_forall(h.formula);
    hardAsserts.push_back(pr.formula(h.formula));
  }
  std::string softNeg;
  if (!elab.soft.empty()) {
    std::string conj;
    for (const auto& s : elab.soft) {
      quantified = quantified || smtdetail::Printer::has_forall(s.formula);
      std::string one = pr.formula(s.formula);
      conj = conj.empty() ? one : "(and " + conj + " " + one + ")";
    }
    softNeg = "(not " + conj + ")";
  }

  std::set<Sym> syms;
  for (const auto& h : elab.hard)
    for (Sym s : free_symbols(h.formula)) syms.insert(s);
  for (const auto& s0 : elab.soft)
    for (Sym s : free_symbols(s0.formula)) syms.insert(s);

  std::ostringstream os;
  os << "(set-logic " << (quantified ? "NIA" : "QF_NIA") << ")\n";
  for (Sym s : syms)
    os << "(declare-const " << smtdetail::sym_name(s, pool) << (s.sort == Sort::Bool ? " Bool" : " Int")
       << ")\n";
  if (pr.usesFdiv || pr.usesFmod) {
    // floor semantics on top of SMT-LIB's Euclidean div/mod
    os << "(define-fun fdiv ((a Int) (b Int)) Int "
          "(ite (or (> b 0) (= (mod a b) 0)) (div a b) (- (div a b) 1)))\n";
    os << "(define-fun fmod ((a Int) (b Int)) Int "
          "(ite (or (> b 0) (= (mod a b) 0)) (mod a b) (+ (mod a b) b)))\n";
  }
  for (const auto& a : hardAsserts) os << "(assert " << a << ")\n";
  if (!softNeg.empty()) os << "(assert " << softNeg << ")\n";
  os << "(check-sat)\n(get-model)\n";
  return os.str();
}

}  // namespace shapecheck
