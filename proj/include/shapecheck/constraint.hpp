#pragma once

// Constraints: boolean formulas over value expressions, tagged hard or soft.
// Hard constraints hold on every real execution (input ranges, branch
// conditions); soft constraints are operation preconditions whose violation
// is a shape error.

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "shapecheck/expr.hpp"

namespace shapecheck {

enum class ConstraintKind : uint8_t { Hard, Soft };

struct FormulaNode;

class Formula {
 public:
  Formula() = default;
  explicit Formula(std::shared_ptr<const FormulaNode> p) : p_(std::move(p)) {}
  const FormulaNode& node() const { return *p_; }
  const FormulaNode* get() const { return p_.get(); }
  bool valid() const { return p_ != nullptr; }

 private:
  std::shared_ptr<const FormulaNode> p_;
};

struct FAtom { BoolExpr expr; };
struct FAnd { Formula lhs, rhs; };
struct FOr { Formula lhs, rhs; };
struct FNot { Formula arg; };
// "body holds for every integer binder in [lo, hi]" (inclusive bounds).
struct FForall { Sym binder; NumExpr lo, hi; Formula body; };

struct FormulaNode {
  std::variant<FAtom, FAnd, FOr, FNot, FForall> v;
};

inline Formula fatom(BoolExpr e) { return Formula(std::make_shared<FormulaNode>(FormulaNode{FAtom{std::move(e)}})); }
inline Formula fand(Formula a, Formula b) {
  return Formula(std::make_shared<FormulaNode>(FormulaNode{FAnd{std::move(a), std::move(b)}}));
}
inline Formula for_(Formula a, Formula b) {
  return Formula(std::make_shared<FormulaNode>(FormulaNode{FOr{std::move(a), std::move(b)}}));
}
inline Formula fnot(Formula a) { return Formula(std::make_shared<FormulaNode>(FormulaNode{FNot{std::move(a)}})); }
inline Formula fforall(Sym binder, NumExpr lo, NumExpr hi, Formula body) {
  return Formula(
      std::make_shared<FormulaNode>(FormulaNode{FForall{binder, std::move(lo), std::move(hi), std::move(body)}}));
}

inline const BoolExpr* as_atom(const Formula& f) {
  if (const auto* a = std::get_if<FAtom>(&f.node().v)) return &a->expr;
  return nullptr;
}

/// True/false when the formula is a constant atom, nullptr otherwise.
inline const bool* formula_const(const Formula& f) {
  if (const auto* a = as_atom(f)) return as_const(*a);
  return nullptr;
}

inline bool formula_eq(const Formula& a, const Formula& b) {
  if (a.get() == b.get()) return true;
  const auto& x = a.node().v;
  const auto& y = b.node().v;
  if (x.index() != y.index()) return false;
  if (const auto* at = std::get_if<FAtom>(&x)) return expr_eq(at->expr, std::get<FAtom>(y).expr);
  if (const auto* an = std::get_if<FAnd>(&x)) {
    const auto& p = std::get<FAnd>(y);
    return formula_eq(an->lhs, p.lhs) && formula_eq(an->rhs, p.rhs);
  }
  if (const auto* o = std::get_if<FOr>(&x)) {
    const auto& p = std::get<FOr>(y);
    return formula_eq(o->lhs, p.lhs) && formula_eq(o->rhs, p.rhs);
  }
  if (const auto* n = std::get_if<FNot>(&x)) return formula_eq(n->arg, std::get<FNot>(y).arg);
  const auto& f0 = std::get<FForall>(x);
  const auto& f1 = std::get<FForall>(y);
  return f0.binder == f1.binder && expr_eq(f0.lo, f1.lo) && expr_eq(f0.hi, f1.hi) && formula_eq(f0.body, f1.body);
}

struct Constraint {
  Formula formula;   // as emitted (report text)
  Formula reduced;   // online-simplified form (what the solver sees)
  ConstraintKind kind = ConstraintKind::Soft;
  int genIndex = 0;  // strictly increasing per path
  SourcePos origin;
  std::string opName;       // tensor op or construct that produced it
  bool fromBranch = false;  // branch-condition hard constraint
};

/// Ordered collection of constraints; the order is generation order.
class ConstraintSet {
 public:
  void push(Constraint c) { items_.push_back(std::move(c)); }

  const std::vector<Constraint>& all() const { return items_; }
  bool empty() const { return items_.empty(); }
  size_t size() const { return items_.size(); }

  std::vector<Constraint> hard() const { return filter(ConstraintKind::Hard); }
  std::vector<Constraint> soft() const { return filter(ConstraintKind::Soft); }

  /// Appends `other` after this set, preserving both relative orders.
  void unionWith(const ConstraintSet& other) {
    items_.insert(items_.end(), other.items_.begin(), other.items_.end());
  }

 private:
  std::vector<Constraint> filter(ConstraintKind k) const {
    std::vector<Constraint> out;
    for (const auto& c : items_)
      if (c.kind == k) out.push_back(c);
    return out;
  }

  std::vector<Constraint> items_;
};

}  // namespace shapecheck
