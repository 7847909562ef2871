#pragma once

// Lowering from the surface AST to the closed IR: command-line arguments are
// substituted as constants, surface sugar (comparisons, unary minus, shape
// accessors, indexing) is desugared onto the core op set, and counted-loop
// bounds are folded to integer literals.

#include <map>
#include <optional>
#include <string>
#include <variant>

#include "shapecheck/ast.hpp"
#include "shapecheck/expr_ops.hpp"
#include "shapecheck/ir.hpp"

namespace shapecheck {

using CliArg = std::variant<long long, bool>;
using CliArgs = std::map<std::string, CliArg>;

namespace lowerdetail {

using namespace ast;
using namespace ir;

struct Lowerer {
  const CliArgs& args;

  IRPtr expr(const ExprPtr& e) {
    const auto& n = e->v;
    if (const auto* i = std::get_if<IntLit>(&n)) return make(IRInt{i->value}, e->pos);
    if (const auto* b = std::get_if<BoolLit>(&n)) return make(IRBool{b->value}, e->pos);
    if (std::holds_alternative<StrLit>(n))
      throw LoweringError("string literal outside a call argument", e->pos);
    if (const auto* v = std::get_if<Name>(&n)) return make(IRVar{v->id}, e->pos);
    if (const auto* a = std::get_if<ArgRef>(&n)) {
      auto it = args.find(a->name);
      if (it == args.end()) throw MissingArgumentError(a->name, e->pos);
      if (const auto* iv = std::get_if<long long>(&it->second)) return make(IRInt{*iv}, e->pos);
      return make(IRBool{std::get<bool>(it->second)}, e->pos);
    }
    if (const auto* u = std::get_if<Unary>(&n)) {
      if (u->op == UnOp::Not) return make(IRBin{IROp::Not, expr(u->operand), nullptr}, e->pos);
      // -x desugars to 0 - x; literals fold immediately
      IRPtr inner = expr(u->operand);
      if (const auto* lit = std::get_if<IRInt>(&inner->v)) return make(IRInt{-lit->value}, e->pos);
      return make(IRBin{IROp::Sub, make(IRInt{0}, e->pos), inner}, e->pos);
    }
    if (const auto* b = std::get_if<Bin>(&n)) {
      IRPtr l = expr(b->lhs);
      IRPtr r = expr(b->rhs);
      switch (b->op) {
        case BinOp::Add: return make(IRBin{IROp::Add, l, r}, e->pos);
        case BinOp::Sub: return make(IRBin{IROp::Sub, l, r}, e->pos);
        case BinOp::Mul: return make(IRBin{IROp::Mul, l, r}, e->pos);
        case BinOp::FloorDiv: return make(IRBin{IROp::FloorDiv, l, r}, e->pos);
        case BinOp::Mod: return make(IRBin{IROp::Mod, l, r}, e->pos);
        case BinOp::Lt: return make(IRBin{IROp::Lt, l, r}, e->pos);
        case BinOp::Eq: return make(IRBin{IROp::Eq, l, r}, e->pos);
        case BinOp::And: return make(IRBin{IROp::And, l, r}, e->pos);
        case BinOp::Or: return make(IRBin{IROp::Or, l, r}, e->pos);
        case BinOp::Le:  // a <= b  ~>  not (b < a)
          return make(IRBin{IROp::Not, make(IRBin{IROp::Lt, r, l}, e->pos), nullptr}, e->pos);
        case BinOp::Gt:  // a > b  ~>  b < a
          return make(IRBin{IROp::Lt, r, l}, e->pos);
        case BinOp::Ge:  // a >= b  ~>  not (a < b)
          return make(IRBin{IROp::Not, make(IRBin{IROp::Lt, l, r}, e->pos), nullptr}, e->pos);
        case BinOp::Ne:  // a != b  ~>  not (a = b)
          return make(IRBin{IROp::Not, make(IRBin{IROp::Eq, l, r}, e->pos), nullptr}, e->pos);
      }
    }
    if (const auto* c = std::get_if<Call>(&n)) return call(*c, e->pos);
    if (const auto* ix = std::get_if<IndexSuffix>(&n)) {
      // t.shape[i] is the dimension number; t[i] is the first-axis sub-tensor
      if (const auto* sa = std::get_if<ShapeAttr>(&ix->base->v))
        return make(IRTensor{"dim", {expr(sa->base), expr(ix->index)}, ""}, e->pos);
      return make(IRTensor{"index", {expr(ix->base), expr(ix->index)}, ""}, e->pos);
    }
    if (const auto* sl = std::get_if<SliceSuffix>(&n))
      return make(IRTensor{"slice", {expr(sl->base), expr(sl->lo), expr(sl->hi)}, ""}, e->pos);
    const auto& sa = std::get<ShapeAttr>(n);
    return make(IRTensor{"shapeof", {expr(sa.base)}, ""}, e->pos);
  }

  IRPtr call(const Call& c, SourcePos pos) {
    std::vector<IRPtr> loweredArgs;
    std::string strArg;
    for (size_t i = 0; i < c.args.size(); ++i) {
      if (const auto* s = std::get_if<StrLit>(&c.args[i]->v)) {
        if (i != 0) throw LoweringError("path literal must be the first argument", c.args[i]->pos);
        strArg = s->value;
        continue;
      }
      loweredArgs.push_back(expr(c.args[i]));
    }
    // dataset keyword arguments map onto (batch_size, drop_last)
    IRPtr batchKw, dropKw;
    for (const auto& [k, v] : c.kwargs) {
      if (k == "batch_size") batchKw = expr(v);
      else if (k == "drop_last") dropKw = expr(v);
      else throw LoweringError("unknown keyword '" + k + "'", v->pos);
    }
    if (batchKw) loweredArgs.push_back(batchKw);
    if (dropKw) loweredArgs.push_back(dropKw);
    if (userFunctions != nullptr && userFunctions->count(c.callee))
      return make(IRCall{c.callee, std::move(loweredArgs)}, pos);
    return make(IRTensor{c.callee, std::move(loweredArgs), strArg}, pos);
  }

  IRPtr block(const Block& b, size_t from, SourcePos pos) {
    std::vector<IRPtr> items;
    for (size_t i = from; i < b.size(); ++i) {
      const auto& s = b[i];
      if (const auto* a = std::get_if<Assign>(&s->v)) {
        IRPtr rest = block(b, i + 1, s->pos);
        items.push_back(make(IRLet{a->name, expr(a->value), rest}, s->pos));
        return items.size() == 1 ? items[0] : make(IRSeq{std::move(items)}, pos);
      }
      if (const auto* e = std::get_if<ExprStmt>(&s->v)) {
        items.push_back(expr(e->expr));
        continue;
      }
      if (const auto* r = std::get_if<Return>(&s->v)) {
        items.push_back(expr(r->value));
        continue;
      }
      if (std::holds_alternative<Pass>(s->v)) continue;
      if (const auto* f = std::get_if<If>(&s->v)) {
        IRPtr thenE = block(f->thenBlock, 0, s->pos);
        IRPtr elseE = f->elseBlock ? block(*f->elseBlock, 0, s->pos) : make(IRSeq{{}}, s->pos);
        items.push_back(make(IRIf{expr(f->cond), thenE, elseE}, s->pos));
        continue;
      }
      const auto& l = std::get<For>(s->v);
      items.push_back(loop(l, s->pos));
    }
    if (items.size() == 1) return items[0];
    return make(IRSeq{std::move(items)}, pos);
  }

  IRPtr loop(const For& l, SourcePos pos) {
    if (const auto* c = std::get_if<Call>(&l.iter->v); c != nullptr && c->callee == "range") {
      if (c->args.empty() || c->args.size() > 2)
        throw LoweringError("range takes 1 or 2 arguments", l.iter->pos);
      long long lo = 0, hi = 0;
      if (c->args.size() == 1) {
        hi = constBound(c->args[0]);
      } else {
        lo = constBound(c->args[0]);
        hi = constBound(c->args[1]);
      }
      return make(IRForRange{l.var, lo, hi, block(l.body, 0, pos)}, pos);
    }
    return make(IRForDataset{l.var, expr(l.iter), block(l.body, 0, pos)}, pos);
  }

  /// Counted-loop bounds must fold to integer constants once command-line
  /// arguments are substituted.
  long long constBound(const ExprPtr& e) {
    IRPtr lowered = expr(e);
    auto fold = [](const IRPtr& x, auto&& self) -> std::optional<long long> {
      if (const auto* i = std::get_if<IRInt>(&x->v)) return i->value;
      if (const auto* b = std::get_if<IRBin>(&x->v)) {
        auto l = self(b->lhs, self);
        if (!l) return std::nullopt;
        if (!b->rhs) return std::nullopt;
        auto r = self(b->rhs, self);
        if (!r) return std::nullopt;
        switch (b->op) {
          case IROp::Add: return *l + *r;
          case IROp::Sub: return *l - *r;
          case IROp::Mul: return *l * *r;
          case IROp::FloorDiv: return *r == 0 ? std::nullopt : std::optional<long long>(floor_div(*l, *r));
          case IROp::Mod: return *r == 0 ? std::nullopt : std::optional<long long>(floor_mod(*l, *r));
          default: return std::nullopt;
        }
      }
      return std::nullopt;
    };
    auto v = fold(lowered, fold);
    if (!v) throw NonConstantLoopBoundError(e->pos);
    return *v;
  }

  const std::map<std::string, bool>* userFunctions = nullptr;
};

}  // namespace lowerdetail

/// Lowers a parsed program under the given command-line arguments. The
/// result's entry expression is closed: no argument references remain and
/// every counted loop has constant bounds.
inline ir::LoweredUnit lower(const ast::Program& p, const CliArgs& cliArgs) {
  ir::LoweredUnit unit;
  std::map<std::string, bool> fnNames;
  for (const auto& fn : p.functions) fnNames[fn.name] = true;
  lowerdetail::Lowerer lo{cliArgs};
  lo.userFunctions = &fnNames;
  for (const auto& fn : p.functions) {
    ir::LoweredFunction lf;
    lf.params = fn.params;
    lf.pos = fn.pos;
    lf.body = lo.block(fn.body, 0, fn.pos);
    unit.functions.emplace(fn.name, std::move(lf));
  }
  SourcePos entryPos{p.file, 1, 1, 0};
  unit.entry = lo.block(p.entry, 0, entryPos);
  return unit;
}

}  // namespace shapecheck
