#include <gtest/gtest.h>

#include "generators.hpp"
#include "shapecheck/simplify.hpp"

using namespace shapecheck;

namespace {

Constraint mk(Formula f, ConstraintKind kind, int gen = 0) {
  Constraint c;
  c.formula = f;
  c.reduced = f;
  c.kind = kind;
  c.genIndex = gen;
  return c;
}

TEST(Simplify, ProdOfGroundTupleFolds) {
  NumExpr r = simplify_num(nprod(stuple_of({2, 3, 4})), {});
  EXPECT_TRUE(expr_eq(r, nconst(24)));
}

TEST(Simplify, SliceRankLaw) {
  SymbolPool pool;
  Sym s = pool.fresh(Sort::Shape, "s");
  // rank(s[1:rank(s)]) -> rank(s) - 1
  NumExpr e = nrank(sslice(ssym(s), nconst(1), nrank(ssym(s))));
  NumExpr r = simplify_num(e, {});
  NumExpr expect = nsub(nrank(ssym(s)), nconst(1));
  EXPECT_TRUE(expr_eq(r, simplify_num(expect, {}))) << to_sexpr(r);
}

TEST(Simplify, StrictSelfComparisonIsFalse) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  BoolExpr r = simplify_bool(blt(nsym(a), nsym(a)), {});
  ASSERT_NE(as_const(r), nullptr);
  EXPECT_FALSE(*as_const(r));
}

TEST(Simplify, NormalFormMergesLikeTerms) {
  SymbolPool pool;
  Sym b = pool.fresh(Sort::Num, "B");
  // B*1 == B
  EXPECT_TRUE(expr_eq(simplify_num(nmul(nsym(b), nconst(1)), {}), nsym(b)));
  // B+B == 2*B
  EXPECT_TRUE(expr_eq(simplify_num(nadd(nsym(b), nsym(b)), {}),
                      simplify_num(nmul(nconst(2), nsym(b)), {})));
  // x+0, x*0
  EXPECT_TRUE(expr_eq(simplify_num(nadd(nsym(b), nconst(0)), {}), nsym(b)));
  EXPECT_TRUE(expr_eq(simplify_num(nmul(nsym(b), nconst(0)), {}), nconst(0)));
}

TEST(Simplify, ModOfMultipleFolds) {
  SymbolPool pool;
  Sym n = pool.fresh(Sort::Num, "n");
  // (256*n) % 256 -> 0
  NumExpr e = nmod(nmul(nconst(256), nsym(n)), nconst(256));
  EXPECT_TRUE(expr_eq(simplify_num(e, {}), nconst(0)));
  // x % 1 -> 0
  EXPECT_TRUE(expr_eq(simplify_num(nmod(nsym(n), nconst(1)), {}), nconst(0)));
}

TEST(Simplify, DivisionByPossiblyZeroLeftUnreduced) {
  SymbolPool pool;
  Sym n = pool.fresh(Sort::Num, "n");
  NumExpr e = nfdiv(nconst(0), nsym(n));
  EXPECT_TRUE(expr_eq(simplify_num(e, {}), e));
}

TEST(Simplify, IntervalContextResolvesComparisons) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  IntervalCtx ctx{{a.id, Interval{1, 4}}};
  BoolExpr r = simplify_bool(blt(nsym(a), nconst(5)), ctx);
  ASSERT_NE(as_const(r), nullptr);
  EXPECT_TRUE(*as_const(r));
  // singleton interval folds the symbol itself
  IntervalCtx pin{{a.id, Interval::point(3)}};
  EXPECT_TRUE(expr_eq(simplify_num(nsym(a), pin), nconst(3)));
}

TEST(Simplify, ShapeEqualityElaboratesGroundTuples) {
  BoolExpr r = simplify_bool(beq(ValueExpr(stuple_of({256, 1181})), ValueExpr(stuple_of({256, 4}))), {});
  ASSERT_NE(as_const(r), nullptr);
  EXPECT_FALSE(*as_const(r));
}

TEST(Propagate, InputRangeBounds) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  ConstraintSet cs;
  // 1 <= a <= 4 encoded with < and not-<
  cs.push(mk(fatom(ble(nconst(1), nsym(a))), ConstraintKind::Hard, 0));
  cs.push(mk(fatom(ble(nsym(a), nconst(4))), ConstraintKind::Hard, 1));
  auto ctx = propagate(cs);
  ASSERT_TRUE(ctx.count(a.id));
  EXPECT_EQ(ctx[a.id], (Interval{1, 4}));
}

TEST(Propagate, EqualityChainsPinSymbols) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  Sym b = pool.fresh(Sort::Num, "b");
  ConstraintSet cs;
  cs.push(mk(fatom(beq(ValueExpr(nsym(a)), ValueExpr(nsym(b)))), ConstraintKind::Hard, 0));
  cs.push(mk(fatom(beq(ValueExpr(nsym(b)), ValueExpr(nconst(3)))), ConstraintKind::Hard, 1));
  auto ctx = propagate(cs);
  EXPECT_EQ(ctx[a.id], Interval::point(3));
  EXPECT_EQ(ctx[b.id], Interval::point(3));
}

TEST(Propagate, ModuloResidueBounds) {
  SymbolPool pool;
  Sym n = pool.fresh(Sort::Num, "N");
  Sym r = pool.fresh(Sort::Num, "R");
  ConstraintSet cs;
  // R = N % 64, 0 < R < 64  ->  R:[1,63]
  cs.push(mk(fatom(beq(ValueExpr(nsym(r)), ValueExpr(nmod(nsym(n), nconst(64))))), ConstraintKind::Hard, 0));
  cs.push(mk(fatom(blt(nconst(0), nsym(r))), ConstraintKind::Hard, 1));
  cs.push(mk(fatom(blt(nsym(r), nconst(64))), ConstraintKind::Hard, 2));
  auto ctx = propagate(cs);
  EXPECT_EQ(ctx[r.id], (Interval{1, 63}));
}

TEST(Propagate, ContradictionDetected) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  ConstraintSet cs;
  cs.push(mk(fatom(ble(nconst(1), nsym(a))), ConstraintKind::Hard, 0));
  cs.push(mk(fatom(ble(nsym(a), nconst(0))), ConstraintKind::Hard, 1));
  bool contradiction = false;
  propagate(cs, &contradiction);
  EXPECT_TRUE(contradiction);
}

TEST(OnlineCheck, GroundFalseSoftIsImmediateFail) {
  OnlineCheck r = online_check(fatom(beq(ValueExpr(nconst(120)), ValueExpr(nconst(80)))),
                               ConstraintKind::Soft, false, {}, false);
  EXPECT_EQ(r.disposition, Disposition::ImmediateFail);
}

TEST(OnlineCheck, GroundTrueIsTriviallyTrue) {
  OnlineCheck r = online_check(fatom(beq(ValueExpr(nconst(4)), ValueExpr(nconst(4)))),
                               ConstraintKind::Soft, false, {}, false);
  EXPECT_EQ(r.disposition, Disposition::TriviallyTrue);
}

TEST(OnlineCheck, IntervalKnowledgeJudgesSubsequentConstraints) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  IntervalCtx ctx{{a.id, Interval{1, 4}}};
  OnlineCheck r = online_check(fatom(blt(nsym(a), nconst(5))), ConstraintKind::Soft, false, ctx, false);
  EXPECT_EQ(r.disposition, Disposition::TriviallyTrue);
}

TEST(OnlineCheck, FalseUnderUnresolvedBranchIsRecorded) {
  OnlineCheck r = online_check(fatom(beq(ValueExpr(nconst(120)), ValueExpr(nconst(80)))),
                               ConstraintKind::Soft, false, {}, /*hasUnresolvedBranch=*/true);
  EXPECT_EQ(r.disposition, Disposition::Record);
}

TEST(OnlineCheck, ConstantBranchConditionResolves) {
  OnlineCheck r = online_check(fatom(beq(ValueExpr(nconst(1)), ValueExpr(nconst(1)))),
                               ConstraintKind::Hard, /*fromBranch=*/true, {}, false);
  EXPECT_EQ(r.disposition, Disposition::ResolvedBranch);
  EXPECT_TRUE(r.branchValue);
}

// Soundness: simplification preserves ground evaluation. Pairs whose original
// expression faults (index/slice out of range, zero divisor) are skipped.
TEST(SimplifySoundness, RandomizedPairs) {
  testgen::ExprGen gen(42);
  int checked = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    ValueExpr e = gen.genValue(4);
    Assignment rho = gen.genAssignment();
    GroundValue expected;
    try {
      expected = concrete_eval(e, rho);
    } catch (const EvalError&) {
      continue;
    }
    ValueExpr s = simplify(e, {});
    GroundValue got;
    try {
      got = concrete_eval(s, rho);
    } catch (const EvalError& err) {
      FAIL() << "simplified form faults: " << to_sexpr(e) << " -> " << to_sexpr(s) << ": " << err.what();
    }
    EXPECT_EQ(got, expected) << to_sexpr(e) << " -> " << to_sexpr(s);
    // Normal form is stable.
    ValueExpr s2 = simplify(s, {});
    EXPECT_TRUE(expr_eq(s, s2)) << to_sexpr(s) << " vs " << to_sexpr(s2);
    ++checked;
  }
  EXPECT_GT(checked, 10000);
}

// Context soundness: with intervals from propagate(H), any assignment
// satisfying H evaluates the simplified and original forms identically.
TEST(SimplifySoundness, ContextRespectsHardConstraints) {
  testgen::ExprGen gen(43);
  Sym a = gen.numSyms[0];
  Sym b = gen.numSyms[1];
  ConstraintSet cs;
  cs.push(mk(fatom(ble(nconst(0), nsym(a))), ConstraintKind::Hard, 0));
  cs.push(mk(fatom(ble(nsym(a), nconst(5))), ConstraintKind::Hard, 1));
  cs.push(mk(fatom(beq(ValueExpr(nsym(b)), ValueExpr(nconst(3)))), ConstraintKind::Hard, 2));
  auto ctx = propagate(cs);
  for (int trial = 0; trial < 5000; ++trial) {
    ValueExpr e = gen.genValue(3);
    Assignment rho = gen.genAssignment();
    rho[a.id] = static_cast<long long>(gen.rng() % 6);  // satisfy H
    rho[b.id] = 3;
    GroundValue expected;
    try {
      expected = concrete_eval(e, rho);
    } catch (const EvalError&) {
      continue;
    }
    ValueExpr s = simplify(e, ctx);
    try {
      EXPECT_EQ(concrete_eval(s, rho), expected) << to_sexpr(e) << " -> " << to_sexpr(s);
    } catch (const EvalError& err) {
      FAIL() << "simplified form faults: " << to_sexpr(e) << " -> " << to_sexpr(s) << ": " << err.what();
    }
  }
}

}  // namespace
