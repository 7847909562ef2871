#include <gtest/gtest.h>

#include <random>

#include "shapecheck/constraint.hpp"
#include "shapecheck/expr.hpp"
#include "shapecheck/expr_ops.hpp"

using namespace shapecheck;

namespace {

std::vector<long long> shape(std::initializer_list<long long> dims) { return dims; }

TEST(Substitute, ReplacesBoundNumberSymbol) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  NumExpr e = nadd(nsym(a), nconst(1));
  Binding b{{a.id, nconst(2)}};
  NumExpr r = substitute(e, b);
  EXPECT_TRUE(expr_eq(r, nadd(nconst(2), nconst(1))));
}

TEST(Substitute, ReplacesShapeSymbolUnderRank) {
  SymbolPool pool;
  Sym s = pool.fresh(Sort::Shape, "s");
  NumExpr e = nrank(ssym(s));
  Binding b{{s.id, stuple_of({3, 4})}};
  NumExpr r = substitute(e, b);
  EXPECT_TRUE(expr_eq(r, nrank(stuple_of({3, 4}))));
  EXPECT_EQ(eval_num(r, {}), 2);
}

TEST(Substitute, LeavesUnboundSymbolsUntouched) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  Sym b = pool.fresh(Sort::Num, "b");
  NumExpr e = nadd(nsym(a), nsym(b));
  NumExpr r = substitute(e, Binding{{a.id, nconst(7)}});
  auto syms = free_symbols(r);
  EXPECT_EQ(syms.size(), 1u);
  EXPECT_EQ(syms.begin()->id, b.id);
}

TEST(Substitute, SortMismatchThrows) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  NumExpr e = nsym(a);
  Binding b{{a.id, stuple_of({2})}};
  EXPECT_THROW(substitute(e, b), SortError);
}

// The Forall binder shadows bindings: enumerate a two-symbol instance against
// a hand-rolled evaluator to confirm no capture happens.
TEST(Substitute, ForallBinderIsNotCaptured) {
  SymbolPool pool;
  Sym beta = pool.fresh(Sort::Num, "beta");
  Sym alpha = pool.fresh(Sort::Num, "alpha");
  // forall beta in [0,5]. beta < alpha
  Formula f = fforall(beta, nconst(0), nconst(5), fatom(blt(nsym(beta), nsym(alpha))));

  // Substituting the binder itself must not touch bound occurrences.
  Formula g = substitute(f, Binding{{beta.id, nconst(99)}});
  EXPECT_TRUE(formula_eq(f, g));

  // Substituting alpha behaves like the hand-rolled semantics.
  Formula h = substitute(f, Binding{{alpha.id, nconst(3)}});
  auto byHand = [](long long alphaVal) {
    for (long long k = 0; k <= 5; ++k)
      if (!(k < alphaVal)) return false;
    return true;
  };
  EXPECT_EQ(eval_formula(h, {}), byHand(3));
  for (long long v = 0; v <= 7; ++v) {
    Formula inst = substitute(f, Binding{{alpha.id, nconst(v)}});
    EXPECT_EQ(eval_formula(inst, {}), byHand(v)) << "alpha=" << v;
  }
}

TEST(FreeSymbols, TupleWithSymbol) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  ShapeExpr s = stuple({nsym(a), nconst(3)});
  auto syms = free_symbols(s);
  ASSERT_EQ(syms.size(), 1u);
  EXPECT_EQ(syms.begin()->id, a.id);
}

TEST(FreeSymbols, ForallBinderExcluded) {
  SymbolPool pool;
  Sym beta = pool.fresh(Sort::Num, "beta");
  Sym alpha = pool.fresh(Sort::Num, "alpha");
  Formula f = fforall(beta, nconst(0), nconst(5), fatom(blt(nsym(beta), nsym(alpha))));
  auto syms = free_symbols(f);
  ASSERT_EQ(syms.size(), 1u);
  EXPECT_EQ(syms.begin()->id, alpha.id);
}

TEST(FreeSymbols, ConstHasNone) {
  EXPECT_TRUE(free_symbols(nconst(7)).empty());
}

TEST(ConcreteEval, ProdCountsElements) {
  EXPECT_EQ(eval_num(nprod(stuple_of({2, 3, 4})), {}), 24);
}

TEST(ConcreteEval, SliceDropsLeadingAxis) {
  auto r = eval_shape(sslice(stuple_of({2, 3, 4}), nconst(1), nconst(3)), {});
  EXPECT_EQ(r, shape({3, 4}));
}

TEST(ConcreteEval, IndexOutOfRangeIsAnError) {
  try {
    eval_num(nindex(stuple_of({2, 3, 4}), nconst(3)), {});
    FAIL() << "expected EvalError";
  } catch (const EvalError& e) {
    EXPECT_EQ(e.code(), EvalError::Code::IndexOutOfRange);
  }
}

TEST(ConcreteEval, SliceOutOfRangeIsAnError) {
  try {
    eval_shape(sslice(stuple_of({2, 3}), nconst(1), nconst(5)), {});
    FAIL() << "expected EvalError";
  } catch (const EvalError& e) {
    EXPECT_EQ(e.code(), EvalError::Code::IndexOutOfRange);
  }
}

TEST(ConcreteEval, FloorDivisionAndModulo) {
  EXPECT_EQ(eval_num(nfdiv(nconst(-7), nconst(2)), {}), -4);
  EXPECT_EQ(eval_num(nmod(nconst(-7), nconst(2)), {}), 1);
  EXPECT_EQ(eval_num(nfdiv(nconst(7), nconst(-2)), {}), -4);
  EXPECT_EQ(eval_num(nmod(nconst(7), nconst(-2)), {}), -1);
  try {
    eval_num(nfdiv(nconst(1), nconst(0)), {});
    FAIL() << "expected EvalError";
  } catch (const EvalError& e) {
    EXPECT_EQ(e.code(), EvalError::Code::DivisionByZero);
  }
}

// eval(substitute(e, rho1), rho2) == eval(e, rho1 ∪ rho2) for disjoint domains.
TEST(ConcreteEval, SubstituteComposesWithEval) {
  std::mt19937_64 rng(7);
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  Sym b = pool.fresh(Sort::Num, "b");
  for (int trial = 0; trial < 500; ++trial) {
    long long va = static_cast<long long>(rng() % 21) - 10;
    long long vb = static_cast<long long>(rng() % 21) - 10;
    NumExpr e = nadd(nmul(nsym(a), nconst(3)), nsub(nsym(b), nsym(a)));
    Binding rho1{{a.id, nconst(va)}};
    Assignment rho2{{b.id, vb}};
    Assignment full{{a.id, va}, {b.id, vb}};
    EXPECT_EQ(eval_num(substitute(e, rho1), rho2), eval_num(e, full));
  }
}

// Concat/Slice algebra checked by randomized ground evaluation.
TEST(ShapeAlgebra, RandomizedLaws) {
  std::mt19937_64 rng(11);
  auto randShape = [&rng]() {
    std::vector<NumExpr> dims;
    size_t rank = rng() % 4;
    for (size_t i = 0; i < rank; ++i) dims.push_back(nconst(static_cast<long long>(rng() % 7)));
    return stuple(std::move(dims));
  };
  for (int trial = 0; trial < 300; ++trial) {
    ShapeExpr s1 = randShape();
    ShapeExpr s2 = randShape();
    ShapeExpr cat = sconcat(s1, s2);
    Assignment empty;
    // rank(s1@s2) = rank(s1) + rank(s2)
    EXPECT_EQ(eval_num(nrank(cat), empty), eval_num(nrank(s1), empty) + eval_num(nrank(s2), empty));
    // (s1@s2)[0:rank(s1)] = s1
    EXPECT_EQ(eval_shape(sslice(cat, nconst(0), nrank(s1)), empty), eval_shape(s1, empty));
    // prod(s1@s2) = prod(s1)*prod(s2)
    EXPECT_EQ(eval_num(nprod(cat), empty), eval_num(nprod(s1), empty) * eval_num(nprod(s2), empty));
    // s[0:rank(s)] = s
    EXPECT_EQ(eval_shape(sslice(s1, nconst(0), nrank(s1)), empty), eval_shape(s1, empty));
  }
}

TEST(Sexpr, CanonicalForms) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "batch@f.tsl:1:1");
  EXPECT_EQ(to_sexpr(nadd(nsym(a), nconst(1))), "(+ n0 1)");
  EXPECT_EQ(to_sexpr(nadd(nsym(a), nconst(1)), &pool), "(+ batch@f.tsl:1:1 1)");
  EXPECT_EQ(to_sexpr(stuple_of({2, 3})), "(shape 2 3)");
  EXPECT_EQ(to_sexpr(beq(ValueExpr(nconst(1)), ValueExpr(nconst(2)))), "(= 1 2)");
  EXPECT_EQ(to_sexpr(fforall(a, nconst(0), nconst(5), fatom(blt(nsym(a), nconst(9))))),
            "(forall n0 0 5 (< n0 9))");
}

TEST(ValueExpr, EqualityAcrossSortsThrows) {
  EXPECT_THROW(beq(ValueExpr(nconst(1)), ValueExpr(stuple_of({1}))), SortError);
}

TEST(ConstraintSet, UnionPreservesOrder) {
  ConstraintSet a;
  ConstraintSet b;
  Constraint c1;
  c1.formula = fatom(btrue());
  c1.kind = ConstraintKind::Hard;
  c1.genIndex = 0;
  Constraint c2 = c1;
  c2.kind = ConstraintKind::Soft;
  c2.genIndex = 1;
  Constraint c3 = c1;
  c3.genIndex = 2;
  a.push(c1);
  a.push(c2);
  b.push(c3);
  a.unionWith(b);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a.all()[0].genIndex, 0);
  EXPECT_EQ(a.all()[1].genIndex, 1);
  EXPECT_EQ(a.all()[2].genIndex, 2);
  EXPECT_EQ(a.hard().size(), 2u);
  EXPECT_EQ(a.soft().size(), 1u);
}

}  // namespace
