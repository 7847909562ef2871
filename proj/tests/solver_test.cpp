#include <gtest/gtest.h>

#include <random>

#include "shapecheck/smtlib.hpp"
#include "shapecheck/solver.hpp"

using namespace shapecheck;

namespace {

Constraint mk(Formula f, ConstraintKind kind, int gen) {
  Constraint c;
  c.formula = f;
  c.reduced = f;
  c.kind = kind;
  c.genIndex = gen;
  return c;
}

ConstraintSet set_of(std::initializer_list<Constraint> cs) {
  ConstraintSet out;
  for (const auto& c : cs) out.push(c);
  return out;
}

TEST(Elaborate, PointwiseShapeEquality) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  Sym b = pool.fresh(Sort::Num, "b");
  // (a,3) = (2,b)
  Formula f = fatom(beq(ValueExpr(stuple({nsym(a), nconst(3)})), ValueExpr(stuple({nconst(2), nsym(b)}))));
  ConstraintSet cs = set_of({mk(f, ConstraintKind::Hard, 0)});
  Elaboration elab = elaborate(cs);
  ASSERT_TRUE(elab.ok) << elab.failReason;
  SatResult r = check_sat({elab.hard[0].formula});
  ASSERT_EQ(r.status, SatStatus::Sat);
  EXPECT_EQ(std::get<long long>(r.model.at(a.id)), 2);
  EXPECT_EQ(std::get<long long>(r.model.at(b.id)), 3);
}

TEST(Elaborate, GroundShapeMismatchIsFalse) {
  Formula f = fatom(beq(ValueExpr(stuple_of({256, 1181})), ValueExpr(stuple_of({256, 4}))));
  ConstraintSet cs = set_of({mk(f, ConstraintKind::Soft, 0)});
  Elaboration elab = elaborate(cs);
  ASSERT_TRUE(elab.ok);
  const bool* k = formula_const(elab.soft[0].formula);
  ASSERT_NE(k, nullptr);
  EXPECT_FALSE(*k);
}

TEST(Elaborate, OpaqueShapeSymbolDegrades) {
  SymbolPool pool;
  Sym s = pool.fresh(Sort::Shape, "s");
  Formula f = fatom(beq(ValueExpr(ssym(s)), ValueExpr(stuple_of({2, 3}))));
  ConstraintSet cs = set_of({mk(f, ConstraintKind::Soft, 0)});
  Elaboration elab = elaborate(cs);
  EXPECT_FALSE(elab.ok);
  PathVerdict v = analyze_path(cs);
  EXPECT_EQ(v.kind, PathVerdict::Kind::DontKnow);
}

TEST(CheckSat, DirectContradiction) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  std::vector<Formula> fs{fatom(beq(ValueExpr(nsym(a)), ValueExpr(nconst(1)))),
                          fatom(beq(ValueExpr(nsym(a)), ValueExpr(nconst(2))))};
  EXPECT_EQ(check_sat(fs).status, SatStatus::Unsat);
}

TEST(CheckSat, ChannelCounterexample) {
  SymbolPool pool;
  Sym c = pool.fresh(Sort::Num, "c");
  std::vector<Formula> fs{fatom(band(ble(nconst(1), nsym(c)), ble(nsym(c), nconst(4)))),
                          fnot(fatom(beq(ValueExpr(nsym(c)), ValueExpr(nconst(1)))))};
  SatResult r = check_sat(fs);
  ASSERT_EQ(r.status, SatStatus::Sat);
  long long v = std::get<long long>(r.model.at(c.id));
  EXPECT_GE(v, 2);
  EXPECT_LE(v, 4);
  EXPECT_EQ(v, 2);  // lexicographically smallest counterexample
}

TEST(CheckSat, ResidueContradiction) {
  SymbolPool pool;
  Sym n = pool.fresh(Sort::Num, "N");
  Sym r = pool.fresh(Sort::Num, "R");
  std::vector<Formula> fs{fatom(beq(ValueExpr(nsym(r)), ValueExpr(nmod(nsym(n), nconst(64))))),
                          fatom(blt(nconst(0), nsym(r))), fatom(blt(nsym(r), nconst(64))),
                          fatom(beq(ValueExpr(nsym(r)), ValueExpr(nconst(64))))};
  EXPECT_EQ(check_sat(fs).status, SatStatus::Unsat);
}

TEST(CheckSat, ForallExpansionOverGroundBounds) {
  SymbolPool pool;
  Sym k = pool.fresh(Sort::Num, "k");
  Sym a = pool.fresh(Sort::Num, "a");
  // forall k in [0,3]. k < a   with  a <= 3  -> unsat; a <= 4 -> sat(a=4)
  Formula all = fforall(k, nconst(0), nconst(3), fatom(blt(nsym(k), nsym(a))));
  EXPECT_EQ(check_sat({all, fatom(ble(nsym(a), nconst(3)))}).status, SatStatus::Unsat);
  SatResult r = check_sat({all, fatom(ble(nsym(a), nconst(4)))});
  ASSERT_EQ(r.status, SatStatus::Sat);
  EXPECT_EQ(std::get<long long>(r.model.at(a.id)), 4);
}

TEST(AnalyzePath, EmptySetsAreValid) {
  EXPECT_EQ(analyze_path(ConstraintSet{}).kind, PathVerdict::Kind::Valid);
}

TEST(AnalyzePath, ChannelScenarioInvalidWithWitness) {
  SymbolPool pool;
  Sym c = pool.fresh(Sort::Num, "channels");
  ConstraintSet cs = set_of(
      {mk(fatom(band(ble(nconst(1), nsym(c)), ble(nsym(c), nconst(4)))), ConstraintKind::Hard, 0),
       mk(fatom(beq(ValueExpr(simplify_num(nmul(nconst(784), nsym(c)), {})), ValueExpr(nconst(784)))),
          ConstraintKind::Soft, 1)});
  PathVerdict v = analyze_path(cs);
  ASSERT_EQ(v.kind, PathVerdict::Kind::Invalid);
  long long w = std::get<long long>(v.model.at(c.id));
  EXPECT_GE(w, 2);
  EXPECT_LE(w, 4);
  ASSERT_TRUE(v.firstViolation.has_value());
  EXPECT_EQ(v.firstViolation->genIndex, 1);
}

TEST(AnalyzePath, UnreachableTakesPrecedenceOverInvalid) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  ConstraintSet cs = set_of({mk(fatom(beq(ValueExpr(nsym(a)), ValueExpr(nconst(1)))), ConstraintKind::Hard, 0),
                             mk(fatom(beq(ValueExpr(nsym(a)), ValueExpr(nconst(2)))), ConstraintKind::Hard, 1),
                             mk(fatom(bfalse()), ConstraintKind::Soft, 2)});
  EXPECT_EQ(analyze_path(cs).kind, PathVerdict::Kind::Unreachable);
}

TEST(AnalyzePath, FirstViolationHasMinimalGenIndex) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  // hard 0<=a<=5; soft#1 a<10 (never violated), soft#2 a=0, soft#3 a<0
  ConstraintSet cs = set_of(
      {mk(fatom(band(ble(nconst(0), nsym(a)), ble(nsym(a), nconst(5)))), ConstraintKind::Hard, 0),
       mk(fatom(blt(nsym(a), nconst(10))), ConstraintKind::Soft, 1),
       mk(fatom(beq(ValueExpr(nsym(a)), ValueExpr(nconst(0)))), ConstraintKind::Soft, 2),
       mk(fatom(blt(nsym(a), nconst(0))), ConstraintKind::Soft, 3)});
  PathVerdict v = analyze_path(cs);
  ASSERT_EQ(v.kind, PathVerdict::Kind::Invalid);
  ASSERT_TRUE(v.firstViolation.has_value());
  // under any model, soft#3 is false; soft#2 false unless a=0. Minimality:
  // no soft with smaller genIndex may be false under the returned model.
  for (const auto& c : cs.all()) {
    if (c.kind != ConstraintKind::Soft) continue;
    if (c.genIndex >= v.firstViolation->genIndex) continue;
    EXPECT_TRUE(eval_formula(c.formula, v.model));
  }
}

TEST(Smtlib, ScriptShapeAndDeterminism) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "alpha");
  ConstraintSet cs = set_of(
      {mk(fatom(band(ble(nconst(1), nsym(a)), ble(nsym(a), nconst(4)))), ConstraintKind::Hard, 0),
       mk(fatom(beq(ValueExpr(nsym(a)), ValueExpr(nconst(1)))), ConstraintKind::Soft, 1)});
  std::string script = emit_smtlib(cs, &pool);
  EXPECT_NE(script.find("(set-logic QF_NIA)"), std::string::npos);
  EXPECT_NE(script.find("(declare-const s0_alpha Int)"), std::string::npos);
  EXPECT_NE(script.find("(assert"), std::string::npos);
  EXPECT_NE(script.find("(check-sat)"), std::string::npos);
  EXPECT_NE(script.find("(get-model)"), std::string::npos);
  // the exported query is H and not S: internally sat (alpha in 2..4)
  EXPECT_EQ(analyze_path(cs).kind, PathVerdict::Kind::Invalid);
  EXPECT_EQ(script, emit_smtlib(cs, &pool));  // byte-identical across runs
}

TEST(Smtlib, EmptySetIsBareCheckSat) {
  std::string script = emit_smtlib(ConstraintSet{});
  EXPECT_EQ(script.find("declare-const"), std::string::npos);
  EXPECT_EQ(script.find("assert"), std::string::npos);
  EXPECT_NE(script.find("(check-sat)"), std::string::npos);
}

TEST(Smtlib, UnresolvedRankThrows) {
  SymbolPool pool;
  Sym s = pool.fresh(Sort::Shape, "s");
  ConstraintSet cs =
      set_of({mk(fatom(beq(ValueExpr(ssym(s)), ValueExpr(stuple_of({2, 3})))), ConstraintKind::Soft, 0)});
  EXPECT_THROW(emit_smtlib(cs), UnresolvedRankError);
}

TEST(Summarize, VerdictMixes) {
  using K = PathVerdict::Kind;
  auto pv = [](K k) {
    PathVerdict v;
    v.kind = k;
    return v;
  };
  EXPECT_EQ(summarize({pv(K::Valid), pv(K::Unreachable)}), ProgramVerdict::NoError);
  EXPECT_EQ(summarize({pv(K::Valid), pv(K::Invalid)}), ProgramVerdict::ShapeError);
  EXPECT_EQ(summarize({pv(K::DontKnow)}), ProgramVerdict::Inconclusive);
  EXPECT_EQ(summarize({pv(K::Invalid), pv(K::DontKnow)}), ProgramVerdict::ShapeError);
}

// ---- randomized oracle equivalence ----

struct OracleGen {
  std::mt19937_64 rng;
  SymbolPool pool;
  std::vector<Sym> syms;
  std::vector<long long> domainHi;  // each symbol ranges over [0, hi]

  explicit OracleGen(uint64_t seed) : rng(seed) {}

  long long pick(long long lo, long long hi) {
    return lo + static_cast<long long>(rng() % static_cast<unsigned long long>(hi - lo + 1));
  }

  NumExpr lin() {
    NumExpr e = nconst(pick(-4, 4));
    for (Sym s : syms)
      if (rng() % 2 == 0) e = nadd(e, nmul(nconst(pick(-3, 3)), nsym(s)));
    return e;
  }

  BoolExpr atom() {
    switch (rng() % 6) {
      case 0: return blt(lin(), lin());
      case 1: return beq(ValueExpr(lin()), ValueExpr(lin()));
      case 2: {
        Sym s = syms[rng() % syms.size()];
        return beq(ValueExpr(nsym(s)), ValueExpr(nmod(lin(), nconst(pick(2, 7)))));
      }
      case 3: {
        Sym s = syms[rng() % syms.size()];
        Sym t = syms[rng() % syms.size()];
        return beq(ValueExpr(stuple({nsym(s), nconst(pick(0, 3))})),
                   ValueExpr(stuple({nconst(pick(0, 3)), nsym(t)})));
      }
      case 4: return bnot(blt(lin(), lin()));
      default: {
        Sym s = syms[rng() % syms.size()];
        Sym t = syms[rng() % syms.size()];
        return beq(ValueExpr(nmul(nsym(s), nsym(t))), ValueExpr(lin()));
      }
    }
  }

  BoolExpr clause() {
    BoolExpr a = atom();
    if (rng() % 3 == 0) return bor(a, atom());
    if (rng() % 3 == 0) return band(a, atom());
    return a;
  }

  ConstraintSet gen() {
    syms.clear();
    domainHi.clear();
    int k = static_cast<int>(pick(1, 3));
    long long joint = 1;
    for (int i = 0; i < k; ++i) {
      long long hi = pick(1, 9);
      while (joint * (hi + 1) > 10000) hi = hi / 2;
      joint *= hi + 1;
      syms.push_back(pool.fresh(Sort::Num, "x" + std::to_string(i)));
      domainHi.push_back(hi);
    }
    ConstraintSet cs;
    int gen = 0;
    for (int i = 0; i < k; ++i) {
      cs.push(mk(fatom(ble(nconst(0), nsym(syms[static_cast<size_t>(i)]))), ConstraintKind::Hard, gen++));
      cs.push(mk(fatom(ble(nsym(syms[static_cast<size_t>(i)]), nconst(domainHi[static_cast<size_t>(i)]))),
                 ConstraintKind::Hard, gen++));
    }
    int extra = static_cast<int>(pick(1, 4));
    for (int i = 0; i < extra; ++i) {
      ConstraintKind kind = rng() % 3 == 0 ? ConstraintKind::Hard : ConstraintKind::Soft;
      cs.push(mk(fatom(clause()), kind, gen++));
    }
    return cs;
  }

  // Exhaustive enumeration over the bounded domains.
  PathVerdict::Kind oracle(const ConstraintSet& cs) {
    std::vector<long long> v(syms.size(), 0);
    bool anyHard = false;
    bool anyInvalid = false;
    bool softsEmpty = cs.soft().empty();
    auto hardOk = [&](const Assignment& a) {
      for (const auto& c : cs.all()) {
        if (c.kind != ConstraintKind::Hard) continue;
        try {
          if (!eval_formula(c.formula, a)) return false;
        } catch (const EvalError&) {
          return false;
        }
      }
      return true;
    };
    auto someSoftFalse = [&](const Assignment& a) {
      for (const auto& c : cs.all()) {
        if (c.kind != ConstraintKind::Soft) continue;
        try {
          if (!eval_formula(c.formula, a)) return true;
        } catch (const EvalError&) {
          continue;
        }
      }
      return false;
    };
    while (true) {
      Assignment a;
      for (size_t i = 0; i < syms.size(); ++i) a[syms[i].id] = v[i];
      if (hardOk(a)) {
        anyHard = true;
        if (someSoftFalse(a)) anyInvalid = true;
      }
      size_t i = 0;
      for (; i < v.size(); ++i) {
        if (v[i] < domainHi[i]) {
          ++v[i];
          break;
        }
        v[i] = 0;
      }
      if (i == v.size()) break;
    }
    if (!anyHard) return PathVerdict::Kind::Unreachable;
    if (softsEmpty) return PathVerdict::Kind::Valid;
    return anyInvalid ? PathVerdict::Kind::Invalid : PathVerdict::Kind::Valid;
  }
};

TEST(OracleEquivalence, RandomConstraintSets) {
  OracleGen gen(777);
  for (int trial = 0; trial < 200; ++trial) {
    ConstraintSet cs = gen.gen();
    PathVerdict got = analyze_path(cs);
    PathVerdict::Kind expected = gen.oracle(cs);
    ASSERT_EQ(got.kind, expected) << "trial " << trial;
    if (got.kind == PathVerdict::Kind::Invalid) {
      // model satisfies hard, falsifies the reported first violation
      for (const auto& c : cs.all())
        if (c.kind == ConstraintKind::Hard) EXPECT_TRUE(eval_formula(c.formula, got.model));
      ASSERT_TRUE(got.firstViolation.has_value());
      EXPECT_FALSE(eval_formula(got.firstViolation->formula, got.model));
      for (const auto& c : cs.all()) {
        if (c.kind != ConstraintKind::Soft || c.genIndex >= got.firstViolation->genIndex) continue;
        bool holds = true;
        try {
          holds = eval_formula(c.formula, got.model);
        } catch (const EvalError&) {
          continue;
        }
        EXPECT_TRUE(holds) << "non-minimal first violation at trial " << trial;
      }
    }
  }
}

}  // namespace
