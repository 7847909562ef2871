#include <gtest/gtest.h>

#include "differential.hpp"
#include "shapecheck/expr_ops.hpp"
#include "shapecheck/shapeops.hpp"

using namespace shapecheck;

namespace {

struct Applied {
  RuleOutput out;
  SymbolPool pool;
};

RuleResult apply_raw(const std::string& op, const std::vector<ValueExpr>& args, SymbolPool& pool,
                     const std::string& strArg = "") {
  OpContext c;
  c.pool = &pool;
  c.origin = SourcePos{"ops.tsl", 3, 7, 0};
  c.strArg = strArg;
  const OpRule* rule = OpCatalog::instance().lookup(op);
  EXPECT_NE(rule, nullptr) << op;
  return rule->apply(args, c);
}

RuleOutput apply_ok(const std::string& op, const std::vector<ValueExpr>& args, SymbolPool& pool,
                    const std::string& strArg = "") {
  RuleResult r = apply_raw(op, args, pool, strArg);
  const auto* out = std::get_if<RuleOutput>(&r);
  EXPECT_NE(out, nullptr) << op << ": " << (out == nullptr ? std::get<RuleError>(r).message : "");
  return out != nullptr ? *out : RuleOutput{};
}

ValueExpr sv(std::initializer_list<long long> dims) { return ValueExpr(stuple_of(dims)); }
ValueExpr nv(long long v) { return ValueExpr(nconst(v)); }

std::vector<long long> result_shape(const RuleOutput& out) {
  return std::get<std::vector<long long>>(concrete_eval(*out.value, {}));
}

bool all_soft_true(const RuleOutput& out) {
  for (const auto& c : out.constraints) {
    if (c.kind != ConstraintKind::Soft) continue;
    if (!eval_formula(c.formula, {})) return false;
  }
  return true;
}

bool any_soft_false(const RuleOutput& out) {
  for (const auto& c : out.constraints) {
    if (c.kind != ConstraintKind::Soft) continue;
    Formula f = simplify_formula(c.formula, {});
    const bool* k = formula_const(f);
    if (k != nullptr && !*k) return true;
  }
  return false;
}

TEST(Mm, MatchingInnerDims) {
  SymbolPool pool;
  RuleOutput out = apply_ok("mm", {sv({3, 4}), sv({4, 5})}, pool);
  EXPECT_EQ(result_shape(out), (std::vector<long long>{3, 5}));
  EXPECT_TRUE(all_soft_true(out));
}

TEST(Mm, MismatchedInnerDimsEmitFalseConstraint) {
  SymbolPool pool;
  RuleOutput out = apply_ok("mm", {sv({3, 5}), sv({4, 5})}, pool);
  EXPECT_EQ(result_shape(out), (std::vector<long long>{3, 5}));
  EXPECT_TRUE(any_soft_false(out));  // 5 = 4
}

TEST(Mm, UnitMatrices) {
  SymbolPool pool;
  RuleOutput out = apply_ok("mm", {sv({1, 1}), sv({1, 1})}, pool);
  EXPECT_EQ(result_shape(out), (std::vector<long long>{1, 1}));
  EXPECT_TRUE(all_soft_true(out));
}

TEST(Reshape, InfersMinusOne) {
  SymbolPool pool;
  RuleOutput out = apply_ok("reshape", {sv({16, 1, 28, 28}), nv(16), nv(-1)}, pool);
  EXPECT_EQ(result_shape(out), (std::vector<long long>{16, 784}));
  EXPECT_TRUE(all_soft_true(out));
}

TEST(Reshape, ElementCountMismatch) {
  SymbolPool pool;
  RuleOutput out = apply_ok("reshape", {sv({3, 28, 28}), nv(784)}, pool);
  EXPECT_TRUE(any_soft_false(out));  // 2352 = 784
}

TEST(Reshape, SymbolicIdentityIsTriviallyTrue) {
  SymbolPool pool;
  Sym a = pool.fresh(Sort::Num, "a");
  RuleOutput out = apply_ok("reshape", {ValueExpr(stuple({nsym(a)})), ValueExpr(nsym(a))}, pool);
  // prod equality a = a reduces to true; only positivity remains symbolic
  for (const auto& c : out.constraints) {
    Formula f = simplify_formula(c.formula, {});
    const bool* k = formula_const(f);
    EXPECT_TRUE(k == nullptr || *k);
  }
}

TEST(Reshape, MultipleInferredDimsRejected) {
  SymbolPool pool;
  RuleResult r = apply_raw("reshape", {sv({4, 4}), nv(-1), nv(-1)}, pool);
  const auto* err = std::get_if<RuleError>(&r);
  ASSERT_NE(err, nullptr);
  EXPECT_EQ(err->code, RuleError::Code::MultipleInferredDims);
}

TEST(Transpose, SwapsOuterAxes) {
  SymbolPool pool;
  RuleOutput out = apply_ok("transpose", {sv({2, 3, 4}), nv(0), nv(2)}, pool);
  EXPECT_EQ(result_shape(out), (std::vector<long long>{4, 3, 2}));
  EXPECT_TRUE(all_soft_true(out));
}

TEST(Transpose, MatrixTranspose) {
  SymbolPool pool;
  RuleOutput out = apply_ok("transpose", {sv({2, 3}), nv(0), nv(1)}, pool);
  EXPECT_EQ(result_shape(out), (std::vector<long long>{3, 2}));
}

TEST(Transpose, EqualAxesViolateStrictOrder) {
  SymbolPool pool;
  RuleOutput out = apply_ok("transpose", {sv({2, 3}), nv(1), nv(1)}, pool);
  EXPECT_TRUE(any_soft_false(out));
}

TEST(ReadImage, FreshDimsWithChannelRange) {
  SymbolPool pool;
  RuleOutput out = apply_ok("readImage", {}, pool);
  ASSERT_TRUE(out.value.has_value());
  const auto* s = std::get_if<ShapeExpr>(&*out.value);
  ASSERT_NE(s, nullptr);
  ASSERT_NE(as_tuple(*s), nullptr);
  EXPECT_EQ(as_tuple(*s)->dims.size(), 3u);
  ASSERT_EQ(out.constraints.size(), 3u);
  for (const auto& c : out.constraints) EXPECT_EQ(c.kind, ConstraintKind::Hard);
  // channel symbol admits 1..4 and nothing else
  Sym ch{0, Sort::Num};
  EXPECT_TRUE(eval_formula(out.constraints[0].formula, {{ch.id, 1LL}}));
  EXPECT_TRUE(eval_formula(out.constraints[0].formula, {{ch.id, 4LL}}));
  EXPECT_FALSE(eval_formula(out.constraints[0].formula, {{ch.id, 0LL}}));
  EXPECT_FALSE(eval_formula(out.constraints[0].formula, {{ch.id, 5LL}}));
}

TEST(RandInt, BoundsAreHard) {
  SymbolPool pool;
  RuleOutput out = apply_ok("randint", {nv(0), nv(1)}, pool);
  ASSERT_EQ(out.constraints.size(), 1u);
  EXPECT_EQ(out.constraints[0].kind, ConstraintKind::Hard);
  EXPECT_TRUE(eval_formula(out.constraints[0].formula, {{0, 0LL}}));
  EXPECT_TRUE(eval_formula(out.constraints[0].formula, {{0, 1LL}}));
  EXPECT_FALSE(eval_formula(out.constraints[0].formula, {{0, 2LL}}));
}

TEST(RandInt, DegenerateIntervalForcesValue) {
  SymbolPool pool;
  RuleOutput out = apply_ok("randint", {nv(5), nv(5)}, pool);
  EXPECT_TRUE(eval_formula(out.constraints[0].formula, {{0, 5LL}}));
  EXPECT_FALSE(eval_formula(out.constraints[0].formula, {{0, 4LL}}));
}

TEST(RandInt, EmptyIntervalIsContradiction) {
  SymbolPool pool;
  RuleOutput out = apply_ok("randint", {nv(1), nv(0)}, pool);
  ConstraintSet cs;
  Constraint c;
  c.formula = out.constraints[0].formula;
  c.kind = ConstraintKind::Hard;
  cs.push(c);
  bool contradiction = false;
  propagate(cs, &contradiction);
  EXPECT_TRUE(contradiction);
}

TEST(Broadcast, RightAlignedOneExpansion) {
  SymbolPool pool;
  RuleOutput out = apply_ok("broadcast", {sv({8, 1, 5}), sv({8, 4, 5})}, pool);
  EXPECT_EQ(result_shape(out), (std::vector<long long>{8, 4, 5}));
  EXPECT_TRUE(all_soft_true(out));
}

TEST(Broadcast, EqualShapesPass) {
  SymbolPool pool;
  RuleOutput out = apply_ok("broadcast", {sv({4, 5}), sv({4, 5})}, pool);
  EXPECT_EQ(result_shape(out), (std::vector<long long>{4, 5}));
}

TEST(Broadcast, IncompatibleLeadingDim) {
  SymbolPool pool;
  RuleOutput out = apply_ok("broadcast", {sv({3, 4}), sv({5, 4})}, pool);
  EXPECT_TRUE(any_soft_false(out));  // 3 = 5
}

TEST(Broadcast, UnknownRankDegrades) {
  SymbolPool pool;
  Sym s = pool.fresh(Sort::Shape, "s");
  RuleResult r = apply_raw("broadcast", {ValueExpr(ssym(s)), sv({2, 2})}, pool);
  const auto* err = std::get_if<RuleError>(&r);
  ASSERT_NE(err, nullptr);
  EXPECT_EQ(err->code, RuleError::Code::DontKnowRank);
}

TEST(NllLoss, ShapeMismatchFromLstmCase) {
  SymbolPool pool;
  RuleOutput out = apply_ok("nll_loss", {sv({256, 4, 1181}), sv({256, 4})}, pool);
  EXPECT_EQ(result_shape(out), (std::vector<long long>{}));
  EXPECT_TRUE(any_soft_false(out));  // (256,1181) = (256,4)
}

TEST(NllLoss, FixedVariantsPass) {
  SymbolPool pool;
  EXPECT_TRUE(all_soft_true(apply_ok("nll_loss", {sv({1024, 1181}), sv({1024})}, pool)));
  EXPECT_TRUE(all_soft_true(apply_ok("nll_loss", {sv({1, 2}), sv({1})}, pool)));
}

TEST(Conv2d, GroundArithmetic) {
  SymbolPool pool;
  RuleOutput out = apply_ok("conv2d", {sv({16, 1, 28, 28}), nv(1), nv(32), nv(3), nv(1), nv(0), nv(1)}, pool);
  EXPECT_EQ(result_shape(out), (std::vector<long long>{16, 32, 26, 26}));
  EXPECT_TRUE(all_soft_true(out));
}

TEST(Conv2d, ChannelMismatch) {
  SymbolPool pool;
  RuleOutput out = apply_ok("conv2d", {sv({16, 3, 28, 28}), nv(1), nv(32), nv(3)}, pool);
  EXPECT_TRUE(any_soft_false(out));  // 3 = 1
}

TEST(Conv2d, FullWindowCollapsesSpatialDims) {
  SymbolPool pool;
  RuleOutput out = apply_ok("conv2d", {sv({2, 3, 9, 9}), nv(3), nv(8), nv(9), nv(1), nv(0), nv(1)}, pool);
  EXPECT_EQ(result_shape(out), (std::vector<long long>{2, 8, 1, 1}));
  EXPECT_TRUE(all_soft_true(out));
}

TEST(Cat, GroundConcatAlongAxis) {
  SymbolPool pool;
  RuleOutput out = apply_ok("cat", {sv({2, 3}), sv({2, 5}), nv(1)}, pool);
  EXPECT_EQ(result_shape(out), (std::vector<long long>{2, 8}));
  EXPECT_TRUE(all_soft_true(out));
}

TEST(Cat, SymbolicBatchDoubles) {
  SymbolPool pool;
  Sym b = pool.fresh(Sort::Num, "B");
  Sym n = pool.fresh(Sort::Num, "N");
  ValueExpr t = ValueExpr(stuple({nsym(b), nsym(n)}));
  RuleOutput out = apply_ok("cat", {t, t, nv(0)}, pool);
  const auto* s = std::get_if<ShapeExpr>(&*out.value);
  ASSERT_NE(s, nullptr);
  const auto* tup = as_tuple(*s);
  ASSERT_NE(tup, nullptr);
  ASSERT_EQ(tup->dims.size(), 2u);
  EXPECT_TRUE(expr_eq(tup->dims[0], simplify_num(nmul(nconst(2), nsym(b)), {})));
  EXPECT_TRUE(expr_eq(tup->dims[1], nsym(n)));
}

TEST(Cat, SingletonListIsIdentity) {
  SymbolPool pool;
  RuleOutput out = apply_ok("cat", {sv({3}), nv(0)}, pool);
  EXPECT_EQ(result_shape(out), (std::vector<long long>{3}));
  EXPECT_TRUE(all_soft_true(out));
}

TEST(CatalogLookup, KnownAndUnknownOps) {
  EXPECT_NE(OpCatalog::instance().lookup("mm"), nullptr);
  EXPECT_EQ(OpCatalog::instance().lookup("frobnicate"), nullptr);
}

TEST(Diag, OffsetBoundFollowsFirstDim) {
  SymbolPool pool;
  Sym b = pool.fresh(Sort::Num, "b");
  Sym off = pool.fresh(Sort::Num, "off");
  NumExpr twoB = simplify_num(nmul(nconst(2), nsym(b)), {});
  ValueExpr sim = ValueExpr(stuple({twoB, twoB}));
  RuleOutput out = apply_ok("diag", {sim, ValueExpr(nsym(off))}, pool);
  // soft -2B <= off <= 2B
  bool found = false;
  for (const auto& c : out.constraints) {
    if (c.kind != ConstraintKind::Soft) continue;
    // satisfied inside the band, violated outside
    Assignment inside{{b.id, 10LL}, {off.id, 20LL}};
    Assignment edgeLo{{b.id, 10LL}, {off.id, -20LL}};
    Assignment outside{{b.id, 10LL}, {off.id, 21LL}};
    if (eval_formula(c.formula, inside) && eval_formula(c.formula, edgeLo) &&
        !eval_formula(c.formula, outside))
      found = true;
  }
  EXPECT_TRUE(found);
}

TEST(Dataset, KnownStubPinsLengthAndItemShape) {
  SymbolPool pool;
  RuleResult r = apply_raw("dataset", {nv(64)}, pool, "MNIST");
  const auto* out = std::get_if<RuleOutput>(&r);
  ASSERT_NE(out, nullptr);
  ASSERT_TRUE(out->epoch.has_value());
  EXPECT_EQ(*as_const(out->epoch->length), 60000);
  EXPECT_EQ(std::get<std::vector<long long>>(concrete_eval(ValueExpr(out->epoch->itemShape), {})),
            (std::vector<long long>{1, 28, 28}));
  EXPECT_FALSE(out->epoch->dropLast);
}

TEST(Dataset, UnknownPathGetsSymbolicLength) {
  SymbolPool pool;
  RuleResult r = apply_raw("dataset", {nv(256)}, pool, "custom_data");
  const auto* out = std::get_if<RuleOutput>(&r);
  ASSERT_NE(out, nullptr);
  EXPECT_EQ(as_const(out->epoch->length), nullptr);
  bool hasLenBound = false;
  for (const auto& c : out->constraints)
    if (c.kind == ConstraintKind::Hard) hasLenBound = true;
  EXPECT_TRUE(hasLenBound);
}

TEST(Dataset, ConfigOverrideWins) {
  SymbolPool pool;
  DatasetOverrides ov;
  ov["MNIST"] = DatasetSpec{std::optional<long long>(100), std::vector<long long>{2, 2}};
  OpContext c;
  c.pool = &pool;
  c.origin = SourcePos{"ops.tsl", 1, 1, 0};
  c.strArg = "MNIST";
  c.datasets = &ov;
  RuleResult r = OpCatalog::instance().lookup("dataset")->apply(std::vector<ValueExpr>{nv(10)}, c);
  const auto* out = std::get_if<RuleOutput>(&r);
  ASSERT_NE(out, nullptr);
  EXPECT_EQ(*as_const(out->epoch->length), 100);
}

TEST(MaskSelect, FreshLengthAndShapeEquality) {
  SymbolPool pool;
  RuleOutput out = apply_ok("mask_select", {sv({4, 4}), sv({4, 4})}, pool);
  const auto* s = std::get_if<ShapeExpr>(&*out.value);
  ASSERT_NE(s, nullptr);
  ASSERT_NE(as_tuple(*s), nullptr);
  EXPECT_EQ(as_tuple(*s)->dims.size(), 1u);  // unknown-length 1-D result
}

TEST(EmissionPurity, GroundConformantInputsEmitOnlyGroundTrueConstraints) {
  SymbolPool pool;
  RuleOutput out = apply_ok("mm", {sv({3, 4}), sv({4, 5})}, pool);
  for (const auto& c : out.constraints) {
    Formula f = simplify_formula(c.formula, {});
    const bool* k = formula_const(f);
    ASSERT_NE(k, nullptr);
    EXPECT_TRUE(*k);
  }
}

TEST(Catalog, MarkdownTableCoversAllOps) {
  std::string md = OpCatalog::instance().markdown();
  for (const auto* r : OpCatalog::instance().all())
    EXPECT_NE(md.find("`" + r->name + "`"), std::string::npos) << r->name;
}

TEST(Differential, AllOpsAgreeWithReference) {
  difftest::Driver driver(2024);
  auto stats = driver.runAll(300);
  for (const auto& [op, st] : stats) {
    EXPECT_EQ(st.mismatches, 0) << op << ": " << st.firstError;
    EXPECT_GT(st.trials, 0) << op;
  }
}

}  // namespace
