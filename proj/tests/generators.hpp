#pragma once

// Random expression / assignment generators shared by the property suites.

#include <random>
#include <vector>

#include "shapecheck/expr.hpp"
#include "shapecheck/expr_ops.hpp"

namespace shapecheck::testgen {

struct ExprGen {
  std::mt19937_64 rng;
  SymbolPool pool;
  std::vector<Sym> numSyms;
  std::vector<Sym> shapeSyms;
  std::vector<Sym> boolSyms;

  explicit ExprGen(uint64_t seed, int nNum = 3, int nShape = 2, int nBool = 1) : rng(seed) {
    for (int i = 0; i < nNum; ++i) numSyms.push_back(pool.fresh(Sort::Num, ""));
    for (int i = 0; i < nShape; ++i) shapeSyms.push_back(pool.fresh(Sort::Shape, ""));
    for (int i = 0; i < nBool; ++i) boolSyms.push_back(pool.fresh(Sort::Bool, ""));
  }

  long long pick(long long lo, long long hi) {
    return lo + static_cast<long long>(rng() % static_cast<unsigned long long>(hi - lo + 1));
  }

  NumExpr genNum(int depth) {
    if (depth <= 0 || rng() % 4 == 0) {
      if (!numSyms.empty() && rng() % 2 == 0)
        return nsym(numSyms[rng() % numSyms.size()]);
      return nconst(pick(-9, 9));
    }
    switch (rng() % 8) {
      case 0: return nadd(genNum(depth - 1), genNum(depth - 1));
      case 1: return nsub(genNum(depth - 1), genNum(depth - 1));
      case 2: return nmul(genNum(depth - 1), genNum(depth - 1));
      case 3: return nfdiv(genNum(depth - 1), genNum(depth - 1));
      case 4: return nmod(genNum(depth - 1), genNum(depth - 1));
      case 5: return nrank(genShape(depth - 1));
      case 6: return nindex(genShape(depth - 1), nconst(pick(0, 2)));
      default: return nprod(genShape(depth - 1));
    }
  }

  ShapeExpr genShape(int depth) {
    if (depth <= 0 || rng() % 3 == 0) {
      if (!shapeSyms.empty() && rng() % 3 == 0)
        return ssym(shapeSyms[rng() % shapeSyms.size()]);
      std::vector<NumExpr> dims;
      size_t rank = rng() % 4;
      for (size_t i = 0; i < rank; ++i) {
        if (depth > 0 && rng() % 4 == 0) dims.push_back(genNum(depth - 1));
        else dims.push_back(nconst(pick(0, 6)));
      }
      return stuple(std::move(dims));
    }
    switch (rng() % 3) {
      case 0: return sconcat(genShape(depth - 1), genShape(depth - 1));
      case 1: {
        long long lo = pick(0, 2);
        return sslice(genShape(depth - 1), nconst(lo), nconst(lo + pick(0, 2)));
      }
      default: {
        std::vector<NumExpr> dims;
        size_t rank = 1 + rng() % 3;
        for (size_t i = 0; i < rank; ++i) dims.push_back(genNum(depth - 1));
        return stuple(std::move(dims));
      }
    }
  }

  BoolExpr genBool(int depth) {
    if (depth <= 0 || rng() % 4 == 0) {
      if (!boolSyms.empty() && rng() % 3 == 0)
        return bsym(boolSyms[rng() % boolSyms.size()]);
      return bconst(rng() % 2 == 0);
    }
    switch (rng() % 6) {
      case 0: return band(genBool(depth - 1), genBool(depth - 1));
      case 1: return bor(genBool(depth - 1), genBool(depth - 1));
      case 2: return bnot(genBool(depth - 1));
      case 3: return beq(ValueExpr(genNum(depth - 1)), ValueExpr(genNum(depth - 1)));
      case 4: return beq(ValueExpr(genShape(depth - 1)), ValueExpr(genShape(depth - 1)));
      default: return blt(genNum(depth - 1), genNum(depth - 1));
    }
  }

  ValueExpr genValue(int depth) {
    switch (rng() % 3) {
      case 0: return genNum(depth);
      case 1: return genShape(depth);
      default: return genBool(depth);
    }
  }

  Assignment genAssignment() {
    Assignment a;
    for (Sym s : numSyms) a[s.id] = pick(-6, 6);
    for (Sym s : shapeSyms) {
      std::vector<long long> dims;
      size_t rank = rng() % 4;
      for (size_t i = 0; i < rank; ++i) dims.push_back(pick(0, 6));
      a[s.id] = dims;
    }
    for (Sym s : boolSyms) a[s.id] = (rng() % 2 == 0);
    return a;
  }
};

}  // namespace shapecheck::testgen
