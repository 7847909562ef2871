#pragma once

// Surface AST for the .tsl kernel language: a deterministic Python-like
// subset with functions, assignments, if/else, counted and dataset loops,
// and tensor-op calls.

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "shapecheck/source_pos.hpp"

namespace shapecheck::ast {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinOp { Add, Sub, Mul, FloorDiv, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or };
enum class UnOp { Neg, Not };

struct IntLit { long long value; };
struct BoolLit { bool value; };
struct StrLit { std::string value; };
struct Name { std::string id; };
struct ArgRef { std::string name; };  // args.<name>
struct Unary { UnOp op; ExprPtr operand; };
struct Bin { BinOp op; ExprPtr lhs, rhs; };
struct Call {
  std::string callee;
  std::vector<ExprPtr> args;
  std::vector<std::pair<std::string, ExprPtr>> kwargs;
};
struct IndexSuffix { ExprPtr base; ExprPtr index; };
struct SliceSuffix { ExprPtr base; ExprPtr lo, hi; };
struct ShapeAttr { ExprPtr base; };  // <expr>.shape

struct Expr {
  std::variant<IntLit, BoolLit, StrLit, Name, ArgRef, Unary, Bin, Call, IndexSuffix, SliceSuffix, ShapeAttr> v;
  SourcePos pos;
};

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;
using Block = std::vector<StmtPtr>;

struct Assign { std::string name; ExprPtr value; };
struct ExprStmt { ExprPtr expr; };
struct If { ExprPtr cond; Block thenBlock; std::optional<Block> elseBlock; };
struct For { std::string var; ExprPtr iter; Block body; };  // range(...) or a dataset value
struct Return { ExprPtr value; };
struct Pass {};

struct Stmt {
  std::variant<Assign, ExprStmt, If, For, Return, Pass> v;
  SourcePos pos;
};

struct FuncDef {
  std::string name;
  std::vector<std::string> params;
  Block body;
  SourcePos pos;
};

struct Program {
  std::string file;
  std::vector<FuncDef> functions;
  Block entry;

  const FuncDef* findFunction(const std::string& name) const {
    for (const auto& f : functions)
      if (f.name == name) return &f;
    return nullptr;
  }
};

template <typename T>
ExprPtr expr(T node, SourcePos pos) {
  return std::make_shared<Expr>(Expr{std::move(node), std::move(pos)});
}

template <typename T>
StmtPtr stmt(T node, SourcePos pos) {
  return std::make_shared<Stmt>(Stmt{std::move(node), std::move(pos)});
}

}  // namespace shapecheck::ast
