#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace shapecheck {

/// Position of a token / node in a source file. Lines and columns are 1-based;
/// span is the character count of the underlying text.
struct SourcePos {
  std::string file;
  int line = 1;
  int column = 1;
  int span = 0;

  bool operator==(const SourcePos&) const = default;

  std::string str() const {
    return file + ":" + std::to_string(line) + ":" + std::to_string(column);
  }
};

/// A single diagnostic with a position.
struct Diag {
  SourcePos pos;
  std::string message;

  std::string str() const { return pos.str() + ": " + message; }
};

class Error : public std::runtime_error {
 public:
  explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}
};

/// Parse failure; carries every syntax error found, not just the first.
class ParseError : public Error {
 public:
  explicit ParseError(std::vector<Diag> diags)
      : Error(join(diags)), diags_(std::move(diags)) {}

  const std::vector<Diag>& diags() const { return diags_; }

 private:
  static std::string join(const std::vector<Diag>& ds) {
    std::string out;
    for (const auto& d : ds) {
      if (!out.empty()) out += "\n";
      out += d.str();
    }
    return out;
  }
  std::vector<Diag> diags_;
};

/// Cyclic call graph (the surface language forbids recursion).
class RecursionError : public Error {
 public:
  RecursionError(std::string cyclePath, SourcePos pos)
      : Error("recursive call cycle: " + cyclePath), cycle_(std::move(cyclePath)), pos_(std::move(pos)) {}
  const std::string& cycle() const { return cycle_; }
  const SourcePos& pos() const { return pos_; }

 private:
  std::string cycle_;
  SourcePos pos_;
};

class LoweringError : public Error {
 public:
  LoweringError(std::string msg, SourcePos pos) : Error(pos.str() + ": " + msg), pos_(std::move(pos)) {}
  const SourcePos& pos() const { return pos_; }

 private:
  SourcePos pos_;
};

class MissingArgumentError : public LoweringError {
 public:
  MissingArgumentError(const std::string& name, SourcePos pos)
      : LoweringError("missing command-line argument '" + name + "'", pos), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class NonConstantLoopBoundError : public LoweringError {
 public:
  explicit NonConstantLoopBoundError(SourcePos pos)
      : LoweringError("loop bound does not reduce to an integer constant", pos) {}
};

class SortError : public Error {
 public:
  SortError(std::string msg, SourcePos pos) : Error(pos.str() + ": " + msg), pos_(std::move(pos)) {}
  SortError(std::string msg) : Error(std::move(msg)) {}
  const SourcePos& pos() const { return pos_; }

 private:
  SourcePos pos_;
};

class UnboundVariableError : public Error {
 public:
  UnboundVariableError(const std::string& name, SourcePos pos)
      : Error(pos.str() + ": unbound variable '" + name + "'") {}
};

class ArityMismatchError : public Error {
 public:
  ArityMismatchError(std::string msg, SourcePos pos) : Error(pos.str() + ": " + msg) {}
};

/// Ground evaluation failures.
class EvalError : public Error {
 public:
  enum class Code { IndexOutOfRange, DivisionByZero, UnboundSymbol, SortMismatch };
  EvalError(Code code, std::string msg) : Error(std::move(msg)), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string fieldPath, std::string msg)
      : Error("config: " + fieldPath + ": " + msg), field_(std::move(fieldPath)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class UnresolvedRankError : public Error {
 public:
  explicit UnresolvedRankError(std::string msg) : Error(std::move(msg)) {}
};

}  // namespace shapecheck
