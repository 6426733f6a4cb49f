#pragma once

// Small arithmetic expression trees parsed from strings. Used for
// user-defined generating functions and scalar density fields.
//
// Grammar (see docs/generators.md):
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
// Functions: pow, exp, log, dot, norm2. Identifiers resolve to bound
// variables, which may be scalars or vectors; the full expression must
// evaluate to a scalar.

#include <map>
#include <memory>
#include <string>

#include "gje/common.hpp"

namespace gje {

// A bound value: scalar or vector.
struct ExprValue {
  bool is_vec = false;
  double s = 0.0;
  Vec v;

  ExprValue() = default;
  ExprValue(double x) : s(x) {}                      // NOLINT: implicit by design
  ExprValue(const Vec& x) : is_vec(true), v(x) {}    // NOLINT
};

using ExprEnv = std::map<std::string, ExprValue>;

class Expression {
 public:
  // Throws ConfigError on syntax errors or unknown functions.
  static Expression parse(const std::string& text);

  // Throws ConfigError on unbound identifiers or type mismatches
  // (e.g. exp of a vector), Error on runtime domain faults (log of a
  // non-positive value).
  double eval(const ExprEnv& env) const;

  const std::string& text() const { return text_; }

  Expression() = default;

  struct Node;  // public for the parser/evaluator implementation

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace gje
