#pragma once

#include <fiq/dual.hpp>
#include <fiq/field.hpp>

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace fiq {

// Potential expression over the variable x (or r = |x| for radial measures).
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | atom ('^' number)?
//   atom   := number | 'x' | 'r' | '|x|' | fn '(' expr ')' | '(' expr ')'
//   fn     := ln | exp | sqrt | abs
class PotentialExpr {
 public:
  enum class Op { constant, var, abs_var, add, sub, mul, div, pow, neg, ln, exp, sqrt, abs };

  struct Node {
    Op op = Op::constant;
    double value = 0.0;
    std::vector<Node> kids;
  };

  static PotentialExpr parse(std::string_view src);

  double eval(double x) const;
  Dual eval(const Dual& x) const;
  // Canonical, fully parenthesized text that parses back to the same tree.
  std::string print() const;
  const std::string& source() const { return source_; }
  const Node& root() const { return root_; }

  Field field() const;
  Potential potential() const;

 private:
  Node root_;
  std::string source_;
};

}  // namespace fiq
