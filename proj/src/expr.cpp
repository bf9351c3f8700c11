#include <fiq/errors.hpp>
#include <fiq/expr.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace fiq {

namespace {

using Node = PotentialExpr::Node;
using Op = PotentialExpr::Op;

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  Node run() {
    skip();
    if (pos_ >= s_.size()) throw SyntaxError("empty expression", pos_);
    Node n = expr();
    skip();
    if (pos_ != s_.size()) throw SyntaxError("unexpected character '" + std::string(1, s_[pos_]) + "'", pos_);
    return n;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) throw SyntaxError(std::string("expected '") + c + "'", pos_);
  }

  static Node binary(Op op, Node a, Node b) { return Node{op, 0.0, {std::move(a), std::move(b)}}; }

  Node expr() {
    Node n = term();
    for (;;) {
      if (eat('+')) n = binary(Op::add, std::move(n), term());
      else if (eat('-')) n = binary(Op::sub, std::move(n), term());
      else return n;
    }
  }

  Node term() {
    Node n = factor();
    for (;;) {
      if (eat('*')) n = binary(Op::mul, std::move(n), factor());
      else if (eat('/')) n = binary(Op::div, std::move(n), factor());
      else return n;
    }
  }

  Node factor() {
    if (eat('-')) return Node{Op::neg, 0.0, {factor()}};
    Node a = atom();
    if (eat('^')) {
      skip();
      const double p = number(true);
      return Node{Op::pow, p, {std::move(a)}};
    }
    return a;
  }

  double number(bool allow_sign) {
    skip();
    const std::size_t start = pos_;
    if (allow_sign && pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
    bool digits = false;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_, digits = true;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_, digits = true;
    }
    if (!digits) throw SyntaxError("expected a number", start);
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '-' || s_[p] == '+')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    return std::strtod(std::string(s_.substr(start, pos_ - start)).c_str(), nullptr);
  }

  Node atom() {
    skip();
    if (pos_ >= s_.size()) throw SyntaxError("unexpected end of expression", pos_);
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Node{Op::constant, number(false), {}};
    if (c == '(') {
      ++pos_;
      Node n = expr();
      expect(')');
      return n;
    }
    if (c == '|') {
      ++pos_;
      skip();
      if (pos_ < s_.size() && (s_[pos_] == 'x' || s_[pos_] == 'r')) ++pos_;
      else throw SyntaxError("expected 'x' inside '|...|'", pos_);
      expect('|');
      return Node{Op::abs_var, 0.0, {}};
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string_view word = s_.substr(start, pos_ - start);
      if (word == "x" || word == "r") return Node{Op::var, 0.0, {}};
      Op op;
      if (word == "ln") op = Op::ln;
      else if (word == "exp") op = Op::exp;
      else if (word == "sqrt") op = Op::sqrt;
      else if (word == "abs") op = Op::abs;
      else throw SyntaxError("unknown identifier '" + std::string(word) + "'", start);
      expect('(');
      Node n = expr();
      expect(')');
      return Node{op, 0.0, {std::move(n)}};
    }
    throw SyntaxError("unexpected character '" + std::string(1, c) + "'", pos_);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

template <class T>
double value_of(const T& v) {
  if constexpr (std::is_same_v<T, Dual>) return v.v;
  else return v;
}

template <class T>
T evaluate(const Node& n, const T& x) {
  using std::abs, std::exp, std::log, std::pow, std::sqrt;
  switch (n.op) {
    case Op::constant: return T(n.value);
    case Op::var: return x;
    case Op::abs_var: return abs(x);
    case Op::add: return evaluate(n.kids[0], x) + evaluate(n.kids[1], x);
    case Op::sub: return evaluate(n.kids[0], x) - evaluate(n.kids[1], x);
    case Op::mul: return evaluate(n.kids[0], x) * evaluate(n.kids[1], x);
    case Op::div: {
      const T d = evaluate(n.kids[1], x);
      if (value_of(d) == 0.0) throw DomainError("division by zero");
      return evaluate(n.kids[0], x) / d;
    }
    case Op::neg: return -evaluate(n.kids[0], x);
    case Op::pow: {
      const T b = evaluate(n.kids[0], x);
      const double p = n.value;
      if (value_of(b) < 0.0 && p != std::floor(p)) throw DomainError("negative base with fractional exponent");
      if (value_of(b) == 0.0 && p < 0.0) throw DomainError("zero base with negative exponent");
      if (p == std::floor(p) && std::abs(p) <= 8.0) {
        T r(1.0);
        for (int i = 0; i < static_cast<int>(std::abs(p)); ++i) r = r * b;
        return p < 0.0 ? T(1.0) / r : r;
      }
      return pow(b, p);
    }
    case Op::ln: {
      const T a = evaluate(n.kids[0], x);
      if (!(value_of(a) > 0.0)) throw DomainError("ln of a non-positive value");
      return log(a);
    }
    case Op::exp: return exp(evaluate(n.kids[0], x));
    case Op::sqrt: {
      const T a = evaluate(n.kids[0], x);
      if (value_of(a) < 0.0) throw DomainError("sqrt of a negative value");
      return sqrt(a);
    }
    case Op::abs: return abs(evaluate(n.kids[0], x));
  }
  return T(0.0);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string print_node(const Node& n) {
  switch (n.op) {
    case Op::constant: return fmt(n.value);
    case Op::var: return "x";
    case Op::abs_var: return "|x|";
    case Op::add: return "(" + print_node(n.kids[0]) + "+" + print_node(n.kids[1]) + ")";
    case Op::sub: return "(" + print_node(n.kids[0]) + "-" + print_node(n.kids[1]) + ")";
    case Op::mul: return "(" + print_node(n.kids[0]) + "*" + print_node(n.kids[1]) + ")";
    case Op::div: return "(" + print_node(n.kids[0]) + "/" + print_node(n.kids[1]) + ")";
    case Op::neg: return "(-" + print_node(n.kids[0]) + ")";
    case Op::pow: return "(" + print_node(n.kids[0]) + ")^" + fmt(n.value);
    case Op::ln: return "ln(" + print_node(n.kids[0]) + ")";
    case Op::exp: return "exp(" + print_node(n.kids[0]) + ")";
    case Op::sqrt: return "sqrt(" + print_node(n.kids[0]) + ")";
    case Op::abs: return "abs(" + print_node(n.kids[0]) + ")";
  }
  return "";
}

bool has_var(const Node& n) {
  if (n.op == Op::var || n.op == Op::abs_var) return true;
  for (const auto& k : n.kids)
    if (has_var(k)) return true;
  return false;
}

}  // namespace

PotentialExpr PotentialExpr::parse(std::string_view src) {
  PotentialExpr e;
  e.root_ = Parser(src).run();
  e.source_ = std::string(src);
  return e;
}

double PotentialExpr::eval(double x) const { return evaluate(root_, x); }
Dual PotentialExpr::eval(const Dual& x) const { return evaluate(root_, x); }
std::string PotentialExpr::print() const { return print_node(root_); }

Field PotentialExpr::field() const {
  if (!has_var(root_)) return Field::constant(eval(0.0));
  auto root = std::make_shared<const Node>(root_);
  return Field([root](const Dual& t) { return evaluate(*root, t); }, source_);
}

Potential PotentialExpr::potential() const { return Potential(field()); }

}  // namespace fiq
