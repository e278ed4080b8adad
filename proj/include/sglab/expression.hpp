#pragma once

// Arithmetic expressions for user-supplied Nemytskii functions f(x, y), b(x, y).
//
// Grammar:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | primary
//   primary := number | 'pi' | 'x' | 'x1' | 'x2' | 'x3' | 'y'
//            | ('sin' | 'cos' | 'exp' | 'tanh') '(' expr ')' | '(' expr ')'

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sglab {

struct ExpressionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Expression {
 public:
  static Expression parse(std::string_view text) {
    Parser p{text, 0, {}};
    Expression e;
    e.text_ = std::string(text);
    e.root_ = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
    e.nodes_ = std::make_shared<const std::vector<Node>>(std::move(p.nodes));
    return e;
  }

  /// x holds the spatial coordinates; `x` aliases x1.
  double operator()(std::span<const double> x, double y) const { return eval(root_, x, y); }

  const std::string& text() const { return text_; }

  /// True when the expression never reads y.
  bool state_independent() const {
    for (const auto& n : *nodes_)
      if (n.op == Op::var_y) return false;
    return true;
  }

 private:
  enum class Op { constant, var_x, var_y, neg, add, sub, mul, div, sin, cos, exp, tanh };

  struct Node {
    Op op;
    double value = 0.0;  // constant, or coordinate index for var_x
    int lhs = -1;
    int rhs = -1;
  };

  struct Parser {
    std::string_view s;
    std::size_t pos;
    std::vector<Node> nodes;

    [[noreturn]] void fail(const std::string& msg) const {
      throw ExpressionError("expression '" + std::string(s) + "' at column " + std::to_string(pos + 1) + ": " + msg);
    }

    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    int add(Node n) {
      nodes.push_back(n);
      return static_cast<int>(nodes.size()) - 1;
    }

    int parse_expr() {
      int lhs = parse_term();
      for (;;) {
        skip_ws();
        if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
          const Op op = s[pos] == '+' ? Op::add : Op::sub;
          ++pos;
          lhs = add({op, 0.0, lhs, parse_term()});
        } else {
          return lhs;
        }
      }
    }

    int parse_term() {
      int lhs = parse_unary();
      for (;;) {
        skip_ws();
        if (pos < s.size() && (s[pos] == '*' || s[pos] == '/')) {
          const Op op = s[pos] == '*' ? Op::mul : Op::div;
          ++pos;
          lhs = add({op, 0.0, lhs, parse_unary()});
        } else {
          return lhs;
        }
      }
    }

    int parse_unary() {
      skip_ws();
      if (pos < s.size() && s[pos] == '-') {
        ++pos;
        return add({Op::neg, 0.0, parse_unary(), -1});
      }
      if (pos < s.size() && s[pos] == '+') {
        ++pos;
        return parse_unary();
      }
      return parse_primary();
    }

    int parse_primary() {
      skip_ws();
      if (pos >= s.size()) fail("unexpected end of input");
      const char c = s[pos];
      if (c == '(') {
        ++pos;
        const int inner = parse_expr();
        expect(')');
        return inner;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const std::string rest(s.substr(pos));
        char* end = nullptr;
        const double v = std::strtod(rest.c_str(), &end);
        if (end == rest.c_str()) fail("malformed number");
        pos += static_cast<std::size_t>(end - rest.c_str());
        return add({Op::constant, v});
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
        const std::string_view id = s.substr(start, pos - start);
        if (id == "pi") return add({Op::constant, std::numbers::pi});
        if (id == "y") return add({Op::var_y});
        if (id == "x" || id == "x1") return add({Op::var_x, 0.0});
        if (id == "x2") return add({Op::var_x, 1.0});
        if (id == "x3") return add({Op::var_x, 2.0});
        Op fn;
        if (id == "sin") fn = Op::sin;
        else if (id == "cos") fn = Op::cos;
        else if (id == "exp") fn = Op::exp;
        else if (id == "tanh") fn = Op::tanh;
        else {
          pos = start;
          fail("unknown identifier '" + std::string(id) + "'");
        }
        expect('(');
        const int arg = parse_expr();
        expect(')');
        return add({fn, 0.0, arg, -1});
      }
      fail("unexpected '" + std::string(1, c) + "'");
    }

    void expect(char c) {
      skip_ws();
      if (pos >= s.size() || s[pos] != c) fail(std::string("expected '") + c + "'");
      ++pos;
    }
  };

  double eval(int id, std::span<const double> x, double y) const {
    const Node& n = (*nodes_)[static_cast<std::size_t>(id)];
    switch (n.op) {
      case Op::constant: return n.value;
      case Op::var_x: {
        const auto k = static_cast<std::size_t>(n.value);
        if (k >= x.size()) throw ExpressionError("expression '" + text_ + "': coordinate out of range");
        return x[k];
      }
      case Op::var_y: return y;
      case Op::neg: return -eval(n.lhs, x, y);
      case Op::add: return eval(n.lhs, x, y) + eval(n.rhs, x, y);
      case Op::sub: return eval(n.lhs, x, y) - eval(n.rhs, x, y);
      case Op::mul: return eval(n.lhs, x, y) * eval(n.rhs, x, y);
      case Op::div: return eval(n.lhs, x, y) / eval(n.rhs, x, y);
      case Op::sin: return std::sin(eval(n.lhs, x, y));
      case Op::cos: return std::cos(eval(n.lhs, x, y));
      case Op::exp: return std::exp(eval(n.lhs, x, y));
      case Op::tanh: return std::tanh(eval(n.lhs, x, y));
    }
    return 0.0;
  }

  std::string text_;
  std::shared_ptr<const std::vector<Node>> nodes_;
  int root_ = -1;
};

}  // namespace sglab
