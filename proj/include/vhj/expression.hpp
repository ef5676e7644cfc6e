#pragma once

// Small closed-form expression language for sources and initial data.
//
// Grammar (usual precedence, '^' right associative):
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := ('+' | '-') unary | power
//   power  := atom ('^' unary)?
//   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
// Identifiers: x, y, r (= |x|), pi. Functions: abs sqrt exp log sin cos tan
// sinh cosh tanh.
//
// Evaluation is templated on the scalar so the same tree yields values and
// exact first derivatives through forward-mode dual numbers.

#include <array>
#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>

#include "vhj/errors.hpp"

namespace vhj {

/// Forward-mode dual number with a two-component gradient.
struct Dual {
  double v = 0.0;
  std::array<double, 2> d{0.0, 0.0};

  Dual() = default;
  Dual(double value) : v(value) {}
  Dual(double value, std::array<double, 2> grad) : v(value), d(grad) {}
};

inline Dual scale(const Dual &a, double s, double value) {
  return Dual(value, {a.d[0] * s, a.d[1] * s});
}
inline Dual operator+(const Dual &a, const Dual &b) {
  return Dual(a.v + b.v, {a.d[0] + b.d[0], a.d[1] + b.d[1]});
}
inline Dual operator-(const Dual &a, const Dual &b) {
  return Dual(a.v - b.v, {a.d[0] - b.d[0], a.d[1] - b.d[1]});
}
inline Dual operator-(const Dual &a) { return Dual(-a.v, {-a.d[0], -a.d[1]}); }
inline Dual operator*(const Dual &a, const Dual &b) {
  return Dual(a.v * b.v, {a.d[0] * b.v + a.v * b.d[0], a.d[1] * b.v + a.v * b.d[1]});
}
inline Dual operator/(const Dual &a, const Dual &b) {
  const double inv = 1.0 / b.v;
  const double q = a.v * inv;
  return Dual(q, {(a.d[0] - q * b.d[0]) * inv, (a.d[1] - q * b.d[1]) * inv});
}

namespace detail {

inline double value_of(double a) { return a; }
inline double value_of(const Dual &a) { return a.v; }

inline double fn_abs(double a) { return std::abs(a); }
inline Dual fn_abs(const Dual &a) {
  const double s = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
  return scale(a, s, std::abs(a.v));
}
inline double fn_sqrt(double a) { return std::sqrt(a); }
inline Dual fn_sqrt(const Dual &a) {
  const double s = std::sqrt(a.v);
  return scale(a, s > 0.0 ? 0.5 / s : 0.0, s);
}
inline double fn_exp(double a) { return std::exp(a); }
inline Dual fn_exp(const Dual &a) {
  const double e = std::exp(a.v);
  return scale(a, e, e);
}
inline double fn_log(double a) { return std::log(a); }
inline Dual fn_log(const Dual &a) { return scale(a, 1.0 / a.v, std::log(a.v)); }
inline double fn_sin(double a) { return std::sin(a); }
inline Dual fn_sin(const Dual &a) { return scale(a, std::cos(a.v), std::sin(a.v)); }
inline double fn_cos(double a) { return std::cos(a); }
inline Dual fn_cos(const Dual &a) { return scale(a, -std::sin(a.v), std::cos(a.v)); }
inline double fn_tan(double a) { return std::tan(a); }
inline Dual fn_tan(const Dual &a) {
  const double c = std::cos(a.v);
  return scale(a, 1.0 / (c * c), std::tan(a.v));
}
inline double fn_sinh(double a) { return std::sinh(a); }
inline Dual fn_sinh(const Dual &a) { return scale(a, std::cosh(a.v), std::sinh(a.v)); }
inline double fn_cosh(double a) { return std::cosh(a); }
inline Dual fn_cosh(const Dual &a) { return scale(a, std::sinh(a.v), std::cosh(a.v)); }
inline double fn_tanh(double a) { return std::tanh(a); }
inline Dual fn_tanh(const Dual &a) {
  const double t = std::tanh(a.v);
  return scale(a, 1.0 - t * t, t);
}

inline double fn_pow(double a, double b) { return std::pow(a, b); }
inline Dual fn_pow(const Dual &a, const Dual &b) {
  const bool const_exp = b.d[0] == 0.0 && b.d[1] == 0.0;
  const double p = std::pow(a.v, b.v);
  if (const_exp) {
    if (b.v == 0.0) return Dual(1.0);
    const double dp = b.v * std::pow(a.v, b.v - 1.0);
    return scale(a, dp, p);
  }
  // a^b = exp(b log a), valid for a > 0.
  const double la = std::log(a.v);
  Dual out(p);
  for (int k = 0; k < 2; ++k) out.d[k] = p * (b.d[k] * la + b.v * a.d[k] / a.v);
  return out;
}

} // namespace detail

/// Parsed closed-form expression in the variables x, y and r = sqrt(x^2+y^2).
class Expression {
public:
  Expression() = default;

  static Expression parse(std::string_view text) {
    Parser p{text, 0};
    Expression e;
    e.source_ = std::string(text);
    e.root_ = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size())
      throw ConfigurationError("expression: unexpected '" + std::string(text.substr(p.pos, 1)) +
                               "' at column " + std::to_string(p.pos + 1) + " in '" +
                               std::string(text) + "'");
    return e;
  }

  bool empty() const { return !root_; }
  const std::string &text() const { return source_; }

  double operator()(double x, double y = 0.0) const {
    const double r = std::hypot(x, y);
    return root_->eval(x, y, r);
  }

  /// Value and gradient at (x, y).
  Dual eval_dual(double x, double y = 0.0) const {
    const Dual xv(x, {1.0, 0.0});
    const Dual yv(y, {0.0, 1.0});
    const double rr = std::hypot(x, y);
    const Dual rv = rr > 0.0 ? Dual(rr, {x / rr, y / rr}) : Dual(0.0);
    return root_->eval(xv, yv, rv);
  }

private:
  struct Node {
    enum class Kind { Number, X, Y, R, Neg, Add, Sub, Mul, Div, Pow, Call } kind = Kind::Number;
    double number = 0.0;
    std::string fn;
    std::shared_ptr<const Node> a, b;

    template <class S> S eval(const S &x, const S &y, const S &r) const {
      using namespace detail;
      switch (kind) {
      case Kind::Number: return S(number);
      case Kind::X: return x;
      case Kind::Y: return y;
      case Kind::R: return r;
      case Kind::Neg: return -a->eval(x, y, r);
      case Kind::Add: return a->eval(x, y, r) + b->eval(x, y, r);
      case Kind::Sub: return a->eval(x, y, r) - b->eval(x, y, r);
      case Kind::Mul: return a->eval(x, y, r) * b->eval(x, y, r);
      case Kind::Div: return a->eval(x, y, r) / b->eval(x, y, r);
      case Kind::Pow: return fn_pow(a->eval(x, y, r), b->eval(x, y, r));
      case Kind::Call: {
        const S v = a->eval(x, y, r);
        if (fn == "abs") return fn_abs(v);
        if (fn == "sqrt") return fn_sqrt(v);
        if (fn == "exp") return fn_exp(v);
        if (fn == "log") return fn_log(v);
        if (fn == "sin") return fn_sin(v);
        if (fn == "cos") return fn_cos(v);
        if (fn == "tan") return fn_tan(v);
        if (fn == "sinh") return fn_sinh(v);
        if (fn == "cosh") return fn_cosh(v);
        return fn_tanh(v);
      }
      }
      return S(0.0);
    }
  };
  using NodePtr = std::shared_ptr<const Node>;

  struct Parser {
    std::string_view s;
    std::size_t pos;

    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool accept(char c) {
      skip_ws();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    [[noreturn]] void fail(const std::string &msg) const {
      throw ConfigurationError("expression: " + msg + " at column " + std::to_string(pos + 1) +
                               " in '" + std::string(s) + "'");
    }
    static NodePtr make(Node::Kind k, NodePtr a = {}, NodePtr b = {}) {
      auto n = std::make_shared<Node>();
      n->kind = k;
      n->a = std::move(a);
      n->b = std::move(b);
      return n;
    }

    NodePtr parse_expr() {
      NodePtr lhs = parse_term();
      for (;;) {
        if (accept('+')) lhs = make(Node::Kind::Add, lhs, parse_term());
        else if (accept('-')) lhs = make(Node::Kind::Sub, lhs, parse_term());
        else return lhs;
      }
    }
    NodePtr parse_term() {
      NodePtr lhs = parse_unary();
      for (;;) {
        if (accept('*')) lhs = make(Node::Kind::Mul, lhs, parse_unary());
        else if (accept('/')) lhs = make(Node::Kind::Div, lhs, parse_unary());
        else return lhs;
      }
    }
    NodePtr parse_unary() {
      if (accept('-')) return make(Node::Kind::Neg, parse_unary());
      if (accept('+')) return parse_unary();
      return parse_power();
    }
    NodePtr parse_power() {
      NodePtr base = parse_atom();
      if (accept('^')) return make(Node::Kind::Pow, base, parse_unary());
      return base;
    }
    NodePtr parse_atom() {
      skip_ws();
      if (pos >= s.size()) fail("unexpected end of input");
      const char c = s[pos];
      if (accept('(')) {
        NodePtr e = parse_expr();
        if (!accept(')')) fail("expected ')'");
        return e;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const std::string rest(s.substr(pos));
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(rest, &used);
        } catch (const std::exception &) {
          fail("malformed number");
        }
        pos += used;
        auto n = std::make_shared<Node>();
        n->number = v;
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
          ++pos;
        const std::string id(s.substr(start, pos - start));
        if (id == "x") return make(Node::Kind::X);
        if (id == "y") return make(Node::Kind::Y);
        if (id == "r") return make(Node::Kind::R);
        if (id == "pi") {
          auto n = std::make_shared<Node>();
          n->number = 3.14159265358979323846;
          return n;
        }
        static constexpr std::string_view fns[] = {"abs", "sqrt", "exp", "log", "sin",
                                                   "cos", "tan", "sinh", "cosh", "tanh"};
        for (auto f : fns) {
          if (id == f) {
            if (!accept('(')) fail("expected '(' after " + id);
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Call;
            n->fn = id;
            n->a = parse_expr();
            if (!accept(')')) fail("expected ')'");
            return n;
          }
        }
        pos = start;
        fail("unknown identifier '" + id + "'");
      }
      fail(std::string("unexpected '") + c + "'");
    }
  };

  std::string source_;
  NodePtr root_;
};

} // namespace vhj
