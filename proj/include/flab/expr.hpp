#pragma once

// Tiny expression language for log-density profiles in config files:
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := ('-'|'+') unary | power
//   power  := atom ('^' '-'? integer)?
//   atom   := number | 'pi' | 'x1'..'x4' | func '(' expr ')' | '(' expr ')'
// with func in {sin, cos, tan, exp, log, sqrt}. Exponents are integers with
// |e| <= 8, expanded to repeated multiplication so negative bases stay exact.
// A parsed profile evaluates at every dual depth, so its gradients flow
// through the same AD stack as the built-in maps.

#include <cctype>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "flab/errors.hpp"
#include "flab/linalg.hpp"
#include "flab/metric.hpp"

namespace flab {

class PhiExpr {
  enum class Op { Lit, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Tan, Exp, Log, Sqrt };

  struct Node {
    Op op;
    int a = -1, b = -1;  // child indices
    double lit = 0.0;
    int var = 0;
    int exponent = 0;
  };

 public:
  static PhiExpr parse(const std::string& text, int dim) {
    if (dim < 1 || dim > kMaxDim)
      throw Error(ErrorKind::ConfigError, "expression dimension out of range");
    if (text.size() > 4096) throw Error(ErrorKind::ConfigError, "expression too long");
    Parser p{text, 0, dim, {}};
    int root = p.expr();
    p.skip();
    if (p.pos != text.size()) p.fail("trailing input");
    PhiExpr e;
    e.text_ = text;
    e.nodes_ = std::move(p.nodes);
    e.root_ = root;
    return e;
  }

  template <typename T>
  T eval(const VecN<T>& x) const {
    return eval_node(root_, x);
  }

  const std::string& text() const { return text_; }

 private:
  struct Parser {
    const std::string& s;
    std::size_t pos;
    int dim;
    std::vector<Node> nodes;

    [[noreturn]] void fail(const std::string& why) const {
      throw Error(ErrorKind::ConfigError,
                  "bad expression at position " + std::to_string(pos) + ": " + why);
    }
    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    int push(Node n) {
      if (nodes.size() >= 2048) fail("expression too large");
      nodes.push_back(n);
      return int(nodes.size()) - 1;
    }

    int expr() {
      int lhs = term();
      for (;;) {
        if (eat('+')) lhs = push({Op::Add, lhs, term()});
        else if (eat('-')) lhs = push({Op::Sub, lhs, term()});
        else return lhs;
      }
    }
    int term() {
      int lhs = unary();
      for (;;) {
        if (eat('*')) lhs = push({Op::Mul, lhs, unary()});
        else if (eat('/')) lhs = push({Op::Div, lhs, unary()});
        else return lhs;
      }
    }
    int unary() {
      if (eat('-')) return push({Op::Neg, unary()});
      if (eat('+')) return unary();
      return power();
    }
    int power() {
      int base = atom();
      if (!eat('^')) return base;
      skip();
      bool neg = eat('-');
      skip();
      if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos])))
        fail("exponent must be an integer");
      int e = 0;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        e = e * 10 + (s[pos] - '0');
        if (e > 8) fail("exponent magnitude is capped at 8");
        ++pos;
      }
      Node n{Op::Pow, base};
      n.exponent = neg ? -e : e;
      return push(n);
    }
    int atom() {
      skip();
      if (pos >= s.size()) fail("unexpected end of expression");
      char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* start = s.c_str() + pos;
        char* end = nullptr;
        double v = std::strtod(start, &end);
        if (end == start) fail("malformed number");
        pos += std::size_t(end - start);
        Node n{Op::Lit};
        n.lit = v;
        return push(n);
      }
      if (c == '(') {
        ++pos;
        int inner = expr();
        if (!eat(')')) fail("missing ')'");
        return inner;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])))) ++pos;
        std::string name = s.substr(start, pos - start);
        if (name == "pi") {
          Node n{Op::Lit};
          n.lit = M_PI;
          return push(n);
        }
        if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '4') {
          int v = name[1] - '1';
          if (v >= dim) fail("variable " + name + " exceeds the domain dimension");
          Node n{Op::Var};
          n.var = v;
          return push(n);
        }
        static const struct { const char* name; Op op; } kFuncs[] = {
            {"sin", Op::Sin}, {"cos", Op::Cos}, {"tan", Op::Tan},
            {"exp", Op::Exp}, {"log", Op::Log}, {"sqrt", Op::Sqrt},
        };
        for (const auto& f : kFuncs) {
          if (name == f.name) {
            if (!eat('(')) fail("expected '(' after " + name);
            int inner = expr();
            if (!eat(')')) fail("missing ')'");
            return push({f.op, inner});
          }
        }
        fail("unknown identifier '" + name + "'");
      }
      fail(std::string("unexpected character '") + c + "'");
    }
  };

  template <typename T>
  T eval_node(int i, const VecN<T>& x) const {
    const Node& n = nodes_[std::size_t(i)];
    switch (n.op) {
      case Op::Lit: return T(n.lit);
      case Op::Var: return x[n.var];
      case Op::Add: return eval_node(n.a, x) + eval_node(n.b, x);
      case Op::Sub: return eval_node(n.a, x) - eval_node(n.b, x);
      case Op::Mul: return eval_node(n.a, x) * eval_node(n.b, x);
      case Op::Div: return eval_node(n.a, x) / eval_node(n.b, x);
      case Op::Neg: return -eval_node(n.a, x);
      case Op::Pow: {
        T base = eval_node(n.a, x);
        int e = n.exponent < 0 ? -n.exponent : n.exponent;
        T acc = T(1.0);
        for (int k = 0; k < e; ++k) acc = acc * base;
        return n.exponent < 0 ? T(1.0) / acc : acc;
      }
      case Op::Sin: return sin(eval_node(n.a, x));
      case Op::Cos: return cos(eval_node(n.a, x));
      case Op::Tan: return tan(eval_node(n.a, x));
      case Op::Exp: return exp(eval_node(n.a, x));
      case Op::Log: return log(eval_node(n.a, x));
      case Op::Sqrt: return sqrt(eval_node(n.a, x));
    }
    throw Error(ErrorKind::ConfigError, "corrupt expression node");
  }

  std::string text_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

inline std::shared_ptr<const ScalarMap> make_phi_map(PhiExpr expr) {
  return make_scalar_map([e = std::move(expr)](const auto& x) { return e.eval(x); });
}

}  // namespace flab
