#include "gje/expression.hpp"

#include <cctype>
#include <cmath>

namespace gje {

namespace {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Exp, Log, Dot, Norm2 };

}  // namespace

struct Expression::Node {
  Op op = Op::Const;
  double value = 0.0;
  std::string name;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

struct Parser {
  const std::string& s;
  size_t pos = 0;

  explicit Parser(const std::string& text) : s(text) {}

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

  char peek() {
    skip();
    return pos < s.size() ? s[pos] : '\0';
  }

  [[noreturn]] void fail(const std::string& what) {
    throw ConfigError("expression parse error at position " + std::to_string(pos) + ": " + what +
                      " in \"" + s + "\"");
  }

  NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  NodePtr expr() {
    NodePtr n = term();
    while (true) {
      if (eat('+'))
        n = make(Op::Add, n, term());
      else if (eat('-'))
        n = make(Op::Sub, n, term());
      else
        return n;
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    while (true) {
      if (eat('*'))
        n = make(Op::Mul, n, unary());
      else if (eat('/'))
        n = make(Op::Div, n, unary());
      else
        return n;
    }
  }

  NodePtr unary() {
    if (eat('-')) return make(Op::Neg, unary());
    return power();
  }

  NodePtr power() {
    NodePtr n = atom();
    if (eat('^')) return make(Op::Pow, n, unary());
    return n;
  }

  NodePtr atom() {
    skip();
    if (pos >= s.size()) fail("unexpected end of input");
    char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (eat('(')) {
      NodePtr n = expr();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    size_t end = 0;
    double v = std::stod(s.substr(pos), &end);
    pos += end;
    auto n = std::make_shared<Expression::Node>();
    n->op = Op::Const;
    n->value = v;
    return n;
  }

  NodePtr identifier() {
    size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    std::string name = s.substr(start, pos - start);
    if (peek() != '(') {
      auto n = std::make_shared<Expression::Node>();
      n->op = Op::Var;
      n->name = name;
      return n;
    }
    eat('(');
    std::vector<NodePtr> args;
    if (peek() != ')') {
      args.push_back(expr());
      while (eat(',')) args.push_back(expr());
    }
    if (!eat(')')) fail("expected ')' after arguments");

    auto need = [&](size_t k) {
      if (args.size() != k)
        fail(name + " takes " + std::to_string(k) + " argument(s), got " +
             std::to_string(args.size()));
    };
    if (name == "pow") {
      need(2);
      return make(Op::Pow, args[0], args[1]);
    }
    if (name == "exp") {
      need(1);
      return make(Op::Exp, args[0]);
    }
    if (name == "log") {
      need(1);
      return make(Op::Log, args[0]);
    }
    if (name == "dot") {
      need(2);
      return make(Op::Dot, args[0], args[1]);
    }
    if (name == "norm2") {
      need(1);
      return make(Op::Norm2, args[0]);
    }
    fail("unknown function '" + name + "'");
  }
};

ExprValue eval_node(const Expression::Node& n, const ExprEnv& env) {
  auto scalar = [](const ExprValue& v, const char* ctx) {
    if (v.is_vec) throw ConfigError(std::string("expected scalar operand for ") + ctx);
    return v.s;
  };
  switch (n.op) {
    case Op::Const:
      return ExprValue(n.value);
    case Op::Var: {
      auto it = env.find(n.name);
      if (it == env.end()) throw ConfigError("unbound identifier '" + n.name + "'");
      return it->second;
    }
    case Op::Neg: {
      ExprValue a = eval_node(*n.a, env);
      if (a.is_vec) return ExprValue(Vec(-a.v));
      return ExprValue(-a.s);
    }
    case Op::Add:
    case Op::Sub: {
      ExprValue a = eval_node(*n.a, env);
      ExprValue b = eval_node(*n.b, env);
      double sgn = n.op == Op::Add ? 1.0 : -1.0;
      if (a.is_vec != b.is_vec) throw ConfigError("cannot add scalar and vector");
      if (a.is_vec) return ExprValue(Vec(a.v + sgn * b.v));
      return ExprValue(a.s + sgn * b.s);
    }
    case Op::Mul: {
      ExprValue a = eval_node(*n.a, env);
      ExprValue b = eval_node(*n.b, env);
      if (a.is_vec && b.is_vec) throw ConfigError("use dot() for vector products");
      if (a.is_vec) return ExprValue(Vec(b.s * a.v));
      if (b.is_vec) return ExprValue(Vec(a.s * b.v));
      return ExprValue(a.s * b.s);
    }
    case Op::Div: {
      ExprValue a = eval_node(*n.a, env);
      double d = scalar(eval_node(*n.b, env), "division");
      if (d == 0.0) throw Error("division by zero in expression");
      if (a.is_vec) return ExprValue(Vec(a.v / d));
      return ExprValue(a.s / d);
    }
    case Op::Pow: {
      double a = scalar(eval_node(*n.a, env), "pow");
      double b = scalar(eval_node(*n.b, env), "pow");
      return ExprValue(std::pow(a, b));
    }
    case Op::Exp:
      return ExprValue(std::exp(scalar(eval_node(*n.a, env), "exp")));
    case Op::Log: {
      double a = scalar(eval_node(*n.a, env), "log");
      if (a <= 0.0) throw Error("log of non-positive value in expression");
      return ExprValue(std::log(a));
    }
    case Op::Dot: {
      ExprValue a = eval_node(*n.a, env);
      ExprValue b = eval_node(*n.b, env);
      if (!a.is_vec || !b.is_vec) {
        // dot of scalars degrades to multiplication, convenient in 1-D
        double as = a.is_vec ? (a.v.size() == 1 ? a.v[0] : 0.0) : a.s;
        double bs = b.is_vec ? (b.v.size() == 1 ? b.v[0] : 0.0) : b.s;
        if ((a.is_vec && a.v.size() != 1) || (b.is_vec && b.v.size() != 1))
          throw ConfigError("dot() dimension mismatch");
        return ExprValue(as * bs);
      }
      if (a.v.size() != b.v.size()) throw ConfigError("dot() dimension mismatch");
      return ExprValue(a.v.dot(b.v));
    }
    case Op::Norm2: {
      ExprValue a = eval_node(*n.a, env);
      if (!a.is_vec) return ExprValue(a.s * a.s);
      return ExprValue(a.v.squaredNorm());
    }
  }
  throw Error("unreachable expression node");
}

}  // namespace

Expression Expression::parse(const std::string& text) {
  Parser p(text);
  Expression e;
  e.root_ = p.expr();
  p.skip();
  if (p.pos != text.size()) p.fail("trailing characters");
  e.text_ = text;
  return e;
}

double Expression::eval(const ExprEnv& env) const {
  if (!root_) throw ConfigError("evaluating empty expression");
  ExprValue v = eval_node(*root_, env);
  if (v.is_vec) throw ConfigError("expression must evaluate to a scalar");
  return v.s;
}

}  // namespace gje
