#include "dgflow/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dgflow/errors.hpp"

namespace dgflow {

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Sin, Cos, Tan, Tanh, Sqrt, Abs, Sign };

struct Expression::Node {
  Op op;
  double value = 0.0;
  int var = -1;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_const(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

NodePtr make_var(int index) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::Var;
  n->var = index;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

double apply(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    case Op::Pow: return std::pow(a, b);
    case Op::Neg: return -a;
    case Op::Exp: return std::exp(a);
    case Op::Log: return std::log(a);
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Tan: return std::tan(a);
    case Op::Tanh: return std::tanh(a);
    case Op::Sqrt: return std::sqrt(a);
    case Op::Abs: return std::abs(a);
    case Op::Sign: return (a > 0.0) - (a < 0.0);
    default: return 0.0;
  }
}

bool is_unary(Op op) { return op >= Op::Neg; }

// Constructors fold constants and drop neutral elements so that repeated
// differentiation does not blow up the tree.
NodePtr make(Op op, NodePtr a, NodePtr b = nullptr) {
  if (a->op == Op::Const && (is_unary(op) || b->op == Op::Const)) {
    return make_const(apply(op, a->value, b ? b->value : 0.0));
  }
  switch (op) {
    case Op::Add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Op::Sub:
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return make(Op::Neg, b);
      break;
    case Op::Mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case Op::Div:
      if (is_const(a, 0.0)) return make_const(0.0);
      if (is_const(b, 1.0)) return a;
      break;
    case Op::Pow:
      if (is_const(b, 0.0)) return make_const(1.0);
      if (is_const(b, 1.0)) return a;
      break;
    case Op::Neg:
      if (a->op == Op::Neg) return a->lhs;
      break;
    default:
      break;
  }
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

double eval_node(const Expression::Node& n, std::span<const double> x) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return x[static_cast<std::size_t>(n.var)];
    default: break;
  }
  const double a = eval_node(*n.lhs, x);
  const double b = n.rhs ? eval_node(*n.rhs, x) : 0.0;
  return apply(n.op, a, b);
}

NodePtr diff(const NodePtr& n, int v) {
  const auto& u = n->lhs;
  const auto& w = n->rhs;
  switch (n->op) {
    case Op::Const: return make_const(0.0);
    case Op::Var: return make_const(n->var == v ? 1.0 : 0.0);
    case Op::Add: return make(Op::Add, diff(u, v), diff(w, v));
    case Op::Sub: return make(Op::Sub, diff(u, v), diff(w, v));
    case Op::Mul:
      return make(Op::Add, make(Op::Mul, diff(u, v), w), make(Op::Mul, u, diff(w, v)));
    case Op::Div:
      return make(Op::Div, make(Op::Sub, make(Op::Mul, diff(u, v), w), make(Op::Mul, u, diff(w, v))),
                  make(Op::Mul, w, w));
    case Op::Pow:
      if (w->op == Op::Const) {
        return make(Op::Mul, make(Op::Mul, w, make(Op::Pow, u, make_const(w->value - 1.0))),
                    diff(u, v));
      }
      // d(u^w) = u^w (w' log u + w u'/u)
      return make(Op::Mul, n,
                  make(Op::Add, make(Op::Mul, diff(w, v), make(Op::Log, u)),
                       make(Op::Div, make(Op::Mul, w, diff(u, v)), u)));
    case Op::Neg: return make(Op::Neg, diff(u, v));
    case Op::Exp: return make(Op::Mul, n, diff(u, v));
    case Op::Log: return make(Op::Div, diff(u, v), u);
    case Op::Sin: return make(Op::Mul, make(Op::Cos, u), diff(u, v));
    case Op::Cos: return make(Op::Neg, make(Op::Mul, make(Op::Sin, u), diff(u, v)));
    case Op::Tan:
      return make(Op::Div, diff(u, v), make(Op::Mul, make(Op::Cos, u), make(Op::Cos, u)));
    case Op::Tanh:
      return make(Op::Mul, make(Op::Sub, make_const(1.0), make(Op::Mul, n, n)), diff(u, v));
    case Op::Sqrt: return make(Op::Div, diff(u, v), make(Op::Mul, make_const(2.0), n));
    case Op::Abs: return make(Op::Mul, make(Op::Sign, u), diff(u, v));
    case Op::Sign: return make_const(0.0);
  }
  return make_const(0.0);
}

bool depends(const NodePtr& n, int v) {
  if (n->op == Op::Var) return n->var == v;
  if (n->op == Op::Const) return false;
  return depends(n->lhs, v) || (n->rhs && depends(n->rhs, v));
}

void print(const NodePtr& n, std::ostringstream& os) {
  static const char* names[] = {"", "", "+", "-", "*", "/", "^", "-", "exp", "log", "sin",
                                "cos", "tan", "tanh", "sqrt", "abs", "sign"};
  switch (n->op) {
    case Op::Const: os << n->value; return;
    case Op::Var: os << "$" << n->var; return;
    case Op::Neg: os << "(-"; print(n->lhs, os); os << ")"; return;
    default: break;
  }
  if (is_unary(n->op)) {
    os << names[static_cast<int>(n->op)] << "(";
    print(n->lhs, os);
    os << ")";
    return;
  }
  os << "(";
  print(n->lhs, os);
  os << names[static_cast<int>(n->op)];
  print(n->rhs, os);
  os << ")";
}

class Parser {
 public:
  Parser(const std::string& text, const Expression::VariableMap& vars) : s_(text), vars_(vars) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError("expression '" + s_ + "': " + msg + " at offset " + std::to_string(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(const char* tok) {
    skip();
    const std::string t(tok);
    if (s_.compare(pos_, t.size(), t) == 0) {
      pos_ += t.size();
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept("+")) lhs = make(Op::Add, lhs, term());
      else if (accept("-")) lhs = make(Op::Sub, lhs, term());
      else return lhs;
    }
  }
  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      skip();
      if (s_.compare(pos_, 2, "**") == 0) return lhs;  // handled in power()
      if (accept("*")) lhs = make(Op::Mul, lhs, unary());
      else if (accept("/")) lhs = make(Op::Div, lhs, unary());
      else return lhs;
    }
  }
  NodePtr unary() {
    if (accept("-")) return make(Op::Neg, unary());
    if (accept("+")) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = primary();
    if (accept("^") || accept("**")) return make(Op::Pow, base, unary());
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!accept(")")) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      const double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      return make_const(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      if (auto it = vars_.find(id); it != vars_.end()) return make_var(it->second);
      if (id == "pi") return make_const(std::numbers::pi);
      if (id == "e") return make_const(std::numbers::e);
      static const std::map<std::string, Op> funcs = {
          {"exp", Op::Exp},   {"log", Op::Log},   {"sin", Op::Sin}, {"cos", Op::Cos},
          {"tan", Op::Tan},   {"tanh", Op::Tanh}, {"sqrt", Op::Sqrt}, {"abs", Op::Abs},
          {"sign", Op::Sign}};
      auto f = funcs.find(id);
      if (f == funcs.end()) fail("unknown identifier '" + id + "'");
      if (!accept("(")) fail("expected '(' after " + id);
      NodePtr arg = expr();
      if (!accept(")")) fail("expected ')'");
      return make(f->second, arg);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string s_;
  const Expression::VariableMap& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : root_(make_const(0.0)) {}

Expression Expression::parse(const std::string& text, const VariableMap& variables) {
  return Expression(Parser(text, variables).parse());
}

Expression Expression::constant(double value) { return Expression(make_const(value)); }

double Expression::eval(std::span<const double> values) const { return eval_node(*root_, values); }

Expression Expression::derivative(int variable) const { return Expression(diff(root_, variable)); }

bool Expression::depends_on(int variable) const { return depends(root_, variable); }

bool Expression::is_constant() const { return root_->op == Op::Const; }

std::string Expression::str() const {
  std::ostringstream os;
  print(root_, os);
  return os.str();
}

}  // namespace dgflow
