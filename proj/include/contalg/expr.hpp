#pragma once

// Expression language for Lagrangians, Hamiltonians, potentials, anchors
// and structure functions.
//
//   expr    := term { ("+" | "-") term }
//   term    := unary { ("*" | "/") unary }
//   unary   := "-" unary | power
//   power   := primary [ "^" unary ]            (right-associative)
//   primary := number | identifier | func "(" expr ")" | "(" expr ")"
//   func    := "sin" | "cos" | "tan" | "exp" | "log" | "sqrt" | "abs"
//
// Identifiers are q1..qn, y1..ym (Lagrangian side), p1..pm (Hamiltonian
// side), s, or a declared parameter name. There is no implicit
// multiplication. Integer exponents are unrestricted; any other exponent
// needs a positive base at evaluation time.

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "contalg/calculus.hpp"
#include "contalg/dual.hpp"
#include "contalg/errors.hpp"

namespace contalg::expr {

/// Which variables are in scope for a parse.
enum class Chart {
  base,         // q only
  lagrangian,   // q, y, s
  hamiltonian,  // q, p, s
};

struct Context {
  int n = 0;
  int m = 0;
  Chart chart = Chart::lagrangian;
  std::vector<std::string> parameters;
};

enum class Func { sin, cos, tan, exp, log, sqrt, abs };

inline const char* func_name(Func f) {
  switch (f) {
    case Func::sin: return "sin";
    case Func::cos: return "cos";
    case Func::tan: return "tan";
    case Func::exp: return "exp";
    case Func::log: return "log";
    case Func::sqrt: return "sqrt";
    case Func::abs: return "abs";
  }
  return "?";
}

inline std::optional<Func> func_from_name(std::string_view name) {
  static const std::pair<std::string_view, Func> table[] = {
      {"sin", Func::sin}, {"cos", Func::cos},   {"tan", Func::tan}, {"exp", Func::exp},
      {"log", Func::log}, {"sqrt", Func::sqrt}, {"abs", Func::abs}};
  for (const auto& [key, f] : table) {
    if (key == name) return f;
  }
  return std::nullopt;
}

enum class Kind { number, q, w, s, parameter, neg, add, sub, mul, div, pow, call };

/// Immutable syntax tree node. Children are shared.
struct Node {
  Kind kind = Kind::number;
  double number = 0.0;   // Kind::number
  int index = 0;         // 0-based, Kind::q / Kind::w
  std::string name;      // Kind::parameter
  Func func = Func::sin; // Kind::call
  std::shared_ptr<const Node> lhs;  // unary operand / left operand / call argument
  std::shared_ptr<const Node> rhs;
};

using NodePtr = std::shared_ptr<const Node>;

/// A parsed expression together with the context it was parsed in.
struct Expr {
  NodePtr root;
  Context context;
};

inline bool structurally_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Kind::number:
      return std::bit_cast<std::uint64_t>(a.number) == std::bit_cast<std::uint64_t>(b.number);
    case Kind::q:
    case Kind::w:
      return a.index == b.index;
    case Kind::s:
      return true;
    case Kind::parameter:
      return a.name == b.name;
    case Kind::neg:
      return structurally_equal(*a.lhs, *b.lhs);
    case Kind::call:
      return a.func == b.func && structurally_equal(*a.lhs, *b.lhs);
    default:
      return structurally_equal(*a.lhs, *b.lhs) && structurally_equal(*a.rhs, *b.rhs);
  }
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
  return structurally_equal(*a.root, *b.root);
}

// ---------------------------------------------------------------------------
// Construction helpers

inline NodePtr make_number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::number;
  n->number = v;
  return n;
}
inline NodePtr make_var(Kind kind, int index = 0) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->index = index;
  return n;
}
inline NodePtr make_param(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::parameter;
  n->name = std::move(name);
  return n;
}
inline NodePtr make_unary(Kind kind, NodePtr operand) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(operand);
  return n;
}
inline NodePtr make_call(Func f, NodePtr arg) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::call;
  n->func = f;
  n->lhs = std::move(arg);
  return n;
}
inline NodePtr make_binary(Kind kind, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

// ---------------------------------------------------------------------------
// Parser

namespace detail {

class Parser {
public:
  Parser(std::string_view text, const Context& ctx) : text_(text), ctx_(ctx) {}

  NodePtr parse() {
    NodePtr e = expression();
    skip_space();
    if (pos_ != text_.size()) {
      fail(std::string("unexpected '") + text_[pos_] + "'");
    }
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& what) const {
    if (pos_ >= text_.size()) throw ParseError("syntax error: " + what + " at end of input", pos_);
    throw ParseError("syntax error: " + what, pos_);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) fail(std::string("expected '") + c + "'");
      fail(std::string("expected '") + c + "'");
    }
  }

  NodePtr expression() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(Kind::add, lhs, term());
      } else if (accept('-')) {
        lhs = make_binary(Kind::sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(Kind::mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make_binary(Kind::div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make_unary(Kind::neg, unary());
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make_binary(Kind::pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("expected an operand");
    const char c = text_[pos_];
    if (accept('(')) {
      NodePtr e = expression();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    std::size_t end = pos_;
    auto digits = [&] {
      while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end;
    };
    digits();
    if (end < text_.size() && text_[end] == '.') {
      ++end;
      digits();
    }
    if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < text_.size() && (text_[e] == '+' || text_[e] == '-')) ++e;
      if (e < text_.size() && std::isdigit(static_cast<unsigned char>(text_[e]))) {
        end = e;
        digits();
      }
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + end, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + end) {
      fail("malformed number '" + std::string(text_.substr(start, end - start)) + "'");
    }
    if (!std::isfinite(v)) fail("number out of range");
    pos_ = end;
    return make_number(v);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(text_.substr(start, pos_ - start));

    if (auto f = func_from_name(name)) {
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != '(') {
        pos_ = start;
        throw ParseError("function '" + name + "' used without an argument list", start);
      }
      ++pos_;
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == ')') {
        throw ParseError("arity error: " + name + " takes exactly 1 argument, got 0", start);
      }
      NodePtr arg = expression();
      if (accept(',')) {
        throw ParseError("arity error: " + name + " takes exactly 1 argument", start);
      }
      expect(')');
      return make_call(*f, arg);
    }

    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      throw ParseError("unknown function '" + name + "'", start);
    }

    for (const auto& p : ctx_.parameters) {
      if (p == name) return make_param(name);
    }
    if (name == "s") {
      if (ctx_.chart == Chart::base) {
        throw ParseError("'s' is not available in a function on the base", start);
      }
      return make_var(Kind::s);
    }
    if (auto v = indexed(name, 'q')) return checked(Kind::q, *v, ctx_.n, name, start);
    if (auto v = indexed(name, 'y')) {
      if (ctx_.chart != Chart::lagrangian) {
        throw ParseError("'" + name + "' is a velocity; only available on the Lagrangian side", start);
      }
      return checked(Kind::w, *v, ctx_.m, name, start);
    }
    if (auto v = indexed(name, 'p')) {
      if (ctx_.chart != Chart::hamiltonian) {
        throw ParseError("'" + name + "' is a momentum; only available on the Hamiltonian side", start);
      }
      return checked(Kind::w, *v, ctx_.m, name, start);
    }
    throw ParseError("unknown identifier '" + name + "'", start);
  }

  static std::optional<int> indexed(const std::string& name, char prefix) {
    if (name.size() < 2 || name[0] != prefix) return std::nullopt;
    int v = 0;
    for (std::size_t i = 1; i < name.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(name[i]))) return std::nullopt;
      if (v > 100000) return std::nullopt;
      v = v * 10 + (name[i] - '0');
    }
    if (name[1] == '0') return std::nullopt;
    return v;
  }

  static NodePtr checked(Kind kind, int one_based, int limit, const std::string& name,
                         std::size_t at) {
    if (one_based < 1 || one_based > limit) throw ParseError(name + " out of range", at);
    return make_var(kind, one_based - 1);
  }

  std::string_view text_;
  const Context& ctx_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses `text`; throws ParseError with the byte offset on failure.
inline Expr parse(std::string_view text, const Context& context) {
  for (const auto& p : context.parameters) {
    if (p == "s" || func_from_name(p) || p.empty()) {
      throw ParseError("parameter name '" + p + "' is reserved", 0);
    }
  }
  detail::Parser parser(text, context);
  return Expr{parser.parse(), context};
}

// ---------------------------------------------------------------------------
// Printer. Emits the minimum parentheses needed for print -> parse to give a
// structurally identical tree; numbers use the shortest round-trip form.

namespace detail {

inline int precedence(const Node& n) {
  switch (n.kind) {
    case Kind::add:
    case Kind::sub: return 1;
    case Kind::mul:
    case Kind::div: return 2;
    case Kind::neg: return 3;
    case Kind::pow: return 4;
    default: return 5;
  }
}

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void print(const Node& n, Chart chart, std::string& out) {
  auto child = [&](const Node& c, bool parens) {
    if (parens) out += '(';
    print(c, chart, out);
    if (parens) out += ')';
  };
  switch (n.kind) {
    case Kind::number: out += format_number(n.number); return;
    case Kind::q: out += "q" + std::to_string(n.index + 1); return;
    case Kind::w:
      out += (chart == Chart::hamiltonian ? "p" : "y") + std::to_string(n.index + 1);
      return;
    case Kind::s: out += "s"; return;
    case Kind::parameter: out += n.name; return;
    case Kind::call:
      out += func_name(n.func);
      out += '(';
      print(*n.lhs, chart, out);
      out += ')';
      return;
    case Kind::neg:
      out += '-';
      child(*n.lhs, precedence(*n.lhs) < 3);
      return;
    case Kind::pow:
      child(*n.lhs, precedence(*n.lhs) < 5);
      out += '^';
      child(*n.rhs, precedence(*n.rhs) < 3);
      return;
    default: {
      const int p = precedence(n);
      child(*n.lhs, precedence(*n.lhs) < p);
      switch (n.kind) {
        case Kind::add: out += " + "; break;
        case Kind::sub: out += " - "; break;
        case Kind::mul: out += "*"; break;
        default: out += "/"; break;
      }
      child(*n.rhs, precedence(*n.rhs) <= p);
      return;
    }
  }
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print(*e.root, e.context.chart, out);
  return out;
}

/// Largest 1-based q / w index referenced and whether s appears.
struct Usage {
  int max_q = 0;
  int max_w = 0;
  bool uses_s = false;
  std::vector<std::string> parameters;
};

inline void collect_usage(const Node& n, Usage& u) {
  switch (n.kind) {
    case Kind::q: u.max_q = std::max(u.max_q, n.index + 1); return;
    case Kind::w: u.max_w = std::max(u.max_w, n.index + 1); return;
    case Kind::s: u.uses_s = true; return;
    case Kind::parameter:
      for (const auto& p : u.parameters) {
        if (p == n.name) return;
      }
      u.parameters.push_back(n.name);
      return;
    case Kind::number: return;
    default:
      if (n.lhs) collect_usage(*n.lhs, u);
      if (n.rhs) collect_usage(*n.rhs, u);
  }
}

inline Usage usage(const Expr& e) {
  Usage u;
  collect_usage(*e.root, u);
  return u;
}

// ---------------------------------------------------------------------------
// Compiled form: a postfix program run on a value stack. Parameters are
// folded to constants when the program is bound.

enum class Op : std::uint8_t { constant, var, neg, add, sub, mul, div, ipow, pow, call };

struct Instr {
  Op op = Op::constant;
  double value = 0.0;  // constant
  int index = 0;       // variable slot in [q, w, s], or integer exponent
  Func func = Func::sin;
};

namespace detail {

inline std::optional<int> integer_literal(const Node& n) {
  double v;
  if (n.kind == Kind::number) {
    v = n.number;
  } else if (n.kind == Kind::neg && n.lhs->kind == Kind::number) {
    v = -n.lhs->number;
  } else {
    return std::nullopt;
  }
  if (v != std::floor(v) || std::abs(v) > 1024.0) return std::nullopt;
  return static_cast<int>(v);
}

inline void compile(const Node& n, const Context& ctx, const std::map<std::string, double>& bindings,
                    std::vector<Instr>& code) {
  switch (n.kind) {
    case Kind::number: code.push_back({Op::constant, n.number, 0, Func::sin}); return;
    case Kind::q: code.push_back({Op::var, 0.0, n.index, Func::sin}); return;
    case Kind::w: code.push_back({Op::var, 0.0, ctx.n + n.index, Func::sin}); return;
    case Kind::s: code.push_back({Op::var, 0.0, ctx.n + ctx.m, Func::sin}); return;
    case Kind::parameter: {
      auto it = bindings.find(n.name);
      if (it == bindings.end()) throw Error("unbound parameter '" + n.name + "'");
      code.push_back({Op::constant, it->second, 0, Func::sin});
      return;
    }
    case Kind::neg:
      compile(*n.lhs, ctx, bindings, code);
      code.push_back({Op::neg, 0.0, 0, Func::sin});
      return;
    case Kind::call:
      compile(*n.lhs, ctx, bindings, code);
      code.push_back({Op::call, 0.0, 0, n.func});
      return;
    case Kind::pow:
      compile(*n.lhs, ctx, bindings, code);
      if (auto k = integer_literal(*n.rhs)) {
        code.push_back({Op::ipow, 0.0, *k, Func::sin});
        return;
      }
      compile(*n.rhs, ctx, bindings, code);
      code.push_back({Op::pow, 0.0, 0, Func::sin});
      return;
    default: {
      compile(*n.lhs, ctx, bindings, code);
      compile(*n.rhs, ctx, bindings, code);
      Op op = Op::add;
      if (n.kind == Kind::sub) op = Op::sub;
      if (n.kind == Kind::mul) op = Op::mul;
      if (n.kind == Kind::div) op = Op::div;
      code.push_back({op, 0.0, 0, Func::sin});
      return;
    }
  }
}

template <typename T>
T apply(Func f, const T& x) {
  switch (f) {
    case Func::sin: return fn::sin(x);
    case Func::cos: return fn::cos(x);
    case Func::tan: return fn::tan(x);
    case Func::exp: return fn::exp(x);
    case Func::log: return fn::log(x);
    case Func::sqrt: return fn::sqrt(x);
    case Func::abs: return fn::abs(x);
  }
  return x;
}

template <typename T>
T divide(const T& a, const T& b) {
  if constexpr (std::is_same_v<T, double>) {
    if (b == 0.0) throw DomainError("division by zero");
    return a / b;
  } else {
    return a / b;
  }
}

}  // namespace detail

class Program {
public:
  Program() = default;
  Program(std::vector<Instr> code, int slots) : code_(std::move(code)), slots_(slots) {}

  template <typename T>
  T run(std::span<const T> x) const {
    if (static_cast<int>(x.size()) < slots_) throw DimensionError("expression input too short");
    std::vector<T> stack;
    stack.reserve(code_.size());
    for (const Instr& in : code_) {
      switch (in.op) {
        case Op::constant: stack.push_back(T(in.value)); break;
        case Op::var: stack.push_back(x[in.index]); break;
        case Op::neg: stack.back() = -stack.back(); break;
        case Op::call: stack.back() = detail::apply(in.func, stack.back()); break;
        case Op::ipow: stack.back() = fn::ipow(stack.back(), in.index); break;
        default: {
          T b = stack.back();
          stack.pop_back();
          T& a = stack.back();
          switch (in.op) {
            case Op::add: a = a + b; break;
            case Op::sub: a = a - b; break;
            case Op::mul: a = a * b; break;
            case Op::div: a = detail::divide(a, b); break;
            case Op::pow: {
              const double e = primal(b);
              if (is_constant(b) && e == std::floor(e) && std::abs(e) <= 1024.0) {
                a = fn::ipow(a, static_cast<int>(e));
              } else {
                a = fn::rpow(a, b);
              }
              break;
            }
            default: break;
          }
        }
      }
    }
    return stack.back();
  }

  std::size_t size() const { return code_.size(); }

private:
  std::vector<Instr> code_;
  int slots_ = 0;
};

inline Program compile(const Expr& e, const std::map<std::string, double>& bindings) {
  std::vector<Instr> code;
  detail::compile(*e.root, e.context, bindings, code);
  const int slots = e.context.n + e.context.m + (e.context.chart == Chart::base ? 0 : 1);
  return Program(std::move(code), slots);
}

/// ScalarField body backed by a compiled expression.
class ExprBody final : public DualBody {
public:
  ExprBody(Expr e, Program program, std::string text)
      : DualBody(e.context.n, e.context.chart == Chart::base ? 0 : e.context.m),
        expr_(std::move(e)),
        program_(std::move(program)),
        text_(std::move(text)) {}

  double eval(std::span<const double> x) const override { return program_.run(x); }
  Dual1 eval(std::span<const Dual1> x) const override { return program_.run(x); }
  Dual2 eval(std::span<const Dual2> x) const override { return program_.run(x); }
  std::string describe() const override { return text_; }

  const Expr& expr() const { return expr_; }

private:
  Expr expr_;
  Program program_;
  std::string text_;
};

/// Binds parameters and wraps the expression as a differentiable field of
/// arity (n, m), or (n, 0) for base-chart expressions.
inline ScalarField to_scalar_field(const Expr& e, const std::map<std::string, double>& bindings = {}) {
  Program prog = compile(e, bindings);
  const int m = e.context.chart == Chart::base ? 0 : e.context.m;
  return ScalarField(e.context.n, m, std::make_shared<ExprBody>(e, std::move(prog), to_string(e)));
}

/// parse + to_scalar_field in one step.
inline ScalarField field(std::string_view text, const Context& context,
                         const std::map<std::string, double>& bindings = {}) {
  Context ctx = context;
  for (const auto& [name, value] : bindings) {
    bool known = false;
    for (const auto& p : ctx.parameters) known = known || p == name;
    if (!known) ctx.parameters.push_back(name);
  }
  return to_scalar_field(parse(text, ctx), bindings);
}

/// Field on the base Q with n coordinates.
inline ScalarField base_field(std::string_view text, int n,
                              const std::map<std::string, double>& bindings = {}) {
  return field(text, Context{n, 0, Chart::base, {}}, bindings);
}

}  // namespace contalg::expr
