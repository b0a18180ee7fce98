#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "paneitz/curvature.hpp"
#include "paneitz/error.hpp"

namespace paneitz {

namespace {

using Instr = Expression::Instr;
using Op = Expression::Op;
using Fn = Expression::Fn;

// Second-order forward-mode jet in d variables.
struct Jet {
  double v = 0;
  Vec g;
  Mat h;
  bool second = false;
};

Jet chain(const Jet& a, double f, double f1, double f2) {
  Jet r;
  r.v = f;
  r.g = f1 * a.g;
  r.second = a.second;
  if (a.second) r.h = f1 * a.h + f2 * a.g * a.g.transpose();
  return r;
}

Jet operator+(const Jet& a, const Jet& b) {
  Jet r{a.v + b.v, a.g + b.g, {}, a.second};
  if (a.second) r.h = a.h + b.h;
  return r;
}

Jet operator-(const Jet& a, const Jet& b) {
  Jet r{a.v - b.v, a.g - b.g, {}, a.second};
  if (a.second) r.h = a.h - b.h;
  return r;
}

Jet operator-(const Jet& a) { return chain(a, -a.v, -1.0, 0.0); }

Jet operator*(const Jet& a, const Jet& b) {
  Jet r{a.v * b.v, a.v * b.g + b.v * a.g, {}, a.second};
  if (a.second) {
    Mat outer = a.g * b.g.transpose();
    r.h = a.v * b.h + b.v * a.h + outer + outer.transpose();
  }
  return r;
}

Jet reciprocal(const Jet& a) {
  double iv = 1.0 / a.v;
  return chain(a, iv, -iv * iv, 2.0 * iv * iv * iv);
}

Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

double ipow(double a, double c) { return std::pow(a, c); }

Jet pow_const(const Jet& a, double c) {
  if (c == 0) return chain(a, 1.0, 0.0, 0.0);
  return chain(a, ipow(a.v, c), c * ipow(a.v, c - 1), c * (c - 1) * ipow(a.v, c - 2));
}

double apply(Fn fn, double x) {
  switch (fn) {
    case Fn::Sin: return std::sin(x);
    case Fn::Cos: return std::cos(x);
    case Fn::Tan: return std::tan(x);
    case Fn::Exp: return std::exp(x);
    case Fn::Log: return std::log(x);
    case Fn::Sqrt: return std::sqrt(x);
    case Fn::Tanh: return std::tanh(x);
    case Fn::Sinh: return std::sinh(x);
    case Fn::Cosh: return std::cosh(x);
    case Fn::Atan: return std::atan(x);
  }
  return 0;
}

Jet apply(Fn fn, const Jet& a) {
  double x = a.v;
  switch (fn) {
    case Fn::Sin: return chain(a, std::sin(x), std::cos(x), -std::sin(x));
    case Fn::Cos: return chain(a, std::cos(x), -std::sin(x), -std::cos(x));
    case Fn::Tan: {
      double t = std::tan(x), s = 1 + t * t;
      return chain(a, t, s, 2 * t * s);
    }
    case Fn::Exp: {
      double e = std::exp(x);
      return chain(a, e, e, e);
    }
    case Fn::Log: return chain(a, std::log(x), 1 / x, -1 / (x * x));
    case Fn::Sqrt: {
      double s = std::sqrt(x);
      return chain(a, s, 0.5 / s, -0.25 / (s * x));
    }
    case Fn::Tanh: {
      double t = std::tanh(x), s = 1 - t * t;
      return chain(a, t, s, -2 * t * s);
    }
    case Fn::Sinh: return chain(a, std::sinh(x), std::cosh(x), std::sinh(x));
    case Fn::Cosh: return chain(a, std::cosh(x), std::sinh(x), std::cosh(x));
    case Fn::Atan: {
      double s = 1 / (1 + x * x);
      return chain(a, std::atan(x), s, -2 * x * s * s);
    }
  }
  return a;
}

double pow_op(double a, double b) { return std::pow(a, b); }

Jet pow_op(const Jet& a, const Jet& b) {
  bool b_const = b.g.isZero(0.0) && (!b.second || b.h.isZero(0.0));
  if (b_const) return pow_const(a, b.v);
  return apply(Fn::Exp, b * apply(Fn::Log, a));
}

class Parser {
 public:
  Parser(int n, const std::string& s) : n_(n), s_(s) {}

  std::vector<Instr> parse() {
    auto code = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return code;
  }

 private:
  [[noreturn]] void fail(const std::string& what) {
    throw ConfigurationError("expression \"" + s_ + "\": " + what + " at position " + std::to_string(pos_));
  }

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

  static bool has_var(const std::vector<Instr>& code) {
    for (const auto& i : code)
      if (i.op == Op::Var) return true;
    return false;
  }

  // Collapse variable-free subexpressions to a single constant.
  static std::vector<Instr> fold(std::vector<Instr> code) {
    if (code.size() <= 1 || has_var(code)) return code;
    std::vector<double> st;
    for (const auto& i : code) {
      switch (i.op) {
        case Op::Const: st.push_back(i.c); break;
        case Op::Neg: st.back() = -st.back(); break;
        case Op::Call: st.back() = apply(i.fn, st.back()); break;
        default: {
          double b = st.back();
          st.pop_back();
          double& a = st.back();
          if (i.op == Op::Add) a += b;
          else if (i.op == Op::Sub) a -= b;
          else if (i.op == Op::Mul) a *= b;
          else if (i.op == Op::Div) a /= b;
          else a = std::pow(a, b);
        }
      }
    }
    return {Instr{Op::Const, Fn::Sin, 0, st.back()}};
  }

  static std::vector<Instr> join(std::vector<Instr> a, const std::vector<Instr>& b, Op op) {
    a.insert(a.end(), b.begin(), b.end());
    a.push_back(Instr{op});
    return fold(std::move(a));
  }

  std::vector<Instr> expr() {
    auto lhs = term();
    for (;;) {
      if (eat('+')) lhs = join(std::move(lhs), term(), Op::Add);
      else if (eat('-')) lhs = join(std::move(lhs), term(), Op::Sub);
      else return lhs;
    }
  }

  std::vector<Instr> term() {
    auto lhs = unary();
    for (;;) {
      skip();
      if (pos_ + 1 < s_.size() && s_[pos_] == '*' && s_[pos_ + 1] == '*') return lhs;
      if (eat('*')) lhs = join(std::move(lhs), unary(), Op::Mul);
      else if (eat('/')) lhs = join(std::move(lhs), unary(), Op::Div);
      else return lhs;
    }
  }

  std::vector<Instr> unary() {
    if (eat('-')) {
      auto c = unary();
      c.push_back(Instr{Op::Neg});
      return fold(std::move(c));
    }
    if (eat('+')) return unary();
    return power();
  }

  std::vector<Instr> power() {
    auto base = primary();
    skip();
    bool caret = eat('^');
    if (!caret && pos_ + 1 < s_.size() && s_[pos_] == '*' && s_[pos_ + 1] == '*') {
      pos_ += 2;
      caret = true;
    }
    if (caret) return join(std::move(base), unary(), Op::Pow);
    return base;
  }

  std::vector<Instr> primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = expr();
      if (!eat(')')) fail("missing ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return {Instr{Op::Const, Fn::Sin, 0, v}};
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string id = s_.substr(start, pos_ - start);
      if (id == "pi") return {Instr{Op::Const, Fn::Sin, 0, std::numbers::pi}};
      if (id == "e") return {Instr{Op::Const, Fn::Sin, 0, std::numbers::e}};
      if (id.size() >= 2 && id[0] == 'x' && std::all_of(id.begin() + 1, id.end(), ::isdigit)) {
        int k = std::stoi(id.substr(1));
        if (k < 1 || k > n_ + 1)
          fail("variable " + id + " outside x1..x" + std::to_string(n_ + 1));
        return {Instr{Op::Var, Fn::Sin, k - 1, 0}};
      }
      static const std::pair<const char*, Fn> table[] = {
          {"sin", Fn::Sin},   {"cos", Fn::Cos},   {"tan", Fn::Tan},   {"exp", Fn::Exp},   {"log", Fn::Log},
          {"sqrt", Fn::Sqrt}, {"tanh", Fn::Tanh}, {"sinh", Fn::Sinh}, {"cosh", Fn::Cosh}, {"atan", Fn::Atan}};
      for (const auto& [name, fn] : table) {
        if (id == name) {
          if (!eat('(')) fail("expected '(' after " + id);
          auto arg = expr();
          if (!eat(')')) fail("missing ')'");
          arg.push_back(Instr{Op::Call, fn});
          return fold(std::move(arg));
        }
      }
      fail("unknown identifier '" + id + "'");
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  int n_;
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression(int n, const std::string& text) : n_(n), text_(text) {
  if (text.find_first_not_of(" \t") == std::string::npos) throw ConfigurationError("empty K expression");
  code_ = Parser(n, text_).parse();
}

template <class T>
T Expression::run(const std::vector<T>& vars, const T& zero) const {
  std::vector<T> st;
  st.reserve(code_.size());
  for (const auto& i : code_) {
    switch (i.op) {
      case Op::Const: {
        T c = zero;
        if constexpr (std::is_same_v<T, double>) c = i.c;
        else c.v = i.c;
        st.push_back(std::move(c));
        break;
      }
      case Op::Var: st.push_back(vars[i.var]); break;
      case Op::Neg: st.back() = -st.back(); break;
      case Op::Call: st.back() = apply(i.fn, st.back()); break;
      default: {
        T b = std::move(st.back());
        st.pop_back();
        T& a = st.back();
        switch (i.op) {
          case Op::Add: a = a + b; break;
          case Op::Sub: a = a - b; break;
          case Op::Mul: a = a * b; break;
          case Op::Div: a = a / b; break;
          default: a = pow_op(a, b); break;
        }
      }
    }
  }
  return st.back();
}

double Expression::eval(const VecRef& x) const {
  // Fast path: evaluate with a small stack of doubles.
  std::vector<double> vars(x.data(), x.data() + x.size());
  return run<double>(vars, 0.0);
}

void Expression::eval_jet(const VecRef& x, double& value, Vec& grad, Mat* hess) const {
  const int d = static_cast<int>(x.size());
  bool second = hess != nullptr;
  Jet zero{0.0, Vec::Zero(d), second ? Mat::Zero(d, d) : Mat(), second};
  std::vector<Jet> vars(d, zero);
  for (int k = 0; k < d; ++k) {
    vars[k].v = x[k];
    vars[k].g[k] = 1.0;
  }
  Jet r = run<Jet>(vars, zero);
  value = r.v;
  grad = r.g;
  if (hess) *hess = r.h;
}

}  // namespace paneitz
