// Copyright 2026 The qgl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace qgl {

class ExpressionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Real-valued arithmetic expression over named variables, compiled once.
///
/// Grammar (usual precedence, `^` right-associative and binding tighter
/// than unary minus):
///   expr  := term (('+' | '-') term)*
///   term  := unary (('*' | '/') unary)*
///   unary := ('+' | '-') unary | power
///   power := atom ('^' unary)?
///   atom  := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
/// Names resolve to variables first, then to constants (pi, e). Functions:
/// sin cos tan asin acos atan sinh cosh tanh exp log sqrt abs (one argument),
/// atan2 pow min max (two).
class Expression {
 public:
  using Eval = std::function<double(const double*)>;

  Expression() = default;

  Expression(const std::string& text, const std::vector<std::string>& variables,
             const std::map<std::string, double>& constants = {})
      : text_(text) {
    Parser p{text, variables, constants};
    eval_ = p.parse();
  }

  static Expression constant(double v) {
    Expression e;
    e.text_ = std::to_string(v);
    e.eval_ = [v](const double*) { return v; };
    return e;
  }

  double operator()(const double* vars) const { return eval_(vars); }
  template <class Vec>
  double operator()(const Vec& v) const {
    return eval_(v.data());
  }

  const std::string& text() const { return text_; }

 private:
  struct Parser {
    const std::string& s;
    const std::vector<std::string>& vars;
    const std::map<std::string, double>& consts;
    size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
      throw ExpressionError("expression '" + s + "': " + what + " at column " + std::to_string(pos + 1));
    }

    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool accept(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    Eval parse() {
      Eval e = expr();
      skip();
      if (pos != s.size()) fail("unexpected '" + std::string(1, s[pos]) + "'");
      return e;
    }

    Eval expr() {
      Eval lhs = term();
      for (;;) {
        if (accept('+')) {
          lhs = [a = lhs, b = term()](const double* x) { return a(x) + b(x); };
        } else if (accept('-')) {
          lhs = [a = lhs, b = term()](const double* x) { return a(x) - b(x); };
        } else {
          return lhs;
        }
      }
    }

    Eval term() {
      Eval lhs = unary();
      for (;;) {
        if (accept('*')) {
          lhs = [a = lhs, b = unary()](const double* x) { return a(x) * b(x); };
        } else if (accept('/')) {
          lhs = [a = lhs, b = unary()](const double* x) { return a(x) / b(x); };
        } else {
          return lhs;
        }
      }
    }

    Eval unary() {
      if (accept('-')) return [a = unary()](const double* x) { return -a(x); };
      if (accept('+')) return unary();
      return power();
    }

    Eval power() {
      Eval base = atom();
      if (accept('^')) return [a = base, b = unary()](const double* x) { return std::pow(a(x), b(x)); };
      return base;
    }

    Eval atom() {
      skip();
      if (pos >= s.size()) fail("unexpected end of input");
      const char c = s[pos];
      if (c == '(') {
        ++pos;
        Eval e = expr();
        if (!accept(')')) fail("expected ')'");
        return e;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
      fail("unexpected '" + std::string(1, c) + "'");
    }

    Eval number() {
      double v = 0.0;
      const auto [end, ec] = std::from_chars(s.data() + pos, s.data() + s.size(), v);
      if (ec != std::errc()) fail("malformed number");
      pos = static_cast<size_t>(end - s.data());
      return [v](const double*) { return v; };
    }

    Eval name() {
      const size_t start = pos;
      while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
      const std::string id = s.substr(start, pos - start);
      if (accept('(')) return call(id);
      for (size_t k = 0; k < vars.size(); ++k)
        if (vars[k] == id) return [k](const double* x) { return x[k]; };
      if (auto it = consts.find(id); it != consts.end()) return [v = it->second](const double*) { return v; };
      if (id == "pi") return [](const double*) { return std::numbers::pi; };
      if (id == "e") return [](const double*) { return std::numbers::e; };
      pos = start;
      fail("unknown name '" + id + "'");
    }

    Eval call(const std::string& fn) {
      std::vector<Eval> args{expr()};
      while (accept(',')) args.push_back(expr());
      if (!accept(')')) fail("expected ')' after arguments of " + fn);
      using F1 = double (*)(double);
      static const std::map<std::string, F1> unary_fns = {
          {"sin", [](double v) { return std::sin(v); }},   {"cos", [](double v) { return std::cos(v); }},
          {"tan", [](double v) { return std::tan(v); }},   {"asin", [](double v) { return std::asin(v); }},
          {"acos", [](double v) { return std::acos(v); }}, {"atan", [](double v) { return std::atan(v); }},
          {"sinh", [](double v) { return std::sinh(v); }}, {"cosh", [](double v) { return std::cosh(v); }},
          {"tanh", [](double v) { return std::tanh(v); }}, {"exp", [](double v) { return std::exp(v); }},
          {"log", [](double v) { return std::log(v); }},   {"sqrt", [](double v) { return std::sqrt(v); }},
          {"abs", [](double v) { return std::abs(v); }}};
      using F2 = double (*)(double, double);
      static const std::map<std::string, F2> binary_fns = {
          {"atan2", [](double a, double b) { return std::atan2(a, b); }},
          {"pow", [](double a, double b) { return std::pow(a, b); }},
          {"min", [](double a, double b) { return std::fmin(a, b); }},
          {"max", [](double a, double b) { return std::fmax(a, b); }}};
      if (auto it = unary_fns.find(fn); it != unary_fns.end()) {
        if (args.size() != 1) fail(fn + " takes one argument");
        return [f = it->second, a = args[0]](const double* x) { return f(a(x)); };
      }
      if (auto it = binary_fns.find(fn); it != binary_fns.end()) {
        if (args.size() != 2) fail(fn + " takes two arguments");
        return [f = it->second, a = args[0], b = args[1]](const double* x) { return f(a(x), b(x)); };
      }
      fail("unknown function '" + fn + "'");
    }
  };

  std::string text_;
  Eval eval_ = [](const double*) { return 0.0; };
};

}  // namespace qgl
