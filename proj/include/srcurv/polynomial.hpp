#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "srcurv/rational.hpp"

namespace srcurv {

using Exponents = std::vector<unsigned>;

// Multivariate polynomial in x1..xn, sparse over monomials. Coefficients are Rational or a floating type.
template <class C>
class Polynomial {
 public:
  using Coefficient = C;
  using TermMap = std::map<Exponents, C>;

  explicit Polynomial(std::size_t dim = 0) : dim_(dim) {}

  static Polynomial constant(std::size_t dim, const C& c) {
    Polynomial p(dim);
    p.add_term(Exponents(dim, 0), c);
    return p;
  }
  static Polynomial variable(std::size_t dim, std::size_t i) {
    if (i >= dim) throw std::out_of_range("variable index out of range");
    Exponents e(dim, 0);
    e[i] = 1;
    Polynomial p(dim);
    p.add_term(e, C(1));
    return p;
  }

  std::size_t dim() const { return dim_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  unsigned degree() const {
    unsigned d = 0;
    for (const auto& [e, c] : terms_) {
      unsigned s = 0;
      for (auto v : e) s += v;
      d = std::max(d, s);
    }
    return d;
  }

  void add_term(const Exponents& e, const C& c) {
    if (e.size() != dim_) throw std::invalid_argument("monomial dimension mismatch");
    if (c == C(0)) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == C(0)) terms_.erase(it);
    }
  }

  C coefficient(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? C(0) : it->second;
  }

  Polynomial& operator+=(const Polynomial& o) {
    check_dim(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    check_dim(o);
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  Polynomial& operator*=(const C& s) {
    if (s == C(0)) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator-(Polynomial a) { return a *= C(-1); }
  friend Polynomial operator*(Polynomial a, const C& s) { return a *= s; }
  friend Polynomial operator*(const C& s, Polynomial a) { return a *= s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_dim(b);
    Polynomial out(a.dim_);
    Exponents e(a.dim_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        for (std::size_t i = 0; i < a.dim_; ++i) e[i] = ea[i] + eb[i];
        out.add_term(e, ca * cb);
      }
    return out;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.dim_ == b.dim_ && a.terms_ == b.terms_;
  }

  Polynomial derivative(std::size_t i) const {
    if (i >= dim_) throw std::out_of_range("derivative variable out of range");
    Polynomial out(dim_);
    for (const auto& [e, c] : terms_) {
      if (e[i] == 0) continue;
      Exponents d = e;
      d[i] -= 1;
      out.add_term(d, c * C(static_cast<long>(e[i])));
    }
    return out;
  }

  // Drops every monomial of total degree above max_degree.
  Polynomial truncated(unsigned max_degree) const {
    Polynomial out(dim_);
    for (const auto& [e, c] : terms_) {
      unsigned s = 0;
      for (auto v : e) s += v;
      if (s <= max_degree) out.terms_.emplace(e, c);
    }
    return out;
  }

  // Evaluates at x for any ring T constructible from C (doubles, Rationals, truncated series).
  template <class T>
  T evaluate(std::span<const T> x) const {
    if (x.size() != dim_) throw std::invalid_argument("evaluation point dimension mismatch");
    T acc = T(0);
    for (const auto& [e, c] : terms_) {
      T term = T(c);
      for (std::size_t i = 0; i < dim_; ++i)
        for (unsigned k = 0; k < e[i]; ++k) term = term * x[i];
      acc = acc + term;
    }
    return acc;
  }
  template <class T>
  T evaluate(const std::vector<T>& x) const {
    return evaluate(std::span<const T>(x));
  }

  template <class D>
  Polynomial<D> convert() const {
    Polynomial<D> out(dim_);
    for (const auto& [e, c] : terms_) {
      if constexpr (std::is_same_v<C, Rational> && !std::is_same_v<D, Rational>) {
        out.add_term(e, to_real<D>(c));
      } else if constexpr (std::is_same_v<D, Rational> && !std::is_same_v<C, Rational>) {
        out.add_term(e, exact_rational(static_cast<double>(c)));
      } else {
        out.add_term(e, static_cast<D>(c));
      }
    }
    return out;
  }

  // Substitutes x -> x + shift (re-centres at a point).
  Polynomial shifted(const std::vector<C>& shift) const {
    if (shift.size() != dim_) throw std::invalid_argument("shift dimension mismatch");
    Polynomial out(dim_);
    std::vector<Polynomial> lin;
    for (std::size_t i = 0; i < dim_; ++i) lin.push_back(variable(dim_, i) + constant(dim_, shift[i]));
    for (const auto& [e, c] : terms_) {
      Polynomial term = constant(dim_, c);
      for (std::size_t i = 0; i < dim_; ++i)
        for (unsigned k = 0; k < e[i]; ++k) term = term * lin[i];
      out += term;
    }
    return out;
  }

 private:
  void check_dim(const Polynomial& o) const {
    if (o.dim_ != dim_) throw std::invalid_argument("polynomial dimension mismatch");
  }

  std::size_t dim_;
  TermMap terms_;
};

namespace detail {

template <class C>
std::string coefficient_text(const C& c) {
  if constexpr (std::is_same_v<C, Rational>) {
    return to_string(c);
  } else {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<C>::max_digits10) << c;
    return os.str();
  }
}

}  // namespace detail

// Canonical text: terms in monomial order, "c*x1^2*x3" with unit coefficients elided.
template <class C>
std::string to_string(const Polynomial<C>& p) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [e, c] : p.terms()) {
    bool neg = c < C(0);
    C mag = neg ? C(-c) : c;
    if (first) {
      if (neg) out += "-";
    } else {
      out += neg ? " - " : " + ";
    }
    first = false;
    bool has_var = std::any_of(e.begin(), e.end(), [](unsigned v) { return v > 0; });
    bool wrote = false;
    if (!has_var || mag != C(1)) {
      out += detail::coefficient_text(mag);
      wrote = true;
    }
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      if (wrote) out += "*";
      out += "x" + std::to_string(i + 1);
      if (e[i] > 1) out += "^" + std::to_string(e[i]);
      wrote = true;
    }
  }
  return out;
}

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t pos, const std::string& msg)
      : std::runtime_error("parse error at " + std::to_string(pos) + ": " + msg), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

namespace detail {

class PolyParser {
 public:
  PolyParser(std::string_view text, std::size_t dim) : s_(text), dim_(dim) {}

  Polynomial<Rational> parse() {
    Polynomial<Rational> out(dim_);
    skip();
    bool neg = false;
    if (peek('+') || peek('-')) {
      neg = s_[i_] == '-';
      ++i_;
    }
    out += term(neg);
    for (;;) {
      skip();
      if (i_ == s_.size()) break;
      if (!(peek('+') || peek('-'))) throw ParseError(i_, "expected '+' or '-'");
      neg = s_[i_] == '-';
      ++i_;
      out += term(neg);
    }
    return out;
  }

 private:
  bool peek(char c) const { return i_ < s_.size() && s_[i_] == c; }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  Polynomial<Rational> term(bool neg) {
    skip();
    Rational coeff = 1;
    Exponents e(dim_, 0);
    if (i_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.')) {
      coeff = number();
    } else {
      factor(e);
    }
    for (;;) {
      skip();
      if (!peek('*')) break;
      ++i_;
      skip();
      factor(e);
    }
    Polynomial<Rational> p(dim_);
    p.add_term(e, neg ? Rational(-coeff) : coeff);
    return p;
  }

  Rational number() {
    std::size_t start = i_;
    auto is_num = [&](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '/'; };
    while (i_ < s_.size()) {
      char c = s_[i_];
      if (is_num(c)) {
        ++i_;
      } else if ((c == 'e' || c == 'E') && i_ + 1 < s_.size() &&
                 (std::isdigit(static_cast<unsigned char>(s_[i_ + 1])) || s_[i_ + 1] == '-' || s_[i_ + 1] == '+')) {
        i_ += 2;
      } else {
        break;
      }
    }
    try {
      return parse_rational(s_.substr(start, i_ - start));
    } catch (const std::exception& ex) {
      throw ParseError(start, ex.what());
    }
  }

  void factor(Exponents& e) {
    if (!peek('x')) throw ParseError(i_, "expected variable 'x<index>'");
    std::size_t start = i_++;
    std::size_t d0 = i_;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    if (i_ == d0) throw ParseError(start, "variable needs an index");
    unsigned long idx = std::stoul(std::string(s_.substr(d0, i_ - d0)));
    if (idx == 0 || idx > dim_)
      throw ParseError(start, "unknown variable x" + std::to_string(idx) + " (dimension " + std::to_string(dim_) + ")");
    unsigned power = 1;
    skip();
    if (peek('^')) {
      ++i_;
      skip();
      if (peek('-')) throw ParseError(i_, "negative exponent");
      std::size_t p0 = i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      if (i_ == p0) throw ParseError(p0, "expected exponent");
      power = static_cast<unsigned>(std::stoul(std::string(s_.substr(p0, i_ - p0))));
    }
    e[idx - 1] += power;
  }

  std::string_view s_;
  std::size_t dim_;
  std::size_t i_ = 0;
};

}  // namespace detail

inline Polynomial<Rational> parse_polynomial(std::string_view text, std::size_t dim) {
  return detail::PolyParser(text, dim).parse();
}

// Polynomial compiled for repeated evaluation against a shared table of variable powers.
template <class Real>
class CompiledPolynomial {
 public:
  struct Term {
    Real coeff;
    std::vector<std::pair<std::size_t, unsigned>> factors;
  };

  CompiledPolynomial() = default;
  template <class C>
  explicit CompiledPolynomial(const Polynomial<C>& p) : dim_(p.dim()) {
    for (const auto& [e, c] : p.terms()) {
      Term t;
      if constexpr (std::is_same_v<C, Rational>)
        t.coeff = to_real<Real>(c);
      else
        t.coeff = static_cast<Real>(c);
      for (std::size_t i = 0; i < e.size(); ++i)
        if (e[i] > 0) t.factors.emplace_back(i, e[i]);
      terms_.push_back(std::move(t));
    }
  }

  bool is_zero() const { return terms_.empty(); }
  const std::vector<Term>& terms() const { return terms_; }
  std::size_t dim() const { return dim_; }

  unsigned max_exponent(std::size_t var) const {
    unsigned m = 0;
    for (const auto& t : terms_)
      for (const auto& [v, e] : t.factors)
        if (v == var) m = std::max(m, e);
    return m;
  }

  // powers[v][e] = x_v^e
  template <class T>
  T operator()(const std::vector<std::vector<T>>& powers) const {
    T acc = T(Real(0));
    for (const auto& t : terms_) {
      if (t.factors.empty()) {
        acc = acc + T(t.coeff);
        continue;
      }
      T prod = powers[t.factors[0].first][t.factors[0].second];
      for (std::size_t f = 1; f < t.factors.size(); ++f) prod = prod * powers[t.factors[f].first][t.factors[f].second];
      acc = acc + prod * t.coeff;
    }
    return acc;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<Term> terms_;
};

template <class T>
std::vector<std::vector<T>> power_table(std::span<const T> x, const std::vector<unsigned>& max_exp) {
  std::vector<std::vector<T>> pw(x.size());
  for (std::size_t v = 0; v < x.size(); ++v) {
    pw[v].reserve(max_exp[v] + 1);
    pw[v].push_back(T(1));
    if (max_exp[v] >= 1) pw[v].push_back(x[v]);
    for (unsigned e = 2; e <= max_exp[v]; ++e) pw[v].push_back(pw[v][e - 1] * x[v]);
  }
  return pw;
}

}  // namespace srcurv
