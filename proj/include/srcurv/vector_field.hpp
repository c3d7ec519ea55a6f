#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "srcurv/polynomial.hpp"

namespace srcurv {

template <class C>
class PolyVectorField {
 public:
  PolyVectorField() = default;
  explicit PolyVectorField(std::vector<Polynomial<C>> components) : comps_(std::move(components)) {
    for (const auto& c : comps_)
      if (c.dim() != comps_.size()) throw std::invalid_argument("vector field component has wrong variable count");
  }
  static PolyVectorField zero(std::size_t n) { return PolyVectorField(std::vector<Polynomial<C>>(n, Polynomial<C>(n))); }
  static PolyVectorField coordinate(std::size_t n, std::size_t i) {
    auto v = zero(n);
    v.comps_[i] = Polynomial<C>::constant(n, C(1));
    return v;
  }

  std::size_t dim() const { return comps_.size(); }
  const Polynomial<C>& operator[](std::size_t i) const { return comps_[i]; }
  Polynomial<C>& operator[](std::size_t i) { return comps_[i]; }
  const std::vector<Polynomial<C>>& components() const { return comps_; }

  bool is_zero() const {
    for (const auto& c : comps_)
      if (!c.is_zero()) return false;
    return true;
  }

  // Lie derivative of a function along the field.
  Polynomial<C> apply(const Polynomial<C>& f) const {
    if (f.dim() != dim()) throw std::invalid_argument("function dimension mismatch");
    Polynomial<C> out(dim());
    for (std::size_t j = 0; j < dim(); ++j)
      if (!comps_[j].is_zero()) out += comps_[j] * f.derivative(j);
    return out;
  }

  template <class T>
  std::vector<T> evaluate(std::span<const T> x) const {
    std::vector<T> v;
    v.reserve(dim());
    for (const auto& c : comps_) v.push_back(c.evaluate(x));
    return v;
  }
  template <class T>
  std::vector<T> evaluate(const std::vector<T>& x) const {
    return evaluate(std::span<const T>(x));
  }

  PolyVectorField& operator+=(const PolyVectorField& o) {
    check(o);
    for (std::size_t i = 0; i < dim(); ++i) comps_[i] += o.comps_[i];
    return *this;
  }
  PolyVectorField& operator-=(const PolyVectorField& o) {
    check(o);
    for (std::size_t i = 0; i < dim(); ++i) comps_[i] -= o.comps_[i];
    return *this;
  }
  friend PolyVectorField operator+(PolyVectorField a, const PolyVectorField& b) { return a += b; }
  friend PolyVectorField operator-(PolyVectorField a, const PolyVectorField& b) { return a -= b; }
  friend PolyVectorField operator*(const Polynomial<C>& f, PolyVectorField v) {
    for (auto& c : v.comps_) c = f * c;
    return v;
  }
  friend PolyVectorField operator*(const C& s, PolyVectorField v) {
    for (auto& c : v.comps_) c *= s;
    return v;
  }
  friend bool operator==(const PolyVectorField& a, const PolyVectorField& b) { return a.comps_ == b.comps_; }

  template <class D>
  PolyVectorField<D> convert() const {
    std::vector<Polynomial<D>> out;
    for (const auto& c : comps_) out.push_back(c.template convert<D>());
    return PolyVectorField<D>(std::move(out));
  }

  PolyVectorField shifted(const std::vector<C>& shift) const {
    std::vector<Polynomial<C>> out;
    for (const auto& c : comps_) out.push_back(c.shifted(shift));
    return PolyVectorField(std::move(out));
  }

  PolyVectorField truncated(unsigned deg) const {
    std::vector<Polynomial<C>> out;
    for (const auto& c : comps_) out.push_back(c.truncated(deg));
    return PolyVectorField(std::move(out));
  }

 private:
  void check(const PolyVectorField& o) const {
    if (o.dim() != dim()) throw std::invalid_argument("vector field dimension mismatch");
  }
  std::vector<Polynomial<C>> comps_;
};

// [V,W] = (DW)V - (DV)W
template <class C>
PolyVectorField<C> lie_bracket(const PolyVectorField<C>& v, const PolyVectorField<C>& w) {
  if (v.dim() != w.dim()) throw std::invalid_argument("lie_bracket: dimension mismatch");
  const std::size_t n = v.dim();
  std::vector<Polynomial<C>> out(n, Polynomial<C>(n));
  for (std::size_t i = 0; i < n; ++i) out[i] = v.apply(w[i]) - w.apply(v[i]);
  return PolyVectorField<C>(std::move(out));
}

template <class C>
std::vector<std::string> to_strings(const PolyVectorField<C>& v) {
  std::vector<std::string> out;
  for (const auto& c : v.components()) out.push_back(to_string(c));
  return out;
}

// One expression per component; variables x1..xn with n the component count unless given.
inline PolyVectorField<Rational> parse_polynomial_field(const std::vector<std::string>& exprs, std::size_t n = 0) {
  if (n == 0) n = exprs.size();
  if (exprs.size() != n)
    throw std::invalid_argument("field has " + std::to_string(exprs.size()) + " components, expected " +
                                std::to_string(n));
  std::vector<Polynomial<Rational>> comps;
  for (const auto& e : exprs) comps.push_back(parse_polynomial(e, n));
  return PolyVectorField<Rational>(std::move(comps));
}

}  // namespace srcurv
