#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <type_traits>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace srcurv {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Exact binary value of a finite double.
inline Rational exact_rational(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite value has no rational form");
  if (v == 0.0) return Rational(0);
  int e = 0;
  double m = std::frexp(v, &e);
  auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
  e -= 53;
  Integer num(mant);
  if (e >= 0) return Rational(num << e);
  return Rational(num, Integer(1) << (-e));
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

template <class Real>
Real to_real(const Rational& r) {
  if constexpr (std::is_same_v<Real, Rational>) {
    return r;
  } else {
    return r.convert_to<Real>();
  }
}

inline std::string to_string(const Rational& r) {
  const auto& num = boost::multiprecision::numerator(r);
  const auto& den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

// Accepts "p", "p/q", decimals such as "0.25", "-1.5e-3".
inline Rational parse_rational(std::string_view s) {
  if (s.empty()) throw std::invalid_argument("empty number");
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '+' || s[0] == '-') {
    neg = s[0] == '-';
    ++i;
  }
  auto digits = [&](std::size_t& pos) {
    std::size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    return s.substr(start, pos - start);
  };
  auto int_part = digits(i);
  Rational out;
  if (i < s.size() && s[i] == '/') {
    ++i;
    auto den = digits(i);
    if (int_part.empty() || den.empty() || i != s.size())
      throw std::invalid_argument("malformed rational '" + std::string(s) + "'");
    std::string den_digits(den);
    den_digits.erase(0, std::min(den_digits.find_first_not_of('0'), den_digits.size() - 1));
    Integer d{den_digits};
    if (d == 0) throw std::invalid_argument("zero denominator");
    std::string num_digits(int_part);
    num_digits.erase(0, std::min(num_digits.find_first_not_of('0'), num_digits.size() - 1));
    out = Rational(Integer{num_digits}, d);
  } else {
    std::string_view frac;
    if (i < s.size() && s[i] == '.') {
      ++i;
      frac = digits(i);
    }
    if (int_part.empty() && frac.empty()) throw std::invalid_argument("malformed number '" + std::string(s) + "'");
    long exp10 = 0;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
      ++i;
      bool eneg = false;
      if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        eneg = s[i] == '-';
        ++i;
      }
      auto ed = digits(i);
      if (ed.empty() || ed.size() > 6) throw std::invalid_argument("malformed exponent in '" + std::string(s) + "'");
      exp10 = std::stol(std::string(ed));
      if (eneg) exp10 = -exp10;
    }
    if (i != s.size()) throw std::invalid_argument("trailing characters in '" + std::string(s) + "'");
    std::string mant_digits = std::string(int_part) + std::string(frac);
    mant_digits.erase(0, std::min(mant_digits.find_first_not_of('0'), mant_digits.size()));
    Integer mant{mant_digits.empty() ? std::string("0") : mant_digits};
    exp10 -= static_cast<long>(frac.size());
    Integer p10 = boost::multiprecision::pow(Integer(10), static_cast<unsigned>(std::labs(exp10)));
    out = exp10 >= 0 ? Rational(mant * p10) : Rational(mant, p10);
  }
  return neg ? Rational(-out) : out;
}

inline Integer factorial(unsigned n) {
  Integer f = 1;
  for (unsigned i = 2; i <= n; ++i) f *= i;
  return f;
}

inline Integer binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  return factorial(n) / (factorial(k) * factorial(n - k));
}

}  // namespace srcurv
