#include <random>

#include <gtest/gtest.h>

#include "srcurv/vector_field.hpp"

namespace srcurv {
namespace {

using P = Polynomial<Rational>;
using F = PolyVectorField<Rational>;

P random_poly(std::mt19937& rng, std::size_t n, unsigned max_deg, int terms) {
  std::uniform_int_distribution<int> num(-5, 5), den(1, 4), ex(0, static_cast<int>(max_deg));
  P p(n);
  for (int t = 0; t < terms; ++t) {
    Exponents e(n);
    unsigned total = 0;
    for (auto& v : e) {
      v = static_cast<unsigned>(ex(rng));
      total += v;
    }
    if (total > max_deg) continue;
    p.add_term(e, Rational(num(rng), den(rng)));
  }
  return p;
}

F random_field(std::mt19937& rng, std::size_t n) {
  std::vector<P> c;
  for (std::size_t i = 0; i < n; ++i) c.push_back(random_poly(rng, n, 3, 4));
  return F(c);
}

TEST(Polynomial, ParsesHeisenbergField) {
  auto X = parse_polynomial_field({"1", "0", "-1/2*x2"});
  ASSERT_EQ(X.dim(), 3u);
  EXPECT_EQ(X[0], P::constant(3, 1));
  EXPECT_TRUE(X[1].is_zero());
  EXPECT_EQ(X[2], Rational(-1, 2) * P::variable(3, 1));
}

TEST(Polynomial, ZeroField) {
  auto Z = parse_polynomial_field({"0", "0", "0"});
  EXPECT_TRUE(Z.is_zero());
}

TEST(Polynomial, ArityViolation) {
  EXPECT_THROW(parse_polynomial_field({"x1^2*x2 - 1/2"}, 2), std::invalid_argument);
}

TEST(Polynomial, ParseErrorsCarryPosition) {
  try {
    parse_polynomial("x1 + + x2", 2);
    FAIL() << "accepted malformed input";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 5u);
  }
  EXPECT_THROW(parse_polynomial("x3", 2), ParseError);
  EXPECT_THROW(parse_polynomial("x1^-2", 2), ParseError);
  EXPECT_THROW(parse_polynomial("2*", 2), ParseError);
  EXPECT_THROW(parse_polynomial("1/0", 2), ParseError);
}

TEST(Polynomial, DecimalAndWhitespace) {
  auto p = parse_polynomial("  0.25 * x1 ^ 2-1.5e-1*x2 + 3", 2);
  EXPECT_EQ(p.coefficient({2, 0}), Rational(1, 4));
  EXPECT_EQ(p.coefficient({0, 1}), Rational(-3, 20));
  EXPECT_EQ(p.coefficient({0, 0}), Rational(3));
  EXPECT_EQ(parse_polynomial("x1*x1*x2", 2), parse_polynomial("x1^2*x2", 2));
}

TEST(Polynomial, CancellationRemovesTerms) {
  auto p = parse_polynomial("x1 - x1 + 0*x2", 2);
  EXPECT_TRUE(p.is_zero());
  EXPECT_EQ(to_string(p), "0");
}

TEST(Polynomial, PrintReparseRoundTrip) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_poly(rng, 4, 4, 6);
    auto text = to_string(p);
    auto q = parse_polynomial(text, 4);
    EXPECT_EQ(p, q) << text;
    EXPECT_EQ(to_string(q), text);
  }
  Polynomial<double> d(2);
  d.add_term({1, 0}, 0.1);
  d.add_term({0, 3}, -1.0 / 3.0);
  auto back = parse_polynomial(to_string(d), 2).convert<double>();
  EXPECT_EQ(back, d);
}

TEST(Polynomial, DerivativeAndEvaluate) {
  auto p = parse_polynomial("x1^3*x2 - 2*x2^2 + 5", 2);
  EXPECT_EQ(p.derivative(0), parse_polynomial("3*x1^2*x2", 2));
  EXPECT_EQ(p.derivative(1), parse_polynomial("x1^3 - 4*x2", 2));
  std::vector<Rational> x{Rational(1, 2), Rational(-3)};
  EXPECT_EQ(p.evaluate(x), Rational(-3, 8) - 18 + 5);
}

TEST(Polynomial, ShiftRecentres) {
  auto p = parse_polynomial("x1^2*x2 + x2", 2);
  std::vector<Rational> s{Rational(1), Rational(-2)};
  auto q = p.shifted(s);
  std::vector<Rational> at{Rational(3, 7), Rational(5, 3)};
  std::vector<Rational> moved{at[0] + s[0], at[1] + s[1]};
  EXPECT_EQ(q.evaluate(at), p.evaluate(moved));
}

TEST(LieBracket, HeisenbergGivesVerticalField) {
  auto X = parse_polynomial_field({"1", "0", "-1/2*x2"});
  auto Y = parse_polynomial_field({"0", "1", "1/2*x1"});
  EXPECT_EQ(lie_bracket(X, Y), F::coordinate(3, 2));
}

TEST(LieBracket, SelfBracketVanishes) {
  std::mt19937 rng(3);
  for (int i = 0; i < 10; ++i) {
    auto V = random_field(rng, 3);
    EXPECT_TRUE(lie_bracket(V, V).is_zero());
  }
}

TEST(LieBracket, AntisymmetryAndBilinearity) {
  std::mt19937 rng(5);
  for (int i = 0; i < 10; ++i) {
    auto U = random_field(rng, 3), V = random_field(rng, 3), W = random_field(rng, 3);
    EXPECT_EQ(lie_bracket(V, W), Rational(-1) * lie_bracket(W, V));
    Rational a(2, 3);
    EXPECT_EQ(lie_bracket(a * U + V, W), a * lie_bracket(U, W) + lie_bracket(V, W));
  }
}

TEST(LieBracket, JacobiIdentityExact) {
  std::mt19937 rng(7);
  for (int i = 0; i < 20; ++i) {
    auto U = random_field(rng, 3), V = random_field(rng, 3), W = random_field(rng, 3);
    auto sum = lie_bracket(U, lie_bracket(V, W)) + lie_bracket(V, lie_bracket(W, U)) + lie_bracket(W, lie_bracket(U, V));
    EXPECT_TRUE(sum.is_zero());
  }
}

// [g d1, g d2] = g (d1 g) d2 - g (d2 g) d1 by the product rule, with d1 g = x1/2 and d2 g = x2/2 done by hand.
TEST(LieBracket, SphereFrameMatchesProductRule) {
  const std::string g = "1 + 1/4*x1^2 + 1/4*x2^2";
  auto X1 = parse_polynomial_field({g, "0"});
  auto X2 = parse_polynomial_field({"0", g});
  auto gp = parse_polynomial(g, 2);
  auto d1g = parse_polynomial("1/2*x1", 2);
  auto d2g = parse_polynomial("1/2*x2", 2);
  F oracle(std::vector<P>{-(gp * d2g), gp * d1g});
  EXPECT_EQ(lie_bracket(X1, X2), oracle);
}

TEST(LieBracket, DimensionMismatchThrows) {
  EXPECT_THROW(lie_bracket(F::coordinate(2, 0), F::coordinate(3, 0)), std::invalid_argument);
}

}  // namespace
}  // namespace srcurv
