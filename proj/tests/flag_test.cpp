#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "srcurv/flag.hpp"

namespace srcurv {
namespace {

using P = Polynomial<Rational>;
using Ks = std::vector<std::size_t>;

std::vector<double> random_covector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0, 1);
  std::vector<double> p(n);
  double s = 0;
  for (auto& v : p) {
    v = g(rng);
    s += v * v;
  }
  for (auto& v : p) v /= std::sqrt(s);
  return p;
}

// rank[B, AB, ..., A^{j-1}B] for j = 1..n
Ks kalman_ranks(const DenseMatrix<Rational>& A, const DenseMatrix<Rational>& B) {
  const std::size_t n = A.rows(), k = B.cols();
  Ks out;
  DenseMatrix<Rational> blocks(n, 0), cur = B;
  for (std::size_t j = 1; j <= n; ++j) {
    DenseMatrix<Rational> next(n, blocks.cols() + k);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < blocks.cols(); ++c) next(r, c) = blocks(r, c);
      for (std::size_t c = 0; c < k; ++c) next(r, blocks.cols() + c) = cur(r, c);
    }
    blocks = next;
    out.push_back(exact_rank(blocks));
    if (out.back() == n) break;
    cur = A * cur;
  }
  return out;
}

TEST(Linearization, LqIsItsOwnLinearization) {
  auto m = load_model("lq:A=1 2|0 -1;B=0|1");
  for (double t : {0.0, 1.3}) {
    auto lin = linearization_matrices(m, at_base(m, {0.3, -0.7}), t);
    Mat<double> A(2, 2), B(2, 1);
    A << 1, 2, 0, -1;
    B << 0, 1;
    EXPECT_LT((lin.A - A).norm(), 1e-14);
    EXPECT_LT((lin.B - B).norm(), 1e-14);
  }
}

// u1 * D(1,0,-y/2) + u2 * D(0,1,x/2) has entries (3,2) = -u1/2 and (3,1) = u2/2.
TEST(Linearization, HeisenbergAtOrigin) {
  auto h = builtin_model("heisenberg");
  auto lin = linearization_matrices(h, at_base(h, {0.3, -1.1, 0.5}), 0.0);
  Mat<double> A = Mat<double>::Zero(3, 3);
  A(2, 0) = -1.1 / 2;
  A(2, 1) = -0.3 / 2;
  Mat<double> B = Mat<double>::Zero(3, 2);
  B(0, 0) = 1;
  B(1, 1) = 1;
  EXPECT_LT((lin.A - A).norm(), 1e-15);
  EXPECT_LT((lin.B - B).norm(), 1e-15);
}

TEST(GrowthVector, BuiltinValues) {
  auto h = builtin_model("heisenberg");
  EXPECT_EQ(growth_vector(h, at_base(h, {0.0, 1.0, 1.0}), 0.0, 6).k, (Ks{2, 3}));
  EXPECT_EQ(growth_vector(h, at_base(h, {0.6, 0.8, 0.0}), 0.7, 6).k, (Ks{2, 3}));
  auto di = load_model("lq:double_integrator");
  EXPECT_EQ(growth_vector(di, at_base(di, {1.0, 0.0}), 0.0, 6).k, (Ks{1, 2}));
  auto ti = load_model("lq:triple_integrator");
  EXPECT_EQ(growth_vector(ti, at_base(ti, {0.2, 1.0, 0.0}), 0.4, 6).k, (Ks{1, 2, 3}));
  for (const auto* spec : {"sphere2", "euclidean"}) {
    auto m = load_model(spec);
    EXPECT_EQ(growth_vector(m, at_base(m, {0.6, 0.8}), 0.3, 6).k, (Ks{2})) << spec;
  }
  auto e3 = load_model("euclidean:n=3");
  EXPECT_EQ(growth_vector(e3, at_base(e3, {1, 0, 0}), 0.0, 6).k, (Ks{3}));
}

TEST(GrowthVector, DepthOneStopsEarly) {
  auto h = builtin_model("heisenberg");
  auto g = growth_vector(h, at_base(h, {0.0, 1.0, 1.0}), 0.0, 1);
  EXPECT_EQ(g.k, (Ks{2}));
  EXPECT_THROW(growth_vector(h, at_base(h, {0.0, 1.0, 1.0}), 0.0, 0), std::invalid_argument);
}

// A vertical covector gives the constant curve: the flag never leaves the distribution.
TEST(GrowthVector, VerticalCovectorIsNotAmple) {
  auto h = builtin_model("heisenberg");
  auto g = growth_vector(h, at_base(h, {0.0, 0.0, 1.0}), 0.0, 4);
  EXPECT_EQ(g.dimension_reached(), 2u);
  EXPECT_THROW(young_diagram_and_dimension(g, 3), FlagError);
}

TEST(YoungDiagram, ConjugatePartitionArithmetic) {
  GrowthVector g;
  g.k = {2, 3};
  auto s = young_diagram_and_dimension(g, 3);
  EXPECT_EQ(s.diagram.rows, (Ks{2, 1}));
  EXPECT_EQ(s.geodesic_dimension, 5u);
  EXPECT_EQ(s.trace_I, 5u);
  g.k = {4};
  s = young_diagram_and_dimension(g, 4);
  EXPECT_EQ(s.diagram.rows, (Ks{1, 1, 1, 1}));
  EXPECT_EQ(s.geodesic_dimension, 4u);
  g.k = {1, 2};
  s = young_diagram_and_dimension(g, 2);
  EXPECT_EQ(s.diagram.rows, (Ks{2}));
  EXPECT_EQ(s.geodesic_dimension, 4u);
  EXPECT_EQ(s.trace_I, 4u);
  g.k = {3, 5, 6};
  s = young_diagram_and_dimension(g, 6);
  EXPECT_EQ(s.diagram.rows, (Ks{3, 2, 1}));
  EXPECT_EQ(s.geodesic_dimension, 3u + 3 * 2 + 5 * 1);
  EXPECT_EQ(s.trace_I, 14u);
}

TEST(FlagInequalities, IncrementsNonIncreasing) {
  GrowthVector g;
  g.k = {3, 5, 6};
  EXPECT_TRUE(flag_inequalities_hold(g));
  g.k = {1, 3};
  EXPECT_FALSE(flag_inequalities_hold(g));
  g.k = {2, 2, 3};
  EXPECT_FALSE(flag_inequalities_hold(g));
}

TEST(GrowthVector, InvariantsOnRandomCovectors) {
  std::mt19937_64 rng(2024);
  for (const auto* spec : {"heisenberg", "euclidean", "sphere2", "lq:double_integrator", "lq:triple_integrator",
                           "contact3d_perturbed", "lq:A=0 1 0 0|0 0 0 0|0 0 0 1|0 0 0 0;B=0 0|1 0|0 0|0 1"}) {
    auto m = load_model(spec);
    for (int i = 0; i < 100; ++i) {
      auto p = random_covector(rng, m.n());
      auto g = growth_vector(m, at_base(m, p), 0.0, 6);
      ASSERT_FALSE(g.indeterminate) << spec << ": " << g.diagnostic;
      ASSERT_FALSE(g.k.empty());
      EXPECT_GT(g.k.front(), 0u);
      for (std::size_t j = 1; j < g.k.size(); ++j) EXPECT_LE(g.k[j - 1], g.k[j]) << spec;
      EXPECT_LE(g.k.back(), m.n());
      if (g.k.back() == m.n()) EXPECT_TRUE(flag_inequalities_hold(g)) << spec << " " << to_string(g);
    }
  }
}

TEST(GrowthVector, LowerSemicontinuitySampling) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  auto m = load_model("contact3d_perturbed");
  auto l0 = at_base(m, {0.3, 0.9, 1.4});
  std::vector<GrowthVector> sample;
  Ks maxk;
  for (int i = 0; i < 10; ++i) {
    sample.push_back(growth_vector(m, l0, 0.5 + jitter(rng), 6));
    const auto& k = sample.back().k;
    if (k.size() > maxk.size()) maxk.resize(k.size(), 0);
    for (std::size_t j = 0; j < k.size(); ++j) maxk[j] = std::max(maxk[j], k[j]);
  }
  for (const auto& g : sample)
    for (std::size_t j = 0; j < g.k.size(); ++j) EXPECT_LE(g.k[j], maxk[j]);
}

TEST(GrowthVector, HeisenbergGenericity) {
  std::mt19937_64 rng(99);
  auto h = builtin_model("heisenberg");
  int checked = 0;
  for (int i = 0; i < 120; ++i) {
    auto p = random_covector(rng, 3);
    if (std::hypot(p[0], p[1]) < 1e-6) continue;
    EXPECT_EQ(growth_vector(h, at_base(h, p), 0.0, 6).k, (Ks{2, 3}));
    ++checked;
  }
  EXPECT_GE(checked, 100);
}

TEST(GrowthVector, Equiregularity) {
  auto h = builtin_model("heisenberg");
  auto r = equiregularity_check(h, at_base(h, {0.0, 1.0, 2.0}), 0.5, 6, 3);
  EXPECT_TRUE(r.equiregular);
  EXPECT_EQ(r.times.size(), 5u);
}

TEST(FlagFromBrackets, KalmanRanksForLq) {
  for (const auto* spec :
       {"lq:double_integrator", "lq:triple_integrator", "lq:A=1 2 0|0 -1 1|3 0 0;B=1|0|0", "lq:A=0 1 0|0 0 0|0 0 0;B=0 0|1 0|0 1"}) {
    auto m = load_model(spec);
    auto [name, params] = parse_builtin_spec(spec);
    DenseMatrix<Rational> A, B;
    if (params.count("preset"))
      std::tie(A, B) = lq_preset(params["preset"]);
    else {
      A = parse_matrix(params["A"]);
      B = parse_matrix(params["B"]);
    }
    std::vector<Rational> u(m.k(), Rational(1, 3));
    auto exact = flag_from_brackets(m, u);
    EXPECT_EQ(exact.k, kalman_ranks(A, B)) << spec;
    std::vector<double> p(m.n(), 0.5);
    EXPECT_EQ(growth_vector(m, at_base(m, p), 0.0, 6).k, exact.k) << spec;
  }
}

TEST(FlagFromBrackets, HeisenbergConstantControl) {
  auto h = builtin_model("heisenberg");
  auto exact = flag_from_brackets(h, {Rational(1), Rational(0)});
  EXPECT_EQ(exact.k, (Ks{2, 3}));
  // covector (1,0,0) is the straight line with constant control (1,0)
  EXPECT_EQ(growth_vector(h, at_base(h, {1, 0, 0}), 0.0, 6).k, exact.k);
  EXPECT_EQ(flag_from_brackets(h, {Rational(1), Rational(0)}, 1).k, (Ks{2}));
  auto e = builtin_model("euclidean");
  EXPECT_EQ(flag_from_brackets(e, {Rational(1), Rational(2)}).k, (Ks{2}));
}

TEST(Feedback, IdentityLeavesModelUnchanged) {
  auto h = builtin_model("heisenberg");
  PolynomialMatrix I{{P::constant(3, 1), P(3)}, {P(3), P::constant(3, 1)}};
  auto t = feedback_transform(h, {P(3), P(3)}, I);
  EXPECT_FALSE(t.drift().has_value());
  EXPECT_EQ(t.field(0), h.field(0));
  EXPECT_EQ(t.field(1), h.field(1));
}

TEST(Feedback, SingularPsiRejected) {
  auto h = builtin_model("heisenberg");
  auto x3 = P::variable(3, 2);
  PolynomialMatrix S{{x3, P(3)}, {P(3), P::constant(3, 1)}};
  EXPECT_THROW(feedback_transform(h, {P(3), P(3)}, S), ModelError);
}

TEST(Feedback, ConstantRotationKeepsGrowthVector) {
  auto h = builtin_model("heisenberg");
  PolynomialMatrix R{{P::constant(3, Rational(3, 5)), P::constant(3, Rational(-4, 5))},
                     {P::constant(3, Rational(4, 5)), P::constant(3, Rational(3, 5))}};
  auto t = feedback_transform(h, {P(3), P(3)}, R);
  EXPECT_EQ(growth_vector(t, at_base(t, {0.2, 0.9, 1.0}), 0.0, 6).k, (Ks{2, 3}));
  EXPECT_EQ(growth_vector_after_feedback(h, at_base(h, {0.2, 0.9, 1.0}), 0.4, {P(3), P(3)}, R, 6).k, (Ks{2, 3}));
}

// Polynomial stand-in for rot(x3): [[1 - x3^2/2, -x3], [x3, 1 - x3^2/2]], plus a state-dependent drift term.
TEST(Feedback, PositionDependentTransformSameCurve) {
  auto h = builtin_model("heisenberg");
  auto x3 = P::variable(3, 2);
  auto c = P::constant(3, 1) - Rational(1, 2) * (x3 * x3);
  PolynomialMatrix R{{c, -x3}, {x3, c}};
  std::vector<P> psi0{Rational(1, 4) * P::variable(3, 0), P(3)};
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i) {
    auto p = random_covector(rng, 3);
    auto l0 = at_base(h, p);
    for (double t : {0.0, 0.8}) {
      auto orig = growth_vector(h, l0, t, 6);
      auto moved = growth_vector_after_feedback(h, l0, t, psi0, R, 6);
      EXPECT_EQ(orig.k, moved.k);
    }
  }
  auto lq = load_model("lq:triple_integrator");
  PolynomialMatrix s{{P::constant(3, 2) + P::variable(3, 0)}};
  auto g0 = growth_vector(lq, at_base(lq, {0.1, 0.5, -0.3}), 0.2, 6);
  auto g1 = growth_vector_after_feedback(lq, at_base(lq, {0.1, 0.5, -0.3}), 0.2, {P::variable(3, 1)}, s, 6);
  EXPECT_EQ(g0.k, g1.k);
}

}  // namespace
}  // namespace srcurv
