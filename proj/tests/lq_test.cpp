#include <random>

#include <gtest/gtest.h>

#include "srcurv/jacobi.hpp"
#include "srcurv/lq.hpp"

namespace srcurv {
namespace {

using Ks = std::vector<std::size_t>;

LQSystem preset(const std::string& name) {
  auto [A, B] = lq_preset(name);
  return make_lq_system(A, B);
}

// Random small integer pairs, kept when controllable.
std::vector<LQSystem> random_systems(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> entry(-2, 2), dim(2, 4);
  std::vector<LQSystem> out;
  while (static_cast<int>(out.size()) < count) {
    const std::size_t n = static_cast<std::size_t>(dim(rng));
    const std::size_t k = 1 + static_cast<std::size_t>(rng() % 2);
    DenseMatrix<Rational> A(n, n), B(n, k);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) A(i, j) = entry(rng);
      for (std::size_t j = 0; j < k; ++j) B(i, j) = entry(rng);
    }
    try {
      out.push_back(make_lq_system(A, B));
    } catch (const LQError&) {
    }
  }
  return out;
}

TEST(LQSystem, KroneckerIndices) {
  EXPECT_EQ(preset("double_integrator").kronecker, (Ks{2}));
  EXPECT_EQ(preset("triple_integrator").kronecker, (Ks{3}));
  EXPECT_EQ(preset("triple_integrator").depth, 3u);
  auto s = make_lq_system(parse_matrix("0 1 0 0|0 0 0 0|0 0 0 1|0 0 0 0"), parse_matrix("0 0|1 0|0 0|0 1"));
  EXPECT_EQ(s.kronecker, (Ks{2, 2}));
  auto u = make_lq_system(parse_matrix("0 1 0|0 0 1|0 0 0"), parse_matrix("0 1|0 0|1 0"));
  EXPECT_EQ(u.kronecker, (Ks{2, 1}));
  EXPECT_THROW(make_lq_system(parse_matrix("0 0|0 0"), parse_matrix("1|0")), LQError);
  EXPECT_THROW(make_lq_system(parse_matrix("0 1|0 0"), parse_matrix("0 0|1 2")), LQError);
}

TEST(LQSystem, ReadBackFromModel) {
  auto m = load_model("lq:A=1 2|0 -1;B=0|1");
  auto s = lq_system_from_model(m);
  EXPECT_EQ(s.A, parse_matrix("1 2|0 -1"));
  EXPECT_EQ(s.B, parse_matrix("0|1"));
  EXPECT_THROW(lq_system_from_model(builtin_model("heisenberg")), LQError);
}

TEST(Gramian, ZeroDriftIsLinear) {
  auto s = make_lq_system(parse_matrix("0 0|0 0"), parse_matrix("1 0|0 1"));
  for (double t : {0.1, 2.0}) EXPECT_LT((lq_gramian(s, t) - t * Mat<double>::Identity(2, 2)).norm(), 1e-14);
}

TEST(Gramian, DoubleIntegratorClosedForm) {
  auto s = preset("double_integrator");
  for (double t : {0.3, 1.0, 2.5}) {
    Mat<double> ref(2, 2);
    ref << t * t * t / 3, -t * t / 2, -t * t / 2, t;
    EXPECT_LT((lq_gramian(s, t) - ref).norm(), 1e-13 * ref.norm());
  }
  EXPECT_THROW(lq_gramian(s, 0.0), std::invalid_argument);
}

TEST(Gramian, SeriesAndQuadratureAgreeOnRandomSystems) {
  for (const auto& s : random_systems(31, 10)) {
    for (double t : {0.2, 1.0, 1.7}) {
      auto ser = lq_gramian_series(s, t);
      Mat<double> quad = lq_gramian_quadrature(s, t);
      EXPECT_LT((ser.C - quad).norm(), 1e-10 * ser.C.norm());
      EXPECT_LE(ser.tail_bound, 1e-13 * ser.C.norm());
      Eigen::SelfAdjointEigenSolver<Mat<double>> es(ser.C);
      EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    }
  }
}

TEST(LQCurvatureTest, DoubleIntegrator) {
  auto c = lq_curvature(preset("double_integrator"));
  EXPECT_EQ(c.I(0, 0), 4);
  EXPECT_EQ(c.R(0, 0), 0);
  for (double t : {0.1, 0.7, 1.5}) EXPECT_NEAR(c.Q(t)(0, 0), 4 / (t * t), 1e-10 / (t * t));
}

TEST(LQCurvatureTest, IdentityDrift) {
  auto c = lq_curvature(make_lq_system(parse_matrix("0 0|0 0"), parse_matrix("1 0|0 1")));
  EXPECT_EQ(c.I, DenseMatrix<Rational>::identity(2));
  EXPECT_EQ(c.R, DenseMatrix<Rational>(2, 2));
  EXPECT_LT((c.Q(0.5) * 0.25 - Mat<double>::Identity(2, 2)).norm(), 1e-14);
}

TEST(LQCurvatureTest, TripleIntegrator) {
  auto c = lq_curvature(preset("triple_integrator"));
  EXPECT_EQ(c.I(0, 0), 9);
  EXPECT_TRUE(lq_spectrum_is_squared_kronecker(c));
}

TEST(LQCurvatureTest, SpectrumAndIndependenceOfCovector) {
  for (const auto& s : random_systems(77, 12)) {
    auto c = lq_curvature(s);
    EXPECT_TRUE(lq_spectrum_is_squared_kronecker(c));
    EXPECT_EQ(c.I, c.I.transpose());
    EXPECT_EQ(c.R, c.R.transpose());
  }
}

TEST(LQCurvatureTest, KroneckerConjugateMatchesGrowthDifferences) {
  for (const auto& s : random_systems(5, 8)) {
    auto m = lq_model(s.A, s.B);
    std::vector<double> p(m.n(), 0.4);
    auto g = growth_vector(m, at_base(m, p), 0.0, m.n());
    EXPECT_EQ(conjugate_partition(g.differences()).rows, s.kronecker);
  }
}

// Q from the closed form against the generic Jacobi curve on the same system.
TEST(LQCurvatureTest, QMatchesGenericPipeline) {
  for (const auto& s : random_systems(9, 4)) {
    auto m = lq_model(s.A, s.B);
    std::vector<double> p(m.n(), 0.3);
    auto c = lq_curvature(s);
    auto samples = jacobi_samples(m, at_base(m, p), {0.05, 0.2});
    for (const auto& [t, Q] : q_family(samples, m.k())) {
      Mat<double> q = Q.template cast<double>();
      EXPECT_LT((c.Q(double(t)) - q).norm(), 1e-8 * q.norm());
    }
  }
}

TEST(LQCurvatureTest, AgreesWithCurvatureReport) {
  std::vector<LQSystem> systems{preset("double_integrator"), preset("triple_integrator")};
  for (auto& s : random_systems(2024, 8)) systems.push_back(s);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 1);
  for (const auto& s : systems) {
    auto c = lq_curvature(s);
    Mat<double> I = to_eigen(c.I), R = to_eigen(c.R);
    for (int trial = 0; trial < 2; ++trial) {
      std::vector<double> base(s.n()), p(s.n());
      for (auto& v : base) v = g(rng);
      for (auto& v : p) v = g(rng);
      auto m = lq_model(s.A, s.B, "lq", base);
      auto r = curvature_report(m, at_base(m, p));
      EXPECT_TRUE(r.reliable) << r.diagnostic << "\nA=" << to_eigen(s.A) << "\nB=" << to_eigen(s.B) << "\neps=" << r.window
                              << " res=" << r.residual << "\nI=" << r.I << "\nexpected " << I;
      EXPECT_LT((r.I - I).norm(), 1e-6 * I.norm());
      EXPECT_LT((r.R - R).norm(), 1e-6 * std::max(1.0, R.norm()));
    }
  }
}

}  // namespace
}  // namespace srcurv
