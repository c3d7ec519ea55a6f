#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "srcurv/jacobi.hpp"

namespace srcurv {
namespace {

using LD = long double;
using std::numbers::pi;

// Free step-two Carnot group with three generators; [X1,X2] = d4, [X1,X3] = d5, [X2,X3] = d6.
RationalModel carnot36() {
  return RationalModel("carnot36", std::nullopt,
                       {parse_polynomial_field({"1", "0", "0", "-1/2*x2", "-1/2*x3", "0"}),
                        parse_polynomial_field({"0", "1", "0", "1/2*x1", "0", "-1/2*x3"}),
                        parse_polynomial_field({"0", "0", "1", "0", "1/2*x1", "1/2*x2"})},
                       std::vector<double>(6, 0.0));
}

std::vector<double> random_covector(std::mt19937_64& rng, std::size_t n, double norm = 1.0) {
  std::normal_distribution<double> g(0, 1);
  std::vector<double> p(n);
  double s = 0;
  for (auto& v : p) {
    v = g(rng);
    s += v * v;
  }
  for (auto& v : p) v *= norm / std::sqrt(s);
  return p;
}

// Rotation taking the f-basis to (gamma_dot_perp, gamma_dot) for gamma_dot = (-sin phi, cos phi).
Mat<double> heis_basis(double phi) {
  Mat<double> B(2, 2);
  B << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return B;
}

TEST(JacobiSamples, EuclideanIsMinusTIdentity) {
  auto e = load_model("euclidean:n=3");
  auto samples = jacobi_samples(e, at_base(e, {0.3, -0.5, 0.8}), {0.01, 0.3, 1.0});
  for (const auto& s : samples) {
    Mat<LD> ref = -s.t * Mat<LD>::Identity(3, 3);
    EXPECT_LT(static_cast<double>((s.S - ref).cwiseAbs().maxCoeff()), 1e-14);
    EXPECT_LT(static_cast<double>((s.Sdot + Mat<LD>::Identity(3, 3)).cwiseAbs().maxCoeff()), 1e-14);
  }
}

// Adapted coordinates are (x2, +-x1); the sign of the complement column only flips the off-diagonal.
TEST(JacobiSamples, DoubleIntegratorClosedForm) {
  auto di = load_model("lq:double_integrator");
  JacobiCurve<LD> jc(di, at_base(di, {0.4, 1.0}), 1.0);
  const double sgn = static_cast<double>(jc.adaptation().T(0, 1));
  for (double t : {0.05, 0.4, 1.0}) {
    auto s = jc.sample(t);
    EXPECT_NEAR(double(s.S(0, 0)), -t, 1e-12);
    EXPECT_NEAR(double(s.S(0, 1)), sgn * t * t / 2, 1e-12);
    EXPECT_NEAR(double(s.S(1, 1)), -t * t * t / 3, 1e-12);
  }
}

TEST(JacobiSamples, InitialValuesAndMonotonicity) {
  std::mt19937_64 rng(3);
  for (const auto* spec : {"heisenberg", "sphere2", "contact3d_perturbed", "lq:triple_integrator", "euclidean:n=3",
                           "lq:A=0 1 0|-1 0 1|0 0 0;B=0 1|1 0|0 1"}) {
    auto m = load_model(spec);
    auto p = random_covector(rng, m.n(), 0.8);
    JacobiCurve<LD> jc(m, at_base(m, p), 0.2);
    auto s0 = jc.sample(0);
    const auto n = static_cast<Eigen::Index>(m.n()), k = static_cast<Eigen::Index>(m.k());
    Mat<LD> ref = Mat<LD>::Zero(n, n);
    ref.topLeftCorner(k, k) = -Mat<LD>::Identity(k, k);
    EXPECT_LT(double(s0.S.cwiseAbs().maxCoeff()), 1e-18) << spec;
    EXPECT_LT(double((s0.Sdot - ref).cwiseAbs().maxCoeff()), 1e-15) << spec;
    for (double t : {0.002, 0.05, 0.2}) {
      auto s = jc.sample(t);
      EXPECT_LT(double(s.asymmetry), 1e-8) << spec;
      Eigen::SelfAdjointEigenSolver<Mat<LD>> es(s.S);
      EXPECT_LT(double(es.eigenvalues().maxCoeff()), 0.0) << spec << " t=" << t;
      Eigen::SelfAdjointEigenSolver<Mat<LD>> ed(s.Sdot);
      EXPECT_LE(double(ed.eigenvalues().maxCoeff()), 1e-12) << spec << " t=" << t;
    }
  }
}

TEST(QFamily, ClosedForms) {
  auto e = builtin_model("euclidean");
  for (const auto& [t, Q] : q_family(jacobi_samples(e, at_base(e, {1, 0}), {0.1, 0.5}), 2)) {
    EXPECT_LT(double((Q * t * t - Mat<LD>::Identity(2, 2)).cwiseAbs().maxCoeff()), 1e-12);
  }
  auto di = load_model("lq:double_integrator");
  for (const auto& [t, Q] : q_family(jacobi_samples(di, at_base(di, {1, 0}), {0.1, 0.5}), 1)) {
    EXPECT_NEAR(double(Q(0, 0) * t * t), 4.0, 1e-10);
  }
  auto h = builtin_model("heisenberg");
  const double phi = 0.6;
  auto samples = jacobi_samples(h, at_base(h, {-std::sin(phi), std::cos(phi), 1.0}), {1e-3, 2e-3});
  for (const auto& [t, Q] : q_family(samples, 2)) {
    Mat<double> B = heis_basis(phi);
    Mat<double> q = B.transpose() * (Q * t * t).template cast<double>() * B;
    EXPECT_NEAR(q(0, 0), 4.0, 1e-5);
    EXPECT_NEAR(q(1, 1), 1.0, 1e-5);
    // polarization: off-diagonal is O(t) in Q, so O(t^3) after scaling
    EXPECT_LT(std::abs(q(0, 1)), 10 * double(t * t * t));
  }
}

TEST(QFamily, IsDerivativeOfReducedInverse) {
  for (const auto* spec : {"heisenberg", "sphere2", "lq:triple_integrator", "contact3d_perturbed"}) {
    auto m = load_model(spec);
    std::vector<double> p(m.n(), 0.3);
    p[0] = 0.7;
    JacobiCurve<LD> jc(m, at_base(m, p), 0.5);
    for (double t : {0.1, 0.3}) {
      const LD h = 1e-5;
      Mat<LD> fd = (reduced_inverse(jc.sample(t + h), m.k()) - reduced_inverse(jc.sample(t - h), m.k())) / (2 * h);
      Mat<LD> q = q_matrix(jc.sample(t), m.k());
      EXPECT_LT(double((fd - q).cwiseAbs().maxCoeff() / q.cwiseAbs().maxCoeff()), 1e-6) << spec;
    }
  }
}

TEST(CurvatureReport, HeisenbergClosedForm) {
  auto h = builtin_model("heisenberg");
  for (double phi : {0.0, pi / 4, pi / 2})
    for (double hz : {0.5, 1.0, 2.0}) {
      auto r = curvature_report(h, at_base(h, {-std::sin(phi), std::cos(phi), hz}));
      ASSERT_TRUE(r.reliable) << r.diagnostic;
      Mat<double> B = heis_basis(phi);
      Mat<double> I = B.transpose() * r.I * B, R = B.transpose() * r.R * B;
      EXPECT_NEAR(I(0, 0), 4, 1e-6);
      EXPECT_NEAR(I(1, 1), 1, 1e-6);
      EXPECT_NEAR(I(0, 1), 0, 1e-6);
      EXPECT_NEAR(R(0, 0), 0.4 * hz * hz, 1e-6 * hz * hz);
      EXPECT_NEAR(R(1, 1), 0, 1e-6);
      EXPECT_NEAR(R(0, 1), 0, 1e-6);
      EXPECT_NEAR(r.ric, 0.4 * hz * hz, 1e-6);
      EXPECT_NEAR(r.ric, r.R.trace(), 1e-10);
      EXPECT_EQ(r.growth.k, (std::vector<std::size_t>{2, 3}));
      EXPECT_EQ(r.summary.geodesic_dimension, 5u);
      EXPECT_LT(r.linear_term, 1e-6);
    }
}

// Unit sphere: Jacobi equation with constant curvature 1 gives R w = w - <w,v>v.
TEST(CurvatureReport, SphereConstantCurvature) {
  auto s = builtin_model("sphere2", {{"base_point", "0.3, -0.2"}});
  const double g = 1 + (0.09 + 0.04) / 4;
  auto r = curvature_report(s, at_base(s, {0.6 / g, 0.8 / g}));
  ASSERT_TRUE(r.reliable) << r.diagnostic;
  EXPECT_LT((r.I - Mat<double>::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
  auto ev = sorted_eigenvalues(r.R);
  EXPECT_NEAR(ev[0], 1, 1e-6);
  EXPECT_NEAR(ev[1], 0, 1e-6);
  Vec<double> v(2);
  v << 0.6, 0.8;  // velocity in the f-basis
  EXPECT_LT((r.R * v).norm(), 1e-6);
  EXPECT_NEAR(r.ric, 1, 1e-6);
}

TEST(CurvatureReport, PrecisionsAgree) {
  auto h = builtin_model("heisenberg");
  auto l0 = at_base(h, {0.6, -0.8, 1.3});
  JacobiOptions ext, quad;
  ext.precision = JacobiPrecision::extended;
  quad.precision = JacobiPrecision::quad;
  auto a = curvature_report(h, l0, 0.5, 12, ext);
  auto b = curvature_report(h, l0, 0.5, 12, quad);
  EXPECT_LT((a.I - b.I).norm(), 1e-9);
  EXPECT_LT((a.R - b.R).norm(), 1e-7);
  EXPECT_LE(b.residual, a.residual * 10 + 1e-12);
}

TEST(CurvatureReport, EuclideanFlat) {
  auto e = load_model("euclidean:n=3");
  auto r = curvature_report(e, at_base(e, {1, 0, 0}));
  EXPECT_LT((r.I - Mat<double>::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(r.R.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(r.ric, 0, 1e-10);
  EXPECT_EQ(r.summary.geodesic_dimension, 3u);
}

TEST(CurvatureReport, InvariantsOnBuiltins) {
  std::mt19937_64 rng(12);
  for (const auto* spec : {"heisenberg", "sphere2", "contact3d_perturbed", "lq:triple_integrator", "euclidean:n=3",
                           "lq:A=0 1 0|-1 0 1|0 0 0;B=0 1|1 0|0 1"}) {
    auto m = load_model(spec);
    for (int i = 0; i < 3; ++i) {
      auto r = curvature_report(m, at_base(m, random_covector(rng, m.n())));
      EXPECT_TRUE(r.reliable) << spec << ": " << r.diagnostic;
      EXPECT_TRUE(r.eigenvalues_match) << spec;
      EXPECT_GE(r.I_eigenvalues.back(), 1 - 1e-4) << spec;
      EXPECT_LT((r.I - r.I.transpose()).norm(), 1e-12);
      EXPECT_NEAR(r.ric, r.R.trace(), 1e-10);
      EXPECT_LT(r.R_asymmetry, 1e-6) << spec;
    }
  }
}

TEST(CurvatureReport, HomogeneityOfDriftFreeModels) {
  std::mt19937_64 rng(4);
  for (const auto* spec : {"heisenberg", "sphere2", "contact3d_perturbed", "euclidean:n=3"}) {
    auto m = load_model(spec);
    auto p = random_covector(rng, m.n());
    auto base = curvature_report(m, at_base(m, p));
    for (double alpha : {0.5, 2.0}) {
      auto q = p;
      for (auto& v : q) v *= alpha;
      auto r = curvature_report(m, at_base(m, q));
      const double tol = 10 * (std::max(base.residual, r.residual) + std::max(base.uncertainty, r.uncertainty));
      EXPECT_LT((r.I - base.I).cwiseAbs().maxCoeff(), tol) << spec;
      EXPECT_LT((r.R - alpha * alpha * base.R).cwiseAbs().maxCoeff(), alpha * alpha * tol + 1e-12) << spec;
    }
  }
}

TEST(CurvatureReport, NonAmpleRejected) {
  auto h = builtin_model("heisenberg");
  EXPECT_THROW(curvature_report(h, at_base(h, {0, 0, 1})), JacobiError);
}

TEST(ResidueCrosscheck, DiagonalMatchesSquaredRows) {
  auto h = builtin_model("heisenberg");
  auto rh = residue_crosscheck(h, at_base(h, {0.0, 1.0, 1.0}));
  EXPECT_TRUE(rh.diagonal_match);
  EXPECT_NEAR(rh.D_eigenvalues[0], 4, 1e-6);
  EXPECT_NEAR(rh.D_eigenvalues[1], 1, 1e-6);
  // Heisenberg: L = R_{ab,11} Omega; in the rows basis L_11 = (2/5)(h_z^2)/3 for the length-2 row
  EXPECT_NEAR(rh.L_canonical(0, 0), 0.4 / 3, 1e-6);

  auto e = builtin_model("euclidean");
  auto re = residue_crosscheck(e, at_base(e, {0.6, 0.8}));
  EXPECT_LT((re.D - Mat<double>::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(re.L.cwiseAbs().maxCoeff(), 1e-8);

  auto di = load_model("lq:double_integrator");
  auto rd = residue_crosscheck(di, at_base(di, {1, 0}));
  EXPECT_NEAR(rd.D(0, 0), 4, 1e-8);
  EXPECT_NEAR(rd.L(0, 0), 0, 1e-8);
}

TEST(ResidueCrosscheck, Carnot36ZeroPattern) {
  auto m = carnot36();
  std::mt19937_64 rng(21);
  for (int i = 0; i < 3; ++i) {
    auto p = random_covector(rng, 6);
    auto g = growth_vector(m, at_base(m, p), 0.0, 6);
    ASSERT_EQ(g.k, (std::vector<std::size_t>{3, 5, 6}));
    auto r = residue_crosscheck(m, at_base(m, p));
    EXPECT_TRUE(r.diagonal_match);
    EXPECT_NEAR(r.D_eigenvalues[0], 9, 1e-5);
    EXPECT_NEAR(r.D_eigenvalues[1], 4, 1e-5);
    EXPECT_NEAR(r.D_eigenvalues[2], 1, 1e-5);
    EXPECT_LT(r.max_forbidden_entry, 1e-6 * std::max(1.0, r.L.cwiseAbs().maxCoeff()));
    auto c = curvature_report(m, at_base(m, p));
    EXPECT_TRUE(c.reliable) << c.diagnostic;
    EXPECT_EQ(c.summary.geodesic_dimension, 3u + 3 * 2 + 5 * 1);
  }
}

}  // namespace
}  // namespace srcurv
