#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "srcurv/flag.hpp"
#include "srcurv/linalg.hpp"
#include "srcurv/model.hpp"
#include "srcurv/rational.hpp"

namespace srcurv {

class LQError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LQSystem {
  DenseMatrix<Rational> A, B;
  std::size_t depth = 0;                // smallest m with rank[B .. A^{m-1}B] = n
  std::vector<std::size_t> kronecker;   // descending
  std::vector<std::size_t> chain_length;  // per column of B, in column order
  DenseMatrix<Rational> W;              // chain basis, columns A^{i-1} b_a grouped by a

  std::size_t n() const { return A.rows(); }
  std::size_t k() const { return B.cols(); }
  // column of W holding A^{i-1} b_a (a, i zero-based)
  std::size_t chain_index(std::size_t a, std::size_t i) const {
    std::size_t idx = 0;
    for (std::size_t c = 0; c < a; ++c) idx += chain_length[c];
    return idx + i;
  }
};

inline LQSystem make_lq_system(const DenseMatrix<Rational>& A, const DenseMatrix<Rational>& B) {
  const std::size_t n = A.rows(), k = B.cols();
  if (A.cols() != n || B.rows() != n || k == 0) throw LQError("lq: shape mismatch between A and B");
  LQSystem s;
  s.A = A;
  s.B = B;
  // greedy Kalman selection by degree: A^l b_a is kept while independent of everything kept before it
  std::vector<DenseMatrix<Rational>> powers(k);
  for (std::size_t a = 0; a < k; ++a) powers[a] = B.block(0, a, n, 1);
  std::vector<bool> alive(k, true);
  s.chain_length.assign(k, 0);
  std::vector<std::vector<Rational>> kept;
  std::size_t l = 0;
  for (; l < n && kept.size() < n; ++l) {
    for (std::size_t a = 0; a < k; ++a) {
      if (!alive[a]) continue;
      DenseMatrix<Rational> m(kept.size() + 1, n);
      for (std::size_t r = 0; r < kept.size(); ++r)
        for (std::size_t c = 0; c < n; ++c) m(r, c) = kept[r][c];
      for (std::size_t c = 0; c < n; ++c) m(kept.size(), c) = powers[a](c, 0);
      if (exact_rank(m) == kept.size() + 1) {
        std::vector<Rational> v(n);
        for (std::size_t c = 0; c < n; ++c) v[c] = powers[a](c, 0);
        kept.push_back(std::move(v));
        ++s.chain_length[a];
      } else {
        alive[a] = false;
      }
      powers[a] = A * powers[a];
    }
  }
  if (kept.size() < n) throw LQError("lq: (A, B) is not controllable");
  for (std::size_t a = 0; a < k; ++a)
    if (s.chain_length[a] == 0) throw LQError("lq: columns of B are linearly dependent");
  s.depth = *std::max_element(s.chain_length.begin(), s.chain_length.end());
  s.kronecker = s.chain_length;
  std::sort(s.kronecker.rbegin(), s.kronecker.rend());
  s.W = DenseMatrix<Rational>(n, n);
  for (std::size_t a = 0; a < k; ++a) {
    DenseMatrix<Rational> v = B.block(0, a, n, 1);
    for (std::size_t i = 0; i < s.chain_length[a]; ++i) {
      for (std::size_t r = 0; r < n; ++r) s.W(r, s.chain_index(a, i)) = v(r, 0);
      v = A * v;
    }
  }
  return s;
}

// A and B read back from a model with linear drift and constant fields.
inline LQSystem lq_system_from_model(const RationalModel& m) {
  const std::size_t n = m.n(), k = m.k();
  DenseMatrix<Rational> A(n, n), B(n, k);
  auto drift = m.drift_or_zero();
  std::vector<Rational> zero(n, Rational(0));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = drift[i];
    if (f.degree() > 1 || f.evaluate(zero) != 0) throw LQError("lq: drift is not linear");
    for (std::size_t j = 0; j < n; ++j) {
      Exponents e(n, 0);
      e[j] = 1;
      A(i, j) = f.coefficient(e);
    }
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t i = 0; i < n; ++i) {
      const auto& f = m.field(c)[i];
      if (f.degree() > 0) throw LQError("lq: controlled fields are not constant");
      B(i, c) = f.evaluate(zero);
    }
  return make_lq_system(A, B);
}

inline Mat<double> to_eigen(const DenseMatrix<Rational>& m) {
  Mat<double> out(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = to_double(m(i, j));
  return out;
}

struct GramianSeries {
  Mat<double> C;
  double tail_bound = 0;
  int terms = 0;
};

// C(t) = sum_j t^{j+1}/(j+1) G_j with G_j = sum_{a+b=j} (-A)^a B B^T (-A^T)^b / (a! b!);
// ||G_j|| <= (2||A||)^j / j! ||B||^2 bounds the tail geometrically.
inline GramianSeries lq_gramian_series(const LQSystem& sys, double t, double rel_tol = 1e-14, int max_terms = 600) {
  if (!(t > 0)) throw std::invalid_argument("lq_gramian: t must be positive");
  using LD = long double;
  Mat<LD> A = to_eigen(sys.A).cast<LD>(), B = to_eigen(sys.B).cast<LD>();
  const LD alpha = A.norm(), beta = B.squaredNorm();
  const auto n = A.rows();
  // E_a = (-A t)^a / a! B, so t^{j+1}/(j+1) G_j = t/(j+1) sum_{a+b=j} E_a E_b^T
  std::vector<Mat<LD>> E{B};
  Mat<LD> C = Mat<LD>::Zero(n, n);
  GramianSeries out;
  for (int j = 0; j < max_terms; ++j) {
    E.push_back((-A * LD(t)) * E.back() / LD(j + 1));
    Mat<LD> G = Mat<LD>::Zero(n, n);
    for (int a = 0; a <= j; ++a) G += E[static_cast<std::size_t>(a)] * E[static_cast<std::size_t>(j - a)].transpose();
    C += G * (LD(t) / LD(j + 1));
    // bound for the terms j' > j
    const LD next = std::pow(LD(2) * alpha * LD(t), LD(j + 1)) / std::tgamma(LD(j + 2)) * beta * LD(t) / LD(j + 2);
    const LD rho = LD(2) * alpha * LD(t) / LD(j + 2);
    if (rho < LD(0.5)) {
      const LD tail = next / (1 - rho);
      if (tail <= LD(rel_tol) * C.norm()) {
        out.C = C.cast<double>();
        out.tail_bound = static_cast<double>(tail);
        out.terms = j + 1;
        return out;
      }
    }
  }
  throw LQError("lq_gramian: series truncation bound not met");
}

namespace detail {

// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int m) {
  Mat<double> J = Mat<double>::Zero(m, m);
  for (int i = 1; i < m; ++i) J(i, i - 1) = J(i - 1, i) = i / std::sqrt(4.0 * i * i - 1);
  Eigen::SelfAdjointEigenSolver<Mat<double>> es(J);
  std::vector<double> x(static_cast<std::size_t>(m)), w(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    x[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    w[static_cast<std::size_t>(i)] = 2 * std::pow(es.eigenvectors()(0, i), 2);
  }
  return {x, w};
}

}  // namespace detail

// Composite Gauss-Legendre on the matrix-exponential integrand.
inline Mat<double> lq_gramian_quadrature(const LQSystem& sys, double t, int panels = 0, int order = 12) {
  Mat<double> A = to_eigen(sys.A), B = to_eigen(sys.B);
  if (panels <= 0) panels = std::max(8, static_cast<int>(std::ceil(4 * A.norm() * t)));
  auto [x, w] = detail::gauss_legendre(order);
  const auto n = A.rows();
  Mat<double> C = Mat<double>::Zero(n, n);
  const double h = t / panels;
  for (int p = 0; p < panels; ++p)
    for (std::size_t q = 0; q < x.size(); ++q) {
      const double s = h * (p + 0.5 + 0.5 * x[q]);
      Mat<double> E = (-s * A).exp() * B;
      C += 0.5 * h * w[q] * E * E.transpose();
    }
  return C;
}

// Both evaluations; they must agree to `agree` relative to ||C||.
inline Mat<double> lq_gramian(const LQSystem& sys, double t, double agree = 1e-10) {
  auto s = lq_gramian_series(sys, t);
  Mat<double> q = lq_gramian_quadrature(sys, t);
  if ((s.C - q).norm() > agree * s.C.norm())
    throw LQError("lq_gramian: series and quadrature disagree at t = " + std::to_string(t));
  return s.C;
}

struct LQCurvature {
  LQSystem sys;
  DenseMatrix<Rational> I, R;
  DenseMatrix<Rational> linear;  // t^1 coefficient of t B^T C^{-1} B; cancels in t^2 Q
  std::vector<DenseMatrix<Rational>> hat_coeffs;  // C-hat(t) = sum_q hat_coeffs[q] t^q in the scaled chain basis
  std::vector<Mat<long double>> hat_numeric;

  std::size_t k() const { return sys.k(); }

  // Q(t) = -B^T d/dt C(t)^{-1} B = t^{-2} G(t) - t^{-1} G'(t) with G = [C-hat(t)^{-1}]_{11}
  Mat<double> Q(double t) const {
    using LD = long double;
    const auto N = hat_numeric.front().rows();
    Mat<LD> H = Mat<LD>::Zero(N, N), Hd = Mat<LD>::Zero(N, N);
    LD tp = 1;
    for (std::size_t q = 0; q < hat_numeric.size(); ++q) {
      H += hat_numeric[q] * tp;
      if (q + 1 < hat_numeric.size()) Hd += hat_numeric[q + 1] * (LD(q + 1) * tp);
      tp *= LD(t);
    }
    Mat<LD> Hi = H.inverse();
    Mat<LD> Gd = -Hi * Hd * Hi;
    const auto kk = static_cast<Eigen::Index>(k());
    Mat<LD> G(kk, kk), G1(kk, kk);
    for (std::size_t a = 0; a < k(); ++a)
      for (std::size_t b = 0; b < k(); ++b) {
        const auto ia = static_cast<Eigen::Index>(sys.chain_index(a, 0)), ib = static_cast<Eigen::Index>(sys.chain_index(b, 0));
        G(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = Hi(ia, ib);
        G1(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = Gd(ia, ib);
      }
    const LD tt = t;
    return (G / (tt * tt) - G1 / tt).cast<double>();
  }
};

// Exact I and R from the Gramian series: t B^T C(t)^{-1} B = I + 0 t - (R/3) t^2 + O(t^3).
inline LQCurvature lq_curvature(const LQSystem& sys, int extra_terms = 30) {
  const std::size_t n = sys.n(), k = sys.k();
  const std::size_t m = sys.depth;
  LQCurvature out;
  out.sys = sys;
  const std::size_t q_max = 2 + static_cast<std::size_t>(extra_terms);
  const std::size_t j_max = q_max + 2 * m;  // C_j needed for j <= q + i + j' - 1
  auto Winv = inverse(sys.W);
  auto WinvT = Winv.transpose();
  // E_a = (-A)^a / a! B exactly
  std::vector<DenseMatrix<Rational>> E{sys.B};
  DenseMatrix<Rational> minusA = Rational(-1) * sys.A;
  for (std::size_t a = 1; a <= j_max; ++a) E.push_back(Rational(1, Integer(a)) * (minusA * E.back()));
  // chain-basis Gramian coefficients: C~_{j+1} = W^{-1} (sum_{a+b=j} E_a E_b^T)/(j+1) W^{-T}
  std::vector<DenseMatrix<Rational>> Ct(j_max + 1, DenseMatrix<Rational>(n, n));
  std::vector<DenseMatrix<Rational>> We(j_max);
  for (std::size_t a = 0; a < j_max; ++a) We[a] = Winv * E[a];
  for (std::size_t j = 0; j + 1 <= j_max; ++j) {
    DenseMatrix<Rational> G(n, n);
    for (std::size_t a = 0; a <= j; ++a) G = G + We[a] * We[j - a].transpose();
    Ct[j + 1] = Rational(1, Integer(j + 1)) * G;
  }
  // degree (zero-based) of each chain-basis vector
  std::vector<std::size_t> deg(n);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t i = 0; i < sys.chain_length[a]; ++i) deg[sys.chain_index(a, i)] = i;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t j = 0; j < deg[r] + deg[c] + 1 && j <= j_max; ++j)
        if (Ct[j](r, c) != 0) throw std::logic_error("lq_curvature: chain-basis Gramian has an unexpected low-order term");
  out.hat_coeffs.assign(q_max + 1, DenseMatrix<Rational>(n, n));
  for (std::size_t q = 0; q <= q_max; ++q)
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        const std::size_t j = q + deg[r] + deg[c] + 1;
        if (j <= j_max) out.hat_coeffs[q](r, c) = Ct[j](r, c);
      }
  // inverse series up to t^2
  auto H0inv = try_inverse(out.hat_coeffs[0]);
  if (!H0inv) throw LQError("lq_curvature: leading Gramian block is singular");
  std::vector<DenseMatrix<Rational>> inv{*H0inv};
  for (std::size_t q = 1; q <= 2; ++q) {
    DenseMatrix<Rational> acc(n, n);
    for (std::size_t r = 1; r <= q; ++r) acc = acc + out.hat_coeffs[r] * inv[q - r];
    inv.push_back(Rational(-1) * (inv[0] * acc));
  }
  auto block11 = [&](const DenseMatrix<Rational>& M) {
    DenseMatrix<Rational> b(k, k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t c = 0; c < k; ++c) b(a, c) = M(sys.chain_index(a, 0), sys.chain_index(c, 0));
    return b;
  };
  out.I = block11(inv[0]);
  out.linear = block11(inv[1]);
  out.R = Rational(-3) * block11(inv[2]);
  for (const auto& h : out.hat_coeffs) {
    Mat<long double> v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = h(r, c).convert_to<long double>();
    out.hat_numeric.push_back(std::move(v));
  }
  return out;
}

// Characteristic polynomial of I equals prod (x - n_a^2) over the Kronecker indices.
inline bool lq_spectrum_is_squared_kronecker(const LQCurvature& c) {
  std::vector<Rational> expected{Rational(1)};
  for (auto na : c.sys.kronecker) {
    Rational root(Integer(na * na));
    std::vector<Rational> next(expected.size() + 1, Rational(0));
    for (std::size_t i = 0; i < expected.size(); ++i) {
      next[i] += expected[i];
      next[i + 1] -= root * expected[i];
    }
    expected = std::move(next);
  }
  return characteristic_polynomial(c.I) == expected;
}

// Random pairs with entries in [-2, 2], n in [2, max_n], k in {1, 2}; uncontrollable draws are skipped.
inline std::vector<LQSystem> random_controllable_systems(std::uint64_t seed, int count, std::size_t max_n = 4) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> entry(-2, 2);
  std::uniform_int_distribution<std::size_t> dim(2, max_n);
  std::vector<LQSystem> out;
  while (static_cast<int>(out.size()) < count) {
    const std::size_t n = dim(rng);
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

}  // namespace srcurv
