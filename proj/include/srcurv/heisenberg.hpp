#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "srcurv/linalg.hpp"

namespace srcurv {

struct HeisPoint {
  std::complex<double> w;
  double z = 0;
};

inline HeisPoint operator*(const HeisPoint& a, const HeisPoint& b) {
  return {a.w + b.w, a.z + b.z - 0.5 * std::imag(a.w * std::conj(b.w))};
}

inline HeisPoint inverse(const HeisPoint& a) { return {-a.w, -a.z}; }

inline HeisPoint dilate(const HeisPoint& a, double alpha) { return {alpha * a.w, alpha * alpha * a.z}; }

inline HeisPoint heis_point(const std::vector<double>& x) {
  if (x.size() != 3) throw std::invalid_argument("heisenberg point needs 3 coordinates");
  return {{x[0], x[1]}, x[2]};
}

inline std::vector<double> coords(const HeisPoint& a) { return {a.w.real(), a.w.imag(), a.z}; }

namespace detail {

// odd series sum_{k>=1} (-1)^{k+1} c_k x^{2k+1}
template <class F>
double odd_series(double x, F coeff, int terms = 9) {
  const double x2 = x * x;
  double p = x * x2, s = 0;
  for (int k = 1; k <= terms; ++k, p *= -x2) s += coeff(k) * p;
  return s;
}

inline double real_factorial(int m) {
  double f = 1;
  for (int i = 2; i <= m; ++i) f *= i;
  return f;
}

// x - sin x
inline double x_minus_sin(double x) {
  if (std::abs(x) < 0.2) return odd_series(x, [](int k) { return 1.0 / real_factorial(2 * k + 1); });
  return x - std::sin(x);
}

// sin x - x cos x
inline double sin_minus_xcos(double x) {
  if (std::abs(x) < 0.2) return odd_series(x, [](int k) { return 2.0 * k / real_factorial(2 * k + 1); });
  return std::sin(x) - x * std::cos(x);
}

inline double sinc(double x) { return std::abs(x) < 1e-4 ? 1 - x * x / 6 : std::sin(x) / x; }

struct ThetaRoot {
  double theta;  // in [0, pi)
  double gap;    // pi - theta, kept separately near pi
};

// theta/sin^2 - cot and its derivative on [0, pi/2]
inline std::pair<double, double> theta_rhs_low(double th) {
  const double s = std::sin(th);
  if (th == 0) return {0, 2.0 / 3};
  // theta - sin cos = (2th - sin 2th)/2
  const double num = 0.5 * x_minus_sin(2 * th);
  return {num / (s * s), 2 * sin_minus_xcos(th) / (s * s * s)};
}

// same as a function of the gap d = pi - theta, d in (0, pi/2]
inline std::pair<double, double> theta_rhs_high(double d) {
  const double s = std::sin(d), c = std::cos(d);
  const double th = std::numbers::pi - d;
  return {th / (s * s) + c / s, -2 * (s + th * c) / (s * s * s)};
}

// root for xi >= 0
inline ThetaRoot theta_root(double xi) {
  using boost::math::tools::newton_raphson_iterate;
  const double pi = std::numbers::pi;
  const double target = 4 * xi;
  if (target == 0) return {0, pi};
  const int digits = std::numeric_limits<double>::digits - 2;
  std::uintmax_t iters = 200;
  if (target <= pi / 2) {
    auto f = [&](double th) {
      auto [v, dv] = theta_rhs_low(th);
      return std::make_pair(v - target, dv);
    };
    const double th = newton_raphson_iterate(f, std::min(1.5 * target, pi / 2), 0.0, pi / 2, digits, iters);
    return {th, pi - th};
  }
  auto f = [&](double d) {
    auto [v, dv] = theta_rhs_high(d);
    return std::make_pair(v - target, dv);
  };
  const double lo = std::sqrt(pi / (target + 4)) * 0.5;
  const double guess = std::clamp(std::sqrt(pi / target), lo, pi / 2);
  const double d = newton_raphson_iterate(f, guess, lo, pi / 2, digits, iters);
  return {pi - d, d};
}

}  // namespace detail

// Right-hand side 4 xi(theta) of the defining relation, for theta in (-pi, pi).
inline double theta_relation(double theta) {
  if (!(std::abs(theta) < std::numbers::pi)) throw std::domain_error("theta_relation: |theta| must be below pi");
  const double a = std::abs(theta);
  const double v = a <= std::numbers::pi / 2 ? detail::theta_rhs_low(a).first
                                             : detail::theta_rhs_high(std::numbers::pi - a).first;
  return theta < 0 ? -v : v;
}

inline double theta_solve(double xi) {
  if (!std::isfinite(xi)) throw std::domain_error("theta_solve: xi must be finite");
  const double th = detail::theta_root(std::abs(xi)).theta;
  return xi < 0 ? -th : th;
}

// Squared distance from the origin.
inline double heis_distance2_origin(const HeisPoint& q) {
  const double r2 = std::norm(q.w);
  const double az = std::abs(q.z);
  const double xi = az / r2;
  if (r2 == 0 || !std::isfinite(xi)) return 4 * std::numbers::pi * az;
  auto root = detail::theta_root(xi);
  double ratio;  // theta / sin theta
  if (root.theta <= std::numbers::pi / 2)
    ratio = 1 / detail::sinc(root.theta);
  else
    ratio = root.theta / std::sin(root.gap);
  return r2 * ratio * ratio;
}

inline double heis_distance(const HeisPoint& a, const HeisPoint& b) {
  return std::sqrt(heis_distance2_origin(inverse(a) * b));
}

// Unit covector at the origin with horizontal part i e^{i phi}: (h_x, h_y, h_z) = (-sin phi, cos phi, h_z).
struct HeisCovector {
  double phi = 0;
  double hz = 0;
  std::complex<double> hw() const { return {-std::sin(phi), std::cos(phi)}; }
  std::vector<double> components() const { return {-std::sin(phi), std::cos(phi), hz}; }
};

// Closed-form geodesic from the origin.
inline HeisPoint heis_geodesic(std::complex<double> hw, double hz, double t) {
  const double x = hz * t;
  const double s2 = detail::sinc(x / 2);
  const std::complex<double> shape(detail::sinc(x), 0.5 * x * s2 * s2);
  const double zfac = std::abs(x) < 1e-300 ? 0 : detail::x_minus_sin(x) / (2 * x * x);
  return {hw * t * shape, std::norm(hw) * t * t * zfac};
}

inline HeisPoint heis_geodesic(const HeisCovector& l, double t) { return heis_geodesic(l.hw(), l.hz, t); }

inline HeisPoint heis_geodesic_from(const HeisPoint& base, std::complex<double> hw, double hz, double t) {
  return base * heis_geodesic(hw, hz, t);
}

// (I, R) in the basis (velocity^perp, velocity)
inline std::pair<Mat<double>, Mat<double>> heis_curvature(double hz) {
  Mat<double> I(2, 2), R(2, 2);
  I << 4, 0, 0, 1;
  R << 0.4 * hz * hz, 0, 0, 0;
  return {I, R};
}

// Orthonormal basis (v^perp, v) of the distribution at the origin, v the initial velocity.
inline Mat<double> heis_velocity_basis(double phi) {
  Mat<double> V(2, 2);
  V << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return V;
}

struct TimeFitOptions {
  double s_step = 1e-4;
  double t_min = 0.02;
  double t_max = 1.0;  // divided by max(1, |h_z|)
  int points = 25;
  int degree = 6;
};

struct TimeFit {
  double a0 = 0, a1 = 0, a2 = 0;
  std::vector<double> coefficients;
  std::vector<double> t_grid;
  std::vector<double> values;
  double residual = 0;
};

namespace detail {

// d^2/ds^2 at s = 0 by central differences, one Richardson level
template <class F>
double second_derivative(F&& f, double h) {
  if (!(h > 0) || h < 1e-8) throw std::domain_error("second_derivative: step underflow");
  const double f0 = f(0.0);
  auto d = [&](double k) { return (f(k) - 2 * f0 + f(-k)) / (k * k); };
  return (4 * d(h / 2) - d(h)) / 3;
}

template <class F>
TimeFit fit_in_time(F&& value_at, double hz, const TimeFitOptions& o) {
  if (o.points < o.degree + 2) throw std::invalid_argument("fit_in_time: too few points");
  const double scale = std::max(1.0, std::abs(hz));
  TimeFit out;
  Mat<double> design(o.points, o.degree + 1);
  Mat<double> rhs(o.points, 1);
  for (int i = 0; i < o.points; ++i) {
    const double t = (o.t_min + (o.t_max - o.t_min) * i / (o.points - 1)) / scale;
    const double v = value_at(t);
    out.t_grid.push_back(t);
    out.values.push_back(v);
    for (int j = 0; j <= o.degree; ++j) design(i, j) = std::pow(t, j);
    rhs(i, 0) = v;
  }
  auto [coef, res] = least_squares<double>(design, rhs);
  for (int j = 0; j <= o.degree; ++j) out.coefficients.push_back(coef(j, 0));
  out.a0 = coef(0, 0);
  out.a1 = coef(1, 0);
  out.a2 = coef(2, 0);
  out.residual = res;
  return out;
}

inline double half_d2_between_geodesics(const HeisCovector& l1, double t, double phi2, double s) {
  const HeisPoint g1 = heis_geodesic(l1, t);
  const HeisPoint g2{s * HeisCovector{phi2, 0}.hw(), 0};
  return 0.5 * heis_distance2_origin(inverse(g1) * g2);
}

}  // namespace detail

// Fit of d^2 C / ds^2 (t, 0) = a0 + a1 t + a2 t^2 + ..., C = d^2(g1(t), g2(s)) / 2 with g2 a straight line.
inline TimeFit heis_expansion_check(double phi1, double hz1, double phi2, const TimeFitOptions& o = {}) {
  const HeisCovector l1{phi1, hz1};
  return detail::fit_in_time(
      [&](double t) {
        return detail::second_derivative(
            [&](double s) { return detail::half_d2_between_geodesics(l1, t, phi2, s); }, o.s_step);
      },
      hz1, o);
}

struct ExpansionPrediction {
  double a0, a1, a2;
};

inline ExpansionPrediction heis_expansion_prediction(double phi1, double hz1, double phi2) {
  const double d = phi2 - phi1;
  const double s = std::sin(d);
  return {1 + 3 * s * s, -0.5 * hz1 * std::sin(2 * d), -2.0 / 15 * hz1 * hz1 * s * s};
}

// Sub-Laplacian at the origin of f_t = d^2(., g(t)) / 2, as X^2 + Y^2 along the two coordinate lines.
inline TimeFit heis_sublaplacian(const HeisCovector& l, const TimeFitOptions& o = {}) {
  return detail::fit_in_time(
      [&](double t) {
        double sum = 0;
        for (double phi2 : {-std::numbers::pi / 2, 0.0})
          sum += detail::second_derivative(
              [&](double s) { return detail::half_d2_between_geodesics(l, t, phi2, s); }, o.s_step);
        return sum;
      },
      l.hz, o);
}

// Central-difference gradient at the origin of c_t(x) = -d^2(x, g(t)) / (2t).
inline std::vector<double> heis_cost_gradient(const HeisCovector& l, double t, double step = 1e-5) {
  const HeisPoint target = heis_geodesic(l, t);
  std::vector<double> g(3);
  for (int i = 0; i < 3; ++i) {
    auto c = [&](double h) {
      std::vector<double> x(3, 0.0);
      x[static_cast<std::size_t>(i)] = h;
      return -heis_distance2_origin(inverse(heis_point(x)) * target) / (2 * t);
    };
    g[static_cast<std::size_t>(i)] = (c(step) - c(-step)) / (2 * step);
  }
  return g;
}

}  // namespace srcurv
