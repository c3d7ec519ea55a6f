#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "srcurv/hamflow.hpp"
#include "srcurv/linalg.hpp"
#include "srcurv/model.hpp"

namespace srcurv {

class ContactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using RPoly = Polynomial<Rational>;
using Covector3 = std::array<RPoly, 3>;

struct ContactOptions {
  unsigned order = 4;  // truncation degree of the local series; structural functions keep order - 2
  // optional user-supplied contact form (components of alpha in dx1, dx2, dx3); checked at the point
  std::optional<Covector3> contact_form;
};

struct ContactData {
  std::vector<double> point;
  std::vector<Rational> exact_point;
  RationalField reeb;     // Taylor polynomial at the point, original coordinates
  Covector3 alpha;        // normalized contact form, same convention
  std::array<std::array<std::array<RPoly, 3>, 3>, 3> structural;  // c[i][j][k], centred at the point
  std::array<std::array<Rational, 3>, 3> frame_at_point;          // frame_at_point[i] = X_i(x0)
  unsigned valid_order = 0;

  Rational c(int i, int j, int k) const {
    return structural[std::size_t(i)][std::size_t(j)][std::size_t(k)].coefficient(Exponents(3, 0));
  }
  // X_l(c_ij^k) at the point
  Rational dc(int l, int i, int j, int k) const {
    const auto& p = structural[std::size_t(i)][std::size_t(j)][std::size_t(k)];
    Rational s = 0;
    for (std::size_t v = 0; v < 3; ++v) {
      Exponents e(3, 0);
      e[v] = 1;
      s += frame_at_point[std::size_t(l)][v] * p.coefficient(e);
    }
    return s;
  }
};

namespace detail {

inline RPoly tmul(const RPoly& a, const RPoly& b, unsigned order) { return (a * b).truncated(order); }

inline Rational constant_term(const RPoly& a) { return a.coefficient(Exponents(a.dim(), 0)); }

inline RPoly series_reciprocal(const RPoly& a, unsigned order) {
  const Rational a0 = constant_term(a);
  if (a0 == 0) throw ContactError("contact: series reciprocal of a function vanishing at the point");
  const std::size_t d = a.dim();
  RPoly u = a * (Rational(1) / a0) - RPoly::constant(d, 1);
  RPoly acc = RPoly::constant(d, 1), pw = RPoly::constant(d, 1);
  for (unsigned j = 1; j <= order; ++j) {
    pw = -tmul(pw, u, order);
    acc += pw;
  }
  return acc * (Rational(1) / a0);
}

inline std::array<RPoly, 3> cross(const std::array<RPoly, 3>& a, const std::array<RPoly, 3>& b, unsigned order) {
  return {tmul(a[1], b[2], order) - tmul(a[2], b[1], order), tmul(a[2], b[0], order) - tmul(a[0], b[2], order),
          tmul(a[0], b[1], order) - tmul(a[1], b[0], order)};
}

inline RPoly dot(const std::array<RPoly, 3>& a, const std::array<RPoly, 3>& b, unsigned order) {
  return tmul(a[0], b[0], order) + tmul(a[1], b[1], order) + tmul(a[2], b[2], order);
}

inline std::array<RPoly, 3> as_array(const RationalField& v) { return {v[0], v[1], v[2]}; }

inline RationalField as_field(const std::array<RPoly, 3>& a) { return RationalField({a[0], a[1], a[2]}); }

inline std::array<RPoly, 3> curl(const std::array<RPoly, 3>& a) {
  return {a[2].derivative(1) - a[1].derivative(2), a[0].derivative(2) - a[2].derivative(0),
          a[1].derivative(0) - a[0].derivative(1)};
}

inline std::array<RPoly, 3> truncate(std::array<RPoly, 3> a, unsigned order) {
  for (auto& c : a) c = c.truncated(order);
  return a;
}

// d(alpha)(u, v) = curl(alpha) . (u x v), at the origin of the local coordinates
inline Rational dalpha_at_origin(const Covector3& alpha, const std::array<RPoly, 3>& u, const std::array<RPoly, 3>& v) {
  auto c = curl(alpha);
  auto w = cross(u, v, 0);
  Rational s = 0;
  for (std::size_t i = 0; i < 3; ++i) s += constant_term(c[i]) * constant_term(w[i]);
  return s;
}

}  // namespace detail

inline ContactData contact_structural(const RationalModel& model, const ContactOptions& opts = {}) {
  using namespace detail;
  if (model.n() != 3 || model.k() != 2) throw ContactError("contact_structural: needs n = 3 and two controlled fields");
  if (!model.drift_free()) throw ContactError("contact_structural: drift is not supported");
  if (opts.order < 3) throw ContactError("contact_structural: order must be at least 3");
  const unsigned K = opts.order;
  ContactData out;
  out.point = model.base_point();
  for (double v : out.point) out.exact_point.push_back(exact_rational(v));
  std::vector<Rational> minus;
  for (const auto& v : out.exact_point) minus.push_back(-v);

  std::array<std::array<RPoly, 3>, 3> X;
  X[1] = truncate(as_array(model.field(0).shifted(out.exact_point)), K);
  X[2] = truncate(as_array(model.field(1).shifted(out.exact_point)), K);
  auto B = truncate(as_array(lie_bracket(as_field(X[1]), as_field(X[2]))), K);
  auto nu = cross(X[1], X[2], K);
  RPoly D = dot(nu, B, K);
  if (constant_term(D) == 0) throw ContactError("contact_structural: distribution is not contact at the point");
  RPoly f = -series_reciprocal(D, K);
  Covector3 alpha;
  for (std::size_t i = 0; i < 3; ++i) alpha[i] = tmul(f, nu[i], K);

  if (opts.contact_form) {
    Covector3 given;
    for (std::size_t i = 0; i < 3; ++i) given[i] = (*opts.contact_form)[i].shifted(out.exact_point).truncated(K);
    for (int i : {1, 2})
      if (constant_term(dot(given, X[std::size_t(i)], K)) != 0)
        throw ContactError("contact_structural: supplied form does not vanish on the distribution");
    const Rational da = dalpha_at_origin(given, X[1], X[2]);
    if (da != 1)
      throw ContactError("contact_structural: supplied form has d(alpha)(X1, X2) = " + da.str() + ", expected 1");
  }

  auto ca = curl(alpha);
  RPoly norm = dot(alpha, ca, K - 1);
  RPoly inv = series_reciprocal(norm, K - 1);
  for (std::size_t i = 0; i < 3; ++i) X[0][i] = tmul(ca[i], inv, K - 1);

  // frame matrix columns X0, X1, X2 and its inverse
  auto cof = [&](std::size_t r, std::size_t c) {
    // entry (r, c) of the matrix is X[c][r]
    std::size_t r1 = (r + 1) % 3, r2 = (r + 2) % 3, c1 = (c + 1) % 3, c2 = (c + 2) % 3;
    return tmul(X[c1][r1], X[c2][r2], K - 1) - tmul(X[c2][r1], X[c1][r2], K - 1);
  };
  RPoly det = RPoly(3);
  for (std::size_t c = 0; c < 3; ++c) det += tmul(X[c][0], cof(0, c), K - 1);
  RPoly det_inv = series_reciprocal(det, K - 1);
  std::array<std::array<RPoly, 3>, 3> Finv;  // Finv[k][r]: row k of the inverse
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t r = 0; r < 3; ++r) Finv[k][r] = tmul(cof(r, k), det_inv, K - 1);

  const unsigned V = K - 2;
  for (auto& a : out.structural)
    for (auto& b : a)
      for (auto& c : b) c = RPoly(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) {
      auto br = truncate(as_array(lie_bracket(as_field(X[i]), as_field(X[j]))), V);
      for (std::size_t k = 0; k < 3; ++k) {
        RPoly s(3);
        for (std::size_t r = 0; r < 3; ++r) s += tmul(Finv[k][r], br[r], V);
        out.structural[i][j][k] = s;
        out.structural[j][i][k] = -s;
      }
    }
  out.valid_order = V;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t v = 0; v < 3; ++v) out.frame_at_point[i][v] = constant_term(X[i][v]);
  out.reeb = as_field(X[0]).shifted(minus);
  for (std::size_t i = 0; i < 3; ++i) out.alpha[i] = alpha[i].shifted(minus);

  if (out.c(1, 2, 0) != -1 || out.c(1, 0, 0) != 0 || out.c(2, 0, 0) != 0 || out.c(1, 0, 1) + out.c(2, 0, 2) != 0)
    throw std::logic_error("contact_structural: normalization identities fail");
  return out;
}

// Horizontal and Reeb components h_i = <p, X_i(x0)>.
inline std::array<double, 3> frame_components(const ContactData& d, const std::vector<double>& p) {
  if (p.size() != 3) throw std::invalid_argument("frame_components: covector must have 3 components");
  std::array<double, 3> h{};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t v = 0; v < 3; ++v) h[i] += to_real<double>(d.frame_at_point[i][v]) * p[v];
  return h;
}

// Inverse of frame_components.
inline std::vector<double> covector_from_components(const ContactData& d, const std::array<double, 3>& h) {
  Mat<double> F(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int v = 0; v < 3; ++v) F(i, v) = to_real<double>(d.frame_at_point[std::size_t(i)][std::size_t(v)]);
  Vec<double> rhs(3);
  rhs << h[0], h[1], h[2];
  Vec<double> p = F.fullPivLu().solve(rhs);
  return {p(0), p(1), p(2)};
}

struct ContactInvariants {
  double chi = 0;
  Rational chi_squared;
  Rational kappa;
  Rational sec_from_invariants;  // kappa + chi^2 - 3/4
  Rational sec_christoffel;      // Levi-Civita sectional curvature of the distribution plane
  double sec_gap = 0;
};

inline Rational christoffel(const ContactData& d, int i, int j, int k) {
  return Rational(1, 2) * (d.c(i, j, k) - d.c(j, k, i) + d.c(k, i, j));
}

// X_l(Gamma_ij^k) at the point
inline Rational christoffel_derivative(const ContactData& d, int l, int i, int j, int k) {
  return Rational(1, 2) * (d.dc(l, i, j, k) - d.dc(l, j, k, i) + d.dc(l, k, i, j));
}

inline ContactInvariants chi_kappa(const ContactData& d) {
  ContactInvariants r;
  const Rational t = d.c(0, 2, 1) + d.c(0, 1, 2);
  r.chi_squared = d.c(0, 1, 1) * d.c(0, 1, 1) + Rational(1, 4) * t * t;
  r.chi = std::sqrt(to_real<double>(r.chi_squared));
  r.kappa = d.dc(1, 1, 2, 2) - d.dc(2, 1, 2, 1) - d.c(1, 2, 1) * d.c(1, 2, 1) - d.c(1, 2, 2) * d.c(1, 2, 2) +
            Rational(1, 2) * (d.c(0, 2, 1) - d.c(0, 1, 2));
  r.sec_from_invariants = r.kappa + r.chi_squared - Rational(3, 4);

  // <R(X1, X2) X2, X1> = <D1 D2 X2 - D2 D1 X2 - D_[X1,X2] X2, X1>
  auto nested = [&](int a, int b, int c) {  // component along X1 of D_a D_b X_c
    Rational s = christoffel_derivative(d, a, b, c, 1);
    for (int k = 0; k < 3; ++k) s += christoffel(d, b, c, k) * christoffel(d, a, k, 1);
    return s;
  };
  Rational bracket_term = 0;
  for (int l = 0; l < 3; ++l) bracket_term += d.c(1, 2, l) * christoffel(d, l, 2, 1);
  r.sec_christoffel = nested(1, 2, 2) - nested(2, 1, 2) - bracket_term;
  r.sec_gap = std::abs(to_real<double>(r.sec_christoffel - r.sec_from_invariants));
  return r;
}

// {H, h0} as a quadratic form in (h1, h2), and its angular derivative
inline double poisson_h_h0(const ContactData& d, double h1, double h2) {
  const double c101 = to_real<double>(d.c(1, 0, 1)), c102 = to_real<double>(d.c(1, 0, 2));
  const double c201 = to_real<double>(d.c(2, 0, 1)), c202 = to_real<double>(d.c(2, 0, 2));
  return c101 * h1 * h1 + (c102 + c201) * h1 * h2 + c202 * h2 * h2;
}

inline double poisson_h_h0_angular(const ContactData& d, double h1, double h2) {
  const double c101 = to_real<double>(d.c(1, 0, 1)), c102 = to_real<double>(d.c(1, 0, 2));
  const double c201 = to_real<double>(d.c(2, 0, 1)), c202 = to_real<double>(d.c(2, 0, 2));
  return 2 * h1 * h2 * (c202 - c101) + (c102 + c201) * (h1 * h1 - h2 * h2);
}

// r = h0^2 + 2 H kappa + (3/2) d/dtheta {H, h0}, with h = (h0, h1, h2)
inline double r_lambda(const ContactData& d, const std::array<double, 3>& h) {
  if (h[1] == 0 && h[2] == 0) return h[0] * h[0];
  const double kappa = to_real<double>(chi_kappa(d).kappa);
  const double H = 0.5 * (h[1] * h[1] + h[2] * h[2]);
  return h[0] * h[0] + 2 * H * kappa + 1.5 * poisson_h_h0_angular(d, h[1], h[2]);
}

// {H, h0} = 2 chi h1 h2 at the point
inline bool is_isotropic(const ContactData& d) {
  return d.c(1, 0, 1) == 0 && d.c(2, 0, 2) == 0 && d.c(1, 0, 2) + d.c(2, 0, 1) >= 0;
}

inline double r_lambda_isotropic(const ContactData& d, const std::array<double, 3>& h) {
  if (!is_isotropic(d)) throw ContactError("r_lambda_isotropic: frame is not isotropic at the point");
  auto inv = chi_kappa(d);
  const double kappa = to_real<double>(inv.kappa);
  return h[0] * h[0] + kappa * (h[1] * h[1] + h[2] * h[2]) + 3 * inv.chi * (h[1] * h[1] - h[2] * h[2]);
}

struct ConjugateLengthFit {
  std::vector<double> h0;
  std::vector<double> lengths;
  double c3 = 0;
  std::vector<double> coefficients;  // c3, c4, ... of the correction to 2 pi / |h0|
  double predicted = 0;              // -pi kappa
  double relative_error = 0;
  double residual = 0;
};

struct ConjugateLengthOptions {
  double theta = 0.3;
  int correction_terms = 3;  // powers |h0|^-3 .. |h0|^-(2 + terms)
  ConjugateOptions conjugate;
};

// Conjugate length of unit-speed geodesics with Reeb component h0, fitted as 2 pi/|h0| + c3/|h0|^3 + ...
inline ConjugateLengthFit conjugate_length_asymptote(const RationalModel& model, double kappa,
                                                     const std::vector<double>& h0_grid,
                                                     const ConjugateLengthOptions& opts = {}) {
  if (static_cast<int>(h0_grid.size()) < opts.correction_terms)
    throw std::invalid_argument("conjugate_length_asymptote: grid shorter than the fit");
  auto data = contact_structural(model);
  ConjugateLengthFit out;
  out.predicted = -std::numbers::pi * kappa;
  ConjugateOptions co = opts.conjugate;
  co.tol = std::min(co.tol, 1e-13);
  co.rel_tol = std::min(co.rel_tol, 1e-12);
  Mat<double> design(static_cast<Eigen::Index>(h0_grid.size()), opts.correction_terms);
  Mat<double> rhs(static_cast<Eigen::Index>(h0_grid.size()), 1);
  for (std::size_t i = 0; i < h0_grid.size(); ++i) {
    const double h0 = h0_grid[i];
    const double a = std::abs(h0);
    if (a < 1) throw std::invalid_argument("conjugate_length_asymptote: |h0| must be large");
    auto p = covector_from_components(data, {h0, std::cos(opts.theta), std::sin(opts.theta)});
    auto res = first_conjugate_time(model, at_base(model, p), 1.5 * 2 * std::numbers::pi / a, co);
    if (!res.time)
      throw ContactError("conjugate_length_asymptote: no conjugate time found for h0 = " + std::to_string(h0));
    out.h0.push_back(h0);
    out.lengths.push_back(*res.time);
    for (int j = 0; j < opts.correction_terms; ++j)
      design(static_cast<Eigen::Index>(i), j) = std::pow(a, -(3 + j));
    rhs(static_cast<Eigen::Index>(i), 0) = *res.time - 2 * std::numbers::pi / a;
  }
  auto [coef, res] = least_squares<double>(design, rhs);
  for (int j = 0; j < opts.correction_terms; ++j) out.coefficients.push_back(coef(j, 0));
  out.c3 = coef(0, 0);
  out.residual = res;
  out.relative_error = out.predicted != 0 ? std::abs(out.c3 - out.predicted) / std::abs(out.predicted)
                                          : std::abs(out.c3);
  return out;
}

}  // namespace srcurv
