#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/float128.hpp>

#include "srcurv/flag.hpp"
#include "srcurv/hamflow.hpp"
#include "srcurv/linalg.hpp"
#include "srcurv/model.hpp"

namespace srcurv {

class JacobiError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class Real = long double>
struct JacobiSample {
  Real t = 0;
  Mat<Real> S;
  Mat<Real> Sdot;
  Real asymmetry = 0;  // ||S - S^T|| / ||S|| before symmetrization
};

using Quad = boost::multiprecision::float128;

// automatic: quad precision once some row of the Young diagram has length >= quad_row
enum class JacobiPrecision { automatic, extended, quad };

struct JacobiOptions {
  double flow_tol = 1e-15;
  double cond_max = 1e8;
  double symmetry_tol = 1e-8;
  int fit_degree = 8;
  double residual_tol = 1e-6;
  double eigen_tol = 1e-4;
  int max_halvings = 30;
  JacobiPrecision precision = JacobiPrecision::automatic;
  std::size_t quad_row = 3;
};

// The Jacobi curve S(t) of a normal extremal in adapted Darboux coordinates.
template <class Real = long double>
class JacobiCurve {
 public:
  template <class C>
  JacobiCurve(const ControlModel<C>& model, const ExtremalState& l0, double t_max, const JacobiOptions& opts = {})
      : opts_(opts), fa_(adapt_frame<Real>(model)), k_(model.k()), vf_(make_flow(model, l0, t_max, opts)) {}

  std::size_t n() const { return vf_.n(); }
  std::size_t k() const { return k_; }
  double t_max() const { return static_cast<double>(vf_.t_end()); }
  const FrameAdaptation<Real>& adaptation() const { return fa_; }

  // P(t) is the p-block of M(t)^{-1} applied to the vertical space; large condition means no graph chart.
  Real p_condition(Real t) const {
    const auto n = static_cast<Eigen::Index>(this->n());
    Mat<Real> P = vf_.M(t).topLeftCorner(n, n).transpose();
    Eigen::JacobiSVD<Mat<Real>> svd(P);
    const auto& s = svd.singularValues();
    return s(n - 1) > Real(0) ? s(0) / s(n - 1) : Real(INFINITY);
  }

  JacobiSample<Real> sample(Real t) const {
    const auto n = static_cast<Eigen::Index>(this->n());
    Mat<Real> M = vf_.M(t), Md = vf_.M_dot(t);
    // columns of M^{-1}(0; q): x-part -b^T q, p-part a^T q
    Mat<Real> X = -M.topRightCorner(n, n).transpose();
    Mat<Real> P = M.topLeftCorner(n, n).transpose();
    Mat<Real> Xd = -Md.topRightCorner(n, n).transpose();
    Mat<Real> Pd = Md.topLeftCorner(n, n).transpose();
    Eigen::FullPivLU<Mat<Real>> lu(P);
    if (!lu.isInvertible()) {
      std::ostringstream os;
      os << "jacobi: P(t) singular at t = " << static_cast<double>(t);
      throw JacobiError(os.str());
    }
    Mat<Real> Pinv = lu.inverse();
    Mat<Real> S = X * Pinv;
    Mat<Real> Sd = Xd * Pinv - S * Pd * Pinv;
    JacobiSample<Real> out;
    out.t = t;
    out.S = fa_.T_inv * S * fa_.T_inv_transpose;
    out.Sdot = fa_.T_inv * Sd * fa_.T_inv_transpose;
    const Real norm = out.S.norm();
    out.asymmetry = norm > Real(0) ? (out.S - out.S.transpose()).norm() / norm : Real(0);
    if (out.asymmetry > Real(opts_.symmetry_tol)) {
      std::ostringstream os;
      os << "jacobi: S(t) not symmetric at t = " << static_cast<double>(t) << " (relative asymmetry "
         << static_cast<double>(out.asymmetry) << ")";
      throw JacobiError(os.str());
    }
    out.S = symmetrize(out.S);
    out.Sdot = symmetrize(out.Sdot);
    return out;
  }

 private:
  template <class C>
  static VariationalTrajectory<Real> make_flow(const ControlModel<C>& model, const ExtremalState& l0, double t_max,
                                               const JacobiOptions& opts) {
    FlowOptions fo;
    fo.tol = opts.flow_tol;
    return variational_flow<Real>(model, l0, t_max, fo);
  }

  JacobiOptions opts_;
  FrameAdaptation<Real> fa_;
  std::size_t k_;
  VariationalTrajectory<Real> vf_;
};

template <class Real = long double, class C>
std::vector<JacobiSample<Real>> jacobi_samples(const ControlModel<C>& model, const ExtremalState& l0,
                                               const std::vector<double>& t_grid, const JacobiOptions& opts = {}) {
  if (t_grid.empty()) return {};
  double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  if (*std::min_element(t_grid.begin(), t_grid.end()) < 0) throw std::invalid_argument("jacobi_samples: negative time");
  JacobiCurve<Real> jc(model, l0, std::max(t_max, 1e-12), opts);
  std::vector<JacobiSample<Real>> out;
  for (double t : t_grid) out.push_back(jc.sample(static_cast<Real>(t)));
  return out;
}

// Q(t) = -[S^{-1} Sdot S^{-1}]_{11}, the k x k distribution block.
template <class Real>
Mat<Real> q_matrix(const JacobiSample<Real>& s, std::size_t k) {
  Eigen::FullPivLU<Mat<Real>> lu(s.S);
  if (!lu.isInvertible()) {
    std::ostringstream os;
    os << "q_family: S(t) singular at t = " << static_cast<double>(s.t);
    throw JacobiError(os.str());
  }
  Mat<Real> Si = lu.inverse();
  const auto kk = static_cast<Eigen::Index>(k);
  return symmetrize<Real>(-(Si * s.Sdot * Si).topLeftCorner(kk, kk));
}

template <class Real>
std::vector<std::pair<Real, Mat<Real>>> q_family(const std::vector<JacobiSample<Real>>& samples, std::size_t k) {
  std::vector<std::pair<Real, Mat<Real>>> out;
  for (const auto& s : samples) out.emplace_back(s.t, q_matrix(s, k));
  return out;
}

// [S(t)^{-1}]_{11}
template <class Real>
Mat<Real> reduced_inverse(const JacobiSample<Real>& s, std::size_t k) {
  Eigen::FullPivLU<Mat<Real>> lu(s.S);
  if (!lu.isInvertible()) throw JacobiError("reduced_inverse: S(t) singular");
  const auto kk = static_cast<Eigen::Index>(k);
  return symmetrize<Real>(Mat<Real>(lu.inverse().topLeftCorner(kk, kk)));
}

inline std::vector<double> geometric_grid(double eps, int size, double ratio = 64.0) {
  std::vector<double> g;
  if (size == 1) return {eps};
  for (int i = 0; i < size; ++i) g.push_back(eps / ratio * std::pow(ratio, double(i) / (size - 1)));
  return g;
}

inline std::vector<double> sorted_eigenvalues(const Mat<double>& m) {
  Eigen::SelfAdjointEigenSolver<Mat<double>> es(symmetrize<double>(m));
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

struct CurvatureReport {
  GrowthVector growth;
  DiagramSummary summary;
  Mat<double> I;
  Mat<double> R;
  double ric = 0;
  std::vector<double> I_eigenvalues;  // descending
  std::vector<double> expected_eigenvalues;
  bool eigenvalues_match = false;
  double residual = 0;
  double uncertainty = 0;  // change of I, R when the fit degree drops by one
  double linear_term = 0;  // largest |t^1| coefficient of the diagnostic fit
  double R_asymmetry = 0;
  double window = 0;       // epsilon actually used
  std::vector<double> grid;
  bool reliable = true;
  std::string diagnostic;
};

namespace detail {

// Largest eps <= eps0 (halving) on whose grid P stays well conditioned and S negative definite.
template <class Real>
std::vector<JacobiSample<Real>> window_samples(const JacobiCurve<Real>& jc, double& eps, int grid_size,
                                               const JacobiOptions& opts) {
  for (int h = 0; h <= opts.max_halvings; ++h, eps *= 0.5) {
    auto grid = geometric_grid(eps, grid_size);
    std::vector<JacobiSample<Real>> out;
    bool ok = true;
    for (double t : grid) {
      const Real tt = static_cast<Real>(t);
      if (!(jc.p_condition(tt) < Real(opts.cond_max))) {
        ok = false;
        break;
      }
      JacobiSample<Real> s;
      try {
        s = jc.sample(tt);
      } catch (const JacobiError&) {
        ok = false;
        break;
      }
      Eigen::LLT<Mat<Real>> llt(-s.S);
      if (llt.info() != Eigen::Success) {
        ok = false;
        break;
      }
      out.push_back(std::move(s));
    }
    if (ok) return out;
  }
  throw JacobiError("jacobi: no admissible window found (P ill-conditioned or S not negative definite)");
}

// Fit each entry of Y(t_g) on the given powers of t; returns coefficient rows per power.
template <class Real>
std::pair<std::vector<Mat<Real>>, Real> fit_powers(const std::vector<Real>& ts, const std::vector<Mat<Real>>& ys,
                                                   const std::vector<int>& powers) {
  const auto rows = static_cast<Eigen::Index>(ts.size());
  const auto k = ys.front().rows();
  using std::pow;
  Mat<Real> design(rows, static_cast<Eigen::Index>(powers.size()));
  Mat<Real> rhs(rows, k * k);
  for (Eigen::Index g = 0; g < rows; ++g) {
    for (std::size_t c = 0; c < powers.size(); ++c)
      design(g, static_cast<Eigen::Index>(c)) = pow(ts[static_cast<std::size_t>(g)], Real(powers[c]));
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) rhs(g, a * k + b) = ys[static_cast<std::size_t>(g)](a, b);
  }
  auto [coef, res] = least_squares<Real>(design, rhs);
  std::vector<Mat<Real>> out;
  for (std::size_t c = 0; c < powers.size(); ++c) {
    Mat<Real> m(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) m(a, b) = coef(static_cast<Eigen::Index>(c), a * k + b);
    out.push_back(std::move(m));
  }
  return {out, res};
}

template <class C>
double covector_scale(const ControlModel<C>& model, const ExtremalState& l0) {
  auto fa = adapt_frame<double>(model);
  Vec<double> p = Eigen::Map<const Vec<double>>(l0.p.data(), static_cast<Eigen::Index>(l0.p.size()));
  double nu = (fa.T.transpose() * p).norm();
  if (!model.drift_free()) nu = std::max(nu, 1.0);
  if (!(nu > 0)) throw JacobiError("jacobi: zero covector");
  return nu;
}

}  // namespace detail

namespace detail {

inline bool wants_quad(const YoungDiagram& d, const JacobiOptions& opts) {
  if (opts.precision != JacobiPrecision::automatic) return opts.precision == JacobiPrecision::quad;
  return !d.rows.empty() && *std::max_element(d.rows.begin(), d.rows.end()) >= opts.quad_row;
}

template <class Real, class C>
void fit_curvature(const ControlModel<C>& model, const ExtremalState& l0, double window, int grid_size,
                   const JacobiOptions& opts, CurvatureReport& rep) {
  double eps = window / detail::covector_scale(model, l0);
  JacobiCurve<Real> jc(model, l0, eps, opts);
  auto samples = detail::window_samples(jc, eps, grid_size, opts);
  rep.window = eps;

  const std::size_t k = model.k();
  std::vector<Real> ts;
  std::vector<Mat<Real>> ys;
  for (const auto& s : samples) {
    ts.push_back(s.t);
    ys.push_back(s.t * s.t * q_matrix(s, k));
    rep.grid.push_back(static_cast<double>(s.t));
  }
  std::vector<int> powers{0, 2};
  for (int d = 3; d <= opts.fit_degree; ++d) powers.push_back(d);
  auto [coef, res] = detail::fit_powers(ts, ys, powers);
  std::vector<int> diag_powers{0, 1, 2};
  for (int d = 3; d < opts.fit_degree; ++d) diag_powers.push_back(d);
  auto [dcoef, dres] = detail::fit_powers(ts, ys, diag_powers);
  (void)dres;
  auto [lcoef, lres] = detail::fit_powers(ts, ys, std::vector<int>(powers.begin(), powers.end() - 1));
  (void)lres;

  rep.I = symmetrize<Real>(coef[0]).template cast<double>();
  Mat<double> R = (Real(3) * coef[1]).template cast<double>();
  rep.R_asymmetry = (R - R.transpose()).norm();
  rep.R = symmetrize<double>(R);
  rep.ric = rep.R.trace();
  rep.residual = static_cast<double>(res);
  rep.uncertainty = static_cast<double>(std::max<Real>((coef[0] - lcoef[0]).cwiseAbs().maxCoeff(),
                                                       Real(3) * (coef[1] - lcoef[1]).cwiseAbs().maxCoeff()));
  rep.linear_term = static_cast<double>(dcoef[1].cwiseAbs().maxCoeff());
}

}  // namespace detail

// Fit t^2 Q(t) = I + (R/3) t^2 + c_3 t^3 + ... on a geometric grid in (0, eps].
template <class C>
CurvatureReport curvature_report(const ControlModel<C>& model, const ExtremalState& l0, double window = 0.5,
                                 int grid_size = 12, const JacobiOptions& opts = {}) {
  if (!(window > 0)) throw std::invalid_argument("curvature_report: window must be positive");
  if (grid_size < opts.fit_degree + 2) throw std::invalid_argument("curvature_report: grid too small for the fit");
  CurvatureReport rep;
  rep.growth = growth_vector(model, l0, 0.0, model.n());
  if (rep.growth.dimension_reached() != model.n())
    throw JacobiError("curvature_report: geodesic is not ample at t = 0 (growth vector " + to_string(rep.growth) + ")");
  rep.summary = young_diagram_and_dimension(rep.growth, model.n());
  if (detail::wants_quad(rep.summary.diagram, opts))
    detail::fit_curvature<Quad>(model, l0, window, grid_size, opts, rep);
  else
    detail::fit_curvature<long double>(model, l0, window, grid_size, opts, rep);

  rep.I_eigenvalues = sorted_eigenvalues(rep.I);
  for (auto r : rep.summary.diagram.rows) rep.expected_eigenvalues.push_back(double(r * r));
  std::sort(rep.expected_eigenvalues.rbegin(), rep.expected_eigenvalues.rend());
  rep.eigenvalues_match = rep.expected_eigenvalues.size() == rep.I_eigenvalues.size();
  for (std::size_t i = 0; rep.eigenvalues_match && i < rep.I_eigenvalues.size(); ++i)
    if (std::abs(rep.I_eigenvalues[i] - rep.expected_eigenvalues[i]) > opts.eigen_tol * rep.expected_eigenvalues[i])
      rep.eigenvalues_match = false;

  std::ostringstream diag;
  const double scale = std::max(1.0, rep.I.cwiseAbs().maxCoeff());
  if (rep.residual > opts.residual_tol * scale) {
    rep.reliable = false;
    diag << "fit residual " << rep.residual << " above " << opts.residual_tol * scale << "; ";
  }
  if (!rep.eigenvalues_match) {
    rep.reliable = false;
    diag << "I eigenvalues do not match the squared rows of the Young diagram; ";
  }
  if (rep.growth.indeterminate) {
    rep.reliable = false;
    diag << rep.growth.diagnostic << "; ";
  }
  rep.diagnostic = diag.str();
  return rep;
}

struct ResidueReport {
  Mat<double> D;  // minus the 1/t coefficient of [S^{-1}]_{11}
  Mat<double> L;  // t coefficient
  std::vector<double> D_eigenvalues;
  std::vector<double> expected;
  bool diagonal_match = false;
  // L expressed in the eigenbasis of D; entries between rows of lengths differing by >= 2 should vanish
  Mat<double> L_canonical;
  double max_forbidden_entry = 0;
  double residual = 0;
  double window = 0;
};

namespace detail {

template <class Real, class C>
void fit_residue(const ControlModel<C>& model, const ExtremalState& l0, double window, int grid_size,
                 const JacobiOptions& opts, ResidueReport& r) {
  double eps = window / detail::covector_scale(model, l0);
  JacobiCurve<Real> jc(model, l0, eps, opts);
  auto samples = detail::window_samples(jc, eps, grid_size, opts);
  const std::size_t k = model.k();
  std::vector<Real> ts;
  std::vector<Mat<Real>> ys;
  for (const auto& s : samples) {
    ts.push_back(s.t);
    ys.push_back(s.t * reduced_inverse(s, k));
  }
  // t [S^{-1}]_{11} = -D + c t + L t^2 + ...
  std::vector<int> powers;
  for (int d = 0; d <= opts.fit_degree; ++d) powers.push_back(d);
  auto [coef, res] = detail::fit_powers(ts, ys, powers);
  r.window = eps;
  r.residual = static_cast<double>(res);
  r.D = symmetrize<Real>(Mat<Real>(-coef[0])).template cast<double>();
  r.L = symmetrize<Real>(coef[2]).template cast<double>();
}

}  // namespace detail

template <class C>
ResidueReport residue_crosscheck(const ControlModel<C>& model, const ExtremalState& l0, double window = 0.5,
                                 int grid_size = 12, const JacobiOptions& opts = {}) {
  auto g = growth_vector(model, l0, 0.0, model.n());
  if (g.dimension_reached() != model.n()) throw JacobiError("residue_crosscheck: geodesic is not ample");
  auto summary = young_diagram_and_dimension(g, model.n());
  ResidueReport r;
  if (detail::wants_quad(summary.diagram, opts))
    detail::fit_residue<Quad>(model, l0, window, grid_size, opts, r);
  else
    detail::fit_residue<long double>(model, l0, window, grid_size, opts, r);
  r.D_eigenvalues = sorted_eigenvalues(r.D);
  for (auto row : summary.diagram.rows) r.expected.push_back(double(row * row));
  std::sort(r.expected.rbegin(), r.expected.rend());
  r.diagonal_match = r.expected.size() == r.D_eigenvalues.size();
  for (std::size_t i = 0; r.diagonal_match && i < r.expected.size(); ++i)
    if (std::abs(r.D_eigenvalues[i] - r.expected[i]) > opts.eigen_tol * r.expected[i]) r.diagonal_match = false;
  Eigen::SelfAdjointEigenSolver<Mat<double>> es(r.D);
  // eigen solver sorts ascending; reverse so index a matches row a of the diagram
  Mat<double> V = es.eigenvectors().rowwise().reverse();
  r.L_canonical = V.transpose() * r.L * V;
  const auto& rows = summary.diagram.rows;
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < rows.size(); ++b) {
      const auto d = rows[a] > rows[b] ? rows[a] - rows[b] : rows[b] - rows[a];
      if (d >= 2)
        r.max_forbidden_entry = std::max(
            r.max_forbidden_entry, std::abs(r.L_canonical(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))));
    }
  return r;
}

}  // namespace srcurv
