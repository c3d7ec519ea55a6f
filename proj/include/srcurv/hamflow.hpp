#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srcurv/linalg.hpp"
#include "srcurv/model.hpp"
#include "srcurv/taylor.hpp"

namespace srcurv {

namespace detail {

// f(x) in n variables viewed as a function of (x, p) in 2n variables.
template <class C>
Polynomial<C> lift_to_phase_space(const Polynomial<C>& f) {
  const std::size_t n = f.dim();
  Polynomial<C> out(2 * n);
  for (const auto& [e, c] : f.terms()) {
    Exponents big(2 * n, 0);
    std::copy(e.begin(), e.end(), big.begin());
    out.add_term(big, c);
  }
  return out;
}

// <p, V(x)> in phase space.
template <class C>
Polynomial<C> pairing(const PolyVectorField<C>& v) {
  const std::size_t n = v.dim();
  Polynomial<C> out(2 * n);
  for (std::size_t j = 0; j < n; ++j)
    out += Polynomial<C>::variable(2 * n, n + j) * lift_to_phase_space(v[j]);
  return out;
}

}  // namespace detail

// H(x,p) = <p, f0> + 1/2 sum <p, f_i>^2 with its Hamiltonian field (dH/dp, -dH/dx) and the field's Jacobian,
// all by exact differentiation, compiled for evaluation over Real or truncated series.
template <class Real = double>
class HamiltonianSystem {
 public:
  template <class C>
  explicit HamiltonianSystem(const ControlModel<C>& model) : n_(model.n()) {
    const std::size_t N = 2 * n_;
    Polynomial<C> H(N);
    if (!model.drift_free()) H += detail::pairing(*model.drift());
    for (const auto& f : model.fields()) {
      auto u = detail::pairing(f);
      controls_.emplace_back(u);
      H += C(1) / C(2) * (u * u);
    }
    H_ = CompiledPolynomial<Real>(H);
    std::vector<Polynomial<C>> field;
    for (std::size_t i = 0; i < n_; ++i) field.push_back(H.derivative(n_ + i));
    for (std::size_t i = 0; i < n_; ++i) field.push_back(-H.derivative(i));
    for (std::size_t a = 0; a < N; ++a) {
      field_.emplace_back(field[a]);
      for (std::size_t b = 0; b < N; ++b) jac_.emplace_back(field[a].derivative(b));
    }
    max_exp_.assign(N, 0);
    auto bump = [&](const CompiledPolynomial<Real>& p) {
      for (std::size_t v = 0; v < N; ++v) max_exp_[v] = std::max(max_exp_[v], p.max_exponent(v));
    };
    bump(H_);
    for (const auto& p : field_) bump(p);
    for (const auto& p : jac_) bump(p);
    for (const auto& p : controls_) bump(p);
  }

  std::size_t n() const { return n_; }
  std::size_t k() const { return controls_.size(); }

  Real energy(std::span<const Real> y) const { return H_(power_table(y, max_exp_)); }

  std::vector<Real> controls(std::span<const Real> y) const {
    auto pw = power_table(y, max_exp_);
    std::vector<Real> u;
    for (const auto& c : controls_) u.push_back(c(pw));
    return u;
  }

  template <class T>
  void field(std::span<const T> y, std::vector<T>& dy) const {
    auto pw = power_table(y, max_exp_);
    dy.resize(2 * n_);
    for (std::size_t a = 0; a < 2 * n_; ++a) dy[a] = field_[a](pw);
  }

  template <class T>
  std::vector<T> field(std::span<const T> y) const {
    std::vector<T> dy;
    field(y, dy);
    return dy;
  }

  // Row-major 2n x 2n Jacobian of the Hamiltonian field.
  Mat<Real> jacobian(std::span<const Real> y) const {
    auto pw = power_table(y, max_exp_);
    const auto N = static_cast<Eigen::Index>(2 * n_);
    Mat<Real> J(N, N);
    for (Eigen::Index a = 0; a < N; ++a)
      for (Eigen::Index b = 0; b < N; ++b) J(a, b) = jac_[static_cast<std::size_t>(a * N + b)](pw);
    return J;
  }

  SeriesRhs<Real> extremal_rhs() const {
    return [this](const std::vector<Series<Real>>& y, std::vector<Series<Real>>& dy) {
      field(std::span<const Series<Real>>(y), dy);
    };
  }

  // State (y, M) with M row-major; M' = J(y) M.
  SeriesRhs<Real> variational_rhs() const {
    return [this](const std::vector<Series<Real>>& s, std::vector<Series<Real>>& ds) {
      const std::size_t N = 2 * n_;
      std::span<const Series<Real>> y(s.data(), N);
      auto pw = power_table(y, max_exp_);
      ds.assign(N + N * N, Series<Real>());
      for (std::size_t a = 0; a < N; ++a) ds[a] = field_[a](pw);
      for (std::size_t a = 0; a < N; ++a)
        for (std::size_t b = 0; b < N; ++b) {
          const auto& jp = jac_[a * N + b];
          if (jp.is_zero()) continue;
          Series<Real> jab = jp(pw);
          for (std::size_t c = 0; c < N; ++c) {
            const auto& m = s[N + b * N + c];
            ds[N + a * N + c] += jab * m;
          }
        }
    };
  }

 private:
  std::size_t n_;
  CompiledPolynomial<Real> H_;
  std::vector<CompiledPolynomial<Real>> controls_;
  std::vector<CompiledPolynomial<Real>> field_;
  std::vector<CompiledPolynomial<Real>> jac_;
  std::vector<unsigned> max_exp_;
};

struct ExtremalState {
  std::vector<double> x;
  std::vector<double> p;

  std::vector<double> packed() const {
    std::vector<double> y = x;
    y.insert(y.end(), p.begin(), p.end());
    return y;
  }
  static ExtremalState unpack(std::span<const double> y) {
    const std::size_t n = y.size() / 2;
    return {std::vector<double>(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n)),
            std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(n), y.end())};
  }
};

template <class C>
ExtremalState at_base(const ControlModel<C>& model, std::vector<double> p) {
  if (p.size() != model.n())
    throw std::invalid_argument("covector has " + std::to_string(p.size()) + " components, model dimension is " +
                                std::to_string(model.n()));
  return {model.base_point(), std::move(p)};
}

template <class C>
double hamiltonian(const ControlModel<C>& model, const ExtremalState& s) {
  auto y = s.packed();
  return HamiltonianSystem<double>(model).energy(y);
}

// u_i = <p, f_i(x)>
template <class C>
std::vector<double> normal_controls(const ControlModel<C>& model, const ExtremalState& s) {
  auto y = s.packed();
  return HamiltonianSystem<double>(model).controls(y);
}

struct FlowOptions {
  double tol = 1e-10;
  int order = 20;
};

class ExtremalTrajectory {
 public:
  ExtremalTrajectory(Trajectory<double> traj, double energy0, double max_drift)
      : traj_(std::move(traj)), energy0_(energy0), max_drift_(max_drift) {}

  ExtremalState at(double t) const { return ExtremalState::unpack(traj_.eval(t)); }
  ExtremalState final_state() const { return ExtremalState::unpack(traj_.final_state()); }
  double t_end() const { return traj_.t_end(); }
  double initial_energy() const { return energy0_; }
  double max_energy_drift() const { return max_drift_; }
  const Trajectory<double>& trajectory() const { return traj_; }

 private:
  Trajectory<double> traj_;
  double energy0_;
  double max_drift_;
};

template <class C>
ExtremalTrajectory integrate_extremal(const ControlModel<C>& model, const ExtremalState& l0, double T,
                                      const FlowOptions& opts = {}) {
  if (!(opts.tol > 0)) throw std::invalid_argument("integrate_extremal: tol must be positive");
  if (l0.x.size() != model.n() || l0.p.size() != model.n())
    throw std::invalid_argument("integrate_extremal: state dimension mismatch");
  HamiltonianSystem<double> hs(model);
  auto y0 = l0.packed();
  const double H0 = hs.energy(y0);
  TaylorOptions to;
  to.order = opts.order;
  to.tol = opts.tol * 1e-2;
  auto traj = taylor_propagate<double>(hs.extremal_rhs(), y0, T, to);
  double drift = 0;
  for (const auto& st : traj.steps()) {
    auto y = st.eval(st.t0 + st.h);
    drift = std::max(drift, std::abs(hs.energy(y) - H0));
  }
  if (drift > opts.tol * (1 + std::abs(H0)))
    throw IntegrationError("integrate_extremal: energy drift " + std::to_string(drift) + " above tolerance");
  return ExtremalTrajectory(std::move(traj), H0, drift);
}

// pi o e^{tH}(x0, p0)
template <class C>
std::vector<double> exponential_map(const ControlModel<C>& model, const std::vector<double>& x0,
                                    const std::vector<double>& p0, double t, const FlowOptions& opts = {}) {
  if (t == 0.0) return x0;
  return integrate_extremal(model, ExtremalState{x0, p0}, t, opts).final_state().x;
}

template <class Real = double>
struct VariationalFrame {
  Real t;
  Mat<Real> M;
  Mat<Real> M_inv;
};

// Symplectic inverse of M = [[a, b], [c, d]]: [[d^T, -b^T], [-c^T, a^T]].
template <class Real>
Mat<Real> symplectic_inverse(const Mat<Real>& M) {
  const auto n = M.rows() / 2;
  Mat<Real> inv(2 * n, 2 * n);
  inv.topLeftCorner(n, n) = M.bottomRightCorner(n, n).transpose();
  inv.topRightCorner(n, n) = -M.topRightCorner(n, n).transpose();
  inv.bottomLeftCorner(n, n) = -M.bottomLeftCorner(n, n).transpose();
  inv.bottomRightCorner(n, n) = M.topLeftCorner(n, n).transpose();
  return inv;
}

template <class Real>
Mat<Real> canonical_symplectic(Eigen::Index n) {
  Mat<Real> J = Mat<Real>::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n) = Mat<Real>::Identity(n, n);
  J.bottomLeftCorner(n, n) = -Mat<Real>::Identity(n, n);
  return J;
}

// Extremal together with the fundamental solution of its linearisation.
template <class Real = double>
class VariationalTrajectory {
 public:
  VariationalTrajectory(HamiltonianSystem<Real> hs, Trajectory<Real> traj)
      : hs_(std::move(hs)), traj_(std::move(traj)) {}

  std::size_t n() const { return hs_.n(); }
  Real t_end() const { return traj_.t_end(); }
  const Trajectory<Real>& trajectory() const { return traj_; }
  const HamiltonianSystem<Real>& system() const { return hs_; }

  std::vector<Real> state(Real t) const {
    auto s = traj_.eval(t);
    s.resize(2 * n());
    return s;
  }

  Mat<Real> M(Real t) const { return unpack_matrix(traj_.eval(t)); }

  VariationalFrame<Real> frame(Real t) const {
    auto m = M(t);
    return {t, m, symplectic_inverse(m)};
  }

  // M' = J(y(t)) M(t), from the exact Jacobian.
  Mat<Real> M_dot(Real t) const {
    auto s = traj_.eval(t);
    std::vector<Real> y(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(2 * n()));
    return hs_.jacobian(y) * unpack_matrix(s);
  }

 private:
  Mat<Real> unpack_matrix(const std::vector<Real>& s) const {
    const auto N = static_cast<Eigen::Index>(2 * n());
    Mat<Real> m(N, N);
    for (Eigen::Index a = 0; a < N; ++a)
      for (Eigen::Index b = 0; b < N; ++b) m(a, b) = s[static_cast<std::size_t>(N + a * N + b)];
    return m;
  }

  HamiltonianSystem<Real> hs_;
  Trajectory<Real> traj_;
};

template <class Real = double, class C>
VariationalTrajectory<Real> variational_flow(const ControlModel<C>& model, const ExtremalState& l0, double T,
                                             const FlowOptions& opts = {}) {
  if (!(opts.tol > 0)) throw std::invalid_argument("variational_flow: tol must be positive");
  HamiltonianSystem<Real> hs(model);
  const std::size_t N = 2 * model.n();
  std::vector<Real> s0(N + N * N, Real(0));
  for (std::size_t i = 0; i < model.n(); ++i) {
    s0[i] = static_cast<Real>(l0.x.at(i));
    s0[model.n() + i] = static_cast<Real>(l0.p.at(i));
  }
  for (std::size_t i = 0; i < N; ++i) s0[N + i * N + i] = Real(1);
  TaylorOptions to;
  to.order = opts.order;
  to.tol = opts.tol * 1e-2;
  auto traj = taylor_propagate<Real>(hs.variational_rhs(), s0, static_cast<Real>(T), to);
  return VariationalTrajectory<Real>(std::move(hs), std::move(traj));
}

struct ConjugateOptions {
  double tol = 1e-10;
  double rel_tol = 1e-8;       // bisection stopping rule
  double even_zero_level = 1e-10;
  int samples_per_step = 16;
  int min_samples = 400;
};

struct ConjugateResult {
  std::optional<double> time;
  bool possible_even_zero = false;
  std::optional<double> even_zero_time;
  double min_normalized_det = 1;
};

// Smallest t in (0, t_max] where det(dx/dp0) changes sign, refined by bisection.
template <class C>
ConjugateResult first_conjugate_time(const ControlModel<C>& model, const ExtremalState& l0, double t_max,
                                     const ConjugateOptions& opts = {}) {
  if (!(t_max > 0)) throw std::invalid_argument("first_conjugate_time: t_max must be positive");
  FlowOptions fo;
  fo.tol = opts.tol;
  auto vf = variational_flow<double>(model, l0, t_max, fo);
  const auto n = static_cast<Eigen::Index>(model.n());
  auto det_b = [&](double t) { return vf.M(t).topRightCorner(n, n).determinant(); };
  auto normalized = [&](double t) {
    Mat<double> b = vf.M(t).topRightCorner(n, n);
    double prod = 1;
    for (Eigen::Index j = 0; j < n; ++j) prod *= std::max(b.col(j).norm(), 1e-300);
    return b.determinant() / prod;
  };

  std::vector<double> ts;
  for (const auto& st : vf.trajectory().steps())
    for (int i = 1; i <= opts.samples_per_step; ++i) ts.push_back(st.t0 + st.h * i / opts.samples_per_step);
  for (int i = 1; i <= opts.min_samples; ++i) ts.push_back(t_max * i / opts.min_samples);
  std::sort(ts.begin(), ts.end());

  ConjugateResult out;
  const double t_floor = t_max / opts.min_samples;
  double prev_t = 0, prev_v = 0;
  bool have_prev = false;
  for (double t : ts) {
    if (t < t_floor * 0.999) continue;
    double v = det_b(t);
    double r = normalized(t);
    out.min_normalized_det = std::min(out.min_normalized_det, std::abs(r));
    if (have_prev && ((prev_v > 0 && v < 0) || (prev_v < 0 && v > 0) || v == 0)) {
      double lo = prev_t, hi = t;
      const double flo = prev_v;
      if (v == 0) {
        out.time = t;
        return out;
      }
      while (hi - lo > opts.rel_tol * hi * 1e-2) {
        double mid = 0.5 * (lo + hi);
        double fm = det_b(mid);
        if (fm == 0) {
          lo = hi = mid;
          break;
        }
        if ((fm > 0) == (flo > 0))
          lo = mid;
        else
          hi = mid;
      }
      out.time = 0.5 * (lo + hi);
      return out;
    }
    if (std::abs(r) < opts.even_zero_level && !out.possible_even_zero) {
      out.possible_even_zero = true;
      out.even_zero_time = t;
    }
    prev_t = t;
    prev_v = v;
    have_prev = true;
  }
  return out;
}

}  // namespace srcurv
