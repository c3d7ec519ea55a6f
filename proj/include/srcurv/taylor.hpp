#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace srcurv {

// Truncated power series; a shorter operand is padded with zeros, so constants mix with full-length series.
template <class Real>
class Series {
 public:
  Series() : c_(1, Real(0)) {}
  Series(Real v) : c_(1, v) {}  // NOLINT: constants convert implicitly
  explicit Series(std::vector<Real> coeffs) : c_(std::move(coeffs)) {
    if (c_.empty()) c_.push_back(Real(0));
  }

  std::size_t size() const { return c_.size(); }
  Real operator[](std::size_t i) const { return i < c_.size() ? c_[i] : Real(0); }
  Real& coeff(std::size_t i) {
    if (i >= c_.size()) c_.resize(i + 1, Real(0));
    return c_[i];
  }
  const std::vector<Real>& coefficients() const { return c_; }

  friend Series operator+(const Series& a, const Series& b) {
    Series out;
    out.c_.assign(std::max(a.size(), b.size()), Real(0));
    for (std::size_t i = 0; i < a.size(); ++i) out.c_[i] += a.c_[i];
    for (std::size_t i = 0; i < b.size(); ++i) out.c_[i] += b.c_[i];
    return out;
  }
  friend Series operator-(const Series& a, const Series& b) {
    Series out;
    out.c_.assign(std::max(a.size(), b.size()), Real(0));
    for (std::size_t i = 0; i < a.size(); ++i) out.c_[i] += a.c_[i];
    for (std::size_t i = 0; i < b.size(); ++i) out.c_[i] -= b.c_[i];
    return out;
  }
  friend Series operator-(Series a) {
    for (auto& v : a.c_) v = -v;
    return a;
  }
  friend Series operator*(const Series& a, const Series& b) {
    const std::size_t n = std::max(a.size(), b.size());
    Series out;
    out.c_.assign(n, Real(0));
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.c_[i] == Real(0)) continue;
      for (std::size_t j = 0; j < b.size() && i + j < n; ++j) out.c_[i + j] += a.c_[i] * b.c_[j];
    }
    return out;
  }
  friend Series operator*(Series a, Real s) {
    for (auto& v : a.c_) v *= s;
    return a;
  }
  friend Series operator*(Real s, Series a) { return a * s; }
  Series& operator+=(const Series& o) { return *this = *this + o; }

  Series derivative() const {
    std::vector<Real> d;
    for (std::size_t i = 1; i < c_.size(); ++i) d.push_back(c_[i] * Real(i));
    return Series(std::move(d));
  }

  Real evaluate(Real h) const {
    Real acc = Real(0);
    for (std::size_t i = c_.size(); i-- > 0;) acc = acc * h + c_[i];
    return acc;
  }

 private:
  std::vector<Real> c_;
};

// Reciprocal of a series with nonzero constant term, to the given length.
template <class Real>
Series<Real> reciprocal(const Series<Real>& a, std::size_t len) {
  if (a[0] == Real(0)) throw std::domain_error("series reciprocal: zero constant term");
  std::vector<Real> r(len, Real(0));
  r[0] = Real(1) / a[0];
  for (std::size_t k = 1; k < len; ++k) {
    Real s = Real(0);
    for (std::size_t j = 1; j <= k; ++j) s += a[j] * r[k - j];
    r[k] = -s * r[0];
  }
  return Series<Real>(std::move(r));
}

// Right-hand side of y' = f(y) for autonomous systems, evaluated on truncated series.
template <class Real>
using SeriesRhs = std::function<void(const std::vector<Series<Real>>&, std::vector<Series<Real>>&)>;

// Taylor coefficients of the solution through y0: coeffs[j][i] is the t^j coefficient of component i.
template <class Real>
std::vector<std::vector<Real>> taylor_coefficients(const SeriesRhs<Real>& rhs, std::span<const Real> y0, int order) {
  const std::size_t dim = y0.size();
  std::vector<Series<Real>> y(dim), dy(dim);
  for (std::size_t i = 0; i < dim; ++i) y[i] = Series<Real>(std::vector<Real>{y0[i]});
  for (int k = 0; k < order; ++k) {
    rhs(y, dy);
    for (std::size_t i = 0; i < dim; ++i) {
      std::vector<Real> c = y[i].coefficients();
      c.resize(static_cast<std::size_t>(k) + 2, Real(0));
      c[static_cast<std::size_t>(k) + 1] = dy[i][static_cast<std::size_t>(k)] / Real(k + 1);
      y[i] = Series<Real>(std::move(c));
    }
  }
  std::vector<std::vector<Real>> out(static_cast<std::size_t>(order) + 1, std::vector<Real>(dim));
  for (std::size_t i = 0; i < dim; ++i)
    for (int j = 0; j <= order; ++j) out[static_cast<std::size_t>(j)][i] = y[i][static_cast<std::size_t>(j)];
  return out;
}

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TaylorOptions {
  int order = 20;
  double tol = 1e-10;  // per-step, relative to max(1, |y|)
  double safety = 0.9;
  std::size_t max_steps = 200000;
};

template <class Real>
struct TaylorStep {
  Real t0;
  Real h;
  std::vector<std::vector<Real>> coeffs;

  std::vector<Real> eval(Real t) const {
    Real s = t - t0;
    std::vector<Real> y(coeffs[0].size(), Real(0));
    for (std::size_t j = coeffs.size(); j-- > 0;)
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = y[i] * s + coeffs[j][i];
    return y;
  }
  std::vector<Real> eval_derivative(Real t) const {
    Real s = t - t0;
    std::vector<Real> y(coeffs[0].size(), Real(0));
    for (std::size_t j = coeffs.size(); j-- > 1;)
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = y[i] * s + coeffs[j][i] * Real(j);
    return y;
  }
};

// Piecewise Taylor polynomial; dense output anywhere between the start and end time.
template <class Real>
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(Real t_start, std::vector<Real> y_start) : t_start_(t_start), t_end_(t_start), y_end_(std::move(y_start)) {}

  Real t_start() const { return t_start_; }
  Real t_end() const { return t_end_; }
  const std::vector<Real>& final_state() const { return y_end_; }
  const std::vector<TaylorStep<Real>>& steps() const { return steps_; }

  void push(TaylorStep<Real> step, std::vector<Real> y_next) {
    t_end_ = step.t0 + step.h;
    steps_.push_back(std::move(step));
    y_end_ = std::move(y_next);
  }

  const TaylorStep<Real>& step_for(Real t) const {
    if (steps_.empty()) throw std::out_of_range("empty trajectory");
    const bool forward = t_end_ >= t_start_;
    auto lo = forward ? std::min(t_start_, t_end_) : std::min(t_start_, t_end_);
    auto hi = std::max(t_start_, t_end_);
    using std::abs;
    Real slack = Real(1e-12) * (Real(1) + abs(hi));
    if (t < lo - slack || t > hi + slack) throw std::out_of_range("time outside trajectory");
    // steps are monotone in t0; binary search on the step containing t
    std::size_t a = 0, b = steps_.size();
    while (b - a > 1) {
      std::size_t mid = (a + b) / 2;
      bool after = forward ? t >= steps_[mid].t0 : t <= steps_[mid].t0;
      if (after)
        a = mid;
      else
        b = mid;
    }
    return steps_[a];
  }

  std::vector<Real> eval(Real t) const {
    if (steps_.empty()) return y_end_;
    return step_for(t).eval(t);
  }
  std::vector<Real> eval_derivative(Real t) const { return step_for(t).eval_derivative(t); }

 private:
  Real t_start_ = Real(0), t_end_ = Real(0);
  std::vector<TaylorStep<Real>> steps_;
  std::vector<Real> y_end_;
};

template <class Real>
Real inf_norm(const std::vector<Real>& v) {
  Real m = Real(0);
  using std::abs;
  for (const auto& x : v) m = std::max(m, static_cast<Real>(abs(x)));
  return m;
}

// Adaptive Taylor integration from t = 0 to t = T (T may be negative).
template <class Real>
Trajectory<Real> taylor_propagate(const SeriesRhs<Real>& rhs, std::vector<Real> y0, Real T,
                                  const TaylorOptions& opts = {}) {
  Trajectory<Real> traj(Real(0), y0);
  const Real dir = T >= Real(0) ? Real(1) : Real(-1);
  using std::abs, std::pow;
  const Real span = abs(T);
  Real done = Real(0);
  std::vector<Real> y = std::move(y0);
  const int N = opts.order;
  std::size_t count = 0;
  while (done < span) {
    if (++count > opts.max_steps) throw IntegrationError("taylor_propagate: step budget exhausted");
    auto coeffs = taylor_coefficients<Real>(rhs, std::span<const Real>(y), N);
    const Real scale = std::max(Real(1), inf_norm(y));
    const Real tol = static_cast<Real>(opts.tol) * scale;
    Real h = std::numeric_limits<Real>::infinity();
    for (int j : {N - 1, N}) {
      Real nj = inf_norm(coeffs[static_cast<std::size_t>(j)]);
      if (nj > Real(0)) h = std::min(h, static_cast<Real>(pow(tol / nj, Real(1) / Real(j))));
    }
    if (!std::isfinite(static_cast<double>(h))) h = span - done;
    h *= static_cast<Real>(opts.safety);
    h = std::min(h, span - done);
    if (span - done - h < Real(1e-13) * span) h = span - done;
    const bool last = h == span - done;
    if (!last && h < Real(1e-14) * (Real(1) + done)) throw IntegrationError("taylor_propagate: step size underflow");
    TaylorStep<Real> step{dir * done, dir * h, std::move(coeffs)};
    std::vector<Real> next = step.eval(dir * (done + h));
    for (const auto& v : next)
      if (!std::isfinite(static_cast<double>(v))) throw IntegrationError("taylor_propagate: non-finite state");
    done = last ? span : done + h;
    y = next;
    traj.push(std::move(step), std::move(next));
  }
  return traj;
}

}  // namespace srcurv
