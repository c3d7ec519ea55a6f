#pragma once

#include <algorithm>
#include <cstddef>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "srcurv/hamflow.hpp"
#include "srcurv/linalg.hpp"
#include "srcurv/model.hpp"
#include "srcurv/taylor.hpp"

namespace srcurv {

struct GrowthVector {
  std::vector<std::size_t> k;  // k_1 <= k_2 <= ...
  double t = 0;
  double rank_tolerance = 1e-8;
  bool indeterminate = false;
  std::string diagnostic;

  std::size_t dimension_reached() const { return k.empty() ? 0 : k.back(); }
  std::vector<std::size_t> differences() const {
    std::vector<std::size_t> d;
    std::size_t prev = 0;
    for (auto v : k) {
      d.push_back(v - prev);
      prev = v;
    }
    return d;
  }
  friend bool operator==(const GrowthVector& a, const GrowthVector& b) { return a.k == b.k; }
};

inline std::string to_string(const GrowthVector& g) {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < g.k.size(); ++i) os << (i ? "," : "") << g.k[i];
  os << "}";
  return os.str();
}

struct GrowthOptions {
  double tau = 1e-8;
  double min_gap = 10.0;
  double tol = 1e-10;
};

struct YoungDiagram {
  std::vector<std::size_t> rows;  // n_1 >= n_2 >= ...
  std::size_t size() const {
    std::size_t s = 0;
    for (auto r : rows) s += r;
    return s;
  }
  friend bool operator==(const YoungDiagram&, const YoungDiagram&) = default;
};

struct DiagramSummary {
  YoungDiagram diagram;
  std::size_t geodesic_dimension = 0;
  std::size_t trace_I = 0;  // sum of squared rows
};

class FlagError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Conjugate partition of (d_1, ..., d_m).
inline YoungDiagram conjugate_partition(const std::vector<std::size_t>& d) {
  YoungDiagram y;
  if (d.empty()) return y;
  std::size_t maxd = *std::max_element(d.begin(), d.end());
  for (std::size_t a = 1; a <= maxd; ++a) {
    std::size_t len = 0;
    for (auto v : d)
      if (v >= a) ++len;
    y.rows.push_back(len);
  }
  return y;
}

// Rows, N = sum (2i-1) d_i, and sum n_a^2 for an ample growth vector of a curve in dimension n.
inline DiagramSummary young_diagram_and_dimension(const GrowthVector& g, std::size_t n) {
  if (g.k.empty() || g.k.back() != n)
    throw FlagError("growth vector " + to_string(g) + " is not ample in dimension " + std::to_string(n));
  DiagramSummary s;
  auto d = g.differences();
  s.diagram = conjugate_partition(d);
  for (std::size_t i = 0; i < d.size(); ++i) s.geodesic_dimension += (2 * i + 1) * d[i];
  for (auto r : s.diagram.rows) s.trace_I += r * r;
  return s;
}

// d_{i+1} <= d_i and k_1 < ... < k_m for an ample vector.
inline bool flag_inequalities_hold(const GrowthVector& g) {
  auto d = g.differences();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == 0) return false;
    if (i > 0 && d[i] > d[i - 1]) return false;
  }
  return true;
}

namespace detail {

using SeriesVec = std::vector<Series<double>>;

// Row-major n x m matrix of series.
struct SeriesMatrix {
  std::size_t rows = 0, cols = 0;
  SeriesVec data;
  SeriesMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}
  Series<double>& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const Series<double>& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  Mat<double> at_zero() const {
    Mat<double> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j)[0];
    return m;
  }
};

// The model's fields and their Jacobians compiled in the state variables.
class CompiledControlSystem {
 public:
  template <class C>
  explicit CompiledControlSystem(const ControlModel<C>& m) : n_(m.n()), k_(m.k()) {
    auto add = [&](const PolyVectorField<C>& f, std::vector<CompiledPolynomial<double>>& vals,
                   std::vector<CompiledPolynomial<double>>& jac) {
      for (std::size_t i = 0; i < n_; ++i) {
        vals.emplace_back(f[i]);
        for (std::size_t j = 0; j < n_; ++j) jac.emplace_back(f[i].derivative(j));
      }
    };
    add(m.drift_or_zero(), drift_, drift_jac_);
    fields_.resize(k_);
    field_jac_.resize(k_);
    for (std::size_t i = 0; i < k_; ++i) add(m.field(i), fields_[i], field_jac_[i]);
    max_exp_.assign(n_, 0);
    auto bump = [&](const std::vector<CompiledPolynomial<double>>& ps) {
      for (const auto& p : ps)
        for (std::size_t v = 0; v < n_; ++v) max_exp_[v] = std::max(max_exp_[v], p.max_exponent(v));
    };
    bump(drift_);
    bump(drift_jac_);
    for (std::size_t i = 0; i < k_; ++i) {
      bump(fields_[i]);
      bump(field_jac_[i]);
    }
  }

  std::size_t n() const { return n_; }
  std::size_t k() const { return k_; }

  // A = Df0 + sum u_i Df_i and B = [f_1 ... f_k] along a state series x(s) with controls u(s).
  std::pair<SeriesMatrix, SeriesMatrix> linearization(const SeriesVec& x, const SeriesVec& u) const {
    auto pw = power_table(std::span<const Series<double>>(x), max_exp_);
    SeriesMatrix A(n_, n_), B(n_, k_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        const auto& dp = drift_jac_[i * n_ + j];
        Series<double> a = dp.is_zero() ? Series<double>(0.0) : dp(pw);
        for (std::size_t c = 0; c < k_; ++c) {
          const auto& fp = field_jac_[c][i * n_ + j];
          if (!fp.is_zero()) a += u[c] * fp(pw);
        }
        A(i, j) = a;
      }
    for (std::size_t c = 0; c < k_; ++c)
      for (std::size_t i = 0; i < n_; ++i) B(i, c) = fields_[c][i](pw);
    return {A, B};
  }

 private:
  std::size_t n_, k_;
  std::vector<CompiledPolynomial<double>> drift_, drift_jac_;
  std::vector<std::vector<CompiledPolynomial<double>>> fields_, field_jac_;
  std::vector<unsigned> max_exp_;
};

// Taylor series in s of the extremal at time t: x(t+s), u(t+s).
template <class C>
std::pair<SeriesVec, SeriesVec> extremal_series(const ControlModel<C>& m, const ExtremalState& l0, double t,
                                                int order, double tol) {
  HamiltonianSystem<double> hs(m);
  std::vector<double> y = l0.packed();
  if (t != 0.0) {
    FlowOptions fo;
    fo.tol = tol;
    y = integrate_extremal(m, l0, t, fo).final_state().packed();
  }
  auto coeffs = taylor_coefficients<double>(hs.extremal_rhs(), std::span<const double>(y), order);
  const std::size_t n = m.n();
  SeriesVec ys(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    std::vector<double> c;
    for (const auto& row : coeffs) c.push_back(row[i]);
    ys[i] = Series<double>(std::move(c));
  }
  SeriesVec xs(ys.begin(), ys.begin() + static_cast<std::ptrdiff_t>(n));
  // u_i = <p, f_i(x)>
  std::vector<CompiledPolynomial<double>> ctrl;
  for (const auto& f : m.fields()) ctrl.emplace_back(pairing(f));
  std::vector<unsigned> me(2 * n, 0);
  for (const auto& p : ctrl)
    for (std::size_t v = 0; v < 2 * n; ++v) me[v] = std::max(me[v], p.max_exponent(v));
  auto pw = power_table(std::span<const Series<double>>(ys), me);
  SeriesVec us;
  for (const auto& p : ctrl) us.push_back(p(pw));
  return {xs, us};
}

inline SeriesMatrix multiply(const SeriesMatrix& a, const SeriesMatrix& b) {
  SeriesMatrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t l = 0; l < a.cols; ++l) {
      const auto& ail = a(i, l);
      bool zero = true;
      for (auto v : ail.coefficients())
        if (v != 0.0) zero = false;
      if (zero) continue;
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += ail * b(l, j);
    }
  return c;
}

}  // namespace detail

struct Linearization {
  Mat<double> A;
  Mat<double> B;
};

// A(t), B(t) of the control system linearised along the normal extremal through l0.
template <class C>
Linearization linearization_matrices(const ControlModel<C>& m, const ExtremalState& l0, double t, double tol = 1e-10) {
  auto [xs, us] = detail::extremal_series(m, l0, t, 1, tol);
  detail::CompiledControlSystem cs(m);
  auto [A, B] = cs.linearization(xs, us);
  return {A.at_zero(), B.at_zero()};
}

// Growth vector from series of the curve and its control: B_1 = B, B_{i+1} = A B_i - B_i'.
template <class C>
GrowthVector growth_vector_along(const ControlModel<C>& m, const detail::SeriesVec& xs, const detail::SeriesVec& us,
                                 std::size_t depth_max, const GrowthOptions& opts = {}) {
  if (depth_max < 1) throw std::invalid_argument("growth_vector: depth_max must be >= 1");
  detail::CompiledControlSystem cs(m);
  auto [A, Bi] = cs.linearization(xs, us);
  const std::size_t n = m.n(), k = m.k();
  GrowthVector g;
  g.rank_tolerance = opts.tau;
  Mat<double> stacked(static_cast<Eigen::Index>(n), 0);
  for (std::size_t i = 1; i <= depth_max; ++i) {
    Mat<double> b = Bi.at_zero();
    Mat<double> next(stacked.rows(), stacked.cols() + b.cols());
    next << stacked, b;
    stacked = std::move(next);
    auto r = numerical_rank(stacked, opts.tau, opts.min_gap);
    if (r.indeterminate) {
      g.indeterminate = true;
      std::ostringstream os;
      os << "rank indeterminate at step " << i << ": singular values straddle the tolerance band (gap ratio "
         << r.gap_ratio << ")";
      g.diagnostic = os.str();
    }
    g.k.push_back(r.rank);
    if (r.rank == n) break;
    if (i == depth_max) break;
    auto AB = detail::multiply(A, Bi);
    detail::SeriesMatrix nb(n, k);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t c = 0; c < k; ++c) nb(a, c) = AB(a, c) - Bi(a, c).derivative();
    Bi = std::move(nb);
  }
  return g;
}

template <class C>
GrowthVector growth_vector(const ControlModel<C>& m, const ExtremalState& l0, double t, std::size_t depth_max,
                           const GrowthOptions& opts = {}) {
  auto [xs, us] = detail::extremal_series(m, l0, t, static_cast<int>(depth_max) + 2, opts.tol);
  auto g = growth_vector_along(m, xs, us, depth_max, opts);
  g.t = t;
  return g;
}

struct EquiregularityReport {
  bool equiregular = true;
  std::vector<double> times;
  std::vector<GrowthVector> vectors;
};

// Growth vector recomputed at jittered times in [0, eps].
template <class C>
EquiregularityReport equiregularity_check(const ControlModel<C>& m, const ExtremalState& l0, double eps,
                                          std::size_t depth_max, std::uint64_t seed = 1, int samples = 5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, eps);
  EquiregularityReport r;
  auto ref = growth_vector(m, l0, 0.0, depth_max);
  for (int i = 0; i < samples; ++i) {
    double t = U(rng);
    auto g = growth_vector(m, l0, t, depth_max);
    r.times.push_back(t);
    if (!(g == ref)) r.equiregular = false;
    r.vectors.push_back(std::move(g));
  }
  return r;
}

// Exact flag of the curve with constant control u at the base point: ranks of ad_T^j f_i, T = f0 + sum u_i f_i.
inline GrowthVector flag_from_brackets(const RationalModel& m, const std::vector<Rational>& u, std::size_t depth_max = 0) {
  if (u.size() != m.k()) throw std::invalid_argument("flag_from_brackets: control has wrong length");
  if (depth_max == 0) depth_max = m.n();
  RationalField T = m.drift_or_zero();
  for (std::size_t i = 0; i < m.k(); ++i) T += u[i] * m.field(i);
  auto x0 = point_as<Rational>(m.base_point());
  std::vector<RationalField> level = m.fields();
  std::vector<std::vector<Rational>> values;
  GrowthVector g;
  g.rank_tolerance = 0;
  for (std::size_t j = 0; j < depth_max; ++j) {
    for (const auto& v : level) values.push_back(v.evaluate(x0));
    std::size_t r = rank_at(values, m.n(), 0.0);
    g.k.push_back(r);
    if (r == m.n()) break;
    for (auto& v : level) v = lie_bracket(T, v);
  }
  return g;
}

using PolynomialMatrix = std::vector<std::vector<Polynomial<Rational>>>;

// f0' = f0 + sum_i psi_{i0} f_i, f_j' = sum_i psi_{ij} f_i, i.e. old controls u = psi0 + Psi v.
inline RationalModel feedback_transform(const RationalModel& m, const std::vector<Polynomial<Rational>>& psi0,
                                        const PolynomialMatrix& Psi, const ModelCheckOptions& opts = {}) {
  const std::size_t k = m.k(), n = m.n();
  if (psi0.size() != k || Psi.size() != k) throw ModelError("feedback_transform: shapes must match the control rank");
  auto x0 = point_as<Rational>(m.base_point());
  DenseMatrix<Rational> at(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    if (Psi[i].size() != k) throw ModelError("feedback_transform: Psi must be square");
    for (std::size_t j = 0; j < k; ++j) at(i, j) = Psi[i][j].evaluate(x0);
  }
  if (determinant(at) == 0) throw ModelError("feedback_transform: Psi is singular at the base point");
  RationalField f0 = m.drift_or_zero();
  for (std::size_t i = 0; i < k; ++i) f0 += psi0[i] * m.field(i);
  std::vector<RationalField> fields;
  for (std::size_t j = 0; j < k; ++j) {
    RationalField f = RationalField::zero(n);
    for (std::size_t i = 0; i < k; ++i) f += Psi[i][j] * m.field(i);
    fields.push_back(std::move(f));
  }
  std::optional<RationalField> drift;
  if (!f0.is_zero()) drift = f0;
  return RationalModel(m.name() + "+feedback", std::move(drift), std::move(fields), m.base_point(), opts);
}

// Growth vector of the original model's geodesic through l0, computed in the transformed presentation with the
// controls v = Psi^{-1}(u - psi0) that reproduce the same curve.
inline GrowthVector growth_vector_after_feedback(const RationalModel& original, const ExtremalState& l0, double t,
                                                 const std::vector<Polynomial<Rational>>& psi0,
                                                 const PolynomialMatrix& Psi, std::size_t depth_max,
                                                 const GrowthOptions& opts = {}) {
  auto transformed = feedback_transform(original, psi0, Psi, ControlModel<Rational>::unchecked());
  const int order = static_cast<int>(depth_max) + 2;
  auto [xs, us] = detail::extremal_series(original, l0, t, order, opts.tol);
  const std::size_t k = original.k();
  std::vector<unsigned> me(original.n(), 0);
  std::vector<CompiledPolynomial<double>> p0;
  std::vector<std::vector<CompiledPolynomial<double>>> P(k);
  for (std::size_t i = 0; i < k; ++i) {
    p0.emplace_back(psi0[i]);
    for (std::size_t j = 0; j < k; ++j) P[i].emplace_back(Psi[i][j]);
  }
  auto bump = [&](const CompiledPolynomial<double>& p) {
    for (std::size_t v = 0; v < me.size(); ++v) me[v] = std::max(me[v], p.max_exponent(v));
  };
  for (std::size_t i = 0; i < k; ++i) {
    bump(p0[i]);
    for (const auto& p : P[i]) bump(p);
  }
  auto pw = power_table(std::span<const Series<double>>(xs), me);
  const std::size_t len = static_cast<std::size_t>(order) + 1;
  // coefficient matrices of Psi(x(s))
  std::vector<Mat<double>> Mc(len, Mat<double>::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
  std::vector<Vec<double>> r(len, Vec<double>::Zero(static_cast<Eigen::Index>(k)));
  for (std::size_t i = 0; i < k; ++i) {
    auto d = us[i] - p0[i](pw);
    for (std::size_t l = 0; l < len; ++l) r[l](static_cast<Eigen::Index>(i)) = d[l];
    for (std::size_t j = 0; j < k; ++j) {
      auto s = P[i][j](pw);
      for (std::size_t l = 0; l < len; ++l) Mc[l](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s[l];
    }
  }
  // series solve Psi v = r
  Eigen::FullPivLU<Mat<double>> lu(Mc[0]);
  std::vector<Vec<double>> v(len);
  for (std::size_t l = 0; l < len; ++l) {
    Vec<double> rhs = r[l];
    for (std::size_t q = 1; q <= l; ++q) rhs -= Mc[q] * v[l - q];
    v[l] = lu.solve(rhs);
  }
  detail::SeriesVec vs(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> c;
    for (std::size_t l = 0; l < len; ++l) c.push_back(v[l](static_cast<Eigen::Index>(i)));
    vs[i] = Series<double>(std::move(c));
  }
  auto g = growth_vector_along(transformed, xs, vs, depth_max, opts);
  g.t = t;
  return g;
}

}  // namespace srcurv
