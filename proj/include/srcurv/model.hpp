#pragma once

#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "srcurv/config.hpp"
#include "srcurv/linalg.hpp"
#include "srcurv/vector_field.hpp"

namespace srcurv {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelCheckOptions {
  unsigned bracket_depth = 6;
  double rank_tolerance = 1e-10;  // double mode only
};

template <class C>
class ControlModel;

template <class C>
std::size_t rank_at(const std::vector<std::vector<C>>& vectors, std::size_t n, double tol) {
  if (vectors.empty()) return 0;
  if constexpr (std::is_same_v<C, Rational>) {
    DenseMatrix<Rational> m(vectors.size(), n);
    for (std::size_t i = 0; i < vectors.size(); ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = vectors[i][j];
    return exact_rank(m);
  } else {
    Mat<double> m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t i = 0; i < vectors.size(); ++i)
      for (std::size_t j = 0; j < n; ++j) m(j, i) = static_cast<double>(vectors[i][j]);
    return numerical_rank(m, tol, 0.0).rank;
  }
}

template <class C>
std::vector<C> point_as(const std::vector<double>& x) {
  std::vector<C> out;
  for (double v : x) {
    if constexpr (std::is_same_v<C, Rational>)
      out.push_back(exact_rational(v));
    else
      out.push_back(static_cast<C>(v));
  }
  return out;
}

// Affine control system x' = f0(x) + sum u_i f_i(x) with cost |u|^2/2, anchored at a base point.
template <class C>
class ControlModel {
 public:
  using Field = PolyVectorField<C>;

  ControlModel(std::string name, std::optional<Field> drift, std::vector<Field> fields, std::vector<double> base_point,
               const ModelCheckOptions& opts = {})
      : name_(std::move(name)), drift_(std::move(drift)), fields_(std::move(fields)), x0_(std::move(base_point)) {
    validate(opts);
  }

  const std::string& name() const { return name_; }
  std::size_t n() const { return x0_.size(); }
  std::size_t k() const { return fields_.size(); }
  bool drift_free() const { return !drift_ || drift_->is_zero(); }
  const std::optional<Field>& drift() const { return drift_; }
  const std::vector<Field>& fields() const { return fields_; }
  const Field& field(std::size_t i) const { return fields_.at(i); }
  const std::vector<double>& base_point() const { return x0_; }

  Field drift_or_zero() const { return drift_ ? *drift_ : Field::zero(n()); }

  template <class D>
  ControlModel<D> convert() const {
    std::optional<PolyVectorField<D>> d;
    if (drift_) d = drift_->template convert<D>();
    std::vector<PolyVectorField<D>> f;
    for (const auto& v : fields_) f.push_back(v.template convert<D>());
    return ControlModel<D>(name_, std::move(d), std::move(f), x0_, unchecked());
  }

  // Columns f_i(x0).
  template <class Real = double>
  Mat<Real> frame_at_base() const {
    Mat<Real> F(static_cast<Eigen::Index>(n()), static_cast<Eigen::Index>(k()));
    auto x = point_as<C>(x0_);
    for (std::size_t i = 0; i < k(); ++i) {
      auto v = fields_[i].evaluate(x);
      for (std::size_t j = 0; j < n(); ++j) {
        if constexpr (std::is_same_v<C, Rational>)
          F(j, i) = to_real<Real>(v[j]);
        else
          F(j, i) = static_cast<Real>(v[j]);
      }
    }
    return F;
  }

  static ModelCheckOptions unchecked() {
    ModelCheckOptions o;
    o.bracket_depth = 0;
    return o;
  }

 private:
  void validate(const ModelCheckOptions& opts) {
    const std::size_t dim = n();
    if (dim == 0) throw ModelError("model '" + name_ + "': empty base point");
    if (fields_.empty()) throw ModelError("model '" + name_ + "': needs at least one controlled field");
    if (drift_ && drift_->dim() != dim) throw ModelError("model '" + name_ + "': drift dimension mismatch");
    for (const auto& f : fields_)
      if (f.dim() != dim) throw ModelError("model '" + name_ + "': field dimension mismatch");
    if (fields_.size() > dim) throw ModelError("model '" + name_ + "': more fields than dimensions");
    if (opts.bracket_depth == 0) return;

    auto x = point_as<C>(x0_);
    std::vector<std::vector<C>> values;
    for (const auto& f : fields_) values.push_back(f.evaluate(x));
    if (rank_at(values, dim, opts.rank_tolerance) != fields_.size())
      throw ModelError("model '" + name_ + "': controlled fields are dependent at the base point");

    std::vector<Field> gens = fields_;
    if (!drift_free()) gens.push_back(*drift_);
    if (drift_free() == false) values.push_back(drift_->evaluate(x));
    std::vector<Field> level = gens;
    std::size_t rank = rank_at(values, dim, opts.rank_tolerance);
    for (unsigned depth = 2; depth <= opts.bracket_depth && rank < dim; ++depth) {
      std::vector<Field> next;
      for (const auto& g : gens)
        for (const auto& v : level) {
          auto b = lie_bracket(g, v);
          if (b.is_zero()) continue;
          bool dup = false;
          for (const auto& w : next)
            if (w == b || w == C(-1) * b) {
              dup = true;
              break;
            }
          if (dup) continue;
          values.push_back(b.evaluate(x));
          next.push_back(std::move(b));
          if (next.size() > 4096) break;
        }
      rank = rank_at(values, dim, opts.rank_tolerance);
      level = std::move(next);
      if (level.empty()) break;
    }
    if (rank < dim)
      throw ModelError("model '" + name_ + "': not bracket generating at the base point within depth " +
                       std::to_string(opts.bracket_depth));
  }

  std::string name_;
  std::optional<Field> drift_;
  std::vector<Field> fields_;
  std::vector<double> x0_;
};

// Adapted coordinates: first k columns of T are f_i(x0), the rest an orthonormal complement.
template <class Real = double>
struct FrameAdaptation {
  Mat<Real> T;
  Mat<Real> T_inv;
  Mat<Real> T_inv_transpose;
  std::size_t k = 0;

  // || Phi^T J Phi - J || for Phi = T (+) T^{-T} acting on (x, p).
  Real symplectic_defect() const {
    const auto n = T.rows();
    Mat<Real> phi = Mat<Real>::Zero(2 * n, 2 * n);
    phi.topLeftCorner(n, n) = T;
    phi.bottomRightCorner(n, n) = T_inv_transpose;
    Mat<Real> J = Mat<Real>::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = Mat<Real>::Identity(n, n);
    J.bottomLeftCorner(n, n) = -Mat<Real>::Identity(n, n);
    return (phi.transpose() * J * phi - J).cwiseAbs().maxCoeff();
  }
};

template <class Real = double, class C>
FrameAdaptation<Real> adapt_frame(const ControlModel<C>& model) {
  const auto n = static_cast<Eigen::Index>(model.n());
  const auto k = static_cast<Eigen::Index>(model.k());
  Mat<Real> F = model.template frame_at_base<Real>();
  Eigen::HouseholderQR<Mat<Real>> qr(F);
  Mat<Real> Q = qr.householderQ() * Mat<Real>::Identity(n, n);
  FrameAdaptation<Real> fa;
  fa.k = model.k();
  fa.T.resize(n, n);
  fa.T.leftCols(k) = F;
  fa.T.rightCols(n - k) = Q.rightCols(n - k);
  Eigen::FullPivLU<Mat<Real>> lu(fa.T);
  if (!lu.isInvertible()) throw ModelError("frame adaptation: matrix not invertible");
  fa.T_inv = lu.inverse();
  fa.T_inv_transpose = fa.T_inv.transpose();
  return fa;
}

using ParamMap = std::map<std::string, std::string>;

namespace detail {

inline std::vector<double> base_point_param(const ParamMap& params, std::size_t n) {
  auto it = params.find("base_point");
  if (it == params.end()) return std::vector<double>(n, 0.0);
  auto x = parse_real_list(it->second);
  if (x.size() != n) throw ModelError("base_point must have " + std::to_string(n) + " entries");
  return x;
}

inline void reject_unknown(const ParamMap& params, std::initializer_list<const char*> known, const std::string& name) {
  for (const auto& [key, value] : params) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) throw ModelError("model '" + name + "': unknown parameter '" + key + "'");
  }
}

}  // namespace detail

using RationalModel = ControlModel<Rational>;
using RationalField = PolyVectorField<Rational>;

inline RationalField field_from_strings(const std::vector<std::string>& exprs, std::size_t n) {
  try {
    return parse_polynomial_field(exprs, n);
  } catch (const ParseError& e) {
    throw ModelError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ModelError(e.what());
  }
}

// Linear drift Ax and constant fields given by the columns of B.
inline RationalModel lq_model(const DenseMatrix<Rational>& A, const DenseMatrix<Rational>& B, std::string name = "lq",
                              std::vector<double> base_point = {}, const ModelCheckOptions& opts = {}) {
  const std::size_t n = A.rows();
  if (A.cols() != n) throw ModelError("lq: A must be square");
  if (B.rows() != n || B.cols() == 0) throw ModelError("lq: B must have n rows and at least one column");
  std::vector<Polynomial<Rational>> drift(n, Polynomial<Rational>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (A(i, j) != 0) drift[i] += A(i, j) * Polynomial<Rational>::variable(n, j);
  std::vector<RationalField> fields;
  for (std::size_t c = 0; c < B.cols(); ++c) {
    std::vector<Polynomial<Rational>> comps;
    for (std::size_t i = 0; i < n; ++i) comps.push_back(Polynomial<Rational>::constant(n, B(i, c)));
    fields.emplace_back(std::move(comps));
  }
  if (base_point.empty()) base_point.assign(n, 0.0);
  return RationalModel(std::move(name), RationalField(std::move(drift)), std::move(fields), std::move(base_point), opts);
}

inline std::pair<DenseMatrix<Rational>, DenseMatrix<Rational>> lq_preset(const std::string& preset) {
  if (preset == "double_integrator") return {parse_matrix("0 1 | 0 0"), parse_matrix("0 | 1")};
  if (preset == "triple_integrator") return {parse_matrix("0 1 0 | 0 0 1 | 0 0 0"), parse_matrix("0 | 0 | 1")};
  throw ModelError("lq: unknown preset '" + preset + "'");
}

// Built-in models: heisenberg, euclidean, sphere2, lq, contact3d_perturbed.
inline RationalModel builtin_model(const std::string& name, const ParamMap& params = {},
                                   const ModelCheckOptions& opts = {}) {
  if (name == "heisenberg") {
    detail::reject_unknown(params, {"base_point"}, name);
    return RationalModel(name, std::nullopt,
                         {field_from_strings({"1", "0", "-1/2*x2"}, 3), field_from_strings({"0", "1", "1/2*x1"}, 3)},
                         detail::base_point_param(params, 3), opts);
  }
  if (name == "euclidean") {
    detail::reject_unknown(params, {"n", "base_point"}, name);
    std::size_t n = 2;
    if (auto it = params.find("n"); it != params.end()) {
      try {
        n = std::stoul(it->second);
      } catch (const std::exception&) {
        throw ModelError("euclidean: invalid n '" + it->second + "'");
      }
      if (n == 0 || n > 16) throw ModelError("euclidean: n must be in 1..16");
    }
    std::vector<RationalField> fields;
    for (std::size_t i = 0; i < n; ++i) fields.push_back(RationalField::coordinate(n, i));
    return RationalModel(name, std::nullopt, std::move(fields), detail::base_point_param(params, n), opts);
  }
  if (name == "sphere2") {
    detail::reject_unknown(params, {"base_point"}, name);
    const std::string conf = "1 + 1/4*x1^2 + 1/4*x2^2";
    return RationalModel(name, std::nullopt, {field_from_strings({conf, "0"}, 2), field_from_strings({"0", conf}, 2)},
                         detail::base_point_param(params, 2), opts);
  }
  if (name == "lq") {
    detail::reject_unknown(params, {"A", "B", "preset", "base_point"}, name);
    DenseMatrix<Rational> A, B;
    try {
      if (auto it = params.find("preset"); it != params.end()) {
        std::tie(A, B) = lq_preset(it->second);
      } else {
        auto a = params.find("A"), b = params.find("B");
        if (a == params.end() || b == params.end()) throw ModelError("lq: needs A and B (or a preset)");
        A = parse_matrix(a->second);
        B = parse_matrix(b->second);
      }
    } catch (const std::invalid_argument& e) {
      throw ModelError(std::string("lq: ") + e.what());
    }
    return lq_model(A, B, name, detail::base_point_param(params, A.rows()), opts);
  }
  if (name == "contact3d_perturbed") {
    detail::reject_unknown(params, {"eps", "P", "base_point"}, name);
    Rational eps(1, 10);
    std::string P = "x1^2";
    try {
      if (auto it = params.find("eps"); it != params.end()) eps = parse_rational(it->second);
    } catch (const std::exception&) {
      throw ModelError("contact3d_perturbed: invalid eps");
    }
    if (auto it = params.find("P"); it != params.end()) P = it->second;
    Polynomial<Rational> pert(3);
    try {
      pert = parse_polynomial(P, 3);
    } catch (const ParseError& e) {
      throw ModelError(std::string("contact3d_perturbed: ") + e.what());
    }
    auto X2 = field_from_strings({"0", "1", "1/2*x1"}, 3);
    X2[2] += eps * pert;
    return RationalModel(name, std::nullopt, {field_from_strings({"1", "0", "-1/2*x2"}, 3), X2},
                         detail::base_point_param(params, 3), opts);
  }
  throw ModelError("unknown built-in model '" + name + "'");
}

// "name", "name:key=value;key=value" or "lq:double_integrator" (a bare token is a preset).
inline std::pair<std::string, ParamMap> parse_builtin_spec(const std::string& spec) {
  auto colon = spec.find(':');
  std::string name = trim(spec.substr(0, colon));
  ParamMap params;
  if (colon != std::string::npos) {
    for (const auto& tok : split(std::string_view(spec).substr(colon + 1), ';')) {
      if (tok.empty()) continue;
      auto eq = tok.find('=');
      if (eq == std::string::npos)
        params["preset"] = tok;
      else
        params[trim(tok.substr(0, eq))] = trim(tok.substr(eq + 1));
    }
  }
  return {name, params};
}

inline bool is_builtin_name(const std::string& name) {
  return name == "heisenberg" || name == "euclidean" || name == "sphere2" || name == "lq" ||
         name == "contact3d_perturbed";
}

// Model configuration text. Either "builtin = <name>" plus its parameters, an lq system via A and B, or
// explicit fields: name, n, k, drift, field_1..field_k, base_point (components comma separated).
inline RationalModel model_from_config(const Config& cfg, const ModelCheckOptions& opts = {}) {
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = cfg.find(key);
    if (it == cfg.end()) return std::nullopt;
    return it->second;
  };
  if (auto b = get("builtin")) {
    ParamMap params;
    for (const auto& [key, value] : cfg)
      if (key != "builtin" && key != "name") params[key] = value;
    return builtin_model(*b, params, opts);
  }
  std::string name = get("name").value_or("model");
  if (get("A") || get("B")) {
    if (!get("A") || !get("B")) throw ModelError("lq configuration needs both A and B");
    DenseMatrix<Rational> A, B;
    try {
      A = parse_matrix(*get("A"));
      B = parse_matrix(*get("B"));
    } catch (const std::invalid_argument& e) {
      throw ModelError(std::string("lq configuration: ") + e.what());
    }
    std::vector<double> x0;
    if (auto bp = get("base_point")) x0 = parse_real_list(*bp);
    return lq_model(A, B, name, x0, opts);
  }
  auto n_text = get("n");
  auto k_text = get("k");
  if (!n_text || !k_text) throw ModelError("model configuration needs n and k");
  std::size_t n = 0, k = 0;
  try {
    n = std::stoul(*n_text);
    k = std::stoul(*k_text);
  } catch (const std::exception&) {
    throw ModelError("model configuration: n and k must be integers");
  }
  std::optional<RationalField> drift;
  if (auto d = get("drift")) drift = field_from_strings(split(*d, ','), n);
  std::vector<RationalField> fields;
  for (std::size_t i = 1; i <= k; ++i) {
    auto f = get("field_" + std::to_string(i));
    if (!f) throw ModelError("model configuration: missing field_" + std::to_string(i));
    fields.push_back(field_from_strings(split(*f, ','), n));
  }
  std::vector<double> x0(n, 0.0);
  if (auto bp = get("base_point")) {
    x0 = parse_real_list(*bp);
    if (x0.size() != n) throw ModelError("model configuration: base_point must have n entries");
  }
  return RationalModel(name, std::move(drift), std::move(fields), std::move(x0), opts);
}

inline std::string model_to_config(const RationalModel& m) {
  std::ostringstream os;
  os << "name = " << m.name() << "\n";
  os << "n = " << m.n() << "\n";
  os << "k = " << m.k() << "\n";
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
  };
  if (m.drift()) os << "drift = " << join(to_strings(*m.drift())) << "\n";
  for (std::size_t i = 0; i < m.k(); ++i) os << "field_" << i + 1 << " = " << join(to_strings(m.field(i))) << "\n";
  os << "base_point = ";
  for (std::size_t i = 0; i < m.n(); ++i) {
    std::ostringstream v;
    v << std::setprecision(17) << m.base_point()[i];
    os << (i ? ", " : "") << v.str();
  }
  os << "\n";
  return os.str();
}

// A file path or a built-in spec.
inline RationalModel load_model(const std::string& spec, const ModelCheckOptions& opts = {}) {
  auto [name, params] = parse_builtin_spec(spec);
  if (is_builtin_name(name)) return builtin_model(name, params, opts);
  std::ifstream in(spec);
  if (!in) throw ModelError("no built-in model or readable file named '" + spec + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Config cfg;
  try {
    cfg = parse_config(buf.str());
  } catch (const std::invalid_argument& e) {
    throw ModelError(e.what());
  }
  return model_from_config(cfg, opts);
}

}  // namespace srcurv
