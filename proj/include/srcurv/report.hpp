#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "srcurv/jacobi.hpp"
#include "srcurv/model.hpp"

namespace srcurv {

inline constexpr const char* tool_version = "0.1.0";

struct AnalysisSettings {
  double window = 0.5;
  int grid = 12;
  JacobiOptions jacobi;
  ModelCheckOptions model;
};

struct AnalysisReport {
  std::string tool_version = srcurv::tool_version;
  std::string model;
  std::vector<double> base_point;
  std::vector<double> covector;
  std::vector<std::size_t> growth_vector;
  std::vector<std::size_t> young_diagram;
  std::size_t geodesic_dimension = 0;
  std::vector<std::vector<double>> I;
  std::vector<double> I_eigenvalues;  // descending
  std::vector<std::vector<double>> R;
  double ric = 0;
  double fit_residual = 0;
  double fit_uncertainty = 0;
  double window_used = 0;
  bool reliable = true;
  std::string diagnostic;
  AnalysisSettings settings;
  std::optional<std::uint64_t> seed;

  friend bool operator==(const AnalysisReport&, const AnalysisReport&) = default;
};

inline bool operator==(const JacobiOptions& a, const JacobiOptions& b) {
  return a.flow_tol == b.flow_tol && a.cond_max == b.cond_max && a.symmetry_tol == b.symmetry_tol &&
         a.fit_degree == b.fit_degree && a.residual_tol == b.residual_tol && a.eigen_tol == b.eigen_tol &&
         a.max_halvings == b.max_halvings && a.precision == b.precision && a.quad_row == b.quad_row;
}
inline bool operator==(const ModelCheckOptions& a, const ModelCheckOptions& b) {
  return a.bracket_depth == b.bracket_depth && a.rank_tolerance == b.rank_tolerance;
}
inline bool operator==(const AnalysisSettings& a, const AnalysisSettings& b) {
  return a.window == b.window && a.grid == b.grid && a.jacobi == b.jacobi && a.model == b.model;
}

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::vector<double>> rows_of(const Mat<double>& m) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)].push_back(m(i, j));
  return out;
}

inline const char* precision_name(JacobiPrecision p) {
  switch (p) {
    case JacobiPrecision::automatic:
      return "automatic";
    case JacobiPrecision::extended:
      return "extended";
    case JacobiPrecision::quad:
      return "quad";
  }
  return "automatic";
}

inline JacobiPrecision precision_from(const std::string& s) {
  if (s == "automatic") return JacobiPrecision::automatic;
  if (s == "extended") return JacobiPrecision::extended;
  if (s == "quad") return JacobiPrecision::quad;
  throw ReportError("unknown precision '" + s + "'");
}

}  // namespace detail

// growth vector -> diagram -> curvature
inline AnalysisReport analyze(const RationalModel& model, const std::vector<double>& covector,
                              const AnalysisSettings& settings = {}) {
  auto rep = curvature_report(model, at_base(model, covector), settings.window, settings.grid, settings.jacobi);
  AnalysisReport a;
  a.model = model.name();
  a.base_point = model.base_point();
  a.covector = covector;
  a.growth_vector = rep.growth.k;
  a.young_diagram = rep.summary.diagram.rows;
  a.geodesic_dimension = rep.summary.geodesic_dimension;
  a.I = detail::rows_of(rep.I);
  a.I_eigenvalues = rep.I_eigenvalues;
  a.R = detail::rows_of(rep.R);
  a.ric = rep.ric;
  a.fit_residual = rep.residual;
  a.fit_uncertainty = rep.uncertainty;
  a.window_used = rep.window;
  a.reliable = rep.reliable;
  a.diagnostic = rep.diagnostic;
  a.settings = settings;
  return a;
}

inline nlohmann::ordered_json to_json(const AnalysisReport& r) {
  nlohmann::ordered_json s;
  s["window"] = r.settings.window;
  s["grid"] = r.settings.grid;
  s["fit_degree"] = r.settings.jacobi.fit_degree;
  s["flow_tol"] = r.settings.jacobi.flow_tol;
  s["cond_max"] = r.settings.jacobi.cond_max;
  s["symmetry_tol"] = r.settings.jacobi.symmetry_tol;
  s["residual_tol"] = r.settings.jacobi.residual_tol;
  s["eigen_tol"] = r.settings.jacobi.eigen_tol;
  s["max_halvings"] = r.settings.jacobi.max_halvings;
  s["precision"] = detail::precision_name(r.settings.jacobi.precision);
  s["quad_row"] = r.settings.jacobi.quad_row;
  s["bracket_depth"] = r.settings.model.bracket_depth;
  s["rank_tolerance"] = r.settings.model.rank_tolerance;

  nlohmann::ordered_json j;
  j["tool_version"] = r.tool_version;
  j["model"] = r.model;
  j["base_point"] = r.base_point;
  j["covector"] = r.covector;
  j["growth_vector"] = r.growth_vector;
  j["young_diagram"] = r.young_diagram;
  j["geodesic_dimension"] = r.geodesic_dimension;
  j["I"] = r.I;
  j["I_eigenvalues"] = r.I_eigenvalues;
  j["R"] = r.R;
  j["ric"] = r.ric;
  j["fit_residual"] = r.fit_residual;
  j["fit_uncertainty"] = r.fit_uncertainty;
  j["window_used"] = r.window_used;
  j["reliable"] = r.reliable;
  j["diagnostic"] = r.diagnostic;
  j["settings"] = s;
  j["seed"] = r.seed ? nlohmann::ordered_json(*r.seed) : nlohmann::ordered_json(nullptr);
  return j;
}

inline AnalysisReport from_json(const nlohmann::ordered_json& j) {
  try {
    AnalysisReport r;
    j.at("tool_version").get_to(r.tool_version);
    j.at("model").get_to(r.model);
    j.at("base_point").get_to(r.base_point);
    j.at("covector").get_to(r.covector);
    j.at("growth_vector").get_to(r.growth_vector);
    j.at("young_diagram").get_to(r.young_diagram);
    j.at("geodesic_dimension").get_to(r.geodesic_dimension);
    j.at("I").get_to(r.I);
    j.at("I_eigenvalues").get_to(r.I_eigenvalues);
    j.at("R").get_to(r.R);
    j.at("ric").get_to(r.ric);
    j.at("fit_residual").get_to(r.fit_residual);
    j.at("fit_uncertainty").get_to(r.fit_uncertainty);
    j.at("window_used").get_to(r.window_used);
    j.at("reliable").get_to(r.reliable);
    j.at("diagnostic").get_to(r.diagnostic);
    const auto& s = j.at("settings");
    s.at("window").get_to(r.settings.window);
    s.at("grid").get_to(r.settings.grid);
    s.at("fit_degree").get_to(r.settings.jacobi.fit_degree);
    s.at("flow_tol").get_to(r.settings.jacobi.flow_tol);
    s.at("cond_max").get_to(r.settings.jacobi.cond_max);
    s.at("symmetry_tol").get_to(r.settings.jacobi.symmetry_tol);
    s.at("residual_tol").get_to(r.settings.jacobi.residual_tol);
    s.at("eigen_tol").get_to(r.settings.jacobi.eigen_tol);
    s.at("max_halvings").get_to(r.settings.jacobi.max_halvings);
    r.settings.jacobi.precision = detail::precision_from(s.at("precision").get<std::string>());
    s.at("quad_row").get_to(r.settings.jacobi.quad_row);
    s.at("bracket_depth").get_to(r.settings.model.bracket_depth);
    s.at("rank_tolerance").get_to(r.settings.model.rank_tolerance);
    if (!j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(std::string("malformed report: ") + e.what());
  }
}

inline std::string serialize(const AnalysisReport& r) { return to_json(r).dump(2) + "\n"; }

inline AnalysisReport parse_report(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(std::string("report is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

}  // namespace srcurv
