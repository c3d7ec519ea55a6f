#pragma once

#include <cmath>
#include <exception>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "srcurv/config.hpp"
#include "srcurv/report.hpp"

namespace srcurv {

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

// "v", "v1,v2,..." or "start:stop:count" (inclusive, count >= 0)
inline std::vector<double> parse_axis(const std::string& text) {
  auto t = trim(text);
  if (t.empty()) throw GridError("covector grid: empty axis");
  if (t.find(':') != std::string::npos) {
    auto parts = split(t, ':');
    if (parts.size() != 3) throw GridError("covector grid: range axis must be start:stop:count, got '" + t + "'");
    double a, b;
    long count;
    try {
      std::size_t used = 0;
      a = std::stod(parts[0], &used);
      if (used != parts[0].size()) throw std::invalid_argument("");
      b = std::stod(parts[1], &used);
      if (used != parts[1].size()) throw std::invalid_argument("");
      count = std::stol(parts[2], &used);
      if (used != parts[2].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw GridError("covector grid: bad range '" + t + "'");
    }
    if (count < 0) throw GridError("covector grid: negative count in '" + t + "'");
    std::vector<double> v;
    for (long i = 0; i < count; ++i) v.push_back(count == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    return v;
  }
  try {
    return parse_real_list(t);
  } catch (const std::exception& e) {
    throw GridError(std::string("covector grid: ") + e.what());
  }
}

}  // namespace detail

// Axes separated by ';', one per covector component, expanded as a product with the last axis fastest.
// A leading "angle=<axis>" stands for the two components (-sin phi, cos phi).
inline std::vector<std::vector<double>> parse_covector_grid(const std::string& spec, std::size_t n) {
  if (trim(spec).empty()) return {};
  auto tokens = split(spec, ';');
  struct Axis {
    std::vector<double> values;
    bool angle = false;
  };
  std::vector<Axis> axes;
  std::size_t components = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& tok = tokens[i];
    if (tok.rfind("angle=", 0) == 0) {
      if (i != 0) throw GridError("covector grid: angle= must be the first axis");
      axes.push_back({detail::parse_axis(tok.substr(6)), true});
      components += 2;
    } else {
      axes.push_back({detail::parse_axis(tok), false});
      components += 1;
    }
  }
  if (components != n)
    throw GridError("covector grid describes " + std::to_string(components) + " components, model dimension is " +
                    std::to_string(n));
  std::vector<std::vector<double>> out{{}};
  for (const auto& ax : axes) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : out)
      for (double v : ax.values) {
        auto row = prefix;
        if (ax.angle) {
          row.push_back(-std::sin(v));
          row.push_back(std::cos(v));
        } else {
          row.push_back(v);
        }
        next.push_back(std::move(row));
      }
    out = std::move(next);
  }
  return out;
}

struct SweepResult {
  std::vector<std::vector<double>> covectors;
  std::vector<AnalysisReport> reports;
  bool all_reliable = true;
};

// Reports in input order; workers only split the index range.
inline SweepResult run_sweep(const RationalModel& model, const std::vector<std::vector<double>>& covectors,
                             const AnalysisSettings& settings, unsigned workers = 1) {
  SweepResult res;
  res.covectors = covectors;
  res.reports.resize(covectors.size());
  auto work = [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) res.reports[i] = analyze(model, covectors[i], settings);
  };
  const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(workers, covectors.size()));
  if (w == 1) {
    work(0, covectors.size());
  } else {
    std::vector<std::exception_ptr> errors(w);
    {
      std::vector<std::jthread> pool;
      for (std::size_t i = 0; i < w; ++i)
        pool.emplace_back([&, i] {
          try {
            work(covectors.size() * i / w, covectors.size() * (i + 1) / w);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (const auto& r : res.reports) res.all_reliable = res.all_reliable && r.reliable;
  return res;
}

inline std::string sweep_csv(const SweepResult& res, std::size_t n, std::size_t k) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < n; ++i) os << "p" << i + 1 << ",";
  os << "growth_vector,geodesic_dimension,";
  for (std::size_t i = 0; i < k; ++i) os << "I_eig" << i + 1 << ",";
  os << "ric,residual,reliable\n";
  for (std::size_t r = 0; r < res.reports.size(); ++r) {
    const auto& rep = res.reports[r];
    for (double v : res.covectors[r]) os << v << ",";
    for (std::size_t i = 0; i < rep.growth_vector.size(); ++i) os << (i ? " " : "") << rep.growth_vector[i];
    os << "," << rep.geodesic_dimension << ",";
    for (std::size_t i = 0; i < k; ++i) os << (i < rep.I_eigenvalues.size() ? rep.I_eigenvalues[i] : NAN) << ",";
    os << rep.ric << "," << rep.fit_residual << "," << (rep.reliable ? "true" : "false") << "\n";
  }
  return os.str();
}

}  // namespace srcurv
