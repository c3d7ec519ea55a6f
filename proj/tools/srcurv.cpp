#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "srcurv/checks.hpp"
#include "srcurv/report.hpp"
#include "srcurv/sweep.hpp"

namespace {

using namespace srcurv;

enum Exit : int { ok = 0, failure = 1, unreliable = 2, usage = 64, bad_model = 65 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_settings(CLI::App* cmd, AnalysisSettings& s, std::string& precision) {
  cmd->add_option("--window", s.window, "sampling window, divided by the covector scale")->capture_default_str();
  cmd->add_option("--grid", s.grid, "number of sample times in the window")->capture_default_str();
  cmd->add_option("--fit-degree", s.jacobi.fit_degree, "highest power in the Laurent fit")->capture_default_str();
  cmd->add_option("--flow-tol", s.jacobi.flow_tol, "integrator tolerance")->capture_default_str();
  cmd->add_option("--cond-max", s.jacobi.cond_max, "condition bound of the vertical block")->capture_default_str();
  cmd->add_option("--symmetry-tol", s.jacobi.symmetry_tol, "symmetry tolerance of S(t)")->capture_default_str();
  cmd->add_option("--residual-tol", s.jacobi.residual_tol, "fit residual above which a report is unreliable")
      ->capture_default_str();
  cmd->add_option("--eigen-tol", s.jacobi.eigen_tol, "relative tolerance for the I spectrum check")
      ->capture_default_str();
  cmd->add_option("--precision", precision, "automatic, extended or quad")
      ->check(CLI::IsMember({"automatic", "extended", "quad"}))
      ->capture_default_str();
  cmd->add_option("--bracket-depth", s.model.bracket_depth, "bracket depth for the generating check")
      ->capture_default_str();
}

RationalModel load(const std::string& spec, const AnalysisSettings& s) { return load_model(spec, s.model); }

std::vector<double> parse_covector(const std::string& text, std::size_t n) {
  std::vector<double> p;
  try {
    p = parse_real_list(text);
  } catch (const std::exception& e) {
    throw UsageError(std::string("--covector: ") + e.what());
  }
  if (p.size() != n)
    throw UsageError("--covector has " + std::to_string(p.size()) + " components, model dimension is " +
                     std::to_string(n));
  return p;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curvature invariants of affine control and sub-Riemannian structures"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(srcurv::tool_version));

  AnalysisSettings settings;
  std::string precision = "automatic";
  std::string model_spec, covector_text, out_path, grid_spec, suite = "all";
  std::uint64_t seed = 7;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  auto* analyze_cmd = app.add_subcommand("analyze", "curvature report for one covector at the base point");
  analyze_cmd->add_option("--model", model_spec, "built-in spec (name[:key=value;...]) or model file")->required();
  analyze_cmd->add_option("--covector", covector_text, "comma separated components")->required();
  analyze_cmd->add_option("--out", out_path, "write the JSON report here instead of standard output");
  add_settings(analyze_cmd, settings, precision);

  auto* check_cmd = app.add_subcommand("check", "run the oracle self-check suites");
  check_cmd->add_option("--suite", suite, "all, heisenberg, lq, contact, tables or volume")
      ->check(CLI::IsMember({"all", "heisenberg", "lq", "contact", "tables", "volume"}))
      ->capture_default_str();
  check_cmd->add_option("--seed", seed, "Monte Carlo seed")->capture_default_str();

  auto* sweep_cmd = app.add_subcommand("sweep", "CSV of curvature data over a covector grid");
  sweep_cmd->add_option("--model", model_spec, "built-in spec or model file")->required();
  sweep_cmd->add_option("--covector-grid", grid_spec, "axes separated by ';' (see README)")->required();
  sweep_cmd->add_option("--out", out_path, "CSV path (standard output if omitted)");
  sweep_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  add_settings(sweep_cmd, settings, precision);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return usage;
  }
  settings.jacobi.precision = precision == "quad"       ? JacobiPrecision::quad
                              : precision == "extended" ? JacobiPrecision::extended
                                                        : JacobiPrecision::automatic;

  try {
    if (*analyze_cmd) {
      auto model = load(model_spec, settings);
      auto p = parse_covector(covector_text, model.n());
      auto rep = analyze(model, p, settings);
      write_output(out_path, serialize(rep));
      if (!rep.reliable) {
        std::cerr << "warning: unreliable fit: " << rep.diagnostic << "\n";
        return unreliable;
      }
      return ok;
    }
    if (*sweep_cmd) {
      auto model = load(model_spec, settings);
      std::vector<std::vector<double>> grid;
      try {
        grid = parse_covector_grid(grid_spec, model.n());
      } catch (const GridError& e) {
        throw UsageError(e.what());
      }
      auto res = run_sweep(model, grid, settings, jobs);
      write_output(out_path, sweep_csv(res, model.n(), model.k()));
      if (!res.all_reliable) {
        std::cerr << "warning: some rows have an unreliable fit\n";
        return unreliable;
      }
      return ok;
    }
    if (*check_cmd) {
      auto results = run_checks(suite, seed);
      std::size_t failed = 0;
      for (const auto& r : results) {
        if (!r.passed) ++failed;
        std::cout << (r.passed ? "PASS" : "FAIL") << "  [" << r.suite << "] " << r.name << "  expected=" << r.expected
                  << "  actual=" << r.actual << "  tolerance=" << r.tolerance << "\n";
      }
      std::cout << results.size() - failed << "/" << results.size() << " checks passed\n";
      return failed == 0 ? ok : failure;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const ModelError& e) {
    std::cerr << "model rejected: " << e.what() << "\n";
    return bad_model;
  } catch (const ParseError& e) {
    std::cerr << "model rejected: " << e.what() << "\n";
    return bad_model;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return failure;
  }
  return failure;
}
