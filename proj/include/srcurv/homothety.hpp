#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "srcurv/config.hpp"
#include "srcurv/hamflow.hpp"
#include "srcurv/heisenberg.hpp"
#include "srcurv/model.hpp"

namespace srcurv {

class HomothetyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DistanceOracle { heisenberg, sphere2, euclidean };

struct HomothetyJob {
  explicit HomothetyJob(RationalModel m) : model(std::move(m)) {}

  RationalModel model;
  DistanceOracle oracle = DistanceOracle::euclidean;
  std::vector<double> center;
  std::vector<double> box_min, box_max;
  std::vector<double> t_grid{0.025, 0.05, 0.1, 0.2};
  int samples = 2000;
  std::uint64_t seed = 1;
  double tube_fraction = 0.1;  // heisenberg: excluded radius around the vertical line through the center
  double gradient_step = 1e-5;
  double jacobian_step = 1e-5;
  int workers = 1;
  FlowOptions flow{1e-12, 20};

  double tube_radius() const {
    double d2 = 0;
    for (std::size_t i = 0; i < box_min.size(); ++i) d2 += (box_max[i] - box_min[i]) * (box_max[i] - box_min[i]);
    return tube_fraction * std::sqrt(d2);
  }
};

namespace detail {

inline DistanceOracle oracle_for(const RationalModel& m) {
  if (m.name() == "heisenberg") return DistanceOracle::heisenberg;
  if (m.name() == "sphere2") return DistanceOracle::sphere2;
  if (m.name() == "euclidean") return DistanceOracle::euclidean;
  throw HomothetyError("no distance oracle for model '" + m.name() + "'");
}

// stereographic chart of the unit sphere used by sphere2
inline std::array<double, 3> sphere_embed(const std::vector<double>& x) {
  const double u = x[0] / 2, v = x[1] / 2, r2 = u * u + v * v;
  return {2 * u / (1 + r2), 2 * v / (1 + r2), (1 - r2) / (1 + r2)};
}

inline double sphere_distance(const std::vector<double>& a, const std::vector<double>& b) {
  auto p = sphere_embed(a), q = sphere_embed(b);
  // atan2 form keeps accuracy near 0 and pi
  const double cx = p[1] * q[2] - p[2] * q[1], cy = p[2] * q[0] - p[0] * q[2], cz = p[0] * q[1] - p[1] * q[0];
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), p[0] * q[0] + p[1] * q[1] + p[2] * q[2]);
}

inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

}  // namespace detail

inline bool in_excluded_set(const HomothetyJob& job, const std::vector<double>& x) {
  switch (job.oracle) {
    case DistanceOracle::heisenberg:
      return std::hypot(x[0] - job.center[0], x[1] - job.center[1]) < job.tube_radius();
    case DistanceOracle::sphere2: {
      // antipode of the center is the only cut point
      return detail::sphere_distance(job.center, x) > std::numbers::pi - 1e-3;
    }
    case DistanceOracle::euclidean:
      return false;
  }
  return false;
}

inline double oracle_distance(const HomothetyJob& job, const std::vector<double>& a, const std::vector<double>& b) {
  switch (job.oracle) {
    case DistanceOracle::heisenberg:
      return heis_distance(heis_point(a), heis_point(b));
    case DistanceOracle::sphere2:
      return detail::sphere_distance(a, b);
    case DistanceOracle::euclidean: {
      double s = 0;
      for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
      return std::sqrt(s);
    }
  }
  return 0;
}

// Differential at x of f = d^2(center, .) / 2.
inline std::vector<double> distance_gradient(const HomothetyJob& job, const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> g(n);
  switch (job.oracle) {
    case DistanceOracle::euclidean:
      for (std::size_t i = 0; i < n; ++i) g[i] = x[i] - job.center[i];
      return g;
    case DistanceOracle::heisenberg: {
      // minus the initial covector of the unit-time geodesic from x to the center
      const HeisPoint q = inverse(heis_point(x)) * heis_point(job.center);
      const double r2 = std::norm(q.w);
      if (r2 == 0) throw HomothetyError("distance_gradient: point on the vertical line through the center");
      const double hz = 2 * theta_solve(q.z / r2);
      const double s = detail::sinc(hz / 2);
      const std::complex<double> hw = q.w / std::complex<double>(detail::sinc(hz), 0.5 * hz * s * s);
      g[0] = -(hw.real() + 0.5 * x[1] * hz);
      g[1] = -(hw.imag() - 0.5 * x[0] * hz);
      g[2] = -hz;
      return g;
    }
    case DistanceOracle::sphere2: {
      const double h = job.gradient_step;
      for (std::size_t i = 0; i < n; ++i) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double dp = detail::sphere_distance(job.center, xp), dm = detail::sphere_distance(job.center, xm);
        g[i] = (dp * dp - dm * dm) / (4 * h);
      }
      return g;
    }
  }
  return g;
}

// pi o e^{(t-1)H}(d_x f); with no drift this is the forward flow from (x, -d_x f) for time 1 - t
inline std::vector<double> homothety_map(const HomothetyJob& job, const std::vector<double>& x, double t) {
  if (x.size() != job.model.n()) throw std::invalid_argument("homothety_map: point dimension mismatch");
  if (!(t > 0 && t <= 1)) throw std::invalid_argument("homothety_map: t must lie in (0, 1]");
  if (in_excluded_set(job, x)) throw HomothetyError("homothety_map: point in the excluded set");
  if (t == 1) return x;
  auto p = distance_gradient(job, x);
  for (auto& v : p) v = -v;
  if (job.oracle == DistanceOracle::euclidean) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + (1 - t) * p[i];
    return y;
  }
  return exponential_map(job.model, x, p, 1 - t, job.flow);
}

inline double homothety_jacobian_det(const HomothetyJob& job, const std::vector<double>& x, double t) {
  const std::size_t n = x.size();
  Mat<double> J(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const double h = job.jacobian_step;
  for (std::size_t j = 0; j < n; ++j) {
    auto xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    auto fp = homothety_map(job, xp, t), fm = homothety_map(job, xm, t);
    for (std::size_t i = 0; i < n; ++i)
      J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (fp[i] - fm[i]) / (2 * h);
  }
  const double det = J.determinant();
  if (!std::isfinite(det)) throw HomothetyError("homothety_jacobian_det: non-finite Jacobian");
  return det;
}

struct VolumeExponent {
  double slope = 0;
  double stderr_ = 0;
  double intercept = 0;
  std::vector<double> t_grid;
  std::vector<double> volumes;  // Monte Carlo estimate of mu(Omega_t)
  double box_volume = 0;
  double acceptance = 0;  // fraction of box draws outside the excluded set
};

inline void validate(const HomothetyJob& job) {
  const std::size_t n = job.model.n();
  if (job.center.size() != n || job.box_min.size() != n || job.box_max.size() != n)
    throw std::invalid_argument("homothety job: center and box must have the model dimension");
  for (std::size_t i = 0; i < n; ++i)
    if (!(job.box_min[i] < job.box_max[i])) throw std::invalid_argument("homothety job: empty box");
  if (job.t_grid.size() < 2) throw std::invalid_argument("homothety job: t grid needs at least two points");
  for (double t : job.t_grid)
    if (!(t > 0 && t <= 1)) throw std::invalid_argument("homothety job: t grid must lie in (0, 1]");
  if (job.samples < 1) throw std::invalid_argument("homothety job: samples must be positive");
  if (job.workers < 1) throw std::invalid_argument("homothety job: workers must be positive");
}

inline VolumeExponent volume_exponent(const HomothetyJob& job) {
  validate(job);
  const std::size_t n = job.model.n();
  std::mt19937_64 rng(job.seed);
  std::vector<std::uniform_real_distribution<double>> axes;
  double box_volume = 1;
  for (std::size_t i = 0; i < n; ++i) {
    axes.emplace_back(job.box_min[i], job.box_max[i]);
    box_volume *= job.box_max[i] - job.box_min[i];
  }
  std::vector<std::vector<double>> pts;
  std::size_t draws = 0;
  while (pts.size() < static_cast<std::size_t>(job.samples)) {
    if (++draws > 1000 * static_cast<std::size_t>(job.samples))
      throw HomothetyError("volume_exponent: box lies almost entirely in the excluded set");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = axes[i](rng);
    if (!in_excluded_set(job, x)) pts.push_back(std::move(x));
  }
  const double acceptance = static_cast<double>(pts.size()) / static_cast<double>(draws);

  const std::size_t nt = job.t_grid.size(), ns = pts.size();
  std::vector<double> dets(nt * ns);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s)
      for (std::size_t k = 0; k < nt; ++k) dets[k * ns + s] = std::abs(homothety_jacobian_det(job, pts[s], job.t_grid[k]));
  };
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(job.workers), ns);
  if (w <= 1) {
    work(0, ns);
  } else {
    std::vector<std::exception_ptr> errors(w);
    {
      std::vector<std::jthread> pool;
      for (std::size_t i = 0; i < w; ++i)
        pool.emplace_back([&, i] {
          try {
            work(ns * i / w, ns * (i + 1) / w);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  VolumeExponent out;
  out.t_grid = job.t_grid;
  out.box_volume = box_volume;
  out.acceptance = acceptance;
  const double region = box_volume * acceptance;
  for (std::size_t k = 0; k < nt; ++k)
    out.volumes.push_back(region * detail::pairwise_sum(std::span<const double>(dets).subspan(k * ns, ns)) /
                          static_cast<double>(ns));

  // ordinary least squares of log mu against log t
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < nt; ++k) {
    mx += std::log(out.t_grid[k]);
    my += std::log(out.volumes[k]);
  }
  mx /= static_cast<double>(nt);
  my /= static_cast<double>(nt);
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < nt; ++k) {
    const double dx = std::log(out.t_grid[k]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(out.volumes[k]) - my);
  }
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double sse = 0;
  for (std::size_t k = 0; k < nt; ++k) {
    const double e = std::log(out.volumes[k]) - out.intercept - out.slope * std::log(out.t_grid[k]);
    sse += e * e;
  }
  out.stderr_ = nt > 2 ? std::sqrt(sse / static_cast<double>(nt - 2) / sxx) : 0.0;
  return out;
}

// Defaults used by the self-checks: center at the origin, a box away from the singular set.
inline HomothetyJob default_homothety_job(const std::string& model_name, std::uint64_t seed = 1) {
  auto model = load_model(model_name);
  HomothetyJob job(model);
  job.oracle = detail::oracle_for(model);
  job.seed = seed;
  const std::size_t n = model.n();
  job.center.assign(n, 0.0);
  switch (job.oracle) {
    case DistanceOracle::heisenberg:
      job.box_min = {-1, -1, -1};
      job.box_max = {1, 1, 1};
      job.t_grid = {0.0125, 0.025, 0.05, 0.1};
      job.samples = 600;
      break;
    case DistanceOracle::sphere2:
      job.box_min = {0.2, -0.4};
      job.box_max = {0.8, 0.4};
      job.t_grid = {0.0125, 0.025, 0.05, 0.1};
      job.samples = 400;
      break;
    case DistanceOracle::euclidean:
      job.box_min.assign(n, -1.0);
      job.box_max.assign(n, 1.0);
      job.t_grid = {0.1, 0.2, 0.4, 0.8};
      job.samples = 200;
      break;
  }
  return job;
}

// Job configuration: model (built-in spec or file), center, box_min, box_max, t_grid, samples, seed,
// optional tube_fraction and workers. Unset geometry falls back to default_homothety_job.
inline HomothetyJob homothety_job_from_config(const Config& cfg) {
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = cfg.find(key);
    if (it == cfg.end()) return std::nullopt;
    return it->second;
  };
  auto model = get("model");
  if (!model) throw std::invalid_argument("homothety job: missing 'model'");
  std::uint64_t seed = 1;
  try {
    if (auto s = get("seed")) seed = std::stoull(*s);
  } catch (const std::exception&) {
    throw std::invalid_argument("homothety job: invalid seed");
  }
  auto job = default_homothety_job(*model, seed);
  if (auto v = get("center")) job.center = parse_real_list(*v);
  if (auto v = get("box_min")) job.box_min = parse_real_list(*v);
  if (auto v = get("box_max")) job.box_max = parse_real_list(*v);
  if (auto v = get("t_grid")) job.t_grid = parse_real_list(*v);
  try {
    if (auto v = get("samples")) job.samples = std::stoi(*v);
    if (auto v = get("workers")) job.workers = std::stoi(*v);
    if (auto v = get("tube_fraction")) job.tube_fraction = std::stod(*v);
  } catch (const std::exception&) {
    throw std::invalid_argument("homothety job: invalid integer or real field");
  }
  validate(job);
  return job;
}

}  // namespace srcurv
