#include "wasserflow/process.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wasserflow/ulam.hpp"

namespace wasserflow {

ObservableSpec observable_cos() {
  ObservableSpec v;
  v.name = "cos";
  v.raw = [](double y, double) { return std::cos(2.0 * std::numbers::pi * y); };
  return v;
}

ObservableSpec observable_coordinate() {
  ObservableSpec v;
  v.name = "coordinate";
  v.raw = [](double y, double) { return y; };
  return v;
}

ObservableSpec observable_by_name(const std::string& name) {
  if (name == "cos") return observable_cos();
  if (name == "coordinate" || name == "y") return observable_coordinate();
  throw UsageError("unknown observable '" + name + "' (expected: cos, coordinate)");
}

double PathSample::at(double t) const {
  if (grid_m <= 0) throw UsageError("PathSample::at on empty path");
  if (t <= 0.0) return values.front();
  if (t >= 1.0) return values.back();
  const double s = t * grid_m;
  const int k = std::min(static_cast<int>(s), grid_m - 1);
  const double frac = s - k;
  return values[k] + frac * (values[k + 1] - values[k]);
}

namespace {

// Integral of v(y, u0 + s) over s in [0, len] at fixed base coordinate.
double segment_integral(const ObservableSpec& v, double y, double u0, double len,
                        double quad_step) {
  if (len <= 0.0) return 0.0;
  if (!v.depends_on_height) return v.value(y, u0) * len;
  const int panels = std::max(1, static_cast<int>(std::ceil(len / quad_step)));
  const double h = len / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = u0 + p * h;
    // Simpson on one panel.
    total += (h / 6.0) * (v.value(y, a) + 4.0 * v.value(y, a + 0.5 * h) + v.value(y, a + h));
  }
  return total;
}

}  // namespace

FlowIntegralResult integrate_flow_observable(const SuspensionSystem& system,
                                             const ObservableSpec& v, FlowState state,
                                             std::span<const double> checkpoints,
                                             const IntegrateOptions& opt) {
  if (opt.quad_step <= 0.0) throw UsageError("integrate_flow_observable: quad_step must be > 0");
  FlowIntegralResult res;
  res.at_checkpoints.resize(checkpoints.size());
  double integral = 0.0;
  double tau = 0.0;
  double roof = system.roof_at(state.y);
  if (!(state.u >= 0.0 && state.u < roof)) {
    throw UsageError("integrate_flow_observable: state height outside [0, roof)");
  }
  const auto note = [&](double x) {
    if (opt.track_sup) res.sup_abs = std::max(res.sup_abs, std::abs(x));
  };
  note(0.0);
  for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
    const double target = checkpoints[ci];
    if (target < tau) throw UsageError("integrate_flow_observable: checkpoints must ascend");
    while (true) {
      const double to_target = target - tau;
      const double to_cross = roof - state.u;
      if (to_cross < to_target) {
        integral += segment_integral(v, state.y, state.u, to_cross, opt.quad_step);
        tau += to_cross;
        state.u = 0.0;
        system.base_advance(state);
        roof = system.roof_at(state.y);
        note(integral);
      } else {
        integral += segment_integral(v, state.y, state.u, to_target, opt.quad_step);
        state.u += to_target;
        tau = target;
        note(integral);
        // Normalize if we landed exactly on the roof.
        while (state.u >= roof) {
          state.u -= roof;
          if (state.u < 0.0) state.u = 0.0;
          system.base_advance(state);
          roof = system.roof_at(state.y);
        }
        break;
      }
    }
    res.at_checkpoints[ci] = integral;
  }
  res.end_state = state;
  return res;
}

ObservableSpec center_observable(const ObservableSpec& v, const SuspensionSystem& system,
                                 double budget, std::uint64_t rng_seed) {
  if (!(budget >= 1e4)) throw UsageError("center_observable: budget must be >= 1e4 flow units");
  const int blocks = 100;
  const double block_len = budget / blocks;
  FlowState s0 = sample_initial_states(system, 1, 1000, derive_key({rng_seed, 0xCE17ULL}))[0];
  std::vector<double> checkpoints(blocks);
  for (int i = 0; i < blocks; ++i) checkpoints[i] = block_len * (i + 1);
  const FlowIntegralResult run = integrate_flow_observable(system, v, s0, checkpoints);
  std::vector<double> block_means(blocks);
  double prev = 0.0;
  for (int i = 0; i < blocks; ++i) {
    block_means[i] = (run.at_checkpoints[i] - prev) / block_len;
    prev = run.at_checkpoints[i];
  }
  double mean = 0.0;
  for (double b : block_means) mean += b;
  mean /= blocks;
  double var = 0.0;
  for (double b : block_means) var += (b - mean) * (b - mean);
  var /= (blocks - 1);
  const double stderr_mean = std::sqrt(var / blocks);

  ObservableSpec centered = v;
  centered.mean_estimate = v.mean_estimate + mean;
  centered.mean_tolerance = 3.0 * stderr_mean;
  centered.centered = true;
  return centered;
}

PathSample wn_path(const SuspensionSystem& system, const ObservableSpec& v, double n,
                   int grid_m, const FlowState& state0, double quad_step) {
  if (!(n >= 1.0)) throw UsageError("wn_path: n must be >= 1");
  if (grid_m < 1) throw UsageError("wn_path: grid m must be >= 1");
  if (quad_step > n / grid_m) {
    throw UsageError("wn_path: quadrature step exceeds the path grid spacing");
  }
  std::vector<double> checkpoints(static_cast<std::size_t>(grid_m));
  for (int k = 1; k <= grid_m; ++k) checkpoints[k - 1] = n * k / grid_m;
  IntegrateOptions opt;
  opt.quad_step = quad_step;
  const FlowIntegralResult run = integrate_flow_observable(system, v, state0, checkpoints, opt);
  PathSample path = PathSample::zeros(grid_m);
  const double scale = 1.0 / std::sqrt(n);
  for (int k = 1; k <= grid_m; ++k) path.values[k] = scale * run.at_checkpoints[k - 1];
  return path;
}

PathSample martingale_path(std::span<const FlowState> orbit, const GriddedFunction& m_func,
                           double sigma, int grid_m) {
  const std::size_t n = orbit.size();
  if (n == 0) throw UsageError("martingale_path: empty orbit");
  if (!(sigma > 0.0)) throw UsageError("martingale_path: sigma must be > 0");
  if (grid_m < 1) throw UsageError("martingale_path: grid m must be >= 1");
  const double scale = 1.0 / (std::sqrt(static_cast<double>(n)) * sigma);
  // zeta[j] for j = 1..n evaluates m at F_{n-j} x = orbit[n-j].
  std::vector<double> prefix(n + 1, 0.0);
  std::vector<double> zeta(n + 2, 0.0);
  for (std::size_t j = 1; j <= n; ++j) {
    zeta[j] = scale * m_func.eval(orbit[n - j].y, orbit[n - j].u);
    prefix[j] = prefix[j - 1] + zeta[j];
  }
  PathSample path = PathSample::zeros(grid_m);
  for (int k = 1; k <= grid_m; ++k) {
    const double nt = static_cast<double>(n) * k / grid_m;
    auto j0 = static_cast<std::size_t>(nt);
    if (j0 > n) j0 = n;
    const double frac = nt - static_cast<double>(j0);
    path.values[k] = prefix[j0] + frac * zeta[j0 + 1];
  }
  return path;
}

PathSample reverse_transform(const PathSample& u) {
  PathSample g = PathSample::zeros(u.grid_m);
  const double last = u.values.back();
  for (int k = 0; k <= u.grid_m; ++k) {
    g.values[k] = last - u.values[u.grid_m - k];
  }
  return g;
}

double sup_distance(const PathSample& a, const PathSample& b) {
  if (a.grid_m != b.grid_m) throw UsageError("sup_distance: grid mismatch");
  double best = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    best = std::max(best, std::abs(a.values[k] - b.values[k]));
  }
  return best;
}

std::vector<FlowState> suspension_orbit(const SuspensionSystem& system, FlowState state0,
                                        int n) {
  if (n < 1) throw UsageError("suspension_orbit: n must be >= 1");
  std::vector<FlowState> orbit;
  orbit.reserve(static_cast<std::size_t>(n));
  orbit.push_back(state0);
  for (int i = 1; i < n; ++i) {
    orbit.push_back(suspension_evolve(orbit.back(), 1.0, system));
  }
  return orbit;
}

}  // namespace wasserflow
