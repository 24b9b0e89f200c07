#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wasserflow/dynamics.hpp"

namespace wasserflow {

struct GriddedFunction;  // ulam.hpp

/// Scalar observable on the suspension together with its centering state.
/// `raw` is the uncentered evaluator; `value` subtracts the stored mean
/// estimate. `depends_on_height` gates the quadrature path: observables that
/// are functions of the base coordinate only are piecewise constant along flow
/// segments and integrate exactly.
struct ObservableSpec {
  std::string name;
  std::function<double(double y, double u)> raw;
  double holder_exponent = 1.0;
  bool depends_on_height = false;

  double mean_estimate = 0.0;
  double mean_tolerance = 0.0;  // 3 * stderr of the Birkhoff mean estimate
  bool centered = false;

  double value(double y, double u) const { return raw(y, u) - mean_estimate; }
  double value(const FlowState& s) const { return raw(s.y, s.u) - mean_estimate; }
};

/// cos(2*pi*y), mean zero for both shipped bases up to centering.
ObservableSpec observable_cos();
/// y itself (mean 1/2 under Lebesgue).
ObservableSpec observable_coordinate();
/// Look up a shipped observable by CLI name ("cos", "coordinate").
ObservableSpec observable_by_name(const std::string& name);

/// Piecewise-linear path on the uniform grid {0, 1/m, ..., 1}.
struct PathSample {
  int grid_m = 0;
  std::vector<double> values;  // size grid_m + 1

  static PathSample zeros(int m) { return {m, std::vector<double>(static_cast<std::size_t>(m) + 1, 0.0)}; }
  double at(double t) const;  // linear interpolation, t in [0,1]
};

struct IntegrateOptions {
  double quad_step = 0.02;  // max quadrature panel, flow-time units
  bool track_sup = false;   // running sup of |integral| at segment ends
};

struct FlowIntegralResult {
  std::vector<double> at_checkpoints;
  FlowState end_state;
  double sup_abs = 0.0;
};

/// Integral of v along the flow started at `state`, reported at the ascending
/// `checkpoints`. Accumulation is split exactly at roof crossings; inside a
/// segment the integrand is either constant (base-only observables) or handled
/// by composite Simpson panels no wider than quad_step.
FlowIntegralResult integrate_flow_observable(const SuspensionSystem& system,
                                             const ObservableSpec& v, FlowState state,
                                             std::span<const double> checkpoints,
                                             const IntegrateOptions& opt = {});

/// Center the observable by a Birkhoff average over `budget` flow-time units
/// (single trajectory, 100 blocks for the stderr estimate). Stores the mean
/// and a 3-sigma residual tolerance in the returned spec.
ObservableSpec center_observable(const ObservableSpec& v, const SuspensionSystem& system,
                                 double budget, std::uint64_t rng_seed);

/// W_n(t) = n^{-1/2} * integral of v over [0, nt], on the grid {k/m}.
PathSample wn_path(const SuspensionSystem& system, const ObservableSpec& v, double n,
                   int grid_m, const FlowState& state0, double quad_step = 0.02);

/// Polygonal martingale path from the time-1 orbit: increments
/// zeta_{n,j} = m(F_{n-j} x) / (sqrt(n) sigma), accumulated in reversed orbit
/// order per the defining formula.
PathSample martingale_path(std::span<const FlowState> orbit, const GriddedFunction& m_func,
                           double sigma, int grid_m);

/// g(u)(t) = u(1) - u(1-t); no interpolation on the shared uniform grid.
/// The involution g(g(u)) = u is bit-exact whenever the values lie on a
/// common dyadic lattice (the subtractions are then exact); for arbitrary
/// doubles it holds to one ulp.
PathSample reverse_transform(const PathSample& u);

/// sup_t |a - b| over grid points; exact for piecewise-linear paths on a
/// shared grid. Throws UsageError on grid mismatch.
double sup_distance(const PathSample& a, const PathSample& b);

/// Orbit of the time-1 suspension map: states at times 0, 1, ..., n-1.
std::vector<FlowState> suspension_orbit(const SuspensionSystem& system, FlowState state0,
                                        int n);

}  // namespace wasserflow
