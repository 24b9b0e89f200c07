#include "wasserflow/dynamics.hpp"

#include <cmath>
#include <string>

namespace wasserflow {

double lsv_step(double x, double beta) {
  if (!(beta > 0.0)) throw UsageError("lsv_step: beta must be > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw UsageError("lsv_step: x outside [0,1]");
  if (x < 0.5) {
    return x * (1.0 + std::pow(2.0 * x, beta));
  }
  return 2.0 * x - 1.0;
}

double doubling_step(double x) {
  if (!(x >= 0.0 && x < 1.0)) throw UsageError("doubling_step: x outside [0,1)");
  const double y = 2.0 * x;
  return y >= 1.0 ? y - 1.0 : y;
}

InducedStep induced_step(double y, double beta, long cap) {
  if (!(y >= 0.5 && y <= 1.0)) throw UsageError("induced_step: y outside Y = [1/2,1]");
  double x = lsv_step(y, beta);
  long r = 1;
  while (x < 0.5) {
    if (r >= cap) {
      throw NumericalError("induced_step: return-time cap " + std::to_string(cap) +
                           " exceeded near the neutral fixed point");
    }
    x = lsv_step(x, beta);
    ++r;
  }
  return {x, r};
}

std::vector<InducedBranch> induced_branches(double beta, int count) {
  if (!(beta > 0.0)) throw UsageError("induced_branches: beta must be > 0");
  if (count < 1) throw UsageError("induced_branches: count must be >= 1");
  // q_0 = 1/2, q_k = left-branch preimage of q_{k-1}: the escape ladder of
  // the neutral fixed point. Y_r = [(1 + q_{r-1})/2, (1 + q_{r-2})/2) with
  // the convention q_{-1} = 1.
  std::vector<InducedBranch> out;
  out.reserve(static_cast<std::size_t>(count));
  double q_prev = 1.0;  // q_{-1}
  double q = 0.5;       // q_0
  for (int r = 1; r <= count; ++r) {
    out.push_back({0.5 * (1.0 + q), 0.5 * (1.0 + q_prev), r});
    // Invert the left branch at q by bisection: x (1 + (2x)^beta) = q.
    double lo = 0.0, hi = q;
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      (mid * (1.0 + std::pow(2.0 * mid, beta)) < q ? lo : hi) = mid;
    }
    q_prev = q;
    q = 0.5 * (lo + hi);
  }
  return out;
}

double SuspensionSystem::roof_at(double y) const {
  if (base != Base::lsv_induced) return roof(y);
  // phi(y) = sum of h over the return block of T.
  double x = y;
  double total = roof(x);
  x = lsv_step(x, beta);
  long iter = 1;
  while (x < 0.5) {
    if (iter >= kInducedIterationCap) {
      throw NumericalError("roof_at: induced roof evaluation exceeded the iteration cap");
    }
    total += roof(x);
    x = lsv_step(x, beta);
    ++iter;
  }
  return total;
}

void SuspensionSystem::base_advance(FlowState& s) const {
  switch (base) {
    case Base::doubling:
      if (s.has_tail) {
        ++s.tail_pos;
        s.y = tail_window(s.tail_key, s.tail_pos);
      } else {
        s.y = doubling_step(s.y);
      }
      break;
    case Base::lsv:
      s.y = lsv_step(s.y, beta);
      break;
    case Base::lsv_induced:
      s.y = induced_step(s.y, beta).y;
      break;
  }
}

std::string SuspensionSystem::name() const {
  switch (base) {
    case Base::doubling:
      return "doubling";
    case Base::lsv:
      return "lsv(beta=" + std::to_string(beta) + ")";
    case Base::lsv_induced:
      return "lsv_induced(beta=" + std::to_string(beta) + ")";
  }
  return "?";
}

FlowState suspension_evolve(FlowState state, double t, const SuspensionSystem& system) {
  if (!(t >= 0.0)) throw UsageError("suspension_evolve: t must be >= 0");
  double roof = system.roof_at(state.y);
  if (!(state.u >= 0.0 && state.u < roof)) {
    throw UsageError("suspension_evolve: state height outside [0, roof)");
  }
  double remaining = t;
  while (state.u + remaining >= roof) {
    remaining -= roof - state.u;
    if (remaining < 0.0) remaining = 0.0;
    state.u = 0.0;
    system.base_advance(state);
    roof = system.roof_at(state.y);
  }
  state.u += remaining;
  return state;
}

namespace {

// One proposal for the base coordinate: uniform start, burn_in iterations.
FlowState propose_base_point(const SuspensionSystem& system, int burn_in, RngStream& rng,
                             std::uint64_t tail_seed) {
  FlowState s;
  if (system.dyadic_base()) {
    s.has_tail = true;
    s.tail_key = tail_seed;
    s.tail_pos = static_cast<std::uint64_t>(burn_in);  // skipping bits = iterating the map
    s.y = tail_window(s.tail_key, s.tail_pos);
  } else {
    s.y = rng.uniform(system.domain_lo(), system.domain_hi());
    for (int i = 0; i < burn_in; ++i) system.base_advance(s);
  }
  return s;
}

}  // namespace

std::vector<FlowState> sample_initial_states(const SuspensionSystem& system, int count,
                                             int burn_in, std::uint64_t rng_seed) {
  if (count < 1) throw UsageError("sample_initial_states: count must be >= 1");
  if (burn_in < 0) throw UsageError("sample_initial_states: burn_in must be >= 0");

  // Rejection envelope for the roof weighting. Direct bases have a known sup;
  // the induced roof is unbounded, so take twice the max over a pilot batch
  // (proposals above the envelope are accepted outright; the resulting bias is
  // the mass of the roof above the envelope, negligible at these sizes).
  double envelope = system.roof.sup();
  if (system.base == SuspensionSystem::Base::lsv_induced) {
    RngStream pilot(derive_key({rng_seed, 0x911707ULL}));
    double max_roof = 1.0;
    for (int i = 0; i < 512; ++i) {
      FlowState s = propose_base_point(system, burn_in, pilot,
                                       derive_key({rng_seed, 0x911707ULL, static_cast<std::uint64_t>(i)}));
      max_roof = std::max(max_roof, system.roof_at(s.y));
    }
    envelope = 2.0 * max_roof;
  }

  std::vector<FlowState> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    RngStream rng(derive_key({rng_seed, 0x5A3E1ULL, static_cast<std::uint64_t>(k)}));
    for (std::uint64_t attempt = 0;; ++attempt) {
      FlowState s = propose_base_point(
          system, burn_in, rng,
          derive_key({rng_seed, 0x7A11ULL, static_cast<std::uint64_t>(k), attempt}));
      const double roof = system.roof_at(s.y);
      const double g = rng.uniform(0.0, envelope);
      if (g < roof) {
        s.u = roof >= envelope ? rng.uniform(0.0, roof) : g;
        out.push_back(s);
        break;
      }
    }
  }
  return out;
}

IntervalMap doubling_interval_map() {
  return {"doubling", 0.0, 1.0, [](double x) { return doubling_step(x); }};
}

IntervalMap lsv_interval_map(double beta) {
  return {"lsv_b" + std::to_string(beta), 0.0, 1.0,
          [beta](double x) { return lsv_step(x, beta); }};
}

IntervalMap induced_lsv_interval_map(double beta) {
  return {"lsv_induced_b" + std::to_string(beta), 0.5, 1.0,
          [beta](double y) { return induced_step(y, beta).y; }};
}

IntervalMap identity_interval_map() {
  return {"identity", 0.0, 1.0, [](double x) { return x; }};
}

}  // namespace wasserflow
