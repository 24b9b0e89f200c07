#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wasserflow/errors.hpp"
#include "wasserflow/rng.hpp"

namespace wasserflow {

inline constexpr long kInducedIterationCap = 10'000'000;

/// Intermittent interval map T(x) = x(1 + 2^b x^b) on [0,1/2), 2x-1 on [1/2,1].
/// Neutral fixed point at 0; nonuniformly expanding of order p for all p < 1/b.
struct LsvMap {
  double beta;
};

/// x -> 2x mod 1. Lebesgue-invariant; the p = infinity reference system.
struct DoublingMap {};

/// One application of the LSV map. x = 1/2 goes to the linear branch, so the
/// tie-break is deterministic. Throws UsageError outside [0,1] or for beta <= 0.
double lsv_step(double x, double beta);

double doubling_step(double x);

struct InducedStep {
  double y;          // F(y) in [1/2, 1]
  long return_time;  // r(y) >= 1
};

/// First-return map F = T^r to Y = [1/2, 1] for the LSV map. Throws
/// NumericalError when the return takes more than `cap` base iterations
/// (orbits trapped near the neutral fixed point at small beta budgets).
InducedStep induced_step(double y, double beta, long cap = kInducedIterationCap);

/// One monotone branch of the induced map: F maps [lo, hi) bijectively onto
/// Y with constant return time.
struct InducedBranch {
  double lo;
  double hi;
  long return_time;
};

/// The first `count` branches of the induced LSV map, enumerated by return
/// time r = 1, 2, ...; they tile Y = [1/2, 1] from the right, accumulating at
/// the preimage of the neutral fixed point as r grows. Branch boundaries are
/// the right-branch preimages of the left-branch escape intervals, solved by
/// bisection.
std::vector<InducedBranch> induced_branches(double beta, int count);

/// Roof functions shipped with the suspension systems: h = 1 and h(y) = 1 + y.
class Roof {
 public:
  enum class Kind { constant_one, one_plus_y };

  static Roof constant_one() { return Roof(Kind::constant_one); }
  static Roof one_plus_y() { return Roof(Kind::one_plus_y); }

  double operator()(double y) const { return kind_ == Kind::constant_one ? 1.0 : 1.0 + y; }
  double sup() const { return kind_ == Kind::constant_one ? 1.0 : 2.0; }
  bool is_constant() const { return kind_ == Kind::constant_one; }
  Kind kind() const { return kind_; }
  std::string name() const { return kind_ == Kind::constant_one ? "constant" : "linear"; }

 private:
  explicit Roof(Kind k) : kind_(k) {}
  Kind kind_;
};

/// Point of a suspension: base coordinate y and height u in [0, roof(y)).
/// Doubling-based states carry a key into a lazily evaluated random bit
/// reservoir; the base map then slides a 64-bit window along that bit stream
/// instead of doubling a 53-bit double, which would hit an exact dyadic (and
/// then the fixed point 0) after at most 53 steps.
struct FlowState {
  double y = 0.0;
  double u = 0.0;
  std::uint64_t tail_key = 0;
  std::uint64_t tail_pos = 0;
  bool has_tail = false;
};

/// A suspension semiflow: base map (Poincare return map) plus roof function.
/// For the induced base, the effective roof is phi(y) = sum of h over the
/// return block of the underlying LSV map.
struct SuspensionSystem {
  enum class Base { doubling, lsv, lsv_induced };

  Base base = Base::doubling;
  double beta = 0.0;
  Roof roof = Roof::constant_one();

  static SuspensionSystem doubling(Roof h = Roof::constant_one()) {
    SuspensionSystem s;
    s.base = Base::doubling;
    s.roof = h;
    return s;
  }
  static SuspensionSystem lsv(double beta, Roof h = Roof::constant_one()) {
    SuspensionSystem s;
    s.base = Base::lsv;
    s.beta = beta;
    s.roof = h;
    return s;
  }
  static SuspensionSystem lsv_induced(double beta, Roof h = Roof::constant_one()) {
    SuspensionSystem s;
    s.base = Base::lsv_induced;
    s.beta = beta;
    s.roof = h;
    return s;
  }

  double domain_lo() const { return base == Base::lsv_induced ? 0.5 : 0.0; }
  double domain_hi() const { return 1.0; }
  bool dyadic_base() const { return base == Base::doubling; }
  bool constant_roof() const { return roof.is_constant() && base != Base::lsv_induced; }

  /// Roof height over y (phi for the induced base).
  double roof_at(double y) const;

  /// Advance the base coordinate by one return, in place.
  void base_advance(FlowState& s) const;

  std::string name() const;
};

/// Semiflow F_t(y, u) = (y, u + t) modulo roof identifications. Throws
/// UsageError for t < 0 or a state violating 0 <= u < roof(y).
FlowState suspension_evolve(FlowState state, double t, const SuspensionSystem& system);

/// Draw `count` independent states approximately distributed as the invariant
/// measure of the suspension: base points via uniform draws pushed through
/// `burn_in` base-map iterations, heights by roof-weighted rejection, so the
/// pair follows mu_Y x Lebesgue / mean(roof). For the induced base the roof is
/// unbounded; the rejection envelope is then calibrated from a pilot batch and
/// the (tiny) tail beyond it is accepted outright.
std::vector<FlowState> sample_initial_states(const SuspensionSystem& system, int count,
                                             int burn_in, std::uint64_t rng_seed);

/// Interval self-map presented to the Ulam discretizer.
struct IntervalMap {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  std::function<double(double)> step;
};

IntervalMap doubling_interval_map();
IntervalMap lsv_interval_map(double beta);
IntervalMap induced_lsv_interval_map(double beta);
IntervalMap identity_interval_map();

}  // namespace wasserflow
