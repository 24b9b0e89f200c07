#include "wasserflow/rates.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "wasserflow/ulam.hpp"

namespace wasserflow {

namespace {

// Deterministic parallel map: out[i] = fn(i), any thread count.
template <typename Fn>
void parallel_for(int count, int threads, Fn fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      for (int i = t; i < count; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

SuspensionSystem ExperimentPlan::make_system() const {
  const Roof h = roof == "linear" ? Roof::one_plus_y() : Roof::constant_one();
  if (system == "doubling") return SuspensionSystem::doubling(h);
  if (system == "lsv") return SuspensionSystem::lsv(beta, h);
  throw UsageError("plan.system: unknown system '" + system + "'");
}

void ExperimentPlan::validate() const {
  if (system != "doubling" && system != "lsv") {
    throw UsageError("plan.system: expected 'doubling' or 'lsv'");
  }
  if (system == "lsv" && !(beta > 0.0 && beta < 0.5)) {
    throw UsageError("plan.beta: rate runs require 0 < beta < 1/2");
  }
  if (roof != "constant" && roof != "linear") {
    throw UsageError("plan.roof: expected 'constant' or 'linear'");
  }
  if (n_values.size() < 2) throw UsageError("plan.n_values: need at least 2 values");
  for (std::size_t i = 0; i + 1 < n_values.size(); ++i) {
    if (!(n_values[i] < n_values[i + 1])) {
      throw UsageError("plan.n_values: must be strictly increasing");
    }
  }
  if (!(n_values.front() >= 1.0)) throw UsageError("plan.n_values: values must be >= 1");
  if (!(q >= 1.0)) throw UsageError("plan.q: q must be >= 1");
  if (samples_per_n < 1) throw UsageError("plan.samples_per_n: must be >= 1");
  if (grid_m < 2) throw UsageError("plan.grid_m: must be >= 2");
  if (ulam_n < 16) throw UsageError("plan.ulam_n: must be >= 16");
  if (burn_in < 0) throw UsageError("plan.burn_in: must be >= 0");
  if (bootstrap < 0) throw UsageError("plan.bootstrap: must be >= 0");
  if (threads < 1) throw UsageError("plan.threads: must be >= 1");
}

std::string fit_mode_name(FitMode m) {
  switch (m) {
    case FitMode::gamma_free:
      return "free";
    case FitMode::gamma_half:
      return "half";
    case FitMode::gamma_zero:
      return "zero";
  }
  return "?";
}

FitMode fit_mode_from_name(const std::string& name) {
  if (name == "free") return FitMode::gamma_free;
  if (name == "half") return FitMode::gamma_half;
  if (name == "zero") return FitMode::gamma_zero;
  throw UsageError("gamma mode: expected free|half|zero, got '" + name + "'");
}

RateFit fit_rate(const RateTable& table, FitMode mode) {
  std::vector<double> xs, ys, ws;
  bool unweighted = false;
  for (const RateRow& row : table.rows) {
    if (!(row.estimate > 0.0)) continue;
    if (!(row.n > 1.0)) continue;  // log log n regressor needs n > 1
    if (row.floor > 0.0 && row.estimate <= 2.0 * row.floor) continue;  // bias-floor dominated
    xs.push_back(std::log(row.n));
    ys.push_back(std::log(row.estimate));
    if (row.stderr_boot > 0.0) {
      const double se_log = row.stderr_boot / row.estimate;
      ws.push_back(1.0 / (se_log * se_log));
    } else {
      ws.push_back(1.0);
      unweighted = true;
    }
  }
  const int rows = static_cast<int>(xs.size());
  if (rows < 3) {
    throw NumericalError("fit_rate: need at least 3 usable rows above the bias floor, have " +
                         std::to_string(rows));
  }
  if (unweighted) std::fill(ws.begin(), ws.end(), 1.0);

  const bool free_gamma = mode == FitMode::gamma_free;
  const double gamma_fixed = mode == FitMode::gamma_half ? 0.5 : 0.0;
  std::vector<double> zs(xs.size());  // loglog n regressor
  for (std::size_t i = 0; i < xs.size(); ++i) zs[i] = std::log(xs[i]);
  if (!free_gamma) {
    for (std::size_t i = 0; i < ys.size(); ++i) ys[i] -= gamma_fixed * zs[i];
  }

  // Weighted normal equations, 2 or 3 unknowns (logC, alpha[, gamma]).
  const int k = free_gamma ? 3 : 2;
  double A[3][3] = {};
  double b[3] = {};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double reg[3] = {1.0, xs[i], zs[i]};
    for (int r = 0; r < k; ++r) {
      b[r] += ws[i] * reg[r] * ys[i];
      for (int c = 0; c < k; ++c) A[r][c] += ws[i] * reg[r] * reg[c];
    }
  }
  // Gaussian elimination with partial pivoting.
  double M[3][4];
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) M[r][c] = A[r][c];
    M[r][k] = b[r];
  }
  double scale = 0.0;
  for (int r = 0; r < k; ++r) scale = std::max(scale, std::abs(A[r][r]));
  for (int col = 0; col < k; ++col) {
    int piv = col;
    for (int r = col + 1; r < k; ++r) {
      if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
    }
    for (int c = 0; c <= k; ++c) std::swap(M[col][c], M[piv][c]);
    if (std::abs(M[col][col]) < 1e-10 * std::max(scale, 1.0)) {
      throw NumericalError(
          "fit_rate: collinear regressors (n range too narrow for free gamma); "
          "rerun with gamma fixed to 1/2 or 0");
    }
    for (int r = col + 1; r < k; ++r) {
      const double f = M[r][col] / M[col][col];
      for (int c = col; c <= k; ++c) M[r][c] -= f * M[col][c];
    }
  }
  double sol[3] = {};
  for (int r = k - 1; r >= 0; --r) {
    double acc = M[r][k];
    for (int c = r + 1; c < k; ++c) acc -= M[r][c] * sol[c];
    sol[r] = acc / M[r][r];
  }

  RateFit fit;
  fit.mode = mode;
  fit.logC = sol[0];
  fit.alpha = sol[1];
  fit.gamma = free_gamma ? sol[2] : gamma_fixed;
  fit.rows_used = rows;

  double wsum = 0.0, ymean = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    wsum += ws[i];
    ymean += ws[i] * ys[i];
  }
  ymean /= wsum;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double pred = sol[0] + sol[1] * xs[i] + (free_gamma ? sol[2] * zs[i] : 0.0);
    ss_res += ws[i] * (ys[i] - pred) * (ys[i] - pred);
    ss_tot += ws[i] * (ys[i] - ymean) * (ys[i] - ymean);
  }
  fit.r2 = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return fit;
}

double theoretical_rate(double p, double n) {
  if (!(p > 2.0)) throw UsageError("theoretical_rate: p must be > 2");
  if (!(n >= 3.0)) throw UsageError("theoretical_rate: n must be >= 3");
  const double alpha = p < 4.0 ? -0.5 + 1.0 / p : -0.25;
  return std::pow(n, alpha) * std::sqrt(std::log(n));
}

namespace {

// Truncated autocovariance sum over a stream of stationary blocks.
class AutocovarianceAccumulator {
 public:
  explicit AutocovarianceAccumulator(int window)
      : window_(window), ring_(static_cast<std::size_t>(window) + 1, 0.0),
        lag_sums_(static_cast<std::size_t>(window) + 1, 0.0) {}

  void push(double b) {
    ring_[static_cast<std::size_t>(count_ % (window_ + 1))] = b;
    sum_ += b;
    const long max_lag = std::min<long>(window_, count_);
    for (long l = 0; l <= max_lag; ++l) {
      const long idx = count_ - l;
      lag_sums_[static_cast<std::size_t>(l)] +=
          b * ring_[static_cast<std::size_t>(idx % (window_ + 1))];
    }
    ++count_;
  }

  double sigma2() const {
    if (count_ <= window_ + 1) throw NumericalError("green_kubo: too few blocks");
    const double mean = sum_ / static_cast<double>(count_);
    double total = 0.0;
    for (long l = 0; l <= window_; ++l) {
      const double pairs = static_cast<double>(count_ - l);
      const double cov = lag_sums_[static_cast<std::size_t>(l)] / pairs - mean * mean;
      total += l == 0 ? cov : 2.0 * cov;
    }
    return total;
  }

 private:
  int window_;
  long count_ = 0;
  double sum_ = 0.0;
  std::vector<double> ring_;
  std::vector<double> lag_sums_;
};

}  // namespace

double green_kubo_variance_flow(const SuspensionSystem& system, const ObservableSpec& v,
                                long blocks, int window, std::uint64_t seed) {
  if (blocks < 1000) throw UsageError("green_kubo_variance_flow: need >= 1000 blocks");
  FlowState s = sample_initial_states(system, 1, 1000, derive_key({seed, 0x6BULL}))[0];
  AutocovarianceAccumulator acc(window);
  const double checkpoint[1] = {1.0};
  for (long j = 0; j < blocks; ++j) {
    FlowIntegralResult r = integrate_flow_observable(system, v, s, checkpoint);
    acc.push(r.at_checkpoints[0]);
    s = r.end_state;
  }
  return acc.sigma2();
}

double green_kubo_variance_map(const SuspensionSystem& system, const ObservableSpec& v,
                               long steps, int window, std::uint64_t seed) {
  if (steps < 1000) throw UsageError("green_kubo_variance_map: need >= 1000 steps");
  FlowState s = sample_initial_states(system, 1, 1000, derive_key({seed, 0x6CULL}))[0];
  AutocovarianceAccumulator acc(window);
  for (long j = 0; j < steps; ++j) {
    acc.push(v.value(s.y, 0.0));
    system.base_advance(s);
  }
  return acc.sigma2();
}

double reference_variance(const ExperimentPlan& plan, const ObservableSpec& centered) {
  const SuspensionSystem system = plan.make_system();
  double sigma2 = 0.0;
  if (system.constant_roof()) {
    const UlamOperator op = build_ulam_suspension(system, plan.ulam_n,
                                                  std::min(plan.ulam_n, 256));
    const GriddedFunction psi = time1_block_average(system, centered, op.ny, op.nu);
    const std::vector<double> mass = invariant_mass(op, 1e-12);
    GriddedFunction psi0 = psi;
    const double mean = mu_mean(psi, mass);
    for (double& x : psi0.v) x -= mean;
    const Decomposition dec = solve_coboundary(psi0, op, 1e-9);
    sigma2 = dec.sigma2;
  } else {
    sigma2 = green_kubo_variance_flow(system, centered, plan.gk_blocks, 100,
                                      derive_key({plan.seed, 0x61ULL}));
  }
  if (!(sigma2 > 0.01)) {
    throw UsageError("reference_variance: degenerate observable, sigma^2 = " +
                     std::to_string(sigma2) + " <= 0.01");
  }
  return sigma2;
}

namespace {

double assignment_estimate(const std::vector<PathSample>& a, const std::vector<PathSample>& b,
                           double q) {
  return wasserstein_assignment(std::span<const PathSample>(a), std::span<const PathSample>(b),
                                q)
      .distance;
}

}  // namespace

RateTable run_rate_experiment(const ExperimentPlan& plan) {
  plan.validate();
  const SuspensionSystem system = plan.make_system();
  ObservableSpec v = observable_by_name(plan.observable);
  v = center_observable(v, system, plan.center_budget, derive_key({plan.seed, 0xCEULL}));

  RateTable table;
  table.sigma2 = reference_variance(plan, v);
  const double sigma = std::sqrt(table.sigma2);
  const int N = plan.samples_per_n;

  // Self-distance floor: two independent Brownian clouds at the same N.
  {
    std::vector<double> reps(static_cast<std::size_t>(plan.floor_reps), 0.0);
    for (int rep = 0; rep < plan.floor_reps; ++rep) {
      std::vector<PathSample> a, b;
      a.reserve(N);
      b.reserve(N);
      for (int k = 0; k < N; ++k) {
        RngStream ra(derive_key({plan.seed, 0xF100ULL, static_cast<std::uint64_t>(rep),
                                 static_cast<std::uint64_t>(k), 0ULL}));
        RngStream rb(derive_key({plan.seed, 0xF100ULL, static_cast<std::uint64_t>(rep),
                                 static_cast<std::uint64_t>(k), 1ULL}));
        a.push_back(sample_brownian(sigma, plan.grid_m, ra));
        b.push_back(sample_brownian(sigma, plan.grid_m, rb));
      }
      reps[rep] = assignment_estimate(a, b, plan.q);
    }
    double acc = 0.0;
    for (double r : reps) acc += r;
    table.floor = plan.floor_reps > 0 ? acc / plan.floor_reps : 0.0;
  }

  for (std::size_t ni = 0; ni < plan.n_values.size(); ++ni) {
    const double n = plan.n_values[ni];
    std::vector<PathSample> wn(static_cast<std::size_t>(N));
    std::vector<PathSample> bm(static_cast<std::size_t>(N));
    parallel_for(N, plan.threads, [&](int k) {
      const FlowState s0 =
          sample_initial_states(system, 1, plan.burn_in,
                                derive_key({plan.seed, 0x11ULL, static_cast<std::uint64_t>(ni),
                                            static_cast<std::uint64_t>(k)}))[0];
      wn[k] = wn_path(system, v, n, plan.grid_m, s0);
      RngStream rb(derive_key({plan.seed, 0xB2ULL, static_cast<std::uint64_t>(ni),
                               static_cast<std::uint64_t>(k)}));
      bm[k] = sample_brownian(sigma, plan.grid_m, rb);
    });

    RateRow row;
    row.n = n;
    row.q = plan.q;
    row.samples = N;
    row.grid_m = plan.grid_m;
    row.seed = plan.seed;
    row.floor = table.floor;
    row.solver = solver_name(TransportSolver::assignment);

    if (N == 1) {
      row.estimate = sup_distance(wn[0], bm[0]);
      row.stderr_boot = 0.0;  // single-pair convention
    } else {
      // Cost matrix once; the main solve and every bootstrap solve index it.
      std::vector<double> cost(static_cast<std::size_t>(N) * N);
      parallel_for(N, plan.threads, [&](int i) {
        for (int j = 0; j < N; ++j) {
          cost[static_cast<std::size_t>(i) * N + j] =
              std::pow(sup_distance(wn[i], bm[j]), plan.q);
        }
      });
      std::vector<int> pairing;
      row.estimate = std::pow(solve_assignment(cost, N, pairing) / N, 1.0 / plan.q);

      if (plan.bootstrap > 0) {
        std::vector<double> boots(static_cast<std::size_t>(plan.bootstrap));
        parallel_for(plan.bootstrap, plan.threads, [&](int bi) {
          RngStream rs(derive_key({plan.seed, 0xB007ULL, static_cast<std::uint64_t>(ni),
                                   static_cast<std::uint64_t>(bi)}));
          std::vector<double> sub(static_cast<std::size_t>(N) * N);
          std::vector<int> ia(N), ib(N);
          for (int k = 0; k < N; ++k) ia[k] = static_cast<int>(rs.next_below(N));
          for (int k = 0; k < N; ++k) ib[k] = static_cast<int>(rs.next_below(N));
          for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) {
              sub[static_cast<std::size_t>(i) * N + j] =
                  cost[static_cast<std::size_t>(ia[i]) * N + ib[j]];
            }
          }
          std::vector<int> p;
          boots[bi] = std::pow(solve_assignment(sub, N, p) / N, 1.0 / plan.q);
        });
        double bm_mean = 0.0;
        for (double x : boots) bm_mean += x;
        bm_mean /= plan.bootstrap;
        double var = 0.0;
        for (double x : boots) var += (x - bm_mean) * (x - bm_mean);
        row.stderr_boot = std::sqrt(var / std::max(1, plan.bootstrap - 1));
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace wasserflow
