#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "wasserflow/config.hpp"
#include "wasserflow/csv.hpp"
#include "wasserflow/rates.hpp"
#include "wasserflow/transport.hpp"
#include "wasserflow/ulam.hpp"

namespace wasserflow {

namespace {

namespace fs = std::filesystem;

std::string out_path(const RunConfig& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return (fs::path(c.out_dir) / name).string();
}

SuspensionSystem system_from(const RunConfig& c) {
  const Roof h = c.roof == "linear" ? Roof::one_plus_y() : Roof::constant_one();
  return c.system == "doubling" ? SuspensionSystem::doubling(h)
                                : SuspensionSystem::lsv(c.beta, h);
}

int run_simulate(const RunConfig& c) {
  const SuspensionSystem system = system_from(c);
  ObservableSpec v = observable_by_name(c.observable);
  v = center_observable(v, system, c.center_budget, derive_key({c.seed, 0xCEULL}));
  std::vector<PathSample> paths;
  paths.reserve(static_cast<std::size_t>(c.samples));
  for (int k = 0; k < c.samples; ++k) {
    const FlowState s0 = sample_initial_states(
        system, 1, c.burn_in, derive_key({c.seed, 0x11ULL, 0ULL, static_cast<std::uint64_t>(k)}))[0];
    paths.push_back(wn_path(system, v, c.n, c.grid_m, s0, c.quad_step));
  }
  const std::string file = out_path(c, "paths.csv");
  write_paths_csv(file, paths, c.echo());
  std::cout << "wrote " << paths.size() << " W_n paths (n = " << c.n << ", m = " << c.grid_m
            << ") to " << file << "\n";
  return 0;
}

int run_decompose(const RunConfig& c) {
  UlamOperator op;
  SuspensionSystem system = system_from(c);
  const std::string cache_file =
      out_path(c, "ulam_" + c.system + (c.system == "lsv" ? "_b" + std::to_string(c.beta) : "") +
                      "_n" + std::to_string(c.ulam_n) +
                      (c.suspension ? "_nu" + std::to_string(c.nu) : "") + ".bin");
  bool cached = false;
  if (c.use_cache) {
    if (auto loaded = ulam_cache_load(cache_file)) {
      op = std::move(*loaded);
      cached = true;
    }
  }
  if (!cached) {
    if (c.suspension) {
      op = build_ulam_suspension(system, c.ulam_n, c.nu);
    } else if (c.system == "doubling") {
      op = build_ulam(doubling_interval_map(), c.ulam_n);
    } else {
      // The Gibbs-Markov object for LSV is the induced first-return map.
      op = build_ulam(induced_lsv_interval_map(c.beta), c.ulam_n);
    }
    if (c.use_cache) ulam_cache_save(cache_file, op);
  }

  ObservableSpec v = observable_by_name(c.observable);
  GriddedFunction psi;
  if (c.suspension) {
    psi = time1_block_average(system, v, op.ny, op.nu);
  } else {
    psi = gridded_cell_average([&v](double y, double u) { return v.value(y, u); }, op.lo, op.hi,
                               op.ny, 1);
  }
  const std::vector<double> mass = invariant_mass(op, 1e-12);
  const double mean = mu_mean(psi, mass);
  for (double& x : psi.v) x -= mean;

  const Decomposition dec = solve_coboundary(psi, op, c.tol, c.max_terms);

  const auto echo = c.echo();
  {
    std::ofstream os(out_path(c, "decomposition.csv"), std::ios::trunc);
    write_config_header(os, echo);
    os << "cell,psi,m,chi,breve_w\n";
    for (std::size_t i = 0; i < dec.psi.v.size(); ++i) {
      os << i << "," << format_double(dec.psi.v[i]) << "," << format_double(dec.m.v[i]) << ","
         << format_double(dec.chi.v[i]) << "," << format_double(dec.breve_w.v[i]) << "\n";
    }
  }
  write_gridded_csv(out_path(c, "invariant_density.csv"), invariant_density(op, 1e-12),
                    echo);
  {
    std::ofstream os(out_path(c, "decomposition.json"), std::ios::trunc);
    write_config_header(os, echo);
    os << "{\"sigma2\": " << format_double(dec.sigma2) << ", \"chi_terms\": " << dec.chi_terms
       << ", \"residual_kernel\": " << format_double(dec.residual_kernel)
       << ", \"residual_reconstruction\": " << format_double(dec.residual_reconstruction)
       << ", \"residual_breve_mean\": " << format_double(dec.residual_breve_mean) << "}\n";
  }
  std::cout << "sigma2 = " << format_double(dec.sigma2) << "\n"
            << "chi_terms = " << dec.chi_terms << "\n"
            << "residual_kernel = " << format_double(dec.residual_kernel) << "\n"
            << "residual_reconstruction = " << format_double(dec.residual_reconstruction)
            << "\n"
            << "residual_breve_mean = " << format_double(dec.residual_breve_mean) << "\n";
  return 0;
}

int run_wq(const RunConfig& c) {
  DistanceRecord rec;
  rec.q = c.q;
  rec.seed = c.seed;
  if (c.metric == "sup") {
    const std::vector<PathSample> a = read_paths_csv(c.file_a);
    const std::vector<PathSample> b = read_paths_csv(c.file_b);
    rec.n_samples = static_cast<int>(a.size());
    rec.grid_m = a.empty() ? 0 : a.front().grid_m;
    if (c.solver == "entropic") {
      const EntropicResult r = wasserstein_entropic(std::span<const PathSample>(a),
                                                    std::span<const PathSample>(b), c.q,
                                                    c.epsilon);
      rec.estimate = r.distance;
      rec.solver = solver_name(TransportSolver::entropic);
      std::cout << "duality_gap = " << format_double(r.duality_gap) << "\n";
    } else {
      const TransportResult r = wasserstein_assignment(std::span<const PathSample>(a),
                                                       std::span<const PathSample>(b), c.q);
      rec.estimate = r.distance;
      rec.solver = solver_name(r.solver);
    }
  } else {
    const std::vector<double> a = read_values_csv(c.file_a);
    const std::vector<double> b = read_values_csv(c.file_b);
    rec.n_samples = static_cast<int>(a.size());
    if (c.solver == "sorted") {
      const TransportResult r =
          wasserstein_1d(std::span<const double>(a), std::span<const double>(b), c.q);
      rec.estimate = r.distance;
      rec.solver = solver_name(r.solver);
    } else if (c.solver == "entropic") {
      const EntropicResult r = wasserstein_entropic(std::span<const double>(a),
                                                    std::span<const double>(b), c.q, c.epsilon);
      rec.estimate = r.distance;
      rec.solver = solver_name(TransportSolver::entropic);
      std::cout << "duality_gap = " << format_double(r.duality_gap) << "\n";
    } else {
      const TransportResult r = wasserstein_assignment(std::span<const double>(a),
                                                       std::span<const double>(b), c.q);
      rec.estimate = r.distance;
      rec.solver = solver_name(r.solver);
    }
  }
  write_distance_csv(out_path(c, "wq.csv"), {rec}, c.echo());
  std::cout << "W_" << c.q << " = " << format_double(rec.estimate) << "\n";
  return 0;
}

int run_rates(const RunConfig& c) {
  ExperimentPlan plan;
  plan.system = c.system;
  plan.beta = c.beta;
  plan.roof = c.roof;
  plan.observable = c.observable;
  plan.q = c.q;
  plan.n_values = c.n_grid;
  plan.samples_per_n = c.samples;
  plan.grid_m = c.grid_m;
  plan.ulam_n = c.ulam_n;
  plan.burn_in = c.burn_in;
  plan.bootstrap = c.bootstrap;
  plan.floor_reps = c.floor_reps;
  plan.center_budget = c.center_budget;
  plan.gk_blocks = c.gk_blocks;
  plan.threads = c.threads;
  plan.seed = c.seed;

  const RateTable table = run_rate_experiment(plan);
  const auto echo = c.echo();
  write_rate_table_csv(out_path(c, "rate_table.csv"), table, echo);
  for (const RateRow& r : table.rows) {
    std::cout << "n = " << r.n << "  W_" << r.q << " = " << format_double(r.estimate)
              << "  stderr = " << format_double(r.stderr_boot)
              << "  floor = " << format_double(r.floor) << "\n";
  }
  const RateFit fit = fit_rate(table, fit_mode_from_name(c.gamma_mode));
  write_rate_fit_json(out_path(c, "rate_fit.json"), fit, echo);
  std::cout << "alpha = " << format_double(fit.alpha) << "  logC = " << format_double(fit.logC)
            << "  gamma = " << format_double(fit.gamma) << "  r2 = " << format_double(fit.r2)
            << "  rows_used = " << fit.rows_used << "\n";
  return 0;
}

}  // namespace

int dispatch(const RunConfig& c) {
  if (c.subcommand == "simulate") return run_simulate(c);
  if (c.subcommand == "decompose") return run_decompose(c);
  if (c.subcommand == "wq") return run_wq(c);
  if (c.subcommand == "rates") return run_rates(c);
  throw UsageError("unknown subcommand '" + c.subcommand + "'");
}

}  // namespace wasserflow
