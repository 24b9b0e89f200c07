#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wasserflow/rates.hpp"
#include "wasserflow/transport.hpp"
#include "wasserflow/ulam.hpp"

namespace py = pybind11;
using namespace wasserflow;

namespace {

SuspensionSystem make_system(const std::string& name, double beta, const std::string& roof) {
  const Roof h = roof == "linear" ? Roof::one_plus_y() : Roof::constant_one();
  if (name == "doubling") return SuspensionSystem::doubling(h);
  if (name == "lsv") return SuspensionSystem::lsv(beta, h);
  if (name == "lsv_induced") return SuspensionSystem::lsv_induced(beta, h);
  throw UsageError("unknown system '" + name + "'");
}

std::vector<PathSample> paths_from_array(const py::array_t<double>& arr) {
  if (arr.ndim() != 2 || arr.shape(1) < 2) {
    throw UsageError("expected a 2D array of shape (samples, grid_m + 1)");
  }
  const int m = static_cast<int>(arr.shape(1)) - 1;
  std::vector<PathSample> out(static_cast<std::size_t>(arr.shape(0)));
  auto view = arr.unchecked<2>();
  for (py::ssize_t s = 0; s < arr.shape(0); ++s) {
    out[s] = PathSample::zeros(m);
    for (py::ssize_t k = 0; k <= m; ++k) out[s].values[k] = view(s, k);
  }
  return out;
}

py::array_t<double> array_from_paths(const std::vector<PathSample>& paths) {
  const py::ssize_t rows = static_cast<py::ssize_t>(paths.size());
  const py::ssize_t cols = rows ? static_cast<py::ssize_t>(paths[0].values.size()) : 0;
  py::array_t<double> arr({rows, cols});
  auto view = arr.mutable_unchecked<2>();
  for (py::ssize_t s = 0; s < rows; ++s) {
    for (py::ssize_t k = 0; k < cols; ++k) view(s, k) = paths[s].values[k];
  }
  return arr;
}

py::dict fit_to_dict(const RateFit& fit) {
  py::dict d;
  d["alpha"] = fit.alpha;
  d["logC"] = fit.logC;
  d["gamma"] = fit.gamma;
  d["r2"] = fit.r2;
  d["mode"] = fit_mode_name(fit.mode);
  d["rows_used"] = fit.rows_used;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Suspension-semiflow path processes and empirical Wasserstein rates";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception<SizeCapError>(m, "SizeCapError", PyExc_RuntimeError);

  m.def("lsv_step", &lsv_step, py::arg("x"), py::arg("beta"),
        "One step of the intermittent LSV map.");
  m.def("doubling_step", &doubling_step, py::arg("x"), "One step of x -> 2x mod 1.");
  m.def(
      "induced_step",
      [](double y, double beta) {
        const InducedStep r = induced_step(y, beta);
        return py::make_tuple(r.y, r.return_time);
      },
      py::arg("y"), py::arg("beta"),
      "First return to Y = [1/2, 1]: (F(y), return time).");

  m.def("omega", &omega_modulus, py::arg("q"), py::arg("t"),
        "Modulus (t * ell(t))^q with the logarithmic factor ell.");
  m.def("theoretical_rate", &theoretical_rate, py::arg("p"), py::arg("n"),
        "n^{-1/2+1/p} sqrt(log n) for 2 < p < 4, saturating at n^{-1/4} for p >= 4.");

  m.def(
      "wasserstein_1d",
      [](const std::vector<double>& a, const std::vector<double>& b, double q) {
        const TransportResult r = wasserstein_1d(a, b, q);
        return py::make_tuple(r.distance, r.pairing);
      },
      py::arg("a"), py::arg("b"), py::arg("q") = 1.0,
      "Exact q-Wasserstein between equal-size 1D samples (sorted coupling).");

  m.def(
      "wasserstein_assignment",
      [](py::object a, py::object b, double q) {
        if (py::isinstance<py::array>(a) &&
            py::cast<py::array>(a).ndim() == 2) {
          const auto pa = paths_from_array(py::cast<py::array_t<double>>(a));
          const auto pb = paths_from_array(py::cast<py::array_t<double>>(b));
          const TransportResult r = wasserstein_assignment(
              std::span<const PathSample>(pa), std::span<const PathSample>(pb), q);
          return py::make_tuple(r.distance, r.pairing);
        }
        const auto va = py::cast<std::vector<double>>(a);
        const auto vb = py::cast<std::vector<double>>(b);
        const TransportResult r = wasserstein_assignment(std::span<const double>(va),
                                                         std::span<const double>(vb), q);
        return py::make_tuple(r.distance, r.pairing);
      },
      py::arg("a"), py::arg("b"), py::arg("q") = 1.0,
      "Exact empirical q-Wasserstein. 1D lists use |x - y|; 2D arrays of path "
      "values (samples x grid points) use the grid sup metric.");

  m.def(
      "wasserstein_entropic",
      [](py::object a, py::object b, double q, double epsilon, int iterations) {
        if (py::isinstance<py::array>(a) &&
            py::cast<py::array>(a).ndim() == 2) {
          const auto pa = paths_from_array(py::cast<py::array_t<double>>(a));
          const auto pb = paths_from_array(py::cast<py::array_t<double>>(b));
          const EntropicResult r =
              wasserstein_entropic(std::span<const PathSample>(pa),
                                   std::span<const PathSample>(pb), q, epsilon, iterations);
          return py::make_tuple(r.distance, r.duality_gap);
        }
        const auto va = py::cast<std::vector<double>>(a);
        const auto vb = py::cast<std::vector<double>>(b);
        const EntropicResult r = wasserstein_entropic(
            std::span<const double>(va), std::span<const double>(vb), q, epsilon, iterations);
        return py::make_tuple(r.distance, r.duality_gap);
      },
      py::arg("a"), py::arg("b"), py::arg("q") = 1.0, py::arg("epsilon") = 0.01,
      py::arg("iterations") = 2000,
      "Sinkhorn estimate (upper-biased) and its duality gap.");

  m.def(
      "sample_brownian",
      [](double sigma, int grid_m, std::uint64_t seed) {
        RngStream rng(derive_key({seed, 0xB0ULL}));
        return array_from_paths({sample_brownian(sigma, grid_m, rng)});
      },
      py::arg("sigma"), py::arg("grid_m"), py::arg("seed"),
      "One Brownian path with variance sigma^2 on the uniform grid.");

  m.def(
      "holder_modulus_statistic",
      [](const std::vector<double>& values) {
        PathSample p;
        p.grid_m = static_cast<int>(values.size()) - 1;
        p.values = values;
        return holder_modulus_statistic(p);
      },
      py::arg("values"),
      "max over grid pairs of |B(t) - B(s)| / omega_{1/2}(t - s).");

  m.def(
      "wn_paths",
      [](const std::string& system, double beta, const std::string& roof,
         const std::string& observable, double n, int grid_m, int count, int burn_in,
         std::uint64_t seed) {
        const SuspensionSystem sys = make_system(system, beta, roof);
        ObservableSpec v = observable_by_name(observable);
        v = center_observable(v, sys, 1e6, derive_key({seed, 0xCEULL}));
        std::vector<PathSample> out;
        for (int k = 0; k < count; ++k) {
          const FlowState s0 = sample_initial_states(
              sys, 1, burn_in, derive_key({seed, 0x11ULL, 0ULL, (std::uint64_t)k}))[0];
          out.push_back(wn_path(sys, v, n, grid_m, s0));
        }
        return array_from_paths(out);
      },
      py::arg("system"), py::arg("beta"), py::arg("roof"), py::arg("observable"),
      py::arg("n"), py::arg("grid_m"), py::arg("count"), py::arg("burn_in") = 1000,
      py::arg("seed") = 0,
      "Sample W_n paths from (approximately) stationary initial states.");

  m.def(
      "decompose",
      [](const std::string& system, double beta, const std::string& observable, int ulam_n,
         bool suspension, int nu, double tol) {
        py::dict d;
        UlamOperator op;
        GriddedFunction psi;
        const ObservableSpec v = observable_by_name(observable);
        if (suspension) {
          const SuspensionSystem sys = make_system(system, beta, "constant");
          op = build_ulam_suspension(sys, ulam_n, nu);
          psi = time1_block_average(sys, v, op.ny, op.nu);
        } else {
          IntervalMap map = system == "doubling" ? doubling_interval_map()
                                                 : induced_lsv_interval_map(beta);
          op = build_ulam(map, ulam_n);
          psi = gridded_cell_average([&v](double y, double u) { return v.value(y, u); }, op.lo,
                                     op.hi, op.ny, 1);
        }
        const std::vector<double> mass = invariant_mass(op, 1e-12);
        const double mean = mu_mean(psi, mass);
        for (double& x : psi.v) x -= mean;
        const Decomposition dec = solve_coboundary(psi, op, tol);
        d["sigma2"] = dec.sigma2;
        d["chi_terms"] = dec.chi_terms;
        d["residual_kernel"] = dec.residual_kernel;
        d["residual_reconstruction"] = dec.residual_reconstruction;
        d["residual_breve_mean"] = dec.residual_breve_mean;
        return d;
      },
      py::arg("system"), py::arg("beta") = 0.25, py::arg("observable") = "cos",
      py::arg("ulam_n") = 256, py::arg("suspension") = false, py::arg("nu") = 64,
      py::arg("tol") = 1e-9,
      "Martingale-coboundary decomposition summary (sigma^2 and residuals).");

  m.def(
      "fit_rate",
      [](const std::vector<double>& n, const std::vector<double>& estimate,
         const std::vector<double>& stderr_boot, const std::vector<double>& floor,
         const std::string& mode) {
        if (n.size() != estimate.size()) throw UsageError("fit_rate: length mismatch");
        RateTable t;
        for (std::size_t i = 0; i < n.size(); ++i) {
          RateRow r;
          r.n = n[i];
          r.estimate = estimate[i];
          r.stderr_boot = i < stderr_boot.size() ? stderr_boot[i] : 0.0;
          r.floor = i < floor.size() ? floor[i] : 0.0;
          t.rows.push_back(r);
        }
        return fit_to_dict(fit_rate(t, fit_mode_from_name(mode)));
      },
      py::arg("n"), py::arg("estimate"), py::arg("stderr") = std::vector<double>{},
      py::arg("floor") = std::vector<double>{}, py::arg("mode") = "half",
      "Weighted log-log fit of the decay exponent.");

  m.def(
      "run_rate_experiment",
      [](const std::string& system, double beta, const std::string& roof,
         const std::string& observable, double q, const std::vector<double>& n_values,
         int samples, int grid_m, int ulam_n, std::uint64_t seed, int threads) {
        ExperimentPlan plan;
        plan.system = system;
        plan.beta = beta;
        plan.roof = roof;
        plan.observable = observable;
        plan.q = q;
        plan.n_values = n_values;
        plan.samples_per_n = samples;
        plan.grid_m = grid_m;
        plan.ulam_n = ulam_n;
        plan.seed = seed;
        plan.threads = threads;
        const RateTable t = run_rate_experiment(plan);
        py::dict d;
        std::vector<double> ns, est, se, fl;
        for (const RateRow& r : t.rows) {
          ns.push_back(r.n);
          est.push_back(r.estimate);
          se.push_back(r.stderr_boot);
          fl.push_back(r.floor);
        }
        d["n"] = ns;
        d["estimate"] = est;
        d["stderr"] = se;
        d["floor"] = fl;
        d["sigma2"] = t.sigma2;
        return d;
      },
      py::arg("system"), py::arg("beta") = 0.0, py::arg("roof") = "constant",
      py::arg("observable") = "cos", py::arg("q") = 1.0,
      py::arg("n_values") = std::vector<double>{64, 128, 256}, py::arg("samples") = 64,
      py::arg("grid_m") = 16, py::arg("ulam_n") = 256, py::arg("seed") = 0,
      py::arg("threads") = 1,
      "Empirical q-Wasserstein distances to the Brownian reference per n.");

  m.attr("__version__") = "0.1.0";
}
