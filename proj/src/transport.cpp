#include "wasserflow/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wasserflow/errors.hpp"

namespace wasserflow {

double omega_ell(double t) {
  if (t >= 1.0 / 3.0) return std::log(3.0);
  return -std::log(t);
}

double omega_modulus(double q, double t) {
  if (!(q > 0.0)) throw UsageError("omega_modulus: q must be > 0");
  if (t < 0.0) throw UsageError("omega_modulus: t must be >= 0");
  if (t == 0.0) return 0.0;
  return std::pow(t * omega_ell(t), q);
}

std::string solver_name(TransportSolver s) {
  switch (s) {
    case TransportSolver::sorted:
      return "sorted";
    case TransportSolver::assignment:
      return "assignment";
    case TransportSolver::brute_force:
      return "brute-force";
    case TransportSolver::entropic:
      return "entropic";
  }
  return "?";
}

TransportResult wasserstein_1d(std::span<const double> a, std::span<const double> b, double q) {
  if (a.size() != b.size()) throw UsageError("wasserstein_1d: sample sizes differ");
  if (a.empty()) throw UsageError("wasserstein_1d: empty samples");
  if (!(q >= 1.0)) throw UsageError("wasserstein_1d: q must be >= 1");
  const std::size_t n = a.size();
  std::vector<int> ia(n), ib(n);
  std::iota(ia.begin(), ia.end(), 0);
  std::iota(ib.begin(), ib.end(), 0);
  std::sort(ia.begin(), ia.end(), [&](int i, int j) { return a[i] < a[j]; });
  std::sort(ib.begin(), ib.end(), [&](int i, int j) { return b[i] < b[j]; });
  TransportResult res;
  res.solver = TransportSolver::sorted;
  res.pairing.resize(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    res.pairing[ia[k]] = ib[k];
    acc += std::pow(std::abs(a[ia[k]] - b[ib[k]]), q);
  }
  res.distance = std::pow(acc / static_cast<double>(n), 1.0 / q);
  return res;
}

double solve_assignment(std::span<const double> cost, int n, std::vector<int>& col_of_row) {
  // Shortest-augmenting-path assignment with dual variables (Jonker-Volgenant
  // style, the variant used by scipy's linear_sum_assignment).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n, 0.0), v(n, 0.0), shortest(n);
  std::vector<int> path(n, -1), row_of_col(n, -1), remaining(n);
  std::vector<char> in_sr(n), in_sc(n);
  col_of_row.assign(n, -1);

  for (int cur_row = 0; cur_row < n; ++cur_row) {
    double min_val = 0.0;
    int i = cur_row;
    int sink = -1;
    std::fill(in_sr.begin(), in_sr.end(), 0);
    std::fill(in_sc.begin(), in_sc.end(), 0);
    std::fill(shortest.begin(), shortest.end(), inf);
    int num_remaining = n;
    for (int j = 0; j < n; ++j) remaining[j] = j;

    while (sink == -1) {
      in_sr[i] = 1;
      int index = -1;
      double lowest = inf;
      const double* crow = cost.data() + static_cast<std::size_t>(i) * n;
      for (int it = 0; it < num_remaining; ++it) {
        const int j = remaining[it];
        const double r = min_val + crow[j] - u[i] - v[j];
        if (r < shortest[j]) {
          path[j] = i;
          shortest[j] = r;
        }
        if (shortest[j] < lowest ||
            (shortest[j] == lowest && index >= 0 && row_of_col[j] == -1)) {
          lowest = shortest[j];
          index = it;
        }
      }
      min_val = lowest;
      if (!(min_val < inf)) throw NumericalError("solve_assignment: non-finite cost matrix");
      const int j = remaining[index];
      if (row_of_col[j] == -1) {
        sink = j;
      } else {
        i = row_of_col[j];
        in_sc[j] = 1;
        remaining[index] = remaining[--num_remaining];
      }
    }

    u[cur_row] += min_val;
    for (int ip = 0; ip < n; ++ip) {
      if (in_sr[ip] && ip != cur_row) u[ip] += min_val - shortest[col_of_row[ip]];
    }
    for (int j = 0; j < n; ++j) {
      if (in_sc[j]) v[j] -= min_val - shortest[j];
    }

    int j = sink;
    while (true) {
      const int ip = path[j];
      row_of_col[j] = ip;
      std::swap(col_of_row[ip], j);
      if (ip == cur_row) break;
    }
  }

  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost[static_cast<std::size_t>(i) * n + col_of_row[i]];
  return total;
}

namespace {

template <typename Atom, typename Metric>
std::vector<double> cost_matrix(std::span<const Atom> a, std::span<const Atom> b, double q,
                                Metric metric) {
  const std::size_t n = a.size();
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cost[i * n + j] = std::pow(metric(a[i], b[j]), q);
    }
  }
  return cost;
}

template <typename Atom, typename Metric>
TransportResult assignment_impl(std::span<const Atom> a, std::span<const Atom> b, double q,
                                Metric metric) {
  if (a.size() != b.size()) throw UsageError("wasserstein_assignment: sample sizes differ");
  if (a.empty()) throw UsageError("wasserstein_assignment: empty samples");
  if (!(q >= 1.0)) throw UsageError("wasserstein_assignment: q must be >= 1");
  if (a.size() > kAssignmentCap) {
    throw SizeCapError("wasserstein_assignment: N > " + std::to_string(kAssignmentCap) +
                       "; use wasserstein_entropic for large samples");
  }
  const int n = static_cast<int>(a.size());
  const std::vector<double> cost = cost_matrix(a, b, q, metric);
  TransportResult res;
  res.solver = TransportSolver::assignment;
  const double total = solve_assignment(cost, n, res.pairing);
  res.distance = std::pow(total / n, 1.0 / q);
  return res;
}

template <typename Atom, typename Metric>
EntropicResult entropic_impl(std::span<const Atom> a, std::span<const Atom> b, double q,
                             double epsilon, int max_iterations, Metric metric) {
  if (a.size() != b.size()) throw UsageError("wasserstein_entropic: sample sizes differ");
  if (a.empty()) throw UsageError("wasserstein_entropic: empty samples");
  if (!(q >= 1.0)) throw UsageError("wasserstein_entropic: q must be >= 1");
  if (!(epsilon > 0.0)) throw UsageError("wasserstein_entropic: epsilon must be > 0");
  const int n = static_cast<int>(a.size());
  const std::vector<double> cost = cost_matrix(a, b, q, metric);

  double cmax = 0.0;
  for (double c : cost) cmax = std::max(cmax, c);
  if (cmax == 0.0) return {0.0, 0.0, 0};

  std::vector<double> f(n, 0.0), g(n, 0.0), buf(n);
  const double log_marg = -std::log(static_cast<double>(n));
  const auto softmin_rows = [&](double eps) {
    // f_i <- -eps * log sum_j exp((g_j - C_ij)/eps - log n)
    for (int i = 0; i < n; ++i) {
      const double* crow = cost.data() + static_cast<std::size_t>(i) * n;
      double best = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        buf[j] = (g[j] - crow[j]) / eps + log_marg;
        best = std::max(best, buf[j]);
      }
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += std::exp(buf[j] - best);
      f[i] = -eps * (best + std::log(s));
    }
  };
  const auto softmin_cols = [&](double eps) {
    for (int j = 0; j < n; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        buf[i] = (f[i] - cost[static_cast<std::size_t>(i) * n + j]) / eps + log_marg;
        best = std::max(best, buf[i]);
      }
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += std::exp(buf[i] - best);
      g[j] = -eps * (best + std::log(s));
    }
  };

  // Epsilon annealing from a coarse level down to the requested one.
  int iterations = 0;
  double marginal_err = std::numeric_limits<double>::infinity();
  std::vector<double> eps_levels;
  for (double e = std::max(epsilon, cmax / 4.0); e > epsilon * 1.000001; e /= 2.0) {
    eps_levels.push_back(e);
  }
  eps_levels.push_back(epsilon);
  std::vector<double> plan(static_cast<std::size_t>(n) * n);
  for (std::size_t li = 0; li < eps_levels.size(); ++li) {
    const double eps = eps_levels[li];
    const bool last = li + 1 == eps_levels.size();
    const int iters = last ? max_iterations : 30;
    for (int it = 0; it < iters; ++it) {
      softmin_rows(eps);
      softmin_cols(eps);
      ++iterations;
      if (!last) continue;
      // Relative row-marginal violation of the implied plan.
      marginal_err = 0.0;
      for (int i = 0; i < n; ++i) {
        const double* crow = cost.data() + static_cast<std::size_t>(i) * n;
        double rowsum = 0.0;
        for (int j = 0; j < n; ++j) {
          rowsum += std::exp((f[i] + g[j] - crow[j]) / eps) / (static_cast<double>(n) * n);
        }
        marginal_err = std::max(marginal_err, std::abs(rowsum * n - 1.0));
      }
      if (marginal_err < 1e-7) break;
    }
  }

  for (int i = 0; i < n; ++i) {
    const double* crow = cost.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      plan[static_cast<std::size_t>(i) * n + j] =
          std::exp((f[i] + g[j] - crow[j]) / epsilon) / (static_cast<double>(n) * n);
    }
  }

  // Round to a feasible plan (scale rows/cols down, then fill the deficit by
  // the outer product of the residual marginals).
  std::vector<double> row_sum(n, 0.0), col_sum(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) row_sum[i] += plan[static_cast<std::size_t>(i) * n + j];
  }
  for (int i = 0; i < n; ++i) {
    const double scale = std::min(1.0, (1.0 / n) / row_sum[i]);
    for (int j = 0; j < n; ++j) plan[static_cast<std::size_t>(i) * n + j] *= scale;
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col_sum[j] += plan[static_cast<std::size_t>(i) * n + j];
  }
  for (int j = 0; j < n; ++j) {
    const double scale = std::min(1.0, (1.0 / n) / col_sum[j]);
    for (int i = 0; i < n; ++i) plan[static_cast<std::size_t>(i) * n + j] *= scale;
  }
  std::vector<double> row_def(n, 0.0), col_def(n, 0.0);
  double total_def = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += plan[static_cast<std::size_t>(i) * n + j];
    row_def[i] = 1.0 / n - s;
    total_def += row_def[i];
  }
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += plan[static_cast<std::size_t>(i) * n + j];
    col_def[j] = 1.0 / n - s;
  }
  if (total_def > 0.0) {
    for (int i = 0; i < n; ++i) {
      if (row_def[i] <= 0.0) continue;
      for (int j = 0; j < n; ++j) {
        plan[static_cast<std::size_t>(i) * n + j] += row_def[i] * col_def[j] / total_def;
      }
    }
  }

  double primal = 0.0;
  for (std::size_t k = 0; k < plan.size(); ++k) primal += plan[k] * cost[k];

  // Dual certificate via the c-transform of g.
  double dual = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* crow = cost.data() + static_cast<std::size_t>(i) * n;
    double ft = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) ft = std::min(ft, crow[j] - g[j]);
    dual += ft / n;
  }
  for (int j = 0; j < n; ++j) dual += g[j] / n;

  EntropicResult res;
  res.distance = std::pow(std::max(primal, 0.0), 1.0 / q);
  res.duality_gap = primal - dual;
  res.iterations = iterations;
  if (marginal_err > 1e-3) {
    throw NumericalError("wasserstein_entropic: marginals did not converge (relative "
                         "violation " +
                         std::to_string(marginal_err) + ", duality gap " +
                         std::to_string(res.duality_gap) + ")");
  }
  return res;
}

double abs_metric(double x, double y) { return std::abs(x - y); }

}  // namespace

TransportResult wasserstein_assignment(std::span<const double> a, std::span<const double> b,
                                       double q) {
  return assignment_impl(a, b, q, abs_metric);
}

TransportResult wasserstein_assignment(std::span<const PathSample> a,
                                       std::span<const PathSample> b, double q) {
  return assignment_impl(a, b, q,
                         [](const PathSample& x, const PathSample& y) { return sup_distance(x, y); });
}

EntropicResult wasserstein_entropic(std::span<const double> a, std::span<const double> b,
                                    double q, double epsilon, int max_iterations) {
  return entropic_impl(a, b, q, epsilon, max_iterations, abs_metric);
}

EntropicResult wasserstein_entropic(std::span<const PathSample> a,
                                    std::span<const PathSample> b, double q, double epsilon,
                                    int max_iterations) {
  return entropic_impl(a, b, q, epsilon, max_iterations,
                       [](const PathSample& x, const PathSample& y) { return sup_distance(x, y); });
}

PathSample sample_brownian(double sigma, int grid_m, RngStream& rng) {
  if (!(sigma > 0.0)) throw UsageError("sample_brownian: sigma must be > 0");
  if (grid_m < 2) throw UsageError("sample_brownian: grid m must be >= 2");
  PathSample path = PathSample::zeros(grid_m);
  const double step_sd = sigma / std::sqrt(static_cast<double>(grid_m));
  for (int k = 1; k <= grid_m; ++k) {
    path.values[k] = path.values[k - 1] + step_sd * rng.next_gaussian();
  }
  return path;
}

double holder_modulus_statistic(const PathSample& path) {
  const int m = path.grid_m;
  if (m < 2) throw UsageError("holder_modulus_statistic: grid m must be >= 2");
  std::vector<double> wgap(static_cast<std::size_t>(m) + 1, 0.0);
  for (int k = 1; k <= m; ++k) wgap[k] = omega_modulus(0.5, static_cast<double>(k) / m);
  double max_abs = 0.0;
  for (double v : path.values) max_abs = std::max(max_abs, std::abs(v));
  double best = 0.0;
  for (int k = 1; k <= m; ++k) {
    // omega is increasing, so once even the coarsest bound cannot beat the
    // current best, no larger gap can either.
    if (2.0 * max_abs / wgap[k] <= best) break;
    for (int i = 0; i + k <= m; ++i) {
      const double r = std::abs(path.values[i + k] - path.values[i]) / wgap[k];
      best = std::max(best, r);
    }
  }
  return best;
}

}  // namespace wasserflow
