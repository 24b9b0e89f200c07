#include "wasserflow/config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace wasserflow {

namespace {

const std::set<std::string> kSubcommands = {"simulate", "decompose", "wq", "rates"};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::vector<std::array<std::string, 3>> read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("config file not found: " + path);
  std::vector<std::array<std::string, 3>> entries;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw UsageError("config file " + path + ":" + std::to_string(lineno) +
                         ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config file " + path + ":" + std::to_string(lineno) +
                       ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw UsageError("config file " + path + ":" + std::to_string(lineno) + ": empty key");
    }
    entries.push_back({section, key, value});
  }
  return entries;
}

namespace {

// All options take the last occurrence, so file-derived tokens inserted ahead
// of the user's flags are overridden by them.
CLI::Option* last(CLI::Option* opt) {
  opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  return opt;
}

void add_common(CLI::App* cmd, RunConfig& c) {
  last(cmd->add_option("--config", "flat key = value config file"));
  last(cmd->add_option("--seed", c.seed, "RNG seed (mandatory, no wall-clock seeding)"))
      ->required();
  last(cmd->add_option("--out", c.out_dir, "output directory"));
  last(cmd->add_option("--threads", c.threads, "worker thread cap"));
}

void add_system(CLI::App* cmd, RunConfig& c) {
  last(cmd->add_option("--system", c.system, "doubling | lsv"));
  last(cmd->add_option("--beta", c.beta, "LSV parameter, 0 < beta < 1/2"));
  last(cmd->add_option("--roof", c.roof, "constant | linear (h = 1 + y)"));
  last(cmd->add_option("--observable", c.observable, "cos | coordinate"));
}

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

void validate(RunConfig& c) {
  require(kSubcommands.count(c.subcommand) == 1, "missing subcommand");
  require(c.system == "doubling" || c.system == "lsv",
          "system: expected doubling or lsv, got '" + c.system + "'");
  if (c.system == "lsv") {
    require(c.beta > 0.0 && c.beta < 0.5, "beta: must satisfy 0 < beta < 1/2");
  }
  require(c.roof == "constant" || c.roof == "linear",
          "roof: expected constant or linear, got '" + c.roof + "'");
  require(c.observable == "cos" || c.observable == "coordinate" || c.observable == "y",
          "observable: expected cos or coordinate, got '" + c.observable + "'");
  require(c.threads >= 1, "threads: must be >= 1");
  if (c.subcommand == "simulate") {
    require(c.n >= 1.0, "n: must be >= 1");
    require(c.grid_m >= 1, "grid-m: must be >= 1");
    require(c.samples >= 1, "samples: must be >= 1");
    require(c.burn_in >= 0, "burn-in: must be >= 0");
    require(c.quad_step > 0.0, "quad-step: must be > 0");
    require(c.center_budget >= 1e4, "center-budget: must be >= 1e4");
  } else if (c.subcommand == "decompose") {
    require(c.ulam_n >= 16, "ulam-n: must be >= 16");
    require(c.nu >= 1, "nu: must be >= 1");
    require(c.tol > 0.0, "tol: must be > 0");
    require(c.max_terms >= 1, "max-terms: must be >= 1");
    if (c.suspension) {
      require(c.roof == "constant", "suspension: requires the constant roof");
    }
  } else if (c.subcommand == "wq") {
    require(!c.file_a.empty() && !c.file_b.empty(), "a/b: both sample files are required");
    require(c.q >= 1.0, "q: must be >= 1");
    require(c.metric == "sup" || c.metric == "abs",
            "metric: expected sup or abs, got '" + c.metric + "'");
    require(c.solver == "assignment" || c.solver == "sorted" || c.solver == "entropic",
            "solver: expected assignment, sorted or entropic");
    require(!(c.solver == "sorted" && c.metric == "sup"),
            "solver: sorted coupling applies to 1D (abs) data only");
    require(c.epsilon > 0.0, "epsilon: must be > 0");
  } else if (c.subcommand == "rates") {
    require(!c.n_grid.empty(), "n-grid: required (comma-separated list)");
    require(c.q >= 1.0, "q: must be >= 1");
    require(c.grid_m >= 2, "grid-m: must be >= 2");
    require(c.samples >= 1, "samples: must be >= 1");
    require(c.ulam_n >= 16, "ulam-n: must be >= 16");
    require(c.burn_in >= 0, "burn-in: must be >= 0");
    require(c.bootstrap >= 0, "bootstrap: must be >= 0");
    require(c.floor_reps >= 1, "floor-reps: must be >= 1");
    require(c.center_budget >= 1e4, "center-budget: must be >= 1e4");
    require(c.gamma_mode == "free" || c.gamma_mode == "half" || c.gamma_mode == "zero",
            "gamma: expected free, half or zero");
  }
}

}  // namespace

std::map<std::string, std::string> RunConfig::echo() const {
  std::map<std::string, std::string> e;
  e["subcommand"] = subcommand;
  e["seed"] = std::to_string(seed);
  e["out"] = out_dir;
  e["threads"] = std::to_string(threads);
  const auto put_system = [&] {
    e["system"] = system;
    if (system == "lsv") e["beta"] = std::to_string(beta);
    e["roof"] = roof;
    e["observable"] = observable;
  };
  if (subcommand == "simulate") {
    put_system();
    e["n"] = std::to_string(n);
    e["grid_m"] = std::to_string(grid_m);
    e["samples"] = std::to_string(samples);
    e["burn_in"] = std::to_string(burn_in);
    e["center_budget"] = std::to_string(center_budget);
    e["quad_step"] = std::to_string(quad_step);
  } else if (subcommand == "decompose") {
    put_system();
    e["ulam_n"] = std::to_string(ulam_n);
    e["nu"] = std::to_string(nu);
    e["suspension"] = suspension ? "true" : "false";
    e["tol"] = std::to_string(tol);
    e["max_terms"] = std::to_string(max_terms);
    e["cache"] = use_cache ? "true" : "false";
  } else if (subcommand == "wq") {
    e["a"] = file_a;
    e["b"] = file_b;
    e["q"] = std::to_string(q);
    e["metric"] = metric;
    e["solver"] = solver;
    if (solver == "entropic") e["epsilon"] = std::to_string(epsilon);
  } else if (subcommand == "rates") {
    put_system();
    std::ostringstream grid;
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (i) grid << ",";
      grid << n_grid[i];
    }
    e["n_grid"] = grid.str();
    e["q"] = std::to_string(q);
    e["samples"] = std::to_string(samples);
    e["grid_m"] = std::to_string(grid_m);
    e["ulam_n"] = std::to_string(ulam_n);
    e["burn_in"] = std::to_string(burn_in);
    e["bootstrap"] = std::to_string(bootstrap);
    e["floor_reps"] = std::to_string(floor_reps);
    e["center_budget"] = std::to_string(center_budget);
    e["gk_blocks"] = std::to_string(gk_blocks);
    e["gamma"] = gamma_mode;
  }
  return e;
}

RunConfig parse_config(int argc, const char* const* argv) {
  // Locate the subcommand and any --config file up front, then splice the
  // file-derived tokens in right after the subcommand so explicit flags win.
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string sub;
  std::size_t sub_idx = 0;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (kSubcommands.count(args[i])) {
      sub = args[i];
      sub_idx = i;
      break;
    }
  }
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (!config_path.empty() && !sub.empty()) {
    std::vector<std::string> spliced(args.begin(), args.begin() + sub_idx + 1);
    for (const auto& [section, key, value] : read_config_file(config_path)) {
      if (!section.empty() && section != sub) continue;  // other subcommand's block
      spliced.push_back("--" + key + "=" + value);
    }
    spliced.insert(spliced.end(), args.begin() + sub_idx + 1, args.end());
    args = std::move(spliced);
  }

  RunConfig c;
  if (const char* env_out = std::getenv("WASSERFLOW_OUT")) c.out_dir = env_out;

  CLI::App app{"wasserflow: path processes of suspension semiflows and their empirical "
               "Wasserstein convergence rates"};
  app.require_subcommand(1);
  // Also accepted ahead of the subcommand; the file itself was already read
  // during the pre-scan above.
  last(app.add_option("--config", "flat key = value config file"));

  CLI::App* sim = app.add_subcommand("simulate", "emit W_n path samples as CSV");
  add_common(sim, c);
  add_system(sim, c);
  last(sim->add_option("--n", c.n, "flow-time horizon n"));
  last(sim->add_option("--grid-m", c.grid_m, "path grid resolution"));
  last(sim->add_option("--samples", c.samples, "number of independent paths"));
  last(sim->add_option("--burn-in", c.burn_in, "base-map burn-in iterations"));
  last(sim->add_option("--center-budget", c.center_budget, "flow units for centering"));
  last(sim->add_option("--quad-step", c.quad_step, "quadrature step (flow units)"));

  CLI::App* dec = app.add_subcommand("decompose", "martingale-coboundary decomposition");
  add_common(dec, c);
  add_system(dec, c);
  last(dec->add_option("--ulam-n", c.ulam_n, "Ulam grid cells (>= 16)"));
  last(dec->add_option("--nu", c.nu, "height rows for --suspension"));
  last(dec->add_flag("--suspension", c.suspension, "decompose the time-1 suspension map"));
  last(dec->add_option("--tol", c.tol, "series truncation tolerance"));
  last(dec->add_option("--max-terms", c.max_terms, "series term cap"));
  last(dec->add_flag("--cache", c.use_cache, "reuse/write the binary operator cache"));

  CLI::App* wq = app.add_subcommand("wq", "one empirical Wasserstein distance");
  add_common(wq, c);
  last(wq->add_option("--a", c.file_a, "first sample file"));
  last(wq->add_option("--b", c.file_b, "second sample file"));
  last(wq->add_option("--q", c.q, "Wasserstein order q >= 1"));
  last(wq->add_option("--metric", c.metric, "sup | abs"));
  last(wq->add_option("--solver", c.solver, "assignment | sorted | entropic"));
  last(wq->add_option("--epsilon", c.epsilon, "entropic regularization"));

  CLI::App* rates = app.add_subcommand("rates", "rate table + exponent fit");
  add_common(rates, c);
  add_system(rates, c);
  std::string n_grid_text;
  last(rates->add_option("--n-grid", n_grid_text, "comma-separated n values (geometric)"));
  last(rates->add_option("--q", c.q, "Wasserstein order q >= 1"));
  last(rates->add_option("--samples", c.samples, "paths per cloud (N)"));
  last(rates->add_option("--grid-m", c.grid_m, "path grid resolution"));
  last(rates->add_option("--ulam-n", c.ulam_n, "Ulam cells for the sigma^2 source"));
  last(rates->add_option("--burn-in", c.burn_in, "burn-in iterations"));
  last(rates->add_option("--bootstrap", c.bootstrap, "bootstrap resamples"));
  last(rates->add_option("--floor-reps", c.floor_reps, "self-distance floor repetitions"));
  last(rates->add_option("--center-budget", c.center_budget, "flow units for centering"));
  last(rates->add_option("--gk-blocks", c.gk_blocks, "Green-Kubo blocks (nonconstant roof)"));
  last(rates->add_option("--gamma", c.gamma_mode, "log-log correction: free | half | zero"));

  std::vector<const char*> cargs;
  cargs.push_back("wasserflow");
  for (const std::string& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp&) {
    std::string text = app.help();
    for (CLI::App* s : {sim, dec, wq, rates}) {
      if (s->get_help_ptr() != nullptr && s->get_help_ptr()->count() > 0) text = s->help();
    }
    throw HelpRequested{text};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  for (CLI::App* s : {sim, dec, wq, rates}) {
    if (s->parsed()) c.subcommand = s->get_name();
  }
  if (!n_grid_text.empty()) {
    std::stringstream ss(n_grid_text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        c.n_grid.push_back(std::stod(trim(tok)));
      } catch (const std::exception&) {
        throw UsageError("n-grid: malformed number '" + tok + "'");
      }
    }
  }
  validate(c);
  return c;
}

}  // namespace wasserflow
