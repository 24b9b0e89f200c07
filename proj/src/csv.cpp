#include "wasserflow/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wasserflow/errors.hpp"

namespace wasserflow {

std::string format_double(double x) {
  char buf[64];
  // %.17g round-trips; trim to the shortest representation that still does.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == x) break;
  }
  return buf;
}

void write_config_header(std::ostream& os, const ConfigEcho& config) {
  for (const auto& [key, value] : config) {
    os << "# " << key << " = " << value << "\n";
  }
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw UsageError("cannot open output file: " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open input file: " + path);
  return is;
}

bool next_data_line(std::istream& is, std::string& line) {
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] != '#') return true;
  }
  return false;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw UsageError("malformed number in CSV: '" + s + "'");
  }
}

}  // namespace

void write_paths_csv(const std::string& path, const std::vector<PathSample>& samples,
                     const ConfigEcho& config) {
  std::ofstream os = open_out(path);
  write_config_header(os, config);
  const int m = samples.empty() ? 0 : samples.front().grid_m;
  os << "sample_id";
  for (int k = 0; k <= m; ++k) os << ",t" << k;
  os << "\n";
  for (std::size_t s = 0; s < samples.size(); ++s) {
    os << s;
    for (double v : samples[s].values) os << "," << format_double(v);
    os << "\n";
  }
}

std::vector<PathSample> read_paths_csv(const std::string& path) {
  std::ifstream is = open_in(path);
  std::string line;
  if (!next_data_line(is, line)) throw UsageError("empty paths file: " + path);
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "sample_id") {
    throw UsageError("paths file must have a 'sample_id,t0..tm' header: " + path);
  }
  const int m = static_cast<int>(header.size()) - 2;
  std::vector<PathSample> out;
  while (next_data_line(is, line)) {
    const auto cells = split_csv(line);
    if (static_cast<int>(cells.size()) != m + 2) {
      throw UsageError("paths file row has wrong arity: " + path);
    }
    PathSample p = PathSample::zeros(m);
    for (int k = 0; k <= m; ++k) p.values[k] = parse_double(cells[k + 1]);
    out.push_back(std::move(p));
  }
  if (out.empty()) throw UsageError("paths file has no samples: " + path);
  return out;
}

void write_path_csv(const std::string& path, const PathSample& sample,
                    const ConfigEcho& config) {
  std::ofstream os = open_out(path);
  write_config_header(os, config);
  os << "t,value\n";
  for (int k = 0; k <= sample.grid_m; ++k) {
    os << format_double(static_cast<double>(k) / sample.grid_m) << ","
       << format_double(sample.values[k]) << "\n";
  }
}

void write_values_csv(const std::string& path, const std::vector<double>& values,
                      const ConfigEcho& config) {
  std::ofstream os = open_out(path);
  write_config_header(os, config);
  os << "value\n";
  for (double v : values) os << format_double(v) << "\n";
}

std::vector<double> read_values_csv(const std::string& path) {
  std::ifstream is = open_in(path);
  std::string line;
  if (!next_data_line(is, line)) throw UsageError("empty values file: " + path);
  if (line != "value") throw UsageError("values file must have a 'value' header: " + path);
  std::vector<double> out;
  while (next_data_line(is, line)) out.push_back(parse_double(line));
  if (out.empty()) throw UsageError("values file has no rows: " + path);
  return out;
}

void write_rate_table_csv(const std::string& path, const RateTable& table,
                          const ConfigEcho& config) {
  std::ofstream os = open_out(path);
  write_config_header(os, config);
  os << "# sigma2 = " << format_double(table.sigma2) << "\n";
  os << "n,q,estimate,stderr,N,grid_m,solver,seed,floor\n";
  for (const RateRow& r : table.rows) {
    os << format_double(r.n) << "," << format_double(r.q) << "," << format_double(r.estimate)
       << "," << format_double(r.stderr_boot) << "," << r.samples << "," << r.grid_m << ","
       << r.solver << "," << r.seed << "," << format_double(r.floor) << "\n";
  }
}

void write_rate_fit_json(const std::string& path, const RateFit& fit,
                         const ConfigEcho& config) {
  std::ofstream os = open_out(path);
  write_config_header(os, config);
  os << "{\"alpha\": " << format_double(fit.alpha) << ", \"logC\": " << format_double(fit.logC)
     << ", \"gamma\": " << format_double(fit.gamma) << ", \"r2\": " << format_double(fit.r2)
     << ", \"mode\": \"" << fit_mode_name(fit.mode) << "\", \"rows_used\": " << fit.rows_used
     << "}\n";
}

void write_gridded_csv(const std::string& path, const GriddedFunction& f,
                       const ConfigEcho& config) {
  std::ofstream os = open_out(path);
  write_config_header(os, config);
  os << "cell,value\n";
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    os << i << "," << format_double(f.v[i]) << "\n";
  }
}

void write_distance_csv(const std::string& path, const std::vector<DistanceRecord>& rows,
                        const ConfigEcho& config) {
  std::ofstream os = open_out(path);
  write_config_header(os, config);
  os << "n,q,N_samples,grid_m,estimate,solver,seed\n";
  for (const DistanceRecord& r : rows) {
    os << format_double(r.n) << "," << format_double(r.q) << "," << r.n_samples << ","
       << r.grid_m << "," << format_double(r.estimate) << "," << r.solver << "," << r.seed
       << "\n";
  }
}

}  // namespace wasserflow
