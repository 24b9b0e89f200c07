#include "wasserflow/ulam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace wasserflow {

namespace {

// 8-point Gauss-Legendre on [0, 1]; weights sum to 1.
constexpr int kGaussN = 8;
constexpr double kGaussX[kGaussN] = {
    0.01985507175123188, 0.10166676129318664, 0.2372337950418355, 0.40828267875217505,
    0.59171732124782495, 0.7627662049581645,  0.89833323870681336, 0.98014492824876812};
constexpr double kGaussW[kGaussN] = {
    0.05061426814518813, 0.11119051722668724, 0.15685332293894364, 0.18134189168918099,
    0.18134189168918099, 0.15685332293894364, 0.11119051722668724, 0.05061426814518813};

}  // namespace

GriddedFunction GriddedFunction::zeros(int ny, int nu, double lo, double hi) {
  GriddedFunction f;
  f.ny = ny;
  f.nu = nu;
  f.lo = lo;
  f.hi = hi;
  f.v.assign(static_cast<std::size_t>(ny) * nu, 0.0);
  return f;
}

double GriddedFunction::eval(double y, double u) const {
  int iy = static_cast<int>((y - lo) / (hi - lo) * ny);
  iy = std::clamp(iy, 0, ny - 1);
  int ju = nu == 1 ? 0 : std::clamp(static_cast<int>(u * nu), 0, nu - 1);
  return at(iy, ju);
}

GriddedFunction UlamOperator::koopman(const GriddedFunction& f) const {
  GriddedFunction out = GriddedFunction::zeros(ny, nu, lo, hi);
  for (int ju = 0; ju < nu; ++ju) {
    const double* fr = f.v.data() + static_cast<std::size_t>(ju) * ny;
    double* orow = out.v.data() + static_cast<std::size_t>(ju) * ny;
    for (int i = 0; i < ny; ++i) {
      double acc = 0.0;
      for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        acc += w[k] * fr[col[k]];
      }
      orow[i] = acc;
    }
  }
  return out;
}

GriddedFunction UlamOperator::transfer(const GriddedFunction& f,
                                       std::span<const double> mass_y) const {
  GriddedFunction out = GriddedFunction::zeros(ny, nu, lo, hi);
  for (int ju = 0; ju < nu; ++ju) {
    const double* fr = f.v.data() + static_cast<std::size_t>(ju) * ny;
    double* orow = out.v.data() + static_cast<std::size_t>(ju) * ny;
    for (int i = 0; i < ny; ++i) {
      const double scale = mass_y[i] * fr[i];
      if (scale == 0.0) continue;
      for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        orow[col[k]] += w[k] * scale;
      }
    }
    for (int j = 0; j < ny; ++j) {
      orow[j] = mass_y[j] > 0.0 ? orow[j] / mass_y[j] : 0.0;
    }
  }
  return out;
}

UlamOperator build_ulam(const IntervalMap& map, int cells, int subsamples) {
  if (cells < 2) throw UsageError("build_ulam: need at least 2 cells");
  if (subsamples < 2 || (subsamples & (subsamples - 1)) != 0) {
    throw UsageError("build_ulam: subsamples must be a power of two >= 2");
  }
  UlamOperator op;
  op.map_name = map.name;
  op.ny = cells;
  op.nu = 1;
  op.lo = map.lo;
  op.hi = map.hi;
  op.row_ptr.assign(static_cast<std::size_t>(cells) + 1, 0);

  const double width = (map.hi - map.lo) / cells;
  std::vector<std::int32_t> cols;
  std::vector<double> weights;
  std::vector<int> counts(static_cast<std::size_t>(cells), 0);
  std::vector<std::int32_t> touched;
  for (int i = 0; i < cells; ++i) {
    touched.clear();
    for (int s = 0; s < subsamples; ++s) {
      const double x = map.lo + (i + (s + 0.5) / subsamples) * width;
      double y = map.step(x);
      int j = static_cast<int>((y - map.lo) / (map.hi - map.lo) * cells);
      j = std::clamp(j, 0, cells - 1);
      if (counts[j]++ == 0) touched.push_back(j);
    }
    std::sort(touched.begin(), touched.end());
    for (std::int32_t j : touched) {
      cols.push_back(j);
      weights.push_back(static_cast<double>(counts[j]) / subsamples);
      counts[j] = 0;
    }
    op.row_ptr[i + 1] = static_cast<std::int64_t>(cols.size());
  }
  op.col = std::move(cols);
  op.w = std::move(weights);
  return op;
}

UlamOperator build_ulam_suspension(const SuspensionSystem& system, int cells, int nu) {
  if (!system.constant_roof()) {
    throw UsageError("build_ulam_suspension: only constant-roof-1 systems have a gridded "
                     "time-1 operator; use the base-map decomposition otherwise");
  }
  IntervalMap base;
  switch (system.base) {
    case SuspensionSystem::Base::doubling:
      base = doubling_interval_map();
      break;
    case SuspensionSystem::Base::lsv:
      base = lsv_interval_map(system.beta);
      break;
    default:
      throw UsageError("build_ulam_suspension: unsupported base map");
  }
  UlamOperator op = build_ulam(base, cells);
  op.nu = nu <= 0 ? cells : nu;
  op.map_name = base.name + "+roof1";
  return op;
}

std::vector<double> invariant_mass(const UlamOperator& op, double tol, int max_iter) {
  if (!(tol > 0.0)) throw UsageError("invariant_mass: tol must be > 0");
  std::vector<double> mass(static_cast<std::size_t>(op.ny), 1.0 / op.ny);
  std::vector<double> next(static_cast<std::size_t>(op.ny));
  for (int iter = 0; iter < max_iter; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int i = 0; i < op.ny; ++i) {
      const double mi = mass[i];
      if (mi == 0.0) continue;
      for (std::int64_t k = op.row_ptr[i]; k < op.row_ptr[i + 1]; ++k) {
        next[op.col[k]] += op.w[k] * mi;
      }
    }
    double diff = 0.0;
    for (int j = 0; j < op.ny; ++j) diff += std::abs(next[j] - mass[j]);
    mass.swap(next);
    if (diff < tol) {
      // Renormalize away accumulated rounding.
      double total = 0.0;
      for (double m : mass) total += m;
      for (double& m : mass) m /= total;
      return mass;
    }
  }
  throw NumericalError("invariant_mass: power iteration did not converge in " +
                       std::to_string(max_iter) + " iterations");
}

GriddedFunction invariant_density(const UlamOperator& op, double tol) {
  const std::vector<double> mass = invariant_mass(op, tol);
  GriddedFunction d = GriddedFunction::zeros(op.ny, op.nu, op.lo, op.hi);
  const double width = (op.hi - op.lo) / op.ny;
  for (int ju = 0; ju < op.nu; ++ju) {
    for (int i = 0; i < op.ny; ++i) d.at(i, ju) = mass[i] / width;
  }
  return d;
}

double mu_mean(const GriddedFunction& f, std::span<const double> mass_y) {
  double acc = 0.0;
  for (int ju = 0; ju < f.nu; ++ju) {
    for (int i = 0; i < f.ny; ++i) acc += mass_y[i] * f.at(i, ju);
  }
  return acc / f.nu;
}

double mu_l1(const GriddedFunction& f, std::span<const double> mass_y) {
  double acc = 0.0;
  for (int ju = 0; ju < f.nu; ++ju) {
    for (int i = 0; i < f.ny; ++i) acc += mass_y[i] * std::abs(f.at(i, ju));
  }
  return acc / f.nu;
}

GriddedFunction gridded_cell_average(const std::function<double(double, double)>& f, double lo,
                                     double hi, int ny, int nu) {
  GriddedFunction out = GriddedFunction::zeros(ny, nu, lo, hi);
  const double width = (hi - lo) / ny;
  for (int ju = 0; ju < nu; ++ju) {
    for (int i = 0; i < ny; ++i) {
      double acc = 0.0;
      for (int a = 0; a < kGaussN; ++a) {
        const double y = lo + (i + kGaussX[a]) * width;
        if (nu == 1) {
          acc += kGaussW[a] * f(y, 0.0);
        } else {
          double inner = 0.0;
          for (int b = 0; b < kGaussN; ++b) {
            const double u = (ju + kGaussX[b]) / nu;
            inner += kGaussW[b] * f(y, u);
          }
          acc += kGaussW[a] * inner;
        }
      }
      out.at(i, ju) = acc;
    }
  }
  return out;
}

GriddedFunction time1_block_average(const SuspensionSystem& system, const ObservableSpec& v,
                                    int ny, int nu) {
  if (!system.constant_roof()) {
    throw UsageError("time1_block_average: requires a constant-roof-1 system");
  }
  const auto base_step = [&system](double y) {
    return system.base == SuspensionSystem::Base::doubling ? doubling_step(y)
                                                           : lsv_step(y, system.beta);
  };
  const auto psi_point = [&](double y, double u) {
    const double ty = base_step(y);
    if (!v.depends_on_height) {
      return (1.0 - u) * v.value(y, 0.0) + u * v.value(ty, 0.0);
    }
    double first = 0.0, second = 0.0;
    for (int b = 0; b < kGaussN; ++b) {
      first += kGaussW[b] * v.value(y, u + kGaussX[b] * (1.0 - u));
      second += kGaussW[b] * v.value(ty, kGaussX[b] * u);
    }
    return (1.0 - u) * first + u * second;
  };
  return gridded_cell_average(psi_point, 0.0, 1.0, ny, nu);
}

Decomposition solve_coboundary(const GriddedFunction& psi, const UlamOperator& op, double tol,
                               int max_terms) {
  if (!(tol > 0.0)) throw UsageError("solve_coboundary: tol must be > 0");
  if (psi.ny != op.ny || psi.nu != op.nu) {
    throw UsageError("solve_coboundary: psi grid does not match the operator grid");
  }
  Decomposition dec;
  dec.mass_y = invariant_mass(op, std::min(tol, 1e-12));
  if (std::abs(mu_mean(psi, dec.mass_y)) > 1e-8) {
    throw UsageError("solve_coboundary: psi must be mean-zero under the invariant density "
                     "(|mean| > 1e-8)");
  }
  dec.psi = psi;
  dec.chi = GriddedFunction::zeros(psi.ny, psi.nu, psi.lo, psi.hi);
  GriddedFunction term = psi;
  double prev_norm = mu_l1(psi, dec.mass_y) + 1.0;
  bool converged = false;
  double last_norm = 0.0;
  for (int k = 1; k <= max_terms; ++k) {
    term = op.transfer(term, dec.mass_y);
    const double norm = mu_l1(term, dec.mass_y);
    if (norm < tol) {
      converged = true;
      break;
    }
    if (k > 2 && norm > 4.0 * prev_norm) {
      throw NumericalError("solve_coboundary: series not decaying (term norms " +
                           std::to_string(prev_norm) + " -> " + std::to_string(norm) + ")");
    }
    for (std::size_t idx = 0; idx < dec.chi.v.size(); ++idx) dec.chi.v[idx] += term.v[idx];
    ++dec.chi_terms;
    last_norm = prev_norm;
    prev_norm = norm;
  }
  if (!converged) {
    throw NumericalError("solve_coboundary: series did not reach tol within " +
                         std::to_string(max_terms) + " terms (last norms " +
                         std::to_string(last_norm) + ", " + std::to_string(prev_norm) + ")");
  }

  const GriddedFunction chi_f1 = op.koopman(dec.chi);
  dec.m = psi;
  for (std::size_t idx = 0; idx < dec.m.v.size(); ++idx) {
    dec.m.v[idx] += dec.chi.v[idx] - chi_f1.v[idx];
  }

  // sigma^2 = int m^2 dmu.
  GriddedFunction m2 = dec.m;
  for (double& x : m2.v) x *= x;
  dec.sigma2 = mu_mean(m2, dec.mass_y);

  // breve_w = U1 L1 (m^2) - sigma^2; mean zero by the exact discrete duality.
  dec.breve_w = op.koopman(op.transfer(m2, dec.mass_y));
  for (double& x : dec.breve_w.v) x -= dec.sigma2;

  GriddedFunction recon = dec.psi;
  for (std::size_t idx = 0; idx < recon.v.size(); ++idx) {
    recon.v[idx] -= dec.m.v[idx] + chi_f1.v[idx] - dec.chi.v[idx];
  }
  dec.residual_reconstruction = mu_l1(recon, dec.mass_y);
  dec.residual_kernel = mu_l1(op.transfer(dec.m, dec.mass_y), dec.mass_y);
  dec.residual_breve_mean = std::abs(mu_mean(dec.breve_w, dec.mass_y));
  return dec;
}

VarianceProfile conditional_variance_profile(std::span<const FlowState> orbit,
                                             const Decomposition& dec) {
  const std::size_t n = orbit.size();
  if (n == 0) throw UsageError("conditional_variance_profile: empty orbit");
  if (!(dec.sigma2 > 0.0)) {
    throw UsageError("conditional_variance_profile: decomposition has sigma^2 <= 0");
  }
  VarianceProfile out;
  out.profile.resize(n);
  const double scale = 1.0 / (static_cast<double>(n) * dec.sigma2);
  double sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const FlowState& s = orbit[n - k];
    sum += dec.breve_w.eval(s.y, s.u);
    const double dev = scale * sum;
    out.profile[k - 1] = static_cast<double>(k) / n + dev;
    out.max_dev = std::max(out.max_dev, std::abs(dev));
  }
  return out;
}

namespace {
constexpr char kCacheMagic[8] = {'W', 'F', 'U', 'L', 'A', 'M', '0', '1'};

template <typename T>
void write_pod(std::ofstream& os, const T& x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof(T));
}
template <typename T>
bool read_pod(std::ifstream& is, T& x) {
  is.read(reinterpret_cast<char*>(&x), sizeof(T));
  return static_cast<bool>(is);
}
}  // namespace

void ulam_cache_save(const std::string& path, const UlamOperator& op) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw UsageError("ulam_cache_save: cannot open " + path);
  os.write(kCacheMagic, sizeof(kCacheMagic));
  const std::uint32_t name_len = static_cast<std::uint32_t>(op.map_name.size());
  write_pod(os, name_len);
  os.write(op.map_name.data(), name_len);
  write_pod(os, op.ny);
  write_pod(os, op.nu);
  write_pod(os, op.lo);
  write_pod(os, op.hi);
  const std::uint64_t nnz = op.col.size();
  write_pod(os, nnz);
  os.write(reinterpret_cast<const char*>(op.row_ptr.data()),
           static_cast<std::streamsize>(op.row_ptr.size() * sizeof(std::int64_t)));
  os.write(reinterpret_cast<const char*>(op.col.data()),
           static_cast<std::streamsize>(op.col.size() * sizeof(std::int32_t)));
  os.write(reinterpret_cast<const char*>(op.w.data()),
           static_cast<std::streamsize>(op.w.size() * sizeof(double)));
}

std::optional<UlamOperator> ulam_cache_load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0) return std::nullopt;
  UlamOperator op;
  std::uint32_t name_len = 0;
  if (!read_pod(is, name_len) || name_len > 4096) return std::nullopt;
  op.map_name.resize(name_len);
  is.read(op.map_name.data(), name_len);
  std::uint64_t nnz = 0;
  if (!read_pod(is, op.ny) || !read_pod(is, op.nu) || !read_pod(is, op.lo) ||
      !read_pod(is, op.hi) || !read_pod(is, nnz)) {
    return std::nullopt;
  }
  if (op.ny < 2 || op.nu < 1) return std::nullopt;
  op.row_ptr.resize(static_cast<std::size_t>(op.ny) + 1);
  op.col.resize(nnz);
  op.w.resize(nnz);
  is.read(reinterpret_cast<char*>(op.row_ptr.data()),
          static_cast<std::streamsize>(op.row_ptr.size() * sizeof(std::int64_t)));
  is.read(reinterpret_cast<char*>(op.col.data()),
          static_cast<std::streamsize>(nnz * sizeof(std::int32_t)));
  is.read(reinterpret_cast<char*>(op.w.data()),
          static_cast<std::streamsize>(nnz * sizeof(double)));
  if (!is) return std::nullopt;
  return op;
}

}  // namespace wasserflow
