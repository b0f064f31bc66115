#pragma once

// Monte Carlo CLT experiments: replicated fields, Phi_n vectors, marginal KS
// tests against N(0, Sigma-hat_ii), covariance matching and the
// variance-degeneracy scan.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "lmfield/config.hpp"
#include "lmfield/covariance.hpp"
#include "lmfield/errors.hpp"
#include "lmfield/fields.hpp"
#include "lmfield/functionals.hpp"
#include "lmfield/geometry.hpp"
#include "lmfield/marginal.hpp"
#include "lmfield/rng.hpp"
#include "lmfield/voronoi.hpp"

namespace lmf {

// Seed streams under the master seed.
inline constexpr std::uint64_t kReplicateStream = 0;
inline constexpr std::uint64_t kIndependentStream = 1;
inline constexpr std::uint64_t kMeanStream = 2;

/// Seed of replicate r at window side L:
///   derive_seed(derive_seed(master, bits(L), stream), r).
inline Seed replicate_seed(Seed master, double L, std::size_t r,
                           std::uint64_t stream = kReplicateStream) {
  const Seed base = derive_seed(master, std::bit_cast<std::uint64_t>(L), stream);
  return derive_seed(base, r);
}

// ---------------------------------------------------------------------------
// Parallel replicate runner
// ---------------------------------------------------------------------------

/// Calls job(i) for i in [0, n) on up to `threads` workers. Results are
/// written by index by the job itself, so the outcome does not depend on the
/// scheduling. The failure with the smallest index is rethrown, prefixed with
/// the replicate index.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t)>& job) {
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t fail_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr fail_ptr;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard lock(mu);
        if (i > fail_index) return;
      }
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < fail_index) fail_index = i, fail_ptr = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (!fail_ptr) return;
  try {
    std::rethrow_exception(fail_ptr);
  } catch (const DegeneracyError&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.kind(), "replicate " + std::to_string(fail_index) + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Generator dispatch
// ---------------------------------------------------------------------------

inline Window experiment_window(const GeneratorSpec& g, double L) { return Window::cube(g.dim, L); }

inline FieldRealization generate_field(const GeneratorSpec& g, const Window& w, double h,
                                       Seed seed) {
  switch (g.kind) {
    case GeneratorKind::levy: return generate_levy_field(g.family, g.base_side, w, h, seed);
    case GeneratorKind::gauss_ma: return generate_gaussian_ma_field(g.base_side, w, h, seed);
    case GeneratorKind::voronoi: return generate_voronoi_field(w, g.voronoi, h, seed).first;
  }
  fail(ErrorKind::configuration, "unknown generator");
}

/// M replicates at window side L, generated in parallel.
inline std::vector<FieldRealization> simulate_replicates(const ExperimentConfig& c, double L,
                                                         std::size_t M,
                                                         std::uint64_t stream = kReplicateStream) {
  const Window w = experiment_window(c.generator, L);
  std::vector<FieldRealization> reps(M);
  parallel_for(M, c.threads, [&](std::size_t r) {
    reps[r] = generate_field(c.generator, w, c.spacing, replicate_seed(c.master_seed, L, r, stream));
  });
  return reps;
}

// ---------------------------------------------------------------------------
// Means of f(X(0))
// ---------------------------------------------------------------------------

struct ResolvedMeans {
  std::vector<double> values;
  bool estimated = false;
};

/// Exact E f(X(0)): int_0^1 f for the Voronoi field, E f(Psi_{side^d}) for the
/// box-sum fields.
inline double analytic_mean(const GeneratorSpec& g, const FuncSpec& f) {
  if (const auto* p = std::get_if<fn::PiecewiseLinear>(&f.kind); p && p->values.size() == 1)
    return p->values[0];
  if (g.kind == GeneratorKind::voronoi) return uniform_mean(f);
  return expectation(g.site_law(), [&](double x) { return f(x); });
}

/// Plug-in means from an independent sample of 10 M replicates at window
/// side L, accumulated per replicate without keeping the fields.
inline std::vector<double> estimated_means(const ExperimentConfig& c, double L,
                                           std::span<const FuncSpec> funcs) {
  const std::size_t n_reps = 10 * std::max<std::size_t>(c.replicates, 1);
  const Window w = experiment_window(c.generator, L);
  std::vector<double> sums(n_reps * funcs.size(), 0.0);
  std::vector<std::size_t> sites(n_reps, 0);
  parallel_for(n_reps, c.threads, [&](std::size_t r) {
    const auto field =
        generate_field(c.generator, w, c.spacing, replicate_seed(c.master_seed, L, r, kMeanStream));
    for (std::size_t i = 0; i < funcs.size(); ++i) {
      double s = 0.0;
      for (double v : field.values) s += funcs[i](v);
      sums[r * funcs.size() + i] = s;
    }
    sites[r] = field.values.size();
  });
  std::size_t n = 0;
  for (auto k : sites) n += k;
  std::vector<double> out(funcs.size(), 0.0);
  for (std::size_t r = 0; r < n_reps; ++r)
    for (std::size_t i = 0; i < funcs.size(); ++i) out[i] += sums[r * funcs.size() + i];
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

inline ResolvedMeans resolve_means(const ExperimentConfig& c, double L) {
  ResolvedMeans m;
  if (c.mean_policy == MeanPolicy::estimated) {
    m.values = estimated_means(c, L, c.functions);
    m.estimated = true;
    return m;
  }
  for (const auto& f : c.functions) m.values.push_back(analytic_mean(c.generator, f));
  return m;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

struct KsResult {
  double distance = 0.0;
  double p_value = 1.0;
};

/// P(K > x) for the Kolmogorov distribution.
inline double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.18) {
    // Small-x form: sqrt(2 pi)/x sum exp(-(2k-1)^2 pi^2 / (8 x^2)).
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * x * x);
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) s += std::exp(-static_cast<double>((2 * k - 1) * (2 * k - 1)) * c);
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

/// One-sample KS distance of `samples` against N(0, variance), with the
/// asymptotic p-value at sqrt(n) + 0.12 + 0.11 / sqrt(n) scaling.
inline KsResult ks_normality(std::span<const double> samples, double variance) {
  require(samples.size() >= 30, ErrorKind::sample_size, "KS test needs at least 30 samples");
  require(variance > 0.0 && std::isfinite(variance), ErrorKind::degenerate_input,
          "KS reference variance must be positive");
  std::vector<double> x(samples.begin(), samples.end());
  for (double v : x) require(std::isfinite(v), ErrorKind::degenerate_input, "non-finite sample");
  std::sort(x.begin(), x.end());
  const double sd = std::sqrt(variance);
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = 0.5 * std::erfc(-x[i] / (sd * std::numbers::sqrt2));
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  const double rn = std::sqrt(n);
  return {d, kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d)};
}

// ---------------------------------------------------------------------------
// CLT experiment
// ---------------------------------------------------------------------------

struct KsCoordinate {
  double distance = std::numeric_limits<double>::quiet_NaN();
  double p_value = std::numeric_limits<double>::quiet_NaN();
  /// Reference variance sigma-hat_ii used for the test.
  double variance = 0.0;
  /// True when the coordinate has no spread or sigma-hat_ii <= 0; the test is
  /// then skipped.
  bool degenerate = false;
  /// KS rejects at level 0.01.
  bool rejects = false;
};

struct CltReport {
  double window = 0.0;
  int dim = 1;
  std::size_t replicates = 0;
  std::size_t functions = 0;
  /// Row-major M x s matrix of Phi_n(f_i).
  std::vector<double> replicate_matrix;
  std::vector<double> means;
  bool means_estimated = false;
  std::vector<KsCoordinate> ks;
  SigmaMatrix sigma;
  /// Row-major s x s sample covariance of the replicate matrix.
  std::vector<double> empirical_cov;
  /// max_ij |empirical cov - sigma-hat|.
  double cov_discrepancy = 0.0;
  /// max_ij |empirical cov - sigma-hat| / combined SE.
  double cov_discrepancy_z = 0.0;
  std::vector<Seed> seeds;
  Seed master_seed = 0;

  double phi(std::size_t r, std::size_t i) const { return replicate_matrix[r * functions + i]; }

  std::vector<double> column(std::size_t i) const {
    std::vector<double> c(replicates);
    for (std::size_t r = 0; r < replicates; ++r) c[r] = phi(r, i);
    return c;
  }
};

/// Sample covariance (divisor M - 1) of the columns of a row-major M x s matrix.
inline std::vector<double> sample_covariance(std::span<const double> m, std::size_t M,
                                             std::size_t s) {
  std::vector<double> mean(s, 0.0), cov(s * s, 0.0);
  for (std::size_t r = 0; r < M; ++r)
    for (std::size_t i = 0; i < s; ++i) mean[i] += m[r * s + i];
  for (double& v : mean) v /= static_cast<double>(M);
  for (std::size_t r = 0; r < M; ++r)
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j)
        cov[i * s + j] += (m[r * s + i] - mean[i]) * (m[r * s + j] - mean[j]);
  for (double& v : cov) v /= static_cast<double>(M - 1);
  return cov;
}

/// Runs M = config.replicates replicates at window side L and assembles the
/// report. Sigma-hat is estimated from the same replicates with the
/// configured method.
inline CltReport run_clt_experiment(const ExperimentConfig& c, double L) {
  require(L > 0.0, ErrorKind::configuration, "window side must be positive");
  require(c.replicates >= 2, ErrorKind::configuration, "need at least 2 replicates");
  const std::size_t M = c.replicates, s = c.functions.size();
  const ResolvedMeans means = resolve_means(c, L);
  const auto reps = simulate_replicates(c, L, M);

  CltReport rep;
  rep.window = L;
  rep.dim = c.generator.dim;
  rep.replicates = M;
  rep.functions = s;
  rep.means = means.values;
  rep.means_estimated = means.estimated;
  rep.master_seed = c.master_seed;
  rep.replicate_matrix.assign(M * s, 0.0);
  for (std::size_t r = 0; r < M; ++r) {
    rep.seeds.push_back(reps[r].seed);
    for (std::size_t i = 0; i < s; ++i)
      rep.replicate_matrix[r * s + i] = phi_n(reps[r], c.functions[i], means.values[i]);
  }
  for (double v : rep.replicate_matrix)
    require(std::isfinite(v), ErrorKind::sampling, "non-finite Phi_n value");

  rep.sigma = sigma_matrix(reps, c.functions, c.resolved_cov());
  rep.empirical_cov = sample_covariance(rep.replicate_matrix, M, s);

  for (std::size_t i = 0; i < s; ++i) {
    KsCoordinate k;
    k.variance = rep.sigma.value(i, i);
    const auto col = rep.column(i);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    k.degenerate = *lo == *hi || !(k.variance > 0.0) || M < 30;
    if (!k.degenerate) {
      const KsResult r = ks_normality(col, k.variance);
      k.distance = r.distance;
      k.p_value = r.p_value;
      k.rejects = r.p_value < 0.01;
    }
    rep.ks.push_back(k);
  }

  // Normal-theory SE of a sample covariance plus the SE of sigma-hat.
  const double Md = static_cast<double>(M);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j) {
      const double e = rep.empirical_cov[i * s + j];
      const double diff = std::abs(e - rep.sigma.value(i, j));
      const double vi = rep.empirical_cov[i * s + i], vj = rep.empirical_cov[j * s + j];
      const double se_emp2 = (vi * vj + e * e) / (Md - 1.0);
      const double se_hat = rep.sigma(i, j).se;
      const double se = std::sqrt(se_emp2 + (std::isfinite(se_hat) ? se_hat * se_hat : 0.0));
      rep.cov_discrepancy = std::max(rep.cov_discrepancy, diff);
      if (se > 0.0) rep.cov_discrepancy_z = std::max(rep.cov_discrepancy_z, diff / se);
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Degenerate-variance scan
// ---------------------------------------------------------------------------

struct ScanPoint {
  double window = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  /// SE of the variance estimate from the fourth central moment.
  double se = 0.0;
  std::vector<double> phi;
};

/// Mean, unbiased variance and moment-based SE of the variance.
inline ScanPoint summarize_phi(double L, std::vector<double> phi) {
  ScanPoint p;
  p.window = L;
  const double M = static_cast<double>(phi.size());
  p.mean = std::accumulate(phi.begin(), phi.end(), 0.0) / M;
  double m2 = 0.0, m4 = 0.0;
  for (double v : phi) {
    const double d = (v - p.mean) * (v - p.mean);
    m2 += d;
    m4 += d * d;
  }
  m2 /= M;
  m4 /= M;
  p.variance = m2 * M / (M - 1.0);
  p.se = std::sqrt(std::max(0.0, m4 - m2 * m2) / M);
  p.phi = std::move(phi);
  return p;
}

/// Var(Phi_L(f)) across config.replicates replicates for each L (f is the
/// first configured function). Fields are not kept, so large windows are
/// cheap in memory.
inline std::vector<ScanPoint> degenerate_variance_scan(const ExperimentConfig& c,
                                                       std::span<const double> sizes) {
  require(!sizes.empty(), ErrorKind::configuration, "no window sizes");
  for (std::size_t k = 1; k < sizes.size(); ++k)
    require(sizes[k] > sizes[k - 1], ErrorKind::configuration, "window sizes must increase");
  require(c.replicates >= 2, ErrorKind::configuration, "need at least 2 replicates");
  const FuncSpec& f = c.functions.front();
  std::vector<ScanPoint> out;
  for (double L : sizes) {
    const double mean_f = c.mean_policy == MeanPolicy::analytic
                              ? analytic_mean(c.generator, f)
                              : estimated_means(c, L, std::span(&f, 1)).front();
    const Window w = experiment_window(c.generator, L);
    std::vector<double> phi(c.replicates);
    parallel_for(c.replicates, c.threads, [&](std::size_t r) {
      const auto field =
          generate_field(c.generator, w, c.spacing, replicate_seed(c.master_seed, L, r));
      phi[r] = phi_n(field, f, mean_f);
    });
    out.push_back(summarize_phi(L, std::move(phi)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-cell lattice checks for the Voronoi field
// ---------------------------------------------------------------------------

struct CellCheck {
  std::size_t cell = 0;
  double area = 0.0;
  /// h^2 #{sites in the cell with X <= 0.5}.
  double sublevel_area = 0.0;
  /// |sublevel_area - area / 2|.
  double sublevel_error = 0.0;
  /// h^2 sum_{sites in the cell} f(X).
  double integral = 0.0;
  /// |integral - int_0^1 f * area|.
  double integral_error = 0.0;
};

/// Lattice checks on `count` cells chosen at random (seeded) among the cells
/// lying entirely inside the window with their bounding box at least one
/// spacing away from its edge.
inline std::vector<CellCheck> voronoi_cell_checks(const VoronoiScene& scene,
                                                  const FieldRealization& field,
                                                  const FuncSpec& f, std::size_t count,
                                                  Seed seed) {
  const double h = field.spacing;
  const auto& win = scene.inner;
  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < scene.cells.size(); ++i) {
    bool inside = true;
    for (const auto& v : scene.cells[i])
      if (v.x < win.lo[0] + h || v.y < win.lo[1] + h || v.x > win.hi[0] - h ||
          v.y > win.hi[1] - h)
        inside = false;
    if (inside) interior.push_back(i);
  }
  require(!interior.empty(), ErrorKind::geometry, "no interior cells in the window");
  auto eng = make_engine(seed);
  std::shuffle(interior.begin(), interior.end(), eng);
  interior.resize(std::min(count, interior.size()));
  std::sort(interior.begin(), interior.end());

  const double mean_f = uniform_mean(f);
  const double cell = field.cell_volume();
  std::vector<CellCheck> out;
  for (std::size_t i : interior) {
    const auto& poly = scene.cells[i];
    double x0 = poly[0].x, x1 = x0, y0 = poly[0].y, y1 = y0;
    for (const auto& v : poly) {
      x0 = std::min(x0, v.x), x1 = std::max(x1, v.x);
      y0 = std::min(y0, v.y), y1 = std::max(y1, v.y);
    }
    const auto ix0 = static_cast<std::size_t>(std::max(0.0, std::floor((x0 - win.lo[0]) / h)));
    const auto iy0 = static_cast<std::size_t>(std::max(0.0, std::floor((y0 - win.lo[1]) / h)));
    const auto ix1 = std::min(field.nx() - 1, static_cast<std::size_t>(std::ceil((x1 - win.lo[0]) / h)));
    const auto iy1 = std::min(field.ny() - 1, static_cast<std::size_t>(std::ceil((y1 - win.lo[1]) / h)));
    CellCheck c;
    c.cell = i;
    c.area = scene.cell_areas[i];
    std::size_t below = 0;
    double sum = 0.0;
    for (std::size_t iy = iy0; iy <= iy1; ++iy)
      for (std::size_t ix = ix0; ix <= ix1; ++ix) {
        const auto s = field.site(ix, iy);
        if (scene.owner({s[0], s[1]}) != i) continue;
        const double x = field.at(ix, iy);
        if (x <= 0.5) ++below;
        sum += f(x);
      }
    c.sublevel_area = cell * static_cast<double>(below);
    c.sublevel_error = std::abs(c.sublevel_area - 0.5 * c.area);
    c.integral = cell * sum;
    c.integral_error = std::abs(c.integral - mean_f * c.area);
    out.push_back(c);
  }
  return out;
}

}  // namespace lmf
