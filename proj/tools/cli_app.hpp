#pragma once

// The lmfield command line: subcommand dispatch, artifact writing and the
// mapping of error kinds to exit codes.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lmfield/config.hpp"
#include "lmfield/covariance.hpp"
#include "lmfield/errors.hpp"
#include "lmfield/functionals.hpp"
#include "lmfield/harness.hpp"
#include "lmfield/io.hpp"
#include "lmfield/marginal.hpp"
#include "lmfield/meixner.hpp"

namespace lmf::cli {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int unexpected = 1;
inline constexpr int usage = 2;
inline constexpr int configuration = 3;
inline constexpr int io = 4;
}  // namespace exit_code

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::configuration: return exit_code::configuration;
    case ErrorKind::io: return exit_code::io;
    case ErrorKind::parameter: return 10;
    case ErrorKind::sampling: return 11;
    case ErrorKind::alignment: return 12;
    case ErrorKind::geometry: return 13;
    case ErrorKind::lag: return 14;
    case ErrorKind::sample_size: return 15;
    case ErrorKind::degeneracy: return 16;
    case ErrorKind::domain: return 17;
    case ErrorKind::degenerate_input: return 18;
  }
  return exit_code::unexpected;
}

/// A result table printed to stdout as CSV or JSON (array of row objects).
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const { return io::csv(header, rows); }

  json to_json() const {
    json a = json::array();
    for (const auto& r : rows) {
      json o = json::object();
      for (std::size_t i = 0; i < header.size(); ++i) o[header[i]] = r[i];
      a.push_back(o);
    }
    return a;
  }
};

struct Options {
  std::string config_path;
  std::optional<Seed> seed;
  std::string out;
  std::optional<unsigned> threads;
  std::string format = "csv";
  /// simulate only: generator type overriding (or replacing) the config.
  std::string generator;
};

class Runner {
 public:
  Runner(Options opt, std::ostream& out) : opt_(std::move(opt)), out_(out) {}

  ExperimentConfig load_config() const {
    ExperimentConfig c;
    if (!opt_.config_path.empty()) {
      c = parse_config(io::read_text(opt_.config_path));
    } else if (!opt_.generator.empty()) {
      c = config_from_json(json{{"generator", {{"type", opt_.generator}}}});
    } else {
      fail(ErrorKind::configuration, "--config is required");
    }
    if (!opt_.generator.empty() && parse_generator(opt_.generator) != c.generator.kind) {
      json g{{"type", opt_.generator}};
      if (parse_generator(opt_.generator) != GeneratorKind::voronoi) g["dim"] = c.generator.dim;
      c.generator = generator_from_json(g);
      c.windows.dim = c.generator.dim;
    }
    if (opt_.seed) c.master_seed = *opt_.seed;
    if (opt_.threads) c.threads = std::max(1U, *opt_.threads);
    return c;
  }

  /// --out, else the config's output_dir, else $LMFIELD_OUT_ROOT/<sub>-<seed>.
  std::optional<std::filesystem::path> out_dir(const std::string& sub, Seed seed,
                                               const std::string& from_config = "") const {
    if (!opt_.out.empty()) return std::filesystem::path(opt_.out);
    if (!from_config.empty()) return std::filesystem::path(from_config);
    if (const char* root = std::getenv("LMFIELD_OUT_ROOT"); root && *root)
      return std::filesystem::path(root) / (sub + "-" + std::to_string(seed));
    return std::nullopt;
  }

  void print(const Table& t) const {
    if (opt_.format == "json") out_ << t.to_json().dump(2) << "\n";
    else out_ << t.to_csv();
  }

  int simulate(double window, std::size_t count) {
    const ExperimentConfig c = load_config();
    const double L = window > 0.0 ? window : c.windows.sizes.front();
    ExperimentConfig cc = c;
    cc.replicates = count;
    const auto reps = simulate_replicates(cc, L, count);
    Table t{{"replicate", "seed", "nx", "ny", "mean", "variance"}, {}};
    for (std::size_t r = 0; r < reps.size(); ++r) {
      const auto& f = reps[r];
      double m = 0.0, v = 0.0;
      for (double x : f.values) m += x;
      m /= static_cast<double>(f.size());
      for (double x : f.values) v += (x - m) * (x - m);
      v /= static_cast<double>(std::max<std::size_t>(1, f.size() - 1));
      t.rows.push_back({std::to_string(r), std::to_string(f.seed), std::to_string(f.nx()),
                        std::to_string(f.ny()), io::fmt(m), io::fmt(v)});
    }
    if (auto dir = out_dir("simulate", c.master_seed, c.output_dir)) {
      json cfg = to_json(c);
      cfg["simulate"] = {{"window", L}, {"count", count}};
      io::ArtifactDir a(*dir, "simulate", c.master_seed, cfg);
      for (std::size_t r = 0; r < reps.size(); ++r)
        a.text("field_" + std::to_string(r) + ".txt", io::dump_field(reps[r]));
      a.text("summary.csv", t.to_csv());
      a.finish();
    }
    print(t);
    return exit_code::ok;
  }

  int poly_check(const std::string& family, double lambda, std::optional<double> fixed,
                 unsigned nmax) {
    const PolySystem s = make_system(parse_family(family), lambda, fixed);
    const auto rc = recurrence_coeffs(s, nmax);
    Table t{{"n", "alpha", "beta", "norm2", "orth_residual"}, {}};
    for (unsigned n = 0; n <= nmax; ++n) {
      const double nn = poly_norm2(s, n);
      double resid = std::abs(poly_inner_product(s, n, n) - nn) / nn;
      for (unsigned j = 0; j < n; ++j)
        resid = std::max(resid, std::abs(poly_inner_product(s, n, j)) /
                                    std::sqrt(nn * poly_norm2(s, j)));
      t.rows.push_back({std::to_string(n), io::fmt(rc.alpha[n]), io::fmt(rc.beta[n]), io::fmt(nn),
                        io::fmt(resid)});
    }
    const Seed seed = opt_.seed.value_or(0);
    if (auto dir = out_dir("poly-check", seed)) {
      json cfg{{"family", to_string(s.family)},
               {"lambda", s.lambda},
               {"fixed_param", s.fixed_param},
               {"nmax", nmax}};
      io::ArtifactDir a(*dir, "poly-check", seed, cfg);
      a.text("poly.csv", t.to_csv());
      a.finish();
    }
    print(t);
    return exit_code::ok;
  }

  int estimate_cov(double window) {
    const ExperimentConfig c = load_config();
    const double L = window > 0.0 ? window : c.windows.sizes.front();
    const auto reps = simulate_replicates(c, L, c.replicates);
    const SigmaMatrix sig = sigma_matrix(reps, c.functions, c.resolved_cov());
    Table t{{"i", "j", "value", "se", "method", "trunc_radius"}, {}};
    for (std::size_t i = 0; i < sig.s; ++i)
      for (std::size_t j = 0; j < sig.s; ++j) {
        const auto& e = sig(i, j);
        t.rows.push_back({std::to_string(i), std::to_string(j), io::fmt(e.value), io::fmt(e.se),
                          to_string(e.method), io::fmt(e.trunc_radius)});
      }
    if (auto dir = out_dir("estimate-cov", c.master_seed, c.output_dir)) {
      json cfg = to_json(c);
      cfg["estimate_cov"] = {{"window", L}};
      io::ArtifactDir a(*dir, "estimate-cov", c.master_seed, cfg);
      a.text("sigma.csv", t.to_csv());
      a.finish();
    }
    print(t);
    return exit_code::ok;
  }

  int gram_schmidt_cmd(double window) {
    const ExperimentConfig c = load_config();
    const double L = window > 0.0 ? window : c.windows.sizes.front();
    const auto reps = simulate_replicates(c, L, c.replicates);
    const OrthogonalBasis ob = gram_schmidt(reps, c.functions, c.resolved_cov());
    Table t{{"j", "k", "coef", "norm"}, {}};
    for (std::size_t j = 0; j < ob.inputs.size(); ++j)
      for (std::size_t k = 0; k <= j; ++k)
        t.rows.push_back(
            {std::to_string(j), std::to_string(k), io::fmt(ob.coeffs[j][k]), io::fmt(ob.norms[j])});
    if (auto dir = out_dir("gram-schmidt", c.master_seed, c.output_dir)) {
      json cfg = to_json(c);
      cfg["gram_schmidt"] = {{"window", L}};
      io::ArtifactDir a(*dir, "gram-schmidt", c.master_seed, cfg);
      a.text("coefficients.csv", t.to_csv());
      json outs = json::array();
      for (const auto& f : ob.outputs()) outs.push_back(lmf::to_json(f));
      a.json_file("outputs.json", outs);
      a.finish();
    }
    print(t);
    return exit_code::ok;
  }

  static json report_json(const CltReport& r, const ExperimentConfig& c) {
    json ks = json::array();
    for (std::size_t i = 0; i < r.ks.size(); ++i) {
      const auto& k = r.ks[i];
      json o{{"function", lmf::to_json(c.functions[i])},
             {"degenerate", k.degenerate},
             {"reference_variance", k.variance}};
      if (!k.degenerate) {
        o["distance"] = k.distance;
        o["p_value"] = k.p_value;
        o["rejects_at_0.01"] = k.rejects;
      }
      ks.push_back(o);
    }
    json sigma = json::array(), emp = json::array();
    for (std::size_t i = 0; i < r.functions; ++i) {
      json srow = json::array(), erow = json::array();
      for (std::size_t j = 0; j < r.functions; ++j) {
        srow.push_back({{"value", r.sigma.value(i, j)}, {"se", r.sigma(i, j).se}});
        erow.push_back(r.empirical_cov[i * r.functions + j]);
      }
      sigma.push_back(srow);
      emp.push_back(erow);
    }
    return json{{"window", r.window},
                {"dim", r.dim},
                {"replicates", r.replicates},
                {"means", r.means},
                {"means_estimated", r.means_estimated},
                {"ks", ks},
                {"sigma_hat", sigma},
                {"empirical_cov", emp},
                {"cov_discrepancy", r.cov_discrepancy},
                {"cov_discrepancy_z", r.cov_discrepancy_z},
                {"master_seed", r.master_seed},
                {"seeds", r.seeds}};
  }

  static std::string matrix_csv(const CltReport& r) {
    std::vector<std::string> header{"replicate"};
    for (std::size_t i = 0; i < r.functions; ++i) header.push_back("phi_" + std::to_string(i));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < r.replicates; ++k) {
      std::vector<std::string> row{std::to_string(k)};
      for (std::size_t i = 0; i < r.functions; ++i) row.push_back(io::fmt(r.phi(k, i)));
      rows.push_back(std::move(row));
    }
    return io::csv(header, rows);
  }

  int clt_test(double window) {
    const ExperimentConfig c = load_config();
    std::vector<double> windows = c.windows.sizes;
    if (window > 0.0) windows = {window};
    Table t{{"window", "function", "ks_distance", "p_value", "degenerate", "sigma_hat",
             "empirical_var"},
            {}};
    std::vector<CltReport> reports;
    for (double L : windows) {
      reports.push_back(run_clt_experiment(c, L));
      const auto& r = reports.back();
      for (std::size_t i = 0; i < r.functions; ++i) {
        const auto& k = r.ks[i];
        t.rows.push_back({io::fmt(L), std::to_string(i), k.degenerate ? "" : io::fmt(k.distance),
                          k.degenerate ? "" : io::fmt(k.p_value), k.degenerate ? "1" : "0",
                          io::fmt(k.variance), io::fmt(r.empirical_cov[i * r.functions + i])});
      }
    }
    if (auto dir = out_dir("clt-test", c.master_seed, c.output_dir)) {
      io::ArtifactDir a(*dir, "clt-test", c.master_seed, to_json(c));
      for (const auto& r : reports) {
        const std::string tag = io::fmt(r.window);
        a.text("replicates_L" + tag + ".csv", matrix_csv(r));
        a.json_file("report_L" + tag + ".json", report_json(r, c));
      }
      a.text("summary.csv", t.to_csv());
      a.finish();
    }
    print(t);
    return exit_code::ok;
  }

  int variance_scan(std::size_t cell_checks) {
    const ExperimentConfig c = load_config();
    const auto scan = degenerate_variance_scan(c, c.windows.sizes);
    Table t{{"window", "variance", "se", "mean"}, {}};
    for (const auto& p : scan)
      t.rows.push_back({io::fmt(p.window), io::fmt(p.variance), io::fmt(p.se), io::fmt(p.mean)});
    Table cells{{"cell", "area", "sublevel_area", "sublevel_error", "integral", "integral_error"},
                {}};
    if (cell_checks > 0) {
      require(c.generator.kind == GeneratorKind::voronoi, ErrorKind::configuration,
              "cell checks need the voronoi generator");
      const double L = c.windows.sizes.back();
      const Seed seed = replicate_seed(c.master_seed, L, 0);
      const auto [field, scene] =
          generate_voronoi_field(experiment_window(c.generator, L), c.generator.voronoi, c.spacing, seed);
      for (const auto& k :
           voronoi_cell_checks(scene, field, c.functions.front(), cell_checks, derive_seed(seed, 0, 3)))
        cells.rows.push_back({std::to_string(k.cell), io::fmt(k.area), io::fmt(k.sublevel_area),
                              io::fmt(k.sublevel_error), io::fmt(k.integral),
                              io::fmt(k.integral_error)});
    }
    if (auto dir = out_dir("variance-scan", c.master_seed, c.output_dir)) {
      io::ArtifactDir a(*dir, "variance-scan", c.master_seed, to_json(c));
      a.text("scan.csv", t.to_csv());
      if (cell_checks > 0) a.text("cell_checks.csv", cells.to_csv());
      a.finish();
    }
    print(t);
    if (cell_checks > 0) print(cells);
    return exit_code::ok;
  }

  int net_check(unsigned m, double c, std::size_t trials) {
    const LipschitzNet net(m, c);
    const Seed seed = opt_.seed.value_or(1);
    auto eng = make_engine(seed);
    std::size_t ok = 0, induction_ok = 0;
    double worst = 0.0;
    for (std::size_t k = 0; k < trials; ++k) {
      const FuncSpec f = random_lipschitz_pwl(eng, m * c + 1.0, 6);
      const NetMatch best = net_approximation(f, net);
      const NetMatch ind = net_member_by_induction(f, net);
      worst = std::max(worst, best.max_grid_error);
      if (best.max_grid_error <= c) ++ok;
      if (ind.max_grid_error <= c) ++induction_ok;
    }
    Table t{{"m", "c", "members", "trials", "successes", "induction_successes", "max_error"},
            {{std::to_string(m), io::fmt(c), std::to_string(net.size()), std::to_string(trials),
              std::to_string(ok), std::to_string(induction_ok), io::fmt(worst)}}};
    if (auto dir = out_dir("net-check", seed)) {
      io::ArtifactDir a(*dir, "net-check", seed, json{{"m", m}, {"c", c}, {"trials", trials}});
      a.text("net.csv", t.to_csv());
      a.finish();
    }
    print(t);
    return exit_code::ok;
  }

 private:
  Options opt_;
  std::ostream& out_;
};

inline void report_error(std::ostream& err, const std::string& kind, const std::string& message,
                         int code, std::optional<std::size_t> index = std::nullopt) {
  json j{{"error", kind}, {"message", message}, {"exit_code", code}};
  if (index) j["index"] = *index;
  err << j.dump() << "\n";
}

/// Parses argv, runs the subcommand and returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Monte Carlo toolkit for Levy-Meixner polynomial functionals of random fields",
               "lmfield"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config_path, "experiment config (JSON)");
  app.add_option("--seed", opt.seed, "master seed (overrides the config)");
  app.add_option("--out", opt.out, "output directory for artifacts");
  app.add_option("--threads", opt.threads, "worker threads for replicates");
  app.add_option("--format", opt.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));

  double window = 0.0;
  std::size_t count = 1, cell_checks = 0, trials = 100;
  std::string family;
  double lambda = 1.0, net_c = 0.5;
  std::optional<double> fixed;
  unsigned nmax = 6, net_m = 2;

  auto* sim = app.add_subcommand("simulate", "simulate and dump field realizations");
  sim->add_option("--window", window, "window side L (default: first configured)");
  sim->add_option("--count", count, "number of realizations");
  sim->add_option("--generator", opt.generator, "levy|gauss-ma|voronoi (overrides the config)");

  auto* poly = app.add_subcommand("poly-check", "recurrence coefficients and orthogonality residuals");
  poly->add_option("--family", family, "normal|gamma|poisson|pascal|meixner_ch")->required();
  poly->add_option("--lambda", lambda, "time parameter lambda");
  poly->add_option("--fixed-param", fixed, "gamma scale, pascal success ratio or Mch angle");
  poly->add_option("--nmax", nmax, "highest degree");

  auto* cov = app.add_subcommand("estimate-cov", "estimate the covariance form matrix");
  cov->add_option("--window", window, "window side L (default: first configured)");

  auto* gs = app.add_subcommand("gram-schmidt", "orthogonalize the configured functions");
  gs->add_option("--window", window, "window side L (default: first configured)");

  auto* clt = app.add_subcommand("clt-test", "CLT experiment with KS and covariance checks");
  clt->add_option("--window", window, "single window side (default: all configured)");

  auto* scan = app.add_subcommand("variance-scan", "Var(Phi_L) over the configured windows");
  scan->add_option("--cell-checks", cell_checks, "per-cell lattice checks (voronoi only)");

  auto* net = app.add_subcommand("net-check", "covering-net approximation of random functions");
  net->add_option("--m", net_m, "net size parameter m");
  net->add_option("--c", net_c, "grid spacing c");
  net->add_option("--trials", trials, "number of random Lipschitz-1 functions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return exit_code::ok;
    }
    err << e.what() << "\n" << app.help();
    report_error(err, "usage", e.what(), exit_code::usage);
    return exit_code::usage;
  }

  Runner runner(opt, out);
  try {
    if (sim->parsed()) return runner.simulate(window, count);
    if (poly->parsed()) return runner.poly_check(family, lambda, fixed, nmax);
    if (cov->parsed()) return runner.estimate_cov(window);
    if (gs->parsed()) return runner.gram_schmidt_cmd(window);
    if (clt->parsed()) return runner.clt_test(window);
    if (scan->parsed()) return runner.variance_scan(cell_checks);
    if (net->parsed()) return runner.net_check(net_m, net_c, trials);
  } catch (const DegeneracyError& e) {
    const int code = exit_code_for(e.kind());
    report_error(err, to_string(e.kind()), e.what(), code, e.index());
    return code;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    report_error(err, to_string(e.kind()), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    report_error(err, "unexpected", e.what(), exit_code::unexpected);
    return exit_code::unexpected;
  }
  err << app.help();
  return exit_code::usage;
}

}  // namespace lmf::cli
