#pragma once

// Experiment configuration and the JSON schema of FuncSpec / ExperimentConfig.
// Parsing is strict: unknown keys and wrong types are configuration errors.

#include <cmath>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "lmfield/covariance.hpp"
#include "lmfield/errors.hpp"
#include "lmfield/fields.hpp"
#include "lmfield/functionals.hpp"
#include "lmfield/meixner.hpp"
#include "lmfield/rng.hpp"
#include "lmfield/voronoi.hpp"

namespace lmf {

using json = nlohmann::ordered_json;

enum class GeneratorKind { levy, gauss_ma, voronoi };

inline const char* to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::levy: return "levy";
    case GeneratorKind::gauss_ma: return "gauss-ma";
    case GeneratorKind::voronoi: return "voronoi";
  }
  return "?";
}

inline GeneratorKind parse_generator(const std::string& s) {
  if (s == "levy") return GeneratorKind::levy;
  if (s == "gauss-ma" || s == "gauss_ma") return GeneratorKind::gauss_ma;
  if (s == "voronoi") return GeneratorKind::voronoi;
  fail(ErrorKind::configuration, "unknown generator '" + s + "'");
}

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::gauss_ma;
  int dim = 1;
  /// Noise family of the Levy field (lambda is ignored).
  PolySystem family = make_system(Family::poisson, 1.0);
  /// Side of the base set B (Levy) or of the moving-average kernel.
  double base_side = 1.0;
  VoronoiParams voronoi;

  /// Dependence range used for default truncation radii.
  double dependence_range() const {
    return kind == GeneratorKind::voronoi ? 1.0 / std::sqrt(voronoi.intensity) : base_side;
  }

  /// Law of a single site value X(0) for the box-sum generators.
  PolySystem site_law() const {
    const double vol = dim == 1 ? base_side : base_side * base_side;
    if (kind == GeneratorKind::gauss_ma) return make_system(Family::normal, vol);
    return with_lambda(family, vol);
  }
};

enum class MeanPolicy { analytic, estimated };

struct ExperimentConfig {
  GeneratorSpec generator;
  double spacing = 0.25;
  WindowSeq windows = default_window_seq(1);
  std::vector<FuncSpec> functions{identity_fn()};
  std::size_t replicates = 500;
  CovOptions cov;
  /// Truncation radius as configured; empty means the generator default.
  std::optional<double> trunc_radius;
  Seed master_seed = 1;
  MeanPolicy mean_policy = MeanPolicy::analytic;
  std::string output_dir;
  unsigned threads = 1;

  /// R default: 2 x the dependence range for box-sum fields, 4 / sqrt(intensity)
  /// for the Voronoi field.
  double resolved_radius() const {
    if (trunc_radius) return *trunc_radius;
    if (generator.kind == GeneratorKind::voronoi)
      return 4.0 / std::sqrt(generator.voronoi.intensity);
    return 2.0 * generator.base_side;
  }

  CovOptions resolved_cov() const {
    CovOptions c = cov;
    c.trunc_radius = resolved_radius();
    return c;
  }
};

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

namespace detail {

inline void only_keys(const json& j, std::initializer_list<const char*> allowed,
                      const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::configuration, where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) fail(ErrorKind::configuration, "unknown key '" + k + "' in " + where);
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::configuration, std::string("bad type for '") + key + "' in " + where);
  }
}

template <class T>
T get_req(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key))
    fail(ErrorKind::configuration, std::string("missing key '") + key + "' in " + where);
  return get_or<T>(j, key, T{}, where);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// FuncSpec <-> JSON
// ---------------------------------------------------------------------------

inline json to_json(const FuncSpec& f) {
  return std::visit(
      detail::overloaded{
          [](const fn::Identity&) { return json{{"kind", "identity"}}; },
          [](const fn::MeixnerPoly& p) {
            json j{{"kind", "meixner_poly"},
                   {"degree", p.degree},
                   {"family", to_string(p.system.family)},
                   {"lambda", p.system.lambda},
                   {"fixed_param", p.system.fixed_param}};
            if (!p.system.is_affine_identity()) {
              j["affine_m"] = p.system.affine_m;
              j["affine_c"] = p.system.affine_c;
            }
            return j;
          },
          [](const fn::Monomial& p) { return json{{"kind", "monomial"}, {"degree", p.degree}}; },
          [](const fn::PiecewiseLinear& p) {
            return json{
                {"kind", "piecewise_linear"}, {"breakpoints", p.breakpoints}, {"values", p.values}};
          },
          [](const fn::SmoothedIndicator& p) {
            return json{{"kind", "smoothed_indicator"}, {"u", p.u}, {"width", p.width}};
          },
          [](const fn::LinearCombination& c) {
            json terms = json::array();
            for (const auto& t : c.terms) terms.push_back({{"coef", t.coef}, {"f", to_json(t.f)}});
            return json{{"kind", "linear_combination"}, {"terms", terms}};
          }},
      f.kind);
}

inline FuncSpec funcspec_from_json(const json& j) {
  const std::string where = "function spec";
  if (!j.is_object() || !j.contains("kind"))
    fail(ErrorKind::configuration, "function spec needs a 'kind'");
  const auto kind = detail::get_req<std::string>(j, "kind", where);
  try {
    if (kind == "identity") {
      detail::only_keys(j, {"kind"}, where);
      return identity_fn();
    }
    if (kind == "constant") {
      detail::only_keys(j, {"kind", "value"}, where);
      return constant_fn(detail::get_req<double>(j, "value", where));
    }
    if (kind == "monomial") {
      detail::only_keys(j, {"kind", "degree"}, where);
      return monomial_fn(detail::get_req<unsigned>(j, "degree", where));
    }
    if (kind == "meixner_poly") {
      detail::only_keys(j,
                        {"kind", "degree", "family", "lambda", "fixed_param", "affine_m", "affine_c"},
                        where);
      const Family fam = parse_family(detail::get_req<std::string>(j, "family", where));
      PolySystem s = make_system(fam, detail::get_or<double>(j, "lambda", 1.0, where),
                                 detail::get_or<double>(j, "fixed_param", default_fixed_param(fam),
                                                        where));
      const double m = detail::get_or<double>(j, "affine_m", 1.0, where);
      const double c = detail::get_or<double>(j, "affine_c", 0.0, where);
      if (m != 1.0 || c != 0.0) s = affine_transform(s, m, c);
      return meixner_fn(detail::get_req<unsigned>(j, "degree", where), s);
    }
    if (kind == "piecewise_linear") {
      detail::only_keys(j, {"kind", "breakpoints", "values"}, where);
      return piecewise_linear_fn(detail::get_req<std::vector<double>>(j, "breakpoints", where),
                                 detail::get_req<std::vector<double>>(j, "values", where));
    }
    if (kind == "smoothed_indicator") {
      detail::only_keys(j, {"kind", "u", "width"}, where);
      return smoothed_indicator_fn(detail::get_req<double>(j, "u", where),
                                   detail::get_req<double>(j, "width", where));
    }
    if (kind == "linear_combination") {
      detail::only_keys(j, {"kind", "terms"}, where);
      std::vector<fn::Term> terms;
      for (const auto& t : j.at("terms")) {
        detail::only_keys(t, {"coef", "f"}, "linear_combination term");
        terms.push_back({detail::get_req<double>(t, "coef", "term"), funcspec_from_json(t.at("f"))});
      }
      return linear_combination(std::move(terms));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::configuration) throw;
    fail(ErrorKind::configuration, std::string("invalid function spec: ") + e.what());
  }
  fail(ErrorKind::configuration, "unknown function kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// ExperimentConfig <-> JSON
// ---------------------------------------------------------------------------

inline json to_json(const GeneratorSpec& g) {
  json j{{"type", to_string(g.kind)}};
  switch (g.kind) {
    case GeneratorKind::levy:
      j["dim"] = g.dim;
      j["family"] = to_string(g.family.family);
      j["fixed_param"] = g.family.fixed_param;
      j["base_side"] = g.base_side;
      break;
    case GeneratorKind::gauss_ma:
      j["dim"] = g.dim;
      j["kernel_side"] = g.base_side;
      break;
    case GeneratorKind::voronoi:
      j["intensity"] = g.voronoi.intensity;
      j["guard"] = g.voronoi.resolved_guard();
      break;
  }
  return j;
}

inline GeneratorSpec generator_from_json(const json& j) {
  const std::string where = "generator";
  GeneratorSpec g;
  g.kind = parse_generator(detail::get_req<std::string>(j, "type", where));
  try {
    switch (g.kind) {
      case GeneratorKind::levy: {
        detail::only_keys(j, {"type", "dim", "family", "fixed_param", "base_side"}, where);
        g.dim = detail::get_or<int>(j, "dim", 1, where);
        const Family fam = parse_family(detail::get_req<std::string>(j, "family", where));
        g.family = make_system(
            fam, 1.0, detail::get_or<double>(j, "fixed_param", default_fixed_param(fam), where));
        g.base_side = detail::get_or<double>(j, "base_side", 1.0, where);
        break;
      }
      case GeneratorKind::gauss_ma:
        detail::only_keys(j, {"type", "dim", "kernel_side"}, where);
        g.dim = detail::get_or<int>(j, "dim", 1, where);
        g.base_side = detail::get_or<double>(j, "kernel_side", 1.0, where);
        break;
      case GeneratorKind::voronoi:
        detail::only_keys(j, {"type", "dim", "intensity", "guard"}, where);
        g.dim = detail::get_or<int>(j, "dim", 2, where);
        g.voronoi.intensity = detail::get_or<double>(j, "intensity", 1.0, where);
        if (j.contains("guard")) g.voronoi.guard = detail::get_req<double>(j, "guard", where);
        break;
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::configuration) throw;
    fail(ErrorKind::configuration, std::string("invalid generator: ") + e.what());
  }
  if (g.dim != 1 && g.dim != 2) fail(ErrorKind::configuration, "dim must be 1 or 2");
  if (g.kind == GeneratorKind::voronoi && g.dim != 2)
    fail(ErrorKind::configuration, "the voronoi generator is planar (dim 2)");
  if (!(g.base_side > 0.0)) fail(ErrorKind::configuration, "base side must be positive");
  if (!(g.voronoi.intensity > 0.0)) fail(ErrorKind::configuration, "intensity must be positive");
  return g;
}

/// The resolved configuration (all defaults filled in).
inline json to_json(const ExperimentConfig& c) {
  json funcs = json::array();
  for (const auto& f : c.functions) funcs.push_back(to_json(f));
  json j{{"generator", to_json(c.generator)},
         {"spacing", c.spacing},
         {"windows", c.windows.sizes},
         {"functions", funcs},
         {"replicates", c.replicates},
         {"method", to_string(c.cov.method)},
         {"truncation_radius", c.resolved_radius()},
         {"tau", c.cov.tau_rel},
         {"master_seed", c.master_seed},
         {"mean_policy", c.mean_policy == MeanPolicy::analytic ? "analytic" : "estimated"},
         {"threads", c.threads}};
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  const std::string where = "experiment config";
  detail::only_keys(j,
                    {"generator", "spacing", "windows", "functions", "replicates", "method",
                     "truncation_radius", "tau", "master_seed", "mean_policy", "output_dir",
                     "threads"},
                    where);
  ExperimentConfig c;
  if (!j.contains("generator")) fail(ErrorKind::configuration, "missing key 'generator'");
  c.generator = generator_from_json(j.at("generator"));
  c.spacing = detail::get_or<double>(j, "spacing", c.spacing, where);
  c.windows.dim = c.generator.dim;
  c.windows.sizes = detail::get_or<std::vector<double>>(j, "windows", c.windows.sizes, where);
  if (j.contains("functions")) {
    if (!j.at("functions").is_array() || j.at("functions").empty())
      fail(ErrorKind::configuration, "'functions' must be a non-empty array");
    c.functions.clear();
    for (const auto& f : j.at("functions")) c.functions.push_back(funcspec_from_json(f));
  }
  c.replicates = detail::get_or<std::size_t>(j, "replicates", c.replicates, where);
  const auto method = detail::get_or<std::string>(j, "method", "lag_integration", where);
  if (method == "lag_integration" || method == "a") c.cov.method = CovMethod::lag_integration;
  else if (method == "window_variance" || method == "b") c.cov.method = CovMethod::window_variance;
  else fail(ErrorKind::configuration, "unknown method '" + method + "'");
  if (j.contains("truncation_radius"))
    c.trunc_radius = detail::get_req<double>(j, "truncation_radius", where);
  c.cov.tau_rel = detail::get_or<double>(j, "tau", c.cov.tau_rel, where);
  c.master_seed = detail::get_or<Seed>(j, "master_seed", c.master_seed, where);
  const auto policy = detail::get_or<std::string>(j, "mean_policy", "analytic", where);
  if (policy == "analytic") c.mean_policy = MeanPolicy::analytic;
  else if (policy == "estimated") c.mean_policy = MeanPolicy::estimated;
  else fail(ErrorKind::configuration, "unknown mean_policy '" + policy + "'");
  c.output_dir = detail::get_or<std::string>(j, "output_dir", "", where);
  c.threads = detail::get_or<unsigned>(j, "threads", 1U, where);

  if (!(c.spacing > 0.0)) fail(ErrorKind::configuration, "spacing must be positive");
  if (c.windows.sizes.empty()) fail(ErrorKind::configuration, "'windows' must not be empty");
  for (double L : c.windows.sizes)
    if (!(L > 0.0)) fail(ErrorKind::configuration, "window sizes must be positive");
  if (!c.windows.is_van_hove_growing())
    fail(ErrorKind::configuration, "window sizes must form a Van Hove growing sequence");
  if (c.replicates < 2) fail(ErrorKind::configuration, "need at least 2 replicates");
  if (c.trunc_radius && !(*c.trunc_radius >= 0.0))
    fail(ErrorKind::configuration, "truncation_radius must be non-negative");
  if (!(c.cov.tau_rel > 0.0)) fail(ErrorKind::configuration, "tau must be positive");
  if (c.threads == 0) c.threads = 1;
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::configuration, std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace lmf
