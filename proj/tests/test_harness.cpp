#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lmfield/config.hpp"
#include "lmfield/harness.hpp"

using namespace lmf;

namespace {

ExperimentConfig gauss_config(std::size_t M) {
  ExperimentConfig c;
  c.generator.kind = GeneratorKind::gauss_ma;
  c.generator.dim = 1;
  c.spacing = 0.25;
  c.replicates = M;
  return c;
}

}  // namespace

TEST(Seeds, ReplicateSeedsAreDistinctAndStable) {
  EXPECT_EQ(replicate_seed(1, 8.0, 3), replicate_seed(1, 8.0, 3));
  EXPECT_NE(replicate_seed(1, 8.0, 3), replicate_seed(1, 8.0, 4));
  EXPECT_NE(replicate_seed(1, 8.0, 3), replicate_seed(1, 16.0, 3));
  EXPECT_NE(replicate_seed(1, 8.0, 3), replicate_seed(2, 8.0, 3));
  EXPECT_NE(replicate_seed(1, 8.0, 3), replicate_seed(1, 8.0, 3, kIndependentStream));
}

TEST(ParallelFor, ResultsIndependentOfThreadCount) {
  ExperimentConfig c = gauss_config(16);
  c.threads = 1;
  const auto a = simulate_replicates(c, 8.0, 16);
  c.threads = 4;
  const auto b = simulate_replicates(c, 8.0, 16);
  for (std::size_t r = 0; r < 16; ++r) EXPECT_EQ(a[r].values, b[r].values);
}

TEST(ParallelFor, ErrorCarriesSmallestFailingIndex) {
  try {
    parallel_for(20, 3, [](std::size_t i) {
      if (i == 7 || i == 13) fail(ErrorKind::sampling, "boom");
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::sampling);
    EXPECT_NE(std::string(e.what()).find("replicate 7"), std::string::npos);
  }
}

TEST(KsNormality, NullSamplesRarelyReject) {
  int accepted = 0;
  for (int run = 0; run < 100; ++run) {
    auto eng = make_engine(derive_seed(77, run));
    std::normal_distribution<double> n;
    std::vector<double> x(10000);
    for (double& v : x) v = n(eng);
    accepted += ks_normality(x, 1.0).p_value > 0.01;
  }
  EXPECT_GE(accepted, 98);
}

TEST(KsNormality, ShiftedSamplesReject) {
  auto eng = make_engine(5);
  std::normal_distribution<double> n(1.0, 1.0);
  std::vector<double> x(2000);
  for (double& v : x) v = n(eng);
  const auto r = ks_normality(x, 1.0);
  EXPECT_GT(r.distance, 0.3);
  EXPECT_LT(r.p_value, 0.01);
}

TEST(KsNormality, Guards) {
  std::vector<double> x(50, 0.1);
  try {
    ks_normality(x, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_input);
  }
  std::vector<double> few(10, 0.0);
  EXPECT_THROW(ks_normality(few, 1.0), Error);
}

TEST(KsNormality, KolmogorovSurvivalKnownValues) {
  // P(K > 1.3581) = 0.05, P(K > 1.6276) = 0.01
  EXPECT_NEAR(kolmogorov_survival(1.3581), 0.05, 1e-4);
  EXPECT_NEAR(kolmogorov_survival(1.6276), 0.01, 1e-4);
  EXPECT_NEAR(kolmogorov_survival(0.5), 0.9639, 1e-4);
  EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
}

TEST(CltExperiment, ConstantFunctionIsDegenerate) {
  ExperimentConfig c = gauss_config(40);
  c.functions = {constant_fn(2.0), identity_fn()};
  const auto r = run_clt_experiment(c, 16.0);
  EXPECT_EQ(r.replicates, 40u);
  for (std::size_t k = 0; k < r.replicates; ++k) EXPECT_EQ(r.phi(k, 0), 0.0);
  EXPECT_TRUE(r.ks[0].degenerate);
  EXPECT_FALSE(r.ks[1].degenerate);
  EXPECT_EQ(r.seeds.size(), 40u);
}

TEST(CltExperiment, DeterministicAcrossRunsAndThreads) {
  ExperimentConfig c = gauss_config(30);
  const auto a = run_clt_experiment(c, 8.0);
  c.threads = 3;
  const auto b = run_clt_experiment(c, 8.0);
  EXPECT_EQ(a.replicate_matrix, b.replicate_matrix);
  EXPECT_EQ(a.seeds, b.seeds);
  EXPECT_EQ(a.ks[0].distance, b.ks[0].distance);
}

TEST(CltExperiment, PoissonQ1Q2Uncorrelated) {
  ExperimentConfig c;
  c.generator.kind = GeneratorKind::levy;
  c.generator.family = make_system(Family::poisson, 1.0);
  c.replicates = 300;
  const PolySystem law = make_system(Family::poisson, 1.0);
  c.functions = {meixner_fn(1, law), meixner_fn(2, law)};
  const auto r = run_clt_experiment(c, 32.0);
  const double corr = r.empirical_cov[1] / std::sqrt(r.empirical_cov[0] * r.empirical_cov[3]);
  EXPECT_LT(std::abs(corr), 3.0 / std::sqrt(300.0));
  EXPECT_NEAR(r.means[0], 0.0, 1e-12);
  EXPECT_NEAR(r.means[1], 0.0, 1e-12);
}

TEST(CltExperiment, EmpiricalCovarianceMatchesSigmaHat) {
  ExperimentConfig c = gauss_config(500);
  const auto r = run_clt_experiment(c, 64.0);
  EXPECT_LT(r.cov_discrepancy_z, 4.0);
  EXPECT_LT(r.ks[0].distance, 0.08);
}

TEST(CltExperiment, EstimatedMeansAreFlagged) {
  ExperimentConfig c = gauss_config(30);
  c.mean_policy = MeanPolicy::estimated;
  const auto r = run_clt_experiment(c, 8.0);
  EXPECT_TRUE(r.means_estimated);
  EXPECT_NEAR(r.means[0], 0.0, 0.2);
}

TEST(AnalyticMeans, SiteLaws) {
  GeneratorSpec g;
  g.kind = GeneratorKind::levy;
  g.dim = 2;
  g.base_side = 2.0;
  g.family = make_system(Family::poisson, 1.0);
  EXPECT_NEAR(analytic_mean(g, identity_fn()), 4.0, 1e-10);
  g.kind = GeneratorKind::voronoi;
  EXPECT_NEAR(analytic_mean(g, monomial_fn(2)), 1.0 / 3.0, 1e-12);
  g.kind = GeneratorKind::gauss_ma;
  g.dim = 1;
  g.base_side = 1.0;
  EXPECT_NEAR(analytic_mean(g, monomial_fn(2)), 1.0, 1e-10);
}

TEST(VarianceScan, GaussianControlStaysNearOne) {
  ExperimentConfig c = gauss_config(300);
  const std::vector<double> sizes{16.0, 32.0, 64.0};
  const auto s = degenerate_variance_scan(c, sizes);
  ASSERT_EQ(s.size(), 3u);
  for (const auto& p : s) EXPECT_NEAR(p.variance, 1.0, 4.0 * p.se) << "L=" << p.window;
  // doubling L leaves a positive variance unchanged within error bars
  EXPECT_NEAR(s[1].variance, s[2].variance, 3.0 * std::hypot(s[1].se, s[2].se));
}

TEST(VarianceScan, VoronoiDecreases) {
  ExperimentConfig c;
  c.generator.kind = GeneratorKind::voronoi;
  c.generator.dim = 2;
  c.spacing = 0.2;
  c.replicates = 60;
  const std::vector<double> sizes{8.0, 16.0, 32.0};
  const auto s = degenerate_variance_scan(c, sizes);
  EXPECT_GT(s[0].variance, s[1].variance);
  EXPECT_GT(s[1].variance, s[2].variance);
}

TEST(VarianceScan, SizesMustIncrease) {
  const std::vector<double> sizes{16.0, 8.0};
  EXPECT_THROW(degenerate_variance_scan(gauss_config(10), sizes), Error);
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

TEST(Config, ParsesAndEchoesResolvedValues) {
  const auto c = parse_config(R"({
    "generator": {"type": "levy", "dim": 1, "family": "pascal", "fixed_param": 0.3, "base_side": 1.0},
    "spacing": 0.25, "windows": [8, 16], "replicates": 40, "master_seed": 9,
    "functions": [{"kind": "meixner_poly", "degree": 2, "family": "pascal", "lambda": 1.0, "fixed_param": 0.3},
                  {"kind": "smoothed_indicator", "u": 1.0, "width": 0.5},
                  {"kind": "linear_combination", "terms": [{"coef": 2, "f": {"kind": "identity"}}]}]
  })");
  EXPECT_EQ(c.generator.kind, GeneratorKind::levy);
  EXPECT_EQ(c.generator.family.family, Family::pascal);
  EXPECT_EQ(c.replicates, 40u);
  EXPECT_EQ(c.master_seed, 9u);
  EXPECT_EQ(c.functions.size(), 3u);
  EXPECT_DOUBLE_EQ(c.resolved_radius(), 2.0);
  const json j = to_json(c);
  EXPECT_EQ(j["truncation_radius"], 2.0);
  EXPECT_EQ(j["method"], "lag_integration");
  const auto again = config_from_json(j);
  EXPECT_EQ(to_json(again).dump(), j.dump());
}

TEST(Config, VoronoiDefaultRadius) {
  const auto c = parse_config(R"({"generator": {"type": "voronoi", "intensity": 4.0}})");
  EXPECT_DOUBLE_EQ(c.resolved_radius(), 2.0);
  EXPECT_EQ(c.generator.dim, 2);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  auto kind_of = [](const char* text) {
    try {
      parse_config(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io;
  };
  EXPECT_EQ(kind_of(R"({"generator": {"type": "gauss-ma"}, "colour": 1})"), ErrorKind::configuration);
  EXPECT_EQ(kind_of(R"({"generator": {"type": "gauss-ma", "family": "poisson"}})"), ErrorKind::configuration);
  EXPECT_EQ(kind_of(R"({"generator": {"type": "gauss-ma"}, "functions": [{"kind": "sine"}]})"),
            ErrorKind::configuration);
  EXPECT_EQ(kind_of(R"({"generator": {"type": "gauss-ma"}, "functions": [{"kind": "identity", "x": 1}]})"),
            ErrorKind::configuration);
  EXPECT_EQ(kind_of(R"({"generator": {"type": "gauss-ma"}, "spacing": "fine"})"), ErrorKind::configuration);
  EXPECT_EQ(kind_of(R"({"generator": {"type": "levy", "family": "pascal", "fixed_param": 2}})"),
            ErrorKind::configuration);
  EXPECT_EQ(kind_of(R"({"generator": {"type": "voronoi", "dim": 1}})"), ErrorKind::configuration);
  EXPECT_EQ(kind_of(R"({"generator": {"type": "gauss-ma"}, "windows": [16, 8]})"), ErrorKind::configuration);
  EXPECT_EQ(kind_of(R"({"spacing": 0.25})"), ErrorKind::configuration);
  EXPECT_EQ(kind_of("{not json"), ErrorKind::configuration);
}

TEST(Config, FuncSpecRoundTrip) {
  const std::vector<FuncSpec> fs{
      identity_fn(), constant_fn(2.0), monomial_fn(3),
      meixner_fn(2, affine_transform(make_system(Family::gamma, 2.0, 0.5), 2.0, 1.0)),
      piecewise_linear_fn({0, 1}, {1, 3}), smoothed_indicator_fn(0.5, 0.1),
      linear_combination({{0.5, monomial_fn(2)}, {-1.0, identity_fn()}})};
  for (const auto& f : fs) {
    const FuncSpec g = funcspec_from_json(to_json(f));
    for (double x : {-1.3, 0.0, 0.7, 2.2}) EXPECT_DOUBLE_EQ(f(x), g(x));
    EXPECT_EQ(to_json(g).dump(), to_json(f).dump());
  }
}
