#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"
#include "tnet/estimation.hpp"

using namespace tnet;
using tnet::testing::small_fixture;

TEST_CASE("estimand parsing and validation") {
  CHECK(parse_estimand("ame") == EstimandKind::kAME);
  CHECK(parse_estimand("ATE") == EstimandKind::kATE);
  CHECK_THROWS_AS(parse_estimand("bogus"), ConfigError);

  CHECK_NOTHROW(EstimandSpec::ame().validate());
  CHECK_NOTHROW(EstimandSpec::ase(0.5).validate());
  CHECK_NOTHROW(EstimandSpec::ate(0.7).validate());

  EstimandSpec bad = EstimandSpec::ame();
  bad.z1 = 0.3;  // main effect must keep z = z' = 0
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = EstimandSpec::ase(0.5);
  bad.t1 = 1.0;  // spillover must keep t = t' = 0
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = EstimandSpec{EstimandKind::kATE, 1, 0.5, 1, 0.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = EstimandSpec{EstimandKind::kCustom, 0.5, 0, 0, 0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);  // t must be binary
}

TEST_CASE("plugin estimate equals tnet estimate at zero perturbation") {
  auto f = small_fixture();
  TNetModel model(f.model_cfg, 31);  // spline coefficients start at zero
  const auto spec = EstimandSpec::ame();
  const auto tnet_est =
      estimate_effect(model, f.gen.dataset, spec, EstimateMethod::kTnet);
  const auto plugin =
      estimate_effect(model, f.gen.dataset, spec, EstimateMethod::kPlugin);
  CHECK(tnet_est.average == doctest::Approx(plugin.average).epsilon(1e-14));

  tnet::testing::randomize_spline(model);
  const auto corrected =
      estimate_effect(model, f.gen.dataset, spec, EstimateMethod::kTnet);
  const auto plugin2 =
      estimate_effect(model, f.gen.dataset, spec, EstimateMethod::kPlugin);
  CHECK(plugin2.average == doctest::Approx(plugin.average).epsilon(1e-14));
  CHECK(corrected.average != plugin2.average);
}

TEST_CASE("swapping the pair negates the estimate") {
  auto f = small_fixture();
  TNetModel model(f.model_cfg, 32);
  tnet::testing::randomize_spline(model);
  EstimandSpec fwd{EstimandKind::kCustom, 1, 0.4, 0, 0.1};
  EstimandSpec rev{EstimandKind::kCustom, 0, 0.1, 1, 0.4};
  const auto a = estimate_effect(model, f.gen.dataset, fwd);
  const auto b = estimate_effect(model, f.gen.dataset, rev);
  CHECK(a.average == doctest::Approx(-b.average).epsilon(1e-14));
  CHECK((a.per_unit + b.per_unit).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("effects telescope across intermediate points") {
  auto f = small_fixture();
  TNetModel model(f.model_cfg, 33);
  tnet::testing::randomize_spline(model);
  const auto& d = f.gen.dataset;
  // psi(1,z) - psi(0,0) = [psi(1,z) - psi(1,0)] + [psi(1,0) - psi(0,0)]
  const double z = 0.6;
  const auto total =
      estimate_effect(model, d, {EstimandKind::kCustom, 1, z, 0, 0});
  const auto hop1 =
      estimate_effect(model, d, {EstimandKind::kCustom, 1, z, 1, 0});
  const auto hop2 =
      estimate_effect(model, d, {EstimandKind::kCustom, 1, 0, 0, 0});
  CHECK(total.average ==
        doctest::Approx(hop1.average + hop2.average).epsilon(1e-12));
}

TEST_CASE("degenerate custom pair estimates exactly zero") {
  auto f = small_fixture();
  TNetModel model(f.model_cfg, 34);
  const auto est = estimate_effect(
      model, f.gen.dataset, {EstimandKind::kCustom, 1, 0.3, 1, 0.3});
  CHECK(est.average == 0.0);
  CHECK(est.per_unit.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("saturated propensity floor raises the overlap warning") {
  auto f = small_fixture();
  TNetModel model(f.model_cfg, 35);
  tnet::testing::randomize_spline(model);
  // Push P(T=1) to the clamp so g1*g2 < floor for every unit at t = 1.
  model.g1_head.layers.back().bias.setConstant(-50.0);
  const auto est = estimate_effect(model, f.gen.dataset, EstimandSpec::ame());
  REQUIRE(!est.warnings.empty());
  CHECK(est.warnings[0].find("overlap") != std::string::npos);
}

TEST_CASE("percentile interval semantics") {
  std::vector<double> ladder;
  for (int v = 1; v <= 100; ++v) ladder.push_back(v);
  const auto ci = percentile_interval(ladder, 0.95);
  // Interpolated order statistics: pos = q*(n-1).
  CHECK(ci.lower == doctest::Approx(1.0 + 0.025 * 99.0).epsilon(1e-12));
  CHECK(ci.upper == doctest::Approx(1.0 + 0.975 * 99.0).epsilon(1e-12));
  CHECK(ci.level == 0.95);

  const auto flat = percentile_interval({2.5, 2.5, 2.5, 2.5}, 0.9);
  CHECK(flat.lower == 2.5);
  CHECK(flat.upper == 2.5);

  const auto pair = percentile_interval({1.0, 3.0}, 0.5);
  CHECK(pair.lower == doctest::Approx(1.5));
  CHECK(pair.upper == doctest::Approx(2.5));

  CHECK_THROWS_AS(percentile_interval({}, 0.95), ConfigError);
  CHECK_THROWS_AS(percentile_interval({1.0}, 1.0), ConfigError);
}

TEST_CASE("bootstrap rejects too few replicates and bad levels") {
  auto f = small_fixture();
  BootstrapOptions opts;
  opts.model_config = f.model_cfg;
  opts.replicates = 19;
  CHECK_THROWS_AS(bootstrap_ci(f.gen.dataset, EstimandSpec::ame(), f.train_cfg,
                               opts),
                  ConfigError);
  opts.replicates = 20;
  opts.level = 1.0;
  CHECK_THROWS_AS(bootstrap_ci(f.gen.dataset, EstimandSpec::ame(), f.train_cfg,
                               opts),
                  ConfigError);
}

TEST_CASE("bootstrap produces a finite percentile interval") {
  auto f = small_fixture();
  f.train_cfg.iterations = 3;
  BootstrapOptions opts;
  opts.model_config = f.model_cfg;
  opts.replicates = 20;
  const auto est =
      bootstrap_ci(f.gen.dataset, EstimandSpec::ame(), f.train_cfg, opts);
  REQUIRE(est.ci.has_value());
  CHECK(est.ci->lower <= est.ci->upper);
  CHECK(std::isfinite(est.ci->lower));
  CHECK(std::isfinite(est.average));
  CHECK(est.ci->level == 0.95);

  // Same seeds, same interval.
  const auto again =
      bootstrap_ci(f.gen.dataset, EstimandSpec::ame(), f.train_cfg, opts);
  CHECK(again.ci->lower == est.ci->lower);
  CHECK(again.ci->upper == est.ci->upper);
  CHECK(again.average == est.average);
}
