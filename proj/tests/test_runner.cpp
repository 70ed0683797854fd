#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "madprops/runner.hpp"

using namespace madprops;
using nlohmann::json;
namespace fs = std::filesystem;

TEST_CASE("parallel_for is order-deterministic") {
  Vec a(1000), b(1000);
  parallel_for(1000, 1, [&](int i) { a[static_cast<std::size_t>(i)] = std::sin(i); });
  parallel_for(1000, 4, [&](int i) { b[static_cast<std::size_t>(i)] = std::sin(i); });
  CHECK(a == b);
  std::atomic<int> count{0};
  parallel_for(177, 3, [&](int) { count.fetch_add(1); });
  CHECK(count.load() == 177);
}

TEST_CASE("config parsing and validation") {
  json j = {{"target", {{"id", "gaussian"}, {"d", 2}, {"sigma", 1.0}}},
            {"kernel", {{"id", "slingshot"}, {"p", 16}}},
            {"iterations", 500},
            {"seed", 9}};
  auto cfg = parse_config_json(j);
  CHECK(cfg.effective_burn_in() == 125);  // defaults to a quarter
  CHECK(cfg.iterations == 500);

  CHECK_THROWS_AS(parse_config_json(json{{"kernel", {{"id", "rwm"}}}}), ConfigError);
  CHECK_THROWS_AS(build_target(json{{"id", "unknown"}}), ConfigError);
  CHECK_THROWS_AS(parse_config_file("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("target and kernel factories cover the published ids") {
  auto gaussian = build_target(json{{"id", "gaussian"}, {"d", 3}, {"sigma", 2.0}});
  CHECK(gaussian->dim == 3);
  auto banana = build_target(json{{"id", "banana"}});
  CHECK(banana->dim == 2);
  auto mixture = build_target(
      json{{"id", "mixture"}, {"weights", {0.3, 0.5, 1.0}}, {"centers", {-7.0, -2.0, 2.0}}, {"tau", 0.354}});
  CHECK(mixture->dim == 1);
  auto prior = build_target(json{{"id", "gaussian_ref"}, {"spectrum", {1.0, 0.5, 0.25}}});
  CHECK(prior->reference.kind == ReferenceMeasure::Kind::GaussianZeroMean);

  for (const std::string id :
       {"slingshot", "bubble", "local", "mtm", "naive", "conv", "rwm", "mala",
        "hmc_barker", "hmc_metropolis", "indep_mp"}) {
    auto spec = build_kernel(json{{"id", id}, {"p", 4}}, gaussian);
    CHECK(spec.p == 4);
  }
  for (const std::string id : {"pcn", "mtpcn", "lmtpcn", "localpcn", "infmala"}) {
    auto spec = build_kernel(json{{"id", id}, {"p", 4}, {"rho", 0.5}}, prior);
    CHECK(spec.proposal.dim == 3);
  }
  CHECK_THROWS_AS(build_kernel(json{{"id", "bogus"}}, gaussian), ConfigError);

  // rwm default follows the optimal-scaling rule 2.4 / sqrt(d).
  auto rwm = build_kernel(json{{"id", "rwm"}}, gaussian);
  CHECK(rwm.proposal.sigma == doctest::Approx(2.4 / std::sqrt(3.0)));
}

TEST_CASE("observable factory") {
  auto q2 = build_observable("q2", 3);
  CHECK(q2.fn({1.0, 5.0, 2.0}) == 5.0);
  CHECK(build_observable("norm2", 2).fn({3.0, 4.0}) == doctest::Approx(25.0));
  CHECK_THROWS_AS(build_observable("q9", 2), ConfigError);
  CHECK_THROWS_AS(build_observable("sin", 2), ConfigError);
}

TEST_CASE("adaptive run reaches the target acceptance rate") {
  auto target = build_target(json{{"id", "gaussian"}, {"d", 1}, {"sigma", 1.0}});
  AdaptPolicy policy;
  policy.target_rate = 0.5;
  auto make_spec = [&](double sigma) {
    return build_kernel(json{{"id", "slingshot"}, {"p", 64}}, target, sigma);
  };
  auto res = run_chain_adaptive(make_spec, 20.0, *target, {0.0}, 30000, 10000, policy, {},
                                41, 0);
  const ChainTrace& tr = res.trace;
  double acc = 0.0;
  for (int k = tr.burn_in; k < tr.iterations; ++k)
    acc += tr.accepted_flags[static_cast<std::size_t>(k)];
  acc /= (tr.iterations - tr.burn_in);
  CHECK(std::fabs(acc - 0.5) < 0.07);
  CHECK(res.epoch_sigmas.size() > 3);
  CHECK_THROWS_AS(run_chain_adaptive(make_spec, 1.0, *target, {0.0}, 100, 50,
                                     AdaptPolicy{.target_rate = 0.0}, {}, 1, 0),
                  ParameterError);
}

TEST_CASE("analytic moments for closed-form targets") {
  auto gaussian = build_target(json{{"id", "gaussian"}, {"d", 2}, {"sigma", 3.0}});
  auto mom = analytic_moments(*gaussian, json{{"id", "gaussian"}, {"d", 2}, {"sigma", 3.0}});
  REQUIRE(mom.has_value());
  CHECK(mom->first[0] == 0.0);
  CHECK(mom->second[0] == 9.0);

  auto banana = build_target(json{{"id", "banana"}});
  CHECK_FALSE(analytic_moments(*banana, json{{"id", "banana"}}).has_value());

  json mix = {{"id", "mixture"}, {"weights", {1.0, 1.0}}, {"centers", {-1.0, 1.0}}, {"tau", 0.5}};
  auto mixture = build_target(mix);
  auto mmom = analytic_moments(*mixture, mix);
  REQUIRE(mmom.has_value());
  CHECK(mmom->first[0] == doctest::Approx(0.0));
  CHECK(mmom->second[0] == doctest::Approx(1.25));
}

TEST_CASE("cmd_run writes chains and a complete summary") {
  const fs::path dir = fs::temp_directory_path() / "madprops_test_run";
  fs::remove_all(dir);
  json j = {{"target", {{"id", "gaussian"}, {"d", 1}, {"sigma", 1.0}}},
            {"kernel", {{"id", "rwm"}, {"sigma", 2.4}}},
            {"iterations", 100},
            {"burn_in", 20},
            {"replicates", 2},
            {"observables", {"q1"}},
            {"seed", 7}};
  cmd_run(parse_config_json(j), dir.string(), 2);
  CHECK(fs::exists(dir / "chain_000.csv"));
  CHECK(fs::exists(dir / "chain_001.csv"));
  std::ifstream in(dir / "summary.json");
  json summary;
  in >> summary;
  for (const std::string key :
       {"mean", "se", "ess_mean", "ess_min", "acceptance_rate", "wall_seconds"})
    CHECK(summary.contains(key));
}

TEST_CASE("sweep requires a nonempty grid and limitcheck needs two points") {
  json base = {{"target", {{"id", "gaussian"}, {"d", 1}, {"sigma", 1.0}}},
               {"kernel", {{"id", "slingshot"}, {"p", 8}}},
               {"iterations", 200},
               {"seed", 3}};
  auto cfg = parse_config_json(base);
  CHECK_THROWS_AS(cmd_sweep(cfg, (fs::temp_directory_path() / "mp_sweep").string(), 1),
                  ParameterError);
  cfg.p_list = {8};
  CHECK_THROWS_AS(cmd_limitcheck(cfg, (fs::temp_directory_path() / "mp_lc").string(), 1),
                  ParameterError);
  ExperimentConfig tune_cfg = cfg;
  tune_cfg.target_rates = {1.0};
  CHECK_THROWS_AS(cmd_tune(tune_cfg, (fs::temp_directory_path() / "mp_tune").string(), 1),
                  ParameterError);
}
