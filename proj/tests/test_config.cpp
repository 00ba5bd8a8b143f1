#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "stann/config.hpp"

using namespace stann;

TEST_CASE("config file: key = value parsing with overrides") {
  const auto path = (std::filesystem::temp_directory_path() / "stann_cfg.txt").string();
  {
    std::ofstream os(path);
    os << "# comment\n"
       << "tau = 10\n"
       << "variant = stann-d\n"
       << "lambda = 0.25\n"
       << "\n"
       << "use_actm = true\n";
  }
  auto cfg = cli::RunConfig::from_file(path);
  CHECK(cfg.index("tau") == 10);
  CHECK(cfg.str("variant") == "stann-d");
  CHECK(cfg.num("lambda") == 0.25);
  CHECK(cfg.flag("use_actm"));
  // defaults fill unset keys
  CHECK(cfg.index("epochs") == 200);

  cfg.set("tau", "21");  // flag override
  CHECK(cfg.index("tau") == 21);
  std::remove(path.c_str());
}

TEST_CASE("unknown keys are rejected") {
  const auto path = (std::filesystem::temp_directory_path() / "stann_cfg_bad.txt").string();
  {
    std::ofstream os(path);
    os << "taus = 21\n";
  }
  CHECK_THROWS_WITH_AS(cli::RunConfig::from_file(path), doctest::Contains("unknown config key"),
                       UsageError);
  cli::RunConfig cfg;
  CHECK_THROWS_AS(cfg.set("not_a_key", "1"), UsageError);
  std::remove(path.c_str());
}

TEST_CASE("typed getters validate") {
  cli::RunConfig cfg;
  cfg.set("lambda", "abc");
  CHECK_THROWS_AS(cfg.num("lambda"), UsageError);
  cfg.set("epochs", "-3");
  CHECK_THROWS_AS(cfg.index("epochs"), UsageError);
  cfg.set("use_actm", "maybe");
  CHECK_THROWS_AS(cfg.flag("use_actm"), UsageError);
}

TEST_CASE("train_config resolution and the stnn special case") {
  cli::RunConfig cfg;
  cfg.set("variant", "stnn");
  cfg.set("latent_dim", "6");
  cfg.set("delta", "mae");
  auto tc = cfg.train_config();
  CHECK(tc.variant == model::Variant::kPlain);
  CHECK_FALSE(tc.use_actm);  // stnn pins the single-lag case
  CHECK(tc.latent_dim == 6);
  CHECK(tc.delta == model::LossConfig::Delta::kMae);
  CHECK(tc.model_config(3).max_lag == 1);

  cli::RunConfig full;
  full.set("variant", "stann-r");
  auto tr = full.train_config();
  CHECK(tr.variant == model::Variant::kR);
  CHECK(tr.use_actm);
  CHECK(tr.model_config(3).max_lag == 64);

  full.set("delta", "huber");
  CHECK_THROWS_AS(full.train_config(), UsageError);
}
