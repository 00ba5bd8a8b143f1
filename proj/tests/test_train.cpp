#include <doctest.h>

#include <cmath>

#include "stann/data.hpp"
#include "stann/train.hpp"

using namespace stann;
using diff::Tensor;

TEST_CASE("iqr normalization: hand example, round trip, scale equivariance") {
  std::vector<std::vector<double>> rows{{1}, {2}, {3}, {4}, {5}};
  auto scaler = train::IqrScaler::fit(rows);
  CHECK(scaler.median[0] == 3.0);
  CHECK(scaler.iqr[0] == 2.0);
  auto norm = scaler.normalize(rows);
  const std::vector<double> expected{-1.0, -0.5, 0.0, 0.5, 1.0};
  for (std::size_t t = 0; t < 5; ++t) CHECK(norm[t][0] == doctest::Approx(expected[t]));

  auto back = scaler.denormalize(norm);
  for (std::size_t t = 0; t < 5; ++t) CHECK(back[t][0] == doctest::Approx(rows[t][0]).epsilon(1e-10));

  // scaling by 10 scales the IQR by 10 and leaves the normalized output unchanged
  std::vector<std::vector<double>> tens{{10}, {20}, {30}, {40}, {50}};
  auto scaler10 = train::IqrScaler::fit(tens);
  CHECK(scaler10.iqr[0] == 20.0);
  auto norm10 = scaler10.normalize(tens);
  for (std::size_t t = 0; t < 5; ++t) CHECK(norm10[t][0] == doctest::Approx(norm[t][0]));

  std::vector<std::vector<double>> constant{{7}, {7}, {7}, {7}};
  std::vector<std::string> names{"FLAT"};
  CHECK_THROWS_WITH_AS(train::IqrScaler::fit(constant, &names),
                       doctest::Contains("FLAT"), DataError);
}

TEST_CASE("adam: zero gradient no-op, first-step magnitude, determinism") {
  auto p = Tensor::from_data({2}, {1.0, -2.0}, true);
  std::vector<Tensor*> params{&p};
  auto state = train::AdamState::for_params(params);

  p.zero_grad();
  CHECK(train::adam_step(params, state, 0.1, 0.9, 0.999, 1e-8));
  CHECK(p.data()[0] == 1.0);
  CHECK(p.data()[1] == -2.0);

  // first step with gradient g moves by ~lr * sign(g)
  auto q = Tensor::from_data({1}, {0.0}, true);
  std::vector<Tensor*> qp{&q};
  auto qs = train::AdamState::for_params(qp);
  q.zero_grad();
  diff::backward(diff::scale(q, 3.0));  // dL/dq = 3
  CHECK(train::adam_step(qp, qs, 0.05, 0.9, 0.999, 1e-8));
  CHECK(q.data()[0] == doctest::Approx(-0.05).epsilon(1e-6));

  // identical runs produce identical parameters
  auto run = [] {
    auto t = Tensor::from_data({3}, {0.5, -0.5, 1.5}, true);
    std::vector<Tensor*> tp{&t};
    auto st = train::AdamState::for_params(tp);
    for (int k = 0; k < 5; ++k) {
      t.zero_grad();
      diff::backward(diff::sq_l2(t));
      train::adam_step(tp, st, 0.01, 0.9, 0.999, 1e-8);
    }
    return std::vector<double>(t.data().begin(), t.data().end());
  };
  CHECK(run() == run());

  // non-finite grads reject the step
  auto r = Tensor::from_data({1}, {1.0}, true);
  std::vector<Tensor*> rp{&r};
  auto rs = train::AdamState::for_params(rp);
  r.zero_grad();
  const_cast<double&>(r.grad()[0]) = std::numeric_limits<double>::infinity();
  CHECK_FALSE(train::adam_step(rp, rs, 0.1, 0.9, 0.999, 1e-8));
  CHECK(r.data()[0] == 1.0);
}

TEST_CASE("cosine annealing with warm restarts") {
  train::TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.lr_min = 0.001;
  cfg.scheduler_period = 10;
  cfg.scheduler_period_mult = 1.0;

  CHECK(train::lr_schedule(0, cfg) == doctest::Approx(0.1));
  CHECK(train::lr_schedule(9, cfg) ==
        doctest::Approx(cfg.lr_min + (0.1 - 0.001) * 0.5 * (1.0 + std::cos(3.141592653589793 * 0.9))));
  CHECK(train::lr_schedule(10, cfg) == doctest::Approx(0.1));  // restart boundary

  cfg.scheduler_period_mult = 2.0;
  CHECK(train::lr_schedule(10, cfg) == doctest::Approx(0.1));
  CHECK(train::lr_schedule(30, cfg) == doctest::Approx(0.1));  // second restart at 10+20
}

namespace {

train::TrainConfig fast_config() {
  train::TrainConfig cfg;
  cfg.epochs = 60;
  cfg.latent_dim = 4;
  cfg.max_lag = 4;
  cfg.decoder_stack = {1, 1, 8};
  cfg.dynamic_stack = {1, 1, 8};
  cfg.learning_rate = 0.03;
  cfg.scheduler_period = 60;
  cfg.lambda = 0.2;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("fit: loss decreases on a synthetic panel and runs are deterministic") {
  data::Ar1PanelParams p;
  p.rows = 200;
  p.series = 3;
  auto frame = data::synth_ar1_panel(p, 11);

  auto cfg = fast_config();
  auto result = train::fit(frame.values, cfg, &frame.tickers);
  REQUIRE(!result.diverged);
  REQUIRE(result.loss_curve.size() == cfg.epochs);
  CHECK(result.loss_curve.back() < 0.5 * result.loss_curve.front());

  auto again = train::fit(frame.values, cfg, &frame.tickers);
  CHECK(result.loss_curve == again.loss_curve);
  const auto a = result.checkpoint.latents.states.data();
  const auto b = again.checkpoint.latents.states.data();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("fit: zero epochs returns the initialized checkpoint") {
  data::Ar1PanelParams p;
  p.rows = 50;
  p.series = 2;
  auto frame = data::synth_ar1_panel(p, 13);
  auto cfg = fast_config();
  cfg.epochs = 0;
  auto result = train::fit(frame.values, cfg, &frame.tickers);
  CHECK(result.loss_curve.empty());
  CHECK(!result.diverged);

  auto fresh = model::init_latents(50, 2, cfg.latent_dim, cfg.seed);
  const auto a = result.checkpoint.latents.states.data();
  const auto b = fresh.states.data();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("fit rejects short or bad input") {
  std::vector<std::vector<double>> tiny(5, std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(train::fit(tiny, fast_config()), std::invalid_argument);
}

TEST_CASE("cv splits: bounds, non-overlap, single origin") {
  auto splits = train::make_cv_splits(200, 100, 21, 3);
  REQUIRE(splits.size() == 3);
  CHECK(splits[0].origin == 200 - 63);
  for (const auto& s : splits) {
    CHECK(s.origin >= s.window);
    CHECK(s.origin + s.tau <= 200);
  }
  for (std::size_t k = 1; k < splits.size(); ++k) {
    CHECK(splits[k].origin == splits[k - 1].origin + 21);
  }
  CHECK_THROWS_AS(train::make_cv_splits(100, 90, 21, 2), DataError);
}

TEST_CASE("rolling-origin cv scores a forecaster against the held-out slice") {
  data::Ar1PanelParams p;
  p.rows = 260;
  p.series = 2;
  auto frame = data::synth_ar1_panel(p, 17);

  // naive forecaster: metrics must pin relative MASE and Theil's U at 1
  auto naive = [](const std::vector<std::vector<double>>& rows, std::size_t tau,
                  std::uint64_t) {
    return std::vector<std::vector<double>>(tau, rows.back());
  };
  auto cv = train::rolling_origin_cv(frame.values, naive, 150, 21, 4, 5);
  REQUIRE(cv.cells.size() == 4 * 2);
  for (const auto& cell : cv.cells) {
    CHECK(cell.rel_mase == 1.0);
    CHECK(cell.rel_theil == 1.0);
  }

  // no test leakage: training slices end before the origin
  for (std::size_t k = 0; k < cv.splits.size(); ++k) {
    CHECK(cv.splits[k].origin + cv.splits[k].tau <= frame.values.size());
  }

  // parallel and sequential agree
  auto seq = train::rolling_origin_cv(frame.values, naive, 150, 21, 4, 5, false);
  REQUIRE(seq.cells.size() == cv.cells.size());
  for (std::size_t i = 0; i < seq.cells.size(); ++i) {
    CHECK(seq.cells[i].mase == cv.cells[i].mase);
  }
}

TEST_CASE("random search: budget one, argmin contract, determinism") {
  train::SearchSpace space;
  auto base = fast_config();
  std::vector<double> seen;
  auto objective = [&](const train::TrainConfig& cfg) {
    const double score = cfg.lambda;  // deterministic function of the sample
    seen.push_back(score);
    return score;
  };
  auto one = train::random_search(space, 1, base, objective, 3);
  CHECK(one.scores.size() == 1);
  CHECK(one.best_score == seen[0]);

  seen.clear();
  auto many = train::random_search(space, 8, base, objective, 3);
  for (double s : many.scores) CHECK(many.best_score <= s);
  CHECK(many.best.lambda == many.best_score);

  auto again = train::random_search(space, 8, base, objective, 3);
  CHECK(again.scores == many.scores);

  CHECK_THROWS_AS(train::random_search(space, 0, base, objective, 3), std::invalid_argument);
}

TEST_CASE("sampled configs respect the declared ranges") {
  train::SearchSpace space;
  Rng rng(23);
  auto base = fast_config();
  for (int k = 0; k < 50; ++k) {
    auto cfg = train::sample_config(space, base, rng);
    CHECK(cfg.lambda >= 0.01);
    CHECK(cfg.lambda <= 1.0);
    CHECK(std::find(space.latent_dim.begin(), space.latent_dim.end(), cfg.latent_dim) !=
          space.latent_dim.end());
    CHECK(std::find(space.train_window.begin(), space.train_window.end(), cfg.train_window) !=
          space.train_window.end());
  }
}
