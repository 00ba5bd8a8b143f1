#include <doctest.h>

#include <cmath>

#include "stann/metrics.hpp"
#include "stann/rng.hpp"

using namespace stann;

namespace {

metrics::EvalFrame random_frame(Rng& rng, std::size_t insample_len = 30, std::size_t tau = 8) {
  metrics::EvalFrame f;
  double level = 50.0 + 10.0 * rng.uniform();
  for (std::size_t t = 0; t < insample_len; ++t) {
    level += rng.normal(0.0, 1.0);
    f.insample.push_back(level);
  }
  for (std::size_t s = 0; s < tau; ++s) {
    level += rng.normal(0.0, 1.0);
    f.actual.push_back(level);
    f.forecast.push_back(level + rng.normal(0.0, 2.0));
  }
  return f;
}

// Plain-loop oracles, independent of the implementation path.
double oracle_mase(const metrics::EvalFrame& f) {
  double denom = 0.0;
  for (std::size_t j = 1; j < f.insample.size(); ++j) {
    denom += std::abs(f.insample[j] - f.insample[j - 1]);
  }
  denom /= static_cast<double>(f.insample.size() - 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < f.actual.size(); ++i) acc += std::abs(f.actual[i] - f.forecast[i]);
  return acc / static_cast<double>(f.actual.size()) / denom;
}

double oracle_theil(const metrics::EvalFrame& f) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f.actual.size(); ++i) {
    num += std::pow(f.actual[i] - f.forecast[i], 2);
    den += std::pow(f.actual[i] - f.insample.back(), 2);
  }
  return std::sqrt(num) / std::sqrt(den);
}

}  // namespace

TEST_CASE("mase: perfect forecast, hand example, scale invariance") {
  metrics::EvalFrame f;
  f.insample = {1, 2, 3, 4};
  f.actual = {5, 6};
  f.forecast = {5, 6};
  CHECK(metrics::mase(f) == 0.0);

  f.forecast = {4, 4};
  CHECK(metrics::mase(f) == doctest::Approx(1.5).epsilon(1e-15));

  for (double c : {0.01, 1.0, 1000.0}) {
    metrics::EvalFrame g;
    for (double v : f.insample) g.insample.push_back(c * v);
    for (double v : f.actual) g.actual.push_back(c * v);
    for (double v : f.forecast) g.forecast.push_back(c * v);
    CHECK(metrics::mase(g) == doctest::Approx(1.5).epsilon(1e-12));
  }

  metrics::EvalFrame constant;
  constant.insample = {3, 3, 3};
  constant.actual = {3};
  constant.forecast = {3};
  CHECK_THROWS_AS(metrics::mase(constant), NumericError);
}

TEST_CASE("theil_u: persistence scores exactly one, perfect scores zero") {
  metrics::EvalFrame f;
  f.insample = {10, 11, 12};
  f.actual = {13, 14, 15};
  f.forecast = {12, 12, 12};  // the persistence forecast
  CHECK(metrics::theil_u(f) == 1.0);

  f.forecast = f.actual;
  CHECK(metrics::theil_u(f) == 0.0);

  f.actual = {12, 12, 12};  // actuals equal persistence -> undefined
  CHECK_THROWS_AS(metrics::theil_u(f), NumericError);
}

TEST_CASE("mda: all-correct, persistence-vs-monotone, enumerated two-of-three") {
  metrics::EvalFrame f;
  f.insample = {10, 10.5, 11};
  f.actual = {12, 13, 14};
  f.forecast = {11.5, 12.2, 13.9};
  CHECK(metrics::mda(f) == 1.0);

  // naive forecast has sign(0) everywhere; strictly monotone actuals -> 0
  f.forecast = {11, 11, 11};
  CHECK(metrics::mda(f) == 0.0);

  f.forecast = {12, 10, 13};  // up, down(wrong), up
  CHECK(metrics::mda(f) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("ipf: per-step identity with mase, element-wise oracle") {
  Rng rng(7);
  auto f = random_frame(rng);
  auto steps = metrics::ipf(f);
  REQUIRE(steps.size() == f.actual.size());
  CHECK(metrics::mase(f) == metrics::mean_of(steps));  // identical, same path

  auto perfect = f;
  perfect.forecast = perfect.actual;
  auto zero_steps = metrics::ipf(perfect);
  for (double v : zero_steps) CHECK(v == 0.0);
}

TEST_CASE("metric oracles over 100 random instances") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    auto f = random_frame(rng, 20 + seed % 30, 3 + seed % 10);
    CHECK(metrics::mase(f) == doctest::Approx(oracle_mase(f)).epsilon(1e-12));
    CHECK(metrics::theil_u(f) == doctest::Approx(oracle_theil(f)).epsilon(1e-12));
    auto steps = metrics::ipf(f);
    double denom = 0.0;
    for (std::size_t j = 1; j < f.insample.size(); ++j)
      denom += std::abs(f.insample[j] - f.insample[j - 1]);
    denom /= static_cast<double>(f.insample.size() - 1);
    for (std::size_t i = 0; i < steps.size(); ++i) {
      CHECK(steps[i] ==
            doctest::Approx(std::abs(f.actual[i] - f.forecast[i]) / denom).epsilon(1e-12));
    }
  }
}

TEST_CASE("relative report pins naive at exactly one") {
  std::vector<metrics::ScoreRow> naive{{0.8, 1.0, 0.1}, {1.2, 1.0, 0.0}};
  auto rep = metrics::relative_report(naive, naive);
  CHECK(rep.mase_mean == 1.0);
  CHECK(rep.mase_std == 0.0);
  CHECK(rep.theil_mean == 1.0);
  CHECK(rep.theil_std == 0.0);
  CHECK(rep.mda_mean == doctest::Approx(0.05));

  std::vector<metrics::ScoreRow> model{{0.4, 0.5, 0.6}, {0.6, 0.5, 0.7}};
  auto rel = metrics::relative_report(model, naive);
  CHECK(rel.mase_mean == doctest::Approx((0.4 / 0.8 + 0.6 / 1.2) / 2.0));
  CHECK(rel.mda_mean == doctest::Approx(0.65));

  CHECK_THROWS_AS(metrics::relative_report(model, {}), std::invalid_argument);
  std::vector<metrics::ScoreRow> zero_naive{{0.0, 1.0, 0.1}, {1.0, 1.0, 0.1}};
  CHECK_THROWS_AS(metrics::relative_report(model, zero_naive), NumericError);
}

TEST_CASE("metrics validate their frames") {
  metrics::EvalFrame f;
  f.insample = {1, 2};
  f.actual = {};
  f.forecast = {};
  CHECK_THROWS_AS(metrics::mase(f), std::invalid_argument);
  f.actual = {1.0};
  CHECK_THROWS_AS(metrics::mase(f), std::invalid_argument);  // length mismatch
  f.forecast = {1.0};
  f.insample = {1.0};
  CHECK_THROWS_AS(metrics::mase(f), std::invalid_argument);  // insample too short
}
