#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "stann/baselines.hpp"
#include "stann/data.hpp"

using namespace stann;

TEST_CASE("ingest: well-formed file, shape, round trip") {
  const std::string csv =
      "date,AAA,BBB\n"
      "2020-01-01,10.5,20\n"
      "2020-01-02,10.6,20.5\n"
      "2020-01-03,10.4,21\n";
  auto frame = data::ingest_text(csv, data::MissingPolicy::kReject);
  CHECK(frame.rows() == 3);
  CHECK(frame.series() == 2);
  CHECK(frame.tickers[0] == "AAA");
  CHECK(frame.values[2][1] == 21.0);

  const auto path = (std::filesystem::temp_directory_path() / "stann_frame.csv").string();
  data::write_frame_csv(path, frame);
  auto again = data::ingest(path, data::MissingPolicy::kReject);
  CHECK(again.dates == frame.dates);
  CHECK(again.tickers == frame.tickers);
  CHECK(again.values == frame.values);
  std::remove(path.c_str());
}

TEST_CASE("ingest rejects malformed inputs") {
  using data::MissingPolicy;
  CHECK_THROWS_WITH_AS(
      data::ingest_text("date,A\n2020-01-01,1\n2020-01-01,2\n", MissingPolicy::kReject),
      doctest::Contains("duplicate date"), DataError);
  CHECK_THROWS_WITH_AS(
      data::ingest_text("date,A\n2020-01-02,1\n2020-01-01,2\n", MissingPolicy::kReject),
      doctest::Contains("not increasing"), DataError);
  CHECK_THROWS_WITH_AS(data::ingest_text("date,A\n2020-01-01,-3\n", MissingPolicy::kReject),
                       doctest::Contains("non-positive"), DataError);
  CHECK_THROWS_WITH_AS(data::ingest_text("date,A\n2020-01-01,\n", MissingPolicy::kForwardFill),
                       doctest::Contains("leading gap"), DataError);
  CHECK_THROWS_AS(data::ingest_text("ticker,A\n2020-01-01,1\n", MissingPolicy::kReject),
                  DataError);
  CHECK_THROWS_AS(data::ingest_text("date,A\nnot-a-date,1\n", MissingPolicy::kReject), DataError);
}

TEST_CASE("interior gaps: forward fill copies, reject raises") {
  const std::string csv =
      "date,A,B\n"
      "2020-01-01,5,7\n"
      "2020-01-02,,7.5\n"
      "2020-01-03,5.2,8\n";
  auto filled = data::ingest_text(csv, data::MissingPolicy::kForwardFill);
  CHECK(filled.values[1][0] == 5.0);
  CHECK(filled.values[1][1] == 7.5);
  CHECK_THROWS_WITH_AS(data::ingest_text(csv, data::MissingPolicy::kReject),
                       doctest::Contains("missing value"), DataError);
}

TEST_CASE("synthetic panels are seed-deterministic") {
  auto a = data::synth("ar1_panel", 100, 3, 42);
  auto b = data::synth("ar1_panel", 100, 3, 42);
  CHECK(a.values == b.values);
  auto c = data::synth("ar1_panel", 100, 3, 43);
  CHECK(a.values != c.values);
  CHECK_THROWS_AS(data::synth("fancy_panel", 10, 2, 1), UsageError);
}

TEST_CASE("ar1 panel with phi=0 has near-zero return autocorrelation") {
  data::Ar1PanelParams p;
  p.rows = 2000;
  p.series = 1;
  p.phi = 0.0;
  auto frame = data::synth_ar1_panel(p, 7);

  std::vector<double> returns;
  for (std::size_t t = 1; t < frame.rows(); ++t) {
    returns.push_back(frame.values[t][0] / frame.values[t - 1][0] - 1.0);
  }
  double mean = 0;
  for (double r : returns) mean += r;
  mean /= returns.size();
  double num = 0, den = 0;
  for (std::size_t t = 1; t < returns.size(); ++t) {
    num += (returns[t] - mean) * (returns[t - 1] - mean);
  }
  for (double r : returns) den += (r - mean) * (r - mean);
  CHECK(std::abs(num / den) < 0.1);
}

TEST_CASE("regime_switch segments recover their AR orders by AIC") {
  data::RegimeSwitchParams p;
  p.rows = 1200;
  p.series = 1;
  p.segment_len = 300;
  auto frame = data::synth_regime_switch(p, 21);

  auto segment_returns = [&](std::size_t seg) {
    std::vector<double> out;
    for (std::size_t t = seg * p.segment_len + 1; t < (seg + 1) * p.segment_len; ++t) {
      out.push_back(frame.values[t][0] / frame.values[t - 1][0] - 1.0);
    }
    return out;
  };
  // segments alternate AR(1), AR(2), AR(1), AR(2)
  CHECK(baselines::ar_select_lag(segment_returns(0), 4) == 1);
  CHECK(baselines::ar_select_lag(segment_returns(1), 4) == 2);
  CHECK(baselines::ar_select_lag(segment_returns(2), 4) == 1);
  CHECK(baselines::ar_select_lag(segment_returns(3), 4) == 2);
}

TEST_CASE("dominant asset panel: strict monotonicity and dominance") {
  data::DominantAssetParams p;
  p.rows = 150;
  p.series = 3;
  auto frame = data::synth_dominant_asset(p, 5);

  for (std::size_t t = 1; t < frame.rows(); ++t) {
    CHECK(frame.values[t][0] > frame.values[t - 1][0]);
    for (std::size_t i = 1; i < 3; ++i) CHECK(frame.values[t][i] < frame.values[t - 1][i]);
  }
  CHECK(frame.values.back()[0] > frame.values.back()[1]);
}

TEST_CASE("synthetic dates are strictly increasing ISO strings") {
  auto frame = data::synth("regime_switch", 400, 2, 3);
  for (std::size_t t = 1; t < frame.rows(); ++t) CHECK(frame.dates[t] > frame.dates[t - 1]);
  CHECK(frame.dates[0].size() == 10);
}
