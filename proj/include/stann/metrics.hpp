#pragma once

#include <cstddef>
#include <vector>

#include "stann/errors.hpp"

namespace stann::metrics {

// One evaluation frame for a single series: the in-sample (training) slice,
// the tau realized values and the tau predictions.
struct EvalFrame {
  std::vector<double> insample;
  std::vector<double> actual;
  std::vector<double> forecast;
  std::size_t seasonality = 1;
};

void validate(const EvalFrame& frame);

// Per-step absolute scaled error: |actual - forecast| over the mean
// in-sample one-step (season-s) naive absolute error.
std::vector<double> ipf(const EvalFrame& frame);

// Mean absolute scaled error == mean(ipf), by construction.
double mase(const EvalFrame& frame);

// Theil's U against horizon persistence: RMSE(forecast) / RMSE(last
// in-sample value held flat). The persistence forecast scores exactly 1.
double theil_u(const EvalFrame& frame);

// Mean directional accuracy of the cumulative change against the last
// in-sample value; sign(0) matches nothing but itself.
double mda(const EvalFrame& frame);

// --- relative-to-naive reporting ----------------------------------------------

struct ScoreRow {
  double mase = 0.0;
  double theil_u = 0.0;
  double mda = 0.0;
};

struct RelativeReport {
  double mase_mean = 0.0;
  double mase_std = 0.0;
  double theil_mean = 0.0;
  double theil_std = 0.0;
  double mda_mean = 0.0;
  double mda_std = 0.0;
  std::size_t runs = 0;
};

// Scaled metrics divided by the naive run's, per entry, then mean +/- std
// (sample std, 0 when fewer than two runs); MDA reported raw.
RelativeReport relative_report(const std::vector<ScoreRow>& model,
                               const std::vector<ScoreRow>& naive);

double mean_of(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);
double median_of(std::vector<double> v);

}  // namespace stann::metrics
