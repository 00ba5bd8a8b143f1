#pragma once

#include <cstddef>
#include <vector>

#include "stann/errors.hpp"

namespace stann::baselines {

// tau copies of the last observed row.
std::vector<std::vector<double>> naive_forecast(const std::vector<std::vector<double>>& prices,
                                                std::size_t tau);

// Univariate autoregression fit by OLS on [x_{t-1} .. x_{t-l}, 1].
struct ArModel {
  std::size_t lag = 0;
  std::vector<double> coeffs;  // lag coefficients then intercept
  bool used_ridge = false;     // singular normal equations fell back to ridge
};

ArModel ar_fit(const std::vector<double>& series, std::size_t lag);

// Iterates the fitted recursion tau steps beyond the history.
std::vector<double> ar_forecast(const ArModel& model, const std::vector<double>& history,
                                std::size_t tau);

// AIC-selected lag in [1, max_lag].
std::size_t ar_select_lag(const std::vector<double>& series, std::size_t max_lag = 10);

// Per-series AR forecast of a whole panel; lag picked by AIC when lag == 0.
std::vector<std::vector<double>> ar_panel_forecast(const std::vector<std::vector<double>>& prices,
                                                   std::size_t tau, std::size_t lag = 0);

}  // namespace stann::baselines
