#include "stann/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stann::baselines {

std::vector<std::vector<double>> naive_forecast(const std::vector<std::vector<double>>& prices,
                                                std::size_t tau) {
  if (prices.empty()) throw std::invalid_argument("naive_forecast: empty input");
  return std::vector<std::vector<double>>(tau, prices.back());
}

namespace {

// Gaussian elimination with partial pivoting; returns false on a pivot
// collapse so the caller can re-solve with a ridge term.
bool solve_inplace(std::vector<std::vector<double>>& a, std::vector<double>& b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-12) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double factor = a[r][col] / a[col][col];
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return true;
}

struct OlsFit {
  std::vector<double> coeffs;
  double rss = 0.0;
  std::size_t samples = 0;
  bool used_ridge = false;
};

OlsFit ols_ar(const std::vector<double>& x, std::size_t lag) {
  const std::size_t dim = lag + 1;  // lags + intercept
  const std::size_t samples = x.size() - lag;
  std::vector<std::vector<double>> xtx(dim, std::vector<double>(dim, 0.0));
  std::vector<double> xty(dim, 0.0);
  auto regressor = [&](std::size_t t, std::size_t j) {
    return j < lag ? x[t - 1 - j] : 1.0;
  };
  for (std::size_t t = lag; t < x.size(); ++t) {
    for (std::size_t j = 0; j < dim; ++j) {
      xty[j] += regressor(t, j) * x[t];
      for (std::size_t k = j; k < dim; ++k) xtx[j][k] += regressor(t, j) * regressor(t, k);
    }
  }
  for (std::size_t j = 0; j < dim; ++j)
    for (std::size_t k = 0; k < j; ++k) xtx[j][k] = xtx[k][j];

  OlsFit fit;
  fit.samples = samples;
  auto a = xtx;
  auto b = xty;
  if (!solve_inplace(a, b)) {
    fit.used_ridge = true;
    a = xtx;
    b = xty;
    for (std::size_t j = 0; j < dim; ++j) a[j][j] += 1e-8;
    if (!solve_inplace(a, b)) throw NumericError("ar_fit: normal equations unsolvable");
  }
  fit.coeffs = b;
  for (std::size_t t = lag; t < x.size(); ++t) {
    double pred = 0.0;
    for (std::size_t j = 0; j < dim; ++j) pred += fit.coeffs[j] * regressor(t, j);
    const double e = x[t] - pred;
    fit.rss += e * e;
  }
  return fit;
}

}  // namespace

ArModel ar_fit(const std::vector<double>& series, std::size_t lag) {
  if (series.size() <= 2 * lag + 1) {
    throw std::invalid_argument("ar_fit: series too short for the requested lag");
  }
  OlsFit fit = ols_ar(series, lag);
  return {lag, std::move(fit.coeffs), fit.used_ridge};
}

std::vector<double> ar_forecast(const ArModel& model, const std::vector<double>& history,
                                std::size_t tau) {
  if (history.size() < model.lag) throw std::invalid_argument("ar_forecast: history too short");
  std::vector<double> extended = history;
  std::vector<double> out;
  out.reserve(tau);
  for (std::size_t s = 0; s < tau; ++s) {
    double pred = model.coeffs[model.lag];  // intercept
    for (std::size_t j = 0; j < model.lag; ++j) {
      pred += model.coeffs[j] * extended[extended.size() - 1 - j];
    }
    extended.push_back(pred);
    out.push_back(pred);
  }
  return out;
}

std::size_t ar_select_lag(const std::vector<double>& series, std::size_t max_lag) {
  std::size_t best_lag = 1;
  double best_aic = std::numeric_limits<double>::infinity();
  for (std::size_t l = 1; l <= max_lag; ++l) {
    if (series.size() <= 2 * l + 1) break;
    OlsFit fit = ols_ar(series, l);
    const double sigma2 = std::max(fit.rss / static_cast<double>(fit.samples), 1e-300);
    const double aic = static_cast<double>(fit.samples) * std::log(sigma2) +
                       2.0 * static_cast<double>(l + 1);
    if (aic < best_aic) {
      best_aic = aic;
      best_lag = l;
    }
  }
  return best_lag;
}

std::vector<std::vector<double>> ar_panel_forecast(const std::vector<std::vector<double>>& prices,
                                                   std::size_t tau, std::size_t lag) {
  if (prices.empty()) throw std::invalid_argument("ar_panel_forecast: empty input");
  const std::size_t n = prices[0].size();
  std::vector<std::vector<double>> per_series(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> col(prices.size());
    for (std::size_t t = 0; t < prices.size(); ++t) col[t] = prices[t][i];
    const std::size_t l = lag > 0 ? lag : ar_select_lag(col);
    ArModel m = ar_fit(col, l);
    per_series[i] = ar_forecast(m, col, tau);
  }
  std::vector<std::vector<double>> out(tau, std::vector<double>(n));
  for (std::size_t s = 0; s < tau; ++s)
    for (std::size_t i = 0; i < n; ++i) out[s][i] = per_series[i][s];
  return out;
}

}  // namespace stann::baselines
