#include "stann/backtest.hpp"

#include <algorithm>
#include <cmath>

namespace stann::backtest {

double Portfolio::equity(const std::vector<double>& prices) const {
  double total = cash;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    total += static_cast<double>(shares[i]) * prices[i];
  }
  return total;
}

StrategySignal simple_strategy(const std::vector<std::vector<double>>& forecast,
                               const std::vector<double>& last_prices) {
  if (forecast.empty()) throw std::invalid_argument("simple_strategy: empty forecast");
  const std::size_t n = last_prices.size();
  if (forecast.back().size() != n) {
    throw std::invalid_argument("simple_strategy: forecast/prices misaligned");
  }
  std::vector<double> trend(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(last_prices[i] > 0.0)) throw NumericError("simple_strategy: non-positive last price");
    trend[i] = (forecast.back()[i] - last_prices[i]) / last_prices[i];
  }
  StrategySignal sig;
  sig.target_weights.assign(n, 0.0);
  double denom = 0.0;
  double max_trend = 0.0;
  for (double t : trend) max_trend = std::max(max_trend, t);
  for (std::size_t i = 0; i < n; ++i) {
    if (trend[i] > 0.0) denom += std::exp(trend[i] - max_trend);
  }
  if (denom == 0.0) return sig;  // all-negative: stay in cash
  for (std::size_t i = 0; i < n; ++i) {
    if (trend[i] > 0.0) sig.target_weights[i] = std::exp(trend[i] - max_trend) / denom;
  }
  return sig;
}

StrategySignal equal_weight(std::size_t n) {
  if (n == 0) throw std::invalid_argument("equal_weight: no assets");
  return {std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

void rebalance(Portfolio& p, const StrategySignal& signal, const std::vector<double>& prices,
               const std::string& date) {
  const std::size_t n = prices.size();
  if (signal.target_weights.size() != n) {
    throw std::invalid_argument("rebalance: signal width mismatch");
  }
  double weight_sum = 0.0;
  for (double w : signal.target_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw NumericError("rebalance: bad weight");
    weight_sum += w;
  }
  if (weight_sum > 1.0 + 1e-12) throw NumericError("rebalance: weights exceed 1");
  for (double px : prices) {
    if (!(px > 0.0)) throw NumericError("rebalance: non-positive price");
  }
  if (p.shares.empty()) p.shares.assign(n, 0);

  // Liquidate, then buy whole shares toward the targets; fee-free, so
  // equity is conserved at the rebalance instant.
  const double equity = p.equity(prices);
  std::vector<long long> next(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    next[i] = static_cast<long long>(std::floor(signal.target_weights[i] * equity / prices[i]));
  }
  double cash = equity;
  for (std::size_t i = 0; i < n; ++i) cash -= static_cast<double>(next[i]) * prices[i];
  for (std::size_t i = 0; i < n; ++i) {
    const long long delta = next[i] - p.shares[i];
    if (delta != 0) p.trade_log.push_back({date, i, delta, prices[i]});
  }
  p.shares = std::move(next);
  p.cash = cash;
}

BacktestResult run_backtest(const std::vector<std::vector<double>>& rebalance_prices,
                            const std::vector<std::vector<std::vector<double>>>& forecasts,
                            const std::vector<std::string>& dates,
                            const std::vector<double>& rf_per_period, bool use_simple_strategy,
                            double annualization, double initial_capital) {
  const std::size_t K = rebalance_prices.size();
  if (K == 0) throw std::invalid_argument("run_backtest: no rebalance dates");
  if (forecasts.size() != K || dates.size() != K || rf_per_period.size() != K) {
    throw DataError("run_backtest: prices/forecasts/dates/rf misaligned");
  }
  const std::size_t n = rebalance_prices[0].size();

  Portfolio p;
  p.cash = initial_capital;
  p.shares.assign(n, 0);

  BacktestResult result;
  result.dates = dates;
  result.equity_curve.push_back(initial_capital);
  result.cash_curve.push_back(initial_capital);

  for (std::size_t k = 0; k < K; ++k) {
    if (k > 0) p.cash *= 1.0 + rf_per_period[k - 1];  // accrual over the elapsed period
    StrategySignal sig = use_simple_strategy
                             ? simple_strategy(forecasts[k], rebalance_prices[k])
                             : equal_weight(n);
    rebalance(p, sig, rebalance_prices[k], dates[k]);
    result.equity_curve.push_back(p.equity(rebalance_prices[k]));
    result.cash_curve.push_back(p.cash);
  }
  result.trades = p.trade_log;
  result.summary = summarize(result.equity_curve, rf_per_period, annualization);
  return result;
}

double sharpe(const std::vector<double>& period_returns, const std::vector<double>& rf_per_period,
              double annualization) {
  if (period_returns.size() < 2) throw std::invalid_argument("sharpe: need >= 2 returns");
  if (rf_per_period.size() != period_returns.size()) {
    throw std::invalid_argument("sharpe: rf series length mismatch");
  }
  std::vector<double> excess(period_returns.size());
  for (std::size_t i = 0; i < excess.size(); ++i) excess[i] = period_returns[i] - rf_per_period[i];
  double mean = 0.0;
  for (double e : excess) mean += e;
  mean /= static_cast<double>(excess.size());
  double var = 0.0;
  for (double e : excess) var += (e - mean) * (e - mean);
  var /= static_cast<double>(excess.size() - 1);
  if (!(var > 0.0)) throw NumericError("sharpe undefined: zero variance of excess returns");
  return mean / std::sqrt(var) * std::sqrt(annualization);
}

double max_drawdown(const std::vector<double>& equity_curve) {
  if (equity_curve.empty()) throw std::invalid_argument("max_drawdown: empty curve");
  double peak = equity_curve.front();
  double worst = 0.0;
  for (double v : equity_curve) {
    peak = std::max(peak, v);
    worst = std::min(worst, v / peak - 1.0);
  }
  return worst;
}

BacktestSummary summarize(const std::vector<double>& equity_curve,
                          const std::vector<double>& rf_per_period, double annualization) {
  if (equity_curve.size() < 2) throw std::invalid_argument("summarize: curve too short");
  BacktestSummary s;
  s.total_profit_pct = equity_curve.back() / equity_curve.front() - 1.0;
  s.max_drawdown = max_drawdown(equity_curve);

  // The first curve entry duplicates the first mark (the initial trade
  // conserves equity), so real periods are curve[j+1] -> curve[j+2],
  // matching rf_per_period[j].
  std::vector<double> returns;
  std::vector<double> rf;
  for (std::size_t j = 0; j + 2 < equity_curve.size(); ++j) {
    returns.push_back(equity_curve[j + 2] / equity_curve[j + 1] - 1.0);
    rf.push_back(j < rf_per_period.size() ? rf_per_period[j] : 0.0);
  }
  if (returns.empty()) {
    s.mean_return_per_period = 0.0;
    s.sharpe = 0.0;
    s.sharpe_defined = false;
    return s;
  }
  double mean = 0.0;
  for (double r : returns) mean += r;
  s.mean_return_per_period = mean / static_cast<double>(returns.size());

  try {
    s.sharpe = sharpe(returns, rf, annualization);
  } catch (const std::exception&) {
    s.sharpe = 0.0;
    s.sharpe_defined = false;
  }
  return s;
}

}  // namespace stann::backtest
