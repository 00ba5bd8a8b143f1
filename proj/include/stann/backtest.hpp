#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stann/errors.hpp"

namespace stann::backtest {

struct Trade {
  std::string date;
  std::size_t asset = 0;
  long long delta_shares = 0;
  double price = 0.0;
};

// Long-only whole-share portfolio. Equity = cash + sum(shares * price) at
// every mark; rebalancing is liquidate-then-buy (equivalent to differential
// trades with zero fees).
struct Portfolio {
  double cash = 0.0;
  std::vector<long long> shares;
  std::vector<double> equity_curve;
  std::vector<Trade> trade_log;

  double equity(const std::vector<double>& prices) const;
};

// Target allocation: nonnegative weights summing to at most 1; the
// remainder stays in cash.
struct StrategySignal {
  std::vector<double> target_weights;
};

// Softmax over strictly positive forecast trends; non-positive trends get
// weight zero (sell signal) and an all-negative forecast goes to cash.
// trend_i = (forecast_end_i - last_i) / last_i.
StrategySignal simple_strategy(const std::vector<std::vector<double>>& forecast,
                               const std::vector<double>& last_prices);

StrategySignal equal_weight(std::size_t n);

// Liquidates at the given prices, buys floor(weight * equity / price) whole
// shares per asset and logs the trades. rf_rate_period was already applied
// to cash by the caller for the elapsed period; this call itself is
// fee-free and conserves equity.
void rebalance(Portfolio& p, const StrategySignal& signal, const std::vector<double>& prices,
               const std::string& date);

struct BacktestSummary {
  double sharpe = 0.0;
  bool sharpe_defined = true;
  double max_drawdown = 0.0;
  double mean_return_per_period = 0.0;
  double total_profit_pct = 0.0;
};

struct BacktestResult {
  std::vector<double> equity_curve;  // initial capital + one mark per date
  std::vector<double> cash_curve;
  std::vector<std::string> dates;
  std::vector<Trade> trades;
  BacktestSummary summary;
};

// Signals are produced from the forecast at each rebalance date, trades
// execute at that date's prices and leftover cash accrues the per-period
// risk-free rate until the next date. Annualization factor multiplies the
// Sharpe ratio (conventional sqrt(252/tau) or the literal paper factor
// sqrt(tau/252) -- the caller picks).
BacktestResult run_backtest(const std::vector<std::vector<double>>& rebalance_prices,
                            const std::vector<std::vector<std::vector<double>>>& forecasts,
                            const std::vector<std::string>& dates,
                            const std::vector<double>& rf_per_period, bool use_simple_strategy,
                            double annualization, double initial_capital = 10000.0);

// Annualized Sharpe ratio of per-period returns against per-period
// risk-free rates. Throws NumericError when the excess-return variance is
// zero (undefined, not infinite).
double sharpe(const std::vector<double>& period_returns, const std::vector<double>& rf_per_period,
              double annualization);

// Largest peak-to-trough relative decline; <= 0, 0 for a monotone curve.
double max_drawdown(const std::vector<double>& equity_curve);

BacktestSummary summarize(const std::vector<double>& equity_curve,
                          const std::vector<double>& rf_per_period, double annualization);

}  // namespace stann::backtest
