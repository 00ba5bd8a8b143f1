// stann: spatiotemporal adaptive forecaster over daily price panels.
// Subcommands cover the full pipeline: synthetic data, training, recursive
// forecasting, scaled-metric evaluation, rolling-origin cross-validation,
// trading backtests, gradient checking, attention-order traces, the
// ablation grid, and manifest replay.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stann/backtest.hpp"
#include "stann/baselines.hpp"
#include "stann/checkpoint.hpp"
#include "stann/config.hpp"
#include "stann/data.hpp"
#include "stann/metrics.hpp"
#include "stann/model.hpp"
#include "stann/train.hpp"

using json = nlohmann::json;
using namespace stann;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::filesystem::path out_dir(const cli::RunConfig& cfg) {
  std::filesystem::path dir(cfg.str("out"));
  std::filesystem::create_directories(dir);
  return dir;
}

void write_manifest(const cli::RunConfig& cfg, const std::string& subcommand,
                    const std::vector<std::string>& outputs, double wall_seconds) {
  json m;
  m["subcommand"] = subcommand;
  json conf;
  for (const auto& [key, def] : cli::RunConfig::known_keys()) {
    conf[key] = cfg.str(key);
  }
  m["config"] = conf;
  m["seed"] = cfg.u64("seed");
  m["versions"] = {{"stann", kVersion}};
  m["wall_time_seconds"] = wall_seconds;
  m["outputs"] = outputs;
  std::ofstream os(out_dir(cfg) / "manifest.json");
  os << m.dump(2) << '\n';
}

data::PriceFrame load_frame(const cli::RunConfig& cfg) {
  if (!cfg.has("data")) throw UsageError("--data is required");
  return data::ingest(cfg.str("data"), data::missing_policy_from_string(cfg.str("missing")));
}

std::vector<std::vector<double>> tail_rows(const std::vector<std::vector<double>>& rows,
                                           std::size_t window) {
  if (window == 0 || window >= rows.size()) return rows;
  return {rows.end() - static_cast<std::ptrdiff_t>(window), rows.end()};
}

void write_loss_curve(const std::filesystem::path& path, const std::vector<double>& curve) {
  std::ofstream os(path);
  os << "epoch,loss\n";
  for (std::size_t e = 0; e < curve.size(); ++e) os << e << ',' << fmt17(curve[e]) << '\n';
}

void write_forecast_csv(const std::filesystem::path& path,
                        const std::vector<std::string>& tickers,
                        const std::vector<std::vector<double>>& traj) {
  std::ofstream os(path);
  os << "step";
  for (const auto& t : tickers) os << ',' << t;
  os << '\n';
  for (std::size_t s = 0; s < traj.size(); ++s) {
    os << (s + 1);
    for (double v : traj[s]) os << ',' << fmt17(v);
    os << '\n';
  }
}

std::vector<std::vector<double>> read_forecast_csv(const std::string& path,
                                                   std::size_t expect_series) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open forecast file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty forecast file: " + path);
  std::vector<std::vector<double>> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = line.find(',');  // skip the step column
    while (pos != std::string::npos) {
      const std::size_t next = line.find(',', pos + 1);
      row.push_back(std::strtod(line.substr(pos + 1, next - pos - 1).c_str(), nullptr));
      pos = next;
    }
    if (row.size() != expect_series) {
      throw DataError("forecast row width " + std::to_string(row.size()) + ", expected " +
                      std::to_string(expect_series));
    }
    out.push_back(std::move(row));
  }
  if (out.empty()) throw DataError("forecast file has no rows: " + path);
  return out;
}

// Forecaster factory shared by cv and backtest: raw rows in, raw tau x n out.
train::Forecaster make_forecaster(const std::string& model, const cli::RunConfig& cfg) {
  if (model == "naive") {
    return [](const std::vector<std::vector<double>>& rows, std::size_t tau, std::uint64_t) {
      return baselines::naive_forecast(rows, tau);
    };
  }
  if (model == "ar") {
    return [](const std::vector<std::vector<double>>& rows, std::size_t tau, std::uint64_t) {
      return baselines::ar_panel_forecast(rows, tau);
    };
  }
  if (model == "stann") {
    train::TrainConfig tc = cfg.train_config();
    return [tc](const std::vector<std::vector<double>>& rows, std::size_t tau,
                std::uint64_t seed) {
      train::TrainConfig local = tc;
      local.seed = seed;
      auto fitted = train::fit(rows, local);
      return train::forecast_from_checkpoint(fitted.checkpoint, rows.back(), tau);
    };
  }
  throw UsageError("unknown model: " + model + " (expected stann, naive or ar)");
}

// --- subcommand bodies -------------------------------------------------------

int cmd_synth(const cli::RunConfig& cfg) {
  if (!cfg.has("synth")) throw UsageError("synth requires --synth <kind>");
  auto frame = data::synth(cfg.str("synth"), cfg.index("rows"), cfg.index("series"),
                           cfg.u64("seed"));
  const auto dir = out_dir(cfg);
  data::write_frame_csv((dir / "data.csv").string(), frame);
  return 0;
}

int cmd_train(const cli::RunConfig& cfg) {
  auto frame = load_frame(cfg);
  train::TrainConfig tc = cfg.train_config();
  auto rows = tail_rows(frame.values, tc.train_window);

  if (cfg.index("search_budget") > 0) {
    // Validation split: the last tau rows of the training slice.
    if (rows.size() < tc.tau + 16) throw DataError("training slice too short for search");
    std::vector<std::vector<double>> train_part(rows.begin(),
                                                rows.end() - static_cast<long>(tc.tau));
    std::vector<std::vector<double>> val_part(rows.end() - static_cast<long>(tc.tau),
                                              rows.end());
    auto objective = [&](const train::TrainConfig& candidate) {
      train::TrainConfig c = candidate;
      auto inner = tail_rows(train_part, candidate.train_window);
      c.train_window = 0;
      auto fitted = train::fit(inner, c);
      auto fc = train::forecast_from_checkpoint(fitted.checkpoint, inner.back(), tc.tau);
      double total = 0.0;
      for (std::size_t i = 0; i < frame.series(); ++i) {
        metrics::EvalFrame ef;
        for (const auto& r : inner) ef.insample.push_back(r[i]);
        for (const auto& r : val_part) ef.actual.push_back(r[i]);
        for (const auto& r : fc) ef.forecast.push_back(r[i]);
        total += metrics::mase(ef);
      }
      return total / static_cast<double>(frame.series());
    };
    auto outcome = train::random_search(train::SearchSpace{}, cfg.index("search_budget"), tc,
                                        objective, tc.seed);
    tc = outcome.best;
    tc.seed = cfg.u64("seed");
    rows = tail_rows(frame.values, tc.train_window);
    std::cout << "search: best validation MASE " << fmt17(outcome.best_score) << "\n";
  }

  auto result = train::fit(rows, tc, &frame.tickers);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';

  const auto dir = out_dir(cfg);
  model::save_checkpoint((dir / "checkpoint.txt").string(), result.checkpoint);
  write_loss_curve(dir / "loss_curve.csv", result.loss_curve);
  std::cout << "trained " << result.loss_curve.size() << " epochs";
  if (!result.loss_curve.empty()) {
    std::cout << "; loss " << fmt17(result.loss_curve.front()) << " -> "
              << fmt17(result.loss_curve.back());
  }
  std::cout << (result.diverged ? " (diverged; last good checkpoint kept)" : "") << "\n";
  return result.diverged ? 3 : 0;
}

int cmd_forecast(const cli::RunConfig& cfg) {
  auto frame = load_frame(cfg);
  const std::size_t tau = cfg.index("tau");
  const std::string model = cfg.str("model");
  std::vector<std::vector<double>> traj;
  if (model == "naive") {
    traj = baselines::naive_forecast(frame.values, tau);
  } else if (model == "ar") {
    traj = baselines::ar_panel_forecast(frame.values, tau);
  } else if (model == "stann") {
    if (!cfg.has("checkpoint")) throw UsageError("forecast --model stann needs --checkpoint");
    auto ckpt = model::load_checkpoint(cfg.str("checkpoint"));
    if (ckpt.params.cfg.n != frame.series()) {
      throw DataError("checkpoint/data series count mismatch");
    }
    traj = train::forecast_from_checkpoint(ckpt, frame.values.back(), tau);
  } else {
    throw UsageError("unknown model: " + model);
  }
  write_forecast_csv(out_dir(cfg) / "forecast.csv", frame.tickers, traj);
  return 0;
}

json report_to_json(const metrics::RelativeReport& rep) {
  return json{{"mase_mean", rep.mase_mean},  {"mase_std", rep.mase_std},
              {"theil_mean", rep.theil_mean}, {"theil_std", rep.theil_std},
              {"mda_mean", rep.mda_mean},     {"mda_std", rep.mda_std}};
}

int cmd_evaluate(const cli::RunConfig& cfg) {
  auto frame = load_frame(cfg);
  if (!cfg.has("forecast_file")) throw UsageError("evaluate requires --forecast <file>");
  auto traj = read_forecast_csv(cfg.str("forecast_file"), frame.series());
  const std::size_t tau = traj.size();
  std::size_t origin = cfg.index("origin");
  if (origin == 0) {
    if (frame.rows() <= tau) throw DataError("data shorter than the forecast horizon");
    origin = frame.rows() - tau;
  }
  if (origin + tau > frame.rows() || origin < 2) throw DataError("origin out of range");

  std::vector<metrics::ScoreRow> model_rows, naive_rows;
  json per_series = json::array();
  std::ofstream ipf_csv(out_dir(cfg) / "ipf.csv");
  ipf_csv << "origin,series,step,value\n";
  for (std::size_t i = 0; i < frame.series(); ++i) {
    metrics::EvalFrame ef;
    for (std::size_t t = 0; t < origin; ++t) ef.insample.push_back(frame.values[t][i]);
    for (std::size_t s = 0; s < tau; ++s) {
      ef.actual.push_back(frame.values[origin + s][i]);
      ef.forecast.push_back(traj[s][i]);
    }
    metrics::ScoreRow row{metrics::mase(ef), metrics::theil_u(ef), metrics::mda(ef)};
    metrics::EvalFrame nf = ef;
    nf.forecast.assign(tau, ef.insample.back());
    metrics::ScoreRow nrow{metrics::mase(nf), metrics::theil_u(nf), metrics::mda(nf)};
    model_rows.push_back(row);
    naive_rows.push_back(nrow);
    auto steps = metrics::ipf(ef);
    for (std::size_t s = 0; s < steps.size(); ++s) {
      ipf_csv << origin << ',' << frame.tickers[i] << ',' << (s + 1) << ',' << fmt17(steps[s])
              << '\n';
    }
    per_series.push_back({{"series", frame.tickers[i]},
                          {"mase", row.mase},
                          {"theil_u", row.theil_u},
                          {"mda", row.mda},
                          {"rel_mase", row.mase / nrow.mase},
                          {"rel_theil", row.theil_u / nrow.theil_u}});
  }
  auto rep = metrics::relative_report(model_rows, naive_rows);
  json out = report_to_json(rep);
  out["model"] = cfg.str("forecast_file");
  out["dataset"] = cfg.str("data");
  out["origins"] = 1;
  out["per_series"] = per_series;
  std::ofstream os(out_dir(cfg) / "metrics.json");
  os << out.dump(2) << '\n';
  std::cout << "relative MASE " << fmt17(rep.mase_mean) << ", relative Theil-U "
            << fmt17(rep.theil_mean) << ", MDA " << fmt17(rep.mda_mean) << "\n";
  return 0;
}

int cmd_cv(const cli::RunConfig& cfg) {
  auto frame = load_frame(cfg);
  train::TrainConfig tc = cfg.train_config();
  const std::string model = cfg.str("model");
  auto forecaster = make_forecaster(model, cfg);
  auto cv = train::rolling_origin_cv(frame.values, forecaster, tc.train_window, tc.tau,
                                     cfg.index("origins"), tc.seed);

  const auto dir = out_dir(cfg);
  {
    std::ofstream os(dir / "cv_report.csv");
    os << "origin,series,mase,theil_u,mda\n";
    for (const auto& c : cv.cells) {
      os << c.origin << ',' << frame.tickers[c.series] << ',' << fmt17(c.mase) << ','
         << fmt17(c.theil_u) << ',' << fmt17(c.mda) << '\n';
    }
  }
  {
    std::ofstream os(dir / "cv_relative.csv");
    os << "origin,series,rel_mase,rel_theil,mda\n";
    for (const auto& c : cv.cells) {
      os << c.origin << ',' << frame.tickers[c.series] << ',' << fmt17(c.rel_mase) << ','
         << fmt17(c.rel_theil) << ',' << fmt17(c.mda) << '\n';
    }
  }
  for (std::size_t k = 0; k < cv.forecasts.size(); ++k) {
    write_forecast_csv(dir / ("forecast_o" + std::to_string(k) + ".csv"), frame.tickers,
                       cv.forecasts[k]);
  }

  // Table-style aggregate: per-cell relative scores averaged +- std, MDA raw.
  std::vector<metrics::ScoreRow> model_rows, naive_unit;
  for (const auto& c : cv.cells) {
    model_rows.push_back({c.rel_mase, c.rel_theil, c.mda});
    naive_unit.push_back({1.0, 1.0, 0.0});
  }
  auto rep = metrics::relative_report(model_rows, naive_unit);
  json out = report_to_json(rep);
  out["model"] = model;
  out["dataset"] = cfg.str("data");
  out["origins"] = cfg.index("origins");
  json per_origin = json::array();
  for (std::size_t k = 0; k < cv.splits.size(); ++k) {
    std::vector<double> rels;
    for (const auto& c : cv.cells) {
      if (c.origin == cv.splits[k].origin) rels.push_back(c.rel_mase);
    }
    per_origin.push_back({{"origin", cv.splits[k].origin},
                          {"rel_mase_mean", metrics::mean_of(rels)}});
  }
  out["per_origin"] = per_origin;
  std::ofstream os(dir / "metrics.json");
  os << out.dump(2) << '\n';
  std::cout << model << ": relative MASE " << fmt17(rep.mase_mean) << " +- "
            << fmt17(rep.mase_std) << " over " << cv.splits.size() << " origins\n";
  return 0;
}

std::vector<double> resolve_rf(const cli::RunConfig& cfg, const std::vector<std::string>& dates) {
  const std::string rf = cfg.str("rf");
  char* end = nullptr;
  const double rate = std::strtod(rf.c_str(), &end);
  if (end != rf.c_str() && *end == '\0') {
    return std::vector<double>(dates.size(), rate);
  }
  std::ifstream in(rf);
  if (!in) throw DataError("cannot open rf file: " + rf);
  std::map<std::string, double> by_date;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError("rf file: expected date,rate");
    by_date[line.substr(0, comma)] = std::strtod(line.c_str() + comma + 1, nullptr);
  }
  std::vector<double> out;
  for (const auto& d : dates) {
    auto it = by_date.find(d);
    if (it == by_date.end()) throw DataError("rf series missing rebalance date " + d);
    out.push_back(it->second);
  }
  return out;
}

int cmd_backtest(const cli::RunConfig& cfg) {
  auto frame = load_frame(cfg);
  train::TrainConfig tc = cfg.train_config();
  const std::size_t tau = tc.tau;
  const std::string model = cfg.str("model");
  const std::string strategy = cfg.str("strategy");
  if (strategy != "simple" && strategy != "equal") {
    throw UsageError("unknown strategy: " + strategy);
  }
  const std::string ann_kind = cfg.str("annualization");
  double annualization;
  if (ann_kind == "conventional") {
    annualization = 252.0 / static_cast<double>(tau);
  } else if (ann_kind == "paper") {
    annualization = static_cast<double>(tau) / 252.0;
  } else {
    throw UsageError("annualization must be conventional or paper");
  }

  const std::size_t start = std::max<std::size_t>(tc.train_window, 8);
  if (start + tau > frame.rows()) throw DataError("not enough data to rebalance even once");

  std::vector<std::size_t> idx;
  for (std::size_t k = start; k + tau <= frame.rows(); k += tau) idx.push_back(k);

  std::vector<std::vector<double>> prices;
  std::vector<std::string> dates;
  std::vector<std::vector<std::vector<double>>> forecasts;
  train::Forecaster forecaster;
  if (model != "perfect") forecaster = make_forecaster(model, cfg);
  for (std::size_t k : idx) {
    prices.push_back(frame.values[k]);
    dates.push_back(frame.dates[k]);
    if (model == "perfect") {
      forecasts.emplace_back(frame.values.begin() + k + 1,
                             frame.values.begin() + k + 1 + tau);
    } else {
      std::vector<std::vector<double>> history(frame.values.begin(),
                                               frame.values.begin() + k + 1);
      auto slice = tail_rows(history, tc.train_window);
      forecasts.push_back(forecaster(slice, tau, derive_seed(tc.seed, k)));
    }
  }

  auto rf = resolve_rf(cfg, dates);
  auto res = backtest::run_backtest(prices, forecasts, dates, rf, strategy == "simple",
                                    annualization, cfg.num("initial_capital"));

  const auto dir = out_dir(cfg);
  {
    std::ofstream os(dir / "equity.csv");
    os << "date,equity,cash\n";
    os << dates.front() << ',' << fmt17(res.equity_curve[0]) << ','
       << fmt17(res.cash_curve[0]) << '\n';
    for (std::size_t k = 0; k < dates.size(); ++k) {
      os << dates[k] << ',' << fmt17(res.equity_curve[k + 1]) << ','
         << fmt17(res.cash_curve[k + 1]) << '\n';
    }
  }
  {
    std::ofstream os(dir / "trades.csv");
    os << "date,asset,delta_shares,price\n";
    for (const auto& t : res.trades) {
      os << t.date << ',' << frame.tickers[t.asset] << ',' << t.delta_shares << ','
         << fmt17(t.price) << '\n';
    }
  }
  {
    json out{{"sharpe", res.summary.sharpe},
             {"sharpe_defined", res.summary.sharpe_defined},
             {"max_drawdown", res.summary.max_drawdown},
             {"mean_return_per_period", res.summary.mean_return_per_period},
             {"total_profit_pct", res.summary.total_profit_pct},
             {"model", model},
             {"strategy", strategy},
             {"annualization", ann_kind},
             {"rebalances", idx.size()},
             {"initial_capital", cfg.num("initial_capital")}};
    std::ofstream os(dir / "summary.json");
    os << out.dump(2) << '\n';
  }
  std::cout << "profit " << fmt17(100.0 * res.summary.total_profit_pct) << "%, max drawdown "
            << fmt17(100.0 * res.summary.max_drawdown) << "%, sharpe "
            << (res.summary.sharpe_defined ? fmt17(res.summary.sharpe) : "undefined") << "\n";
  return 0;
}

int cmd_grad_check(const cli::RunConfig& cfg) {
  // Bundled toy: T=6, n=2, N=3, R=1, two-block stacks, learned Gamma.
  model::ModelConfig mc;
  mc.n = 2;
  mc.latent_dim = 3;
  mc.relations = 1;
  mc.variant = model::Variant::kD;
  mc.max_lag = 4;
  mc.kappa = 0.01;
  mc.decoder_stack = {2, 2, 8};
  mc.dynamic_stack = {2, 2, 8};

  auto params = model::init_params(mc, cfg.u64("seed"));
  params.decoder.hidden_activation = diff::Activation::kTanh;
  params.dynamic.hidden_activation = diff::Activation::kTanh;
  auto latents = model::init_latents(6, 2, 3, cfg.u64("seed") + 1);

  Rng rng(derive_seed(cfg.u64("seed"), "gradcheck-data"));
  std::vector<double> xdata(6 * 2);
  for (auto& v : xdata) v = rng.normal(0.0, 0.5);
  auto x = diff::Tensor::from_data({6, 2}, std::move(xdata), false);

  model::LossConfig lc;
  lc.lambda = 0.5;
  lc.gamma = 0.01;
  auto loss_fn = [&]() { return model::model_loss(x, latents, params, lc).total; };

  std::vector<diff::Tensor> groups{latents.states};
  std::vector<std::string> names{"Z"};
  for (auto& [name, tensor] : params.trainable()) {
    groups.push_back(*tensor);
    names.push_back(name);
  }

  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  json per_group = json::array();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double err = diff::grad_check(loss_fn, {groups[g]}, cfg.num("eps"));
    per_group.push_back({{"group", names[g]}, {"max_rel_error", err}});
    worst = std::max(worst, err);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json out{{"max_rel_error", worst}, {"threshold", 1e-4}, {"seconds", secs},
           {"groups", per_group}};
  std::ofstream os(out_dir(cfg) / "gradcheck.json");
  os << out.dump(2) << '\n';
  std::cout << "max relative error: " << fmt17(worst) << " (" << fmt17(secs) << " s)\n";
  if (!(worst < 1e-4)) {
    std::cerr << "gradient check failed the 1e-4 threshold\n";
    return 3;
  }
  return 0;
}

int cmd_trace(const cli::RunConfig& cfg) {
  if (!cfg.has("checkpoint")) throw UsageError("trace-ar-order requires --checkpoint");
  auto ckpt = model::load_checkpoint(cfg.str("checkpoint"));
  auto orders = model::effective_order_trace(ckpt.latents, ckpt.params);
  std::ofstream os(out_dir(cfg) / "trace.csv");
  os << "t,series,order\n";
  for (std::size_t t = 0; t < orders.size(); ++t) {
    for (std::size_t i = 0; i < orders[t].size(); ++i) {
      os << t << ',' << i << ',' << orders[t][i] << '\n';
    }
  }
  return 0;
}

int cmd_ablate(const cli::RunConfig& cfg) {
  auto frame = load_frame(cfg);
  train::TrainConfig base = cfg.train_config();
  const std::size_t tau = base.tau;
  const std::size_t seeds = std::max<std::size_t>(1, cfg.index("ablate_seeds"));
  if (frame.rows() < tau + 16) throw DataError("not enough data to ablate");

  // Single held-out split: train on the window before the last tau rows.
  const std::size_t origin = frame.rows() - tau;
  const std::size_t window =
      base.train_window == 0 ? origin : std::min(origin, base.train_window);
  std::vector<std::vector<double>> train_rows(frame.values.begin() + (origin - window),
                                              frame.values.begin() + origin);

  const auto dir = out_dir(cfg);
  std::ofstream rows_csv(dir / "ablation.csv");
  rows_csv << "actm,residual_stack,seed,mase,theil_u,mda\n";

  json cells = json::array();
  for (bool use_actm : {true, false}) {
    for (bool use_stack : {true, false}) {
      std::vector<double> mases;
      for (std::size_t s = 0; s < seeds; ++s) {
        train::TrainConfig tc = base;
        tc.use_actm = use_actm;
        tc.use_residual_stack = use_stack;
        tc.seed = derive_seed(base.seed, s);
        auto fitted = train::fit(train_rows, tc);
        auto fc = train::forecast_from_checkpoint(fitted.checkpoint, train_rows.back(), tau);
        double mase_sum = 0.0, theil_sum = 0.0, mda_sum = 0.0;
        for (std::size_t i = 0; i < frame.series(); ++i) {
          metrics::EvalFrame ef;
          for (const auto& r : train_rows) ef.insample.push_back(r[i]);
          for (std::size_t st = 0; st < tau; ++st) {
            ef.actual.push_back(frame.values[origin + st][i]);
            ef.forecast.push_back(fc[st][i]);
          }
          mase_sum += metrics::mase(ef);
          theil_sum += metrics::theil_u(ef);
          mda_sum += metrics::mda(ef);
        }
        const double mase = mase_sum / static_cast<double>(frame.series());
        mases.push_back(mase);
        rows_csv << (use_actm ? 1 : 0) << ',' << (use_stack ? 1 : 0) << ',' << s << ','
                 << fmt17(mase) << ',' << fmt17(theil_sum / frame.series()) << ','
                 << fmt17(mda_sum / frame.series()) << '\n';
      }
      cells.push_back({{"actm", use_actm},
                       {"residual_stack", use_stack},
                       {"mase_median", metrics::median_of(mases)},
                       {"mase_mean", metrics::mean_of(mases)},
                       {"seeds", seeds}});
      std::cout << "actm=" << use_actm << " stack=" << use_stack << " median MASE "
                << fmt17(metrics::median_of(mases)) << "\n";
    }
  }
  std::ofstream os(dir / "metrics.json");
  os << json{{"cells", cells}, {"dataset", cfg.str("data")}}.dump(2) << '\n';
  return 0;
}

int dispatch(const std::string& name, const cli::RunConfig& cfg);

int cmd_replay(const std::string& manifest_path, const std::string& out_override) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest: " + manifest_path);
  json m = json::parse(in);
  if (!m.contains("subcommand") || !m.contains("config")) {
    throw DataError("manifest missing subcommand/config");
  }
  std::map<std::string, std::string> kv;
  for (const auto& [key, value] : m["config"].items()) {
    kv[key] = value.get<std::string>();
  }
  auto cfg = cli::RunConfig::from_map(kv);
  if (!out_override.empty()) cfg.set("out", out_override);
  return dispatch(m["subcommand"].get<std::string>(), cfg);
}

int dispatch(const std::string& name, const cli::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  int rc;
  std::vector<std::string> outputs;
  if (name == "synth") {
    rc = cmd_synth(cfg);
    outputs = {"data.csv"};
  } else if (name == "train") {
    rc = cmd_train(cfg);
    outputs = {"checkpoint.txt", "loss_curve.csv"};
  } else if (name == "forecast") {
    rc = cmd_forecast(cfg);
    outputs = {"forecast.csv"};
  } else if (name == "evaluate") {
    rc = cmd_evaluate(cfg);
    outputs = {"metrics.json", "ipf.csv"};
  } else if (name == "cv") {
    rc = cmd_cv(cfg);
    outputs = {"cv_report.csv", "cv_relative.csv", "metrics.json"};
  } else if (name == "backtest") {
    rc = cmd_backtest(cfg);
    outputs = {"equity.csv", "trades.csv", "summary.json"};
  } else if (name == "grad-check") {
    rc = cmd_grad_check(cfg);
    outputs = {"gradcheck.json"};
  } else if (name == "trace-ar-order") {
    rc = cmd_trace(cfg);
    outputs = {"trace.csv"};
  } else if (name == "ablate") {
    rc = cmd_ablate(cfg);
    outputs = {"ablation.csv", "metrics.json"};
  } else {
    throw UsageError("unknown subcommand: " + name);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(cfg, name, outputs, secs);
  return rc;
}

void add_config_flags(CLI::App* cmd, std::map<std::string, std::string>& overrides,
                      std::string& config_path) {
  cmd->add_option("--config", config_path, "flat key = value config file");
  auto bind = [cmd, &overrides](const std::string& flag, const std::string& key,
                                const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, help);
  };
  bind("--data", "data", "price CSV: header date,<ticker1>,...");
  bind("--out", "out", "output directory (default .)");
  bind("--variant", "variant", "stann | stann-r | stann-d | stnn");
  bind("--tau", "tau", "forecast horizon in steps (default 21)");
  bind("--seed", "seed", "master seed");
  bind("--missing", "missing", "reject | forward-fill");
  bind("--strategy", "strategy", "simple | equal");
  bind("--rf", "rf", "risk-free per-period rate or CSV path (date,rate)");
  bind("--annualization", "annualization", "conventional | paper");
  bind("--model", "model", "stann | naive | ar (backtest also: perfect)");
  bind("--checkpoint", "checkpoint", "checkpoint file");
  bind("--forecast", "forecast_file", "stored forecast CSV (evaluate)");
  bind("--origin", "origin", "evaluation origin row index");
  bind("--origins", "origins", "rolling-origin count (cv)");
  bind("--synth", "synth", "ar1_panel | regime_switch | dominant_asset");
  bind("--rows", "rows", "synthetic panel length");
  bind("--series", "series", "synthetic series count");
  cmd->add_option_function<std::vector<std::string>>(
      "--set",
      [&overrides](const std::vector<std::string>& pairs) {
        for (const auto& p : pairs) {
          const auto eq = p.find('=');
          if (eq == std::string::npos) throw CLI::ValidationError("--set expects key=value");
          overrides[p.substr(0, eq)] = p.substr(eq + 1);
        }
      },
      "override any config key, e.g. --set lambda=0.2");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatiotemporal adaptive forecaster"};
  app.require_subcommand(1);

  struct SubSpec {
    const char* name;
    const char* help;
  };
  const std::vector<SubSpec> specs{
      {"synth", "generate a synthetic price panel CSV"},
      {"train", "fit the forecaster and write a checkpoint"},
      {"forecast", "produce a tau-step trajectory from a checkpoint or baseline"},
      {"evaluate", "score a stored forecast against realized prices"},
      {"cv", "rolling-origin cross-validation with relative metrics"},
      {"backtest", "trade the forecasts and account the portfolio"},
      {"grad-check", "finite-difference check of the training gradients"},
      {"trace-ar-order", "per-step effective autoregressive order of a checkpoint"},
      {"ablate", "2x2 attention/stack ablation grid"},
  };

  std::map<std::string, std::map<std::string, std::string>> overrides;
  std::map<std::string, std::string> config_paths;
  for (const auto& spec : specs) {
    auto* cmd = app.add_subcommand(spec.name, spec.help);
    add_config_flags(cmd, overrides[spec.name], config_paths[spec.name]);
  }

  auto* replay = app.add_subcommand("replay", "re-run a subcommand from its manifest");
  std::string manifest_path, replay_out;
  replay->add_option("manifest", manifest_path, "manifest.json from a previous run")
      ->required();
  replay->add_option("--out", replay_out, "redirect outputs");

  try {
    app.parse(argc, argv);
    for (const auto& spec : specs) {
      if (app.got_subcommand(spec.name)) {
        const std::string& path = config_paths[spec.name];
        cli::RunConfig cfg =
            path.empty() ? cli::RunConfig{} : cli::RunConfig::from_file(path);
        for (const auto& [k, v] : overrides[spec.name]) cfg.set(k, v);
        return dispatch(spec.name, cfg);
      }
    }
    if (app.got_subcommand("replay")) return cmd_replay(manifest_path, replay_out);
    throw UsageError("no subcommand given");
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  }
}
