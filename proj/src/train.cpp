#include "stann/train.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <thread>

#include "stann/baselines.hpp"
#include "stann/metrics.hpp"

namespace stann::train {

using diff::Tensor;

model::ModelConfig TrainConfig::model_config(std::size_t n) const {
  model::ModelConfig mc;
  mc.n = n;
  mc.latent_dim = latent_dim;
  mc.relations = 1;
  mc.feature_dim = 1;
  mc.variant = variant;
  mc.max_lag = use_actm ? max_lag : 1;
  mc.kappa = kappa;
  mc.decoder_stack = use_residual_stack ? decoder_stack : model::StackConfig{1, 0, 1};
  mc.dynamic_stack = use_residual_stack ? dynamic_stack : model::StackConfig{1, 0, 1};
  mc.actm_bias_init = actm_bias_init;
  return mc;
}

model::LossConfig TrainConfig::loss_config() const {
  model::LossConfig lc;
  lc.lambda = lambda;
  lc.gamma = gamma;
  lc.delta = delta;
  return lc;
}

AdamState AdamState::for_params(const std::vector<Tensor*>& params) {
  AdamState s;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const Tensor* p : params) {
    s.m.emplace_back(p->size(), 0.0);
    s.v.emplace_back(p->size(), 0.0);
  }
  return s;
}

bool adam_step(const std::vector<Tensor*>& params, AdamState& state, double lr, double beta1,
               double beta2, double epsilon) {
  if (params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: state/parameter count mismatch");
  }
  for (const Tensor* p : params) {
    for (double g : p->grad()) {
      if (!std::isfinite(g)) return false;
    }
  }
  const std::uint64_t t = ++state.step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto vals = params[pi]->mutable_data();
    auto grads = params[pi]->grad();
    auto& m = state.m[pi];
    auto& v = state.v[pi];
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double g = grads[i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      vals[i] -= lr * mhat / (std::sqrt(vhat) + epsilon);
    }
  }
  return true;
}

double lr_schedule(std::uint64_t step, const TrainConfig& cfg) {
  if (cfg.scheduler_period == 0) return cfg.learning_rate;
  double period = static_cast<double>(cfg.scheduler_period);
  double pos = static_cast<double>(step);
  while (pos >= period) {
    pos -= period;
    period *= std::max(cfg.scheduler_period_mult, 1.0);
  }
  const double progress = pos / period;
  return cfg.lr_min +
         (cfg.learning_rate - cfg.lr_min) * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

namespace {

std::vector<double> flatten(const std::vector<std::vector<double>>& rows) {
  std::vector<double> out;
  out.reserve(rows.size() * (rows.empty() ? 0 : rows[0].size()));
  for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

std::vector<std::vector<double>> columns_of(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.empty() ? 0 : rows[0].size();
  std::vector<std::vector<double>> cols(n, std::vector<double>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t i = 0; i < n; ++i) cols[i][t] = rows[t][i];
  return cols;
}

std::vector<std::vector<double>> snapshot_params(const std::vector<Tensor*>& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (Tensor* p : params) out.emplace_back(p->data().begin(), p->data().end());
  return out;
}

void restore_params(const std::vector<Tensor*>& params,
                    const std::vector<std::vector<double>>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto vals = params[i]->mutable_data();
    std::copy(snap[i].begin(), snap[i].end(), vals.begin());
  }
}

}  // namespace

FitResult fit(const std::vector<std::vector<double>>& prices, const TrainConfig& cfg,
              const std::vector<std::string>* names) {
  const std::size_t T = prices.size();
  if (T < 8) throw std::invalid_argument("fit: need at least 8 observations");
  const std::size_t n = prices[0].size();
  for (const auto& row : prices) {
    if (row.size() != n) throw DataError("fit: ragged price rows");
    for (double v : row) {
      if (!std::isfinite(v)) throw DataError("fit: non-finite price");
    }
  }

  FitResult result;
  result.checkpoint.scaler = IqrScaler::fit(prices, names);
  const auto norm = result.checkpoint.scaler.normalize(prices);
  Tensor x = Tensor::from_data({T, n}, flatten(norm), false);

  model::ModelConfig mc = cfg.model_config(n);
  result.checkpoint.params = model::init_params(mc, cfg.seed, cfg.actm_seed);
  result.checkpoint.latents = model::init_latents(T, n, mc.latent_dim, cfg.seed);
  if (mc.variant != model::Variant::kD) {
    result.checkpoint.params.spatial.relation_w =
        model::build_relation_tensor(columns_of(prices), cfg.relation_threshold,
                                     &result.warnings);
  }

  auto& params = result.checkpoint.params;
  auto& latents = result.checkpoint.latents;
  std::vector<Tensor*> opt_params{&latents.states};
  for (auto& [name, tensor] : params.trainable()) opt_params.push_back(tensor);

  AdamState adam = AdamState::for_params(opt_params);
  const model::LossConfig loss_cfg = cfg.loss_config();

  Rng batch_rng(derive_seed(cfg.seed, "batching"));
  std::vector<std::size_t> all_ts(T - 1);
  std::iota(all_ts.begin(), all_ts.end(), 1);

  std::vector<std::vector<double>> last_good = snapshot_params(opt_params);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    bool failed = false;

    const double lr = lr_schedule(epoch, cfg);
    if (cfg.batch_size == 0 || cfg.batch_size >= all_ts.size()) {
      for (Tensor* p : opt_params) p->zero_grad();
      auto loss = model::model_loss(x, latents, params, loss_cfg);
      if (!std::isfinite(loss.total.value())) {
        failed = true;
      } else {
        diff::backward(loss.total);
        if (!adam_step(opt_params, adam, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon)) {
          result.warnings.push_back("epoch " + std::to_string(epoch) +
                                    ": non-finite gradients, step rejected");
          failed = true;
        }
        epoch_loss = loss.total.value();
        batches = 1;
      }
    } else {
      // Seeded shuffle, then fixed-size slices of transition indices.
      std::vector<std::size_t> shuffled = all_ts;
      for (std::size_t i = shuffled.size(); i > 1; --i) {
        std::swap(shuffled[i - 1], shuffled[batch_rng.below(i)]);
      }
      for (std::size_t off = 0; off < shuffled.size() && !failed; off += cfg.batch_size) {
        std::vector<std::size_t> batch(
            shuffled.begin() + off,
            shuffled.begin() + std::min(off + cfg.batch_size, shuffled.size()));
        for (Tensor* p : opt_params) p->zero_grad();
        auto loss = model::model_loss(x, latents, params, loss_cfg, &batch);
        if (!std::isfinite(loss.total.value())) {
          failed = true;
          break;
        }
        diff::backward(loss.total);
        if (!adam_step(opt_params, adam, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon)) {
          result.warnings.push_back("epoch " + std::to_string(epoch) +
                                    ": non-finite gradients, step rejected");
          failed = true;
          break;
        }
        epoch_loss += loss.total.value();
        ++batches;
      }
      if (batches > 0) epoch_loss /= static_cast<double>(batches);
    }

    if (failed) {
      restore_params(opt_params, last_good);
      result.diverged = true;
      result.warnings.push_back("training aborted at epoch " + std::to_string(epoch) +
                                "; last good checkpoint returned");
      break;
    }
    last_good = snapshot_params(opt_params);
    result.loss_curve.push_back(epoch_loss);
  }
  return result;
}

std::vector<std::vector<double>> forecast_from_checkpoint(const model::Checkpoint& ckpt,
                                                          const std::vector<double>& last_raw_row,
                                                          std::size_t tau) {
  const std::size_t n = ckpt.params.cfg.n;
  if (last_raw_row.size() != n) {
    throw std::invalid_argument("forecast_from_checkpoint: price row width mismatch");
  }
  std::vector<double> last_norm(n);
  for (std::size_t i = 0; i < n; ++i) last_norm[i] = ckpt.scaler.normalize_one(last_raw_row[i], i);
  auto traj = model::forecast_from_last(last_norm, ckpt.latents, ckpt.params, tau);
  return ckpt.scaler.denormalize(traj);
}

std::vector<CvSplit> make_cv_splits(std::size_t total_rows, std::size_t window, std::size_t tau,
                                    std::size_t n_origins) {
  if (n_origins < 1) throw std::invalid_argument("make_cv_splits: need at least one origin");
  if (window < 8 || tau < 1) throw std::invalid_argument("make_cv_splits: bad window/tau");
  if (total_rows < window + tau * n_origins) {
    throw DataError("insufficient data for rolling-origin evaluation: need >= " +
                    std::to_string(window + tau * n_origins) + " rows, have " +
                    std::to_string(total_rows));
  }
  // Origins advance by tau; the last test slice ends at the final row.
  std::vector<CvSplit> splits;
  const std::size_t first_origin = total_rows - tau * n_origins;
  for (std::size_t k = 0; k < n_origins; ++k) {
    splits.push_back({first_origin + k * tau, window, tau});
  }
  return splits;
}

CvResult rolling_origin_cv(const std::vector<std::vector<double>>& prices,
                           const Forecaster& forecaster, std::size_t window, std::size_t tau,
                           std::size_t n_origins, std::uint64_t seed, bool parallel) {
  CvResult result;
  result.splits = make_cv_splits(prices.size(), window, tau, n_origins);
  const std::size_t n = prices[0].size();

  auto run_origin = [&](const CvSplit& split) {
    std::vector<std::vector<double>> train_rows(prices.begin() + (split.origin - split.window),
                                                prices.begin() + split.origin);
    return forecaster(train_rows, split.tau, derive_seed(seed, split.origin));
  };

  result.forecasts.resize(result.splits.size());
  result.actuals.resize(result.splits.size());
  if (parallel && result.splits.size() > 1) {
    std::vector<std::future<std::vector<std::vector<double>>>> jobs;
    jobs.reserve(result.splits.size());
    for (const auto& split : result.splits) {
      jobs.push_back(std::async(std::launch::async, run_origin, split));
    }
    for (std::size_t k = 0; k < jobs.size(); ++k) result.forecasts[k] = jobs[k].get();
  } else {
    for (std::size_t k = 0; k < result.splits.size(); ++k) {
      result.forecasts[k] = run_origin(result.splits[k]);
    }
  }

  for (std::size_t k = 0; k < result.splits.size(); ++k) {
    const auto& split = result.splits[k];
    result.actuals[k].assign(prices.begin() + split.origin,
                             prices.begin() + split.origin + split.tau);
    if (result.forecasts[k].size() != split.tau) {
      throw NumericError("forecaster returned wrong horizon length");
    }
    for (std::size_t i = 0; i < n; ++i) {
      metrics::EvalFrame frame;
      frame.insample.resize(split.window);
      for (std::size_t t = 0; t < split.window; ++t) {
        frame.insample[t] = prices[split.origin - split.window + t][i];
      }
      frame.actual.resize(split.tau);
      frame.forecast.resize(split.tau);
      std::vector<double> naive(split.tau, frame.insample.back());
      for (std::size_t s = 0; s < split.tau; ++s) {
        frame.actual[s] = result.actuals[k][s][i];
        frame.forecast[s] = result.forecasts[k][s][i];
      }
      CvCell cell;
      cell.origin = split.origin;
      cell.series = i;
      cell.mase = metrics::mase(frame);
      cell.theil_u = metrics::theil_u(frame);
      cell.mda = metrics::mda(frame);
      metrics::EvalFrame naive_frame = frame;
      naive_frame.forecast = naive;
      cell.rel_mase = cell.mase / metrics::mase(naive_frame);
      cell.rel_theil = cell.theil_u / metrics::theil_u(naive_frame);
      result.cells.push_back(cell);
    }
  }
  return result;
}

TrainConfig sample_config(const SearchSpace& space, const TrainConfig& base, Rng& rng) {
  if (space.latent_dim.empty() || space.epochs.empty() || space.train_window.empty()) {
    throw std::invalid_argument("sample_config: empty search space");
  }
  TrainConfig cfg = base;
  cfg.lambda = rng.uniform(space.lambda.first, space.lambda.second);
  cfg.learning_rate = rng.uniform(space.learning_rate.first, space.learning_rate.second);
  cfg.gamma = cfg.variant == model::Variant::kPlain
                  ? 0.0
                  : rng.uniform(space.gamma.first, space.gamma.second);
  cfg.latent_dim = space.latent_dim[rng.below(space.latent_dim.size())];
  cfg.epochs = space.epochs[rng.below(space.epochs.size())];
  cfg.train_window = space.train_window[rng.below(space.train_window.size())];
  return cfg;
}

SearchOutcome random_search(const SearchSpace& space, std::size_t budget,
                            const TrainConfig& base,
                            const std::function<double(const TrainConfig&)>& objective,
                            std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("random_search: budget must be >= 1");
  Rng rng(derive_seed(seed, "search"));
  SearchOutcome out;
  out.best_score = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < budget; ++k) {
    TrainConfig candidate = sample_config(space, base, rng);
    const double score = objective(candidate);
    out.scores.push_back(score);
    if (score < out.best_score) {
      out.best_score = score;
      out.best = candidate;
    }
  }
  return out;
}

}  // namespace stann::train
