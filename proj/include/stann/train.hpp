#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stann/checkpoint.hpp"
#include "stann/model.hpp"
#include "stann/scaler.hpp"

namespace stann::train {

struct TrainConfig {
  // optimizer
  std::size_t epochs = 200;
  double learning_rate = 0.02;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // cosine annealing with warm restarts
  std::size_t scheduler_period = 100;
  double scheduler_period_mult = 1.0;
  double lr_min = 1e-4;
  // objective
  double lambda = 0.1;
  double gamma = 0.0;
  model::LossConfig::Delta delta = model::LossConfig::Delta::kMse;
  // model shape
  std::size_t latent_dim = 8;
  std::size_t max_lag = 64;
  double kappa = 0.01;
  model::Variant variant = model::Variant::kPlain;
  model::StackConfig decoder_stack{2, 2, 32};
  model::StackConfig dynamic_stack{2, 2, 32};
  double actm_bias_init = 0.0;
  double relation_threshold = 0.0;
  // ablation switches: no ACTM pins the transition at one lag, no stack
  // degenerates both factor nets to single linear maps
  bool use_actm = true;
  bool use_residual_stack = true;
  // data / protocol
  std::size_t train_window = 504;
  std::size_t tau = 21;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 42;
  std::optional<std::uint64_t> actm_seed;

  model::ModelConfig model_config(std::size_t n) const;
  model::LossConfig loss_config() const;
};

// --- optimizer ---------------------------------------------------------------

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;

  static AdamState for_params(const std::vector<diff::Tensor*>& params);
};

// One bias-corrected Adam update over the parameters' accumulated grads.
// Returns false (and leaves everything untouched) when any gradient is
// non-finite.
bool adam_step(const std::vector<diff::Tensor*>& params, AdamState& state, double lr,
               double beta1, double beta2, double epsilon);

// Cosine annealing with warm restarts; step counts optimizer steps from 0.
double lr_schedule(std::uint64_t step, const TrainConfig& cfg);

// --- end-to-end training -----------------------------------------------------

struct FitResult {
  model::Checkpoint checkpoint;
  std::vector<double> loss_curve;  // one entry per epoch
  bool diverged = false;
  std::vector<std::string> warnings;
};

// Joint optimization of latent states and all factor parameters on a raw
// (unnormalized) T x n price slice. On divergence the last finite-loss
// checkpoint is returned with diverged = true.
FitResult fit(const std::vector<std::vector<double>>& prices, const TrainConfig& cfg,
              const std::vector<std::string>* names = nullptr);

// Rollout anchored at the given raw price row (normally the last row of the
// slice the checkpoint was trained on); returns tau x n raw prices.
std::vector<std::vector<double>> forecast_from_checkpoint(const model::Checkpoint& ckpt,
                                                          const std::vector<double>& last_raw_row,
                                                          std::size_t tau);

// --- rolling-origin cross-validation ------------------------------------------

struct CvSplit {
  std::size_t origin = 0;  // first test index
  std::size_t window = 0;  // training rows [origin - window, origin)
  std::size_t tau = 0;     // test rows [origin, origin + tau)
};

std::vector<CvSplit> make_cv_splits(std::size_t total_rows, std::size_t window, std::size_t tau,
                                    std::size_t n_origins);

// Trains / forecasts on the raw training slice; returns tau x n raw prices.
using Forecaster = std::function<std::vector<std::vector<double>>(
    const std::vector<std::vector<double>>& train_rows, std::size_t tau, std::uint64_t seed)>;

struct CvCell {
  std::size_t origin = 0;
  std::size_t series = 0;
  double mase = 0.0;
  double theil_u = 0.0;
  double mda = 0.0;
  double rel_mase = 0.0;   // vs naive persistence on the same frame
  double rel_theil = 0.0;
};

struct CvResult {
  std::vector<CvCell> cells;
  // per-origin forecasts and actuals, raw scale, tau x n
  std::vector<std::vector<std::vector<double>>> forecasts;
  std::vector<std::vector<std::vector<double>>> actuals;
  std::vector<CvSplit> splits;
};

CvResult rolling_origin_cv(const std::vector<std::vector<double>>& prices,
                           const Forecaster& forecaster, std::size_t window, std::size_t tau,
                           std::size_t n_origins, std::uint64_t seed, bool parallel = true);

// --- hyperparameter random search ---------------------------------------------

struct SearchSpace {
  std::pair<double, double> lambda{0.01, 1.0};
  std::pair<double, double> learning_rate{0.003, 0.05};
  std::pair<double, double> gamma{0.0, 0.05};
  std::vector<std::size_t> latent_dim{4, 6, 8, 12};
  std::vector<std::size_t> epochs{100, 200};
  std::vector<std::size_t> train_window{252, 378, 504, 630, 756};
};

TrainConfig sample_config(const SearchSpace& space, const TrainConfig& base, Rng& rng);

struct SearchOutcome {
  TrainConfig best;
  double best_score = 0.0;
  std::vector<double> scores;
};

// Uniform random search; objective is minimized. The default CLI objective
// is validation MASE on the last tau rows of the training slice.
SearchOutcome random_search(const SearchSpace& space, std::size_t budget,
                            const TrainConfig& base,
                            const std::function<double(const TrainConfig&)>& objective,
                            std::uint64_t seed);

}  // namespace stann::train
