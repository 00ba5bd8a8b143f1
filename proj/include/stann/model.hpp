#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stann/actm.hpp"
#include "stann/stack.hpp"
#include "stann/tensor.hpp"

namespace stann::model {

// Relational variants: plain uses the prior relation tensor W as-is,
// R attenuates it with learned weights (Gamma elementwise W), D drops the
// prior and learns the relational structure outright.
enum class Variant { kPlain, kR, kD };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);

struct ModelConfig {
  std::size_t n = 0;           // number of series
  std::size_t latent_dim = 8;  // N
  std::size_t relations = 1;   // R
  std::size_t feature_dim = 1; // m
  Variant variant = Variant::kPlain;
  std::size_t max_lag = 64;
  double kappa = 0.01;
  StackConfig decoder_stack;
  StackConfig dynamic_stack;
  diff::Activation h_g = diff::Activation::kTanh;
  diff::Activation h_d = diff::Activation::kIdentity;
  double actm_bias_init = 0.0;
};

// Mixing parameters: intradependency map theta0, one theta per relation,
// the nonnegative prior W (never trained) and optional learned Gamma.
struct SpatialParams {
  Variant variant = Variant::kPlain;
  diff::Tensor theta0;                  // N x N
  std::vector<diff::Tensor> theta_r;    // R of N x N
  std::vector<diff::Tensor> relation_w; // R of n x n, prior, no grad
  std::vector<diff::Tensor> gamma;      // R of n x n (variants R and D)
};

struct ModelParams {
  ModelConfig cfg;
  ResidualStack decoder;        // N -> m
  ResidualStack dynamic;        // N -> N
  actm::ActmParams actm_params;
  SpatialParams spatial;

  std::vector<std::pair<std::string, diff::Tensor*>> trainable();
};

// Latent states are free parameters, one N-vector per (time, series).
struct LatentStates {
  diff::Tensor states;  // T x n x N, requires_grad
  std::size_t time_steps() const { return states.shape()[0]; }
};

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed,
                        std::optional<std::uint64_t> actm_seed = std::nullopt);
LatentStates init_latents(std::size_t T, std::size_t n, std::size_t latent_dim,
                          std::uint64_t seed);

// Per-series decode of the expected variation; rows are independent, so a
// whole n x N (or batched) matrix goes through in one call.
diff::Tensor decode(const diff::Tensor& z, const ResidualStack& decoder,
                    diff::Activation h_d);

// Z_t Theta0 + sum_r M_r (Z_t Theta_r), with M_r = W_r, Gamma_r elementwise
// W_r, or Gamma_r depending on the variant.
diff::Tensor mix_spatial(const diff::Tensor& z_t, const SpatialParams& sp);

// One latent transition. history is newest-first: history[0] = Z_t. Each
// considered step is mixed first, attention runs per series over the mixed
// states, and the combined state goes through the dynamic stack and h_g.
diff::Tensor dynamic_step(const std::vector<diff::Tensor>& history, const ModelParams& params);

struct LossConfig {
  double lambda = 0.1;
  double gamma = 0.0;
  enum class Delta { kMse, kMae } delta = Delta::kMse;
};

struct LossBreakdown {
  diff::Tensor total;            // scalar graph node
  double reconstruction = 0.0;   // sum over steps of per-step delta
  double dynamics = 0.0;         // sum over steps of squared latent error
  double sparsity = 0.0;         // |Gamma|
  std::size_t decoder_terms = 0; // number of per-(t, series) reconstruction terms
  std::size_t steps = 0;         // T_steps used as the 1/T normalizer
};

// Bi-objective training loss over observed values x (T x n, already
// normalized): mean per-step reconstruction delta + lambda * mean per-step
// dynamic error + gamma * |Gamma|. batch_ts, when given, restricts both
// sums to those transition indices (t in [1, T-1], predicting step t).
LossBreakdown model_loss(const diff::Tensor& x, const LatentStates& latents,
                         const ModelParams& params, const LossConfig& cfg,
                         const std::vector<std::size_t>* batch_ts = nullptr);

// Unweighted total energy: sum over time of decoder error plus dynamic
// error (the lambda=1, gamma=0 form, not divided by T). Diagnostic only.
double energy(const diff::Tensor& x, const LatentStates& latents, const ModelParams& params,
              LossConfig::Delta delta = LossConfig::Delta::kMse);

// Recursive rollout: extends the latent history tau steps with
// dynamic_step, decodes each variation and accumulates prices from the
// last observed row of x. Returns tau x n (normalized scale).
std::vector<std::vector<double>> forecast(const diff::Tensor& x, const LatentStates& latents,
                                          const ModelParams& params, std::size_t tau);
std::vector<std::vector<double>> forecast_from_last(const std::vector<double>& last_observed,
                                                    const LatentStates& latents,
                                                    const ModelParams& params, std::size_t tau);

// Effective autoregressive order per (t, series) over the in-sample latents.
std::vector<std::vector<int>> effective_order_trace(const LatentStates& latents,
                                                    const ModelParams& params);

// Clamped Pearson correlations as the prior relation tensor (R = 1):
// W[i][j] = max(0, pearson(i, j)) for i != j, zeroed below threshold.
// Constant series yield zero rows/columns and a warning.
std::vector<diff::Tensor> build_relation_tensor(const std::vector<std::vector<double>>& series,
                                                double threshold,
                                                std::vector<std::string>* warnings = nullptr);

}  // namespace stann::model
