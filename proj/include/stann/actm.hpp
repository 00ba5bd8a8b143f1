#pragma once

#include <cstddef>
#include <vector>

#include "stann/rng.hpp"
#include "stann/tensor.hpp"

namespace stann::actm {

// Feedforward net mapping an N-dim latent to a halting probability in (0,1).
// Hidden layers use tanh, the output is a single sigmoid unit.
struct ActmParams {
  struct Layer {
    diff::Tensor weight;  // in x out
    diff::Tensor bias;    // 1 x out
  };
  std::vector<Layer> layers;

  std::size_t input_dim() const { return layers.front().weight.shape()[0]; }
  std::vector<diff::Tensor*> trainable();
};

// Default configuration: one hidden layer of width N, tanh, sigmoid output.
// output_bias shifts the initial halting level (sigmoid(output_bias) before
// training).
ActmParams make_actm_params(std::size_t latent_dim, Rng& rng, double output_bias = 0.0);

// Cost/time budgets for one halting walk.
struct BudgetState {
  std::size_t b_time = 0;   // remaining past steps
  double b_cost = 1.0;      // remaining probability mass
  double kappa = 0.01;      // halting threshold
};

struct AttentionResult {
  std::vector<diff::Tensor> weights;      // graph-connected scalars, lag order
  std::vector<double> weight_values;      // plain mirror of the same weights
  diff::Tensor combined;                  // sum of weighted latents
  std::size_t order = 0;                  // number of weighted lags
};

// Halting probability f_actm(z): strictly inside (0,1) for finite inputs.
diff::Tensor halting_probability(const diff::Tensor& z, const ActmParams& params);

// Core halting walk over precomputed per-lag halting probabilities.
// f_at(k) must return the scalar tensor f_actm(Z_{t-k}); it is invoked
// lazily and never for the last permissible lag (whose weight is the
// residual budget by construction). Gradients flow through assigned
// weights only; the stop decision itself is non-differentiable.
struct HaltingWalk {
  std::vector<diff::Tensor> weights;
  std::vector<double> weight_values;
  std::size_t order = 0;
};
HaltingWalk halting_walk(std::size_t available, double kappa, std::size_t max_lag,
                         const std::function<diff::Tensor(std::size_t)>& f_at);

// Attention over a latent history given newest-first: history[0] = Z_t,
// history[1] = Z_{t-1}, ... Weights sum to one; the walk stops when the
// remaining cost budget would drop to kappa or below, when history runs
// out, or at max_lag, assigning the leftover budget to the last factor.
AttentionResult attend(const std::vector<diff::Tensor>& history, const ActmParams& params,
                       double kappa, std::size_t max_lag);

}  // namespace stann::actm
