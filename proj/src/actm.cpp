#include "stann/actm.hpp"

#include <cmath>

namespace stann::actm {

using diff::Tensor;

std::vector<Tensor*> ActmParams::trainable() {
  std::vector<Tensor*> out;
  for (auto& layer : layers) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

ActmParams make_actm_params(std::size_t latent_dim, Rng& rng, double output_bias) {
  auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(fan_in * fan_out);
    for (auto& v : w) v = rng.uniform(-limit, limit);
    return Tensor::from_data({fan_in, fan_out}, std::move(w), true);
  };
  ActmParams p;
  p.layers.push_back({glorot(latent_dim, latent_dim), Tensor::zeros({1, latent_dim}, true)});
  auto out_bias = Tensor::zeros({1, 1}, true);
  out_bias.mutable_data()[0] = output_bias;
  p.layers.push_back({glorot(latent_dim, 1), std::move(out_bias)});
  return p;
}

Tensor halting_probability(const Tensor& z, const ActmParams& params) {
  if (params.layers.empty()) throw std::invalid_argument("halting_probability: empty network");
  Tensor x = z;
  if (x.shape().size() == 1) x = diff::reshape(x, {1, x.size()});
  if (x.shape().size() != 2 || x.shape()[0] != 1 || x.shape()[1] != params.input_dim()) {
    throw std::invalid_argument("halting_probability: latent dimension mismatch");
  }
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const auto& layer = params.layers[li];
    x = diff::add(diff::matmul(x, layer.weight), layer.bias);
    const bool last = li + 1 == params.layers.size();
    x = diff::activation(last ? diff::Activation::kSigmoid : diff::Activation::kTanh, x);
  }
  // Keep the probability strictly inside (0,1) even when the sigmoid
  // saturates in double precision.
  return diff::reshape(diff::clamp(x, 1e-300, 1.0 - 1e-16), {1});
}

HaltingWalk halting_walk(std::size_t available, double kappa, std::size_t max_lag,
                         const std::function<Tensor(std::size_t)>& f_at) {
  if (available == 0) throw std::invalid_argument("halting walk: empty history");
  if (!(kappa > 0.0 && kappa < 0.5)) throw std::invalid_argument("kappa must be in (0, 0.5)");
  if (max_lag < 1) throw std::invalid_argument("max_lag must be >= 1");

  BudgetState budget{std::min(available, max_lag), 1.0, kappa};
  HaltingWalk walk;

  // One running sum of assigned probabilities; the residual weight is the
  // graph expression 1 - sum(previous f), so the simplex closes by
  // construction and gradients reach every earlier halting probability.
  Tensor assigned_sum;  // undefined until the first non-residual weight

  for (std::size_t k = 0; budget.b_time > 0; ++k) {
    const bool last_possible = (budget.b_time == 1);
    if (!last_possible) {
      Tensor f = f_at(k);
      const double fv = f.value();
      if (budget.b_cost - fv > budget.kappa) {
        walk.weights.push_back(f);
        walk.weight_values.push_back(fv);
        assigned_sum = assigned_sum.defined() ? diff::add(assigned_sum, f) : f;
        budget.b_cost = 1.0 - assigned_sum.value();
        --budget.b_time;
        continue;
      }
    }
    // Residual budget goes to the last factor considered.
    Tensor residual = assigned_sum.defined()
                          ? diff::sub(Tensor::scalar(1.0), assigned_sum)
                          : Tensor::scalar(1.0);
    walk.weights.push_back(residual);
    walk.weight_values.push_back(residual.value());
    break;
  }
  walk.order = walk.weights.size();
  return walk;
}

AttentionResult attend(const std::vector<Tensor>& history, const ActmParams& params,
                       double kappa, std::size_t max_lag) {
  if (history.empty()) throw std::invalid_argument("attend: empty history");

  HaltingWalk walk = halting_walk(history.size(), kappa, max_lag, [&](std::size_t k) {
    return halting_probability(history[k], params);
  });

  Tensor combined = diff::scale(history[0], walk.weights[0]);
  for (std::size_t k = 1; k < walk.order; ++k) {
    combined = diff::add(combined, diff::scale(history[k], walk.weights[k]));
  }

  AttentionResult result;
  result.weights = std::move(walk.weights);
  result.weight_values = std::move(walk.weight_values);
  result.combined = std::move(combined);
  result.order = walk.order;
  return result;
}

}  // namespace stann::actm
