#include "stann/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace stann::model {

using diff::Tensor;

Variant variant_from_string(const std::string& name) {
  if (name == "stann" || name == "plain" || name == "stnn") return Variant::kPlain;
  if (name == "stann-r" || name == "r") return Variant::kR;
  if (name == "stann-d" || name == "d") return Variant::kD;
  throw UsageError("unknown variant: " + name);
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kPlain: return "stann";
    case Variant::kR: return "stann-r";
    case Variant::kD: return "stann-d";
  }
  return "stann";
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::trainable() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("theta0", &spatial.theta0);
  for (std::size_t r = 0; r < spatial.theta_r.size(); ++r) {
    out.emplace_back("theta_r" + std::to_string(r), &spatial.theta_r[r]);
  }
  for (std::size_t r = 0; r < spatial.gamma.size(); ++r) {
    out.emplace_back("gamma" + std::to_string(r), &spatial.gamma[r]);
  }
  auto add_stack = [&out](const std::string& prefix, ResidualStack& stack) {
    for (std::size_t b = 0; b < stack.blocks.size(); ++b) {
      auto& block = stack.blocks[b];
      const std::string bp = prefix + ".b" + std::to_string(b);
      for (std::size_t l = 0; l < block.layers.size(); ++l) {
        out.emplace_back(bp + ".l" + std::to_string(l) + ".w", &block.layers[l].weight);
        out.emplace_back(bp + ".l" + std::to_string(l) + ".b", &block.layers[l].bias);
      }
      out.emplace_back(bp + ".back.w", &block.backcast.weight);
      out.emplace_back(bp + ".back.b", &block.backcast.bias);
      out.emplace_back(bp + ".fore.w", &block.forecast.weight);
      out.emplace_back(bp + ".fore.b", &block.forecast.bias);
    }
  };
  add_stack("decoder", decoder);
  add_stack("dynamic", dynamic);
  for (std::size_t l = 0; l < actm_params.layers.size(); ++l) {
    out.emplace_back("actm.l" + std::to_string(l) + ".w", &actm_params.layers[l].weight);
    out.emplace_back("actm.l" + std::to_string(l) + ".b", &actm_params.layers[l].bias);
  }
  return out;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed,
                        std::optional<std::uint64_t> actm_seed) {
  if (cfg.n == 0) throw std::invalid_argument("init_params: n must be positive");
  ModelParams p;
  p.cfg = cfg;

  Rng dec_rng(derive_seed(seed, "decoder"));
  Rng dyn_rng(derive_seed(seed, "dynamic"));
  Rng sp_rng(derive_seed(seed, "spatial"));
  Rng actm_rng(actm_seed ? *actm_seed : derive_seed(seed, "actm"));

  p.decoder = make_stack(cfg.latent_dim, cfg.feature_dim, cfg.decoder_stack, dec_rng);
  p.dynamic = make_stack(cfg.latent_dim, cfg.latent_dim, cfg.dynamic_stack, dyn_rng);
  p.actm_params = actm::make_actm_params(cfg.latent_dim, actm_rng, cfg.actm_bias_init);

  p.spatial.variant = cfg.variant;
  auto glorot_sq = [&sp_rng](std::size_t dim) {
    const double limit = std::sqrt(6.0 / static_cast<double>(2 * dim));
    std::vector<double> w(dim * dim);
    for (auto& v : w) v = sp_rng.uniform(-limit, limit);
    return Tensor::from_data({dim, dim}, std::move(w), true);
  };
  p.spatial.theta0 = glorot_sq(cfg.latent_dim);
  for (std::size_t r = 0; r < cfg.relations; ++r) {
    p.spatial.theta_r.push_back(glorot_sq(cfg.latent_dim));
    p.spatial.relation_w.push_back(Tensor::zeros({cfg.n, cfg.n}, false));
    if (cfg.variant != Variant::kPlain) {
      p.spatial.gamma.push_back(Tensor::full({cfg.n, cfg.n}, 1.0, true));
    }
  }
  return p;
}

LatentStates init_latents(std::size_t T, std::size_t n, std::size_t latent_dim,
                          std::uint64_t seed) {
  Rng rng(derive_seed(seed, "latents"));
  std::vector<double> z(T * n * latent_dim);
  for (auto& v : z) v = rng.normal(0.0, 0.1);
  return {Tensor::from_data({T, n, latent_dim}, std::move(z), true)};
}

Tensor decode(const Tensor& z, const ResidualStack& decoder, diff::Activation h_d) {
  Tensor x = z;
  if (x.shape().size() == 1) x = diff::reshape(x, {1, x.size()});
  if (x.shape()[1] != decoder.input_dim()) {
    throw std::invalid_argument("decode: latent width mismatch");
  }
  return diff::activation(h_d, decoder.apply(x));
}

Tensor mix_spatial(const Tensor& z_t, const SpatialParams& sp) {
  if (z_t.shape().size() != 2) throw std::invalid_argument("mix_spatial: expected n x N matrix");
  Tensor out = diff::matmul(z_t, sp.theta0);
  for (std::size_t r = 0; r < sp.theta_r.size(); ++r) {
    Tensor mixer;
    switch (sp.variant) {
      case Variant::kPlain:
        mixer = sp.relation_w[r];
        break;
      case Variant::kR:
        mixer = diff::mul(sp.gamma[r], sp.relation_w[r]);
        break;
      case Variant::kD:
        mixer = sp.gamma[r];
        break;
    }
    if (sp.variant != Variant::kD) {
      for (double v : sp.relation_w[r].data()) {
        if (v < 0.0) throw std::invalid_argument("mix_spatial: negative relation prior");
      }
    }
    out = diff::add(out, diff::matmul(mixer, diff::matmul(z_t, sp.theta_r[r])));
  }
  return out;
}

Tensor dynamic_step(const std::vector<Tensor>& history, const ModelParams& params) {
  if (history.empty()) throw std::invalid_argument("dynamic_step: empty history");
  const std::size_t n = params.cfg.n;
  const std::size_t considered = std::min(history.size(), params.cfg.max_lag);

  std::vector<Tensor> mixed;
  mixed.reserve(considered);
  for (std::size_t k = 0; k < considered; ++k) {
    mixed.push_back(mix_spatial(history[k], params.spatial));
  }

  std::vector<Tensor> combined_rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Tensor> series_history;
    series_history.reserve(considered);
    for (std::size_t k = 0; k < considered; ++k) {
      series_history.push_back(diff::select_row(mixed[k], i));
    }
    auto res = actm::attend(series_history, params.actm_params, params.cfg.kappa,
                            params.cfg.max_lag);
    combined_rows[i] = diff::reshape(res.combined, {1, params.cfg.latent_dim});
  }
  Tensor combined = diff::concat_rows(combined_rows);
  return diff::activation(params.cfg.h_g, params.dynamic.apply(combined));
}

namespace {

// Shared cache for the batched loss / trace computations. Mixed states,
// per-series rows of them, and halting probabilities are functions of the
// step alone, so they are computed once and reused by every walk.
class StepCache {
 public:
  StepCache(const Tensor& z3, const ModelParams& params, std::size_t last_step)
      : z3_(z3), params_(params), n_(params.cfg.n), latent_(params.cfg.latent_dim) {
    mixed_.resize(last_step + 1);
    rows_.assign(last_step + 1, std::vector<Tensor>(n_));
  }

  const Tensor& mixed(std::size_t s) {
    if (!mixed_[s].defined()) {
      mixed_[s] = mix_spatial(diff::select_row(z3_, s), params_.spatial);
    }
    return mixed_[s];
  }

  const Tensor& row(std::size_t s, std::size_t i) {
    if (!rows_[s][i].defined()) {
      rows_[s][i] = diff::reshape(diff::select_row(mixed(s), i), {1, latent_});
    }
    return rows_[s][i];
  }

  // Halting probability for (s, i); the whole column is materialized on
  // first use via one batched pass through the actm net.
  Tensor f(std::size_t s, std::size_t i) {
    if (!f_all_.defined()) {
      std::vector<Tensor> all;
      all.reserve(mixed_.size());
      for (std::size_t s2 = 0; s2 < mixed_.size(); ++s2) all.push_back(mixed(s2));
      Tensor big = diff::concat_rows(all);
      Tensor x = big;
      const auto& layers = params_.actm_params.layers;
      for (std::size_t li = 0; li < layers.size(); ++li) {
        Tensor y = diff::matmul(x, layers[li].weight);
        y = diff::add(y, diff::repeat_rows(layers[li].bias, y.shape()[0]));
        x = diff::activation(li + 1 == layers.size() ? diff::Activation::kSigmoid
                                                     : diff::Activation::kTanh,
                             y);
      }
      f_all_ = diff::clamp(x, 1e-300, 1.0 - 1e-16);
      f_cells_.assign(mixed_.size() * n_, Tensor());
    }
    Tensor& cell = f_cells_[s * n_ + i];
    if (!cell.defined()) cell = diff::select_row(f_all_, s * n_ + i);
    return cell;
  }

 private:
  const Tensor& z3_;
  const ModelParams& params_;
  std::size_t n_;
  std::size_t latent_;
  std::vector<Tensor> mixed_;
  std::vector<std::vector<Tensor>> rows_;
  Tensor f_all_;
  std::vector<Tensor> f_cells_;
};

// Combined (attended) state for series i at origin step s, newest-first
// over the cached mixed rows.
Tensor combined_row(StepCache& cache, const ModelParams& params, std::size_t s, std::size_t i,
                    std::size_t* order_out = nullptr) {
  auto walk = actm::halting_walk(s + 1, params.cfg.kappa, params.cfg.max_lag,
                                 [&](std::size_t k) { return cache.f(s - k, i); });
  Tensor combined = diff::scale(cache.row(s, i), walk.weights[0]);
  for (std::size_t k = 1; k < walk.order; ++k) {
    combined = diff::add(combined, diff::scale(cache.row(s - k, i), walk.weights[k]));
  }
  if (order_out) *order_out = walk.order;
  return combined;
}

}  // namespace

LossBreakdown model_loss(const Tensor& x, const LatentStates& latents, const ModelParams& params,
                         const LossConfig& cfg, const std::vector<std::size_t>* batch_ts) {
  const std::size_t T = latents.time_steps();
  const std::size_t n = params.cfg.n;
  const std::size_t latent_dim = params.cfg.latent_dim;
  if (x.shape().size() != 2 || x.shape()[0] != T || x.shape()[1] != n) {
    throw std::invalid_argument("model_loss: x and latents misaligned");
  }
  if (T < 2) throw std::invalid_argument("model_loss: need at least two time steps");

  std::vector<std::size_t> ts;
  if (batch_ts) {
    ts = *batch_ts;
    for (std::size_t t : ts) {
      if (t < 1 || t >= T) throw std::invalid_argument("model_loss: batch step out of range");
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    if (ts.empty()) throw std::invalid_argument("model_loss: empty batch");
  } else {
    ts.resize(T - 1);
    std::iota(ts.begin(), ts.end(), 1);
  }
  const bool full = !batch_ts;
  const std::size_t steps = ts.size();

  Tensor zmat = diff::reshape(latents.states, {T * n, latent_dim});

  // Reconstruction: predicted variations vs observed first differences for
  // every (t, i) with t in the batch.
  Tensor dec_in;
  if (full) {
    dec_in = diff::slice_rows(zmat, n, T * n);
  } else {
    std::vector<Tensor> parts;
    parts.reserve(steps);
    for (std::size_t t : ts) parts.push_back(diff::slice_rows(zmat, t * n, (t + 1) * n));
    dec_in = diff::concat_rows(parts);
  }
  Tensor pred_var = decode(dec_in, params.decoder, params.cfg.h_d);

  std::vector<double> target(steps * n);
  const auto xd = x.data();
  for (std::size_t si = 0; si < steps; ++si) {
    const std::size_t t = ts[si];
    for (std::size_t i = 0; i < n; ++i) {
      target[si * n + i] = xd[t * n + i] - xd[(t - 1) * n + i];
    }
  }
  Tensor target_t = Tensor::from_data({steps * n, 1}, std::move(target), false);
  Tensor rec_diff = diff::sub(pred_var, target_t);
  Tensor rec_sum = diff::scale(
      cfg.delta == LossConfig::Delta::kMse ? diff::sq_l2(rec_diff) : diff::l1(rec_diff),
      1.0 / static_cast<double>(n * params.cfg.feature_dim));

  // Dynamics: attended transition from steps <= t-1 onto Z_t.
  StepCache cache(latents.states, params, ts.back() - 1);
  std::vector<Tensor> pred_rows;
  pred_rows.reserve(steps * n);
  for (std::size_t t : ts) {
    const std::size_t s = t - 1;
    for (std::size_t i = 0; i < n; ++i) {
      pred_rows.push_back(combined_row(cache, params, s, i));
    }
  }
  Tensor dyn_pred = diff::activation(params.cfg.h_g,
                                     params.dynamic.apply(diff::concat_rows(pred_rows)));
  Tensor dyn_target;
  if (full) {
    dyn_target = diff::slice_rows(zmat, n, T * n);
  } else {
    std::vector<Tensor> parts;
    parts.reserve(steps);
    for (std::size_t t : ts) parts.push_back(diff::slice_rows(zmat, t * n, (t + 1) * n));
    dyn_target = diff::concat_rows(parts);
  }
  Tensor dyn_sum = diff::sq_l2(diff::sub(dyn_pred, dyn_target));

  const double inv_steps = 1.0 / static_cast<double>(steps);
  Tensor total = diff::add(diff::scale(rec_sum, inv_steps),
                           diff::scale(dyn_sum, cfg.lambda * inv_steps));

  LossBreakdown out;
  out.sparsity = 0.0;
  if (!params.spatial.gamma.empty()) {
    Tensor sp;
    for (const auto& g : params.spatial.gamma) {
      Tensor term = diff::l1(g);
      sp = sp.defined() ? diff::add(sp, term) : term;
    }
    out.sparsity = sp.value();
    if (cfg.gamma != 0.0) total = diff::add(total, diff::scale(sp, cfg.gamma));
  }

  out.total = total;
  out.reconstruction = rec_sum.value();
  out.dynamics = dyn_sum.value();
  out.decoder_terms = steps * n;
  out.steps = steps;
  return out;
}

double energy(const Tensor& x, const LatentStates& latents, const ModelParams& params,
              LossConfig::Delta delta) {
  LossConfig cfg;
  cfg.lambda = 1.0;
  cfg.gamma = 0.0;
  cfg.delta = delta;
  LossBreakdown b = model_loss(x, latents, params, cfg);
  return b.reconstruction + b.dynamics;
}

std::vector<std::vector<double>> forecast(const Tensor& x, const LatentStates& latents,
                                          const ModelParams& params, std::size_t tau) {
  const std::size_t T = latents.time_steps();
  const std::size_t n = params.cfg.n;
  if (x.shape().size() != 2 || x.shape()[0] != T || x.shape()[1] != n) {
    throw std::invalid_argument("forecast: x and latents misaligned");
  }
  std::vector<double> last(x.data().begin() + (T - 1) * n, x.data().begin() + T * n);
  return forecast_from_last(last, latents, params, tau);
}

std::vector<std::vector<double>> forecast_from_last(const std::vector<double>& last_observed,
                                                    const LatentStates& latents,
                                                    const ModelParams& params, std::size_t tau) {
  if (tau < 1) throw std::invalid_argument("forecast: tau must be >= 1");
  const std::size_t T = latents.time_steps();
  const std::size_t n = params.cfg.n;
  if (last_observed.size() != n) {
    throw std::invalid_argument("forecast: last observation width mismatch");
  }

  // Rollout works on fresh constant copies so no training graph is built.
  std::deque<Tensor> history;
  const std::size_t keep = std::min<std::size_t>(T, params.cfg.max_lag);
  const auto zd = latents.states.data();
  const std::size_t latent_dim = params.cfg.latent_dim;
  for (std::size_t k = 0; k < keep; ++k) {
    const std::size_t t = T - 1 - k;
    std::vector<double> slab(zd.begin() + t * n * latent_dim,
                             zd.begin() + (t + 1) * n * latent_dim);
    history.push_back(Tensor::from_data({n, latent_dim}, std::move(slab), false));
  }

  std::vector<double> current = last_observed;

  std::vector<std::vector<double>> trajectory;
  trajectory.reserve(tau);
  for (std::size_t j = 0; j < tau; ++j) {
    std::vector<Tensor> view(history.begin(), history.end());
    Tensor z_next = dynamic_step(view, params);
    Tensor variation = decode(z_next, params.decoder, params.cfg.h_d);
    for (std::size_t i = 0; i < n; ++i) current[i] += variation.data()[i];
    trajectory.push_back(current);
    history.push_front(z_next);
    if (history.size() > params.cfg.max_lag) history.pop_back();
  }
  return trajectory;
}

std::vector<std::vector<int>> effective_order_trace(const LatentStates& latents,
                                                    const ModelParams& params) {
  const std::size_t T = latents.time_steps();
  const std::size_t n = params.cfg.n;

  // Constant copy of the latents: the trace never needs gradients.
  std::vector<double> zcopy(latents.states.data().begin(), latents.states.data().end());
  LatentStates frozen{Tensor::from_data(latents.states.shape(), std::move(zcopy), false)};

  StepCache cache(frozen.states, params, T - 1);
  std::vector<std::vector<int>> orders(T, std::vector<int>(n, 0));
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t order = 0;
      combined_row(cache, params, t, i, &order);
      orders[t][i] = static_cast<int>(order);
    }
  }
  return orders;
}

std::vector<Tensor> build_relation_tensor(const std::vector<std::vector<double>>& series,
                                          double threshold,
                                          std::vector<std::string>* warnings) {
  const std::size_t n = series.size();
  if (n == 0) throw std::invalid_argument("build_relation_tensor: no series");
  const std::size_t T = series[0].size();
  if (T < 2) throw std::invalid_argument("build_relation_tensor: need >= 2 observations");
  for (const auto& s : series) {
    if (s.size() != T) throw std::invalid_argument("build_relation_tensor: ragged series");
  }

  std::vector<double> centered_norm(n, 0.0);
  std::vector<std::vector<double>> centered(n, std::vector<double>(T));
  for (std::size_t i = 0; i < n; ++i) {
    double mean = std::accumulate(series[i].begin(), series[i].end(), 0.0) / T;
    double ss = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      centered[i][t] = series[i][t] - mean;
      ss += centered[i][t] * centered[i][t];
    }
    centered_norm[i] = std::sqrt(ss);
    if (centered_norm[i] == 0.0 && warnings) {
      warnings->push_back("series " + std::to_string(i) +
                          " is constant; its correlations are undefined and set to 0");
    }
  }

  std::vector<double> w(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (centered_norm[i] == 0.0 || centered_norm[j] == 0.0) continue;
      double dot = 0.0;
      for (std::size_t t = 0; t < T; ++t) dot += centered[i][t] * centered[j][t];
      double rho = dot / (centered_norm[i] * centered_norm[j]);
      double v = std::max(0.0, rho);
      if (v < threshold) v = 0.0;
      w[i * n + j] = v;
      w[j * n + i] = v;
    }
  }
  std::vector<Tensor> out;
  out.push_back(Tensor::from_data({n, n}, std::move(w), false));
  return out;
}

}  // namespace stann::model
