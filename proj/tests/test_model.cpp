#include <doctest.h>

#include <cmath>

#include "stann/model.hpp"

using namespace stann;
using diff::Tensor;

namespace {

model::ModelConfig tiny_config(std::size_t n, std::size_t latent_dim,
                               model::Variant variant = model::Variant::kPlain) {
  model::ModelConfig cfg;
  cfg.n = n;
  cfg.latent_dim = latent_dim;
  cfg.relations = 1;
  cfg.variant = variant;
  cfg.max_lag = 4;
  cfg.decoder_stack = {2, 1, 6};
  cfg.dynamic_stack = {2, 1, 6};
  return cfg;
}

Tensor random_x(std::size_t T, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(T * n);
  for (auto& x : v) x = rng.normal(0.0, 0.5);
  return Tensor::from_data({T, n}, std::move(v), false);
}

void fill_relation(model::ModelParams& params, double value) {
  for (auto& w : params.spatial.relation_w) {
    auto vals = w.mutable_data();
    std::fill(vals.begin(), vals.end(), value);
    // zero diagonal, as the correlation builder produces
    const std::size_t n = w.shape()[0];
    for (std::size_t i = 0; i < n; ++i) vals[i * n + i] = 0.0;
  }
}

// Identity dynamic factor: theta0 = I, zero relations, identity stack.
void make_identity_dynamics(model::ModelParams& params) {
  auto t0 = params.spatial.theta0.mutable_data();
  std::fill(t0.begin(), t0.end(), 0.0);
  const std::size_t N = params.spatial.theta0.shape()[0];
  for (std::size_t i = 0; i < N; ++i) t0[i * N + i] = 1.0;
  fill_relation(params, 0.0);
  params.dynamic = model::ResidualStack{};
  Rng rng(1);
  params.dynamic = model::make_stack(N, N, {1, 0, 1}, rng);
  auto w = params.dynamic.blocks[0].forecast.weight.mutable_data();
  std::fill(w.begin(), w.end(), 0.0);
  for (std::size_t i = 0; i < N; ++i) w[i * N + i] = 1.0;
  auto b = params.dynamic.blocks[0].forecast.bias.mutable_data();
  std::fill(b.begin(), b.end(), 0.0);
  params.cfg.h_g = diff::Activation::kIdentity;
  params.cfg.dynamic_stack = {1, 0, 1};
}

void saturate_actm(model::ModelParams& params, double level = 8.0) {
  for (auto& layer : params.actm_params.layers) {
    auto w = layer.weight.mutable_data();
    std::fill(w.begin(), w.end(), 0.0);
    auto b = layer.bias.mutable_data();
    std::fill(b.begin(), b.end(), 0.0);
  }
  params.actm_params.layers.back().bias.mutable_data()[0] = level;
}

}  // namespace

TEST_CASE("decode: zero weights give naive persistence, permutation equivariance") {
  auto cfg = tiny_config(3, 4);
  auto params = model::init_params(cfg, 7);
  for (auto* t : params.decoder.trainable()) {
    auto vals = t->mutable_data();
    std::fill(vals.begin(), vals.end(), 0.0);
  }
  Tensor z = Tensor::from_data({3, 4},
                               {0.1, 0.2, 0.3, 0.4, -0.1, -0.2, -0.3, -0.4, 1, 2, 3, 4}, false);
  Tensor v = model::decode(z, params.decoder, cfg.h_d);
  for (double x : v.data()) CHECK(x == 0.0);

  // per-series decoding: permuting rows permutes outputs identically
  auto params2 = model::init_params(cfg, 8);
  Tensor out = model::decode(z, params2.decoder, cfg.h_d);
  std::vector<double> permuted{z.data()[4], z.data()[5], z.data()[6], z.data()[7],
                               z.data()[8], z.data()[9], z.data()[10], z.data()[11],
                               z.data()[0], z.data()[1], z.data()[2], z.data()[3]};
  Tensor zp = Tensor::from_data({3, 4}, std::move(permuted), false);
  Tensor outp = model::decode(zp, params2.decoder, cfg.h_d);
  CHECK(outp.data()[0] == out.data()[1]);
  CHECK(outp.data()[1] == out.data()[2]);
  CHECK(outp.data()[2] == out.data()[0]);

  CHECK_THROWS_AS(model::decode(Tensor::zeros({3, 5}), params.decoder, cfg.h_d),
                  std::invalid_argument);
}

TEST_CASE("decode gradient wrt the latent matches finite differences") {
  auto cfg = tiny_config(1, 4);
  auto params = model::init_params(cfg, 3);
  params.decoder.hidden_activation = diff::Activation::kTanh;
  Tensor z = Tensor::from_data({1, 4}, {0.3, -0.2, 0.5, 0.1}, true);
  auto loss = [&]() { return diff::sum(model::decode(z, params.decoder, cfg.h_d)); };
  CHECK(diff::grad_check(loss, {z}, 1e-5) < 1e-6);
}

TEST_CASE("mix_spatial: identity, variant degeneracies, zero relations") {
  auto cfg = tiny_config(3, 4);
  auto params = model::init_params(cfg, 11);

  // R effectively 0 (zero W), theta0 = I -> identity map
  make_identity_dynamics(params);
  Tensor z = Tensor::from_data({3, 4}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12},
                               false);
  Tensor mixed = model::mix_spatial(z, params.spatial);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(mixed.data()[i] == doctest::Approx(z.data()[i]));

  // variant R with all-ones Gamma equals the plain variant
  auto plain = model::init_params(tiny_config(3, 4, model::Variant::kPlain), 21);
  auto variant_r = model::init_params(tiny_config(3, 4, model::Variant::kR), 21);
  fill_relation(plain, 0.7);
  fill_relation(variant_r, 0.7);
  Tensor a = model::mix_spatial(z, plain.spatial);
  Tensor b = model::mix_spatial(z, variant_r.spatial);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == b.data()[i]);

  // negative prior rejected
  auto bad = model::init_params(tiny_config(3, 4), 5);
  auto w = bad.spatial.relation_w[0].mutable_data();
  w[1] = -0.5;
  CHECK_THROWS_AS(model::mix_spatial(z, bad.spatial), std::invalid_argument);
}

TEST_CASE("dynamic_step: latent persistence under identity configuration") {
  auto cfg = tiny_config(2, 3);
  auto params = model::init_params(cfg, 13);
  make_identity_dynamics(params);
  saturate_actm(params);  // order-1 halting

  Tensor z_t = Tensor::from_data({2, 3}, {0.5, -0.5, 0.25, 1.0, 2.0, -1.0}, false);
  Tensor z_prev = Tensor::from_data({2, 3}, {9, 9, 9, 9, 9, 9}, false);
  Tensor next = model::dynamic_step({z_t, z_prev}, params);
  REQUIRE(next.shape()[0] == 2);
  REQUIRE(next.shape()[1] == 3);
  for (std::size_t i = 0; i < z_t.size(); ++i) {
    CHECK(next.data()[i] == doctest::Approx(z_t.data()[i]));
  }
}

TEST_CASE("dynamic_step output shape for any history length") {
  auto cfg = tiny_config(3, 4);
  auto params = model::init_params(cfg, 17);
  fill_relation(params, 0.3);
  std::vector<Tensor> history;
  for (std::size_t len = 1; len <= 6; ++len) {
    history.insert(history.begin(), random_x(3, 4, 100 + len));
    Tensor out = model::dynamic_step(history, params);
    CHECK(out.shape()[0] == 3);
    CHECK(out.shape()[1] == 4);
  }
}

TEST_CASE("model_loss: perfect fit is zero, gamma isolates the sparsity term") {
  // Identity dynamics + zero decoder + constant x -> both terms vanish.
  auto cfg = tiny_config(2, 3);
  auto params = model::init_params(cfg, 19);
  make_identity_dynamics(params);
  saturate_actm(params);
  for (auto* t : params.decoder.trainable()) {
    auto vals = t->mutable_data();
    std::fill(vals.begin(), vals.end(), 0.0);
  }
  const std::size_t T = 5, n = 2, N = 3;
  Tensor x = Tensor::from_data({T, n}, std::vector<double>(T * n, 1.25), false);
  std::vector<double> zdata(T * n * N);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < n * N; ++j) zdata[t * n * N + j] = 0.1 * (j + 1);
  model::LatentStates latents{Tensor::from_data({T, n, N}, std::move(zdata), true)};

  model::LossConfig lc;
  lc.lambda = 0.7;
  lc.gamma = 0.0;
  auto loss = model::model_loss(x, latents, params, lc);
  CHECK(loss.total.value() == doctest::Approx(0.0));
  CHECK(loss.decoder_terms == (T - 1) * n);

  // loss(2*lambda) - loss(lambda) = lambda * dyn_term
  auto params2 = model::init_params(cfg, 23);
  fill_relation(params2, 0.4);
  model::LatentStates latents2 = model::init_latents(T, n, N, 31);
  Tensor x2 = random_x(T, n, 37);
  model::LossConfig l1 = lc, l2 = lc;
  l1.lambda = 0.3;
  l2.lambda = 0.6;
  auto a = model::model_loss(x2, latents2, params2, l1);
  auto b = model::model_loss(x2, latents2, params2, l2);
  const double dyn_mean = a.dynamics / static_cast<double>(a.steps);
  CHECK(b.total.value() - a.total.value() == doctest::Approx(0.3 * dyn_mean).epsilon(1e-9));
}

TEST_CASE("model_loss: gamma gates exactly the sparsity term") {
  // Gamma also feeds the mixing in the R/D variants, so the clean invariant
  // is linearity: loss(g2) - loss(g1) = (g2 - g1) * |Gamma|.
  auto cfg = tiny_config(2, 3, model::Variant::kD);
  auto params = model::init_params(cfg, 29);
  model::LatentStates latents = model::init_latents(6, 2, 3, 41);
  Tensor x = random_x(6, 2, 43);
  model::LossConfig g0, g1;
  g0.gamma = 0.0;
  g1.gamma = 0.25;

  auto l0 = model::model_loss(x, latents, params, g0);
  auto l1 = model::model_loss(x, latents, params, g1);
  CHECK(l0.sparsity == l1.sparsity);
  CHECK(l1.total.value() - l0.total.value() ==
        doctest::Approx(0.25 * l0.sparsity).epsilon(1e-12));

  // in the plain variant there is no Gamma at all
  auto plain = model::init_params(tiny_config(2, 3), 29);
  auto lp = model::model_loss(x, latents, plain, g1);
  CHECK(lp.sparsity == 0.0);
}

TEST_CASE("energy: nonnegative, zero at perfect fit, equals loss times steps") {
  auto cfg = tiny_config(2, 3);
  auto params = model::init_params(cfg, 47);
  fill_relation(params, 0.2);
  model::LatentStates latents = model::init_latents(7, 2, 3, 53);
  Tensor x = random_x(7, 2, 59);

  const double e = model::energy(x, latents, params);
  CHECK(e >= 0.0);

  model::LossConfig lc;
  lc.lambda = 1.0;
  lc.gamma = 0.0;
  auto loss = model::model_loss(x, latents, params, lc);
  CHECK(e == doctest::Approx(loss.total.value() * static_cast<double>(loss.steps)).epsilon(1e-12));
}

TEST_CASE("forecast: zero decoder freezes prices; persistence plus constant ramps") {
  auto cfg = tiny_config(2, 3);
  auto params = model::init_params(cfg, 61);
  make_identity_dynamics(params);
  saturate_actm(params);
  for (auto* t : params.decoder.trainable()) {
    auto vals = t->mutable_data();
    std::fill(vals.begin(), vals.end(), 0.0);
  }
  model::LatentStates latents = model::init_latents(5, 2, 3, 67);
  Tensor x = random_x(5, 2, 71);

  auto flat = model::forecast(x, latents, params, 4);
  REQUIRE(flat.size() == 4);
  for (const auto& row : flat) {
    CHECK(row[0] == doctest::Approx(x.data()[4 * 2 + 0]));
    CHECK(row[1] == doctest::Approx(x.data()[4 * 2 + 1]));
  }

  // constant decoder bias c -> linear ramp x_T + j*c
  params.decoder.blocks[0].forecast.bias.mutable_data()[0] = 0.5;
  auto ramp = model::forecast(x, latents, params, 3);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(ramp[j][0] ==
          doctest::Approx(x.data()[4 * 2 + 0] + 0.5 * static_cast<double>(j + 1)));
  }

  CHECK_THROWS_AS(model::forecast(x, latents, params, 0), std::invalid_argument);
}

TEST_CASE("forecast determinism") {
  auto cfg = tiny_config(3, 4);
  auto params = model::init_params(cfg, 73);
  fill_relation(params, 0.25);
  model::LatentStates latents = model::init_latents(8, 3, 4, 79);
  Tensor x = random_x(8, 3, 83);
  auto a = model::forecast(x, latents, params, 21);
  auto b = model::forecast(x, latents, params, 21);
  CHECK(a == b);
}

TEST_CASE("full-model gradient check across every parameter group") {
  // T=6, n=2, N=3, R=1, 2-block stacks, learned Gamma (the D variant).
  auto cfg = tiny_config(2, 3, model::Variant::kD);
  cfg.decoder_stack = {2, 2, 6};
  cfg.dynamic_stack = {2, 2, 6};
  auto params = model::init_params(cfg, 89);
  params.decoder.hidden_activation = diff::Activation::kTanh;
  params.dynamic.hidden_activation = diff::Activation::kTanh;
  model::LatentStates latents = model::init_latents(6, 2, 3, 97);
  Tensor x = random_x(6, 2, 101);

  model::LossConfig lc;
  lc.lambda = 0.5;
  lc.gamma = 0.01;
  auto loss_fn = [&]() { return model::model_loss(x, latents, params, lc).total; };

  std::vector<Tensor> groups{latents.states};
  for (auto& [name, tensor] : params.trainable()) groups.push_back(*tensor);
  const double err = diff::grad_check(loss_fn, groups, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("STNN special case ignores actm parameters bitwise") {
  auto cfg = tiny_config(2, 3);
  cfg.max_lag = 1;
  auto a = model::init_params(cfg, 103, /*actm_seed=*/111);
  auto b = model::init_params(cfg, 103, /*actm_seed=*/222);
  fill_relation(a, 0.5);
  fill_relation(b, 0.5);
  model::LatentStates latents = model::init_latents(6, 2, 3, 107);
  Tensor x = random_x(6, 2, 109);

  model::LossConfig lc;
  auto la = model::model_loss(x, latents, a, lc);
  auto lb = model::model_loss(x, latents, b, lc);
  CHECK(la.total.value() == lb.total.value());

  auto fa = model::forecast(x, latents, a, 5);
  auto fb = model::forecast(x, latents, b, 5);
  CHECK(fa == fb);
}

TEST_CASE("effective order trace: saturated actm yields all ones") {
  auto cfg = tiny_config(2, 3);
  auto params = model::init_params(cfg, 113);
  fill_relation(params, 0.3);
  saturate_actm(params);
  model::LatentStates latents = model::init_latents(6, 2, 3, 127);
  auto orders = model::effective_order_trace(latents, params);
  REQUIRE(orders.size() == 6);
  for (const auto& row : orders) {
    for (int o : row) CHECK(o == 1);
  }
}

TEST_CASE("effective order trace: first step is order 1") {
  auto cfg = tiny_config(2, 3);
  auto params = model::init_params(cfg, 131);
  fill_relation(params, 0.3);
  // mid-range halting level -> later steps walk further than one lag
  params.actm_params.layers.back().bias.mutable_data()[0] = -0.4;
  model::LatentStates latents = model::init_latents(6, 2, 3, 137);
  auto orders = model::effective_order_trace(latents, params);
  CHECK(orders[0][0] == 1);
  CHECK(orders[0][1] == 1);
  bool any_deeper = false;
  for (const auto& row : orders)
    for (int o : row) any_deeper |= o > 1;
  CHECK(any_deeper);
}

TEST_CASE("relation tensor from correlations") {
  // identical series -> off-diagonal 1; anticorrelated pair clamps to 0
  std::vector<std::vector<double>> series{
      {1, 2, 3, 4, 5}, {2, 4, 6, 8, 10}, {5, 4, 3, 2, 1}};
  auto w = model::build_relation_tensor(series, 0.0);
  REQUIRE(w.size() == 1);
  const auto d = w[0].data();
  CHECK(d[0 * 3 + 1] == doctest::Approx(1.0));
  CHECK(d[0 * 3 + 2] == 0.0);  // clamped negative
  CHECK(d[0 * 3 + 0] == 0.0);  // zero diagonal

  // constant series warns and zeroes
  std::vector<std::string> warnings;
  std::vector<std::vector<double>> with_const{{1, 2, 3, 4}, {7, 7, 7, 7}};
  auto w2 = model::build_relation_tensor(with_const, 0.0, &warnings);
  CHECK(warnings.size() == 1);
  for (double v : w2[0].data()) CHECK(v == 0.0);
}

TEST_CASE("relation tensor matches a covariance-based oracle") {
  Rng rng(139);
  const std::size_t n = 5, T = 40;
  std::vector<std::vector<double>> series(n, std::vector<double>(T));
  for (auto& s : series)
    for (auto& v : s) v = rng.normal(0, 1.0) + 0.3 * rng.uniform();
  auto w = model::build_relation_tensor(series, 0.0);

  // independent oracle: explicit covariance normalization
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double mi = 0, mj = 0;
      for (std::size_t t = 0; t < T; ++t) {
        mi += series[i][t];
        mj += series[j][t];
      }
      mi /= T;
      mj /= T;
      double cov = 0, vi = 0, vj = 0;
      for (std::size_t t = 0; t < T; ++t) {
        cov += (series[i][t] - mi) * (series[j][t] - mj);
        vi += (series[i][t] - mi) * (series[i][t] - mi);
        vj += (series[j][t] - mj) * (series[j][t] - mj);
      }
      const double expected = std::max(0.0, cov / std::sqrt(vi * vj));
      CHECK(w[0].data()[i * n + j] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}
