#include "stann/stack.hpp"

#include <cmath>

namespace stann::model {

using diff::Tensor;

Tensor Linear::apply(const Tensor& x) const {
  Tensor y = diff::matmul(x, weight);
  const std::size_t rows = y.shape()[0];
  return diff::add(y, rows == 1 ? bias : diff::repeat_rows(bias, rows));
}

Linear make_linear(std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> w(in * out);
  for (auto& v : w) v = rng.uniform(-limit, limit);
  return {Tensor::from_data({in, out}, std::move(w), true), Tensor::zeros({1, out}, true)};
}

std::size_t ResidualStack::input_dim() const {
  return blocks.front().backcast.weight.shape()[1];
}

std::size_t ResidualStack::output_dim() const {
  return blocks.front().forecast.weight.shape()[1];
}

Tensor ResidualStack::apply(const Tensor& x) const {
  if (blocks.empty()) throw std::invalid_argument("residual stack has no blocks");
  Tensor residual = x;
  Tensor out;
  for (const auto& block : blocks) {
    Tensor h = residual;
    for (const auto& layer : block.layers) {
      h = diff::activation(hidden_activation, layer.apply(h));
    }
    residual = diff::sub(residual, block.backcast.apply(h));
    Tensor f = block.forecast.apply(h);
    out = out.defined() ? diff::add(out, f) : f;
  }
  return out;
}

std::vector<Tensor*> ResidualStack::trainable() {
  std::vector<Tensor*> out;
  for (auto& block : blocks) {
    for (auto& layer : block.layers) {
      out.push_back(&layer.weight);
      out.push_back(&layer.bias);
    }
    out.push_back(&block.backcast.weight);
    out.push_back(&block.backcast.bias);
    out.push_back(&block.forecast.weight);
    out.push_back(&block.forecast.bias);
  }
  return out;
}

ResidualStack make_stack(std::size_t in, std::size_t out, const StackConfig& cfg, Rng& rng) {
  if (cfg.blocks == 0) throw std::invalid_argument("stack needs at least one block");
  ResidualStack stack;
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    ResidualStack::Block block;
    std::size_t width = in;
    for (std::size_t l = 0; l < cfg.layers_per_block; ++l) {
      block.layers.push_back(make_linear(width, cfg.hidden_width, rng));
      width = cfg.hidden_width;
    }
    block.backcast = make_linear(width, in, rng);
    block.forecast = make_linear(width, out, rng);
    stack.blocks.push_back(std::move(block));
  }
  return stack;
}

}  // namespace stann::model
