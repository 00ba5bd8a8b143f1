#pragma once

#include <cstddef>
#include <vector>

#include "stann/rng.hpp"
#include "stann/tensor.hpp"

namespace stann::model {

struct Linear {
  diff::Tensor weight;  // in x out
  diff::Tensor bias;    // 1 x out

  // y = x . W + b, bias tiled over rows.
  diff::Tensor apply(const diff::Tensor& x) const;
};

Linear make_linear(std::size_t in, std::size_t out, Rng& rng);

// Doubly residual stack: each block reads the running residual, produces a
// backcast (same width as its input, subtracted from the residual) and a
// forecast (shared output width, summed across blocks). Heads are plain
// linear maps; hidden layers default to relu. layers_per_block may be zero,
// in which case the heads read the block input directly -- that degenerate
// configuration is a single linear map, used when the stack is ablated.
struct ResidualStack {
  struct Block {
    std::vector<Linear> layers;
    Linear backcast;
    Linear forecast;
  };
  std::vector<Block> blocks;
  diff::Activation hidden_activation = diff::Activation::kRelu;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  diff::Tensor apply(const diff::Tensor& x) const;  // rows processed independently
  std::vector<diff::Tensor*> trainable();
};

struct StackConfig {
  std::size_t blocks = 2;
  std::size_t layers_per_block = 2;
  std::size_t hidden_width = 32;
};

ResidualStack make_stack(std::size_t in, std::size_t out, const StackConfig& cfg, Rng& rng);

}  // namespace stann::model
