#pragma once

#include <string>

#include "stann/model.hpp"
#include "stann/scaler.hpp"

namespace stann::model {

// Trained model state: everything needed to forecast and to resume
// evaluation. Serialized as a line-oriented text file -- a `STANN v1`
// header, a key/value manifest, then named parameter blocks with shapes
// and row-major values at full round-trip precision.
struct Checkpoint {
  ModelParams params;
  LatentStates latents;
  train::IqrScaler scaler;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace stann::model
