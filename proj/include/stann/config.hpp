#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "stann/errors.hpp"
#include "stann/train.hpp"

namespace stann::cli {

// Resolved run configuration: a flat string map with typed access. Values
// come from a `key = value` config file overridden by CLI flags; unknown
// keys are rejected up front so typos fail loudly.
class RunConfig {
 public:
  static const std::map<std::string, std::string>& known_keys();  // key -> default ("" = unset)

  static RunConfig from_file(const std::string& path);
  static RunConfig from_map(const std::map<std::string, std::string>& kv);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string str(const std::string& key) const;
  double num(const std::string& key) const;
  std::size_t index(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return kv_; }

  // Training-related keys collapsed into the train module's config; the
  // `stnn` variant resolves to the single-lag special case.
  train::TrainConfig train_config() const;

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace stann::cli
