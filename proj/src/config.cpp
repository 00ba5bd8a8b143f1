#include "stann/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace stann::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

const std::map<std::string, std::string>& RunConfig::known_keys() {
  static const std::map<std::string, std::string> keys = {
      // io
      {"data", ""},
      {"out", "."},
      {"checkpoint", ""},
      {"forecast_file", ""},
      {"rf", "0"},
      // synthetic data
      {"synth", ""},
      {"rows", "0"},
      {"series", "0"},
      // protocol
      {"variant", "stann"},
      {"model", "stann"},
      {"tau", "21"},
      {"seed", "42"},
      {"missing", "reject"},
      {"strategy", "simple"},
      {"annualization", "conventional"},
      {"origin", "0"},
      {"origins", "5"},
      {"initial_capital", "10000"},
      // training
      {"epochs", "200"},
      {"learning_rate", "0.02"},
      {"adam_beta1", "0.9"},
      {"adam_beta2", "0.999"},
      {"adam_epsilon", "1e-8"},
      {"scheduler_period", "100"},
      {"scheduler_period_mult", "1"},
      {"lr_min", "1e-4"},
      {"lambda", "0.1"},
      {"gamma", "0"},
      {"delta", "mse"},
      {"latent_dim", "8"},
      {"max_lag", "64"},
      {"kappa", "0.01"},
      {"decoder_blocks", "2"},
      {"decoder_layers", "2"},
      {"decoder_width", "32"},
      {"dynamic_blocks", "2"},
      {"dynamic_layers", "2"},
      {"dynamic_width", "32"},
      {"hidden_activation", "relu"},
      {"actm_bias_init", "0"},
      {"relation_threshold", "0"},
      {"use_actm", "true"},
      {"use_residual_stack", "true"},
      {"train_window", "504"},
      {"batch_size", "0"},
      {"actm_seed", ""},
      {"search_budget", "0"},
      {"ablate_seeds", "10"},
      {"eps", "1e-5"},
  };
  return keys;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    cfg.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::from_map(const std::map<std::string, std::string>& kv) {
  RunConfig cfg;
  for (const auto& [k, v] : kv) cfg.set(k, v);
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (known_keys().find(key) == known_keys().end()) {
    throw UsageError("unknown config key: " + key);
  }
  kv_[key] = value;
}

bool RunConfig::has(const std::string& key) const {
  auto it = kv_.find(key);
  return it != kv_.end() && !it->second.empty();
}

std::string RunConfig::str(const std::string& key) const {
  auto it = kv_.find(key);
  if (it != kv_.end()) return it->second;
  auto def = known_keys().find(key);
  if (def == known_keys().end()) throw UsageError("unknown config key: " + key);
  return def->second;
}

double RunConfig::num(const std::string& key) const {
  const std::string v = str(key);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw UsageError("config key " + key + ": expected a number, got '" + v + "'");
  }
  return x;
}

std::size_t RunConfig::index(const std::string& key) const {
  const double x = num(key);
  if (x < 0 || x != static_cast<double>(static_cast<std::size_t>(x))) {
    throw UsageError("config key " + key + ": expected a nonnegative integer");
  }
  return static_cast<std::size_t>(x);
}

std::uint64_t RunConfig::u64(const std::string& key) const {
  return static_cast<std::uint64_t>(index(key));
}

bool RunConfig::flag(const std::string& key) const {
  const std::string v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config key " + key + ": expected a boolean, got '" + v + "'");
}

train::TrainConfig RunConfig::train_config() const {
  train::TrainConfig tc;
  tc.epochs = index("epochs");
  tc.learning_rate = num("learning_rate");
  tc.adam_beta1 = num("adam_beta1");
  tc.adam_beta2 = num("adam_beta2");
  tc.adam_epsilon = num("adam_epsilon");
  tc.scheduler_period = index("scheduler_period");
  tc.scheduler_period_mult = num("scheduler_period_mult");
  tc.lr_min = num("lr_min");
  tc.lambda = num("lambda");
  tc.gamma = num("gamma");
  const std::string delta = str("delta");
  if (delta == "mse") {
    tc.delta = model::LossConfig::Delta::kMse;
  } else if (delta == "mae") {
    tc.delta = model::LossConfig::Delta::kMae;
  } else {
    throw UsageError("config key delta: expected mse or mae");
  }
  tc.latent_dim = index("latent_dim");
  tc.max_lag = index("max_lag");
  tc.kappa = num("kappa");
  const std::string variant = str("variant");
  tc.variant = model::variant_from_string(variant);
  tc.decoder_stack = {index("decoder_blocks"), index("decoder_layers"), index("decoder_width")};
  tc.dynamic_stack = {index("dynamic_blocks"), index("dynamic_layers"), index("dynamic_width")};
  tc.actm_bias_init = num("actm_bias_init");
  tc.relation_threshold = num("relation_threshold");
  tc.use_actm = flag("use_actm");
  if (variant == "stnn") tc.use_actm = false;  // the single-lag special case
  tc.use_residual_stack = flag("use_residual_stack");
  tc.train_window = index("train_window");
  tc.tau = index("tau");
  tc.batch_size = index("batch_size");
  tc.seed = u64("seed");
  if (has("actm_seed")) tc.actm_seed = u64("actm_seed");
  return tc;
}

}  // namespace stann::cli
