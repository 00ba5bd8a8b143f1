#include "stann/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace stann::model {

namespace {

constexpr const char* kHeader = "STANN v1";

void write_tensor(std::ostream& os, const std::string& name, const diff::Tensor& t) {
  os << "param " << name << ' ' << t.shape().size();
  for (std::size_t d : t.shape()) os << ' ' << d;
  os << '\n';
  char buf[40];
  for (double v : t.data()) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf << '\n';
  }
}

struct Reader {
  std::ifstream in;
  std::string line;
  std::size_t lineno = 0;

  explicit Reader(const std::string& path) : in(path) {
    if (!in) throw DataError("cannot open checkpoint: " + path);
  }
  bool next() {
    ++lineno;
    return static_cast<bool>(std::getline(in, line));
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError("checkpoint line " + std::to_string(lineno) + ": " + msg);
  }
};

diff::Tensor read_tensor(Reader& r, std::istringstream& header, bool requires_grad) {
  std::size_t rank = 0;
  if (!(header >> rank)) r.fail("bad param header");
  std::vector<std::size_t> shape(rank);
  std::size_t count = 1;
  for (auto& d : shape) {
    if (!(header >> d)) r.fail("bad param shape");
    count *= d;
  }
  std::vector<double> data(count);
  for (auto& v : data) {
    if (!r.next()) r.fail("unexpected end of file in param block");
    char* end = nullptr;
    v = std::strtod(r.line.c_str(), &end);
    if (end == r.line.c_str()) r.fail("bad value: " + r.line);
  }
  return diff::Tensor::from_data(std::move(shape), std::move(data), requires_grad);
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write checkpoint: " + path);
  const auto& cfg = ckpt.params.cfg;
  os << kHeader << '\n';
  os << "variant " << to_string(cfg.variant) << '\n';
  os << "T " << ckpt.latents.time_steps() << '\n';
  os << "n " << cfg.n << '\n';
  os << "N " << cfg.latent_dim << '\n';
  os << "R " << cfg.relations << '\n';
  os << "m " << cfg.feature_dim << '\n';
  os << "max_lag " << cfg.max_lag << '\n';
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.kappa);
  os << "kappa " << buf << '\n';
  os << "h_g " << diff::to_string(cfg.h_g) << '\n';
  os << "h_d " << diff::to_string(cfg.h_d) << '\n';
  os << "hidden_activation " << diff::to_string(ckpt.params.decoder.hidden_activation) << '\n';
  os << "decoder_stack " << cfg.decoder_stack.blocks << ' ' << cfg.decoder_stack.layers_per_block
     << ' ' << cfg.decoder_stack.hidden_width << '\n';
  os << "dynamic_stack " << cfg.dynamic_stack.blocks << ' ' << cfg.dynamic_stack.layers_per_block
     << ' ' << cfg.dynamic_stack.hidden_width << '\n';
  os << "end_manifest\n";

  write_tensor(os, "Z", ckpt.latents.states);
  ModelParams& params = const_cast<ModelParams&>(ckpt.params);
  for (auto& [name, tensor] : params.trainable()) write_tensor(os, name, *tensor);
  for (std::size_t r = 0; r < ckpt.params.spatial.relation_w.size(); ++r) {
    write_tensor(os, "relation_w" + std::to_string(r), ckpt.params.spatial.relation_w[r]);
  }
  write_tensor(os, "scaler.median",
               diff::Tensor::from_data({ckpt.scaler.median.size()}, ckpt.scaler.median, false));
  write_tensor(os, "scaler.iqr",
               diff::Tensor::from_data({ckpt.scaler.iqr.size()}, ckpt.scaler.iqr, false));
  if (!os) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  if (!r.next() || r.line != kHeader) r.fail("bad header; expected " + std::string(kHeader));

  std::map<std::string, std::string> manifest;
  while (r.next()) {
    if (r.line == "end_manifest") break;
    auto sp = r.line.find(' ');
    if (sp == std::string::npos) r.fail("bad manifest line: " + r.line);
    manifest[r.line.substr(0, sp)] = r.line.substr(sp + 1);
  }
  auto need = [&](const std::string& key) {
    auto it = manifest.find(key);
    if (it == manifest.end()) r.fail("manifest missing key: " + key);
    return it->second;
  };
  auto parse_stack = [&](const std::string& key) {
    std::istringstream ss(need(key));
    StackConfig sc;
    if (!(ss >> sc.blocks >> sc.layers_per_block >> sc.hidden_width)) {
      r.fail("bad stack config for " + key);
    }
    return sc;
  };

  ModelConfig cfg;
  cfg.variant = variant_from_string(need("variant"));
  const std::size_t T = std::stoull(need("T"));
  cfg.n = std::stoull(need("n"));
  cfg.latent_dim = std::stoull(need("N"));
  cfg.relations = std::stoull(need("R"));
  cfg.feature_dim = std::stoull(need("m"));
  cfg.max_lag = std::stoull(need("max_lag"));
  cfg.kappa = std::stod(need("kappa"));
  cfg.h_g = diff::activation_from_string(need("h_g"));
  cfg.h_d = diff::activation_from_string(need("h_d"));
  cfg.decoder_stack = parse_stack("decoder_stack");
  cfg.dynamic_stack = parse_stack("dynamic_stack");

  Checkpoint ckpt;
  ckpt.params = init_params(cfg, /*seed=*/1);
  ckpt.params.decoder.hidden_activation =
      diff::activation_from_string(need("hidden_activation"));
  ckpt.params.dynamic.hidden_activation = ckpt.params.decoder.hidden_activation;
  ckpt.latents = init_latents(T, cfg.n, cfg.latent_dim, /*seed=*/1);

  std::map<std::string, diff::Tensor*> slots;
  slots["Z"] = &ckpt.latents.states;
  for (auto& [name, tensor] : ckpt.params.trainable()) slots[name] = tensor;
  for (std::size_t rr = 0; rr < ckpt.params.spatial.relation_w.size(); ++rr) {
    slots["relation_w" + std::to_string(rr)] = &ckpt.params.spatial.relation_w[rr];
  }

  diff::Tensor scaler_median, scaler_iqr;
  while (r.next()) {
    if (r.line.empty()) continue;
    std::istringstream ss(r.line);
    std::string tag, name;
    if (!(ss >> tag >> name) || tag != "param") r.fail("expected param block: " + r.line);
    if (name == "scaler.median") {
      scaler_median = read_tensor(r, ss, false);
    } else if (name == "scaler.iqr") {
      scaler_iqr = read_tensor(r, ss, false);
    } else {
      auto it = slots.find(name);
      if (it == slots.end()) r.fail("unknown param block: " + name);
      const bool rg = it->second->requires_grad();
      diff::Tensor loaded = read_tensor(r, ss, rg);
      if (loaded.shape() != it->second->shape()) r.fail("shape mismatch for " + name);
      *it->second = std::move(loaded);
      slots.erase(it);
    }
  }
  if (!slots.empty()) r.fail("checkpoint missing param block: " + slots.begin()->first);
  if (!scaler_median.defined() || !scaler_iqr.defined()) r.fail("checkpoint missing scaler");
  ckpt.scaler.median.assign(scaler_median.data().begin(), scaler_median.data().end());
  ckpt.scaler.iqr.assign(scaler_iqr.data().begin(), scaler_iqr.data().end());
  return ckpt;
}

}  // namespace stann::model
