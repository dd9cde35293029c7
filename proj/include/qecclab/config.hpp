#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qecclab/report.hpp"
#include "qecclab/trainer.hpp"

namespace qecclab {

/// Sectioned key=value configuration text: `[section]` lines open a section,
/// `key=value` lines assign, `#` starts a comment. Every key a run consumes
/// is tracked so unknown keys are rejected.
class ConfigText {
 public:
  static ConfigText parse(const std::string& text) {
    ConfigText cfg;
    cfg.raw_ = text;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      std::string s = strip(line);
      if (s.empty() || s[0] == '#') continue;
      if (s.front() == '[' && s.back() == ']') {
        section = strip(s.substr(1, s.size() - 2));
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": expected key=value");
      cfg.entries_.push_back({section, strip(s.substr(0, eq)), strip(s.substr(eq + 1))});
    }
    return cfg;
  }

  static ConfigText load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
  }

  const std::string& raw() const { return raw_; }

  std::string get(const std::string& section, const std::string& key, const std::string& fallback) {
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].section == section && entries_[i].key == key) {
        consumed_.insert(i);
        return entries_[i].value;
      }
    return fallback;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) {
    std::string v = get(section, key, "");
    return v.empty() ? fallback : std::stod(v);
  }

  long get_int(const std::string& section, const std::string& key, long fallback) {
    std::string v = get(section, key, "");
    return v.empty() ? fallback : std::stol(v);
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) {
    std::string v = get(section, key, "");
    return v.empty() ? fallback : std::stoull(v);
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) {
    std::string v = get(section, key, "");
    if (v.empty()) return fallback;
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw std::invalid_argument("config: bad boolean for " + section + "." + key + ": " + v);
  }

  /// Call after extraction: any key never consumed is unknown.
  void reject_unknown_keys() const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (!consumed_.contains(i))
        throw std::invalid_argument("config: unknown key [" + entries_[i].section + "] " +
                                    entries_[i].key);
  }

 private:
  struct Entry {
    std::string section, key, value;
  };

  static std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  std::string raw_;
  std::vector<Entry> entries_;
  std::set<std::size_t> consumed_;
};

/// Full training configuration from a config file; every field has a default
/// documented by the fallback arguments here.
inline TrainConfig parse_train_config(ConfigText& cfg) {
  TrainConfig tc;
  std::string family = cfg.get("code", "family", "toric");
  tc.code.family = detail::parse_family(family);
  tc.code.L = static_cast<int>(cfg.get_int("code", "L", 4));
  tc.code.sector = detail::parse_sector(cfg.get("code", "sector", "joint"));

  tc.channel.type = parse_channel(cfg.get("channel", "type", "independent"));
  tc.p_min = cfg.get_double("channel", "p_min", tc.channel.type == NoiseChannel::independent ? 0.05 : 0.10);
  tc.p_max = cfg.get_double("channel", "p_max", tc.channel.type == NoiseChannel::independent ? 0.15 : 0.20);
  tc.channel.q = cfg.get_double("channel", "q", 0.0);
  tc.channel.T = static_cast<int>(cfg.get_int("channel", "T", 1));

  std::string kind = cfg.get("model", "kind", "qecct");
  if (kind == "qecct")
    tc.kind = ModelKind::qecct;
  else if (kind == "mlp")
    tc.kind = ModelKind::mlp;
  else
    throw std::invalid_argument("config: unknown model kind " + kind);
  tc.qecct.layers = static_cast<int>(cfg.get_int("model", "layers", 6));
  tc.qecct.dim = static_cast<int>(cfg.get_int("model", "dim", 128));
  tc.qecct.heads = static_cast<int>(cfg.get_int("model", "heads", 8));
  tc.qecct.pooling_layer = static_cast<int>(cfg.get_int("model", "pooling_layer", 0));
  tc.qecct.ffn_mult = static_cast<int>(cfg.get_int("model", "ffn_mult", 4));
  tc.qecct.lambda_ber = cfg.get_double("model", "lambda_ber", 0.5);
  tc.qecct.lambda_ler = cfg.get_double("model", "lambda_ler", 1.0);
  tc.qecct.lambda_g = cfg.get_double("model", "lambda_g", 0.5);
  std::string bin = cfg.get("model", "bin", "sigmoid");
  if (bin == "sigmoid")
    tc.qecct.bin_mode = BinMode::sigmoid;
  else if (bin == "ste")
    tc.qecct.bin_mode = BinMode::ste;
  else
    throw std::invalid_argument("config: unknown bin mode " + bin);
  tc.qecct.use_g_omega = cfg.get_bool("model", "use_g_omega", true);
  tc.qecct.use_mask = cfg.get_bool("model", "use_mask", true);
  tc.mlp.depth = static_cast<int>(cfg.get_int("model", "depth", 10));
  tc.mlp.width = static_cast<int>(cfg.get_int("model", "width", 256));
  tc.mlp.lambda_ber = tc.qecct.lambda_ber;
  tc.mlp.lambda_ler = tc.qecct.lambda_ler;
  tc.mlp.lambda_g = tc.qecct.lambda_g;
  tc.mlp.bin_mode = tc.qecct.bin_mode;
  tc.mlp.use_g_omega = tc.qecct.use_g_omega;

  tc.batch = static_cast<int>(cfg.get_int("train", "batch", 512));
  tc.steps_per_epoch = static_cast<int>(cfg.get_int("train", "steps_per_epoch", 5000));
  tc.epochs = static_cast<int>(cfg.get_int("train", "epochs", 1));
  tc.seed = cfg.get_u64("train", "seed", 1);
  tc.lr0 = cfg.get_double("train", "lr0", 5e-4);
  tc.lr_min = cfg.get_double("train", "lr_min", 5e-7);
  tc.log_every = static_cast<int>(cfg.get_int("train", "log_every", 50));

  cfg.reject_unknown_keys();
  tc.validate();
  tc.qecct.validate();
  tc.mlp.validate();
  return tc;
}

/// Serialized view of a resolved TrainConfig, echoed into run manifests.
inline std::string train_config_text(const TrainConfig& tc) {
  std::ostringstream os;
  os << "[code]\n";
  os << "family=" << family_name(tc.code.family) << "\n";
  os << "L=" << tc.code.L << "\n";
  os << "sector=" << sector_name(tc.code.sector) << "\n";
  os << "[channel]\n";
  os << "type=" << channel_name(tc.channel.type) << "\n";
  os << "p_min=" << format_double(tc.p_min) << "\n";
  os << "p_max=" << format_double(tc.p_max) << "\n";
  os << "q=" << format_double(tc.channel.q) << "\n";
  os << "T=" << tc.channel.T << "\n";
  os << "[model]\n";
  os << "kind=" << (tc.kind == ModelKind::qecct ? "qecct" : "mlp") << "\n";
  os << "layers=" << tc.qecct.layers << "\n";
  os << "dim=" << tc.qecct.dim << "\n";
  os << "heads=" << tc.qecct.heads << "\n";
  os << "pooling_layer=" << tc.qecct.pooling_layer << "\n";
  os << "ffn_mult=" << tc.qecct.ffn_mult << "\n";
  os << "lambda_ber=" << format_double(tc.qecct.lambda_ber) << "\n";
  os << "lambda_ler=" << format_double(tc.qecct.lambda_ler) << "\n";
  os << "lambda_g=" << format_double(tc.qecct.lambda_g) << "\n";
  os << "bin=" << bin_mode_name(tc.qecct.bin_mode) << "\n";
  os << "use_g_omega=" << (tc.qecct.use_g_omega ? 1 : 0) << "\n";
  os << "use_mask=" << (tc.qecct.use_mask ? 1 : 0) << "\n";
  os << "depth=" << tc.mlp.depth << "\n";
  os << "width=" << tc.mlp.width << "\n";
  os << "[train]\n";
  os << "batch=" << tc.batch << "\n";
  os << "steps_per_epoch=" << tc.steps_per_epoch << "\n";
  os << "epochs=" << tc.epochs << "\n";
  os << "seed=" << tc.seed << "\n";
  os << "lr0=" << format_double(tc.lr0) << "\n";
  os << "lr_min=" << format_double(tc.lr_min) << "\n";
  os << "log_every=" << tc.log_every << "\n";
  return os.str();
}

}  // namespace qecclab
