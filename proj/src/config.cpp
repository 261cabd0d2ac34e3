#include "cgmcr/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cgmcr/errors.hpp"

namespace cgmcr {

namespace {

using train::TrainConfig;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct Entry {
  std::string value;
  std::size_t line = 0;
};

class Reader {
 public:
  Reader(std::map<std::string, Entry> entries, std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  [[noreturn]] void bad(const std::string& key, const std::string& what) const {
    const auto& e = entries_.at(key);
    throw ConfigError(source_ + ":" + std::to_string(e.line) + ": " + key + ": " + what + " (got '" + e.value + "')");
  }

  double real(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = entries_.at(key).value;
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) bad(key, "expected a number");
    return out;
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = entries_.at(key).value;
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad(key, "expected a non-negative integer");
    return out;
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = entries_.at(key).value;
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad(key, "expected true or false");
  }

  template <class E>
  E choice(const std::string& key, E fallback, std::initializer_list<std::pair<const char*, E>> options) const {
    if (!has(key)) return fallback;
    const std::string& v = entries_.at(key).value;
    for (const auto& [name, e] : options) {
      if (v == name) return e;
    }
    std::string names;
    for (const auto& [name, e] : options) names += (names.empty() ? "" : ", ") + std::string(name);
    bad(key, "expected one of " + names);
  }

 private:
  std::map<std::string, Entry> entries_;
  std::string source_;
};

}  // namespace

const std::vector<std::string>& train_config_keys() {
  static const std::vector<std::string> keys = {
      "lr",       "wd",        "d",    "T1",   "T2",         "batch_size",        "gamma",
      "eps",      "s",         "affinity", "sigma", "self_loops", "tau",          "seed",
      "eval_every", "k",       "hidden", "head_depth", "weight_decay_mode", "nmi_norm", "spectral_max_points"};
  return keys;
}

train::TrainConfig parse_train_config(std::istream& in, const std::string& source) {
  const auto& keys = train_config_keys();
  std::map<std::string, Entry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(trim(text.substr(0, eq)));
    const std::string value(trim(text.substr(eq + 1)));
    if (key == "n") key = "batch_size";
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (value.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty value for " + key);
    if (entries.count(key)) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    entries.emplace(key, Entry{value, line_no});
  }
  if (!entries.count("k")) throw ConfigError(source + ": missing required key 'k'");

  const Reader r(std::move(entries), source);
  TrainConfig c;
  c.lr = r.real("lr", c.lr);
  c.wd = r.real("wd", c.wd);
  c.d = r.count("d", c.d);
  c.warmup_epochs = r.count("T1", c.warmup_epochs);
  c.finetune_epochs = r.count("T2", c.finetune_epochs);
  c.batch_size = r.count("batch_size", c.batch_size);
  c.gamma = r.real("gamma", c.gamma);
  c.eps = r.real("eps", c.eps);
  c.s = r.count("s", c.s);
  c.affinity = r.choice("affinity", c.affinity,
                        {{"cosine", graph::AffinityMode::cosine}, {"gaussian", graph::AffinityMode::gaussian}});
  if (r.has("sigma")) c.sigma = r.real("sigma", 0.0);
  c.self_loops = r.flag("self_loops", c.self_loops);
  c.tau = r.real("tau", c.tau);
  c.seed = r.count("seed", c.seed);
  c.eval_every = r.count("eval_every", c.eval_every);
  c.k = r.count("k", 0);
  c.hidden = r.count("hidden", c.hidden);
  c.head_depth = r.count("head_depth", c.head_depth);
  c.decay_mode = r.choice("weight_decay_mode", c.decay_mode,
                          {{"decoupled", optim::WeightDecayMode::decoupled}, {"l2", optim::WeightDecayMode::l2}});
  c.nmi_norm = r.choice("nmi_norm", c.nmi_norm,
                        {{"sqrt", metrics::NmiNormalization::geometric},
                         {"arithmetic", metrics::NmiNormalization::arithmetic},
                         {"min", metrics::NmiNormalization::min},
                         {"max", metrics::NmiNormalization::max}});
  c.spectral_max_points = r.count("spectral_max_points", c.spectral_max_points);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

train::TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_train_config(in, path.string());
}

std::string format_train_config(const train::TrainConfig& c) {
  const auto real = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "lr = " << real(c.lr) << '\n'
      << "wd = " << real(c.wd) << '\n'
      << "d = " << c.d << '\n'
      << "T1 = " << c.warmup_epochs << '\n'
      << "T2 = " << c.finetune_epochs << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "gamma = " << real(c.gamma) << '\n'
      << "eps = " << real(c.eps) << '\n'
      << "s = " << c.s << '\n'
      << "affinity = " << (c.affinity == graph::AffinityMode::cosine ? "cosine" : "gaussian") << '\n';
  if (c.sigma) out << "sigma = " << real(*c.sigma) << '\n';
  out << "self_loops = " << (c.self_loops ? "true" : "false") << '\n'
      << "tau = " << real(c.tau) << '\n'
      << "seed = " << c.seed << '\n'
      << "eval_every = " << c.eval_every << '\n'
      << "k = " << c.k << '\n'
      << "hidden = " << c.hidden << '\n'
      << "head_depth = " << c.head_depth << '\n'
      << "weight_decay_mode = " << (c.decay_mode == optim::WeightDecayMode::decoupled ? "decoupled" : "l2") << '\n';
  const char* norm = "sqrt";
  switch (c.nmi_norm) {
    case metrics::NmiNormalization::geometric: norm = "sqrt"; break;
    case metrics::NmiNormalization::arithmetic: norm = "arithmetic"; break;
    case metrics::NmiNormalization::min: norm = "min"; break;
    case metrics::NmiNormalization::max: norm = "max"; break;
  }
  out << "nmi_norm = " << norm << '\n' << "spectral_max_points = " << c.spectral_max_points << '\n';
  return out.str();
}

}  // namespace cgmcr
