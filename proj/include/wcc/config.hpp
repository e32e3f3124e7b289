#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "wcc/error.hpp"
#include "wcc/generator.hpp"
#include "wcc/model.hpp"
#include "wcc/sampler.hpp"
#include "wcc/text.hpp"
#include "wcc/trainer.hpp"

namespace wcc {

// Everything a run needs: training hyper-parameters, noise selection, paths.
struct RunConfig {
  TrainConfig train;
  std::string noise = "pow-unigram:0.75";
  std::string corpus;
  std::string vocab;
  std::string output = "wcc-out";
  std::string similarity;
  std::string analogy;

  bool operator==(const RunConfig&) const = default;

  bool adaptive() const { return !FixedNoiseSpec::is_fixed(noise); }
};

namespace detail {

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("config key '" + std::string(key) + "': bad value '" + std::string(text) + "'");
  }
  return value;
}

template <class T>
std::string format_number(T v) {
  if constexpr (std::is_floating_point_v<T>) {
    std::string out;
    append_double(out, v);
    return out;
  } else {
    return std::to_string(v);
  }
}

struct Field {
  std::string_view key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field number_field(std::string_view key, T TrainConfig::*member) {
  return {key, [key, member](RunConfig& c, std::string_view v) { c.train.*member = parse_number<T>(key, v); },
          [member](const RunConfig& c) { return format_number(c.train.*member); }};
}

inline Field string_field(std::string_view key, std::string RunConfig::*member) {
  return {key, [member](RunConfig& c, std::string_view v) { c.*member = std::string(v); },
          [member](const RunConfig& c) { return c.*member; }};
}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      string_field("corpus", &RunConfig::corpus),
      string_field("vocab", &RunConfig::vocab),
      string_field("output", &RunConfig::output),
      string_field("similarity", &RunConfig::similarity),
      string_field("analogy", &RunConfig::analogy),
      string_field("noise", &RunConfig::noise),
      number_field("dim", &TrainConfig::dim),
      number_field("window", &TrainConfig::window),
      number_field("min_count", &TrainConfig::min_count),
      number_field("subsample_t", &TrainConfig::subsample_t),
      number_field("lr_classifier", &TrainConfig::lr_classifier),
      number_field("lr_sampler", &TrainConfig::lr_sampler),
      number_field("batch_size", &TrainConfig::batch_size),
      number_field("epochs", &TrainConfig::epochs),
      number_field("k", &TrainConfig::k),
      number_field("n_critic", &TrainConfig::n_critic),
      number_field("alpha", &TrainConfig::alpha),
      number_field("latent_dim", &TrainConfig::latent_dim),
      number_field("hidden_dim", &TrainConfig::hidden_dim),
      number_field("seed", &TrainConfig::seed),
      {"mode",
       [](RunConfig& c, std::string_view v) {
         if (v == "deterministic") {
           c.train.mode = TrainMode::Deterministic;
         } else if (v == "performance") {
           c.train.mode = TrainMode::Performance;
         } else {
           throw ConfigError("config key 'mode': expected deterministic or performance, got '" + std::string(v) + "'");
         }
       },
       [](const RunConfig& c) {
         return std::string(c.train.mode == TrainMode::Deterministic ? "deterministic" : "performance");
       }},
      number_field("threads", &TrainConfig::threads),
      number_field("eval_every", &TrainConfig::eval_every),
  };
  return table;
}

}  // namespace detail

inline std::vector<std::string_view> config_keys() {
  std::vector<std::string_view> keys;
  for (const auto& f : detail::fields()) keys.push_back(f.key);
  return keys;
}

inline bool is_config_key(std::string_view key) {
  for (const auto& f : detail::fields()) {
    if (f.key == key) return true;
  }
  return false;
}

inline void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& f : detail::fields()) {
    if (f.key == key) {
      f.set(cfg, detail::trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

inline std::string get_config_value(const RunConfig& cfg, std::string_view key) {
  for (const auto& f : detail::fields()) {
    if (f.key == key) return f.get(cfg);
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

// "key = value" lines; '#' starts a comment; blank lines ignored. Unset keys
// keep their defaults; a key may appear at most once.
inline RunConfig parse_config(std::istream& in, const std::string& source = "<config>") {
  RunConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text(line);
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, lineno, "expected 'key = value'");
    const auto key = detail::trim(text.substr(0, eq));
    if (!seen.insert(std::string(key)).second) {
      throw ParseError(source, lineno, "duplicate config key '" + std::string(key) + "'");
    }
    try {
      set_config_value(cfg, key, text.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return cfg;
}

// Every key, one per line, in a fixed order; parse_config inverts it exactly.
inline std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : detail::fields()) {
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

// Applies "--key value" pairs on top of `cfg`.
inline void apply_overrides(RunConfig& cfg, const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string_view flag = args[i];
    if (!flag.starts_with("--")) throw ConfigError("expected --key, got '" + args[i] + "'");
    flag.remove_prefix(2);
    std::string key(flag);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      if (i + 1 >= args.size()) throw ConfigError("config key '" + key + "' is missing a value");
      value = args[++i];
    }
    set_config_value(cfg, key, value);
  }
}

inline void validate_noise(std::string_view noise) {
  try {
    if (FixedNoiseSpec::is_fixed(noise)) {
      FixedNoiseSpec::parse(noise);
    } else {
      parse_topology(noise);
    }
  } catch (const Error& e) {
    throw ConfigError(std::string("config key 'noise': ") + e.what());
  }
}

inline void require_file(std::string_view key, const std::string& path) {
  if (path.empty()) throw ConfigError("config key '" + std::string(key) + "' is required");
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError("config key '" + std::string(key) + "': no such file '" + path + "'");
  }
}

// Checks hyper-parameters and noise; read inputs must exist.
inline void validate_for_training(const RunConfig& cfg) {
  cfg.train.validate();
  validate_noise(cfg.noise);
  require_file("corpus", cfg.corpus);
  if (!cfg.vocab.empty()) require_file("vocab", cfg.vocab);
  if (cfg.output.empty()) throw ConfigError("config key 'output' is required");
}

}  // namespace wcc
