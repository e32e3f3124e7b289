#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wcc/corpus.hpp"
#include "wcc/error.hpp"
#include "wcc/random.hpp"

namespace wcc {

// Fixed context-noise distribution Q_Y; the center marginal is always the
// data marginal.
struct FixedNoiseSpec {
  enum class Kind { Uniform, Unigram, PowUnigram };

  Kind kind = Kind::PowUnigram;
  double exponent = 0.75;

  static FixedNoiseSpec uniform() { return {Kind::Uniform, 1.0}; }
  static FixedNoiseSpec unigram() { return {Kind::Unigram, 1.0}; }
  static FixedNoiseSpec pow_unigram(double e) {
    if (!(e > 0.0 && e <= 1.0)) throw ConfigError("pow-unigram exponent must be in (0, 1]");
    return {Kind::PowUnigram, e};
  }

  // "uniform" | "unigram" | "pow-unigram:<e>"
  static FixedNoiseSpec parse(std::string_view text) {
    if (text == "uniform") return uniform();
    if (text == "unigram") return unigram();
    constexpr std::string_view prefix = "pow-unigram:";
    if (text.starts_with(prefix)) {
      const std::string num(text.substr(prefix.size()));
      double e = 0.0;
      try {
        std::size_t used = 0;
        e = std::stod(num, &used);
        if (used != num.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError("bad pow-unigram exponent '" + num + "'");
      }
      return pow_unigram(e);
    }
    throw ConfigError("unknown fixed noise '" + std::string(text) + "'");
  }

  static bool is_fixed(std::string_view text) {
    return text == "uniform" || text == "unigram" || text.starts_with("pow-unigram:");
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::Uniform: return "uniform";
      case Kind::Unigram: return "unigram";
      case Kind::PowUnigram: {
        std::string s = std::to_string(exponent);
        while (s.size() > 1 && s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
        return "pow-unigram:" + s;
      }
    }
    return {};
  }
};

inline double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

// Categorical distribution with O(1) draws by Vose's alias method.
class CategoricalSampler {
 public:
  CategoricalSampler() = default;

  explicit CategoricalSampler(std::vector<double> weights) {
    if (weights.empty()) throw Error("categorical sampler needs at least one outcome");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw Error("categorical weights must be finite and >= 0");
      total += w;
    }
    if (!(total > 0.0)) throw Error("categorical weights sum to zero");
    probs_ = std::move(weights);
    for (double& p : probs_) p /= total;
    build_tables();
  }

  std::size_t size() const { return probs_.size(); }
  std::span<const double> probs() const { return probs_; }
  std::span<const double> accept() const { return accept_; }
  std::span<const std::uint32_t> alias() const { return alias_; }

  WordId draw(Rng& rng) const {
    const auto column = static_cast<std::size_t>(rng.below(probs_.size()));
    return static_cast<WordId>(rng.uniform() < accept_[column] ? column : alias_[column]);
  }

  // Probability mass implied by the alias tables; equals probs() up to rounding.
  std::vector<double> reconstructed() const {
    const std::size_t n = probs_.size();
    std::vector<double> mass(accept_.begin(), accept_.end());
    for (std::size_t j = 0; j < n; ++j) mass[alias_[j]] += 1.0 - accept_[j];
    for (double& m : mass) m /= static_cast<double>(n);
    return mass;
  }

 private:
  void build_tables() {
    const std::size_t n = probs_.size();
    accept_.assign(n, 1.0);
    alias_.resize(n);
    std::iota(alias_.begin(), alias_.end(), 0u);
    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small;
    std::vector<std::uint32_t> large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = probs_[i] * static_cast<double>(n);
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const auto less = small.back();
      small.pop_back();
      const auto more = large.back();
      accept_[less] = scaled[less];
      alias_[less] = more;
      scaled[more] = (scaled[more] + scaled[less]) - 1.0;
      if (scaled[more] < 1.0) {
        large.pop_back();
        small.push_back(more);
      }
    }
    // Leftovers differ from 1 only by rounding.
    for (auto i : small) accept_[i] = 1.0;
    for (auto i : large) accept_[i] = 1.0;
  }

  std::vector<double> probs_;
  std::vector<double> accept_;
  std::vector<std::uint32_t> alias_;
};

inline std::vector<double> fixed_noise_weights(std::span<const std::uint64_t> freq, const FixedNoiseSpec& spec) {
  std::vector<double> w(freq.size());
  for (std::size_t i = 0; i < freq.size(); ++i) {
    const double f = static_cast<double>(freq[i]);
    switch (spec.kind) {
      case FixedNoiseSpec::Kind::Uniform: w[i] = 1.0; break;
      case FixedNoiseSpec::Kind::Unigram: w[i] = f; break;
      case FixedNoiseSpec::Kind::PowUnigram: w[i] = std::pow(f, spec.exponent); break;
    }
  }
  return w;
}

inline CategoricalSampler build_fixed_sampler(const Vocabulary& vocab, const FixedNoiseSpec& spec) {
  if (vocab.empty()) throw Error("cannot build a sampler over an empty vocabulary");
  return CategoricalSampler(fixed_noise_weights(vocab.frequencies(), spec));
}

inline WordId draw_context(const CategoricalSampler& sampler, Rng& rng) { return sampler.draw(rng); }

}  // namespace wcc
