#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wcc/error.hpp"
#include "wcc/random.hpp"

namespace wcc {

using WordId = std::int32_t;

// A (center word, context word) pair. Contexts share the word vocabulary.
struct Pair {
  WordId x = 0;
  WordId y = 0;

  friend auto operator<=>(const Pair&, const Pair&) = default;
};

// Lower-cases ASCII letters and maps every byte outside [a-z0-9] to a
// separator, then calls `emit` for each resulting token.
template <typename Emit>
void for_each_token(std::string_view text, Emit&& emit) {
  std::string token;
  for (const char raw : text) {
    char c = raw;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    const bool lexical = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    if (lexical) {
      token.push_back(c);
    } else if (!token.empty()) {
      emit(std::string_view(token));
      token.clear();
    }
  }
  if (!token.empty()) emit(std::string_view(token));
}

// Streams a text file chunk by chunk; tokens never straddle a chunk.
template <typename Emit>
void for_each_token(std::istream& in, Emit&& emit) {
  std::string carry;
  std::string chunk(1 << 20, '\0');
  while (in) {
    in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got == 0) break;
    std::string_view view(chunk.data(), got);
    // Hold back a trailing partial token until the next chunk arrives.
    std::size_t cut = view.size();
    while (cut > 0) {
      const unsigned char c = static_cast<unsigned char>(view[cut - 1]);
      if (!std::isalnum(c) || c >= 0x80) break;
      --cut;
    }
    carry.append(view.substr(0, cut));
    for_each_token(std::string_view(carry), emit);
    carry.assign(view.substr(cut));
  }
  for_each_token(std::string_view(carry), emit);
}

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for_each_token(text, [&](std::string_view t) { out.emplace_back(t); });
  return out;
}

class Vocabulary {
 public:
  Vocabulary() = default;

  // Entries must already be in id order; counts are not re-sorted.
  Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> freq)
      : words_(std::move(words)), freq_(std::move(freq)) {
    if (words_.size() != freq_.size()) throw Error("vocabulary: words/counts length mismatch");
    id_of_.reserve(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (!id_of_.emplace(words_[i], static_cast<WordId>(i)).second) {
        throw Error("vocabulary: duplicate word '" + words_[i] + "'");
      }
    }
  }

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  const std::string& word(WordId id) const { return words_.at(static_cast<std::size_t>(id)); }
  std::uint64_t freq(WordId id) const { return freq_.at(static_cast<std::size_t>(id)); }
  std::span<const std::string> words() const { return words_; }
  std::span<const std::uint64_t> frequencies() const { return freq_; }

  std::optional<WordId> find(std::string_view word) const {
    auto it = id_of_.find(std::string(word));
    if (it == id_of_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view word) const { return find(word).has_value(); }

  std::uint64_t total_count() const {
    std::uint64_t total = 0;
    for (auto f : freq_) total += f;
    return total;
  }

  // "word<TAB>count" per line, id order.
  void write(std::ostream& out) const {
    for (std::size_t i = 0; i < words_.size(); ++i) out << words_[i] << '\t' << freq_[i] << '\n';
  }

  static Vocabulary read(std::istream& in, const std::string& source = "vocab") {
    std::vector<std::string> words;
    std::vector<std::uint64_t> freq;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0) throw ParseError(source, line_no, "expected word<TAB>count");
      std::uint64_t count = 0;
      try {
        std::size_t used = 0;
        count = std::stoull(line.substr(tab + 1), &used);
        if (used != line.size() - tab - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError(source, line_no, "bad count");
      }
      if (!freq.empty() && count > freq.back()) {
        throw ParseError(source, line_no, "counts must be non-increasing");
      }
      words.push_back(line.substr(0, tab));
      freq.push_back(count);
    }
    try {
      return Vocabulary(std::move(words), std::move(freq));
    } catch (const Error& e) {
      throw ParseError(source, line_no, e.what());
    }
  }

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> freq_;
  std::unordered_map<std::string, WordId> id_of_;
};

// Incremental word counter; lets huge corpora be counted while streaming.
class VocabBuilder {
 public:
  void add(std::string_view token) {
    ++total_;
    auto [it, inserted] = index_.try_emplace(std::string(token), entries_.size());
    if (inserted) entries_.push_back({std::string(token), 0});
    ++entries_[it->second].count;
  }

  std::uint64_t tokens_seen() const { return total_; }

  // Drops words below min_count, then orders by count descending with ties
  // broken by first occurrence.
  Vocabulary finish(std::uint64_t min_count) const {
    if (min_count == 0) throw ConfigError("min_count must be positive");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].count >= min_count) keep.push_back(i);
    }
    if (keep.empty()) throw Error("empty vocabulary after min_count filtering");
    std::stable_sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
      return entries_[a].count > entries_[b].count;
    });
    std::vector<std::string> words;
    std::vector<std::uint64_t> freq;
    words.reserve(keep.size());
    freq.reserve(keep.size());
    for (auto i : keep) {
      words.push_back(entries_[i].word);
      freq.push_back(entries_[i].count);
    }
    return Vocabulary(std::move(words), std::move(freq));
  }

 private:
  struct Entry {
    std::string word;
    std::uint64_t count;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t total_ = 0;
};

template <typename Tokens>
Vocabulary build_vocab(const Tokens& tokens, std::uint64_t min_count) {
  VocabBuilder builder;
  for (const auto& t : tokens) builder.add(t);
  return builder.finish(min_count);
}

// Maps tokens to ids, deleting out-of-vocabulary tokens from the stream.
template <typename Tokens>
std::vector<WordId> encode(const Tokens& tokens, const Vocabulary& vocab) {
  std::vector<WordId> ids;
  ids.reserve(std::size(tokens));
  for (const auto& t : tokens) {
    if (auto id = vocab.find(t)) ids.push_back(*id);
  }
  return ids;
}

// Keep probability min(1, sqrt(t/f) + t/f) for a word of relative frequency f.
inline double keep_probability(double relative_freq, double threshold) {
  if (relative_freq <= 0.0) return 1.0;
  const double ratio = threshold / relative_freq;
  return std::min(1.0, std::sqrt(ratio) + ratio);
}

inline std::vector<double> keep_probabilities(const Vocabulary& vocab, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("subsample threshold must be positive");
  const double total = static_cast<double>(vocab.total_count());
  std::vector<double> keep(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    keep[i] = keep_probability(static_cast<double>(vocab.frequencies()[i]) / total, threshold);
  }
  return keep;
}

inline std::vector<WordId> subsample(std::span<const WordId> ids, const Vocabulary& vocab,
                                     double threshold, Rng& rng) {
  const auto keep = keep_probabilities(vocab, threshold);
  std::vector<WordId> out;
  out.reserve(ids.size());
  for (const WordId id : ids) {
    const double p = keep.at(static_cast<std::size_t>(id));
    if (p >= 1.0 || rng.uniform() < p) out.push_back(id);
  }
  return out;
}

// Calls emit(pair) for every (token_i, token_j), 0 < |i - j| <= radius, in
// corpus order.
template <typename Emit>
void for_each_pair(std::span<const WordId> ids, std::size_t radius, Emit&& emit) {
  if (radius == 0) throw ConfigError("window radius must be >= 1");
  const std::size_t n = ids.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= radius ? i - radius : 0;
    const std::size_t hi = std::min(n - 1, i + radius);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != i) emit(Pair{ids[i], ids[j]});
    }
  }
}

inline std::vector<Pair> extract_pairs(std::span<const WordId> ids, std::size_t radius) {
  std::vector<Pair> pairs;
  pairs.reserve(ids.size() * 2 * radius);
  for_each_pair(ids, radius, [&](Pair p) { pairs.push_back(p); });
  return pairs;
}

// Sparse joint counts over (x, y) with marginals.
class EmpiricalDistribution {
 public:
  void add(Pair p, std::uint64_t count = 1) {
    if (p.x < 0 || p.y < 0) throw Error("negative word id");
    if (count == 0) return;
    joint_[p] += count;
    grow(marginal_x_, p.x) += count;
    grow(marginal_y_, p.y) += count;
    n_total_ += count;
  }

  // Exact count addition; used to merge shards.
  void merge(const EmpiricalDistribution& other) {
    for (const auto& [p, c] : other.joint_) add(p, c);
  }

  std::uint64_t n_total() const { return n_total_; }
  bool empty() const { return n_total_ == 0; }
  const std::map<Pair, std::uint64_t>& joint() const { return joint_; }

  std::uint64_t count(WordId x, WordId y) const {
    auto it = joint_.find(Pair{x, y});
    return it == joint_.end() ? 0 : it->second;
  }
  std::uint64_t count_x(WordId x) const { return at(marginal_x_, x); }
  std::uint64_t count_y(WordId y) const { return at(marginal_y_, y); }

  double prob(WordId x, WordId y) const { return static_cast<double>(count(x, y)) / denom(); }
  double prob_x(WordId x) const { return static_cast<double>(count_x(x)) / denom(); }
  double prob_y(WordId y) const { return static_cast<double>(count_y(y)) / denom(); }

  // One past the largest center / context id seen.
  std::size_t x_extent() const { return marginal_x_.size(); }
  std::size_t y_extent() const { return marginal_y_.size(); }

 private:
  static std::uint64_t& grow(std::vector<std::uint64_t>& v, WordId id) {
    const auto i = static_cast<std::size_t>(id);
    if (v.size() <= i) v.resize(i + 1, 0);
    return v[i];
  }
  static std::uint64_t at(const std::vector<std::uint64_t>& v, WordId id) {
    const auto i = static_cast<std::size_t>(id);
    return (id >= 0 && i < v.size()) ? v[i] : 0;
  }
  double denom() const {
    if (n_total_ == 0) throw Error("probability query on an empty distribution");
    return static_cast<double>(n_total_);
  }

  std::map<Pair, std::uint64_t> joint_;
  std::vector<std::uint64_t> marginal_x_;
  std::vector<std::uint64_t> marginal_y_;
  std::uint64_t n_total_ = 0;
};

template <typename Pairs>
EmpiricalDistribution tally(const Pairs& pairs) {
  EmpiricalDistribution dist;
  for (const Pair& p : pairs) dist.add(p);
  return dist;
}

// Everything the trainer needs from a corpus.
struct PreparedCorpus {
  Vocabulary vocab;
  std::vector<WordId> ids;  // after OOV removal and subsampling
  std::vector<Pair> pairs;
  std::uint64_t raw_tokens = 0;
};

// Counts the file, builds the vocabulary (unless one is supplied), encodes,
// subsamples and extracts positive pairs.
inline PreparedCorpus prepare_corpus(const std::string& path, std::uint64_t min_count, double subsample_t,
                                     std::size_t radius, Rng& rng,
                                     const std::optional<Vocabulary>& given_vocab = std::nullopt) {
  PreparedCorpus out;
  auto open = [&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open corpus '" + path + "'");
    return in;
  };
  if (given_vocab) {
    out.vocab = *given_vocab;
  } else {
    VocabBuilder builder;
    auto in = open();
    for_each_token(in, [&](std::string_view t) { builder.add(t); });
    out.vocab = builder.finish(min_count);
  }
  std::vector<WordId> ids;
  {
    auto in = open();
    for_each_token(in, [&](std::string_view t) {
      ++out.raw_tokens;
      if (auto id = out.vocab.find(t)) ids.push_back(*id);
    });
  }
  out.ids = subsample_t > 0.0 ? subsample(ids, out.vocab, subsample_t, rng) : std::move(ids);
  out.pairs = extract_pairs(out.ids, radius);
  return out;
}

}  // namespace wcc
