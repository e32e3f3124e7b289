#pragma once

#include <string>
#include <vector>

#include "wcc/corpus.hpp"
#include "wcc/model.hpp"
#include "wcc/random.hpp"

namespace wcc::testing {

// Two disjoint topics of `per_cluster` words each. Text is a Markov chain:
// with probability `switch_p` the next word is uniform over the other topic,
// otherwise it is i+1 (mod per_cluster) with probability `chain_p` and
// uniform over the current topic with the remaining mass.
struct ClusterCorpus {
  std::vector<std::string> tokens;
  Vocabulary vocab;
  std::vector<WordId> ids;
  std::vector<int> cluster;  // by word id
};

inline std::string cluster_word(int topic, std::size_t i) {
  return std::string(topic == 0 ? "alpha" : "beta") + std::to_string(i);
}

inline ClusterCorpus make_cluster_corpus(std::size_t n_tokens, std::uint64_t seed, std::size_t per_cluster = 20,
                                         double switch_p = 0.02, double chain_p = 0.5) {
  ClusterCorpus c;
  Rng rng(seed);
  int topic = 0;
  std::size_t word = 0;
  c.tokens.reserve(n_tokens);
  for (std::size_t t = 0; t < n_tokens; ++t) {
    c.tokens.push_back(cluster_word(topic, word));
    if (rng.uniform() < switch_p) {
      topic = 1 - topic;
      word = rng.below(per_cluster);
    } else if (rng.uniform() < chain_p) {
      word = (word + 1) % per_cluster;
    } else {
      word = rng.below(per_cluster);
    }
  }
  c.vocab = build_vocab(c.tokens, 1);
  c.ids = encode(c.tokens, c.vocab);
  c.cluster.resize(c.vocab.size());
  for (std::size_t i = 0; i < c.vocab.size(); ++i) c.cluster[i] = c.vocab.word(static_cast<WordId>(i))[0] == 'a' ? 0 : 1;
  return c;
}

inline std::string join_tokens(const std::vector<std::string>& tokens, std::size_t per_line = 20) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out += tokens[i];
    out += (i + 1) % per_line == 0 ? '\n' : ' ';
  }
  return out;
}

struct ClusterGap {
  double within = 0.0;
  double cross = 0.0;
  double gap() const { return within - cross; }
};

// Mean cosine over distinct same-topic pairs vs over cross-topic pairs.
inline ClusterGap cluster_gap(const EmbeddingTable& f, const std::vector<int>& cluster) {
  ClusterGap g;
  double nw = 0.0;
  double nc = 0.0;
  for (std::size_t a = 0; a < f.rows(); ++a) {
    for (std::size_t b = a + 1; b < f.rows(); ++b) {
      const auto ra = f.row(static_cast<WordId>(a));
      const auto rb = f.row(static_cast<WordId>(b));
      const double cs = dot(ra, rb) / std::sqrt(dot(ra, ra) * dot(rb, rb));
      if (cluster[a] == cluster[b]) {
        g.within += cs;
        nw += 1;
      } else {
        g.cross += cs;
        nc += 1;
      }
    }
  }
  g.within /= nw;
  g.cross /= nc;
  return g;
}

}  // namespace wcc::testing
