#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "wcc/eval.hpp"

using namespace wcc;

namespace {

Vocabulary numbered_vocab(std::size_t n) {
  std::vector<std::string> words;
  std::vector<std::uint64_t> freq;
  for (std::size_t i = 0; i < n; ++i) {
    words.push_back("w" + std::to_string(i));
    freq.push_back(1000 - i);
  }
  return Vocabulary(words, freq);
}

EmbeddingTable random_table(std::size_t rows, std::size_t dim, Rng& rng) {
  EmbeddingTable t(rows, dim);
  for (double& v : t.values()) v = rng.uniform(-1, 1);
  return t;
}

// Average rank by counting: 1 + #smaller + (#equal - 1) / 2.
std::vector<double> brute_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0;
    double equal = 0;
    for (double u : v) {
      less += u < v[i];
      equal += u == v[i];
    }
    r[i] = 1 + less + (equal - 1) / 2;
  }
  return r;
}

double brute_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0;
  double mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / a.size();
    mb += b[i] / b.size();
  }
  double num = 0;
  double da = 0;
  double db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(da * db);
}

double brute_cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0;
  double aa = 0;
  double bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST(Spearman, MonotoneRelationsGiveUnitMagnitude) {
  const std::vector<double> human = {1, 2, 3, 4, 5, 6};
  const std::vector<double> up = {0.1, 0.5, 0.7, 2.0, 9.0, 10.0};
  const std::vector<double> down = {5, 4, 3, 2, 1, 0};
  EXPECT_DOUBLE_EQ(spearman(up, human), 1.0);
  EXPECT_DOUBLE_EQ(spearman(down, human), -1.0);
}

TEST(Spearman, MatchesBruteForceWithTies) {
  const std::vector<double> model = {0.3, 0.1, 0.3, 0.9, -0.2, 0.1, 0.3, 0.5, 0.5, 0.0};
  const std::vector<double> human = {2.0, 7.5, 2.0, 9.0, 1.0, 3.5, 6.0, 6.0, 6.0, 4.0};
  EXPECT_NEAR(spearman(model, human), brute_pearson(brute_ranks(model), brute_ranks(human)), 1e-12);
}

TEST(Spearman, InvariantToMonotoneTransforms) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> model(15);
    std::vector<double> human(15);
    for (auto& v : model) v = rng.uniform(-1, 1);
    for (auto& v : human) v = std::round(rng.uniform(0, 10));
    std::vector<double> squashed(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) squashed[i] = std::exp(3 * model[i]) + model[i] * model[i] * model[i];
    EXPECT_NEAR(spearman(model, human), spearman(squashed, human), 1e-12);
  }
}

TEST(SimilarityEval, CoverageAndErrors) {
  Rng rng(2);
  const auto vocab = numbered_vocab(5);
  const auto f = random_table(5, 4, rng);
  std::vector<SimilarityRecord> records = {{"w0", "w1", 3}, {"w2", "zz", 1}, {"w3", "w4", 2}, {"w0", "w4", 5}};
  const auto res = spearman_similarity(f, vocab, records);
  EXPECT_EQ(res.covered, 3u);
  EXPECT_EQ(res.total, 4u);
  const std::vector<double> model = {brute_cosine(f.row(0), f.row(1)), brute_cosine(f.row(3), f.row(4)),
                                     brute_cosine(f.row(0), f.row(4))};
  EXPECT_NEAR(res.rho, brute_pearson(brute_ranks(model), brute_ranks({3, 2, 5})), 1e-12);
  records.resize(2);
  EXPECT_THROW(spearman_similarity(f, vocab, records), Error);
}

TEST(SimilarityFile, Parsing) {
  std::istringstream in("# header line\nTiger\tcat\t7.35\n\nbook\tpaper\t7.46\n");
  const auto rec = read_similarity(in);
  ASSERT_EQ(rec.size(), 2u);
  EXPECT_EQ(rec[0].w1, "tiger");
  EXPECT_DOUBLE_EQ(rec[1].human_score, 7.46);
  std::istringstream bad("a\tb\t1\na\tb\tx\n");
  try {
    read_similarity(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(AnalogyFile, SectionsAndValidation) {
  std::istringstream in(": capital-common-countries\nAthens Greece Baghdad Iraq\n: gram1-adjective-to-adverb\n"
                        "amazing amazingly apparent apparently\n");
  const auto rec = read_analogy(in);
  ASSERT_EQ(rec.size(), 2u);
  EXPECT_TRUE(rec[0].semantic);
  EXPECT_FALSE(rec[1].semantic);
  EXPECT_EQ(rec[0].words[1], "greece");
  std::istringstream dup(": family\nboy girl boy girl\n");
  EXPECT_THROW(read_analogy(dup), ParseError);
  std::istringstream three(": family\nboy girl man\n");
  EXPECT_THROW(read_analogy(three), ParseError);
}

TEST(Analogy, ConstructedOffsetIsFound) {
  // Basis-like vectors for 8 words; w3 = w1 - w0 + w2 exactly.
  EmbeddingTable f(8, 8);
  for (WordId i = 0; i < 8; ++i) f.row(i)[static_cast<std::size_t>(i)] = 1.0;
  f.row(3)[3] = 0.0;
  f.row(3)[1] = 1.0;
  f.row(3)[0] = -1.0;
  f.row(3)[2] = 1.0;
  const auto vocab = numbered_vocab(8);
  AnalogyRecord r{{"w0", "w1", "w2", "w3"}, "family", true};
  const auto res = analogy_accuracy(f, vocab, std::vector<AnalogyRecord>{r});
  EXPECT_EQ(res.covered, 1u);
  EXPECT_DOUBLE_EQ(res.semantic, 1.0);
  EXPECT_DOUBLE_EQ(res.total, 1.0);
}

TEST(Analogy, FarthestCandidateIsMissed) {
  // V = 4 plus one decoy; the answer points away from the target.
  EmbeddingTable f(5, 2);
  const double rows[5][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, -1}, {0.2, 1.0}};
  for (WordId i = 0; i < 5; ++i) {
    f.row(i)[0] = rows[i][0];
    f.row(i)[1] = rows[i][1];
  }
  const auto vocab = numbered_vocab(5);
  const auto res = analogy_accuracy(f, vocab, std::vector<AnalogyRecord>{{{"w0", "w1", "w2", "w3"}, "x", false}});
  EXPECT_DOUBLE_EQ(res.syntactic, 0.0);
  EXPECT_EQ(res.syntactic_covered, 1u);
}

TEST(Analogy, MatchesBruteForceAndIsScaleInvariant) {
  Rng rng(3);
  const std::size_t v = 30;
  const auto vocab = numbered_vocab(v);
  const auto f = random_table(v, 5, rng);
  std::vector<AnalogyRecord> records;
  while (records.size() < 20) {
    std::array<std::size_t, 4> ids{};
    for (auto& id : ids) id = rng.below(v);
    if (ids[0] == ids[1] || ids[0] == ids[2] || ids[0] == ids[3] || ids[1] == ids[2] || ids[1] == ids[3] ||
        ids[2] == ids[3]) {
      continue;
    }
    AnalogyRecord r;
    for (std::size_t i = 0; i < 4; ++i) r.words[i] = "w" + std::to_string(ids[i]);
    r.semantic = records.size() % 2 == 0;
    records.push_back(r);
  }
  // Plant a few solvable records so accuracy is not trivially zero.
  auto planted = f;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& w = records[i].words;
    std::array<WordId, 4> id{};
    for (std::size_t j = 0; j < 4; ++j) id[j] = *vocab.find(w[j]);
    for (std::size_t j = 0; j < 5; ++j) {
      planted.row(id[3])[j] = planted.row(id[1])[j] - planted.row(id[0])[j] + planted.row(id[2])[j];
    }
  }
  std::size_t hits = 0;
  for (const auto& r : records) {
    std::array<WordId, 4> id{};
    for (std::size_t j = 0; j < 4; ++j) id[j] = *vocab.find(r.words[j]);
    std::vector<double> target(5);
    for (std::size_t j = 0; j < 5; ++j) target[j] = planted.row(id[1])[j] - planted.row(id[0])[j] + planted.row(id[2])[j];
    WordId best = -1;
    double best_cos = -2;
    for (WordId c = 0; c < static_cast<WordId>(v); ++c) {
      if (c == id[0] || c == id[1] || c == id[2]) continue;
      const double cs = brute_cosine(target, planted.row(c));
      if (cs > best_cos) {
        best_cos = cs;
        best = c;
      }
    }
    hits += best == id[3];
  }
  const auto res = analogy_accuracy(planted, vocab, records);
  EXPECT_EQ(res.total, static_cast<double>(hits) / 20.0);
  EXPECT_GE(hits, 5u);

  auto scaled = planted;
  for (double& x : scaled.values()) x *= 7.5;
  const auto res2 = analogy_accuracy(scaled, vocab, records);
  EXPECT_EQ(res2.total, res.total);
  EXPECT_EQ(res2.semantic, res.semantic);
}

TEST(Jsd, IdenticalSourcesGiveNearZero) {
  Rng rng(4);
  const auto f = random_table(10, 3, rng);
  std::vector<Pair> positives;
  for (int i = 0; i < 50000; ++i) {
    const auto x = static_cast<WordId>(rng.below(10));
    positives.push_back({x, static_cast<WordId>((x + rng.below(3)) % 10)});
  }
  const auto res = jsd_estimate(positives, DataNoise{}, f);
  EXPECT_GE(res.estimate, -1e-9);
  EXPECT_LE(res.estimate, 0.02);
}

TEST(Jsd, DisjointSourcesApproachLogTwo) {
  // One-hot embeddings let the bilinear probe separate any two supports.
  const std::size_t v = 10;
  EmbeddingTable onehot(v, v);
  for (WordId i = 0; i < static_cast<WordId>(v); ++i) onehot.row(i)[static_cast<std::size_t>(i)] = 1.0;
  Rng rng(5);
  std::vector<Pair> data;
  std::vector<Pair> noise;
  for (int i = 0; i < 20000; ++i) {
    const auto x = static_cast<WordId>(rng.below(v));
    data.push_back({x, static_cast<WordId>((x + 1) % v)});
    noise.push_back({x, static_cast<WordId>((x + 2 + rng.below(v - 2)) % v)});
  }
  const auto res = jsd_from_samples(data, noise, onehot);
  EXPECT_NEAR(res.estimate, std::log(2.0), 0.05);

  // Monotonicity smoke test against the identical-source estimate.
  std::vector<Pair> resampled;
  for (int i = 0; i < 20000; ++i) resampled.push_back(data[static_cast<std::size_t>(rng.below(data.size()))]);
  EXPECT_LE(jsd_from_samples(data, resampled, onehot).estimate, res.estimate);
}

TEST(Jsd, NeedsEnoughSamples) {
  EmbeddingTable f(2, 2);
  std::vector<Pair> few(100, Pair{0, 1});
  EXPECT_THROW(jsd_from_samples(few, few, f), Error);
  EXPECT_THROW(jsd_estimate({}, DataNoise{}, f), Error);
}
