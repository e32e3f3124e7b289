#include <gtest/gtest.h>

#include <cmath>

#include "stats.hpp"
#include "wcc/sampler.hpp"

using namespace wcc;

namespace {

Vocabulary vocab_with(std::vector<std::uint64_t> freq) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < freq.size(); ++i) words.push_back("w" + std::to_string(i));
  return Vocabulary(std::move(words), std::move(freq));
}

std::vector<std::uint64_t> histogram(const CategoricalSampler& s, std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint64_t> counts(s.size(), 0);
  for (std::size_t i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(draw_context(s, rng))];
  return counts;
}

}  // namespace

TEST(FixedSampler, ProbabilityVectorsFollowFormulas) {
  const auto uni = build_fixed_sampler(vocab_with({1, 1, 1, 1}), FixedNoiseSpec::uniform());
  for (double p : uni.probs()) EXPECT_DOUBLE_EQ(p, 0.25);

  const auto pow = build_fixed_sampler(vocab_with({16, 1}), FixedNoiseSpec::pow_unigram(0.75));
  EXPECT_NEAR(pow.probs()[0], 8.0 / 9.0, 1e-15);
  EXPECT_NEAR(pow.probs()[1], 1.0 / 9.0, 1e-15);

  const auto ug = build_fixed_sampler(vocab_with({3, 1}), FixedNoiseSpec::unigram());
  EXPECT_DOUBLE_EQ(ug.probs()[0], 0.75);
  EXPECT_DOUBLE_EQ(ug.probs()[1], 0.25);
}

TEST(FixedSampler, SpecStrings) {
  EXPECT_EQ(FixedNoiseSpec::parse("uniform").kind, FixedNoiseSpec::Kind::Uniform);
  EXPECT_EQ(FixedNoiseSpec::parse("unigram").kind, FixedNoiseSpec::Kind::Unigram);
  const auto p = FixedNoiseSpec::parse("pow-unigram:0.75");
  EXPECT_EQ(p.kind, FixedNoiseSpec::Kind::PowUnigram);
  EXPECT_DOUBLE_EQ(p.exponent, 0.75);
  EXPECT_EQ(p.to_string(), "pow-unigram:0.75");
  EXPECT_THROW(FixedNoiseSpec::parse("pow-unigram:1.5"), ConfigError);
  EXPECT_THROW(FixedNoiseSpec::parse("pow-unigram:x"), ConfigError);
  EXPECT_THROW(FixedNoiseSpec::parse("zipf"), ConfigError);
}

TEST(CategoricalSampler, PointMass) {
  const CategoricalSampler s({1.0});
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(s.draw(rng), 0);
  const CategoricalSampler zero_tail({0.0, 2.0, 0.0});
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(zero_tail.draw(rng), 1);
}

TEST(CategoricalSampler, ChiSquaredTwoOutcomes) {
  const CategoricalSampler s({0.75, 0.25});
  const auto counts = histogram(s, 1000000, 17);
  EXPECT_GT(wcc::testing::chi_squared_p_value(counts, s.probs()), 0.01);
}

TEST(CategoricalSampler, UniformConcentration) {
  const CategoricalSampler s(std::vector<double>(100, 1.0));
  const auto counts = histogram(s, 1000000, 23);
  for (auto c : counts) EXPECT_LT(std::abs(static_cast<double>(c) / 1e6 - 0.01), 0.002);
}

TEST(CategoricalSampler, AliasTablesReconstructProbabilities) {
  Rng rng(99);
  for (std::size_t n = 1; n <= 1000; n += (n < 20 ? 1 : 37)) {
    std::vector<double> w(n);
    for (auto& v : w) v = rng.uniform() < 0.1 ? 0.0 : std::pow(rng.uniform(), 3.0);
    w[rng.below(n)] += 0.5;
    const CategoricalSampler s(w);
    double sum = 0.0;
    for (double p : s.probs()) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    const auto back = s.reconstructed();
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(back[i], s.probs()[i], 1e-12) << "n=" << n << " i=" << i;
  }
}

TEST(CategoricalSampler, RejectsBadWeights) {
  EXPECT_THROW(CategoricalSampler(std::vector<double>{}), Error);
  EXPECT_THROW(CategoricalSampler({0.0, 0.0}), Error);
  EXPECT_THROW(CategoricalSampler({1.0, -1.0}), Error);
  EXPECT_THROW(CategoricalSampler({1.0, NAN}), Error);
}

TEST(FixedSampler, EntropyOrdering) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint64_t> freq(2 + rng.below(50));
    for (auto& f : freq) f = 1 + rng.below(1000);
    freq[0] += 1;  // not uniform
    std::sort(freq.rbegin(), freq.rend());
    const auto v = vocab_with(freq);
    const double hu = entropy(build_fixed_sampler(v, FixedNoiseSpec::uniform()).probs());
    const double hp = entropy(build_fixed_sampler(v, FixedNoiseSpec::pow_unigram(0.75)).probs());
    const double hg = entropy(build_fixed_sampler(v, FixedNoiseSpec::unigram()).probs());
    EXPECT_GE(hu + 1e-12, hp);
    EXPECT_GE(hp + 1e-12, hg);
  }
}
