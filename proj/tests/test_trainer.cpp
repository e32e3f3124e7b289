#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "wcc/trainer.hpp"

using namespace wcc;
using wcc::testing::cluster_gap;
using wcc::testing::make_cluster_corpus;

namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.dim = 10;
  cfg.window = 1;
  cfg.batch_size = 64;
  cfg.epochs = 3;
  cfg.k = 5;
  cfg.latent_dim = 4;
  cfg.hidden_dim = 16;
  cfg.alpha = 4.0;
  cfg.eval_every = 500;
  return cfg;
}

const wcc::testing::ClusterCorpus& corpus() {
  static const auto c = make_cluster_corpus(30000, 42);
  return c;
}

const std::vector<Pair>& pairs() {
  static const auto p = extract_pairs(corpus().ids, 1);
  return p;
}

}  // namespace

TEST(LrSchedule, Examples) {
  EXPECT_EQ(lr_schedule(0, 100, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(lr_schedule(100, 100, 0.5), 0.5e-4);
  EXPECT_DOUBLE_EQ(lr_schedule(50, 100, 0.5), 0.25);
  EXPECT_THROW(lr_schedule(101, 100, 0.5), Error);
}

TEST(MetricLog, OrderingAndCsv) {
  MetricLog log;
  log.add(0, "a", 1.5);
  log.add(10, "b", 0.25);
  log.add(10, "a", 2.0);
  EXPECT_THROW(log.add(5, "a", 0.0), Error);
  EXPECT_EQ(log.series("a").size(), 2u);
  std::ostringstream out;
  log.write_csv(out);
  EXPECT_EQ(out.str(), "iteration,metric,value\n0,a,1.5\n10,b,0.25\n10,a,2\n");
}

TEST(TrainConfig, ValidationNamesKey) {
  TrainConfig cfg;
  cfg.k = 0;
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'k'"), std::string::npos);
  }
  cfg = TrainConfig{};
  cfg.alpha = 0.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(TrainFixed, ZeroEpochsReturnsInitialTables) {
  TrainConfig cfg = small_config();
  cfg.epochs = 0;
  const auto res = train_fixed(pairs(), corpus().vocab, FixedNoiseSpec::uniform(), cfg);
  Rng init = Rng::derive(cfg.seed, 0);
  const auto expected = init_embeddings(corpus().vocab.size(), cfg.dim, init);
  EXPECT_EQ(res.tables.f, expected.f);
  EXPECT_EQ(res.tables.g, expected.g);
  EXPECT_EQ(res.iterations, 0u);
}

TEST(TrainFixed, DeterministicAndBookkept) {
  const TrainConfig cfg = small_config();
  const auto a = train_fixed(pairs(), corpus().vocab, FixedNoiseSpec::pow_unigram(0.75), cfg);
  const auto b = train_fixed(pairs(), corpus().vocab, FixedNoiseSpec::pow_unigram(0.75), cfg);
  EXPECT_EQ(a.tables.f, b.tables.f);
  EXPECT_EQ(a.tables.g, b.tables.g);
  EXPECT_EQ(a.positives, cfg.epochs * pairs().size());
  EXPECT_EQ(a.negatives, cfg.k * a.positives);
  EXPECT_EQ(a.iterations, cfg.epochs * ((pairs().size() + cfg.batch_size - 1) / cfg.batch_size));
  TrainConfig other = cfg;
  other.seed = 2;
  EXPECT_NE(train_fixed(pairs(), corpus().vocab, FixedNoiseSpec::pow_unigram(0.75), other).tables.f, a.tables.f);
}

TEST(TrainFixed, SeparatesTopicsAndLowersLoss) {
  const auto res = train_fixed(pairs(), corpus().vocab, FixedNoiseSpec::unigram(), small_config());
  EXPECT_GT(cluster_gap(res.tables.f, corpus().cluster).gap(), 0.2);
  const auto loss = res.log.series("loss");
  ASSERT_GE(loss.size(), 2u);
  EXPECT_LT(loss.back().value, loss.front().value);
}

TEST(TrainFixed, HooksRunOnCadence) {
  TrainConfig cfg = small_config();
  std::vector<std::uint64_t> seen;
  EvalHook hook = [&](const TrainState& s, MetricLog& log) {
    seen.push_back(s.iteration);
    log.add(s.iteration, "hook", static_cast<double>(s.tables.f.rows()));
  };
  const auto res = train_fixed(pairs(), corpus().vocab, FixedNoiseSpec::uniform(), cfg, {hook});
  ASSERT_FALSE(seen.empty());
  for (std::size_t i = 0; i + 1 < seen.size(); ++i) EXPECT_EQ(seen[i], (i + 1) * cfg.eval_every);
  EXPECT_EQ(seen.back(), res.iterations);
}

TEST(TrainFixed, PerformanceModeCompletes) {
  TrainConfig cfg = small_config();
  cfg.mode = TrainMode::Performance;
  cfg.threads = 3;
  const auto res = train_fixed(pairs(), corpus().vocab, FixedNoiseSpec::unigram(), cfg);
  EXPECT_EQ(res.negatives, cfg.k * res.positives);
  EXPECT_EQ(res.positives, cfg.epochs * pairs().size());
  for (double v : res.tables.f.values()) ASSERT_TRUE(std::isfinite(v));
  EXPECT_GT(cluster_gap(res.tables.f, corpus().cluster).gap(), 0.2);
}

TEST(TrainAdaptive, LogsNCriticAndIsDeterministic) {
  for (std::size_t n_critic : {1u, 5u}) {
    TrainConfig cfg = small_config();
    cfg.k = 1;
    cfg.epochs = 1;
    cfg.n_critic = n_critic;
    const auto a = train_adaptive(pairs(), corpus().vocab, Topology::CASGN2, cfg);
    const auto logged = a.log.series("n_critic");
    ASSERT_EQ(logged.size(), 1u);
    EXPECT_EQ(logged[0].value, static_cast<double>(n_critic));
    EXPECT_FALSE(a.log.series("generator_entropy").empty());
    EXPECT_EQ(a.negatives, a.positives);
    const auto b = train_adaptive(pairs(), corpus().vocab, Topology::CASGN2, cfg);
    EXPECT_EQ(a.tables.f, b.tables.f);
    EXPECT_EQ(*a.generator, *b.generator);
  }
}

TEST(TrainAdaptive, FrozenGeneratorMatchesUniformNoise) {
  TrainConfig cfg = small_config();
  cfg.lr_sampler = 0.0;
  const auto adaptive = train_adaptive(pairs(), corpus().vocab, Topology::CASGN1, cfg);
  Rng init = Rng::derive(cfg.seed, 3);
  const GeneratorNet initial(GeneratorShape{Topology::CASGN1, corpus().vocab.size(), cfg.dim, cfg.latent_dim,
                                            cfg.hidden_dim},
                             init);
  EXPECT_EQ(*adaptive.generator, initial);
  const auto fixed = train_fixed(pairs(), corpus().vocab, FixedNoiseSpec::uniform(), cfg);
  const double la = adaptive.log.series("loss").back().value;
  const double lf = fixed.log.series("loss").back().value;
  EXPECT_NEAR(la, lf, 0.05 * lf);
  EXPECT_NEAR(cluster_gap(adaptive.tables.f, corpus().cluster).gap(), cluster_gap(fixed.tables.f, corpus().cluster).gap(),
              0.1);
}

TEST(TrainAdaptive, AceMovesTowardTrueContexts) {
  TrainConfig cfg = small_config();
  cfg.k = 1;
  cfg.epochs = 4;
  const auto data = tally(pairs());
  Rng probe(5);
  Rng init = Rng::derive(cfg.seed, 3);
  Rng tables_init = Rng::derive(cfg.seed, 0);
  const auto tables = init_embeddings(corpus().vocab.size(), cfg.dim, tables_init);
  const GeneratorNet initial(GeneratorShape{Topology::ACE, corpus().vocab.size(), cfg.dim, cfg.latent_dim,
                                            cfg.hidden_dim},
                             init);
  const double before = generator_cross_entropy(initial, tables.f, data, probe, 1);
  EXPECT_NEAR(before, std::log(static_cast<double>(corpus().vocab.size())), 1e-12);
  const auto res = train_adaptive(pairs(), corpus().vocab, Topology::ACE, cfg);
  const double after = generator_cross_entropy(*res.generator, res.tables.f, data, probe, 1);
  EXPECT_LT(after, before);
}

TEST(TrainAdaptive, PerformanceModeCompletes) {
  TrainConfig cfg = small_config();
  cfg.k = 1;
  cfg.epochs = 1;
  cfg.n_critic = 3;
  cfg.mode = TrainMode::Performance;
  cfg.threads = 2;
  const auto res = train_adaptive(pairs(), corpus().vocab, Topology::CASGN3, cfg);
  EXPECT_EQ(res.positives, pairs().size());
  EXPECT_EQ(res.negatives, res.positives);
  for (double v : res.tables.f.values()) ASSERT_TRUE(std::isfinite(v));
}
