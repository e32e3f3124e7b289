#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "wcc/config.hpp"
#include "wcc/random.hpp"

using namespace wcc;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.cfg");
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsMatchTrainConfig) {
  const RunConfig cfg = parse("");
  EXPECT_EQ(cfg.train, TrainConfig{});
  EXPECT_EQ(cfg.noise, "pow-unigram:0.75");
  EXPECT_FALSE(cfg.adaptive());
}

TEST(Config, ParsesCommentsAndWhitespace) {
  const RunConfig cfg = parse("# vanilla run\n\n  noise = casgn2  # adaptive\nk=1\nn_critic = 5\nalpha = 26.5\n"
                              "mode = performance\ncorpus = data/x.txt\n");
  EXPECT_EQ(cfg.noise, "casgn2");
  EXPECT_TRUE(cfg.adaptive());
  EXPECT_EQ(cfg.train.k, 1u);
  EXPECT_EQ(cfg.train.n_critic, 5u);
  EXPECT_EQ(cfg.train.alpha, 26.5);
  EXPECT_EQ(cfg.train.mode, TrainMode::Performance);
  EXPECT_EQ(cfg.corpus, "data/x.txt");
}

TEST(Config, RoundTripIsIdentity) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    RunConfig cfg;
    cfg.train.dim = 1 + rng.below(500);
    cfg.train.lr_classifier = rng.uniform(1e-6, 10.0);
    cfg.train.lr_sampler = rng.uniform();
    cfg.train.subsample_t = std::exp(rng.uniform(-20.0, 0.0));
    cfg.train.alpha = 1.0 + rng.uniform(0.0, 1e5);
    cfg.train.seed = rng.below(1'000'000'000) * 1'000'000'007ull;
    cfg.train.mode = rng.below(2) ? TrainMode::Performance : TrainMode::Deterministic;
    cfg.noise = rng.below(2) ? "casgn" + std::to_string(1 + rng.below(3)) : "pow-unigram:0.5";
    cfg.corpus = "corpus " + std::to_string(trial) + ".txt";
    const std::string text = serialize_config(cfg);
    const RunConfig back = parse(text);
    EXPECT_EQ(back, cfg);
    EXPECT_EQ(serialize_config(back), text);
  }
}

TEST(Config, SerializesEveryKey) {
  const std::string text = serialize_config(RunConfig{});
  for (auto key : config_keys()) EXPECT_NE(text.find(std::string(key) + " = "), std::string::npos) << key;
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(message_of([] { parse("dim = ten\n"); }).find("'dim'"), std::string::npos);
  EXPECT_NE(message_of([] { parse("window = -1\n"); }).find("'window'"), std::string::npos);
  EXPECT_NE(message_of([] { parse("bogus = 1\n"); }).find("'bogus'"), std::string::npos);
  EXPECT_NE(message_of([] { parse("mode = fast\n"); }).find("'mode'"), std::string::npos);
  EXPECT_NE(message_of([] { parse("k = 1\nk = 2\n"); }).find("test.cfg:2"), std::string::npos);
  EXPECT_NE(message_of([] { parse("just words\n"); }).find("test.cfg:1"), std::string::npos);
}

TEST(Config, OverridesApplyInOrder) {
  RunConfig cfg = parse("k = 5\nnoise = uniform\n");
  apply_overrides(cfg, {"--k", "1", "--noise=ace", "--k", "3"});
  EXPECT_EQ(cfg.train.k, 3u);
  EXPECT_EQ(cfg.noise, "ace");
  EXPECT_THROW(apply_overrides(cfg, {"--k"}), ConfigError);
  EXPECT_THROW(apply_overrides(cfg, {"k", "1"}), ConfigError);
  EXPECT_NE(message_of([&] { apply_overrides(cfg, {"--nope", "1"}); }).find("'nope'"), std::string::npos);
}

TEST(Config, TrainingValidation) {
  RunConfig cfg;
  EXPECT_NE(message_of([&] { validate_for_training(cfg); }).find("'corpus'"), std::string::npos);
  cfg.corpus = "/nonexistent/corpus.txt";
  EXPECT_NE(message_of([&] { validate_for_training(cfg); }).find("'corpus'"), std::string::npos);
  const auto path = std::filesystem::temp_directory_path() / "wcc_config_corpus.txt";
  std::ofstream(path) << "a b c\n";
  cfg.corpus = path.string();
  EXPECT_NO_THROW(validate_for_training(cfg));
  cfg.noise = "casgn9";
  EXPECT_NE(message_of([&] { validate_for_training(cfg); }).find("'noise'"), std::string::npos);
  cfg.noise = "pow-unigram:2";
  EXPECT_NE(message_of([&] { validate_for_training(cfg); }).find("'noise'"), std::string::npos);
  cfg.noise = "uniform";
  cfg.train.batch_size = 0;
  EXPECT_NE(message_of([&] { validate_for_training(cfg); }).find("'batch_size'"), std::string::npos);
  std::filesystem::remove(path);
}
