// wcc: build vocabularies, train WCC embeddings, evaluate them, and check the
// theory numerically.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "wcc/config.hpp"
#include "wcc/corpus.hpp"
#include "wcc/eval.hpp"
#include "wcc/generator.hpp"
#include "wcc/model.hpp"
#include "wcc/sampler.hpp"
#include "wcc/theory_checks.hpp"
#include "wcc/trainer.hpp"

namespace fs = std::filesystem;
using namespace wcc;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

Vocabulary load_vocab(const std::string& path) {
  auto in = open_in(path);
  return Vocabulary::read(in, path);
}

LoadedEmbeddings load_embeddings(const std::string& path) {
  auto in = open_in(path);
  return read_embeddings(in, path);
}

Vocabulary vocab_of(const LoadedEmbeddings& e) {
  return Vocabulary(e.words, std::vector<std::uint64_t>(e.words.size(), 0));
}

std::string dataset_name(const std::string& path) { return fs::path(path).stem().string(); }

// Config file (optional) < WCC_THREADS < "--key value" overrides.
RunConfig load_run_config(const std::string& file, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!file.empty()) {
    auto in = open_in(file);
    cfg = parse_config(in, file);
  }
  if (const char* env = std::getenv("WCC_THREADS"); env && *env) set_config_value(cfg, "threads", env);
  apply_overrides(cfg, overrides);
  return cfg;
}

PreparedCorpus prepare(const RunConfig& cfg) {
  Rng rng = Rng::derive(cfg.train.seed, 5);
  std::optional<Vocabulary> vocab;
  if (!cfg.vocab.empty()) vocab = load_vocab(cfg.vocab);
  return prepare_corpus(cfg.corpus, cfg.train.min_count, cfg.train.subsample_t, cfg.train.window, rng, vocab);
}

struct EvalSets {
  std::vector<SimilarityRecord> similarity;
  std::vector<AnalogyRecord> analogy;
};

EvalSets load_eval_sets(const RunConfig& cfg) {
  EvalSets sets;
  if (!cfg.similarity.empty()) {
    require_file("similarity", cfg.similarity);
    auto in = open_in(cfg.similarity);
    sets.similarity = read_similarity(in, cfg.similarity);
  }
  if (!cfg.analogy.empty()) {
    require_file("analogy", cfg.analogy);
    auto in = open_in(cfg.analogy);
    sets.analogy = read_analogy(in, cfg.analogy);
  }
  return sets;
}

void log_eval(const EvalSets& sets, const EmbeddingTable& f, const Vocabulary& vocab, std::uint64_t it,
              MetricLog& log) {
  if (!sets.similarity.empty()) log.add(it, "similarity_rho", spearman_similarity(f, vocab, sets.similarity).rho);
  if (!sets.analogy.empty()) log.add(it, "analogy_accuracy", analogy_accuracy(f, vocab, sets.analogy).total);
}

void write_table(const fs::path& path, const Vocabulary& vocab, const EmbeddingTable& table) {
  auto out = open_out(path);
  write_embeddings(out, vocab.words(), table);
}

int cmd_vocab(const std::string& corpus, std::uint64_t min_count, const std::string& out_path) {
  require_file("corpus", corpus);
  auto in = open_in(corpus, std::ios::binary);
  VocabBuilder builder;
  for_each_token(in, [&](std::string_view t) { builder.add(t); });
  const Vocabulary vocab = builder.finish(min_count);
  if (out_path.empty()) {
    vocab.write(std::cout);
  } else {
    auto out = open_out(out_path, std::ios::binary);
    vocab.write(out);
  }
  std::cerr << "vocabulary: " << vocab.size() << " words, " << builder.tokens_seen() << " tokens\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  validate_for_training(cfg);
  const EvalSets sets = load_eval_sets(cfg);
  const PreparedCorpus corpus = prepare(cfg);
  if (corpus.pairs.empty()) throw Error("corpus yields no word-context pairs");
  std::cerr << "corpus: " << corpus.raw_tokens << " tokens, " << corpus.vocab.size() << " words, "
            << corpus.pairs.size() << " pairs per epoch\n";

  std::vector<EvalHook> hooks;
  if (!sets.similarity.empty() || !sets.analogy.empty()) {
    hooks.push_back([&](const TrainState& s, MetricLog& log) { log_eval(sets, s.tables.f, corpus.vocab, s.iteration, log); });
  }
  const TrainResult res = cfg.adaptive()
                              ? train_adaptive(corpus.pairs, corpus.vocab, parse_topology(cfg.noise), cfg.train, hooks)
                              : train_fixed(corpus.pairs, corpus.vocab, FixedNoiseSpec::parse(cfg.noise), cfg.train, hooks);

  const fs::path dir(cfg.output);
  fs::create_directories(dir);
  write_table(dir / "f.txt", corpus.vocab, res.tables.f);
  write_table(dir / "g.txt", corpus.vocab, res.tables.g);
  {
    auto out = open_out(dir / "vocab.txt", std::ios::binary);
    corpus.vocab.write(out);
  }
  {
    auto out = open_out(dir / "metrics.csv");
    res.log.write_csv(out);
  }
  {
    auto out = open_out(dir / "config.txt");
    out << serialize_config(cfg);
  }
  if (res.generator) {
    auto out = open_out(dir / "generator.bin", std::ios::binary);
    res.generator->save(out);
  }
  std::cerr << "trained " << res.iterations << " iterations (" << res.positives << " positives, " << res.negatives
            << " negatives); wrote " << dir.string() << "\n";
  return 0;
}

int cmd_eval_similarity(const std::string& embeddings, const std::vector<std::string>& datasets) {
  const auto e = load_embeddings(embeddings);
  const Vocabulary vocab = vocab_of(e);
  std::cout << "name,metric,value,covered\n";
  for (const auto& path : datasets) {
    auto in = open_in(path);
    const auto res = spearman_similarity(e.table, vocab, read_similarity(in, path));
    std::string line = dataset_name(path) + ",spearman,";
    append_double(line, res.rho);
    std::cout << line << ',' << res.covered << '\n';
  }
  return 0;
}

int cmd_eval_analogy(const std::string& embeddings, const std::vector<std::string>& datasets) {
  const auto e = load_embeddings(embeddings);
  const Vocabulary vocab = vocab_of(e);
  std::cout << "name,metric,value,covered\n";
  for (const auto& path : datasets) {
    auto in = open_in(path);
    const auto res = analogy_accuracy(e.table, vocab, read_analogy(in, path));
    auto row = [&](const char* metric, double value, std::size_t covered) {
      std::string line = dataset_name(path) + "," + metric + ",";
      append_double(line, value);
      std::cout << line << ',' << covered << '\n';
    };
    row("semantic", res.semantic, res.semantic_covered);
    row("syntactic", res.syntactic, res.syntactic_covered);
    row("total", res.total, res.covered);
  }
  return 0;
}

// Divergence between the run's positive pairs and a noise source, measured
// with a probe over the run's trained f.
int cmd_jsd(const std::string& run_dir, const std::string& noise_override, std::size_t samples) {
  const fs::path dir(run_dir);
  const RunConfig cfg = load_run_config((dir / "config.txt").string(), {"--vocab", (dir / "vocab.txt").string()});
  require_file("corpus", cfg.corpus);
  const PreparedCorpus corpus = prepare(cfg);
  const auto f = load_embeddings((dir / "f.txt").string());
  if (f.table.rows() != corpus.vocab.size()) throw Error("f.txt does not match the run vocabulary");

  const std::string noise = noise_override.empty() ? cfg.noise : noise_override;
  std::optional<GeneratorNet> net;
  NoiseModel model = DataNoise{};
  if (noise == "data") {
    model = DataNoise{};
  } else if (FixedNoiseSpec::is_fixed(noise)) {
    model = build_fixed_sampler(corpus.vocab, FixedNoiseSpec::parse(noise));
  } else {
    validate_noise(noise);
    if (noise != cfg.noise) throw ConfigError("config key 'noise': run was trained with '" + cfg.noise + "'");
    auto in = open_in((dir / "generator.bin").string(), std::ios::binary);
    net = GeneratorNet::load(in);
    model = GeneratorNoise{&*net, &f.table};
  }
  ProbeConfig probe;
  probe.samples = samples;
  probe.seed = cfg.train.seed;
  const auto res = jsd_estimate(corpus.pairs, model, f.table, probe);
  std::string line = "jsd," + noise + ",";
  append_double(line, res.estimate);
  std::cout << "name,noise,value\n" << line << '\n';
  return 0;
}

int cmd_verify_theory(const theory::VerifyOptions& opts) {
  const auto rows = theory::verify_theory(opts);
  std::size_t failed = 0;
  std::printf("%-6s %-22s %-34s %-11s %-9s %s\n", "result", "check", "instance", "residual", "tol", "detail");
  for (const auto& r : rows) {
    if (!r.passed) ++failed;
    std::printf("%-6s %-22s %-34s %-11.3g %-9.1g %s\n", r.passed ? "PASS" : "FAIL", r.check.c_str(), r.instance.c_str(),
                r.residual, r.tolerance, r.detail.c_str());
  }
  std::printf("%zu checks, %zu failed\n", rows.size(), failed);
  return failed == 0 ? 0 : kRuntimeFailure;
}

int cmd_export(const std::string& run_dir, const std::string& table, const std::string& out_path) {
  const fs::path dir(run_dir);
  const Vocabulary vocab = load_vocab((dir / "vocab.txt").string());
  auto f = load_embeddings((dir / "f.txt").string());
  EmbeddingTable result = f.table;
  if (table != "f") {
    const auto g = load_embeddings((dir / "g.txt").string());
    if (table == "g") {
      result = g.table;
    } else {
      auto dst = result.values();
      const auto src = g.table.values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
  if (result.rows() != vocab.size()) throw Error("embedding tables do not match the run vocabulary");
  if (out_path.empty()) {
    write_embeddings(std::cout, vocab.words(), result);
  } else {
    auto out = open_out(out_path);
    write_embeddings(out, vocab.words(), result);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Word-context classification embeddings"};
  app.require_subcommand(1);

  std::string corpus;
  std::string out_path;
  std::uint64_t min_count = 5;
  auto* vocab = app.add_subcommand("vocab", "Count a corpus and write its vocabulary (word<TAB>count)");
  vocab->add_option("--corpus", corpus, "Whitespace-tokenized text")->required();
  vocab->add_option("--min-count", min_count, "Drop words seen fewer times")->check(CLI::PositiveNumber);
  vocab->add_option("--out", out_path, "Output file (default stdout)");

  std::string config_file;
  auto* train = app.add_subcommand("train", "Train embeddings; any config key may be given as --key value");
  train->add_option("--config", config_file, "key = value config file");
  train->allow_extras();

  std::string embeddings;
  std::vector<std::string> datasets;
  auto* eval_sim = app.add_subcommand("eval-similarity", "Spearman correlation on word-similarity datasets");
  eval_sim->add_option("--embeddings", embeddings, "word2vec text file")->required();
  eval_sim->add_option("--dataset", datasets, "word1 word2 score per line")->required();
  auto* eval_an = app.add_subcommand("eval-analogy", "Analogy accuracy by cosine argmax");
  eval_an->add_option("--embeddings", embeddings, "word2vec text file")->required();
  eval_an->add_option("--dataset", datasets, "': section' headers, a b c d per line")->required();

  std::string run_dir;
  std::string noise;
  std::size_t samples = 20000;
  auto* jsd = app.add_subcommand("jsd", "Jensen-Shannon estimate between a run's data and a noise source");
  jsd->add_option("--run", run_dir, "Output directory of a train run")->required()->check(CLI::ExistingDirectory);
  jsd->add_option("--noise", noise, "Fixed spec, 'data', or the run's generator topology (default: the run's noise)");
  jsd->add_option("--samples", samples, "Pairs drawn from each side")->check(CLI::Range(10000, 100000000));

  theory::VerifyOptions verify_opts;
  std::vector<std::string> checks;
  auto* verify = app.add_subcommand("verify-theory", "Numerical checks of the optimum, PMI and reconstruction results");
  verify->add_option("--sizes", verify_opts.sizes, "Square instance sizes")->delimiter(',');
  verify->add_option("--seeds", verify_opts.seeds, "Random instances per size")->check(CLI::PositiveNumber);
  verify->add_option("--check", checks, "Run only these checks")
      ->check(CLI::IsMember(std::vector<std::string>(theory::kCheckNames.begin(), theory::kCheckNames.end())));
  verify->add_flag("--inject-uncovered", verify_opts.inject_uncovered, "Zero the noise on one data cell");

  std::string table = "f";
  auto* exp = app.add_subcommand("export", "Write one of a run's tables in word2vec text format");
  exp->add_option("--run", run_dir, "Output directory of a train run")->required()->check(CLI::ExistingDirectory);
  exp->add_option("--table", table, "f, g, or their sum")->check(CLI::IsMember({"f", "g", "sum"}));
  exp->add_option("--out", out_path, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*vocab) return cmd_vocab(corpus, min_count, out_path);
    if (*train) return cmd_train(load_run_config(config_file, train->remaining()));
    if (*eval_sim) return cmd_eval_similarity(embeddings, datasets);
    if (*eval_an) return cmd_eval_analogy(embeddings, datasets);
    if (*jsd) return cmd_jsd(run_dir, noise, samples);
    if (*verify) {
      verify_opts.checks.insert(checks.begin(), checks.end());
      return cmd_verify_theory(verify_opts);
    }
    if (*exp) return cmd_export(run_dir, table, out_path);
  } catch (const ConfigError& e) {
    std::cerr << "wcc: " << e.what() << '\n';
    return kUsageError;
  } catch (const ParseError& e) {
    std::cerr << "wcc: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "wcc: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsageError;
}
