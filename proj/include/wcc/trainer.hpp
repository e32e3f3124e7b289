#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "wcc/corpus.hpp"
#include "wcc/error.hpp"
#include "wcc/generator.hpp"
#include "wcc/model.hpp"
#include "wcc/random.hpp"
#include "wcc/sampler.hpp"

namespace wcc {

enum class TrainMode { Deterministic, Performance };

struct TrainConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::uint64_t min_count = 5;
  double subsample_t = 1e-5;
  double lr_classifier = 1.0;
  double lr_sampler = 0.05;
  std::size_t batch_size = 128;
  std::size_t epochs = 20;
  std::size_t k = 5;
  std::size_t n_critic = 1;
  double alpha = 20000.0;
  std::size_t latent_dim = 100;
  std::size_t hidden_dim = 512;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::Deterministic;
  std::size_t threads = 1;
  std::size_t eval_every = 10000;

  bool operator==(const TrainConfig&) const = default;

  void validate() const {
    auto positive = [](bool ok, const char* key) {
      if (!ok) throw ConfigError(std::string("config key '") + key + "' must be positive");
    };
    positive(dim > 0, "dim");
    positive(window > 0, "window");
    positive(min_count > 0, "min_count");
    positive(subsample_t > 0.0, "subsample_t");
    positive(lr_classifier > 0.0, "lr_classifier");
    if (!(lr_sampler >= 0.0)) throw ConfigError("config key 'lr_sampler' must be >= 0");
    positive(batch_size > 0, "batch_size");
    positive(k >= 1, "k");
    positive(n_critic >= 1, "n_critic");
    if (!(alpha >= 1.0)) throw ConfigError("config key 'alpha' must be >= 1");
    positive(latent_dim > 0, "latent_dim");
    positive(hidden_dim > 0, "hidden_dim");
    positive(threads > 0, "threads");
    positive(eval_every > 0, "eval_every");
  }
};

class MetricLog {
 public:
  struct Row {
    std::uint64_t iteration;
    std::string metric;
    double value;
  };

  void add(std::uint64_t iteration, std::string metric, double value) {
    if (!rows_.empty() && iteration < rows_.back().iteration) {
      throw Error("metric log iterations must be nondecreasing");
    }
    rows_.push_back({iteration, std::move(metric), value});
  }

  const std::vector<Row>& rows() const { return rows_; }

  std::vector<Row> series(const std::string& metric) const {
    std::vector<Row> out;
    for (const auto& r : rows_) {
      if (r.metric == metric) out.push_back(r);
    }
    return out;
  }

  void write_csv(std::ostream& out) const {
    out << "iteration,metric,value\n";
    std::string line;
    for (const auto& r : rows_) {
      line = std::to_string(r.iteration) + "," + r.metric + ",";
      append_double(line, r.value);
      out << line << '\n';
    }
  }

 private:
  std::vector<Row> rows_;
};

// Linear decay with a floor of 1e-4 * lr0.
inline double lr_schedule(std::uint64_t step, std::uint64_t total_steps, double lr0) {
  if (step > total_steps) throw Error("lr_schedule: step beyond total_steps");
  if (total_steps == 0) return lr0;
  const double frac = 1.0 - static_cast<double>(step) / static_cast<double>(total_steps);
  return lr0 * std::max(1e-4, frac);
}

struct TrainState {
  std::uint64_t iteration;
  const EmbeddingPair& tables;
  const GeneratorNet* generator;  // null for fixed noise
};

using EvalHook = std::function<void(const TrainState&, MetricLog&)>;

struct TrainResult {
  EmbeddingPair tables;
  MetricLog log;
  std::optional<GeneratorNet> generator;
  std::uint64_t iterations = 0;
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
};

namespace detail {

// Loss and gradient in a single pass; the update is scaled by 1/|positives|
// so the learning rate applies to the batch-mean loss.
inline double classifier_step(EmbeddingPair& tables, const LabeledBatch& batch, double lr) {
  double loss = 0.0;
  for (const Pair& p : batch.positives) loss += softplus(-score(tables.f, tables.g, p.x, p.y));
  for (const Pair& p : batch.negatives) loss += softplus(score(tables.f, tables.g, p.x, p.y));
  const Gradients grads = batch_gradients(tables.f, tables.g, batch);
  sgd_apply(tables, grads, lr / static_cast<double>(batch.positives.size()));
  return loss / static_cast<double>(batch.positives.size());
}

// Lock-free variant: rows are read and written with relaxed atomics, and
// concurrent writers may overwrite each other's updates.
inline double racy_classifier_step(EmbeddingPair& tables, const LabeledBatch& batch, double lr) {
  const std::size_t d = tables.f.dim();
  auto load = [d](EmbeddingTable& t, WordId id, std::vector<double>& buf) {
    auto row = t.row(id);
    buf.resize(d);
    for (std::size_t i = 0; i < d; ++i) buf[i] = std::atomic_ref<double>(row[i]).load(std::memory_order_relaxed);
  };
  Gradients grads{RowGradients(d), RowGradients(d)};
  std::vector<double> fx;
  std::vector<double> gy;
  double loss = 0.0;
  auto visit = [&](const Pair& p, bool positive) {
    load(tables.f, p.x, fx);
    load(tables.g, p.y, gy);
    const double s = dot(fx, gy);
    loss += positive ? softplus(-s) : softplus(s);
    const double coef = score_gradient(s, positive);
    auto df = grads.f.row(p.x);
    auto dg = grads.g.row(p.y);
    for (std::size_t i = 0; i < d; ++i) {
      df[i] += coef * gy[i];
      dg[i] += coef * fx[i];
    }
  };
  for (const Pair& p : batch.positives) visit(p, true);
  for (const Pair& p : batch.negatives) visit(p, false);
  check_finite(grads.f, "f");
  check_finite(grads.g, "g");
  const double scale = lr / static_cast<double>(batch.positives.size());
  auto apply = [&](EmbeddingTable& t, const RowGradients& rows) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto dst = t.row(rows.ids()[r]);
      const auto src = rows.row_at(r);
      for (std::size_t i = 0; i < d; ++i) {
        std::atomic_ref<double> cell(dst[i]);
        cell.store(cell.load(std::memory_order_relaxed) - scale * src[i], std::memory_order_relaxed);
      }
    }
  };
  apply(tables.f, grads.f);
  apply(tables.g, grads.g);
  return loss / static_cast<double>(batch.positives.size());
}

inline std::size_t batch_count(std::size_t pairs, std::size_t batch_size) {
  return (pairs + batch_size - 1) / batch_size;
}

// Snapshot of a row taken with relaxed atomic loads.
inline std::vector<double> snapshot_row(EmbeddingTable& t, WordId id) {
  auto row = t.row(id);
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) out[i] = std::atomic_ref<double>(row[i]).load(std::memory_order_relaxed);
  return out;
}

class LossMeter {
 public:
  void add(double v) {
    sum_ += v;
    ++n_;
  }
  void flush(std::uint64_t iteration, const std::string& name, MetricLog& log) {
    if (n_ == 0) return;
    log.add(iteration, name, sum_ / static_cast<double>(n_));
    sum_ = 0.0;
    n_ = 0;
  }

 private:
  double sum_ = 0.0;
  std::uint64_t n_ = 0;
};

}  // namespace detail

// Negatives come from a fixed context distribution paired with the centers of
// the positive batch.
inline TrainResult train_fixed(std::span<const Pair> pairs, const Vocabulary& vocab, const FixedNoiseSpec& spec,
                               const TrainConfig& cfg, const std::vector<EvalHook>& hooks = {}) {
  cfg.validate();
  Rng init_rng = Rng::derive(cfg.seed, 0);
  TrainResult result{init_embeddings(vocab.size(), cfg.dim, init_rng), {}, std::nullopt};
  const CategoricalSampler sampler = build_fixed_sampler(vocab, spec);
  const std::size_t batches = detail::batch_count(pairs.size(), cfg.batch_size);
  const std::uint64_t total_steps = static_cast<std::uint64_t>(batches) * cfg.epochs;

  auto run_hooks = [&](std::uint64_t it) {
    TrainState state{it, result.tables, nullptr};
    for (const auto& h : hooks) h(state, result.log);
  };

  std::vector<Pair> order(pairs.begin(), pairs.end());
  Rng shuffle_rng = Rng::derive(cfg.seed, 1);
  detail::LossMeter loss;

  if (cfg.mode == TrainMode::Deterministic || cfg.threads == 1) {
    Rng rng = Rng::derive(cfg.seed, 2);
    LabeledBatch batch;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      shuffle_rng.shuffle(std::span<Pair>(order));
      for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t lo = b * cfg.batch_size;
        const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
        batch.positives.assign(order.begin() + static_cast<std::ptrdiff_t>(lo),
                               order.begin() + static_cast<std::ptrdiff_t>(hi));
        batch.negatives.clear();
        for (const Pair& p : batch.positives) {
          for (std::size_t j = 0; j < cfg.k; ++j) batch.negatives.push_back({p.x, sampler.draw(rng)});
        }
        const double lr = lr_schedule(result.iterations, total_steps, cfg.lr_classifier);
        loss.add(detail::classifier_step(result.tables, batch, lr));
        result.positives += batch.positives.size();
        result.negatives += batch.negatives.size();
        ++result.iterations;
        if (result.iterations % cfg.eval_every == 0) {
          loss.flush(result.iterations, "loss", result.log);
          run_hooks(result.iterations);
        }
      }
    }
  } else {
    std::atomic<std::uint64_t> step{0};
    std::atomic<std::uint64_t> positives{0};
    std::atomic<std::uint64_t> negatives{0};
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      shuffle_rng.shuffle(std::span<Pair>(order));
      std::vector<std::thread> workers;
      for (std::size_t w = 0; w < cfg.threads; ++w) {
        workers.emplace_back([&, w] {
          Rng rng = Rng::derive(cfg.seed, 1000 + epoch * cfg.threads + w);
          LabeledBatch batch;
          for (std::size_t b = w; b < batches; b += cfg.threads) {
            const std::size_t lo = b * cfg.batch_size;
            const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
            batch.positives.assign(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                   order.begin() + static_cast<std::ptrdiff_t>(hi));
            batch.negatives.clear();
            for (const Pair& p : batch.positives) {
              for (std::size_t j = 0; j < cfg.k; ++j) batch.negatives.push_back({p.x, sampler.draw(rng)});
            }
            const auto s = std::min(step.fetch_add(1), total_steps);
            detail::racy_classifier_step(result.tables, batch, lr_schedule(s, total_steps, cfg.lr_classifier));
            positives += batch.positives.size();
            negatives += batch.negatives.size();
          }
        });
      }
      for (auto& t : workers) t.join();
    }
    result.iterations = step.load();
    result.positives = positives.load();
    result.negatives = negatives.load();
  }
  loss.flush(result.iterations, "loss", result.log);
  if (result.iterations % cfg.eval_every != 0 || result.iterations == 0) run_hooks(result.iterations);
  return result;
}

// Alternates n_critic classifier steps (negatives drawn from the current
// generator) with one REINFORCE step on the generator.
inline TrainResult train_adaptive(std::span<const Pair> pairs, const Vocabulary& vocab, Topology topology,
                                  const TrainConfig& cfg, const std::vector<EvalHook>& hooks = {}) {
  cfg.validate();
  Rng init_rng = Rng::derive(cfg.seed, 0);
  TrainResult result{init_embeddings(vocab.size(), cfg.dim, init_rng), {}, std::nullopt};
  GeneratorShape shape{topology, vocab.size(), cfg.dim, cfg.latent_dim, cfg.hidden_dim};
  Rng gen_init_rng = Rng::derive(cfg.seed, 3);
  result.generator.emplace(shape, gen_init_rng);
  GeneratorNet& net = *result.generator;

  const std::size_t batches = detail::batch_count(pairs.size(), cfg.batch_size);
  const std::uint64_t total_steps = static_cast<std::uint64_t>(batches) * cfg.epochs;
  result.log.add(0, "n_critic", static_cast<double>(cfg.n_critic));

  auto run_hooks = [&](std::uint64_t it) {
    TrainState state{it, result.tables, &net};
    for (const auto& h : hooks) h(state, result.log);
  };

  std::vector<Pair> order(pairs.begin(), pairs.end());
  Rng shuffle_rng = Rng::derive(cfg.seed, 1);
  Rng gen_rng = Rng::derive(cfg.seed, 4);
  RewardBaseline baseline;
  detail::LossMeter loss;
  detail::LossMeter objective;
  detail::LossMeter entropy;

  auto make_batch = [&](std::size_t b, LabeledBatch& batch, Rng& rng, bool racy) {
    const std::size_t lo = b * cfg.batch_size;
    const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
    batch.positives.assign(order.begin() + static_cast<std::ptrdiff_t>(lo),
                           order.begin() + static_cast<std::ptrdiff_t>(hi));
    batch.negatives.clear();
    ForwardTrace trace;
    for (const Pair& p : batch.positives) {
      std::vector<double> center;
      std::span<const double> input;
      if (net.shape().uses_center()) {
        if (racy) {
          center = detail::snapshot_row(result.tables.f, p.x);
          input = center;
        } else {
          input = result.tables.f.row(p.x);
        }
      }
      for (std::size_t j = 0; j < cfg.k; ++j) {
        const auto eps = net.draw_noise(rng);
        net.forward(input, eps, trace);
        batch.negatives.push_back({p.x, draw_categorical(trace.probs, rng)});
      }
    }
  };

  auto generator_step = [&](std::span<const Pair> positives) {
    std::vector<WordId> centers;
    centers.reserve(positives.size());
    for (const Pair& p : positives) centers.push_back(p.x);
    const GeneratorSampleBatch sample = generate(net, result.tables.f, centers, gen_rng);
    std::vector<double> rewards(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
      rewards[i] = generator_reward(score(result.tables.f, result.tables.g, sample[i].x, sample[i].y));
    }
    const auto stats = reinforce_step(net, result.tables.f, sample, rewards, baseline, cfg.lr_sampler, cfg.alpha);
    objective.add(stats.objective);
    entropy.add(stats.mean_entropy);
  };

  auto checkpoint = [&](std::uint64_t it) {
    loss.flush(it, "loss", result.log);
    objective.flush(it, "generator_objective", result.log);
    entropy.flush(it, "generator_entropy", result.log);
    run_hooks(it);
  };

  if (cfg.mode == TrainMode::Deterministic || cfg.threads == 1) {
    Rng rng = Rng::derive(cfg.seed, 2);
    LabeledBatch batch;
    std::size_t critic_steps = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      shuffle_rng.shuffle(std::span<Pair>(order));
      for (std::size_t b = 0; b < batches; ++b) {
        make_batch(b, batch, rng, false);
        const double lr = lr_schedule(result.iterations, total_steps, cfg.lr_classifier);
        loss.add(detail::classifier_step(result.tables, batch, lr));
        result.positives += batch.positives.size();
        result.negatives += batch.negatives.size();
        ++result.iterations;
        if (++critic_steps == cfg.n_critic) {
          critic_steps = 0;
          generator_step(batch.positives);
        }
        if (result.iterations % cfg.eval_every == 0) checkpoint(result.iterations);
      }
    }
  } else {
    // Each n_critic block runs its classifier batches concurrently; the
    // generator step waits for the whole block.
    std::uint64_t block_id = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      shuffle_rng.shuffle(std::span<Pair>(order));
      for (std::size_t first = 0; first < batches; first += cfg.n_critic) {
        const std::size_t last = std::min(batches, first + cfg.n_critic);
        const std::size_t lanes = std::min(cfg.threads, last - first);
        std::vector<std::thread> workers;
        std::atomic<std::uint64_t> positives{0};
        std::atomic<std::uint64_t> negatives{0};
        const std::uint64_t base_step = result.iterations;
        for (std::size_t w = 0; w < lanes; ++w) {
          workers.emplace_back([&, w] {
            Rng rng = Rng::derive(cfg.seed, 1000 + block_id * lanes + w);
            LabeledBatch batch;
            for (std::size_t b = first + w; b < last; b += lanes) {
              make_batch(b, batch, rng, true);
              const auto s = std::min<std::uint64_t>(base_step + (b - first), total_steps);
              detail::racy_classifier_step(result.tables, batch, lr_schedule(s, total_steps, cfg.lr_classifier));
              positives += batch.positives.size();
              negatives += batch.negatives.size();
            }
          });
        }
        for (auto& t : workers) t.join();
        ++block_id;
        result.positives += positives.load();
        result.negatives += negatives.load();
        const std::uint64_t before = result.iterations;
        result.iterations += last - first;
        const std::size_t lo = (last - 1) * cfg.batch_size;
        const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
        generator_step(std::span<const Pair>(order).subspan(lo, hi - lo));
        if (result.iterations / cfg.eval_every != before / cfg.eval_every) checkpoint(result.iterations);
      }
    }
  }
  if (result.iterations % cfg.eval_every != 0 || result.iterations == 0) checkpoint(result.iterations);
  return result;
}

// Mean over centers x of -sum_y P(y|x) log Q(y|x), with Q marginalised over
// the latent by `latent_draws` Monte Carlo samples.
inline double generator_cross_entropy(const GeneratorNet& net, const EmbeddingTable& f,
                                      const EmpiricalDistribution& data, Rng& rng, std::size_t latent_draws) {
  std::vector<std::vector<std::pair<WordId, double>>> rows(data.x_extent());
  for (const auto& [p, c] : data.joint()) rows[static_cast<std::size_t>(p.x)].push_back({p.y, static_cast<double>(c)});
  double total = 0.0;
  std::size_t centers = 0;
  for (std::size_t x = 0; x < rows.size(); ++x) {
    if (rows[x].empty()) continue;
    const auto q = marginal_conditional(net, f, static_cast<WordId>(x), rng, latent_draws);
    const double nx = static_cast<double>(data.count_x(static_cast<WordId>(x)));
    double ce = 0.0;
    for (const auto& [y, c] : rows[x]) ce -= (c / nx) * std::log(std::max(q[static_cast<std::size_t>(y)], 1e-300));
    total += ce;
    ++centers;
  }
  if (centers == 0) throw Error("generator_cross_entropy: empty data distribution");
  return total / static_cast<double>(centers);
}

}  // namespace wcc
