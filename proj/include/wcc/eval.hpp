#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wcc/corpus.hpp"
#include "wcc/error.hpp"
#include "wcc/generator.hpp"
#include "wcc/model.hpp"
#include "wcc/optimize.hpp"
#include "wcc/random.hpp"
#include "wcc/sampler.hpp"
#include "wcc/text.hpp"

namespace wcc {

struct SimilarityRecord {
  std::string w1;
  std::string w2;
  double human_score = 0.0;
};

struct AnalogyRecord {
  std::array<std::string, 4> words;
  std::string section;
  bool semantic = false;
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace detail

// "w1<TAB>w2<TAB>score"; lines starting with '#' and blank lines are skipped.
// Words are lower-cased to match corpus preprocessing.
inline std::vector<SimilarityRecord> read_similarity(std::istream& in, const std::string& source = "similarity") {
  std::vector<SimilarityRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = view.find('\t', start);
      fields.emplace_back(view.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3) throw ParseError(source, line_no, "expected w1<TAB>w2<TAB>score");
    SimilarityRecord r{detail::lower(fields[0]), detail::lower(fields[1]), 0.0};
    try {
      std::size_t used = 0;
      r.human_score = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(source, line_no, "bad score '" + fields[2] + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline bool is_semantic_section(std::string_view name) {
  static constexpr std::array<std::string_view, 5> kSemantic = {"capital-common-countries", "capital-world",
                                                                  "currency", "city-in-state", "family"};
  return std::find(kSemantic.begin(), kSemantic.end(), name) != kSemantic.end();
}

// Google analogy format: ": section" headers, then four words per line.
inline std::vector<AnalogyRecord> read_analogy(std::istream& in, const std::string& source = "analogy") {
  std::vector<AnalogyRecord> out;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = detail::trim(line);
    if (view.empty()) continue;
    if (view.front() == ':') {
      section = detail::lower(detail::trim(view.substr(1)));
      continue;
    }
    std::istringstream fields{std::string(view)};
    AnalogyRecord r;
    std::string extra;
    for (auto& w : r.words) {
      if (!(fields >> w)) throw ParseError(source, line_no, "expected four words");
      w = detail::lower(w);
    }
    if (fields >> extra) throw ParseError(source, line_no, "expected four words");
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = i + 1; j < 4; ++j) {
        if (r.words[i] == r.words[j]) throw ParseError(source, line_no, "analogy words must be distinct");
      }
    }
    r.section = section;
    r.semantic = is_semantic_section(section);
    out.push_back(std::move(r));
  }
  return out;
}

// Ranks starting at 1; tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("spearman: length mismatch");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

inline double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

// Zero vectors have cosine 0 with everything.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

struct SimilarityResult {
  double rho = 0.0;
  std::size_t covered = 0;
  std::size_t total = 0;
};

inline SimilarityResult spearman_similarity(const EmbeddingTable& f, const Vocabulary& vocab,
                                            std::span<const SimilarityRecord> records) {
  std::vector<double> human;
  std::vector<double> model;
  for (const auto& r : records) {
    const auto a = vocab.find(r.w1);
    const auto b = vocab.find(r.w2);
    if (!a || !b) continue;
    human.push_back(r.human_score);
    model.push_back(cosine(f.row(*a), f.row(*b)));
  }
  if (human.size() < 2) throw Error("similarity: fewer than 2 covered records");
  return {spearman(model, human), human.size(), records.size()};
}

struct AnalogyResult {
  double semantic = 0.0;
  double syntactic = 0.0;
  double total = 0.0;
  std::size_t semantic_covered = 0;
  std::size_t syntactic_covered = 0;
  std::size_t covered = 0;
  std::size_t records = 0;
};

// 3CosAdd: argmax over c not in {w1, w2, w3} of cos(f(w2) - f(w1) + f(w3), f(c)).
inline AnalogyResult analogy_accuracy(const EmbeddingTable& f, const Vocabulary& vocab,
                                      std::span<const AnalogyRecord> records) {
  const std::size_t n = f.rows();
  const std::size_t d = f.dim();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = norm(f.row(static_cast<WordId>(i)));
  AnalogyResult res;
  res.records = records.size();
  std::size_t sem_hits = 0;
  std::size_t syn_hits = 0;
  std::vector<double> target(d);
  for (const auto& r : records) {
    std::array<WordId, 4> ids{};
    bool ok = true;
    for (std::size_t i = 0; i < 4 && ok; ++i) {
      const auto id = vocab.find(r.words[i]);
      ok = id.has_value();
      if (ok) ids[i] = *id;
    }
    if (!ok) continue;
    const auto a = f.row(ids[0]);
    const auto b = f.row(ids[1]);
    const auto c = f.row(ids[2]);
    for (std::size_t j = 0; j < d; ++j) target[j] = b[j] - a[j] + c[j];
    const double tn = norm(target);
    WordId best = -1;
    double best_cos = -std::numeric_limits<double>::infinity();
    for (std::size_t cand = 0; cand < n; ++cand) {
      const auto id = static_cast<WordId>(cand);
      if (id == ids[0] || id == ids[1] || id == ids[2]) continue;
      const double cs = (tn == 0.0 || norms[cand] == 0.0) ? 0.0 : dot(target, f.row(id)) / (tn * norms[cand]);
      if (cs > best_cos) {
        best_cos = cs;
        best = id;
      }
    }
    const bool hit = best == ids[3];
    ++res.covered;
    if (r.semantic) {
      ++res.semantic_covered;
      sem_hits += hit;
    } else {
      ++res.syntactic_covered;
      syn_hits += hit;
    }
  }
  auto ratio = [](std::size_t hits, std::size_t n) { return n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0; };
  res.semantic = ratio(sem_hits, res.semantic_covered);
  res.syntactic = ratio(syn_hits, res.syntactic_covered);
  res.total = ratio(sem_hits + syn_hits, res.covered);
  return res;
}

// Sources of noise pairs for divergence estimates. Every variant supplies a
// context for a given center.
struct DataNoise {};  // resample whole pairs from the positive stream
struct GeneratorNoise {
  const GeneratorNet* net;
  const EmbeddingTable* f;
};
using NoiseModel = std::variant<CategoricalSampler, GeneratorNoise, DataNoise>;

// n noise pairs whose centers come from uniformly drawn positive pairs.
inline std::vector<Pair> draw_noise_pairs(std::span<const Pair> positives, const NoiseModel& noise, std::size_t n,
                                          Rng& rng) {
  if (positives.empty()) throw Error("draw_noise_pairs: empty positive stream");
  std::vector<Pair> out;
  out.reserve(n);
  ForwardTrace trace;
  for (std::size_t i = 0; i < n; ++i) {
    const Pair& anchor = positives[static_cast<std::size_t>(rng.below(positives.size()))];
    if (std::holds_alternative<DataNoise>(noise)) {
      out.push_back(anchor);
    } else if (const auto* sampler = std::get_if<CategoricalSampler>(&noise)) {
      out.push_back({anchor.x, sampler->draw(rng)});
    } else {
      const auto& gen = std::get<GeneratorNoise>(noise);
      const auto eps = gen.net->draw_noise(rng);
      gen.net->forward(center_input(*gen.net, *gen.f, anchor.x), eps, trace);
      out.push_back({anchor.x, draw_categorical(trace.probs, rng)});
    }
  }
  return out;
}

struct ProbeConfig {
  std::size_t samples = 20000;  // pairs drawn from each source
  std::size_t max_iters = 20000;
  double grad_tol = 1e-6;
  std::uint64_t seed = 11;
};

struct JsdResult {
  double estimate = 0.0;   // 0.5 * V(D*) + log 2
  double objective = 0.0;  // V(D*) = E_P log D + E_Q log(1 - D)
  std::size_t iterations = 0;
};

namespace detail {

// Affine map e -> L^{-1}(e - mean) with L L^T the (ridged) covariance of the
// table rows. The bilinear probe family over [e; 1] is closed under invertible
// affine maps, so whitening only improves conditioning.
inline std::vector<std::vector<double>> whitened_rows(const EmbeddingTable& table) {
  const std::size_t n = table.rows();
  const std::size_t d = table.dim();
  std::vector<double> mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = table.row(static_cast<WordId>(r));
    for (std::size_t a = 0; a < d; ++a) mean[a] += row[a] / static_cast<double>(n);
  }
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = table.row(static_cast<WordId>(r));
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b <= a; ++b) cov[a * d + b] += (row[a] - mean[a]) * (row[b] - mean[b]) / static_cast<double>(n);
    }
  }
  double trace = 0.0;
  for (std::size_t a = 0; a < d; ++a) trace += cov[a * d + a];
  const double ridge = trace > 0.0 ? 1e-10 * trace / static_cast<double>(d) : 1.0;
  for (std::size_t a = 0; a < d; ++a) cov[a * d + a] += ridge;
  // In-place lower Cholesky factor.
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double v = cov[a * d + b];
      for (std::size_t c = 0; c < b; ++c) v -= cov[a * d + c] * cov[b * d + c];
      cov[a * d + b] = a == b ? std::sqrt(std::max(v, ridge)) : v / cov[b * d + b];
    }
  }
  std::vector<std::vector<double>> out(n, std::vector<double>(d + 1, 1.0));
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = table.row(static_cast<WordId>(r));
    auto& z = out[r];
    for (std::size_t a = 0; a < d; ++a) {
      double v = row[a] - mean[a];
      for (std::size_t c = 0; c < a; ++c) v -= cov[a * d + c] * z[c];
      z[a] = v / cov[a * d + a];
    }
  }
  return out;
}

}  // namespace detail

// Fits D(x, y) = sigma([e(x); 1]^T W [e(y); 1]) over frozen embeddings e to
// separate the two samples. The objective is concave in W; it is maximized
// with L-BFGS on whitened features; separable samples stop once no
// representable improvement is left.
inline JsdResult jsd_from_samples(std::span<const Pair> data, std::span<const Pair> noise,
                                  const EmbeddingTable& embeddings, const ProbeConfig& cfg = {}) {
  if (data.size() < 10000 || noise.size() < 10000) throw Error("jsd: each source needs at least 10^4 pairs");
  struct Cell {
    WordId x;
    WordId y;
    double p;
    double q;
  };
  std::map<Pair, std::array<double, 2>> weights;
  for (const Pair& p : data) weights[p][0] += 1.0 / static_cast<double>(data.size());
  for (const Pair& p : noise) weights[p][1] += 1.0 / static_cast<double>(noise.size());
  std::vector<Cell> cells;
  cells.reserve(weights.size());
  for (const auto& [p, w] : weights) cells.push_back({p.x, p.y, w[0], w[1]});

  const auto features = detail::whitened_rows(embeddings);
  const std::size_t d = embeddings.dim() + 1;
  auto cell_score = [&](const std::vector<double>& w, std::size_t i) {
    const auto& l = features[cells[i].x];
    const auto& r = features[cells[i].y];
    double s = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      const double* wr = w.data() + a * d;
      double acc = 0.0;
      for (std::size_t b = 0; b < d; ++b) acc += wr[b] * r[b];
      s += l[a] * acc;
    }
    return s;
  };
  auto cell_loss = [&](double s, std::size_t i) {
    double v = 0.0;
    if (cells[i].p > 0.0) v += cells[i].p * softplus(-s);
    if (cells[i].q > 0.0) v += cells[i].q * softplus(s);
    return v;
  };
  // Negated objective and its gradient.
  auto evaluate = [&](const std::vector<double>& w, std::vector<double>& grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const double s = cell_score(w, i);
      loss += cell_loss(s, i);
      const double coef = cells[i].q * sigmoid(s) - cells[i].p * sigmoid(-s);
      const auto& l = features[cells[i].x];
      const auto& r = features[cells[i].y];
      for (std::size_t a = 0; a < d; ++a) {
        const double la = coef * l[a];
        double* gr = grad.data() + a * d;
        for (std::size_t b = 0; b < d; ++b) gr[b] += la * r[b];
      }
    }
    return loss;
  };
  auto change = [&](const std::vector<double>& from, const std::vector<double>& to) {
    double diff = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) diff += cell_loss(cell_score(to, i), i) - cell_loss(cell_score(from, i), i);
    return diff;
  };

  std::vector<double> w(d * d, 0.0);
  LbfgsOptions opts;
  opts.grad_tol = cfg.grad_tol;
  opts.max_iters = cfg.max_iters;
  const LbfgsResult fit = lbfgs_minimize(w, evaluate, change, opts);
  if (!fit.converged && fit.iterations >= cfg.max_iters) {
    throw NumericError("jsd probe did not converge; final objective " + std::to_string(-fit.value) +
                       ", gradient norm " + std::to_string(fit.grad_norm));
  }
  JsdResult res;
  res.iterations = fit.iterations;
  const double loss = fit.value;
  res.objective = -loss;
  res.estimate = 0.5 * res.objective + std::log(2.0);
  return res;
}

// Draws cfg.samples pairs from the positive stream and from `noise`, then
// fits the probe.
inline JsdResult jsd_estimate(std::span<const Pair> positives, const NoiseModel& noise,
                              const EmbeddingTable& embeddings, const ProbeConfig& cfg = {}) {
  if (positives.empty()) throw Error("jsd: empty positive stream");
  Rng rng(cfg.seed);
  std::vector<Pair> data;
  data.reserve(cfg.samples);
  for (std::size_t i = 0; i < cfg.samples; ++i) data.push_back(positives[static_cast<std::size_t>(rng.below(positives.size()))]);
  const auto noise_pairs = draw_noise_pairs(positives, noise, cfg.samples, rng);
  return jsd_from_samples(data, noise_pairs, embeddings, cfg);
}

}  // namespace wcc
