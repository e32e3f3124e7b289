#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wcc/corpus.hpp"
#include "wcc/error.hpp"
#include "wcc/random.hpp"

namespace wcc {

inline double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// log(1 + e^s) without overflow.
inline double softplus(double s) {
  if (s > 0.0) return s + std::log1p(std::exp(-s));
  return std::log1p(std::exp(s));
}

inline double log_sigmoid(double s) { return -softplus(-s); }

// Dense rows x dim table; row i is the embedding of word i.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t rows, std::size_t dim, double fill = 0.0)
      : rows_(rows), dim_(dim), values_(rows * dim, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }

  std::span<double> row(WordId id) { return {values_.data() + offset(id), dim_}; }
  std::span<const double> row(WordId id) const { return {values_.data() + offset(id), dim_}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t offset(WordId id) const {
    const auto i = static_cast<std::size_t>(id);
    if (id < 0 || i >= rows_) throw Error("embedding row " + std::to_string(id) + " out of range");
    return i * dim_;
  }

  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

struct EmbeddingPair {
  EmbeddingTable f;  // center words
  EmbeddingTable g;  // contexts
};

// f uniform in [-0.5/d, 0.5/d], g zero.
inline EmbeddingPair init_embeddings(std::size_t vocab_size, std::size_t dim, Rng& rng) {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
  EmbeddingPair tables{EmbeddingTable(vocab_size, dim), EmbeddingTable(vocab_size, dim)};
  const double half = 0.5 / static_cast<double>(dim);
  for (double& v : tables.f.values()) v = rng.uniform(-half, half);
  return tables;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double score(const EmbeddingTable& f, const EmbeddingTable& g, WordId x, WordId y) {
  if (f.dim() != g.dim()) throw Error("score: embedding dimensions differ");
  return dot(f.row(x), g.row(y));
}

// Positives carry label 1, negatives label 0.
struct LabeledBatch {
  std::vector<Pair> positives;
  std::vector<Pair> negatives;

  bool empty() const { return positives.empty() && negatives.empty(); }
};

// Cross-entropy of the word-context classifier, summed over the batch.
inline double batch_loss(const EmbeddingTable& f, const EmbeddingTable& g, const LabeledBatch& batch) {
  if (batch.empty()) throw Error("batch_loss on an empty batch");
  double loss = 0.0;
  for (const Pair& p : batch.positives) loss += softplus(-score(f, g, p.x, p.y));
  for (const Pair& p : batch.negatives) loss += softplus(score(f, g, p.x, p.y));
  return loss;
}

// d loss / d score for one pair.
inline double score_gradient(double s, bool positive) { return positive ? sigmoid(s) - 1.0 : sigmoid(s); }

// Gradient rows keyed by word id, in first-touch order.
class RowGradients {
 public:
  explicit RowGradients(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  std::span<const WordId> ids() const { return ids_; }

  std::span<double> row(WordId id) {
    auto [it, inserted] = index_.try_emplace(id, ids_.size());
    if (inserted) {
      ids_.push_back(id);
      values_.resize(values_.size() + dim_, 0.0);
    }
    return {values_.data() + it->second * dim_, dim_};
  }

  std::span<const double> row_at(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }

  void clear() {
    ids_.clear();
    values_.clear();
    index_.clear();
  }

 private:
  std::size_t dim_;
  std::vector<WordId> ids_;
  std::vector<double> values_;
  std::unordered_map<WordId, std::size_t> index_;
};

struct Gradients {
  RowGradients f;
  RowGradients g;
};

// All pairs are evaluated at the current parameters, so duplicates simply
// accumulate and the result does not depend on pair order beyond rounding.
inline Gradients batch_gradients(const EmbeddingTable& f, const EmbeddingTable& g, const LabeledBatch& batch) {
  if (batch.empty()) throw Error("batch_gradients on an empty batch");
  Gradients grads{RowGradients(f.dim()), RowGradients(g.dim())};
  auto accumulate = [&](const Pair& p, bool positive) {
    const auto fx = f.row(p.x);
    const auto gy = g.row(p.y);
    const double coef = score_gradient(dot(fx, gy), positive);
    auto df = grads.f.row(p.x);
    auto dg = grads.g.row(p.y);
    for (std::size_t i = 0; i < fx.size(); ++i) {
      df[i] += coef * gy[i];
      dg[i] += coef * fx[i];
    }
  };
  for (const Pair& p : batch.positives) accumulate(p, true);
  for (const Pair& p : batch.negatives) accumulate(p, false);
  return grads;
}

inline void check_finite(const RowGradients& grads, const char* table) {
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (double v : grads.row_at(i)) {
      if (!std::isfinite(v)) {
        throw NumericError(std::string("non-finite gradient in table ") + table + " row " +
                           std::to_string(grads.ids()[i]));
      }
    }
  }
}

// row <- row - lr * grad for touched rows. Nothing is written if any gradient
// is non-finite.
inline void sgd_apply(EmbeddingPair& tables, const Gradients& grads, double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  check_finite(grads.f, "f");
  check_finite(grads.g, "g");
  auto apply = [lr](EmbeddingTable& table, const RowGradients& rows) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto dst = table.row(rows.ids()[i]);
      const auto src = rows.row_at(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] -= lr * src[j];
    }
  };
  apply(tables.f, grads.f);
  apply(tables.g, grads.g);
}

// Shortest round-trip decimal form.
inline void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

// word2vec text format: "V d" header, then "word v1 ... vd" per row.
inline void write_embeddings(std::ostream& out, std::span<const std::string> words, const EmbeddingTable& table) {
  if (words.size() != table.rows()) throw Error("write_embeddings: vocabulary and table sizes differ");
  out << table.rows() << ' ' << table.dim() << '\n';
  std::string line;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    line = words[i];
    for (double v : table.row(static_cast<WordId>(i))) {
      line.push_back(' ');
      append_double(line, v);
    }
    line.push_back('\n');
    out << line;
  }
}

struct LoadedEmbeddings {
  std::vector<std::string> words;
  EmbeddingTable table;
};

inline LoadedEmbeddings read_embeddings(std::istream& in, const std::string& source = "embeddings") {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(source, line_no, "missing 'V d' header");
  std::size_t rows = 0;
  std::size_t dim = 0;
  {
    const char* b = line.data();
    const char* e = b + line.size();
    auto r1 = std::from_chars(b, e, rows);
    if (r1.ec != std::errc() || r1.ptr == e || *r1.ptr != ' ') throw ParseError(source, line_no, "bad header");
    auto r2 = std::from_chars(r1.ptr + 1, e, dim);
    if (r2.ec != std::errc() || r2.ptr != e || dim == 0) throw ParseError(source, line_no, "bad header");
  }
  LoadedEmbeddings out{{}, EmbeddingTable(rows, dim)};
  out.words.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    ++line_no;
    if (!std::getline(in, line)) throw ParseError(source, line_no, "expected " + std::to_string(rows) + " rows");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto space = line.find(' ');
    if (space == std::string::npos || space == 0) throw ParseError(source, line_no, "missing word");
    out.words.push_back(line.substr(0, space));
    auto dst = out.table.row(static_cast<WordId>(r));
    const char* p = line.data() + space;
    const char* e = line.data() + line.size();
    for (std::size_t j = 0; j < dim; ++j) {
      if (p == e || *p != ' ') throw ParseError(source, line_no, "expected " + std::to_string(dim) + " values");
      ++p;
      auto res = std::from_chars(p, e, dst[j]);
      if (res.ec != std::errc()) throw ParseError(source, line_no, "bad value in column " + std::to_string(j + 1));
      p = res.ptr;
    }
    while (p != e && *p == ' ') ++p;
    if (p != e) throw ParseError(source, line_no, "more than " + std::to_string(dim) + " values");
  }
  return out;
}

}  // namespace wcc
