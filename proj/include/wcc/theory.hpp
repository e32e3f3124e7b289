#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wcc/corpus.hpp"
#include "wcc/error.hpp"
#include "wcc/model.hpp"
#include "wcc/optimize.hpp"
#include "wcc/random.hpp"
#include "wcc/sampler.hpp"

namespace wcc::theory {

inline std::string format_residual(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Dense |X| x |Y| matrix, row-major.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t x, std::size_t y) { return values[x * cols + y]; }
  double operator()(std::size_t x, std::size_t y) const { return values[x * cols + y]; }
  std::size_t size() const { return values.size(); }

  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
};

// Pair counts of the positive and negative samples. Entry (x, y) of
// `positive` is N+ * P~(x, y); entry of `negative` is N- * Q~(x, y). Counts may
// be fractional when an exact expectation stands in for a sample.
struct Instance {
  Matrix positive;
  Matrix negative;

  std::size_t rows() const { return positive.rows; }
  std::size_t cols() const { return positive.cols; }
  double n_positive() const { return positive.sum(); }
  double n_negative() const { return negative.sum(); }

  static Instance from_counts(const EmpiricalDistribution& plus, const EmpiricalDistribution& minus, std::size_t rows,
                              std::size_t cols) {
    Instance inst{Matrix(rows, cols), Matrix(rows, cols)};
    auto fill = [&](const EmpiricalDistribution& d, Matrix& m) {
      for (const auto& [p, c] : d.joint()) {
        if (static_cast<std::size_t>(p.x) >= rows || static_cast<std::size_t>(p.y) >= cols) {
          throw Error("instance: pair outside the declared " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " grid");
        }
        m(static_cast<std::size_t>(p.x), static_cast<std::size_t>(p.y)) = static_cast<double>(c);
      }
    };
    fill(plus, inst.positive);
    fill(minus, inst.negative);
    return inst;
  }
};

// Score matrix over X x Y; only cells in Supp(Q~) are defined.
struct ScoreMatrix {
  // Stand-in for -infinity on cells with P~ = 0; sigma(-40) < 1e-17.
  static constexpr double kNegativeSentinel = -40.0;

  Matrix values;
  std::vector<unsigned char> defined;

  ScoreMatrix() = default;
  ScoreMatrix(std::size_t r, std::size_t c) : values(r, c), defined(r * c, 0) {}

  std::size_t rows() const { return values.rows; }
  std::size_t cols() const { return values.cols; }
  double operator()(std::size_t x, std::size_t y) const { return values(x, y); }
  double& operator()(std::size_t x, std::size_t y) { return values(x, y); }
  bool is_defined(std::size_t x, std::size_t y) const { return defined[x * values.cols + y] != 0; }
};

// Rejects instances where some cell has data but no noise.
inline void check_coverage(const Instance& inst) {
  if (inst.positive.rows != inst.negative.rows || inst.positive.cols != inst.negative.cols) {
    throw Error("instance: positive and negative grids differ");
  }
  for (std::size_t x = 0; x < inst.rows(); ++x) {
    for (std::size_t y = 0; y < inst.cols(); ++y) {
      if (inst.positive(x, y) > 0.0 && !(inst.negative(x, y) > 0.0)) {
        throw CoverageError(static_cast<int>(x), static_cast<int>(y));
      }
    }
  }
  if (!(inst.n_positive() > 0.0) || !(inst.n_negative() > 0.0)) throw Error("instance: empty sample");
}

// s*(x, y) = log(P~/Q~) + log(N+/N-) on Supp(Q~); the sentinel where P~ = 0.
inline ScoreMatrix optimal_score(const Instance& inst) {
  check_coverage(inst);
  const double np = inst.n_positive();
  const double nn = inst.n_negative();
  ScoreMatrix s(inst.rows(), inst.cols());
  for (std::size_t x = 0; x < inst.rows(); ++x) {
    for (std::size_t y = 0; y < inst.cols(); ++y) {
      const double q = inst.negative(x, y) / nn;
      if (!(q > 0.0)) continue;
      s.defined[x * inst.cols() + y] = 1;
      const double p = inst.positive(x, y) / np;
      s(x, y) = p > 0.0 ? std::log(p / q) + std::log(np / nn) : ScoreMatrix::kNegativeSentinel;
    }
  }
  return s;
}

// d loss / d s for one cell, given N- Q~ and N+ P~ at that cell:
//   sigma(s) (N- Q~ - e^{-s} N+ P~)
// evaluated as sigma(s) N- Q~ - sigma(-s) N+ P~, which is the same quantity
// without the overflow of e^{-s}.
inline double cell_gradient(double s, double negative_mass, double positive_mass) {
  const double neg = sigmoid(s) * negative_mass;
  if (positive_mass == 0.0) return neg;
  return neg - sigmoid(-s) * positive_mass;
}

// Literal two-term form; overflows for very negative s.
inline double cell_gradient_two_term(double s, double negative_mass, double positive_mass) {
  return sigmoid(s) * (negative_mass - std::exp(-s) * positive_mass);
}

inline double cell_loss(double s, double negative_mass, double positive_mass) {
  double l = 0.0;
  if (positive_mass != 0.0) l += positive_mass * softplus(-s);
  if (negative_mass != 0.0) l += negative_mass * softplus(s);
  return l;
}

// Classifier loss as a function of the free score matrix (defined cells only).
inline double score_loss(const Instance& inst, const ScoreMatrix& s) {
  double total = 0.0;
  for (std::size_t x = 0; x < inst.rows(); ++x) {
    for (std::size_t y = 0; y < inst.cols(); ++y) {
      if (s.is_defined(x, y)) total += cell_loss(s(x, y), inst.negative(x, y), inst.positive(x, y));
    }
  }
  return total;
}

inline Matrix score_gradient_matrix(const Instance& inst, const ScoreMatrix& s) {
  Matrix g(inst.rows(), inst.cols());
  for (std::size_t x = 0; x < inst.rows(); ++x) {
    for (std::size_t y = 0; y < inst.cols(); ++y) {
      if (s.is_defined(x, y)) g(x, y) = cell_gradient(s(x, y), inst.negative(x, y), inst.positive(x, y));
    }
  }
  return g;
}

struct MinimizeOptions {
  double grad_tol = 1e-8;
  // Stop only once the Newton decrement also certifies the loss is within
  // this amount of the infimum.
  double loss_gap_tol = 1e-12;
  std::size_t max_iters = 100000;
  std::optional<std::uint64_t> init_seed;  // zeros when unset
};

struct MinimizeResult {
  ScoreMatrix scores;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
};

// Minimizes the loss over one free parameter per cell of Supp(Q~), using the
// per-cell derivative above scaled by the per-cell curvature, with Armijo
// backtracking.
inline MinimizeResult direct_minimize(const Instance& inst, const MinimizeOptions& opts = {}) {
  check_coverage(inst);
  if (inst.rows() * inst.cols() > 10000) throw Error("direct_minimize: instance larger than 10^4 cells");
  const std::size_t r = inst.rows();
  const std::size_t c = inst.cols();
  MinimizeResult res{ScoreMatrix(r, c)};
  ScoreMatrix& s = res.scores;
  std::optional<Rng> rng;
  if (opts.init_seed) rng.emplace(*opts.init_seed);
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < r * c; ++i) {
    if (inst.negative.values[i] > 0.0) {
      s.defined[i] = 1;
      s.values.values[i] = rng ? rng->normal() : 0.0;
      cells.push_back(i);
    }
  }
  std::vector<double> grad(r * c, 0.0);
  std::vector<double> dir(r * c, 0.0);
  for (res.iterations = 0;; ++res.iterations) {
    double norm2 = 0.0;
    double decrement = 0.0;
    for (auto i : cells) {
      const double si = s.values.values[i];
      const double np = inst.positive.values[i];
      const double nn = inst.negative.values[i];
      grad[i] = cell_gradient(si, nn, np);
      const double curv = sigmoid(si) * sigmoid(-si) * (np + nn);
      // Newton step, capped where the logistic curvature is nearly flat.
      dir[i] = std::clamp(-grad[i] / std::max(curv, 1e-300), -10.0, 10.0);
      norm2 += grad[i] * grad[i];
      decrement -= grad[i] * dir[i];
    }
    res.grad_norm = std::sqrt(norm2);
    if (res.grad_norm < opts.grad_tol && 0.5 * decrement < opts.loss_gap_tol) break;
    if (res.iterations >= opts.max_iters) {
      throw NumericError("direct_minimize did not converge: gradient norm " + format_residual(res.grad_norm) +
                         " after " + std::to_string(res.iterations) + " iterations");
    }
    // The loss is a sum of independent per-cell terms, so each cell gets its
    // own Armijo backtracking; a shared step would let one badly scaled cell
    // throttle all the others.
    for (auto i : cells) {
      const double si = s.values.values[i];
      const double np = inst.positive.values[i];
      const double nn = inst.negative.values[i];
      const double base = cell_loss(si, nn, np);
      const double slope = grad[i] * dir[i];
      // Near the optimum the loss change drops below the resolution of a
      // large loss value. A step that halves the derivative is then accepted
      // if it keeps the derivative's sign (a strict decrease on a convex cell)
      // or if the loss change is lost in rounding anyway.
      for (double step = 1.0; step > 1e-20; step *= 0.5) {
        const double next = si + step * dir[i];
        const double g_next = cell_gradient(next, nn, np);
        const double change = cell_loss(next, nn, np) - base;
        const bool contracts = std::abs(g_next) <= 0.5 * std::abs(grad[i]);
        const bool unresolved = std::abs(change) <= 64 * std::numeric_limits<double>::epsilon() * base;
        if (change <= 1e-4 * step * slope || (contracts && (g_next * grad[i] >= 0.0 || unresolved))) {
          s.values.values[i] = next;
          break;
        }
      }
    }
  }
  res.loss = score_loss(inst, s);
  return res;
}

// Noise counts k * N+ * P~_X(x) * P~_Y(y): unigram context noise in exact
// expectation.
inline Matrix unigram_noise_counts(const Matrix& positive, double k) {
  const double n = positive.sum();
  std::vector<double> px(positive.rows, 0.0);
  std::vector<double> py(positive.cols, 0.0);
  for (std::size_t x = 0; x < positive.rows; ++x) {
    for (std::size_t y = 0; y < positive.cols; ++y) {
      px[x] += positive(x, y) / n;
      py[y] += positive(x, y) / n;
    }
  }
  Matrix neg(positive.rows, positive.cols);
  for (std::size_t x = 0; x < positive.rows; ++x) {
    for (std::size_t y = 0; y < positive.cols; ++y) neg(x, y) = k * n * px[x] * py[y];
  }
  return neg;
}

// log(P~(x,y) / (P~_X(x) P~_Y(y))) - log k on Supp(P~); NaN elsewhere.
inline Matrix shifted_pmi(const Matrix& positive, double k) {
  const double n = positive.sum();
  std::vector<double> px(positive.rows, 0.0);
  std::vector<double> py(positive.cols, 0.0);
  for (std::size_t x = 0; x < positive.rows; ++x) {
    for (std::size_t y = 0; y < positive.cols; ++y) {
      px[x] += positive(x, y) / n;
      py[y] += positive(x, y) / n;
    }
  }
  Matrix pmi(positive.rows, positive.cols, std::nan(""));
  for (std::size_t x = 0; x < positive.rows; ++x) {
    for (std::size_t y = 0; y < positive.cols; ++y) {
      const double p = positive(x, y) / n;
      if (p > 0.0) pmi(x, y) = std::log(p / (px[x] * py[y])) - std::log(k);
    }
  }
  return pmi;
}

struct FactorizeOptions {
  std::size_t dim = 0;  // 0: min(|X|, |Y|)
  std::uint64_t seed = 7;
  double grad_tol = 1e-8;
  // A line-search stall is accepted below this: the remaining decrease is
  // then under what double-precision sums over cells can resolve.
  double stall_tol = 1e-6;
  std::size_t max_iters = 20000;
};

struct FactorizeResult {
  EmbeddingPair tables;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
};

// Fits f, g to the exact expected loss (counts normalised by N+) with L-BFGS.
inline FactorizeResult factorize(const Instance& inst, const FactorizeOptions& opts = {}) {
  check_coverage(inst);
  const std::size_t r = inst.rows();
  const std::size_t c = inst.cols();
  const std::size_t d = opts.dim ? opts.dim : std::min(r, c);
  const double norm = inst.n_positive();
  Rng rng(opts.seed);
  // Parameters: f rows, then g rows.
  std::vector<double> params((r + c) * d);
  for (double& v : params) v = 0.1 * rng.normal();
  auto f_row = [&](const std::vector<double>& p, std::size_t x) { return std::span<const double>(p.data() + x * d, d); };
  auto g_row = [&](const std::vector<double>& p, std::size_t y) {
    return std::span<const double>(p.data() + (r + y) * d, d);
  };

  auto evaluate = [&](const std::vector<double>& p, std::vector<double>& grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double total = 0.0;
    for (std::size_t x = 0; x < r; ++x) {
      const auto fx = f_row(p, x);
      for (std::size_t y = 0; y < c; ++y) {
        if (!(inst.negative(x, y) > 0.0)) continue;
        const auto gy = g_row(p, y);
        const double s = dot(fx, gy);
        const double nn = inst.negative(x, y) / norm;
        const double np = inst.positive(x, y) / norm;
        total += cell_loss(s, nn, np);
        const double coef = cell_gradient(s, nn, np);
        double* dfx = grad.data() + x * d;
        double* dgy = grad.data() + (r + y) * d;
        for (std::size_t i = 0; i < d; ++i) {
          dfx[i] += coef * gy[i];
          dgy[i] += coef * fx[i];
        }
      }
    }
    return total;
  };
  // Summed cell by cell, which keeps precision once the change is far below
  // the size of the loss itself.
  auto change = [&](const std::vector<double>& from, const std::vector<double>& to) {
    double diff = 0.0;
    for (std::size_t x = 0; x < r; ++x) {
      for (std::size_t y = 0; y < c; ++y) {
        if (!(inst.negative(x, y) > 0.0)) continue;
        const double nn = inst.negative(x, y) / norm;
        const double np = inst.positive(x, y) / norm;
        diff += cell_loss(dot(f_row(to, x), g_row(to, y)), nn, np) - cell_loss(dot(f_row(from, x), g_row(from, y)), nn, np);
      }
    }
    return diff;
  };

  LbfgsOptions lopts;
  lopts.grad_tol = opts.grad_tol;
  lopts.max_iters = opts.max_iters;
  const LbfgsResult fit = lbfgs_minimize(params, evaluate, change, lopts);
  const bool stalled = fit.iterations < opts.max_iters && fit.grad_norm < opts.stall_tol;
  if (!fit.converged && !stalled) {
    throw NumericError("factorize did not converge: gradient norm " + format_residual(fit.grad_norm) + " after " +
                       std::to_string(fit.iterations) + " iterations");
  }
  FactorizeResult res{{EmbeddingTable(r, d), EmbeddingTable(c, d)}};
  std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(r * d), res.tables.f.values().begin());
  std::copy(params.begin() + static_cast<std::ptrdiff_t>(r * d), params.end(), res.tables.g.values().begin());
  res.loss = fit.value;
  res.grad_norm = fit.grad_norm;
  res.iterations = fit.iterations;
  return res;
}

inline Matrix inner_products(const EmbeddingTable& f, const EmbeddingTable& g) {
  Matrix m(f.rows(), g.rows());
  for (std::size_t x = 0; x < f.rows(); ++x) {
    for (std::size_t y = 0; y < g.rows(); ++y) m(x, y) = dot(f.row(static_cast<WordId>(x)), g.row(static_cast<WordId>(y)));
  }
  return m;
}

struct PmiReport {
  double closed_form_residual = 0.0;  // max |s* - shifted PMI| on Supp(P~)
  double trained_residual = 0.0;      // max |<f, g> - shifted PMI| on Supp(P~)
  std::size_t iterations = 0;
  bool closed_form_ok = false;
  bool trained_ok = false;
  bool passed() const { return closed_form_ok && trained_ok; }
};

// Unigram context noise with N- = k N+: the optimal scores are the shifted
// PMI matrix, and full-rank embeddings reach it.
inline PmiReport pmi_check(const Matrix& positive_counts, double k, bool train_embeddings = true,
                           double closed_tol = 1e-10, double trained_tol = 1e-2) {
  if (!(k > 0.0)) throw ConfigError("pmi_check: k must be positive");
  Instance inst{positive_counts, unigram_noise_counts(positive_counts, k)};
  const ScoreMatrix s = optimal_score(inst);
  const Matrix pmi = shifted_pmi(positive_counts, k);
  PmiReport rep;
  for (std::size_t i = 0; i < pmi.size(); ++i) {
    if (!std::isnan(pmi.values[i])) {
      rep.closed_form_residual = std::max(rep.closed_form_residual, std::abs(s.values.values[i] - pmi.values[i]));
    }
  }
  rep.closed_form_ok = rep.closed_form_residual <= closed_tol;
  if (train_embeddings) {
    const FactorizeResult fit = factorize(inst);
    rep.iterations = fit.iterations;
    const Matrix trained = inner_products(fit.tables.f, fit.tables.g);
    for (std::size_t i = 0; i < pmi.size(); ++i) {
      if (!std::isnan(pmi.values[i])) {
        rep.trained_residual = std::max(rep.trained_residual, std::abs(trained.values[i] - pmi.values[i]));
      }
    }
    rep.trained_ok = rep.trained_residual <= trained_tol;
  } else {
    rep.trained_ok = true;
  }
  return rep;
}

// P^(x, y) = exp(<f(x), g(y)> + log k) * Q(x, y).
inline Matrix reconstruct_data_distribution(const EmbeddingTable& f, const EmbeddingTable& g, double k,
                                            const Matrix& noise) {
  if (f.rows() != noise.rows || g.rows() != noise.cols) throw Error("reconstruct: noise grid does not match tables");
  Matrix p(noise.rows, noise.cols);
  for (std::size_t x = 0; x < noise.rows; ++x) {
    for (std::size_t y = 0; y < noise.cols; ++y) {
      if (noise(x, y) == 0.0) continue;
      p(x, y) = std::exp(dot(f.row(static_cast<WordId>(x)), g.row(static_cast<WordId>(y))) + std::log(k)) * noise(x, y);
    }
  }
  return p;
}

// Exact factorization of a score matrix: f(x) = s(x, .), g(y) = e_y.
// Undefined cells map to the sentinel.
inline EmbeddingPair embed_scores(const ScoreMatrix& s) {
  EmbeddingPair t{EmbeddingTable(s.rows(), s.cols()), EmbeddingTable(s.cols(), s.cols())};
  for (std::size_t x = 0; x < s.rows(); ++x) {
    auto fx = t.f.row(static_cast<WordId>(x));
    for (std::size_t y = 0; y < s.cols(); ++y) fx[y] = s.is_defined(x, y) ? s(x, y) : ScoreMatrix::kNegativeSentinel;
  }
  for (std::size_t y = 0; y < s.cols(); ++y) t.g.row(static_cast<WordId>(y))[y] = 1.0;
  return t;
}

inline double total_variation(const Matrix& a, const Matrix& b) {
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a.values[i] - b.values[i]);
  return 0.5 * tv;
}

// Multinomial sample of n draws from a probability matrix.
inline Matrix sample_counts(const Matrix& probs, std::uint64_t n, Rng& rng) {
  const CategoricalSampler sampler(probs.values);
  Matrix counts(probs.rows, probs.cols);
  for (std::uint64_t i = 0; i < n; ++i) counts.values[static_cast<std::size_t>(sampler.draw(rng))] += 1.0;
  return counts;
}

}  // namespace wcc::theory
