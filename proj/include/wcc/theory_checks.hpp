#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "wcc/error.hpp"
#include "wcc/random.hpp"
#include "wcc/sampler.hpp"
#include "wcc/theory.hpp"

// Randomized small-instance checks of the optimality results, run over a grid
// of sizes and seeds.
namespace wcc::theory {

inline constexpr std::array<std::string_view, 6> kCheckNames = {"optimum", "uniqueness", "coverage",
                                                                "single-term", "pmi", "reconstruction"};

struct CheckRow {
  std::string check;
  std::string instance;
  bool passed = false;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::vector<std::size_t> sizes = {4, 8, 16};
  std::size_t seeds = 5;
  std::set<std::string> checks;  // empty: all
  bool inject_uncovered = false;

  bool wants(std::string_view name) const { return checks.empty() || checks.contains(std::string(name)); }
};

// Sparse random joint over size x size (every row keeps at least one cell),
// weights (U[0.1, 1])^2.
inline Matrix random_joint(std::size_t rows, std::size_t cols, double density, Rng& rng) {
  Matrix p(rows, cols);
  for (std::size_t x = 0; x < rows; ++x) {
    bool any = false;
    for (std::size_t y = 0; y < cols; ++y) {
      if (rng.uniform() < density) {
        const double u = rng.uniform(0.1, 1.0);
        p(x, y) = u * u;
        any = true;
      }
    }
    if (!any) p(x, rng.below(cols)) = 1.0;
  }
  const double total = p.sum();
  for (double& v : p.values) v /= total;
  return p;
}

// Draws N+ positives from `joint`, then k N+ negatives whose centers are taken
// from the positives and whose contexts come from a random fixed Q_Y. Cells
// with data but no noise get one extra noise count so the instance is covered.
inline Instance random_instance(std::size_t size, double n_positive, double k, Rng& rng) {
  const Matrix joint = random_joint(size, size, 0.6, rng);
  Instance inst{sample_counts(joint, static_cast<std::uint64_t>(n_positive), rng), Matrix(size, size)};
  std::vector<double> qy(size);
  for (double& w : qy) w = rng.uniform(0.2, 1.0);
  const CategoricalSampler contexts(qy);
  const CategoricalSampler pairs(inst.positive.values);
  const auto n_negative = static_cast<std::uint64_t>(k * n_positive);
  for (std::uint64_t i = 0; i < n_negative; ++i) {
    const auto x = static_cast<std::size_t>(pairs.draw(rng)) / size;
    inst.negative(x, static_cast<std::size_t>(contexts.draw(rng))) += 1.0;
  }
  for (std::size_t i = 0; i < inst.positive.size(); ++i) {
    if (inst.positive.values[i] > 0.0 && inst.negative.values[i] == 0.0) inst.negative.values[i] = 1.0;
  }
  return inst;
}

// Removes the noise mass from one data cell; returns its flat index.
inline std::size_t uncover_one(Instance& inst) {
  for (std::size_t i = 0; i < inst.positive.size(); ++i) {
    if (inst.positive.values[i] > 0.0) {
      inst.negative.values[i] = 0.0;
      return i;
    }
  }
  throw Error("instance has no data cells");
}

// max |a - b| over cells with positive data mass.
inline double max_diff_on_data(const Instance& inst, const ScoreMatrix& a, const ScoreMatrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < inst.positive.size(); ++i) {
    if (inst.positive.values[i] > 0.0) worst = std::max(worst, std::abs(a.values.values[i] - b.values.values[i]));
  }
  return worst;
}

// Sum over cells of loss(a) - loss(b); accurate even when the totals are large.
inline double loss_difference(const Instance& inst, const ScoreMatrix& a, const ScoreMatrix& b) {
  double diff = 0.0;
  for (std::size_t i = 0; i < inst.positive.size(); ++i) {
    const double nn = inst.negative.values[i];
    if (!(nn > 0.0)) continue;
    const double np = inst.positive.values[i];
    diff += cell_loss(a.values.values[i], nn, np) - cell_loss(b.values.values[i], nn, np);
  }
  return diff;
}

namespace detail {

inline std::string cell_name(const Instance& inst, std::size_t i) {
  return "(" + std::to_string(i / inst.cols()) + ", " + std::to_string(i % inst.cols()) + ")";
}

inline std::string describe(std::size_t size, double n, double k, std::size_t seed) {
  return std::to_string(size) + "x" + std::to_string(size) + " N+=" + std::to_string(static_cast<long long>(n)) +
         " k=" + std::to_string(static_cast<int>(k)) + " seed=" + std::to_string(seed);
}

inline void optimum_rows(const Instance& inst, const std::string& name, std::vector<CheckRow>& rows) {
  CheckRow match{"optimum", name, false, 0.0, 1e-3, ""};
  CheckRow loss{"optimum-loss", name, false, 0.0, 1e-9, ""};
  try {
    const ScoreMatrix closed = optimal_score(inst);
    const MinimizeResult fit = direct_minimize(inst);
    match.residual = max_diff_on_data(inst, fit.scores, closed);
    match.passed = match.residual <= match.tolerance;
    loss.residual = loss_difference(inst, fit.scores, closed);
    loss.passed = loss.residual <= loss.tolerance;
    match.detail = std::to_string(fit.iterations) + " iterations";
  } catch (const Error& e) {
    match.detail = loss.detail = e.what();
    match.residual = loss.residual = INFINITY;
  }
  rows.push_back(match);
  rows.push_back(loss);
}

}  // namespace detail

// P~ = Q~ with N+ = N-: the optimum is the zero matrix.
inline Instance balanced_instance(std::size_t size, Rng& rng) {
  const Matrix joint = random_joint(size, size, 0.6, rng);
  Matrix counts = sample_counts(joint, 1000, rng);
  return Instance{counts, counts};
}

struct ReconstructionStudy {
  std::vector<double> n_values;
  std::vector<double> median_tv;       // median over seeds of TV(P^, P), per n
  double worst_mass_error = 0.0;       // max over seeds of |sum P^ - 1| at the largest n
  double exact_residual = 0.0;         // max |P^ - P| when P~ = P and Q~ = Q exactly
};

// Known 5x5 joint P, noise Q = P_X x uniform, k = 5. Scores are fitted by
// direct minimization on sampled counts, factored exactly into embeddings, and
// mapped back through P^ = exp(<f, g> + log k) Q.
inline ReconstructionStudy reconstruction_study(std::size_t seeds, std::vector<double> n_values = {1e3, 1e4, 1e5}) {
  const std::size_t size = 5;
  const double k = 5.0;
  Rng prng(12345);
  const Matrix p = random_joint(size, size, 0.7, prng);
  Matrix q(size, size);
  for (std::size_t x = 0; x < size; ++x) {
    double px = 0.0;
    for (std::size_t y = 0; y < size; ++y) px += p(x, y);
    for (std::size_t y = 0; y < size; ++y) q(x, y) = px / static_cast<double>(size);
  }

  ReconstructionStudy study;
  study.n_values = n_values;
  {
    Matrix pos = p;
    Matrix neg = q;
    for (double& v : pos.values) v *= 1e4;
    for (double& v : neg.values) v *= k * 1e4;
    const EmbeddingPair t = embed_scores(optimal_score(Instance{pos, neg}));
    const Matrix back = reconstruct_data_distribution(t.f, t.g, k, q);
    for (std::size_t i = 0; i < back.size(); ++i) {
      study.exact_residual = std::max(study.exact_residual, std::abs(back.values[i] - p.values[i]));
    }
  }
  for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
    const double n = n_values[ni];
    std::vector<double> tvs;
    for (std::size_t seed = 0; seed < seeds; ++seed) {
      Rng rng(Rng::derive(777, ni * 1000 + seed));
      Instance inst{sample_counts(p, static_cast<std::uint64_t>(n), rng),
                    sample_counts(q, static_cast<std::uint64_t>(k * n), rng)};
      for (std::size_t i = 0; i < inst.positive.size(); ++i) {
        if (inst.positive.values[i] > 0.0 && inst.negative.values[i] == 0.0) inst.negative.values[i] = 1.0;
      }
      const EmbeddingPair t = embed_scores(direct_minimize(inst).scores);
      const Matrix back = reconstruct_data_distribution(t.f, t.g, k, q);
      tvs.push_back(total_variation(back, p));
      if (ni + 1 == n_values.size()) {
        study.worst_mass_error = std::max(study.worst_mass_error, std::abs(back.sum() - 1.0));
      }
    }
    std::sort(tvs.begin(), tvs.end());
    const std::size_t m = tvs.size();
    study.median_tv.push_back(m % 2 ? tvs[m / 2] : 0.5 * (tvs[m / 2 - 1] + tvs[m / 2]));
  }
  return study;
}

inline std::vector<CheckRow> reconstruction_rows(std::size_t seeds) {
  const ReconstructionStudy st = reconstruction_study(seeds);
  std::vector<CheckRow> rows;
  rows.push_back({"reconstruction-exact", "5x5 k=5", st.exact_residual <= 1e-12, st.exact_residual, 1e-12, ""});
  bool decreasing = true;
  std::string trail;
  for (std::size_t i = 0; i < st.median_tv.size(); ++i) {
    if (i > 0 && !(st.median_tv[i] < st.median_tv[i - 1])) decreasing = false;
    trail += (i ? " > " : "median TV ") + std::to_string(st.median_tv[i]);
  }
  rows.push_back({"reconstruction-tv", "5x5 k=5 " + std::to_string(seeds) + " seeds", decreasing,
                  st.median_tv.back(), 0.0, trail});
  rows.push_back({"reconstruction-mass", "5x5 k=5 n=1e5", st.worst_mass_error <= 0.02, st.worst_mass_error, 0.02,
                  ""});
  return rows;
}

inline std::vector<CheckRow> verify_theory(const VerifyOptions& opts) {
  std::vector<CheckRow> rows;
  for (std::size_t size : opts.sizes) {
    if (size < 2) throw ConfigError("verify-theory: sizes must be at least 2");
  }
  for (const auto& c : opts.checks) {
    if (std::find(kCheckNames.begin(), kCheckNames.end(), c) == kCheckNames.end()) {
      throw ConfigError("verify-theory: unknown check '" + c + "'");
    }
  }

  for (std::size_t size : opts.sizes) {
    for (std::size_t seed = 0; seed < opts.seeds; ++seed) {
      Rng rng(Rng::derive(1000003 * size + seed, 0));
      const double n_positive = std::round(std::pow(10.0, rng.uniform(3.0, 5.0)));
      const double k = seed % 2 == 0 ? 1.0 : 5.0;
      Instance inst = random_instance(size, n_positive, k, rng);
      std::string name = detail::describe(size, n_positive, k, seed);
      if (opts.inject_uncovered) {
        const std::size_t cell = uncover_one(inst);
        name += " uncovered" + detail::cell_name(inst, cell);
      }

      if (opts.wants("optimum")) {
        detail::optimum_rows(inst, name, rows);
        if (seed == 0) {
          Rng brng(Rng::derive(size, 1));
          const Instance balanced = balanced_instance(size, brng);
          CheckRow row{"optimum-balanced", detail::describe(size, 1000, 1, seed), false, 0.0, 1e-6, ""};
          double worst = 0.0;
          const ScoreMatrix closed = optimal_score(balanced);
          const ScoreMatrix fit = direct_minimize(balanced).scores;
          for (std::size_t i = 0; i < balanced.positive.size(); ++i) {
            if (balanced.positive.values[i] > 0.0) {
              worst = std::max({worst, std::abs(closed.values.values[i]), std::abs(fit.values.values[i])});
            }
          }
          row.residual = worst;
          row.passed = worst < row.tolerance;
          rows.push_back(row);
        }
      }

      if (opts.wants("uniqueness")) {
        CheckRow row{"uniqueness", name, false, 0.0, 1e-3, ""};
        try {
          MinimizeOptions a;
          a.init_seed = 2 * seed + 1;
          MinimizeOptions b;
          b.init_seed = 2 * seed + 2;
          row.residual = max_diff_on_data(inst, direct_minimize(inst, a).scores, direct_minimize(inst, b).scores);
          row.passed = row.residual <= row.tolerance;
        } catch (const Error& e) {
          row.detail = e.what();
          row.residual = INFINITY;
        }
        rows.push_back(row);
      }

      if (opts.wants("coverage")) {
        // Both solvers must accept or reject the instance together, and a
        // deliberately uncovered copy must be rejected by both.
        auto rejects = [](auto&& fn) {
          try {
            fn();
          } catch (const CoverageError&) {
            return true;
          }
          return false;
        };
        Instance broken = inst;
        const std::size_t cell = uncover_one(broken);
        const bool closed_ok = !rejects([&] { optimal_score(inst); });
        const bool direct_ok = !rejects([&] { direct_minimize(inst); });
        const bool closed_broken = rejects([&] { optimal_score(broken); });
        const bool direct_broken = rejects([&] { direct_minimize(broken); });
        CheckRow row{"coverage", name, closed_ok == direct_ok && closed_broken && direct_broken, 0.0, 0.0,
                     "uncovered copy at " + detail::cell_name(inst, cell)};
        if (!closed_ok) row.detail = "instance rejected: noise does not cover data";
        rows.push_back(row);
      }

      if (opts.wants("single-term")) {
        CheckRow row{"single-term", name, true, 0.0, 0.0, ""};
        std::size_t cells = 0;
        for (std::size_t i = 0; i < inst.positive.size(); ++i) {
          const double nn = inst.negative.values[i];
          if (inst.positive.values[i] != 0.0 || !(nn > 0.0)) continue;
          ++cells;
          for (int t = 0; t < 20; ++t) {
            const double s = rng.uniform(-30.0, 30.0);
            const double expected = sigmoid(s) * nn;
            row.residual = std::max({row.residual, std::abs(cell_gradient(s, nn, 0.0) - expected),
                                     std::abs(cell_gradient_two_term(s, nn, 0.0) - expected)});
          }
        }
        row.passed = row.residual == 0.0;
        row.detail = std::to_string(cells) + " noise-only cells";
        rows.push_back(row);
      }

      if (opts.wants("pmi")) {
        Matrix joint(size, size);
        std::vector<double> a(size);
        std::vector<double> b(size);
        for (double& v : a) v = rng.uniform(0.1, 1.0);
        for (double& v : b) v = rng.uniform(0.1, 1.0);
        for (std::size_t x = 0; x < size; ++x) {
          for (std::size_t y = 0; y < size; ++y) joint(x, y) = 1000.0 * a[x] * b[y];
        }
        const PmiReport independent = pmi_check(joint, k, false);
        CheckRow row{"pmi-independent", name, false, 0.0, 1e-10, ""};
        const ScoreMatrix s = optimal_score(Instance{joint, unigram_noise_counts(joint, k)});
        for (double v : s.values.values) row.residual = std::max(row.residual, std::abs(v + std::log(k)));
        row.residual = std::max(row.residual, independent.closed_form_residual);
        row.passed = row.residual <= row.tolerance;
        rows.push_back(row);

        if (size == opts.sizes.front()) {
          // Dependent dense 6x6 joint: closed form and trained embeddings.
          Matrix dependent = random_joint(6, 6, 1.0, rng);
          for (double& v : dependent.values) v *= 1e4;
          const PmiReport rep = pmi_check(dependent, k, true);
          const std::string dname = "6x6 dependent k=" + std::to_string(static_cast<int>(k)) + " seed=" +
                                    std::to_string(seed);
          rows.push_back({"pmi-closed-form", dname, rep.closed_form_ok, rep.closed_form_residual, 1e-10, ""});
          rows.push_back({"pmi-trained", dname, rep.trained_ok, rep.trained_residual, 1e-2,
                          std::to_string(rep.iterations) + " iterations"});
        }
      }
    }
  }

  if (opts.wants("reconstruction")) {
    for (const CheckRow& row : reconstruction_rows(20)) rows.push_back(row);
  }
  return rows;
}

}  // namespace wcc::theory
