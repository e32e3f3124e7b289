#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <vector>

namespace wcc {

struct LbfgsOptions {
  double grad_tol = 1e-8;
  std::size_t max_iters = 10000;
  std::size_t memory = 10;
};

struct LbfgsResult {
  double value = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;  // grad_norm < grad_tol
};

namespace detail {

inline double dot_all(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

// Minimizes a smooth function by L-BFGS with Armijo backtracking, in place.
//   eval(x, grad) -> f(x), filling grad
//   change(x, y)  -> f(y) - f(x), ideally summed term by term so that tiny
//                    decreases stay resolvable next to a large f
// Stops at grad_tol, at max_iters, or when no representable descent is left.
template <class Eval, class Change>
LbfgsResult lbfgs_minimize(std::vector<double>& x, Eval&& eval, Change&& change, const LbfgsOptions& opts = {}) {
  using detail::dot_all;
  const std::size_t n = x.size();
  std::vector<double> grad(n);
  std::vector<double> trial(n);
  std::vector<double> trial_grad(n);
  std::vector<double> dir(n);
  std::deque<std::vector<double>> s_hist;
  std::deque<std::vector<double>> y_hist;
  std::vector<double> alpha(opts.memory);
  LbfgsResult res;
  res.value = eval(x, grad);
  for (res.iterations = 0;; ++res.iterations) {
    res.grad_norm = std::sqrt(dot_all(grad, grad));
    if (res.grad_norm < opts.grad_tol) {
      res.converged = true;
      return res;
    }
    if (res.iterations >= opts.max_iters) return res;

    // Two-loop recursion: dir = -H grad.
    for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
    for (std::size_t j = s_hist.size(); j-- > 0;) {
      alpha[j] = dot_all(s_hist[j], dir) / dot_all(y_hist[j], s_hist[j]);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha[j] * y_hist[j][i];
    }
    if (!s_hist.empty()) {
      const double gamma = dot_all(s_hist.back(), y_hist.back()) / dot_all(y_hist.back(), y_hist.back());
      for (double& v : dir) v *= gamma;
    }
    for (std::size_t j = 0; j < s_hist.size(); ++j) {
      const double beta = dot_all(y_hist[j], dir) / dot_all(y_hist[j], s_hist[j]);
      for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha[j] - beta) * s_hist[j][i];
    }
    double slope = dot_all(grad, dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
      slope = -res.grad_norm * res.grad_norm;
    }

    bool moved = false;
    double decrease = 0.0;
    double step = 1.0;
    for (int tries = 0; tries < 60; ++tries, step *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + step * dir[i];
      decrease = change(x, trial);
      if (decrease <= 1e-4 * step * slope) {
        moved = true;
        break;
      }
    }
    if (!moved) return res;

    const double value = eval(trial, trial_grad);
    std::vector<double> sv(n);
    std::vector<double> yv(n);
    for (std::size_t i = 0; i < n; ++i) {
      sv[i] = trial[i] - x[i];
      yv[i] = trial_grad[i] - grad[i];
    }
    if (dot_all(sv, yv) > 1e-12 * std::sqrt(dot_all(sv, sv) * dot_all(yv, yv))) {
      if (s_hist.size() == opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
      s_hist.push_back(std::move(sv));
      y_hist.push_back(std::move(yv));
    }
    x.swap(trial);
    grad.swap(trial_grad);
    res.value = value;
  }
}

}  // namespace wcc
