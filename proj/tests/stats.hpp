#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace wcc::testing {

// Upper-tail p-value of Pearson's chi-squared statistic for observed counts
// against expected probabilities.
inline double chi_squared_p_value(std::span<const std::uint64_t> observed, std::span<const double> probs) {
  double n = 0.0;
  for (auto c : observed) n += static_cast<double>(c);
  double stat = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = n * probs[i];
    if (e <= 0.0) continue;
    const double diff = static_cast<double>(observed[i]) - e;
    stat += diff * diff / e;
    ++cells;
  }
  if (cells < 2) return 1.0;
  boost::math::chi_squared dist(static_cast<double>(cells - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace wcc::testing
