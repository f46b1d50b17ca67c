#include "medverify/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "medverify/error.hpp"

namespace medv::bench {

std::size_t nearest_rank(double p, std::size_t count) {
  // The epsilon absorbs representation error in p, e.g. (1 - 0.95) / 2.
  const double raw = std::ceil(p * static_cast<double>(count) - 1e-9);
  const auto rank = static_cast<std::size_t>(std::max(raw, 1.0));
  return std::min(rank, count);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptySample, "mean of an empty sample");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

Interval bootstrap_ci(std::span<const double> values, std::size_t iterations, double level,
                      std::uint64_t seed) {
  if (values.empty()) throw Error(ErrorCode::EmptySample, "bootstrap of an empty sample");
  if (iterations == 0) throw Error(ErrorCode::InvalidArgument, "bootstrap iterations must be >= 1");
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "confidence level must be in (0,1), got " + std::to_string(level));
  }
  const std::size_t n = values.size();
  // Every resample of a constant sample has the same mean; report it exactly
  // rather than as a rounded sum.
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
    return Interval{values.front(), values.front()};
  }
  std::mt19937_64 rng(seed);
  std::vector<double> means(iterations);
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += values[rng() % n];
    m = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  return Interval{means[nearest_rank(tail, iterations) - 1], means[nearest_rank(1.0 - tail, iterations) - 1]};
}

}  // namespace medv::bench
