#pragma once

#include <cstdint>
#include <span>

namespace medv::bench {

struct BootstrapSettings {
  std::size_t iterations = 2000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Percentile bootstrap CI of the mean: `iterations` resamples of size n drawn
// with replacement (mt19937_64 seeded with `seed`, index = draw mod n), then
// the nearest-rank (1-level)/2 and 1-(1-level)/2 percentiles of the resample
// means. Throws EmptySample for empty input and InvalidArgument when
// iterations == 0 or level is outside (0,1).
Interval bootstrap_ci(std::span<const double> values, std::size_t iterations, double level,
                      std::uint64_t seed);

inline Interval bootstrap_ci(std::span<const double> values, const BootstrapSettings& s) {
  return bootstrap_ci(values, s.iterations, s.level, s.seed);
}

// 1-based nearest rank of percentile p among `count` sorted values.
std::size_t nearest_rank(double p, std::size_t count);

double mean(std::span<const double> values);

}  // namespace medv::bench
