#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace aiskg {

/// Mergeable (sum, sum of squares, min, max, count) speed statistic, knots.
struct SpeedAccumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  std::uint64_t count = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    min = std::min(min, v);
    max = std::max(max, v);
    ++count;
  }

  void add(std::span<const double> values) {
    for (double v : values) add(v);
  }

  void merge(const SpeedAccumulator& o) {
    if (o.count == 0) return;
    sum += o.sum;
    sum_sq += o.sum_sq;
    min = std::min(min, o.min);
    max = std::max(max, o.max);
    count += o.count;
  }

  bool empty() const { return count == 0; }
  double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }

  // Population variance, sum_sq / n - mean^2.
  double variance() const {
    if (count == 0) return 0.0;
    const double m = mean();
    return sum_sq / static_cast<double>(count) - m * m;
  }

  friend bool operator==(const SpeedAccumulator&, const SpeedAccumulator&) = default;
};

inline SpeedAccumulator accumulate(SpeedAccumulator acc, std::span<const double> samples) {
  acc.add(samples);
  return acc;
}

inline SpeedAccumulator merged(SpeedAccumulator a, const SpeedAccumulator& b) {
  a.merge(b);
  return a;
}

inline bool relatively_equal(double a, double b, double rel) {
  if (a == b) return true;
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

/// Counts, min and max exact; sums within `rel` relative tolerance.
inline bool approx_equal(const SpeedAccumulator& a, const SpeedAccumulator& b, double rel = 1e-9) {
  return a.count == b.count && a.min == b.min && a.max == b.max && relatively_equal(a.sum, b.sum, rel) &&
         relatively_equal(a.sum_sq, b.sum_sq, rel);
}

}  // namespace aiskg
