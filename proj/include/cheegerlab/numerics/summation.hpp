#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace cheegerlab::numerics {

/// Pairwise (cascade) summation in a fixed left-to-right tree order.
/// The result depends only on the input order, never on how it was produced.
inline double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 16;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Inclusive prefix sums with compensation; out[i] = v[0] + ... + v[i].
inline std::vector<double> compensated_prefix_sums(std::span<const double> values) {
  std::vector<double> out(values.size());
  CompensatedSum acc;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc.add(values[i]);
    out[i] = acc.value();
  }
  return out;
}

} // namespace cheegerlab::numerics
