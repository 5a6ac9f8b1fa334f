#pragma once

#include <cstdint>
#include <span>

namespace mpal {

struct Proportion {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
};

/// Wilson score interval at normal quantile z (1.96 for 95%).
Proportion wilson(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054);

/// Ordinary least-squares slope of y against x.
double ls_slope(std::span<const double> x, std::span<const double> y);

}  // namespace mpal
