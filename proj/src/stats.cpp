#include "mpal/stats.hpp"

#include <algorithm>
#include <cmath>

#include "mpal/error.hpp"

namespace mpal {

Proportion wilson(std::uint64_t successes, std::uint64_t trials, double z) {
  Proportion p;
  p.successes = successes;
  p.trials = trials;
  if (trials == 0) return p;
  const auto n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  p.estimate = phat;
  p.ci_low = std::clamp(center - half, 0.0, 1.0);
  p.ci_high = std::clamp(center + half, 0.0, 1.0);
  if (successes == 0) p.ci_low = 0.0;
  if (successes == trials) p.ci_high = 1.0;
  return p;
}

double ls_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("ls_slope needs two or more points");
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw InvalidInput("ls_slope: x values are all equal");
  return sxy / sxx;
}

}  // namespace mpal
