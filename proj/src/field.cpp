#include "mpal/field.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>

#include "mpal/error.hpp"
#include "mpal/kernels.hpp"
#include "mpal/rng.hpp"

namespace mpal {

double BaseLaw::quantile(double u) const {
  switch (kind) {
    case BaseKind::uniform:
      return a * u;
    case BaseKind::exponential: {
      const double mass = -std::expm1(-rate * vmax);
      return std::min(vmax, -std::log1p(-u * mass) / rate);
    }
    case BaseKind::constant:
      return value;
  }
  return 0.0;
}

double BaseLaw::mean() const {
  switch (kind) {
    case BaseKind::uniform:
      return a / 2.0;
    case BaseKind::exponential: {
      const double mass = -std::expm1(-rate * vmax);
      return 1.0 / rate - vmax * std::exp(-rate * vmax) / mass;
    }
    case BaseKind::constant:
      return value;
  }
  return 0.0;
}

double BaseLaw::variance() const {
  switch (kind) {
    case BaseKind::uniform:
      return a * a / 12.0;
    case BaseKind::exponential: {
      const double mass = -std::expm1(-rate * vmax);
      const double tail = std::exp(-rate * vmax);
      const double second =
          (2.0 / (rate * rate) - tail * (vmax * vmax + 2.0 * vmax / rate + 2.0 / (rate * rate))) / mass;
      const double m = mean();
      return second - m * m;
    }
    case BaseKind::constant:
      return 0.0;
  }
  return 0.0;
}

double BaseLaw::sup() const {
  switch (kind) {
    case BaseKind::uniform: return a;
    case BaseKind::exponential: return vmax;
    case BaseKind::constant: return value;
  }
  return 0.0;
}

double BaseLaw::inf() const { return kind == BaseKind::constant ? value : 0.0; }

FieldSpec FieldSpec::iid(int d, BaseLaw base, std::uint64_t seed) {
  FieldSpec s;
  s.d = d;
  s.base = base;
  s.kernel = {KernelTap{std::vector<Coord>(static_cast<std::size_t>(d), 0), 1.0}};
  s.seed = seed;
  return s;
}

FieldSpec FieldSpec::box(int d, int radius, BaseLaw base, std::uint64_t seed) {
  FieldSpec s;
  s.d = d;
  s.base = base;
  s.seed = seed;
  s.kernel.clear();
  const Box b = Box::cube(d, radius);
  std::vector<Coord> u(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < b.size(); ++i) {
    b.coords_of(i, u);
    s.kernel.push_back(KernelTap{u, 1.0});
  }
  return s;
}

void FieldSpec::validate() const {
  if (d < 1) throw InvalidInput("field dimension must be positive");
  if (kernel.empty()) throw InvalidInput("field kernel is empty");
  bool has_origin = false;
  for (const auto& tap : kernel) {
    if (tap.offset.size() != static_cast<std::size_t>(d)) throw InvalidInput("kernel offset has wrong dimension");
    if (!(tap.weight >= 0.0) || !std::isfinite(tap.weight)) throw InvalidInput("kernel weights must be finite and >= 0");
    if (std::all_of(tap.offset.begin(), tap.offset.end(), [](Coord c) { return c == 0; })) {
      has_origin = has_origin || tap.weight > 0.0;
    }
  }
  if (!has_origin) throw InvalidInput("kernel(0) must be positive");
  switch (base.kind) {
    case BaseKind::uniform:
      if (!(base.a >= 0.0)) throw InvalidInput("uniform base needs a >= 0");
      break;
    case BaseKind::exponential:
      if (!(base.rate > 0.0) || !(base.vmax > 0.0)) throw InvalidInput("exponential base needs rate > 0 and vmax > 0");
      break;
    case BaseKind::constant:
      if (!(base.value >= 0.0)) throw InvalidInput("constant base must be >= 0");
      break;
  }
}

Coord FieldSpec::kernel_radius() const {
  Coord r = 0;
  for (const auto& tap : kernel) r = std::max(r, max_norm(tap.offset));
  return r;
}

double FieldSpec::kernel_weight_sum() const {
  double s = 0.0;
  for (const auto& tap : kernel) s += tap.weight;
  return s;
}

double FieldSpec::covariance(std::span<const Coord> lag) const {
  if (lag.size() != static_cast<std::size_t>(d)) throw InvalidInput("lag has wrong dimension");
  double s = 0.0;
  std::vector<Coord> shifted(static_cast<std::size_t>(d));
  for (const auto& a : kernel) {
    for (std::size_t k = 0; k < shifted.size(); ++k) shifted[k] = a.offset[k] + lag[k];
    for (const auto& b : kernel) {
      if (b.offset == shifted) s += a.weight * b.weight;
    }
  }
  return s * base.variance();
}

Box Box::cube(int d, Coord radius) {
  return Box{std::vector<Coord>(static_cast<std::size_t>(d), -radius),
             std::vector<Coord>(static_cast<std::size_t>(d), radius)};
}

Box Box::around(std::span<const Coord> center, Coord radius) {
  Box b;
  for (Coord c : center) {
    b.lo.push_back(c - radius);
    b.hi.push_back(c + radius);
  }
  return b;
}

std::size_t Box::size() const {
  std::size_t s = 1;
  for (std::size_t k = 0; k < lo.size(); ++k) {
    if (hi[k] < lo[k]) return 0;
    s *= static_cast<std::size_t>(hi[k] - lo[k] + 1);
  }
  return lo.empty() ? 0 : s;
}

bool Box::contains(std::span<const Coord> x) const {
  if (x.size() != lo.size()) return false;
  for (std::size_t k = 0; k < lo.size(); ++k) {
    if (x[k] < lo[k] || x[k] > hi[k]) return false;
  }
  return true;
}

bool Box::contains(const Box& o) const {
  if (o.lo.size() != lo.size()) return false;
  for (std::size_t k = 0; k < lo.size(); ++k) {
    if (o.lo[k] < lo[k] || o.hi[k] > hi[k]) return false;
  }
  return true;
}

std::size_t Box::index_of(std::span<const Coord> x) const {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < lo.size(); ++k) {
    idx = idx * static_cast<std::size_t>(hi[k] - lo[k] + 1) + static_cast<std::size_t>(x[k] - lo[k]);
  }
  return idx;
}

void Box::coords_of(std::size_t index, std::span<Coord> out) const {
  for (std::size_t k = lo.size(); k-- > 0;) {
    const auto w = static_cast<std::size_t>(hi[k] - lo[k] + 1);
    out[k] = lo[k] + static_cast<Coord>(index % w);
    index /= w;
  }
}

double FieldSample::at(std::span<const Coord> x) const {
  if (!region.contains(x)) throw CoverageError("field sample does not cover the requested site");
  return values[region.index_of(x)];
}

void FieldSample::write_csv(std::ostream& os) const {
  for (int k = 0; k < region.d(); ++k) os << 'x' << k << ',';
  os << "value\n";
  std::vector<Coord> x(static_cast<std::size_t>(region.d()));
  const auto old_precision = os.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) {
    region.coords_of(i, x);
    for (Coord c : x) os << c << ',';
    os << values[i] << '\n';
  }
  os.precision(old_precision);
}

double driving_value(const FieldSpec& spec, std::uint64_t trial, std::span<const Coord> site) {
  return spec.base.quantile(rng::to_unit(rng::hash_site(spec.seed, trial, site)));
}

FieldSample sample_field(const FieldSpec& spec, const Box& region, std::uint64_t trial) {
  spec.validate();
  if (region.d() != spec.d || region.size() == 0) throw InvalidInput("sample_field: empty or mismatched region");
  const Coord R = spec.kernel_radius();
  Box inflated = region;
  for (std::size_t k = 0; k < inflated.lo.size(); ++k) {
    inflated.lo[k] -= R;
    inflated.hi[k] += R;
  }

  std::vector<double> xi(inflated.size());
  std::vector<Coord> site(static_cast<std::size_t>(spec.d));
  for (std::size_t i = 0; i < xi.size(); ++i) {
    inflated.coords_of(i, site);
    xi[i] = driving_value(spec, trial, site);
  }

  FieldSample out{region, std::vector<double>(region.size(), 0.0)};
  const std::size_t last = static_cast<std::size_t>(spec.d - 1);
  const auto row_len = static_cast<std::size_t>(region.hi[last] - region.lo[last] + 1);
  const std::size_t rows = out.values.size() / row_len;

  // One axpy per (tap, output row): out_row += k(u) * xi_row shifted by -u.
  std::vector<Coord> src(static_cast<std::size_t>(spec.d));
  for (const auto& tap : spec.kernel) {
    if (tap.weight == 0.0) continue;
    for (std::size_t r = 0; r < rows; ++r) {
      region.coords_of(r * row_len, site);
      for (std::size_t k = 0; k < site.size(); ++k) src[k] = site[k] - tap.offset[k];
      const std::size_t from = inflated.index_of(src);
      kernels::axpy(std::span<double>(out.values).subspan(r * row_len, row_len), tap.weight,
                    std::span<const double>(xi).subspan(from, row_len));
    }
  }
  return out;
}

FieldSample truncate_field(FieldSample s, Coord L, double c) {
  if (L < 1 || !(c > 0.0)) throw InvalidInput("truncate_field needs L >= 1 and c > 0");
  const double cap = c / (3.0 * static_cast<double>(L) * static_cast<double>(L));
  for (double& v : s.values) v = std::min(v, cap);
  return s;
}


// Same arithmetic order as sample_field for a single site.
double field_value(const FieldSpec& spec, std::uint64_t trial, std::span<const Coord> site) {
  double v = 0.0;
  std::vector<Coord> src(site.size());
  for (const auto& tap : spec.kernel) {
    if (tap.weight == 0.0) continue;
    for (std::size_t k = 0; k < site.size(); ++k) src[k] = site[k] - tap.offset[k];
    v += tap.weight * driving_value(spec, trial, src);
  }
  return v;
}

static double median_of(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

MixingEstimate empirical_mixing(const FieldSpec& spec, Coord L, std::uint64_t trials) {
  spec.validate();
  if (trials < 1000) throw InvalidInput("empirical_mixing needs at least 1000 trials");
  if (L < 0) throw InvalidInput("empirical_mixing needs L >= 0");
  std::vector<Coord> origin(static_cast<std::size_t>(spec.d), 0);
  std::vector<Coord> far = origin;
  far[0] = L;

  std::vector<double> a(trials), b(trials);
  for (std::uint64_t t = 0; t < trials; ++t) {
    a[t] = field_value(spec, t, origin);
    b[t] = field_value(spec, t, far);
  }
  return mixing_from_samples(a, b);
}

MixingEstimate mixing_from_samples(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidInput("mixing_from_samples needs two equal-length samples");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const double med = median_of(std::move(pooled));

  const auto n = static_cast<double>(a.size());
  double p1 = 0, p2 = 0, p12 = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double i1 = a[t] <= med ? 1.0 : 0.0;
    const double i2 = b[t] <= med ? 1.0 : 0.0;
    p1 += i1;
    p2 += i2;
    p12 += i1 * i2;
  }
  p1 /= n;
  p2 /= n;
  p12 /= n;
  double var = 0.0;
  const double cov = p12 - p1 * p2;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double i1 = a[t] <= med ? 1.0 : 0.0;
    const double i2 = b[t] <= med ? 1.0 : 0.0;
    const double z = (i1 - p1) * (i2 - p2) - cov;
    var += z * z;
  }
  var /= (n - 1.0);
  return MixingEstimate{cov, std::sqrt(var / n), med};
}

ContinuityProbe conditional_continuity_probe(const FieldSpec& spec, double eps, std::uint64_t trials) {
  spec.validate();
  if (!(eps >= 0.0) || eps >= 1.0) throw InvalidInput("continuity probe needs eps in [0, 1)");
  const auto nd = static_cast<std::size_t>(2 * spec.d);
  std::vector<double> center(trials);
  std::vector<double> nbrs(trials * nd);
  std::vector<Coord> site(static_cast<std::size_t>(spec.d), 0);
  for (std::uint64_t t = 0; t < trials; ++t) {
    std::fill(site.begin(), site.end(), 0);
    center[t] = field_value(spec, t, site);
    for (std::size_t k = 0; k < nd; ++k) {
      std::fill(site.begin(), site.end(), 0);
      site[k / 2] = (k % 2 == 0) ? -1 : 1;
      nbrs[t * nd + k] = field_value(spec, t, site);
    }
  }

  return continuity_from_samples(center, nbrs, nd, eps);
}

ContinuityProbe continuity_from_samples(std::span<const double> center, std::span<const double> nbrs, std::size_t nd,
                                        double eps) {
  if (!(eps >= 0.0) || eps >= 1.0) throw InvalidInput("continuity probe needs eps in [0, 1)");
  if (nd == 0 || nbrs.size() != center.size() * nd) throw InvalidInput("continuity probe: neighbour block size mismatch");
  constexpr int kLevels = 4;
  constexpr std::size_t kMinBin = 200;
  const std::uint64_t trials = center.size();

  // Quantile cut points of the (identically distributed) neighbour values.
  std::vector<double> sorted(nbrs.begin(), nbrs.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  for (int q = 1; q < kLevels; ++q) cuts.push_back(sorted[sorted.size() * static_cast<std::size_t>(q) / kLevels]);

  std::map<std::uint64_t, std::vector<double>> bins;
  for (std::uint64_t t = 0; t < trials; ++t) {
    std::uint64_t key = 0;
    for (std::size_t k = 0; k < nd; ++k) {
      const double v = nbrs[t * nd + k];
      const auto level = static_cast<std::uint64_t>(std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
      key = key * kLevels + level;
    }
    bins[key].push_back(center[t]);
  }

  ContinuityProbe probe;
  for (auto& [key, vals] : bins) {
    if (vals.size() < kMinBin) continue;
    ++probe.bins_used;
    if (eps == 0.0) continue;
    std::sort(vals.begin(), vals.end());
    std::size_t hi = 0;
    std::size_t best = 0;
    for (std::size_t lo = 0; lo < vals.size(); ++lo) {
      hi = std::max(hi, lo);
      while (hi < vals.size() && vals[hi] < vals[lo] + eps) ++hi;
      best = std::max(best, hi - lo);
    }
    probe.worst_increment = std::max(probe.worst_increment, static_cast<double>(best) / static_cast<double>(vals.size()));
  }
  return probe;
}

}  // namespace mpal
