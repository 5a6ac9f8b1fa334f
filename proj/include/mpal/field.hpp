#pragma once
// Non-negative correlated random fields on Z^d built as finite-range moving
// averages V(x) = sum_u k(u) xi(x - u) of an i.i.d. driving field xi.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "mpal/lattice.hpp"

namespace mpal {

enum class BaseKind { uniform, exponential, constant };

/// Marginal law of the i.i.d. driving variables.
struct BaseLaw {
  BaseKind kind = BaseKind::uniform;
  double a = 1.0;      // uniform on [0, a]
  double rate = 1.0;   // exponential rate, conditioned on [0, vmax]
  double vmax = 1.0;
  double value = 0.0;  // constant

  static BaseLaw uniform(double a) { return {BaseKind::uniform, a, 1.0, 1.0, 0.0}; }
  static BaseLaw exponential(double rate, double vmax) { return {BaseKind::exponential, 1.0, rate, vmax, 0.0}; }
  static BaseLaw constant(double v) { return {BaseKind::constant, 1.0, 1.0, 1.0, v}; }

  /// Inverse CDF applied to u in [0, 1).
  double quantile(double u) const;
  double mean() const;
  double variance() const;
  double sup() const;
  double inf() const;
};

struct KernelTap {
  std::vector<Coord> offset;  // length d
  double weight = 0.0;
};

struct FieldSpec {
  int d = 1;
  BaseLaw base;
  std::vector<KernelTap> kernel{KernelTap{{0}, 1.0}};
  std::uint64_t seed = 0;

  static FieldSpec iid(int d, BaseLaw base, std::uint64_t seed = 0);
  /// Box kernel of weight 1 on all offsets with |u| <= radius.
  static FieldSpec box(int d, int radius, BaseLaw base, std::uint64_t seed = 0);

  /// Throws InvalidInput on negative weights, kernel(0) <= 0, bad offsets.
  void validate() const;
  Coord kernel_radius() const;
  double kernel_weight_sum() const;
  double vmax() const { return kernel_weight_sum() * base.sup(); }
  /// Exact covariance of V(x) and V(x + h): Var(xi) * sum_u k(u) k(u + h).
  double covariance(std::span<const Coord> lag) const;
};

/// Rectangular box [lo, hi] (inclusive) in Z^d.
struct Box {
  std::vector<Coord> lo;
  std::vector<Coord> hi;

  static Box cube(int d, Coord radius);  // [-radius, radius]^d
  static Box around(std::span<const Coord> center, Coord radius);
  int d() const { return static_cast<int>(lo.size()); }
  std::size_t size() const;
  bool contains(std::span<const Coord> x) const;
  bool contains(const Box& other) const;
  std::size_t index_of(std::span<const Coord> x) const;  // row-major, last axis fastest
  void coords_of(std::size_t index, std::span<Coord> out) const;
};

struct FieldSample {
  Box region;
  std::vector<double> values;

  double at(std::span<const Coord> x) const;
  /// CSV: one row per site, columns x0..x{d-1},value.
  void write_csv(std::ostream& os) const;
};

/// Deterministic in (spec, region, trial); overlapping regions agree site by site.
FieldSample sample_field(const FieldSpec& spec, const Box& region, std::uint64_t trial);

/// The driving variable xi at one site.
double driving_value(const FieldSpec& spec, std::uint64_t trial, std::span<const Coord> site);

/// V at one site, without sampling a region.
double field_value(const FieldSpec& spec, std::uint64_t trial, std::span<const Coord> site);

/// Pointwise min(V, c L^{-2} / 3).
FieldSample truncate_field(FieldSample s, Coord L, double c);

struct MixingEstimate {
  double covariance = 0.0;
  double std_error = 0.0;
  double median = 0.0;
  double z() const { return std_error > 0 ? covariance / std_error : 0.0; }
};

/// Empirical covariance of 1{V(0) <= med} and 1{V(L e_1) <= med} over trials.
MixingEstimate empirical_mixing(const FieldSpec& spec, Coord L, std::uint64_t trials);

/// The same estimate from paired samples V(0), V(L e_1).
MixingEstimate mixing_from_samples(std::span<const double> a, std::span<const double> b);

struct ContinuityProbe {
  double worst_increment = 0.0;
  int bins_used = 0;
};

/// Worst empirical conditional CDF increment F(t + eps | nbhd) - F(t | nbhd)
/// at the origin, conditioning on the 2d nearest-neighbour values
/// discretized into quantile levels.
ContinuityProbe conditional_continuity_probe(const FieldSpec& spec, double eps, std::uint64_t trials);
/// `nbrs` holds nd neighbour values per trial, trial-major.
ContinuityProbe continuity_from_samples(std::span<const double> center, std::span<const double> nbrs, std::size_t nd,
                                        double eps);

}  // namespace mpal
