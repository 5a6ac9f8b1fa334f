#pragma once
// Index arithmetic on Z^{nd}: norms, cubes, boundaries and adjacency.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mpal {

using Coord = std::int64_t;

/// A point of Z^{nd} read as n particle positions in Z^d. Particle j
/// (0-based) occupies coords[j*d .. j*d + d - 1].
struct ParticleConfig {
  int d = 1;
  int n = 1;
  std::vector<Coord> coords;

  ParticleConfig() = default;
  ParticleConfig(int d, int n, std::vector<Coord> coords);
  static ParticleConfig origin(int d, int n);

  std::size_t size() const { return coords.size(); }
  std::span<const Coord> particle(int j) const;
  friend bool operator==(const ParticleConfig&, const ParticleConfig&) = default;
};

/// Max-norm ball C^{(n)}_L(center) in Z^{nd}.
struct Cube {
  ParticleConfig center;
  Coord radius = 0;

  int d() const { return center.d; }
  int n() const { return center.n; }
  int nu() const { return center.d * center.n; }
  Coord width() const { return 2 * radius + 1; }
};

Cube make_cube(int d, int n, Coord radius);  // centered at the origin

Coord max_norm(std::span<const Coord> x);
Coord sum_norm(std::span<const Coord> x);
/// Max-norm distance |x - y|.
Coord max_dist(std::span<const Coord> x, std::span<const Coord> y);

/// (2L+1)^{nd}; throws SizeLimit if it does not fit a std::size_t.
std::size_t cube_cardinality(const Cube& c);
bool contains(const Cube& c, std::span<const Coord> x);

/// Lexicographic enumeration, first coordinate most significant. This order
/// is the matrix-index convention everywhere else.
std::vector<ParticleConfig> cube_points(const Cube& c);
/// Points at max-norm distance exactly L from the center.
std::vector<ParticleConfig> inner_boundary(const Cube& c);
/// Points of c at sum-norm distance 1 from x.
std::vector<ParticleConfig> nearest_neighbors(const ParticleConfig& x, const Cube& c);

/// min over particle pairs i != j of |x_i - x_j| (max-norm on Z^d).
Coord min_separation(const ParticleConfig& x);

/// C_{k,m} * (1, 2, ..., nd) with C_{k,m} = r0 + 2km + 1.
ParticleConfig separated_config(int n, int d, Coord r0, Coord k, Coord m);

/// Fast conversion between lexicographic indices and coordinates of a cube.
class CubeIndexer {
 public:
  explicit CubeIndexer(const Cube& c);

  std::size_t size() const { return size_; }
  int nu() const { return nu_; }
  Coord width() const { return width_; }
  /// Stride of coordinate axis k in the flat index (last axis has stride 1).
  std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

  std::size_t index_of(std::span<const Coord> x) const;
  void coords_of(std::size_t index, std::span<Coord> out) const;
  ParticleConfig point(std::size_t index) const;
  bool contains(std::span<const Coord> x) const;

 private:
  int d_;
  int n_;
  int nu_;
  Coord width_;
  std::vector<Coord> lo_;
  std::vector<std::size_t> strides_;
  std::size_t size_;
};

}  // namespace mpal
