#include "mpal/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <string>

#include "mpal/error.hpp"

namespace mpal {

ParticleConfig::ParticleConfig(int d, int n, std::vector<Coord> c) : d(d), n(n), coords(std::move(c)) {
  if (d < 1 || n < 1) throw InvalidInput("ParticleConfig: d and n must be positive");
  if (coords.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(n)) {
    throw InvalidInput("ParticleConfig: expected " + std::to_string(d * n) + " coordinates, got " +
                       std::to_string(coords.size()));
  }
}

ParticleConfig ParticleConfig::origin(int d, int n) {
  return ParticleConfig(d, n, std::vector<Coord>(static_cast<std::size_t>(d) * n, 0));
}

std::span<const Coord> ParticleConfig::particle(int j) const {
  return std::span<const Coord>(coords).subspan(static_cast<std::size_t>(j) * d, static_cast<std::size_t>(d));
}

Cube make_cube(int d, int n, Coord radius) {
  if (radius < 0) throw InvalidInput("cube radius must be non-negative");
  return Cube{ParticleConfig::origin(d, n), radius};
}

Coord max_norm(std::span<const Coord> x) {
  if (x.empty()) throw InvalidInput("max_norm: empty vector");
  Coord m = 0;
  for (Coord v : x) m = std::max(m, v < 0 ? -v : v);
  return m;
}

Coord sum_norm(std::span<const Coord> x) {
  if (x.empty()) throw InvalidInput("sum_norm: empty vector");
  Coord s = 0;
  for (Coord v : x) s += v < 0 ? -v : v;
  return s;
}

Coord max_dist(std::span<const Coord> x, std::span<const Coord> y) {
  if (x.empty() || x.size() != y.size()) throw InvalidInput("max_dist: size mismatch");
  Coord m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

std::size_t cube_cardinality(const Cube& c) {
  if (c.radius < 0) throw InvalidInput("cube radius must be non-negative");
  const auto w = static_cast<unsigned long long>(c.width());
  unsigned long long total = 1;
  for (int k = 0; k < c.nu(); ++k) {
    if (total > std::numeric_limits<std::size_t>::max() / w) {
      throw SizeLimit("cube cardinality (2L+1)^{nd} overflows the index type");
    }
    total *= w;
  }
  return static_cast<std::size_t>(total);
}

bool contains(const Cube& c, std::span<const Coord> x) {
  if (x.size() != c.center.coords.size()) return false;
  return max_dist(x, c.center.coords) <= c.radius;
}

CubeIndexer::CubeIndexer(const Cube& c)
    : d_(c.d()), n_(c.n()), nu_(c.nu()), width_(c.width()), size_(cube_cardinality(c)) {
  lo_.resize(static_cast<std::size_t>(nu_));
  strides_.resize(static_cast<std::size_t>(nu_));
  std::size_t s = 1;
  for (int k = nu_ - 1; k >= 0; --k) {
    lo_[static_cast<std::size_t>(k)] = c.center.coords[static_cast<std::size_t>(k)] - c.radius;
    strides_[static_cast<std::size_t>(k)] = s;
    s *= static_cast<std::size_t>(width_);
  }
}

bool CubeIndexer::contains(std::span<const Coord> x) const {
  if (x.size() != lo_.size()) return false;
  for (std::size_t k = 0; k < lo_.size(); ++k) {
    const Coord off = x[k] - lo_[k];
    if (off < 0 || off >= width_) return false;
  }
  return true;
}

std::size_t CubeIndexer::index_of(std::span<const Coord> x) const {
  if (!contains(x)) throw InvalidInput("point outside cube");
  std::size_t idx = 0;
  for (std::size_t k = 0; k < lo_.size(); ++k) idx += static_cast<std::size_t>(x[k] - lo_[k]) * strides_[k];
  return idx;
}

void CubeIndexer::coords_of(std::size_t index, std::span<Coord> out) const {
  for (std::size_t k = 0; k < lo_.size(); ++k) {
    out[k] = lo_[k] + static_cast<Coord>(index / strides_[k]);
    index %= strides_[k];
  }
}

ParticleConfig CubeIndexer::point(std::size_t index) const {
  ParticleConfig p = ParticleConfig::origin(d_, n_);
  coords_of(index, p.coords);
  return p;
}

std::vector<ParticleConfig> cube_points(const Cube& c) {
  CubeIndexer ix(c);
  std::vector<ParticleConfig> pts;
  pts.reserve(ix.size());
  for (std::size_t i = 0; i < ix.size(); ++i) pts.push_back(ix.point(i));
  return pts;
}

std::vector<ParticleConfig> inner_boundary(const Cube& c) {
  if (c.radius == 0) throw EmptyBoundary("inner boundary of a radius-0 cube is empty");
  CubeIndexer ix(c);
  std::vector<ParticleConfig> pts;
  ParticleConfig p = ParticleConfig::origin(c.d(), c.n());
  for (std::size_t i = 0; i < ix.size(); ++i) {
    ix.coords_of(i, p.coords);
    if (max_dist(p.coords, c.center.coords) == c.radius) pts.push_back(p);
  }
  return pts;
}

std::vector<ParticleConfig> nearest_neighbors(const ParticleConfig& x, const Cube& c) {
  if (x.d != c.d() || x.n != c.n() || !contains(c, x.coords)) {
    throw InvalidInput("nearest_neighbors: point outside cube");
  }
  std::vector<ParticleConfig> out;
  for (std::size_t k = 0; k < x.coords.size(); ++k) {
    for (Coord step : {Coord{-1}, Coord{1}}) {
      ParticleConfig y = x;
      y.coords[k] += step;
      if (std::abs(y.coords[k] - c.center.coords[k]) <= c.radius) out.push_back(std::move(y));
    }
  }
  return out;
}

Coord min_separation(const ParticleConfig& x) {
  if (x.n < 2) throw InvalidInput("min_separation needs at least two particles");
  Coord best = std::numeric_limits<Coord>::max();
  for (int i = 0; i < x.n; ++i) {
    for (int j = i + 1; j < x.n; ++j) best = std::min(best, max_dist(x.particle(i), x.particle(j)));
  }
  return best;
}

ParticleConfig separated_config(int n, int d, Coord r0, Coord k, Coord m) {
  if (n < 1 || d < 1) throw InvalidInput("separated_config: n and d must be positive");
  if (r0 < 0 || k < 1 || m < 1) throw InvalidInput("separated_config: need r0 >= 0, k >= 1, m >= 1");
  const Coord scale = r0 + 2 * k * m + 1;
  std::vector<Coord> c(static_cast<std::size_t>(n) * d);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = scale * static_cast<Coord>(i + 1);
  return ParticleConfig(d, n, std::move(c));
}

}  // namespace mpal
