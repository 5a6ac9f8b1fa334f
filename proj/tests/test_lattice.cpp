#include <doctest.h>

#include <cmath>
#include <set>

#include "mpal/error.hpp"
#include "mpal/lattice.hpp"
#include "oracles.hpp"

using namespace mpal;

TEST_CASE("norms and distances") {
  std::vector<Coord> x{3, -5, 1};
  CHECK(max_norm(x) == 5);
  CHECK(sum_norm(x) == 9);
  std::vector<Coord> y{1, 1, 1};
  CHECK(max_dist(x, y) == 6);
  CHECK_THROWS_AS(max_norm(std::vector<Coord>{}), InvalidInput);
  CHECK_THROWS_AS(max_dist(std::vector<Coord>{}, std::vector<Coord>{}), InvalidInput);
}

TEST_CASE("particle config validates its shape") {
  CHECK_THROWS_AS(ParticleConfig(2, 2, {1, 2, 3}), InvalidInput);
  ParticleConfig p(2, 2, {1, 2, 3, 4});
  CHECK(p.particle(1)[0] == 3);
  CHECK(p.particle(1)[1] == 4);
}

TEST_CASE("cube cardinality and enumeration order") {
  for (int d = 1; d <= 2; ++d)
    for (int n = 1; n <= 3; ++n)
      for (Coord L = 0; L <= 2; ++L) {
        const Cube c = make_cube(d, n, L);
        const auto pts = cube_points(c);
        const auto expected = static_cast<std::size_t>(std::llround(std::pow(2.0 * L + 1.0, d * n)));
        CHECK(cube_cardinality(c) == expected);
        REQUIRE(pts.size() == expected);
        const auto ref = oracle::cube_points(std::vector<Coord>(static_cast<std::size_t>(d * n), 0), L);
        for (std::size_t i = 0; i < pts.size(); ++i) CHECK(pts[i].coords == ref[i]);
      }
}

TEST_CASE("cardinality overflow is reported") {
  CHECK_THROWS_AS(cube_cardinality(make_cube(3, 8, 1000)), SizeLimit);
}

TEST_CASE("indexer round trip on an off-center cube") {
  const Cube c{ParticleConfig(2, 2, {5, -3, 0, 7}), 2};
  const CubeIndexer ix(c);
  const auto pts = cube_points(c);
  REQUIRE(ix.size() == pts.size());
  std::vector<Coord> buf(4);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(ix.index_of(pts[i].coords) == i);
    ix.coords_of(i, buf);
    CHECK(buf == pts[i].coords);
  }
  CHECK(ix.stride(3) == 1);
  CHECK(ix.stride(2) == 5);
  CHECK(ix.stride(0) == 125);
  CHECK_FALSE(ix.contains(std::vector<Coord>{8, -3, 0, 7}));
}

TEST_CASE("inner boundary") {
  for (int nu = 1; nu <= 3; ++nu) {
    for (Coord L = 1; L <= 3; ++L) {
      const Cube c = make_cube(nu, 1, L);
      const auto b = inner_boundary(c);
      const double expected = std::pow(2.0 * L + 1, nu) - std::pow(2.0 * L - 1, nu);
      CHECK(b.size() == static_cast<std::size_t>(expected));
      for (const auto& p : b) CHECK(max_norm(p.coords) == L);
    }
  }
  CHECK_THROWS_AS(inner_boundary(make_cube(1, 1, 0)), EmptyBoundary);
}

TEST_CASE("nearest neighbours inside a cube") {
  const Cube c = make_cube(2, 1, 2);
  CHECK(nearest_neighbors(ParticleConfig(2, 1, {0, 0}), c).size() == 4);
  CHECK(nearest_neighbors(ParticleConfig(2, 1, {2, 0}), c).size() == 3);
  CHECK(nearest_neighbors(ParticleConfig(2, 1, {2, -2}), c).size() == 2);
  for (const auto& y : nearest_neighbors(ParticleConfig(2, 1, {1, 1}), c))
    CHECK(sum_norm(std::vector<Coord>{y.coords[0] - 1, y.coords[1] - 1}) == 1);
}

TEST_CASE("separated configurations") {
  CHECK_THROWS_AS(min_separation(ParticleConfig(1, 1, {0})), InvalidInput);
  CHECK(min_separation(ParticleConfig(1, 3, {0, 4, 9})) == 4);
  for (int n = 2; n <= 3; ++n)
    for (int d = 1; d <= 2; ++d) {
      const Coord r0 = 1, k = 2, m = 3;
      const auto x = separated_config(n, d, r0, k, m);
      const Coord C = r0 + 2 * k * m + 1;
      CHECK(x.coords.front() == C);
      CHECK(x.coords.back() == C * n * d);
      // Cubes of radius km around the particles stay farther apart than r0.
      CHECK(min_separation(x) - 2 * k * m > r0);
    }
}
