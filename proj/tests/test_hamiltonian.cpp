#include <doctest.h>

#include <random>
#include <sstream>

#include "mpal/error.hpp"
#include "mpal/hamiltonian.hpp"
#include "oracles.hpp"

using namespace mpal;

namespace {

HamiltonianSpec make_spec(int n, int d, Coord r0, double u, std::uint64_t seed) {
  HamiltonianSpec h;
  h.n = n;
  h.d = d;
  h.field = FieldSpec::box(d, 1, BaseLaw::exponential(1.0, 2.0), seed);
  h.interaction = InteractionSpec::constant(r0, u);
  return h;
}

}  // namespace

TEST_CASE("assembled operator equals the definition") {
  std::mt19937_64 rng(3);
  for (int n = 1; n <= 3; ++n)
    for (int d = 1; d <= 2; ++d) {
      const Coord L = (n * d <= 2) ? 3 : 1;
      const auto h = make_spec(n, d, 1, 0.75, 11 + static_cast<std::uint64_t>(n * 10 + d));
      std::vector<Coord> center(static_cast<std::size_t>(n * d));
      for (auto& c : center) c = static_cast<Coord>(rng() % 7) - 3;
      const Cube cube{ParticleConfig(d, n, center), L};
      const auto op = assemble(h, cube, 2);
      const Eigen::MatrixXd ref = oracle::hamiltonian(h, center, L, 2);
      const Eigen::MatrixXd dense = op.to_dense();
      REQUIRE(dense.rows() == ref.rows());
      CHECK((dense - ref).cwiseAbs().maxCoeff() < 1e-13);
      CHECK((Eigen::MatrixXd(op.to_sparse()) - ref).cwiseAbs().maxCoeff() < 1e-13);

      std::uniform_real_distribution<double> U(-1, 1);
      std::vector<double> psi(op.dim());
      for (auto& v : psi) v = U(rng);
      const auto out = op.apply(psi);
      const Eigen::VectorXd expect = ref * Eigen::Map<const Eigen::VectorXd>(psi.data(), static_cast<Eigen::Index>(psi.size()));
      for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(expect[static_cast<Eigen::Index>(i)]).epsilon(1e-13));

      const auto [lo, hi] = op.gershgorin();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ref);
      CHECK(es.eigenvalues().minCoeff() >= lo - 1e-12);
      CHECK(es.eigenvalues().maxCoeff() <= hi + 1e-12);
    }
}

TEST_CASE("nearest-neighbour pair count") {
  // Pairs in a box of width w in nu dimensions: nu w^{nu-1} (w - 1).
  const auto h = make_spec(2, 2, 0, 0.0, 1);
  const auto op = assemble(h, make_cube(2, 2, 1), 0);
  CHECK(op.offdiag_pairs() == 4 * 27 * 2);
}

TEST_CASE("interaction energy") {
  const auto phi = InteractionSpec{2, {3.0, 2.0, 1.0}};
  CHECK(interaction_energy(ParticleConfig(1, 3, {0, 1, 5}), phi) == 2.0);
  CHECK(interaction_energy(ParticleConfig(1, 3, {0, 0, 2}), phi) == 3.0 + 1.0 + 1.0);
  CHECK(interaction_energy(ParticleConfig(1, 1, {0}), phi) == 0.0);
  CHECK_THROWS_AS((InteractionSpec{2, {1.0}}).validate(), InvalidInput);
  CHECK_THROWS_AS((InteractionSpec{0, {-1.0}}).validate(), InvalidInput);
}

TEST_CASE("coverage is enforced") {
  const auto h = make_spec(1, 1, 0, 0.0, 5);
  const Cube cube = make_cube(1, 1, 4);
  const auto small = sample_field(h.field, Box::cube(1, 2), 0);
  CHECK_THROWS_AS(assemble(h, cube, small), CoverageError);
  const auto big = sample_field(h.field, covering_box(cube), 0);
  CHECK_NOTHROW(assemble(h, cube, big));
}

TEST_CASE("coordinate export") {
  const auto h = make_spec(1, 1, 0, 0.0, 5);
  const auto op = assemble(h, make_cube(1, 1, 2), 0);
  std::ostringstream os;
  op.write_coo(os);
  const std::string s = os.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == 5 + 2 * 4);
}
