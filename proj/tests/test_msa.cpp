#include <doctest.h>

#include <cmath>

#include "mpal/error.hpp"
#include "mpal/msa.hpp"
#include "oracles.hpp"

using namespace mpal;

namespace {

HamiltonianSpec chain(BaseLaw law, std::uint64_t seed) {
  HamiltonianSpec h;
  h.field = FieldSpec::iid(1, law, seed);
  return h;
}

}  // namespace

TEST_CASE("three-site free cube at E = -1") {
  const auto op = assemble(chain(BaseLaw::constant(0.0), 0), make_cube(1, 1, 1), 0);
  // (H + 1)^{-1}(center, end) = 3 / 21.
  const auto strong = is_nonsingular(op, -1.0, 1.0, 1, 1);
  CHECK(strong.max_boundary_green == doctest::Approx(1.0 / 7.0).epsilon(1e-14));
  CHECK(strong.threshold == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK_FALSE(strong.nonsingular);
  const auto weak = is_nonsingular(op, -1.0, 0.5, 1, 1);
  CHECK(weak.threshold == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(weak.nonsingular);
}

TEST_CASE("resolvent at an eigenvalue counts as singular") {
  const auto op = assemble(chain(BaseLaw::constant(0.0), 0), make_cube(1, 1, 1), 0);
  const auto r = is_nonsingular(op, 2.0, 0.1, 1, 1);
  CHECK(r.singular_resolvent);
  CHECK_FALSE(r.nonsingular);
}

TEST_CASE("initial-scale constants") {
  const auto s = initial_scale_params(2, 1, 64);
  CHECK(s.m == doctest::Approx(24.0 / 8.0));
  CHECK(s.Estar == doctest::Approx(24.0 * 8.0 * 3.0));
  CHECK(s.C == doctest::Approx(24.0 * 24.0 * 8.0));
  CHECK(s.Estar == doctest::Approx(s.C / 8.0));
  CHECK(gamma_mass(1.0, 1, 1, 1) == doctest::Approx(2.0));
  CHECK(gamma_mass(1.0, 256, 1, 2) == doctest::Approx(1.5 * 1.5));
  CHECK_THROWS_AS(gamma_mass(1.0, 4, 3, 2), InvalidInput);
  CHECK(scale_sequence(16, 1.5, 1) == 64);
  CHECK(scale_sequence(16, 1.5, 2) == 512);
  CHECK_THROWS_AS(scale_sequence(1000, 2.0, 10), SizeLimit);
  CHECK(msa_target(16, 1.0, 1, 1) == doctest::Approx(1.0 / 256.0));
  CHECK(msa_target(4, 0.5, 2, 1) == doctest::Approx(std::pow(4.0, -4.0)));
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(make_msa_params(1, 1, 1.0, 16, 1.5));
  try {
    make_msa_params(1, 1, 1.0, 16, 0.9);
    FAIL("expected ParameterError");
  } catch (const ParameterError& e) {
    CHECK(std::string(e.what()) == "alpha > 1 required");
  }
  CHECK_THROWS_AS(make_msa_params(1, 1, 0.0, 16, 1.5), ParameterError);
  CHECK_THROWS_AS(make_msa_params(1, 1, 1.0, 1, 1.5), ParameterError);
  CHECK_THROWS_AS(make_msa_params(1, 1, 1.0, 16, 1.5, -2.0), ParameterError);
  CHECK(make_msa_params(1, 1, 1.0, 16, 1.5, 3.0).Estar == 3.0);
}

TEST_CASE("certification chain crossover") {
  const double C = initial_scale_params(1, 1, 2).C;
  CHECK(C == 576.0);
  const Coord cross = ct_certification_crossover(1, 1, 1);
  CHECK(cross >= static_cast<Coord>(C * C));
  const auto at = make_msa_params(1, 1, 1.0, cross);
  CHECK(ct_chain_holds(at, 1, at.Estar));
  const auto before = make_msa_params(1, 1, 1.0, cross - 1);
  CHECK_FALSE(ct_chain_holds(before, 1, before.Estar));
  const auto desk = make_msa_params(1, 1, 1.0, 64);
  CHECK_FALSE(ct_chain_holds(desk, 1, desk.Estar));
}

TEST_CASE("scanner agrees with the dense resolvent") {
  const auto h = chain(BaseLaw::uniform(4.0), 21);
  const auto op = assemble(h, make_cube(1, 1, 6), 3);
  SingularityScanner scanner(op, 0.2, 1, 1);
  for (double E : {-0.5, 0.1, 0.7, 1.3}) {
    Eigen::MatrixXd M = op.to_dense();
    M.diagonal().array() -= E;
    const Eigen::MatrixXd G = oracle::gauss_jordan_inverse(M);
    const double edge = std::max(std::abs(G(6, 0)), std::abs(G(6, 12)));
    const auto c = scanner.check(E);
    CHECK(c.max_boundary_green == doctest::Approx(edge).epsilon(1e-10));
    CHECK(c.nonsingular == (edge <= std::exp(-gamma_mass(0.2, 6, 1, 1) * 6.0)));
  }
}

TEST_CASE("shortcut trials survive a full scan") {
  const auto h = chain(BaseLaw::uniform(1e4), 5);
  const auto params = make_msa_params(1, 1, 1.0, 16);
  SingularityOptions opts;
  opts.verify_shortcut = true;
  opts.grid_points = 200;
  int shortcuts = 0;
  for (std::uint64_t t = 0; t < 40; ++t) {
    const auto r = singularity_trial(h, params, 1, t, opts);
    REQUIRE(r.ok);
    if (r.shortcut) {
      ++shortcuts;
      CHECK(r.scan_agrees);
      CHECK_FALSE(r.singular);
      CHECK(r.E0 > 2.0 * params.Estar);
    }
  }
  CHECK(shortcuts > 0);
}

TEST_CASE("weak disorder is singular at small scales") {
  // a = 1e3 places E0 inside [0, E*] often enough to resonate.
  const auto h = chain(BaseLaw::uniform(1e3), 6);
  const auto params = make_msa_params(1, 1, 1.0, 16);
  SingularityOptions opts;
  opts.grid_points = 200;
  const auto est = singularity_probability(h, params, 1, 100, opts);
  CHECK(est.failures == 0);
  CHECK(est.probability.trials == 100);
  CHECK(est.probability.estimate > 0.0);
  CHECK(est.shortcut_rate == 0.0);
  CHECK_THROWS_AS(singularity_probability(h, params, 1, 99, opts), InvalidInput);
}
