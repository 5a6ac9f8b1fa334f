#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>

#include "mpal/error.hpp"
#include "mpal/observables.hpp"
#include "oracles.hpp"

using namespace mpal;

namespace {

HamiltonianSpec chain(BaseLaw law, std::uint64_t seed, int n = 1) {
  HamiltonianSpec h;
  h.n = n;
  h.field = FieldSpec::iid(1, law, seed);
  return h;
}

// M(t) through a dense matrix exponential of -itH.
double moment_by_expm(const AssembledOperator& op, double a, double b, double s, const Cube& K, double t) {
  const Eigen::MatrixXd H = op.to_dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(H.rows(), H.cols());
  for (Eigen::Index k = 0; k < H.rows(); ++k) {
    const double l = es.eigenvalues()[k];
    if (l >= a && l <= b) P += es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose();
  }
  const Eigen::MatrixXcd U = (std::complex<double>(0.0, -t) * H.cast<std::complex<double>>()).exp();
  const Eigen::MatrixXcd UP = U * P.cast<std::complex<double>>();
  double total = 0.0;
  for (const auto& y : cube_points(K)) {
    const auto col = static_cast<Eigen::Index>(op.indexer().index_of(y.coords));
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
      const auto x = op.indexer().point(static_cast<std::size_t>(i));
      total += std::pow(static_cast<double>(max_norm(x.coords)), s) * std::norm(UP(i, col));
    }
  }
  return total;
}

}  // namespace

TEST_CASE("large deviation scale") {
  CHECK(large_deviation_scale(0.5, 0.4) == 2);
  CHECK(large_deviation_scale(0.01, 1.0) == 10);
  CHECK_THROWS_AS(large_deviation_scale(1.0, 1.0), ParameterError);
}

TEST_CASE("large deviation probability against the exact law") {
  const FieldSpec f = FieldSpec::iid(1, BaseLaw::uniform(1.0), 77);
  const std::uint64_t trials = 20000;
  const auto est = large_deviation_probability(f, 0.5, 0.4, 6.0, trials);
  CHECK(est.L == 2);
  CHECK(est.cube_size == 5);
  // Cube average < E/2 with the field capped at c / (3 L^2) = 0.5.
  const double exact = oracle::capped_uniform_sum_cdf(5, 1.0, 0.5, 5 * 0.25);
  const double se = std::sqrt(exact * (1 - exact) / trials);
  CHECK(std::abs(est.probability.estimate - exact) < 4 * se);
  CHECK(est.rate > 0.0);
}

TEST_CASE("deterministic large deviation cases") {
  const auto zero = large_deviation_probability(FieldSpec::iid(1, BaseLaw::constant(0.0)), 0.5, 0.4, 6.0, 1000);
  CHECK(zero.probability.estimate == 1.0);
  CHECK(zero.rate == 0.0);
  const auto high = large_deviation_probability(FieldSpec::iid(1, BaseLaw::constant(1.0)), 0.5, 0.4, 6.0, 1000);
  CHECK(high.probability.estimate == 0.0);
  CHECK(std::isnan(high.rate));
}

TEST_CASE("two-particle ground states sit above one-particle ones") {
  // U >= 0 gives E0(n=2) >= 2 E0(n=1) on the same field sample.
  auto h = chain(BaseLaw::uniform(1.0), 12, 2);
  h.interaction = InteractionSpec::constant(1, 1.0);
  const Coord L = 6;
  const double thr = 2.0 / std::sqrt(static_cast<double>(L));
  for (std::uint64_t t = 0; t < 30; ++t) {
    const auto one = ground_state_trial(h, 1, L, t, thr);
    const auto two = ground_state_trial(h, 2, L, t, thr);
    REQUIRE(one.ok);
    REQUIRE(two.ok);
    CHECK(two.E0 >= 2.0 * one.E0 - 1e-10);
    if (two.event) CHECK(one.event);
  }
  const auto p1 = lifshitz_tail(h, 1, L, 1.0, 200);
  const auto p2 = lifshitz_tail(h, 2, L, 1.0, 200);
  CHECK(p2.probability.estimate <= p1.probability.estimate);
}

TEST_CASE("lifshitz probability falls with the scale") {
  const auto h = chain(BaseLaw::uniform(1.0), 3);
  const auto small = lifshitz_tail(h, 1, 16, 1.0, 300);
  const auto large = lifshitz_tail(h, 1, 64, 1.0, 300);
  CHECK(large.probability.ci_high < small.probability.ci_low);
  CHECK(small.failures == 0);
}

TEST_CASE("spectral edge approaches zero") {
  const auto h = chain(BaseLaw::uniform(1.0), 4);
  const auto a = spectral_edge_estimate(h, 1, 4, 50);
  const auto b = spectral_edge_estimate(h, 1, 32, 50);
  CHECK(b.min_E0 < a.min_E0);
  CHECK(b.min_E0 >= 0.0);
}

TEST_CASE("combes-thomas ratio") {
  auto h = chain(BaseLaw::exponential(1.0, 3.0), 8, 2);
  h.interaction = InteractionSpec::constant(1, 0.5);
  const auto op = assemble(h, make_cube(1, 2, 3), 0);
  const double E0 = full_spectrum(op, false).eigenvalues.front();
  for (double eta : {1e-3, 0.1, 0.5, 0.999}) CHECK(combes_thomas_ratio(op, E0 - eta) <= 1.0);
  CHECK_THROWS_AS(combes_thomas_ratio(op, E0 - 1.5), ParameterError);
}

TEST_CASE("decay fit of an exact exponential") {
  const Cube c = make_cube(1, 1, 10);
  std::vector<double> psi(21);
  for (int i = 0; i < 21; ++i) psi[static_cast<std::size_t>(i)] = std::exp(-0.7 * std::abs(i - 10));
  const AssembledOperator op(c, std::vector<double>(21, 2.0));
  const auto fit = fit_decay(op, psi, 0.0);
  CHECK(fit.fitted_rate == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(fit.r_max == 10);
  CHECK_FALSE(fit.degenerate);
  for (double r : fit.rates) CHECK(r == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("impurity bound state decays at asinh(W/2)") {
  // V = 0 at the center and W elsewhere: psi(x) ~ exp(-mu |x|), sinh(mu) = W/2.
  const double W = 2.0;
  const Cube c = make_cube(1, 1, 20);
  std::vector<double> diag(41, 2.0 + W);
  diag[20] = 2.0;
  const AssembledOperator op(c, diag);
  const auto fits = eigenfunction_decay(op, -1.0, 2.0);
  REQUIRE(fits.size() == 1);
  CHECK(fits[0].center.coords[0] == 0);
  CHECK(fits[0].fitted_rate == doctest::Approx(std::asinh(W / 2.0)).epsilon(0.01));
  CHECK(fits[0].energy == doctest::Approx(2.0 - 2.0 * std::exp(-std::asinh(W / 2.0))).epsilon(1e-10));
}

TEST_CASE("dynamical moment against the matrix exponential") {
  auto h = chain(BaseLaw::uniform(3.0), 31, 2);
  h.interaction = InteractionSpec::constant(1, 1.0);
  const auto op = assemble(h, make_cube(1, 2, 3), 0);
  const double E0 = full_spectrum(op, false).eigenvalues.front();
  const double a = E0 - 1e-9, b = E0 + 1.5;
  const Cube K = make_cube(1, 2, 1);
  const std::vector<double> times{0.0, 0.3, 2.0, 50.0, 1e3};
  const auto m = dynamical_moment(op, a, b, 1.0, K, times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double ref = moment_by_expm(op, a, b, 1.0, K, times[k]);
    CHECK(std::abs(m.values[k] - ref) <= 1e-8 * std::max(1.0, ref));
    CHECK(m.values[k] <= m.correlator_bound * (1 + 1e-12));
  }
  const auto empty = dynamical_moment(op, -5.0, -4.0, 1.0, K, times);
  for (double v : empty.values) CHECK(v == 0.0);
  CHECK_THROWS_AS(dynamical_moment(op, a, b, 1.0, make_cube(1, 2, 4), times), InvalidInput);
}

TEST_CASE("decoupled spectra add") {
  const auto h1 = chain(BaseLaw::uniform(2.0), 41, 1);
  auto h2 = h1;
  h2.n = 2;
  const Coord L = 4;
  const auto one = full_spectrum(assemble(h1, make_cube(1, 1, L), 0), false).eigenvalues;
  const auto two = full_spectrum(assemble(h2, make_cube(1, 2, L), 0), false).eigenvalues;
  std::vector<double> sums;
  for (double x : one)
    for (double y : one) sums.push_back(x + y);
  std::sort(sums.begin(), sums.end());
  REQUIRE(sums.size() == two.size());
  for (std::size_t k = 0; k < sums.size(); ++k) CHECK(std::abs(sums[k] - two[k]) < 1e-10);
}

TEST_CASE("tensor quasi-modes") {
  HamiltonianSpec h;
  h.n = 2;
  h.d = 1;
  h.field = FieldSpec::iid(1, BaseLaw::constant(0.0));
  h.interaction = InteractionSpec::constant(1, 1.0);
  double previous = 1e300;
  for (Coord m : {2, 4, 8, 16}) {
    const auto q = free_quasi_mode(1, m);
    const std::vector<LocalState> singles{q, q};
    const auto w = weyl_tensor_residual(h, 1, m, singles);
    CHECK(w.residual <= w.single_sum + 1e-10);
    CHECK(w.residual < previous);
    previous = w.residual;
    CHECK(min_separation(w.placement) > 2 * m + h.interaction.r0);
  }
  const auto too_big = free_quasi_mode(1, 5);
  const std::vector<LocalState> singles{too_big, too_big};
  CHECK_THROWS_AS(weyl_tensor_residual(h, 1, 4, singles), InvalidInput);
}
