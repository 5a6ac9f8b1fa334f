#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "mpal/hamiltonian.hpp"
#include "mpal/kernels.hpp"

using namespace mpal;

namespace {

std::vector<double> randoms(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = U(rng);
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar reference kernels") {
  const auto& k = kernels::scalar_table();
  std::vector<double> a{1, 2, 3}, b{4, 5, 6}, out(3);
  k.mul(out.data(), a.data(), b.data(), 3);
  CHECK(out == std::vector<double>{4, 10, 18});
  k.axpy(out.data(), 2.0, a.data(), 3);
  CHECK(out == std::vector<double>{6, 14, 24});
  k.sub(out.data(), b.data(), 3);
  CHECK(out == std::vector<double>{2, 9, 18});
  CHECK(k.dot(a.data(), b.data(), 3) == 32.0);
  CHECK(k.weighted_sumsq(a.data(), b.data(), nullptr, 3) == 16.0 + 50.0 + 108.0);
  CHECK(k.weighted_sumsq(a.data(), b.data(), a.data(), 3) == 17.0 + 58.0 + 135.0);
}

TEST_CASE("avx2 kernels match the scalar reference") {
  const auto* v = kernels::avx2_table();
  if (!v) {
    MESSAGE("AVX2 not available; equivalence test skipped");
    return;
  }
  const auto& s = kernels::scalar_table();
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 63u, 64u, 65u, 1000u}) {
    for (std::size_t offset : {0u, 1u, 3u}) {
      const auto a_all = randoms(n + offset, 1 + n);
      const auto b_all = randoms(n + offset, 2 + n);
      const auto w_all = randoms(n + offset, 3 + n);
      const double* a = a_all.data() + offset;
      const double* b = b_all.data() + offset;
      const double* w = w_all.data() + offset;

      std::vector<double> o1(n), o2(n);
      s.mul(o1.data(), a, b, n);
      v->mul(o2.data(), a, b, n);
      CHECK(bitwise_equal(o1, o2));

      std::vector<double> y1(b, b + n), y2(b, b + n);
      s.axpy(y1.data(), -0.37, a, n);
      v->axpy(y2.data(), -0.37, a, n);
      CHECK(bitwise_equal(y1, y2));

      s.sub(y1.data(), a, n);
      v->sub(y2.data(), a, n);
      CHECK(bitwise_equal(y1, y2));

      double mag = 0;
      for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
      CHECK(std::abs(s.dot(a, b, n) - v->dot(a, b, n)) <= 1e-12 * std::max(1.0, mag));

      double wmag = 0;
      for (std::size_t i = 0; i < n; ++i) wmag += std::abs(w[i]) * (a[i] * a[i] + b[i] * b[i]);
      CHECK(std::abs(s.weighted_sumsq(w, a, b, n) - v->weighted_sumsq(w, a, b, n)) <= 1e-12 * std::max(1.0, wmag));
      CHECK(std::abs(s.weighted_sumsq(w, a, nullptr, n) - v->weighted_sumsq(w, a, nullptr, n)) <=
            1e-12 * std::max(1.0, wmag));
    }
  }
}

TEST_CASE("stencil apply is identical under both kernel sets") {
  if (!kernels::avx2_table()) {
    MESSAGE("AVX2 not available; equivalence test skipped");
    return;
  }
  HamiltonianSpec h;
  h.n = 2;
  h.d = 2;
  h.field = FieldSpec::box(2, 1, BaseLaw::uniform(1.0), 3);
  h.interaction = InteractionSpec::constant(1, 0.5);
  const auto psi = randoms(5 * 5 * 5 * 5, 9);

  REQUIRE(kernels::select(kernels::Isa::scalar));
  const auto op_s = assemble(h, make_cube(2, 2, 2), 1);
  const auto out_s = op_s.apply(psi);
  const auto field_s = sample_field(h.field, Box::cube(2, 30), 1).values;

  REQUIRE(kernels::select(kernels::Isa::avx2));
  const auto op_v = assemble(h, make_cube(2, 2, 2), 1);
  const auto out_v = op_v.apply(psi);
  const auto field_v = sample_field(h.field, Box::cube(2, 30), 1).values;

  CHECK(bitwise_equal(out_s, out_v));
  CHECK(bitwise_equal(field_s, field_v));
  CHECK(kernels::active_isa() == kernels::Isa::avx2);
}

TEST_CASE("isa names") {
  CHECK(kernels::isa_name(kernels::Isa::scalar) == "scalar");
  CHECK(kernels::isa_name(kernels::Isa::avx2) == "avx2");
  CHECK(kernels::select(kernels::Isa::scalar));
  CHECK(kernels::active_isa() == kernels::Isa::scalar);
}
