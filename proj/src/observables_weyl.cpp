#include <cmath>
#include <numbers>

#include "mpal/error.hpp"
#include "mpal/kernels.hpp"
#include "mpal/observables.hpp"

namespace mpal {
namespace {

double norm(std::span<const double> v) { return std::sqrt(kernels::nrm2sq(v)); }

// Embeds a state given on C_r(0) into C_R(0), R >= r.
std::vector<double> pad(const LocalState& s, int d, Coord R) {
  const Box from = Box::cube(d, s.radius);
  const Box to = Box::cube(d, R);
  std::vector<double> out(to.size(), 0.0);
  std::vector<Coord> u(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < from.size(); ++i) {
    from.coords_of(i, u);
    out[to.index_of(u)] = s.values[i];
  }
  return out;
}

// Residual ||A phi|| / ||phi|| with phi given on C_R(center) and A on C_{R'}(center).
double residual_on(const AssembledOperator& op, std::span<const double> phi_on_support, const Cube& support) {
  std::vector<double> phi(op.dim(), 0.0);
  const CubeIndexer inner(support);
  std::vector<Coord> x(static_cast<std::size_t>(support.nu()));
  for (std::size_t i = 0; i < inner.size(); ++i) {
    inner.coords_of(i, x);
    phi[op.indexer().index_of(x)] = phi_on_support[i];
  }
  const std::vector<double> h = op.apply(phi);
  return norm(h) / norm(phi);
}

}  // namespace

LocalState free_quasi_mode(int d, Coord radius) {
  const Box b = Box::cube(d, radius);
  LocalState s{radius, std::vector<double>(b.size())};
  std::vector<Coord> x(static_cast<std::size_t>(d));
  const double k = std::numbers::pi / static_cast<double>(2 * radius + 2);
  for (std::size_t i = 0; i < b.size(); ++i) {
    b.coords_of(i, x);
    double v = 1.0;
    for (Coord c : x) v *= std::sin(k * static_cast<double>(c + radius + 1));
    s.values[i] = v;
  }
  const double nrm = norm(s.values);
  for (double& v : s.values) v /= nrm;
  return s;
}

WeylResidual weyl_tensor_residual(const HamiltonianSpec& spec, Coord k, Coord m, std::span<const LocalState> singles,
                                  std::uint64_t trial, WeylBoundary boundary) {
  spec.validate();
  const int n = spec.n;
  const int d = spec.d;
  if (singles.size() != static_cast<std::size_t>(n)) throw InvalidInput("need one single-particle state per particle");
  if (k < 1 || m < 1) throw InvalidInput("weyl_tensor_residual needs k >= 1 and m >= 1");
  const Coord R = k * m;
  for (const auto& s : singles) {
    if (s.radius < 0 || s.radius > R) throw InvalidInput("single-particle support not contained in C_{km}(0)");
    if (s.values.size() != Box::cube(d, s.radius).size()) throw InvalidInput("single-particle state has wrong length");
    if (!(norm(s.values) > 0.0)) throw InvalidInput("single-particle state is zero");
  }

  WeylResidual out;
  out.placement = separated_config(n, d, spec.interaction.r0, k, m);
  const Coord outer = boundary == WeylBoundary::infinite ? R + 1 : R;

  std::vector<std::vector<double>> padded;
  for (const auto& s : singles) padded.push_back(pad(s, d, R));

  // Single-particle residuals, each around its own particle position.
  HamiltonianSpec single = spec;
  single.n = 1;
  single.interaction = InteractionSpec::none();
  for (int j = 0; j < n; ++j) {
    const auto pj = out.placement.particle(j);
    const ParticleConfig center(d, 1, std::vector<Coord>(pj.begin(), pj.end()));
    const AssembledOperator op = assemble(single, Cube{center, outer}, trial);
    const double r = residual_on(op, padded[static_cast<std::size_t>(j)], Cube{center, R});
    out.single_residuals.push_back(r);
    out.single_sum += r;
  }

  // Tensor product on C^{(n)}_R(placement), first particle most significant.
  const Cube support{out.placement, R};
  const CubeIndexer six(support);
  const std::size_t per = Box::cube(d, R).size();
  std::vector<double> phi(six.size());
  ParticleConfig x = out.placement;
  for (std::size_t i = 0; i < six.size(); ++i) {
    std::size_t rest = i;
    double v = 1.0;
    for (int j = n - 1; j >= 0; --j) {
      v *= padded[static_cast<std::size_t>(j)][rest % per];
      rest /= per;
    }
    phi[i] = v;
    if (v != 0.0) {
      six.coords_of(i, x.coords);
      if (interaction_energy(x, spec.interaction) != 0.0) {
        throw InvalidInput("interaction does not vanish on the product support");
      }
    }
  }

  const AssembledOperator op = assemble(spec, Cube{out.placement, outer}, trial);
  out.residual = residual_on(op, phi, support);
  if (out.residual > out.single_sum + 1e-10) {
    throw Error("tensor Weyl inequality violated: " + std::to_string(out.residual) + " > " +
                std::to_string(out.single_sum));
  }
  return out;
}

}  // namespace mpal
