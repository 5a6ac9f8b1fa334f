#include "mpal/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mpal/error.hpp"
#include "mpal/kernels.hpp"

namespace mpal {

void InteractionSpec::validate() const {
  if (r0 < 0) throw InvalidInput("interaction range r0 must be >= 0");
  if (phi.size() != static_cast<std::size_t>(r0 + 1)) throw InvalidInput("phi must have r0 + 1 entries");
  for (double v : phi) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("phi must be finite and non-negative");
  }
}

double InteractionSpec::max_value() const {
  return phi.empty() ? 0.0 : *std::max_element(phi.begin(), phi.end());
}

void HamiltonianSpec::validate() const {
  if (n < 1 || d < 1) throw InvalidInput("n and d must be positive");
  if (field.d != d) throw InvalidInput("field dimension does not match d");
  field.validate();
  interaction.validate();
}

double interaction_energy(const ParticleConfig& x, const InteractionSpec& spec) {
  double u = 0.0;
  for (int i = 0; i < x.n; ++i) {
    for (int j = i + 1; j < x.n; ++j) u += spec(max_dist(x.particle(i), x.particle(j)));
  }
  return u;
}

AssembledOperator::AssembledOperator(Cube cube, std::vector<double> diagonal)
    : cube_(std::move(cube)), indexer_(cube_), diag_(std::move(diagonal)) {
  if (diag_.size() != indexer_.size()) throw InvalidInput("diagonal length does not match the cube");
}

void AssembledOperator::apply(std::span<const double> psi, std::span<double> out) const {
  if (psi.size() != dim() || out.size() != dim()) throw InvalidInput("apply: dimension mismatch");
  kernels::mul(out, diag_, psi);
  const std::size_t w = static_cast<std::size_t>(cube_.width());
  if (w < 2) return;
  // Along axis k with stride s, blocks of length s*w repeat; inside a block
  // the +s neighbour exists for the first s*(w-1) entries, the -s neighbour
  // for the last s*(w-1). Both are contiguous runs.
  for (int axis = 0; axis < cube_.nu(); ++axis) {
    const std::size_t s = indexer_.stride(axis);
    const std::size_t block = s * w;
    const std::size_t run = s * (w - 1);
    for (std::size_t b = 0; b < dim(); b += block) {
      kernels::sub(out.subspan(b, run), psi.subspan(b + s, run));
      kernels::sub(out.subspan(b + s, run), psi.subspan(b, run));
    }
  }
}

std::vector<double> AssembledOperator::apply(std::span<const double> psi) const {
  std::vector<double> out(dim());
  apply(psi, out);
  return out;
}

SparseMatrix AssembledOperator::to_sparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(dim() * (1 + 2 * static_cast<std::size_t>(cube_.nu())));
  const std::size_t w = static_cast<std::size_t>(cube_.width());
  for (std::size_t i = 0; i < dim(); ++i) trips.emplace_back(i, i, diag_[i]);
  for (int axis = 0; axis < cube_.nu(); ++axis) {
    const std::size_t s = indexer_.stride(axis);
    for (std::size_t i = 0; i < dim(); ++i) {
      if ((i / s) % w != w - 1) {
        trips.emplace_back(i, i + s, -1.0);
        trips.emplace_back(i + s, i, -1.0);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(dim());
  SparseMatrix m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Eigen::MatrixXd AssembledOperator::to_dense() const { return Eigen::MatrixXd(to_sparse()); }

std::size_t AssembledOperator::offdiag_pairs() const {
  const auto w = static_cast<std::size_t>(cube_.width());
  return static_cast<std::size_t>(cube_.nu()) * (dim() / w) * (w - 1);
}

std::pair<double, double> AssembledOperator::gershgorin() const {
  const double radius = cube_.width() > 1 ? 2.0 * cube_.nu() : 0.0;
  const auto [lo, hi] = std::minmax_element(diag_.begin(), diag_.end());
  return {*lo - radius, *hi + radius};
}

void AssembledOperator::write_coo(std::ostream& os) const {
  const SparseMatrix m = to_sparse();
  const auto old_precision = os.precision(17);
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  }
  os.precision(old_precision);
}

Box covering_box(const Cube& cube) {
  const int d = cube.d();
  Box b{std::vector<Coord>(static_cast<std::size_t>(d)), std::vector<Coord>(static_cast<std::size_t>(d))};
  for (int k = 0; k < d; ++k) {
    Coord lo = cube.center.coords[static_cast<std::size_t>(k)];
    Coord hi = lo;
    for (int j = 0; j < cube.n(); ++j) {
      const Coord c = cube.center.coords[static_cast<std::size_t>(j * d + k)];
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    b.lo[static_cast<std::size_t>(k)] = lo - cube.radius;
    b.hi[static_cast<std::size_t>(k)] = hi + cube.radius;
  }
  return b;
}

AssembledOperator assemble(const HamiltonianSpec& spec, const Cube& cube, const FieldSample& sample) {
  spec.validate();
  if (cube.d() != spec.d || cube.n() != spec.n) throw InvalidInput("cube shape does not match the Hamiltonian");
  for (int j = 0; j < cube.n(); ++j) {
    if (!sample.region.contains(Box::around(cube.center.particle(j), cube.radius))) {
      throw CoverageError("field sample does not cover the cube projection of particle " + std::to_string(j));
    }
  }
  CubeIndexer ix(cube);
  std::vector<double> diag(ix.size());
  const double kinetic = 2.0 * spec.d * spec.n;
  ParticleConfig x = ParticleConfig::origin(spec.d, spec.n);
  for (std::size_t i = 0; i < ix.size(); ++i) {
    ix.coords_of(i, x.coords);
    double v = kinetic;
    for (int j = 0; j < spec.n; ++j) v += sample.values[sample.region.index_of(x.particle(j))];
    if (spec.n > 1) v += interaction_energy(x, spec.interaction);
    diag[i] = v;
  }
  return AssembledOperator(cube, std::move(diag));
}

AssembledOperator assemble(const HamiltonianSpec& spec, const Cube& cube, std::uint64_t trial) {
  return assemble(spec, cube, sample_field(spec.field, covering_box(cube), trial));
}

}  // namespace mpal
