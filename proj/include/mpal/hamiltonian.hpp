#pragma once
// H^{(n)} = -Delta + sum_j V(x_j) + U restricted to a cube (simple boundary
// conditions: hopping terms leaving the cube are dropped, the diagonal keeps 2dn).

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <iosfwd>
#include <span>
#include <vector>

#include "mpal/field.hpp"
#include "mpal/lattice.hpp"

namespace mpal {

/// Pair interaction Phi(r) for max-norm pair distance r; zero beyond r0.
struct InteractionSpec {
  Coord r0 = 0;
  std::vector<double> phi{0.0};  // phi[r] for r = 0..r0

  static InteractionSpec none() { return {0, {0.0}}; }
  static InteractionSpec constant(Coord r0, double u) {
    return {r0, std::vector<double>(static_cast<std::size_t>(r0 + 1), u)};
  }
  void validate() const;
  double operator()(Coord r) const {
    return r <= r0 ? phi[static_cast<std::size_t>(r)] : 0.0;
  }
  double max_value() const;
};

struct HamiltonianSpec {
  int n = 1;
  int d = 1;
  FieldSpec field;
  InteractionSpec interaction;

  void validate() const;
};

/// U(x) = sum_{i<j} Phi(|x_i - x_j|).
double interaction_energy(const ParticleConfig& x, const InteractionSpec& spec);

using SparseMatrix = Eigen::SparseMatrix<double>;

class AssembledOperator {
 public:
  AssembledOperator(Cube cube, std::vector<double> diagonal);

  const Cube& cube() const { return cube_; }
  const CubeIndexer& indexer() const { return indexer_; }
  std::size_t dim() const { return diag_.size(); }
  std::span<const double> diagonal() const { return diag_; }

  /// out = A psi via the matrix-free stencil.
  void apply(std::span<const double> psi, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> psi) const;

  SparseMatrix to_sparse() const;
  Eigen::MatrixXd to_dense() const;
  /// Number of unordered nearest-neighbour pairs inside the cube.
  std::size_t offdiag_pairs() const;
  /// Gershgorin interval containing the spectrum.
  std::pair<double, double> gershgorin() const;
  /// Coordinate text format: "row col value" per stored entry (0-based).
  void write_coo(std::ostream& os) const;

 private:
  Cube cube_;
  CubeIndexer indexer_;
  std::vector<double> diag_;
};

/// Diagonal from a precomputed potential; sample must cover every particle's
/// projection of the cube.
AssembledOperator assemble(const HamiltonianSpec& spec, const Cube& cube, const FieldSample& sample);
/// Samples the field on the minimal covering box for the given trial, then assembles.
AssembledOperator assemble(const HamiltonianSpec& spec, const Cube& cube, std::uint64_t trial);
/// Smallest box in Z^d covering all particle projections of the cube.
Box covering_box(const Cube& cube);

}  // namespace mpal
