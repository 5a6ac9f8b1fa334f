#pragma once
// Eigenvalues, eigenvectors, spectral distances and Green functions of
// assembled operators. Dense symmetric diagonalization below
// SolverOptions::dense_limit; shift-invert Lanczos above.

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mpal/hamiltonian.hpp"

namespace mpal {

struct SolverOptions {
  std::size_t dense_limit = 2000;
  std::size_t direct_limit = 100000;
  double green_tol = 1e-10;
  double singular_tol = 1e-12;
  int krylov_dim = 64;
};

struct SpectralResult {
  std::vector<double> eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors;     // columns in cube index order; empty when not requested
  std::size_t size() const { return eigenvalues.size(); }
  bool empty() const { return eigenvalues.empty(); }
};

struct Eigenpair {
  double energy = 0.0;
  std::vector<double> vector;
};

Eigenpair lowest_eigenpair(const AssembledOperator& op, const SolverOptions& opts = {});
/// All eigenvalues (and optionally vectors) via dense diagonalization.
SpectralResult full_spectrum(const AssembledOperator& op, bool vectors = true);
/// Eigenpairs with eigenvalue in the closed window [a, b].
SpectralResult spectrum_in_window(const AssembledOperator& op, double a, double b, const SolverOptions& opts = {});
double dist_to_spectrum(const AssembledOperator& op, double E, const SolverOptions& opts = {});
/// Number of eigenvalues strictly below E (Sylvester inertia of A - E).
std::size_t count_below(const AssembledOperator& op, double E);
/// max_k |(A v_k - lambda_k v_k)| in 2-norm over the returned pairs.
double max_residual(const AssembledOperator& op, const SpectralResult& r);

/// Repeated Green-function solves on one operator at varying energies. The
/// sparsity pattern is analyzed once; each energy refactorizes numerically.
class GreenSolver {
 public:
  explicit GreenSolver(const AssembledOperator& op, SolverOptions opts = {});
  ~GreenSolver();
  GreenSolver(GreenSolver&&) noexcept;

  /// Column G(E; ., x) of (A - E)^{-1}; throws SingularResolvent when E is
  /// within singular_tol of the spectrum.
  std::vector<double> column(double E, std::size_t x_index);
  double last_relative_residual() const { return last_residual_; }
  /// Distance from E to the spectrum (exact in the dense regime).
  double dist(double E);
  /// Seed the dense-regime distance checks with a spectrum computed elsewhere.
  void set_eigenvalues(std::vector<double> ascending) { eigenvalues_ = std::move(ascending); }

 private:
  const AssembledOperator* op_;
  SolverOptions opts_;
  SparseMatrix base_;
  std::optional<std::vector<double>> eigenvalues_;
  std::unique_ptr<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> lu_;
  double last_residual_ = 0.0;
};

std::vector<double> green_column(const AssembledOperator& op, double E, const ParticleConfig& x,
                                 const SolverOptions& opts = {});

}  // namespace mpal
