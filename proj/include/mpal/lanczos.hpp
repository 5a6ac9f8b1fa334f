#pragma once
// Thick-restart Lanczos with full reorthogonalization and locking.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>

namespace mpal::lanczos {

/// y = Op x for a symmetric operator.
using LinearMap = std::function<void(std::span<const double> x, std::span<double> y)>;

enum class Which { smallest, largest, largest_magnitude };

struct Options {
  int krylov_dim = 64;
  int max_restarts = 300;
  double tol = 1e-12;  // relative Ritz residual |beta s_m| / max|theta|
  std::uint64_t seed = 0x5eed;
};

struct Result {
  Eigen::VectorXd values;   // eigenvalues of Op, ordered by `which`
  Eigen::MatrixXd vectors;  // orthonormal columns
  int iterations = 0;       // operator applications
};

/// The `count` extreme eigenpairs of a symmetric map on R^dim.
/// Throws SolverError when the restart budget runs out.
Result extreme_eigenpairs(const LinearMap& op, std::size_t dim, int count, Which which, const Options& opts = {});

}  // namespace mpal::lanczos
