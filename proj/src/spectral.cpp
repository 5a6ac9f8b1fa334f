#include "mpal/spectral.hpp"

#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpal/error.hpp"
#include "mpal/kernels.hpp"
#include "mpal/lanczos.hpp"

namespace mpal {
namespace {

SparseMatrix shifted(const SparseMatrix& A, double sigma) {
  SparseMatrix M = A;
  for (Eigen::Index i = 0; i < M.rows(); ++i) M.coeffRef(i, i) -= sigma;
  return M;
}

double operator_scale(const AssembledOperator& op) {
  const auto [lo, hi] = op.gershgorin();
  return std::max({1.0, std::abs(lo), std::abs(hi)});
}

// Deterministic sign: largest-magnitude component positive.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0) v = -v;
}

double rayleigh(const AssembledOperator& op, const Eigen::VectorXd& v) {
  std::vector<double> out(op.dim());
  op.apply(std::span<const double>(v.data(), op.dim()), out);
  return kernels::dot(std::span<const double>(v.data(), op.dim()), out) / v.squaredNorm();
}

}  // namespace

SpectralResult full_spectrum(const AssembledOperator& op, bool vectors) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.to_dense(),
                                                    vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("dense symmetric eigensolver failed", 0);
  SpectralResult r;
  r.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  if (vectors) {
    r.eigenvectors = es.eigenvectors();
    for (Eigen::Index k = 0; k < r.eigenvectors.cols(); ++k) fix_sign(r.eigenvectors.col(k));
  }
  return r;
}

std::size_t count_below(const AssembledOperator& op, double E) {
  const SparseMatrix A = op.to_sparse();
  const double scale = operator_scale(op);
  double shift = E;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted(A, shift));
    if (ldlt.info() == Eigen::Success) {
      const Eigen::VectorXd D = ldlt.vectorD();
      return static_cast<std::size_t>((D.array() < 0.0).count());
    }
    // Zero pivot: move E slightly down (keeps "strictly below" semantics
    // up to the perturbation).
    shift -= 1e-13 * scale * std::pow(10.0, attempt);
  }
  throw SolverError("LDLT inertia count failed", 0);
}

Eigenpair lowest_eigenpair(const AssembledOperator& op, const SolverOptions& opts) {
  if (op.dim() == 0) throw InvalidInput("empty operator");
  if (op.dim() < opts.dense_limit) {
    SpectralResult r = full_spectrum(op, true);
    Eigenpair p;
    p.energy = r.eigenvalues.front();
    p.vector.assign(r.eigenvectors.col(0).data(), r.eigenvectors.col(0).data() + op.dim());
    return p;
  }

  // Shift-invert below the Gershgorin bound: (A - sigma) is positive definite.
  const double scale = operator_scale(op);
  const double sigma = op.gershgorin().first - 1e-2 * scale;
  const SparseMatrix A = op.to_sparse();
  Eigen::SimplicialLLT<SparseMatrix> llt(shifted(A, sigma));
  if (llt.info() != Eigen::Success) throw SolverError("Cholesky of A - sigma failed", 0);
  const auto n = static_cast<Eigen::Index>(op.dim());
  lanczos::LinearMap inv = [&](std::span<const double> x, std::span<double> y) {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
    Eigen::Map<Eigen::VectorXd>(y.data(), n) = llt.solve(xv);
  };
  lanczos::Options lo;
  lo.krylov_dim = opts.krylov_dim;
  const auto res = lanczos::extreme_eigenpairs(inv, op.dim(), 1, lanczos::Which::largest, lo);
  Eigen::VectorXd v = res.vectors.col(0);
  fix_sign(v);
  Eigenpair p;
  p.energy = rayleigh(op, v);
  p.vector.assign(v.data(), v.data() + n);
  return p;
}

SpectralResult spectrum_in_window(const AssembledOperator& op, double a, double b, const SolverOptions& opts) {
  if (a > b) throw InvalidInput("spectrum_in_window: need a <= b");
  if (op.dim() < opts.dense_limit) {
    SpectralResult all = full_spectrum(op, true);
    SpectralResult r;
    std::vector<Eigen::Index> keep;
    for (std::size_t k = 0; k < all.eigenvalues.size(); ++k) {
      if (all.eigenvalues[k] >= a && all.eigenvalues[k] <= b) keep.push_back(static_cast<Eigen::Index>(k));
    }
    r.eigenvectors.resize(static_cast<Eigen::Index>(op.dim()), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t q = 0; q < keep.size(); ++q) {
      r.eigenvalues.push_back(all.eigenvalues[static_cast<std::size_t>(keep[q])]);
      r.eigenvectors.col(static_cast<Eigen::Index>(q)) = all.eigenvectors.col(keep[q]);
    }
    return r;
  }

  const double scale = operator_scale(op);
  const double delta = 1e-12 * std::max({scale, std::abs(a), std::abs(b)});
  const std::size_t below_b = count_below(op, b + delta);
  const std::size_t below_a = count_below(op, a - delta);
  SpectralResult r;
  if (below_b <= below_a) {
    r.eigenvectors.resize(static_cast<Eigen::Index>(op.dim()), 0);
    return r;
  }
  const int wanted = static_cast<int>(below_b - below_a);

  const SparseMatrix A = op.to_sparse();
  double sigma = 0.5 * (a + b);
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  for (int attempt = 0;; ++attempt) {
    lu.compute(shifted(A, sigma));
    if (lu.info() == Eigen::Success) break;
    if (attempt == 6) throw SolverError("factorization of A - sigma failed", attempt);
    sigma += 1e-9 * scale * std::pow(10.0, attempt);
  }
  const auto n = static_cast<Eigen::Index>(op.dim());
  lanczos::LinearMap inv = [&](std::span<const double> x, std::span<double> y) {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
    Eigen::Map<Eigen::VectorXd>(y.data(), n) = lu.solve(xv);
  };
  lanczos::Options lo;
  lo.krylov_dim = opts.krylov_dim;
  const auto res = lanczos::extreme_eigenpairs(inv, op.dim(), wanted, lanczos::Which::largest_magnitude, lo);

  std::vector<std::pair<double, Eigen::Index>> found;
  for (Eigen::Index k = 0; k < res.values.size(); ++k) {
    found.emplace_back(rayleigh(op, res.vectors.col(k)), k);
  }
  std::sort(found.begin(), found.end());
  r.eigenvectors.resize(n, static_cast<Eigen::Index>(found.size()));
  Eigen::Index col = 0;
  for (const auto& [lambda, k] : found) {
    r.eigenvalues.push_back(lambda);
    Eigen::VectorXd v = res.vectors.col(k);
    fix_sign(v);
    r.eigenvectors.col(col++) = v;
  }
  return r;
}

double dist_to_spectrum(const AssembledOperator& op, double E, const SolverOptions& opts) {
  if (op.dim() < opts.dense_limit) {
    const SpectralResult r = full_spectrum(op, false);
    double best = std::numeric_limits<double>::infinity();
    for (double l : r.eigenvalues) best = std::min(best, std::abs(l - E));
    return best;
  }
  const SparseMatrix A = op.to_sparse();
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu(shifted(A, E));
  if (lu.info() != Eigen::Success) return 0.0;
  const auto n = static_cast<Eigen::Index>(op.dim());
  lanczos::LinearMap inv = [&](std::span<const double> x, std::span<double> y) {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
    Eigen::Map<Eigen::VectorXd>(y.data(), n) = lu.solve(xv);
  };
  lanczos::Options lo;
  lo.krylov_dim = opts.krylov_dim;
  const auto res = lanczos::extreme_eigenpairs(inv, op.dim(), 1, lanczos::Which::largest_magnitude, lo);
  return std::abs(rayleigh(op, res.vectors.col(0)) - E);
}

double max_residual(const AssembledOperator& op, const SpectralResult& r) {
  double worst = 0.0;
  std::vector<double> out(op.dim());
  for (Eigen::Index k = 0; k < r.eigenvectors.cols(); ++k) {
    const Eigen::VectorXd v = r.eigenvectors.col(k);
    op.apply(std::span<const double>(v.data(), op.dim()), out);
    double s = 0.0;
    for (std::size_t i = 0; i < op.dim(); ++i) {
      const double e = out[i] - r.eigenvalues[static_cast<std::size_t>(k)] * v[static_cast<Eigen::Index>(i)];
      s += e * e;
    }
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

GreenSolver::GreenSolver(const AssembledOperator& op, SolverOptions opts)
    : op_(&op), opts_(opts), base_(op.to_sparse()) {
  if (op.dim() <= opts_.direct_limit) {
    lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>();
    lu_->analyzePattern(base_);
  }
}

GreenSolver::~GreenSolver() = default;
GreenSolver::GreenSolver(GreenSolver&&) noexcept = default;

double GreenSolver::dist(double E) {
  if (op_->dim() < opts_.dense_limit) {
    if (!eigenvalues_) eigenvalues_ = full_spectrum(*op_, false).eigenvalues;
    const auto& ev = *eigenvalues_;
    auto it = std::lower_bound(ev.begin(), ev.end(), E);
    double best = std::numeric_limits<double>::infinity();
    if (it != ev.end()) best = std::min(best, *it - E);
    if (it != ev.begin()) best = std::min(best, E - *(it - 1));
    return best;
  }
  return dist_to_spectrum(*op_, E, opts_);
}

std::vector<double> GreenSolver::column(double E, std::size_t x_index) {
  const std::size_t dim = op_->dim();
  if (x_index >= dim) throw InvalidInput("green column index out of range");
  if (dim < opts_.dense_limit) {
    if (dist(E) < opts_.singular_tol) throw SingularResolvent("energy lies in the spectrum");
  } else {
    const double tol = opts_.singular_tol;
    if (count_below(*op_, E + tol) != count_below(*op_, E - tol)) {
      throw SingularResolvent("energy lies in the spectrum");
    }
  }

  const auto n = static_cast<Eigen::Index>(dim);
  const SparseMatrix M = shifted(base_, E);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[static_cast<Eigen::Index>(x_index)] = 1.0;
  Eigen::VectorXd g;
  if (lu_) {
    lu_->factorize(M);
    if (lu_->info() != Eigen::Success) throw SingularResolvent("resolvent factorization is singular");
    g = lu_->solve(rhs);
    Eigen::VectorXd r = rhs - M * g;
    if (r.norm() > opts_.green_tol) g += lu_->solve(r);  // one step of refinement
  } else {
    Eigen::MINRES<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IdentityPreconditioner> minres;
    minres.setTolerance(opts_.green_tol);
    minres.setMaxIterations(static_cast<Eigen::Index>(10 * dim));
    minres.compute(M);
    g = minres.solve(rhs);
    if (minres.info() != Eigen::Success) {
      throw SolverError("MINRES did not reach the residual tolerance", static_cast<int>(minres.iterations()));
    }
  }
  last_residual_ = (rhs - M * g).norm();
  return std::vector<double>(g.data(), g.data() + n);
}

std::vector<double> green_column(const AssembledOperator& op, double E, const ParticleConfig& x,
                                 const SolverOptions& opts) {
  GreenSolver gs(op, opts);
  return gs.column(E, op.indexer().index_of(x.coords));
}

}  // namespace mpal
