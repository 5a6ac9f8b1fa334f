#include "mpal/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mpal/error.hpp"
#include "mpal/kernels.hpp"
#include "mpal/rng.hpp"

namespace mpal::lanczos {
namespace {

// Two passes of classical Gram-Schmidt against the columns [0, cols) of Q.
void orthogonalize(Eigen::Ref<Eigen::VectorXd> v, const Eigen::MatrixXd& Q, Eigen::Index cols) {
  if (cols == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd h = Q.leftCols(cols).transpose() * v;
    v.noalias() -= Q.leftCols(cols) * h;
  }
}

double norm(const Eigen::VectorXd& v) {
  return std::sqrt(kernels::nrm2sq(std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))));
}

std::vector<Eigen::Index> wanted_order(const Eigen::VectorXd& theta, Which which) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(theta.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    switch (which) {
      case Which::smallest: return theta[a] < theta[b];
      case Which::largest: return theta[a] > theta[b];
      case Which::largest_magnitude: return std::abs(theta[a]) > std::abs(theta[b]);
    }
    return false;
  });
  return idx;
}

}  // namespace

Result extreme_eigenpairs(const LinearMap& op, std::size_t dim, int count, Which which, const Options& opts) {
  if (count < 1 || static_cast<std::size_t>(count) > dim) throw InvalidInput("lanczos: invalid eigenpair count");
  const auto n = static_cast<Eigen::Index>(dim);

  Eigen::MatrixXd locked(n, count);
  Eigen::VectorXd locked_values(count);
  Eigen::Index nlocked = 0;

  rng::Stream stream(opts.seed);
  Eigen::VectorXd start(n);
  for (Eigen::Index i = 0; i < n; ++i) start[i] = stream.uniform(-1.0, 1.0);
  int applications = 0;
  std::vector<double> xbuf(dim), ybuf(dim);

  // Thick restart: columns [0, kept) of V hold Ritz vectors whose couplings to
  // column `kept` sit in the arrowhead part of T.
  Eigen::MatrixXd V;
  Eigen::MatrixXd T;
  Eigen::Index kept = 0;
  bool fresh = true;

  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    const Eigen::Index room = n - nlocked;
    const Eigen::Index m = std::min<Eigen::Index>(std::max(opts.krylov_dim, 2 * count + 8), room);

    if (fresh) {
      V = Eigen::MatrixXd::Zero(n, m + 1);
      T = Eigen::MatrixXd::Zero(m, m);
      kept = 0;
      Eigen::VectorXd v = start;
      orthogonalize(v, locked, nlocked);
      double nv = norm(v);
      if (nv < 1e-300) {
        for (Eigen::Index i = 0; i < n; ++i) v[i] = stream.uniform(-1.0, 1.0);
        orthogonalize(v, locked, nlocked);
        nv = norm(v);
      }
      V.col(0) = v / nv;
      fresh = false;
    }

    Eigen::Index steps = kept;
    bool invariant = false;
    double b = 0.0;
    for (Eigen::Index j = kept; j < m; ++j) {
      std::copy(V.col(j).data(), V.col(j).data() + n, xbuf.begin());
      op(xbuf, ybuf);
      ++applications;
      Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(ybuf.data(), n);
      T(j, j) = V.col(j).dot(w);
      orthogonalize(w, locked, nlocked);
      orthogonalize(w, V, j + 1);
      steps = j + 1;
      b = norm(w);
      const double scale = std::max(1.0, T.topLeftCorner(steps, steps).diagonal().cwiseAbs().maxCoeff());
      if (b <= 1e-14 * scale) {
        invariant = true;
        break;
      }
      V.col(j + 1) = w / b;
      if (j + 1 < m) T(j, j + 1) = T(j + 1, j) = b;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri(T.topLeftCorner(steps, steps));
    const Eigen::VectorXd& theta = tri.eigenvalues();
    const Eigen::MatrixXd& S = tri.eigenvectors();
    const auto order = wanted_order(theta, which);
    const double scale = std::max(1e-300, theta.cwiseAbs().maxCoeff());
    const double tail = invariant ? 0.0 : b;

    // Lock consecutive converged pairs from the wanted end.
    std::size_t pos = 0;
    while (pos < order.size() && nlocked < count) {
      const Eigen::Index i = order[pos];
      const double resid = std::abs(tail * S(steps - 1, i));
      if (resid > opts.tol * scale) break;
      Eigen::VectorXd x = V.leftCols(steps) * S.col(i);
      orthogonalize(x, locked, nlocked);
      x /= norm(x);
      locked.col(nlocked) = x;
      locked_values[nlocked] = theta[i];
      ++nlocked;
      ++pos;
    }
    if (nlocked == count) break;
    if (nlocked == n) break;
    if (restart == opts.max_restarts) {
      throw SolverError("lanczos did not converge", applications);
    }

    const Eigen::Index remaining = static_cast<Eigen::Index>(order.size() - pos);
    if (invariant || remaining < 2 || m >= n - nlocked) {
      // Start over from the best unconverged direction.
      start = remaining > 0 ? Eigen::VectorXd(V.leftCols(steps) * S.col(order[pos])) : Eigen::VectorXd::Zero(n);
      if (invariant || remaining == 0) {
        for (Eigen::Index i = 0; i < n; ++i) start[i] += 1e-3 * stream.uniform(-1.0, 1.0);
      }
      fresh = true;
      continue;
    }

    const Eigen::Index want = count - nlocked;
    Eigen::Index keep = std::max<Eigen::Index>(steps / 2, want + 2);
    keep = std::min({keep, remaining, m - 1});
    Eigen::MatrixXd nextV = Eigen::MatrixXd::Zero(n, m + 1);
    Eigen::MatrixXd nextT = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index q = 0; q < keep; ++q) {
      const Eigen::Index i = order[pos + static_cast<std::size_t>(q)];
      nextV.col(q) = V.leftCols(steps) * S.col(i);
      nextT(q, q) = theta[i];
      nextT(q, keep) = nextT(keep, q) = b * S(steps - 1, i);
    }
    nextV.col(keep) = V.col(steps);
    V = std::move(nextV);
    T = std::move(nextT);
    kept = keep;
  }

  // Order the locked pairs by `which`.
  const Eigen::VectorXd vals = locked_values.head(nlocked);
  const auto order = wanted_order(vals, which);
  Result r;
  r.values.resize(nlocked);
  r.vectors.resize(n, nlocked);
  for (Eigen::Index k = 0; k < nlocked; ++k) {
    r.values[k] = vals[order[static_cast<std::size_t>(k)]];
    r.vectors.col(k) = locked.col(order[static_cast<std::size_t>(k)]);
  }
  r.iterations = applications;
  return r;
}

}  // namespace mpal::lanczos
