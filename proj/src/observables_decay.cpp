#include <cmath>
#include <limits>

#include "mpal/error.hpp"
#include "mpal/kernels.hpp"
#include "mpal/observables.hpp"
#include "mpal/stats.hpp"

namespace mpal {

DecayFit fit_decay(const AssembledOperator& op, std::span<const double> psi, double energy) {
  if (psi.size() != op.dim()) throw InvalidInput("fit_decay: vector length does not match the operator");
  const CubeIndexer& ix = op.indexer();
  std::size_t imax = 0;
  for (std::size_t i = 1; i < psi.size(); ++i) {
    if (std::abs(psi[i]) > std::abs(psi[imax])) imax = i;
  }
  DecayFit fit;
  fit.energy = energy;
  fit.center = ix.point(imax);
  const double peak = std::abs(psi[imax]);
  const double floor = 10.0 * std::numeric_limits<double>::epsilon() * peak;

  // Shells in the max-norm around the localization center.
  Coord rmax = 0;
  ParticleConfig x = fit.center;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    ix.coords_of(i, x.coords);
    rmax = std::max(rmax, max_dist(x.coords, fit.center.coords));
  }
  std::vector<double> shell_max(static_cast<std::size_t>(rmax + 1), 0.0);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    ix.coords_of(i, x.coords);
    auto& slot = shell_max[static_cast<std::size_t>(max_dist(x.coords, fit.center.coords))];
    slot = std::max(slot, std::abs(psi[i]));
  }

  // Contiguous run of shells above the noise floor, starting at r = 0.
  std::vector<double> rs, logs;
  for (std::size_t r = 0; r < shell_max.size(); ++r) {
    if (!(shell_max[r] > floor)) break;
    rs.push_back(static_cast<double>(r));
    logs.push_back(std::log(shell_max[r]));
  }
  fit.shell_log_max = logs;
  for (std::size_t r = 1; r < logs.size(); ++r) fit.rates.push_back(logs[r - 1] - logs[r]);
  if (rs.size() < 2) {
    fit.degenerate = true;
    fit.fitted_rate = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  fit.r_min = 0;
  fit.r_max = static_cast<int>(rs.size() - 1);
  fit.fitted_rate = -ls_slope(rs, logs);
  return fit;
}

std::vector<DecayFit> eigenfunction_decay(const AssembledOperator& op, double a, double b, const SolverOptions& opts) {
  const SpectralResult r = spectrum_in_window(op, a, b, opts);
  std::vector<DecayFit> fits;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const auto col = r.eigenvectors.col(static_cast<Eigen::Index>(k));
    fits.push_back(fit_decay(op, std::span<const double>(col.data(), op.dim()), r.eigenvalues[k]));
  }
  return fits;
}

std::vector<double> default_time_grid() {
  std::vector<double> t{0.0};
  for (int e = -1; e <= 6; ++e) t.push_back(std::pow(10.0, e));
  return t;
}

DynamicalMoment dynamical_moment(const AssembledOperator& op, double a, double b, double s, const Cube& K,
                                 std::span<const double> times, const SolverOptions& opts) {
  if (!(s >= 0.0)) throw InvalidInput("dynamical_moment needs s >= 0");
  if (K.d() != op.cube().d() || K.n() != op.cube().n()) throw InvalidInput("K has the wrong shape");
  std::vector<std::size_t> kidx;
  for (const auto& y : cube_points(K)) {
    if (!op.indexer().contains(y.coords)) throw InvalidInput("K is not contained in the operator's cube");
    kidx.push_back(op.indexer().index_of(y.coords));
  }

  DynamicalMoment out;
  out.times.assign(times.begin(), times.end());
  out.values.assign(times.size(), 0.0);

  const SpectralResult spec = spectrum_in_window(op, a, b, opts);
  if (spec.empty()) return out;

  const auto dim = static_cast<Eigen::Index>(op.dim());
  const auto nk = static_cast<Eigen::Index>(kidx.size());
  const auto nev = static_cast<Eigen::Index>(spec.size());
  std::vector<double> weight(op.dim());
  ParticleConfig x = op.cube().center;
  for (std::size_t i = 0; i < op.dim(); ++i) {
    op.indexer().coords_of(i, x.coords);
    weight[i] = std::pow(static_cast<double>(max_norm(x.coords)), s);
  }

  const Eigen::MatrixXd& Psi = spec.eigenvectors;
  Eigen::MatrixXd PsiK(nk, nev);
  for (Eigen::Index q = 0; q < nk; ++q) PsiK.row(q) = Psi.row(static_cast<Eigen::Index>(kidx[static_cast<std::size_t>(q)]));

  const auto& kt = kernels::active();
  auto weighted_total = [&](const Eigen::MatrixXd& re, const Eigen::MatrixXd* im) {
    double total = 0.0;
    for (Eigen::Index q = 0; q < nk; ++q) {
      total += kt.weighted_sumsq(weight.data(), re.col(q).data(), im ? im->col(q).data() : nullptr,
                                 static_cast<std::size_t>(dim));
    }
    return total;
  };

  const Eigen::MatrixXd corr = Psi.cwiseAbs() * PsiK.cwiseAbs().transpose();
  out.correlator_bound = weighted_total(corr, nullptr);

  const Eigen::Map<const Eigen::VectorXd> lambda(spec.eigenvalues.data(), nev);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const double t = times[ti];
    const Eigen::VectorXd c = (lambda * t).array().cos();
    const Eigen::VectorXd sn = (lambda * t).array().sin();
    const Eigen::MatrixXd re = Psi * c.asDiagonal() * PsiK.transpose();
    const Eigen::MatrixXd im = -(Psi * sn.asDiagonal() * PsiK.transpose());
    out.values[ti] = weighted_total(re, &im);
    out.sup = std::max(out.sup, out.values[ti]);
  }
  return out;
}

}  // namespace mpal
