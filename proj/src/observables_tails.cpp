#include <cmath>
#include <limits>
#include <numeric>

#include "mpal/error.hpp"
#include "mpal/observables.hpp"
#include "mpal/parallel.hpp"

namespace mpal {
namespace {

double ground_energy(const AssembledOperator& op, const SolverOptions& opts) {
  if (op.dim() < opts.dense_limit) return full_spectrum(op, false).eigenvalues.front();
  return lowest_eigenpair(op, opts).energy;
}

}  // namespace

Coord large_deviation_scale(double E, double beta) {
  if (!(E * beta > 0.0)) throw ParameterError("large deviations need beta * E > 0");
  const double L = std::floor(1.0 / std::sqrt(beta * E));
  if (L < 2.0) throw ParameterError("L = floor((beta E)^{-1/2}) must be at least 2");
  if (L > 1e9) throw ParameterError("L = floor((beta E)^{-1/2}) is too large");
  return static_cast<Coord>(L);
}

LargeDeviationRecord large_deviation_trial(const FieldSpec& spec, double E, double beta, double c,
                                           std::uint64_t trial) {
  const Coord L = large_deviation_scale(E, beta);
  const FieldSample truncated = truncate_field(sample_field(spec, Box::cube(spec.d, L), trial), L, c);
  LargeDeviationRecord r;
  r.trial = trial;
  r.cube_average = std::accumulate(truncated.values.begin(), truncated.values.end(), 0.0) /
                   static_cast<double>(truncated.values.size());
  r.event = r.cube_average < E / 2.0;
  return r;
}

LargeDeviationEstimate aggregate_large_deviation(std::vector<LargeDeviationRecord> records, Coord L, int d) {
  LargeDeviationEstimate est;
  est.L = L;
  est.cube_size = Box::cube(d, L).size();
  std::uint64_t hits = 0;
  for (const auto& r : records) hits += r.event ? 1 : 0;
  est.probability = wilson(hits, records.size());
  est.rate = hits > 0 ? -std::log(est.probability.estimate) / static_cast<double>(est.cube_size)
                      : std::numeric_limits<double>::quiet_NaN();
  est.records = std::move(records);
  return est;
}

LargeDeviationEstimate large_deviation_probability(const FieldSpec& spec, double E, double beta, double c,
                                                   std::uint64_t trials, int workers) {
  spec.validate();
  if (trials < 1000) throw InvalidInput("large_deviation_probability needs at least 1000 trials");
  if (!(c > 0.0)) throw ParameterError("truncation constant c must be positive");
  const Coord L = large_deviation_scale(E, beta);
  std::vector<LargeDeviationRecord> records(trials);
  parallel_for(trials, workers, [&](std::size_t t) { records[t] = large_deviation_trial(spec, E, beta, c, t); });
  return aggregate_large_deviation(std::move(records), L, spec.d);
}

GroundStateRecord ground_state_trial(const HamiltonianSpec& spec, int n, Coord L, std::uint64_t trial,
                                     double threshold, const SolverOptions& opts) {
  GroundStateRecord r;
  r.trial = trial;
  try {
    HamiltonianSpec sub = spec;
    sub.n = n;
    const AssembledOperator op = assemble(sub, make_cube(spec.d, n, L), trial);
    r.E0 = ground_energy(op, opts);
    r.event = r.E0 <= threshold;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

TailEstimate aggregate_tail(std::vector<GroundStateRecord> records, Coord L, double threshold) {
  TailEstimate est;
  est.L = L;
  est.threshold = threshold;
  std::uint64_t hits = 0, valid = 0;
  for (const auto& r : records) {
    if (!r.ok) {
      ++est.failures;
      continue;
    }
    ++valid;
    hits += r.event ? 1 : 0;
  }
  est.probability = wilson(hits, valid);
  est.records = std::move(records);
  return est;
}

TailEstimate lifshitz_tail(const HamiltonianSpec& spec, int n, Coord L, double C, std::uint64_t trials, int workers,
                           const SolverOptions& opts) {
  spec.validate();
  if (trials < 100) throw InvalidInput("lifshitz_tail needs at least 100 trials");
  if (L < 1) throw InvalidInput("lifshitz_tail needs L >= 1");
  const double threshold = 2.0 * C / std::sqrt(static_cast<double>(L));
  std::vector<GroundStateRecord> records(trials);
  parallel_for(trials, workers,
               [&](std::size_t t) { records[t] = ground_state_trial(spec, n, L, t, threshold, opts); });
  return aggregate_tail(std::move(records), L, threshold);
}

EdgeEstimate spectral_edge_estimate(const HamiltonianSpec& spec, int n, Coord L, std::uint64_t trials, int workers,
                                    const SolverOptions& opts) {
  spec.validate();
  if (trials < 10) throw InvalidInput("spectral_edge_estimate needs at least 10 trials");
  std::vector<GroundStateRecord> records(trials);
  parallel_for(trials, workers, [&](std::size_t t) {
    records[t] = ground_state_trial(spec, n, L, t, -std::numeric_limits<double>::infinity(), opts);
  });
  EdgeEstimate est;
  est.min_E0 = std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    if (!r.ok) throw SolverError("ground state failed in trial " + std::to_string(r.trial) + ": " + r.error, 0);
    est.E0.push_back(r.E0);
    est.min_E0 = std::min(est.min_E0, r.E0);
  }
  return est;
}

double combes_thomas_ratio(const AssembledOperator& op, double E) {
  if (op.dim() > 5000) throw InvalidInput("combes_thomas_ratio evaluates all pairs; dimension too large");
  const double eta = dist_to_spectrum(op, E);
  if (!(eta > 0.0) || eta > 1.0) throw ParameterError("Combes-Thomas needs dist(E, spectrum) in (0, 1]");
  Eigen::MatrixXd M = op.to_dense();
  M.diagonal().array() -= E;
  const Eigen::MatrixXd G = M.partialPivLu().inverse();

  const auto n = static_cast<Eigen::Index>(op.dim());
  const int nu = op.cube().nu();
  std::vector<Coord> pts(op.dim() * static_cast<std::size_t>(nu));
  for (std::size_t i = 0; i < op.dim(); ++i) {
    op.indexer().coords_of(i, std::span<Coord>(pts).subspan(i * static_cast<std::size_t>(nu), static_cast<std::size_t>(nu)));
  }
  const double rate = eta / (12.0 * nu);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::span<const Coord> y(pts.data() + j * nu, static_cast<std::size_t>(nu));
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::span<const Coord> x(pts.data() + i * nu, static_cast<std::size_t>(nu));
      const double bound = 2.0 / eta * std::exp(-rate * static_cast<double>(max_dist(x, y)));
      worst = std::max(worst, std::abs(G(i, j)) / bound);
    }
  }
  return worst;
}

}  // namespace mpal
