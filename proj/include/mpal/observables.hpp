#pragma once
// Numerical experiments for the localization estimates: large deviations,
// Lifshitz tails, Combes-Thomas decay, eigenfunction decay, the dynamical
// localization moment and the tensor Weyl construction at the spectral edge.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mpal/field.hpp"
#include "mpal/hamiltonian.hpp"
#include "mpal/spectral.hpp"
#include "mpal/stats.hpp"

namespace mpal {

// ---- large deviations ------------------------------------------------------

/// L = floor((beta E)^{-1/2}); throws ParameterError when L < 2.
Coord large_deviation_scale(double E, double beta);

struct LargeDeviationRecord {
  std::uint64_t trial = 0;
  double cube_average = 0.0;  // of the truncated field
  bool event = false;         // cube_average < E / 2
};

LargeDeviationRecord large_deviation_trial(const FieldSpec& spec, double E, double beta, double c, std::uint64_t trial);

struct LargeDeviationEstimate {
  Coord L = 0;
  std::size_t cube_size = 0;
  Proportion probability;
  /// -ln(estimate) / |C_L|; NaN when the estimate is 0.
  double rate = 0.0;
  std::vector<LargeDeviationRecord> records;
};

LargeDeviationEstimate aggregate_large_deviation(std::vector<LargeDeviationRecord> records, Coord L, int d);
LargeDeviationEstimate large_deviation_probability(const FieldSpec& spec, double E, double beta, double c,
                                                   std::uint64_t trials, int workers = 1);

// ---- Lifshitz tails and the spectral edge ----------------------------------

struct GroundStateRecord {
  std::uint64_t trial = 0;
  double E0 = 0.0;
  bool event = false;  // E0 <= 2 C L^{-1/2} (Lifshitz); unused for the edge
  bool ok = true;
  std::string error;
};

GroundStateRecord ground_state_trial(const HamiltonianSpec& spec, int n, Coord L, std::uint64_t trial,
                                     double threshold, const SolverOptions& opts = {});

struct TailEstimate {
  Coord L = 0;
  double threshold = 0.0;
  Proportion probability;
  std::uint64_t failures = 0;
  std::vector<GroundStateRecord> records;
};

TailEstimate aggregate_tail(std::vector<GroundStateRecord> records, Coord L, double threshold);
TailEstimate lifshitz_tail(const HamiltonianSpec& spec, int n, Coord L, double C, std::uint64_t trials,
                           int workers = 1, const SolverOptions& opts = {});

struct EdgeEstimate {
  double min_E0 = 0.0;
  std::vector<double> E0;
};

EdgeEstimate spectral_edge_estimate(const HamiltonianSpec& spec, int n, Coord L, std::uint64_t trials,
                                    int workers = 1, const SolverOptions& opts = {});

// ---- Combes-Thomas ---------------------------------------------------------

/// max_{x,y} |G(E;x,y)| / (2 eta^{-1} exp(-(eta / 12 nu) |x - y|)), eta = dist(E, spectrum).
/// Throws ParameterError unless eta lies in (0, 1].
double combes_thomas_ratio(const AssembledOperator& op, double E);

// ---- eigenfunction decay ---------------------------------------------------

struct DecayFit {
  ParticleConfig center;            // argmax |psi|
  double energy = 0.0;
  std::vector<double> shell_log_max;  // ln max_{|x-center|=r} |psi(x)|, r = 0..
  std::vector<double> rates;        // -(successive differences) of shell_log_max
  double fitted_rate = 0.0;         // minus the least-squares slope
  int r_min = 0;
  int r_max = 0;                    // shells used
  bool degenerate = false;          // fewer than two usable shells
};

/// Fits a single vector defined on the cube of `op`.
DecayFit fit_decay(const AssembledOperator& op, std::span<const double> psi, double energy);
std::vector<DecayFit> eigenfunction_decay(const AssembledOperator& op, double a, double b,
                                          const SolverOptions& opts = {});

// ---- dynamical localization -------------------------------------------------

struct DynamicalMoment {
  std::vector<double> times;
  std::vector<double> values;  // M(t)
  double sup = 0.0;
  double correlator_bound = 0.0;  // B >= M(t) for all t
};

/// Default logarithmic time grid {0, 1e-1, 1, ..., 1e6}.
std::vector<double> default_time_grid();

/// M(t) = || |X|^{s/2} e^{-itH} P_I 1_K ||_HS^2 from the spectral decomposition.
DynamicalMoment dynamical_moment(const AssembledOperator& op, double a, double b, double s, const Cube& K,
                                 std::span<const double> times, const SolverOptions& opts = {});

// ---- tensor Weyl construction ------------------------------------------------

/// A single-particle vector on C^{(1)}_radius(0), lexicographic order.
struct LocalState {
  Coord radius = 0;
  std::vector<double> values;
};

enum class WeylBoundary { infinite, restricted };

struct WeylResidual {
  double residual = 0.0;               // ||H^{(n)} phi|| / ||phi||
  std::vector<double> single_residuals;  // ||H^{(1)}_j phi_j|| / ||phi_j||
  double single_sum = 0.0;
  ParticleConfig placement;            // separated configuration used
};

/// Places phi_j around the j-th particle of separated_config(n, d, r0, k, m),
/// forms the tensor product and compares residuals. Throws InvalidInput when a
/// support is not contained in C_{km}(0) or the inequality fails by more than 1e-10.
WeylResidual weyl_tensor_residual(const HamiltonianSpec& spec, Coord k, Coord m, std::span<const LocalState> singles,
                                  std::uint64_t trial = 0, WeylBoundary boundary = WeylBoundary::infinite);

/// Normalized lowest sine mode on C^{(1)}_radius(0) in dimension d.
LocalState free_quasi_mode(int d, Coord radius);

}  // namespace mpal
