#pragma once
// Multi-scale-analysis bookkeeping: the gamma mass, (E,m)-non-singularity of
// cubes, initial-scale parameters and Monte Carlo singularity statistics.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mpal/hamiltonian.hpp"
#include "mpal/spectral.hpp"
#include "mpal/stats.hpp"

namespace mpal {

struct MsaParams {
  int N = 1;
  int d = 1;
  double p = 1.0;
  Coord L0 = 16;
  double alpha = 1.5;
  double m = 0.0;
  double Estar = 0.0;

  /// Throws ParameterError listing the first violated invariant.
  void validate() const;
};

struct InitialScale {
  double m = 0.0;
  double Estar = 0.0;
  double C = 0.0;  // (12Nd)^2 2^{N+1}; Estar == C L0^{-1/2}
};

/// m = 12Nd L0^{-1/2}, E* = 12Nd 2^{N+1} m.
InitialScale initial_scale_params(int N, int d, Coord L0);
/// Params at the initial scale, optionally with a user-supplied E*.
MsaParams make_msa_params(int N, int d, double p, Coord L0, double alpha = 1.5,
                          std::optional<double> estar_override = std::nullopt);

/// gamma(m, L, n) = m (1 + L^{-1/8})^{N-n+1}.
double gamma_mass(double m, Coord L, int n, int N);

/// L_{k+1} = floor(L_k^alpha).
Coord scale_sequence(Coord L0, double alpha, int k);

/// L0^{-2p 4^{N-n}}.
double msa_target(Coord L0, double p, int N, int n);

struct NonsingularityCheck {
  bool nonsingular = false;
  bool singular_resolvent = false;
  double max_boundary_green = 0.0;
  double threshold = 0.0;  // exp(-gamma(m, L, n) L)
};

/// The cube of `op` (center u, radius L) is (E,m)-non-singular iff
/// max_{y in inner boundary} |G(E; u, y)| <= exp(-gamma(m,L,n) L).
/// A singular resolvent counts as singular.
NonsingularityCheck is_nonsingular(const AssembledOperator& op, double E, double m, int n, int N,
                                   const SolverOptions& opts = {});

/// Scans many energies on one cube, reusing the factorization pattern.
class SingularityScanner {
 public:
  SingularityScanner(const AssembledOperator& op, double m, int n, int N, const SolverOptions& opts = {});
  NonsingularityCheck check(double E);
  GreenSolver& solver() { return solver_; }

 private:
  GreenSolver solver_;
  std::size_t center_;
  std::vector<std::size_t> boundary_;
  double threshold_;
};

/// The Combes-Thomas bound chain of the initial-scale argument:
/// 2 eta^{-1} exp(-eta L0 / (12 n d)) <= exp(-gamma(m, L0, n) L0) with eta <= 1.
bool ct_chain_holds(const MsaParams& params, int n, double eta);
/// Smallest L0 (with the initial-scale constants) where the chain closes.
Coord ct_certification_crossover(int N, int d, int n);

struct SingularityOptions {
  int grid_points = 1000;        // energy step E*/grid_points on [0, E*]
  bool verify_shortcut = false;  // also scan certified trials
  SolverOptions solver;
};

struct MsaTrialRecord {
  std::uint64_t trial = 0;
  double E0 = 0.0;
  bool shortcut = false;
  bool singular = false;
  bool singular_resolvent = false;
  bool ct_chain = false;
  bool scan_agrees = true;  // only meaningful with verify_shortcut
  int energies_scanned = 0;
  bool ok = true;
  std::string error;
};

MsaTrialRecord singularity_trial(const HamiltonianSpec& spec, const MsaParams& params, int n, std::uint64_t trial,
                                 const SingularityOptions& opts = {});

struct SingularityEstimate {
  Proportion probability;
  double shortcut_rate = 0.0;
  double target = 0.0;
  std::uint64_t failures = 0;
  std::vector<MsaTrialRecord> records;
};

SingularityEstimate aggregate_singularity(std::vector<MsaTrialRecord> records, const MsaParams& params, int n);

SingularityEstimate singularity_probability(const HamiltonianSpec& spec, const MsaParams& params, int n,
                                            std::uint64_t trials, const SingularityOptions& opts = {},
                                            int workers = 1);

}  // namespace mpal
