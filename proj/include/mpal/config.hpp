#pragma once
// Experiment configuration: strict YAML parsing with line/key diagnostics.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpal/error.hpp"
#include "mpal/hamiltonian.hpp"

namespace mpal {

enum class ExperimentKind {
  field_certify,
  large_deviation,
  lifshitz,
  ct_check,
  msa_initial,
  eigen_decay,
  dynloc,
  spectral_edge,
};

std::string_view kind_name(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(std::string_view name);
const std::vector<ExperimentKind>& all_kinds();

struct FieldCertifyParams {
  std::vector<Coord> mixing_L{1, 5};
  std::vector<double> eps{0.01};
};

struct LargeDeviationParams {
  double E = 0.5;
  double beta = 0.4;
  double c = 6.0;
};

struct LifshitzParams {
  std::vector<Coord> L{16, 32, 64, 128};
  double C = 1.0;
};

struct CtCheckParams {
  int max_n = 2;
  int max_d = 2;
  Coord max_L = 6;
  std::size_t max_dim = 200;
};

struct MsaInitialParams {
  int N = 1;
  double p = 1.0;
  std::vector<Coord> L0{16, 32, 64};
  double alpha = 1.5;
  std::optional<double> estar;
  int grid_points = 1000;
  bool verify_shortcut = false;  // also scan trials certified by the spectral gap
  std::vector<int> n;  // empty: all 1..N
};

struct EigenDecayParams {
  Coord L = 20;
  double window = 0.1;  // eigenpairs in [E0, E0 + window]
};

struct DynlocParams {
  Coord L = 4;
  double window = 1.0;  // I = [E0, E0 + window]
  double s = 1.0;
  Coord K_radius = 1;
  std::vector<double> times;  // empty: default logarithmic grid
};

struct SpectralEdgeParams {
  std::vector<Coord> L{4, 12};
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::lifshitz;
  HamiltonianSpec hamiltonian;
  std::uint64_t trials = 100;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output = "results";
  std::optional<double> estar_override;

  FieldCertifyParams field_certify;
  LargeDeviationParams large_deviation;
  LifshitzParams lifshitz;
  CtCheckParams ct_check;
  MsaInitialParams msa;
  EigenDecayParams eigen_decay;
  DynlocParams dynloc;
  SpectralEdgeParams spectral_edge;
};

struct ConfigIssue {
  int line = 0;  // 1-based; 0 when not tied to a line
  std::string key;
  std::string message;
  std::string str() const;
};

/// The complete list of violations found in a config.
struct ConfigError : Error {
  explicit ConfigError(std::vector<ConfigIssue> issues);
  std::vector<ConfigIssue> issues;
};

/// The config file could not be read (distinct from validation failures).
struct ConfigIoError : Error {
  using Error::Error;
};

/// Command-line values that replace config entries before checking.
struct ConfigOverrides {
  std::optional<ExperimentKind> kind;  // a config naming another experiment is rejected
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<int> workers;
  std::optional<std::string> output;
  std::optional<double> estar;
};

ExperimentConfig parse_config(std::string_view text, const ConfigOverrides& overrides = {});
/// Reads, parses and checks a config file.
ExperimentConfig validate_config(const std::string& path, const ConfigOverrides& overrides = {});
/// Semantic checks (ranges, per-experiment minimums); empty when valid.
std::vector<ConfigIssue> check_config(const ExperimentConfig& config);

}  // namespace mpal
