#include "mpal/msa.hpp"

#include <cmath>
#include <limits>

#include "mpal/error.hpp"
#include "mpal/parallel.hpp"

namespace mpal {

void MsaParams::validate() const {
  if (N < 1 || d < 1) throw ParameterError("N and d must be positive");
  if (!(p > 0.0)) throw ParameterError("p > 0 required");
  if (L0 < 2) throw ParameterError("L0 >= 2 required");
  if (!(alpha > 1.0)) throw ParameterError("alpha > 1 required");
  if (!(m > 0.0)) throw ParameterError("m > 0 required");
  if (!(Estar > 0.0)) throw ParameterError("Estar > 0 required");
}

InitialScale initial_scale_params(int N, int d, Coord L0) {
  if (L0 < 2) throw ParameterError("L0 >= 2 required");
  if (N < 1 || d < 1) throw ParameterError("N and d must be positive");
  const double base = 12.0 * N * d;
  const double pow2 = std::ldexp(1.0, N + 1);
  InitialScale s;
  s.m = base / std::sqrt(static_cast<double>(L0));
  s.Estar = base * pow2 * s.m;
  s.C = base * base * pow2;
  return s;
}

MsaParams make_msa_params(int N, int d, double p, Coord L0, double alpha, std::optional<double> estar_override) {
  const InitialScale s = initial_scale_params(N, d, L0);
  MsaParams params{N, d, p, L0, alpha, s.m, estar_override.value_or(s.Estar)};
  params.validate();
  return params;
}

double gamma_mass(double m, Coord L, int n, int N) {
  if (n < 1 || n > N) throw InvalidInput("gamma: need 1 <= n <= N");
  if (L < 1) throw InvalidInput("gamma: need L >= 1");
  return m * std::pow(1.0 + std::pow(static_cast<double>(L), -0.125), N - n + 1);
}

Coord scale_sequence(Coord L0, double alpha, int k) {
  if (!(alpha > 1.0) || k < 0 || L0 < 1) throw InvalidInput("scale_sequence: need alpha > 1, k >= 0, L0 >= 1");
  Coord L = L0;
  for (int i = 0; i < k; ++i) {
    const double next = std::floor(std::pow(static_cast<double>(L), alpha));
    if (!(next < 9.0e18)) throw SizeLimit("scale sequence overflows the index type");
    L = static_cast<Coord>(next);
  }
  return L;
}

double msa_target(Coord L0, double p, int N, int n) {
  return std::pow(static_cast<double>(L0), -2.0 * p * std::pow(4.0, N - n));
}

SingularityScanner::SingularityScanner(const AssembledOperator& op, double m, int n, int N,
                                       const SolverOptions& opts)
    : solver_(op, opts) {
  const Cube& c = op.cube();
  if (c.radius < 1) throw InvalidInput("non-singularity needs a cube of radius >= 1");
  center_ = op.indexer().index_of(c.center.coords);
  for (const auto& y : inner_boundary(c)) boundary_.push_back(op.indexer().index_of(y.coords));
  const double g = gamma_mass(m, c.radius, n, N);
  threshold_ = std::exp(-g * static_cast<double>(c.radius));
}

NonsingularityCheck SingularityScanner::check(double E) {
  NonsingularityCheck r;
  r.threshold = threshold_;
  std::vector<double> g;
  try {
    g = solver_.column(E, center_);  // G(E; ., u) = G(E; u, .) by symmetry
  } catch (const SingularResolvent&) {
    r.singular_resolvent = true;
    r.max_boundary_green = std::numeric_limits<double>::infinity();
    return r;
  }
  double worst = 0.0;
  for (std::size_t y : boundary_) worst = std::max(worst, std::abs(g[y]));
  r.max_boundary_green = worst;
  r.nonsingular = worst <= threshold_;
  return r;
}

NonsingularityCheck is_nonsingular(const AssembledOperator& op, double E, double m, int n, int N,
                                   const SolverOptions& opts) {
  SingularityScanner scanner(op, m, n, N, opts);
  return scanner.check(E);
}

bool ct_chain_holds(const MsaParams& params, int n, double eta) {
  if (!(eta > 0.0) || eta > 1.0) return false;
  const auto L0 = static_cast<double>(params.L0);
  const double lhs = std::log(2.0) - std::log(eta) - eta * L0 / (12.0 * n * params.d);
  const double rhs = -gamma_mass(params.m, params.L0, n, params.N) * L0;
  return lhs <= rhs;
}

Coord ct_certification_crossover(int N, int d, int n) {
  auto holds = [&](Coord L0) {
    const MsaParams p = make_msa_params(N, d, 1.0, L0);
    return ct_chain_holds(p, n, p.Estar);
  };
  // eta = C L0^{-1/2} <= 1 needs L0 >= C^2; search upward from there.
  const double C = initial_scale_params(N, d, 2).C;
  Coord lo = std::max<Coord>(2, static_cast<Coord>(std::ceil(C * C)));
  Coord hi = lo;
  while (!holds(hi)) {
    if (hi > (Coord{1} << 60)) throw SizeLimit("certification crossover beyond the index range");
    hi *= 2;
  }
  while (lo < hi) {
    const Coord mid = lo + (hi - lo) / 2;
    if (holds(mid)) hi = mid; else lo = mid + 1;
  }
  return lo;
}

MsaTrialRecord singularity_trial(const HamiltonianSpec& spec, const MsaParams& params, int n, std::uint64_t trial,
                                 const SingularityOptions& opts) {
  MsaTrialRecord rec;
  rec.trial = trial;
  try {
    HamiltonianSpec sub = spec;
    sub.n = n;
    const AssembledOperator op = assemble(sub, make_cube(spec.d, n, params.L0), trial);

    std::vector<double> eigenvalues;
    if (op.dim() < opts.solver.dense_limit) {
      eigenvalues = full_spectrum(op, false).eigenvalues;
      rec.E0 = eigenvalues.front();
    } else {
      rec.E0 = lowest_eigenpair(op, opts.solver).energy;
    }

    // E* = C L0^{-1/2}: above 2E* every E <= E* sits at distance > E* from the spectrum.
    rec.shortcut = rec.E0 > 2.0 * params.Estar;
    if (rec.shortcut) rec.ct_chain = ct_chain_holds(params, n, params.Estar);
    if (rec.shortcut && !opts.verify_shortcut) return rec;

    SingularityScanner scanner(op, params.m, n, params.N, opts.solver);
    if (!eigenvalues.empty()) scanner.solver().set_eigenvalues(eigenvalues);
    bool scan_singular = false;
    for (int k = 0; k <= opts.grid_points; ++k) {
      const double E = params.Estar * static_cast<double>(k) / static_cast<double>(opts.grid_points);
      const NonsingularityCheck c = scanner.check(E);
      ++rec.energies_scanned;
      if (!c.nonsingular) {
        scan_singular = true;
        rec.singular_resolvent = c.singular_resolvent;
        break;
      }
    }
    if (rec.shortcut) {
      rec.scan_agrees = !scan_singular;
    } else {
      rec.singular = scan_singular;
    }
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

SingularityEstimate aggregate_singularity(std::vector<MsaTrialRecord> records, const MsaParams& params, int n) {
  SingularityEstimate est;
  std::uint64_t singular = 0, shortcuts = 0, valid = 0;
  for (const auto& r : records) {
    if (!r.ok) {
      ++est.failures;
      continue;
    }
    ++valid;
    singular += r.singular ? 1 : 0;
    shortcuts += r.shortcut ? 1 : 0;
  }
  est.probability = wilson(singular, valid);
  est.shortcut_rate = valid > 0 ? static_cast<double>(shortcuts) / static_cast<double>(valid) : 0.0;
  est.target = msa_target(params.L0, params.p, params.N, n);
  est.records = std::move(records);
  return est;
}

SingularityEstimate singularity_probability(const HamiltonianSpec& spec, const MsaParams& params, int n,
                                            std::uint64_t trials, const SingularityOptions& opts, int workers) {
  params.validate();
  if (n < 1 || n > params.N) throw InvalidInput("need 1 <= n <= N");
  if (trials < 100) throw InvalidInput("singularity_probability needs at least 100 trials");
  std::vector<MsaTrialRecord> records(trials);
  parallel_for(trials, workers, [&](std::size_t t) { records[t] = singularity_trial(spec, params, n, t, opts); });
  return aggregate_singularity(std::move(records), params, n);
}

}  // namespace mpal
