#include "mpal/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>
#include <unistd.h>

#include "mpal/kernels.hpp"
#include "mpal/msa.hpp"
#include "mpal/observables.hpp"
#include "mpal/parallel.hpp"
#include "mpal/rng.hpp"

namespace mpal {

namespace {

using json = nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// A parameter point: all trials of one (group, sub) share a field seed.
struct Point {
  std::int64_t group = 0;
  std::int64_t sub = 0;
};

std::uint64_t kind_seed(std::uint64_t master, ExperimentKind kind) {
  return rng::combine(master, rng::hash_string(kind_name(kind)));
}

std::uint64_t point_seed(std::uint64_t master, ExperimentKind kind, const Point& p) {
  return rng::combine(rng::combine(kind_seed(master, kind), static_cast<std::uint64_t>(p.group)),
                      static_cast<std::uint64_t>(p.sub));
}

std::vector<int> msa_particle_numbers(const ExperimentConfig& cfg) {
  if (!cfg.msa.n.empty()) return cfg.msa.n;
  std::vector<int> all(static_cast<std::size_t>(cfg.msa.N));
  std::iota(all.begin(), all.end(), 1);
  return all;
}

std::vector<Point> points_of(const ExperimentConfig& cfg) {
  std::vector<Point> pts;
  switch (cfg.kind) {
    case ExperimentKind::lifshitz:
      for (auto L : cfg.lifshitz.L) pts.push_back({L, 0});
      break;
    case ExperimentKind::msa_initial:
      for (auto L0 : cfg.msa.L0)
        for (int n : msa_particle_numbers(cfg)) pts.push_back({L0, n});
      break;
    case ExperimentKind::spectral_edge:
      for (auto L : cfg.spectral_edge.L) pts.push_back({L, 0});
      break;
    case ExperimentKind::large_deviation:
      pts.push_back({large_deviation_scale(cfg.large_deviation.E, cfg.large_deviation.beta), 0});
      break;
    case ExperimentKind::eigen_decay:
      pts.push_back({cfg.eigen_decay.L, 0});
      break;
    case ExperimentKind::dynloc:
      pts.push_back({cfg.dynloc.L, 0});
      break;
    case ExperimentKind::field_certify:
    case ExperimentKind::ct_check:
      pts.push_back({0, 0});
      break;
  }
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return std::tie(a.group, a.sub) < std::tie(b.group, b.sub);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Point& a, const Point& b) { return a.group == b.group && a.sub == b.sub; }),
            pts.end());
  return pts;
}

// For these kinds `sub` enumerates outputs of a single trial rather than a parameter.
bool sub_is_index(ExperimentKind kind) {
  return kind == ExperimentKind::eigen_decay || kind == ExperimentKind::dynloc;
}

HamiltonianSpec seeded(const ExperimentConfig& cfg, const Point& p) {
  HamiltonianSpec h = cfg.hamiltonian;
  h.field.seed = point_seed(cfg.seed, cfg.kind, p);
  return h;
}

double flag(bool b) { return b ? 1.0 : 0.0; }

// ---- per-kind trials ---------------------------------------------------------

std::vector<TrialRow> field_certify_trial(const ExperimentConfig& cfg, const Point& p, std::uint64_t t) {
  const auto& spec = cfg.hamiltonian.field;
  FieldSpec f = spec;
  f.seed = point_seed(cfg.seed, cfg.kind, p);
  const auto d = static_cast<std::size_t>(f.d);
  std::vector<double> v;
  std::vector<Coord> site(d, 0);
  v.push_back(field_value(f, t, site));
  for (std::size_t k = 0; k < 2 * d; ++k) {
    std::fill(site.begin(), site.end(), 0);
    site[k / 2] = (k % 2 == 0) ? -1 : 1;
    v.push_back(field_value(f, t, site));
  }
  for (auto L : cfg.field_certify.mixing_L) {
    std::fill(site.begin(), site.end(), 0);
    site[0] = L;
    v.push_back(field_value(f, t, site));
  }
  return {TrialRow{p.group, p.sub, t, std::move(v), true, {}}};
}

std::vector<TrialRow> large_deviation_row(const ExperimentConfig& cfg, const Point& p, std::uint64_t t) {
  FieldSpec f = cfg.hamiltonian.field;
  f.seed = point_seed(cfg.seed, cfg.kind, p);
  const auto& q = cfg.large_deviation;
  const auto r = large_deviation_trial(f, q.E, q.beta, q.c, t);
  return {TrialRow{p.group, p.sub, t, {r.cube_average, flag(r.event)}, true, {}}};
}

double lifshitz_threshold(const ExperimentConfig& cfg, Coord L) {
  return 2.0 * cfg.lifshitz.C / std::sqrt(static_cast<double>(L));
}

std::vector<TrialRow> ground_state_row(const ExperimentConfig& cfg, const Point& p, std::uint64_t t, double threshold,
                                       bool with_event) {
  const auto h = seeded(cfg, p);
  const auto r = ground_state_trial(h, h.n, p.group, t, threshold);
  if (!r.ok) return {TrialRow{p.group, p.sub, t, std::vector<double>(with_event ? 2 : 1, kNaN), false, r.error}};
  std::vector<double> v{r.E0};
  if (with_event) v.push_back(flag(r.event));
  return {TrialRow{p.group, p.sub, t, std::move(v), true, {}}};
}

struct CtInstance {
  int n = 1;
  int d = 1;
  Coord L = 1;
};

CtInstance draw_ct_instance(const CtCheckParams& q, rng::Stream& s) {
  for (;;) {
    CtInstance c;
    c.n = static_cast<int>(s.integer(1, q.max_n));
    c.d = static_cast<int>(s.integer(1, q.max_d));
    c.L = s.integer(1, q.max_L);
    const auto width = static_cast<double>(2 * c.L + 1);
    if (std::pow(width, c.n * c.d) <= static_cast<double>(q.max_dim)) return c;
  }
}

std::vector<TrialRow> ct_row(const ExperimentConfig& cfg, const Point& p, std::uint64_t t) {
  const std::uint64_t seed = trial_seed(cfg.seed, cfg.kind, t);
  rng::Stream s(seed);
  const CtInstance c = draw_ct_instance(cfg.ct_check, s);
  HamiltonianSpec h = cfg.hamiltonian;
  h.n = c.n;
  h.d = c.d;
  h.field = FieldSpec::iid(c.d, cfg.hamiltonian.field.base, seed);
  const AssembledOperator op = assemble(h, make_cube(c.d, c.n, c.L), t);
  const auto spec = full_spectrum(op, false);
  const auto& ev = spec.eigenvalues;

  // eta in (0, 1): below the spectrum, or inside a randomly chosen gap.
  const double eta = (1.0 - s.uniform()) * (1.0 - 1e-9);
  const auto k = static_cast<std::size_t>(s.integer(0, static_cast<std::int64_t>(ev.size()) - 1));
  double E = ev[0] - eta;
  if (k > 0) {
    const double gap = ev[k] - ev[k - 1];
    if (gap > 1e-9) E = ev[k - 1] + std::min(eta, 0.5 * gap);
  }
  const double dist = dist_to_spectrum(op, E);
  const double ratio = combes_thomas_ratio(op, E);
  return {TrialRow{p.group, p.sub, t,
                   {double(c.n), double(c.d), double(c.L), double(op.dim()), dist, E, ratio}, true, {}}};
}

std::vector<TrialRow> msa_row(const ExperimentConfig& cfg, const Point& p, std::uint64_t t) {
  const auto h = seeded(cfg, p);
  const auto estar = cfg.estar_override ? cfg.estar_override : cfg.msa.estar;
  const MsaParams params = make_msa_params(cfg.msa.N, h.d, cfg.msa.p, p.group, cfg.msa.alpha, estar);
  SingularityOptions opts;
  opts.grid_points = cfg.msa.grid_points;
  opts.verify_shortcut = cfg.msa.verify_shortcut;
  const auto r = singularity_trial(h, params, static_cast<int>(p.sub), t, opts);
  if (!r.ok) return {TrialRow{p.group, p.sub, t, std::vector<double>(7, kNaN), false, r.error}};
  return {TrialRow{p.group,
                   p.sub,
                   t,
                   {r.E0, flag(r.shortcut), flag(r.singular), flag(r.singular_resolvent), flag(r.ct_chain),
                    double(r.energies_scanned), flag(r.scan_agrees)},
                   true,
                   {}}};
}

std::vector<TrialRow> decay_rows(const ExperimentConfig& cfg, const Point& p, std::uint64_t t) {
  const auto h = seeded(cfg, p);
  const AssembledOperator op = assemble(h, make_cube(h.d, h.n, cfg.eigen_decay.L), t);
  const double E0 = lowest_eigenpair(op).energy;
  const double slack = 1e-10 * (1.0 + std::abs(E0));
  const auto fits = eigenfunction_decay(op, E0 - slack, E0 + cfg.eigen_decay.window + slack);
  std::vector<TrialRow> rows;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const auto& f = fits[k];
    rows.push_back(TrialRow{p.group, static_cast<std::int64_t>(k), t,
                            {f.energy, f.fitted_rate, double(f.r_max), flag(f.degenerate),
                             double(max_norm(f.center.coords))},
                            true,
                            {}});
  }
  return rows;
}

std::vector<TrialRow> dynloc_rows(const ExperimentConfig& cfg, const Point& p, std::uint64_t t) {
  const auto h = seeded(cfg, p);
  const auto& q = cfg.dynloc;
  const AssembledOperator op = assemble(h, make_cube(h.d, h.n, q.L), t);
  const double E0 = lowest_eigenpair(op).energy;
  const double slack = 1e-10 * (1.0 + std::abs(E0));
  const auto times = q.times.empty() ? default_time_grid() : q.times;
  const auto m = dynamical_moment(op, E0 - slack, E0 + q.window, q.s, make_cube(h.d, h.n, q.K_radius), times);
  std::vector<TrialRow> rows;
  for (std::size_t k = 0; k < m.times.size(); ++k) {
    rows.push_back(TrialRow{p.group, static_cast<std::int64_t>(k), t,
                            {m.times[k], m.values[k], m.correlator_bound}, true, {}});
  }
  return rows;
}

std::vector<TrialRow> run_one(const ExperimentConfig& cfg, const Point& p, std::uint64_t t) {
  switch (cfg.kind) {
    case ExperimentKind::field_certify:
      return field_certify_trial(cfg, p, t);
    case ExperimentKind::large_deviation:
      return large_deviation_row(cfg, p, t);
    case ExperimentKind::lifshitz:
      return ground_state_row(cfg, p, t, lifshitz_threshold(cfg, p.group), true);
    case ExperimentKind::ct_check:
      return ct_row(cfg, p, t);
    case ExperimentKind::msa_initial:
      return msa_row(cfg, p, t);
    case ExperimentKind::eigen_decay:
      return decay_rows(cfg, p, t);
    case ExperimentKind::dynloc:
      return dynloc_rows(cfg, p, t);
    case ExperimentKind::spectral_edge:
      return ground_state_row(cfg, p, t, -std::numeric_limits<double>::infinity(), false);
  }
  return {};
}

std::vector<TrialRow> run_guarded(const ExperimentConfig& cfg, const Point& p, std::uint64_t t, std::size_t width) {
  try {
    return run_one(cfg, p, t);
  } catch (const std::exception& e) {
    return {TrialRow{p.group, sub_is_index(cfg.kind) ? 0 : p.sub, t, std::vector<double>(width, kNaN), false,
                     e.what()}};
  }
}

std::vector<TrialRow> run_range(const ExperimentConfig& cfg, std::uint64_t first, std::uint64_t last, int workers,
                                const ProgressFn& progress) {
  const auto pts = points_of(cfg);
  const auto width = row_layout(cfg).columns.size();
  const std::uint64_t per = last > first ? last - first : 0;
  const std::size_t items = pts.size() * per;
  std::vector<std::vector<TrialRow>> out(items);
  std::atomic<std::uint64_t> done{0};
  std::mutex progress_mutex;
  parallel_for(items, workers, [&](std::size_t i) {
    const Point& p = pts[i / per];
    out[i] = run_guarded(cfg, p, first + i % per, width);
    const auto finished = ++done;
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(finished, items);
    }
  });
  std::vector<TrialRow> rows;
  for (auto& v : out)
    for (auto& r : v) rows.push_back(std::move(r));
  return rows;
}

bool row_less(const TrialRow& a, const TrialRow& b) {
  return std::tie(a.group, a.sub, a.trial) < std::tie(b.group, b.sub, b.trial);
}

bool same_key(const TrialRow& a, const TrialRow& b) {
  return a.group == b.group && a.sub == b.sub && a.trial == b.trial;
}

bool same_values(const TrialRow& a, const TrialRow& b) {
  if (a.ok != b.ok || a.error != b.error || a.values.size() != b.values.size()) return false;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double x = a.values[i], y = b.values[i];
    if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
  }
  return true;
}

// ---- aggregation helpers -------------------------------------------------------

json proportion_json(const Proportion& p) {
  return {{"successes", p.successes}, {"trials", p.trials}, {"estimate", p.estimate}, {"ci_low", p.ci_low},
          {"ci_high", p.ci_high}};
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string fmt(double v) { return format_number(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(std::int64_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }

// Rows grouped by (group, sub) with only successful rows kept.
std::map<std::pair<std::int64_t, std::int64_t>, std::vector<const TrialRow*>> by_point(
    const std::vector<TrialRow>& rows, bool ignore_sub) {
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<const TrialRow*>> m;
  for (const auto& r : rows)
    if (r.ok) m[{r.group, ignore_sub ? 0 : r.sub}].push_back(&r);
  return m;
}

void aggregate_field_certify(EnsembleReport& rep) {
  const auto& cfg = rep.config;
  const auto d = static_cast<std::size_t>(cfg.hamiltonian.field.d);
  std::vector<double> center, nbrs;
  std::vector<std::vector<double>> far(cfg.field_certify.mixing_L.size());
  for (const auto& r : rep.rows) {
    if (!r.ok) continue;
    center.push_back(r.values[0]);
    nbrs.insert(nbrs.end(), r.values.begin() + 1, r.values.begin() + 1 + static_cast<std::ptrdiff_t>(2 * d));
    for (std::size_t k = 0; k < far.size(); ++k) far[k].push_back(r.values[1 + 2 * d + k]);
  }
  const auto& f = cfg.hamiltonian.field;
  rep.aggregates["kernel_radius"] = f.kernel_radius();
  rep.aggregates["vmax"] = f.vmax();
  rep.summary_header = {"probe", "parameter", "value", "std_error", "z", "exact"};
  json mixing = json::array();
  for (std::size_t k = 0; k < far.size(); ++k) {
    const Coord L = cfg.field_certify.mixing_L[k];
    std::vector<Coord> lag(d, 0);
    lag[0] = L;
    const double exact_cov = f.covariance(lag);
    if (center.size() < 2) continue;
    const auto m = mixing_from_samples(center, far[k]);
    mixing.push_back({{"L", L},
                      {"covariance", m.covariance},
                      {"std_error", m.std_error},
                      {"z", m.z()},
                      {"median", m.median},
                      {"field_covariance", exact_cov},
                      {"beyond_range", L > 2 * f.kernel_radius()}});
    rep.summary_rows.push_back({"mixing", fmt(L), fmt(m.covariance), fmt(m.std_error), fmt(m.z()), fmt(exact_cov)});
  }
  rep.aggregates["mixing"] = mixing;
  json cont = json::array();
  for (double eps : cfg.field_certify.eps) {
    if (center.empty()) continue;
    const auto c = continuity_from_samples(center, nbrs, 2 * d, eps);
    cont.push_back({{"eps", eps}, {"worst_increment", c.worst_increment}, {"bins_used", c.bins_used}});
    rep.summary_rows.push_back({"continuity", fmt(eps), fmt(c.worst_increment), "", "", ""});
  }
  rep.aggregates["continuity"] = cont;
}

void aggregate_large_deviation_rows(EnsembleReport& rep) {
  const auto& q = rep.config.large_deviation;
  std::vector<LargeDeviationRecord> recs;
  for (const auto& r : rep.rows)
    if (r.ok) recs.push_back({r.trial, r.values[0], r.values[1] != 0.0});
  const Coord L = large_deviation_scale(q.E, q.beta);
  const auto est = aggregate_large_deviation(std::move(recs), L, rep.config.hamiltonian.field.d);
  rep.aggregates["L"] = L;
  rep.aggregates["cube_size"] = est.cube_size;
  rep.aggregates["probability"] = proportion_json(est.probability);
  rep.aggregates["rate"] = std::isnan(est.rate) ? json(nullptr) : json(est.rate);
  rep.summary_header = {"L", "cube_size", "trials", "events", "estimate", "ci_low", "ci_high", "rate"};
  rep.summary_rows.push_back({fmt(L), fmt(std::uint64_t(est.cube_size)), fmt(est.probability.trials),
                              fmt(est.probability.successes), fmt(est.probability.estimate),
                              fmt(est.probability.ci_low), fmt(est.probability.ci_high), fmt(est.rate)});
}

void aggregate_lifshitz(EnsembleReport& rep) {
  rep.summary_header = {"L", "trials", "events", "estimate", "ci_low", "ci_high", "threshold", "log_ratio"};
  json scales = json::array();
  for (auto& [key, rows] : by_point(rep.rows, false)) {
    const Coord L = key.first;
    std::uint64_t hits = 0;
    for (auto* r : rows) hits += r->values[1] != 0.0 ? 1 : 0;
    const auto p = wilson(hits, rows.size());
    const double thr = lifshitz_threshold(rep.config, L);
    const double log_ratio = hits > 0 ? -std::log(p.estimate) / std::log(static_cast<double>(L))
                                      : std::numeric_limits<double>::infinity();
    scales.push_back({{"L", L},
                      {"threshold", thr},
                      {"probability", proportion_json(p)},
                      {"log_ratio", std::isfinite(log_ratio) ? json(log_ratio) : json(nullptr)}});
    rep.summary_rows.push_back({fmt(L), fmt(p.trials), fmt(p.successes), fmt(p.estimate), fmt(p.ci_low),
                                fmt(p.ci_high), fmt(thr), fmt(log_ratio)});
  }
  rep.aggregates["scales"] = scales;
}

void aggregate_ct(EnsembleReport& rep) {
  double worst = 0.0;
  std::uint64_t n = 0, violations = 0;
  for (const auto& r : rep.rows) {
    if (!r.ok) continue;
    ++n;
    worst = std::max(worst, r.values[6]);
    violations += r.values[6] > 1.0 + 1e-12 ? 1 : 0;
  }
  rep.aggregates["instances"] = n;
  rep.aggregates["max_ratio"] = worst;
  rep.aggregates["violations"] = violations;
  rep.summary_header = {"instances", "max_ratio", "violations"};
  rep.summary_rows.push_back({fmt(n), fmt(worst), fmt(violations)});
}

void aggregate_msa(EnsembleReport& rep) {
  const auto& cfg = rep.config;
  rep.summary_header = {"n", "L", "trials", "singular_count", "estimate", "ci_low", "ci_high", "shortcut_rate",
                        "target"};
  json scales = json::array();
  std::vector<std::vector<std::string>> rows_out;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<const TrialRow*>> by_n_L;
  for (auto& [key, rows] : by_point(rep.rows, false)) by_n_L[{key.second, key.first}] = rows;
  for (auto& [key, rows] : by_n_L) {
    const int n = static_cast<int>(key.first);
    const Coord L = key.second;
    std::uint64_t singular = 0, shortcut = 0, chain = 0, disagree = 0;
    for (auto* r : rows) {
      disagree += r->values[6] == 0.0 ? 1 : 0;
      shortcut += r->values[1] != 0.0 ? 1 : 0;
      singular += r->values[2] != 0.0 ? 1 : 0;
      chain += r->values[4] != 0.0 ? 1 : 0;
    }
    const auto p = wilson(singular, rows.size());
    const double rate = rows.empty() ? kNaN : static_cast<double>(shortcut) / static_cast<double>(rows.size());
    const double target = msa_target(L, cfg.msa.p, cfg.msa.N, n);
    const auto estar = cfg.estar_override ? cfg.estar_override : cfg.msa.estar;
    const auto params = make_msa_params(cfg.msa.N, cfg.hamiltonian.d, cfg.msa.p, L, cfg.msa.alpha, estar);
    scales.push_back({{"n", n},
                      {"L", L},
                      {"m", params.m},
                      {"Estar", params.Estar},
                      {"probability", proportion_json(p)},
                      {"shortcut_rate", rate},
                      {"ct_chain_count", chain},
                      {"shortcut_scan_disagreements", disagree},
                      {"target", target},
                      {"below_target", p.ci_high <= target}});
    rep.summary_rows.push_back({fmt(n), fmt(L), fmt(p.trials), fmt(p.successes), fmt(p.estimate), fmt(p.ci_low),
                                fmt(p.ci_high), fmt(rate), fmt(target)});
  }
  rep.aggregates["scales"] = scales;
  rep.aggregates["ct_certification_crossover"] =
      ct_certification_crossover(cfg.msa.N, cfg.hamiltonian.d, msa_particle_numbers(cfg).front());
}

void aggregate_decay(EnsembleReport& rep) {
  std::vector<double> ground_rates, all_rates;
  std::uint64_t pairs = 0, degenerate = 0;
  std::set<std::uint64_t> trials;
  for (const auto& r : rep.rows) {
    if (!r.ok) continue;
    trials.insert(r.trial);
    ++pairs;
    if (r.values[3] != 0.0) {
      ++degenerate;
      continue;
    }
    all_rates.push_back(r.values[1]);
    if (r.sub == 0) ground_rates.push_back(r.values[1]);
  }
  rep.aggregates["trials"] = trials.size();
  rep.aggregates["eigenpairs"] = pairs;
  rep.aggregates["degenerate"] = degenerate;
  rep.aggregates["median_rate_ground"] = median(ground_rates);
  rep.aggregates["median_rate_all"] = median(all_rates);
  rep.aggregates["mean_rate_all"] = mean(all_rates);
  rep.summary_header = {"L", "trials", "eigenpairs", "degenerate", "median_rate_ground", "median_rate_all",
                        "mean_rate_all"};
  rep.summary_rows.push_back({fmt(rep.config.eigen_decay.L), fmt(std::uint64_t(trials.size())), fmt(pairs),
                              fmt(degenerate), fmt(median(ground_rates)), fmt(median(all_rates)),
                              fmt(mean(all_rates))});
}

void aggregate_dynloc(EnsembleReport& rep) {
  std::map<std::int64_t, std::vector<const TrialRow*>> by_time;
  std::map<std::uint64_t, double> sup_per_trial;
  std::map<std::uint64_t, double> bound_per_trial;
  for (const auto& r : rep.rows) {
    if (!r.ok) continue;
    by_time[r.sub].push_back(&r);
    sup_per_trial[r.trial] = std::max(sup_per_trial[r.trial], r.values[1]);
    bound_per_trial[r.trial] = r.values[2];
  }
  std::uint64_t violations = 0;
  std::vector<double> sups, bounds;
  for (auto& [t, s] : sup_per_trial) {
    sups.push_back(s);
    bounds.push_back(bound_per_trial[t]);
    violations += s > bound_per_trial[t] * (1.0 + 1e-10) + 1e-12 ? 1 : 0;
  }
  rep.aggregates["trials"] = sups.size();
  rep.aggregates["mean_sup_moment"] = mean(sups);
  rep.aggregates["max_sup_moment"] = sups.empty() ? kNaN : *std::max_element(sups.begin(), sups.end());
  rep.aggregates["mean_bound"] = mean(bounds);
  rep.aggregates["bound_violations"] = violations;
  rep.summary_header = {"t", "trials", "mean_moment", "max_moment", "mean_bound"};
  for (auto& [k, rows] : by_time) {
    std::vector<double> m, b;
    for (auto* r : rows) {
      m.push_back(r->values[1]);
      b.push_back(r->values[2]);
    }
    rep.summary_rows.push_back({fmt(rows.front()->values[0]), fmt(std::uint64_t(rows.size())), fmt(mean(m)),
                                fmt(*std::max_element(m.begin(), m.end())), fmt(mean(b))});
  }
}

void aggregate_edge(EnsembleReport& rep) {
  rep.summary_header = {"L", "trials", "min_E0", "mean_E0", "median_E0"};
  json scales = json::array();
  for (auto& [key, rows] : by_point(rep.rows, false)) {
    std::vector<double> e;
    for (auto* r : rows) e.push_back(r->values[0]);
    const double lo = *std::min_element(e.begin(), e.end());
    scales.push_back({{"L", key.first}, {"trials", e.size()}, {"min_E0", lo}, {"mean_E0", mean(e)}});
    rep.summary_rows.push_back({fmt(key.first), fmt(std::uint64_t(e.size())), fmt(lo), fmt(mean(e)), fmt(median(e))});
  }
  rep.aggregates["scales"] = scales;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

json field_json(const FieldSpec& f) {
  json taps = json::array();
  for (const auto& t : f.kernel) taps.push_back({{"offset", t.offset}, {"weight", t.weight}});
  static const char* names[] = {"uniform", "exponential", "constant"};
  return {{"d", f.d},
          {"base",
           {{"kind", names[static_cast<int>(f.base.kind)]},
            {"a", f.base.a},
            {"rate", f.base.rate},
            {"vmax", f.base.vmax},
            {"value", f.base.value}}},
          {"kernel", taps}};
}

}  // namespace

RowLayout row_layout(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::field_certify: {
      RowLayout l{"point", "sub", {"v_origin"}};
      for (int k = 0; k < cfg.hamiltonian.field.d; ++k) {
        l.columns.push_back("v_minus_e" + std::to_string(k));
        l.columns.push_back("v_plus_e" + std::to_string(k));
      }
      for (auto L : cfg.field_certify.mixing_L) l.columns.push_back("v_far_" + std::to_string(L));
      return l;
    }
    case ExperimentKind::large_deviation:
      return {"L", "sub", {"cube_average", "event"}};
    case ExperimentKind::lifshitz:
      return {"L", "sub", {"E0", "event"}};
    case ExperimentKind::ct_check:
      return {"point", "sub", {"n", "d", "L", "dim", "eta", "E", "ratio"}};
    case ExperimentKind::msa_initial:
      return {"L", "n", {"E0", "shortcut", "singular", "singular_resolvent", "ct_chain", "energies_scanned",
                             "scan_agrees"}};
    case ExperimentKind::eigen_decay:
      return {"L", "eigen_index", {"energy", "fitted_rate", "r_max", "degenerate", "center_norm"}};
    case ExperimentKind::dynloc:
      return {"L", "time_index", {"t", "moment", "bound"}};
    case ExperimentKind::spectral_edge:
      return {"L", "sub", {"E0"}};
  }
  return {};
}

std::uint64_t trial_seed(std::uint64_t master, ExperimentKind kind, std::uint64_t trial) {
  return rng::combine(kind_seed(master, kind), trial);
}

std::vector<TrialRow> run_trials(const ExperimentConfig& config, std::uint64_t first, std::uint64_t last,
                                 int workers) {
  return run_range(config, first, last, workers, {});
}

std::vector<TrialRow> merge_rows(std::vector<TrialRow> a, std::vector<TrialRow> b) {
  a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
  std::stable_sort(a.begin(), a.end(), row_less);
  std::vector<TrialRow> out;
  for (auto& r : a) {
    if (!out.empty() && same_key(out.back(), r)) {
      if (!same_values(out.back(), r))
        throw Error("merge_rows: conflicting records for trial " + std::to_string(r.trial));
      continue;
    }
    out.push_back(std::move(r));
  }
  return out;
}

EnsembleReport aggregate(const ExperimentConfig& config, std::vector<TrialRow> rows) {
  EnsembleReport rep;
  rep.config = config;
  rep.rows = merge_rows(std::move(rows), {});
  std::set<std::tuple<std::int64_t, std::int64_t, std::uint64_t>> items, failed;
  const bool indexed = sub_is_index(config.kind);
  for (const auto& r : rep.rows) {
    const auto key = std::make_tuple(r.group, indexed ? 0 : r.sub, r.trial);
    items.insert(key);
    if (!r.ok) failed.insert(key);
  }
  rep.work_items = items.size();
  rep.failures = failed.size();
  rep.aggregates = json::object();
  switch (config.kind) {
    case ExperimentKind::field_certify:
      aggregate_field_certify(rep);
      break;
    case ExperimentKind::large_deviation:
      aggregate_large_deviation_rows(rep);
      break;
    case ExperimentKind::lifshitz:
      aggregate_lifshitz(rep);
      break;
    case ExperimentKind::ct_check:
      aggregate_ct(rep);
      break;
    case ExperimentKind::msa_initial:
      aggregate_msa(rep);
      break;
    case ExperimentKind::eigen_decay:
      aggregate_decay(rep);
      break;
    case ExperimentKind::dynloc:
      aggregate_dynloc(rep);
      break;
    case ExperimentKind::spectral_edge:
      aggregate_edge(rep);
      break;
  }
  return rep;
}

EnsembleReport run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  auto issues = check_config(config);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  const auto start = std::chrono::steady_clock::now();
  auto rows = run_range(config, 0, config.trials, config.workers, progress);
  EnsembleReport rep = aggregate(config, std::move(rows));
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = std::string(kind_name(c.kind));
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["output"] = c.output;
  j["estar_override"] = c.estar_override ? json(*c.estar_override) : json(nullptr);
  j["hamiltonian"] = {{"n", c.hamiltonian.n},
                      {"d", c.hamiltonian.d},
                      {"field", field_json(c.hamiltonian.field)},
                      {"interaction", {{"r0", c.hamiltonian.interaction.r0}, {"phi", c.hamiltonian.interaction.phi}}}};
  switch (c.kind) {
    case ExperimentKind::field_certify:
      j["field_certify"] = {{"mixing_L", c.field_certify.mixing_L}, {"eps", c.field_certify.eps}};
      break;
    case ExperimentKind::large_deviation:
      j["large_deviation"] = {{"E", c.large_deviation.E}, {"beta", c.large_deviation.beta}, {"c", c.large_deviation.c}};
      break;
    case ExperimentKind::lifshitz:
      j["lifshitz"] = {{"L", c.lifshitz.L}, {"C", c.lifshitz.C}};
      break;
    case ExperimentKind::ct_check:
      j["ct_check"] = {{"max_n", c.ct_check.max_n},
                       {"max_d", c.ct_check.max_d},
                       {"max_L", c.ct_check.max_L},
                       {"max_dim", c.ct_check.max_dim}};
      break;
    case ExperimentKind::msa_initial:
      j["msa"] = {{"N", c.msa.N},
                  {"p", c.msa.p},
                  {"L0", c.msa.L0},
                  {"alpha", c.msa.alpha},
                  {"estar", c.msa.estar ? json(*c.msa.estar) : json(nullptr)},
                  {"grid_points", c.msa.grid_points},
                  {"verify_shortcut", c.msa.verify_shortcut},
                  {"n", msa_particle_numbers(c)}};
      break;
    case ExperimentKind::eigen_decay:
      j["eigen_decay"] = {{"L", c.eigen_decay.L}, {"window", c.eigen_decay.window}};
      break;
    case ExperimentKind::dynloc:
      j["dynloc"] = {{"L", c.dynloc.L},
                     {"window", c.dynloc.window},
                     {"s", c.dynloc.s},
                     {"K_radius", c.dynloc.K_radius},
                     {"times", c.dynloc.times.empty() ? default_time_grid() : c.dynloc.times}};
      break;
    case ExperimentKind::spectral_edge:
      j["spectral_edge"] = {{"L", c.spectral_edge.L}};
      break;
  }
  return j;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trials_csv(const EnsembleReport& rep) {
  const auto layout = row_layout(rep.config);
  std::string out = layout.group_name + "," + layout.sub_name + ",trial";
  for (const auto& c : layout.columns) out += "," + c;
  out += ",ok,error\n";
  for (const auto& r : rep.rows) {
    out += std::to_string(r.group) + "," + std::to_string(r.sub) + "," + std::to_string(r.trial);
    for (double v : r.values) out += "," + format_number(v);
    out += r.ok ? ",1," : ",0,";
    out += csv_field(r.error);
    out += '\n';
  }
  return out;
}

std::string summary_csv(const EnsembleReport& rep) {
  std::string out;
  for (std::size_t i = 0; i < rep.summary_header.size(); ++i) out += (i ? "," : "") + rep.summary_header[i];
  out += '\n';
  for (const auto& row : rep.summary_rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(row[i]);
    out += '\n';
  }
  return out;
}

json report_json(const EnsembleReport& rep) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["experiment"] = std::string(kind_name(rep.config.kind));
  j["config"] = config_to_json(rep.config);
  j["aggregates"] = rep.aggregates;
  j["work_items"] = rep.work_items;
  j["failures"] = rep.failures;
  j["failure_fraction"] = rep.failure_fraction();
  j["failure_budget"] = kFailureBudget;
  j["over_budget"] = rep.over_budget();
  j["isa"] = std::string(kernels::isa_name(kernels::active_isa()));
  j["timing"] = {{"wall_seconds", rep.wall_seconds}, {"workers", rep.config.workers}};
  json errors = json::array();
  for (const auto& r : rep.rows)
    if (!r.ok && errors.size() < 20) errors.push_back({{"group", r.group}, {"sub", r.sub}, {"trial", r.trial}, {"error", r.error}});
  j["first_errors"] = errors;
  return j;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw Error("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

ReportPaths write_report(const EnsembleReport& report, const std::filesystem::path& dir, std::string timestamp) {
  if (timestamp.empty()) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    timestamp = buf;
  }
  std::filesystem::create_directories(dir);
  const std::string kind(kind_name(report.config.kind));
  std::string stem = kind + "-" + timestamp;
  for (int k = 2; std::filesystem::exists(dir / (stem + ".csv")) || std::filesystem::exists(dir / (stem + ".json")); ++k)
    stem = kind + "-" + timestamp + "-" + std::to_string(k);
  ReportPaths paths{dir / (stem + ".csv"), dir / (stem + "-summary.csv"), dir / (stem + ".json")};
  atomic_write(paths.csv, trials_csv(report));
  atomic_write(paths.summary, summary_csv(report));
  atomic_write(paths.json, report_json(report).dump(2) + "\n");
  return paths;
}

}  // namespace mpal
