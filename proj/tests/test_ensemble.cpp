#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mpal/ensemble.hpp"
#include "mpal/rng.hpp"

using namespace mpal;

namespace {

ExperimentConfig smoke(ExperimentKind kind = ExperimentKind::lifshitz, std::uint64_t trials = 100) {
  ConfigOverrides ov;
  ov.kind = kind;
  ov.trials = trials;
  return parse_config(R"(trials: 100
seed: 11
hamiltonian:
  n: 1
  d: 1
  field:
    base: uniform
    a: 1.0
lifshitz:
  L: [4, 8]
spectral_edge:
  L: [3]
eigen_decay:
  L: 8
  window: 0.5
dynloc:
  L: 3
  K_radius: 1
  times: [0, 1, 10]
ct_check:
  max_n: 2
  max_d: 2
  max_L: 2
  max_dim: 30
msa:
  L0: [4]
  grid_points: 50
)",
                      ov);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("trial seeds depend on master seed, kind and trial") {
  const auto a = trial_seed(1, ExperimentKind::lifshitz, 0);
  CHECK(a == trial_seed(1, ExperimentKind::lifshitz, 0));
  CHECK(a != trial_seed(2, ExperimentKind::lifshitz, 0));
  CHECK(a != trial_seed(1, ExperimentKind::dynloc, 0));
  CHECK(a != trial_seed(1, ExperimentKind::lifshitz, 1));
}

TEST_CASE("per-trial CSV is identical across worker counts") {
  for (auto kind : {ExperimentKind::lifshitz, ExperimentKind::ct_check, ExperimentKind::dynloc}) {
    auto cfg = smoke(kind);
    cfg.trials = kind == ExperimentKind::lifshitz ? 100 : 12;
    cfg.workers = 1;
    const auto one = trials_csv(run_experiment(cfg));
    cfg.workers = 4;
    const auto four = trials_csv(run_experiment(cfg));
    CHECK(one == four);
    CHECK(one.find("nan") == std::string::npos);
  }
}

TEST_CASE("aggregation does not depend on merge order") {
  const auto cfg = smoke();
  const auto a = run_trials(cfg, 0, 40);
  const auto b = run_trials(cfg, 40, 70);
  const auto c = run_trials(cfg, 70, 100);
  const auto abc = aggregate(cfg, merge_rows(merge_rows(a, b), c));
  const auto cba = aggregate(cfg, merge_rows(c, merge_rows(b, a)));
  const auto whole = aggregate(cfg, run_trials(cfg, 0, 100));
  CHECK(abc.aggregates == cba.aggregates);
  CHECK(abc.aggregates == whole.aggregates);
  CHECK(trials_csv(abc) == trials_csv(whole));
  CHECK(summary_csv(abc) == summary_csv(cba));
  // Overlapping partial reports merge to the same thing.
  CHECK(merge_rows(a, a).size() == a.size());
}

TEST_CASE("conflicting duplicates are refused") {
  const auto cfg = smoke();
  auto a = run_trials(cfg, 0, 2);
  auto b = a;
  b[0].values[0] += 1.0;
  CHECK_THROWS_AS(merge_rows(a, b), Error);
}

TEST_CASE("every experiment kind runs on a smoke config") {
  for (auto kind : all_kinds()) {
    std::uint64_t trials = 100;
    if (kind == ExperimentKind::field_certify || kind == ExperimentKind::large_deviation) trials = 1000;
    if (kind == ExperimentKind::eigen_decay || kind == ExperimentKind::dynloc || kind == ExperimentKind::spectral_edge ||
        kind == ExperimentKind::ct_check)
      trials = 10;
    const auto cfg = smoke(kind, trials);
    CAPTURE(kind_name(kind));
    const auto rep = run_experiment(cfg);
    CHECK(rep.failures == 0);
    CHECK_FALSE(rep.over_budget());
    CHECK(rep.work_items > 0);
    CHECK_FALSE(rep.summary_rows.empty());
    for (const auto& row : rep.summary_rows) CHECK(row.size() == rep.summary_header.size());
    const auto layout = row_layout(cfg);
    for (const auto& r : rep.rows) CHECK(r.values.size() == layout.columns.size());
  }
}

TEST_CASE("msa summary columns") {
  const auto rep = run_experiment(smoke(ExperimentKind::msa_initial));
  CHECK(summary_csv(rep).rfind("n,L,trials,singular_count,estimate,ci_low,ci_high,shortcut_rate,target\n", 0) == 0);
}

TEST_CASE("failed trials count against the budget") {
  auto cfg = smoke();
  std::vector<TrialRow> rows;
  for (std::uint64_t t = 0; t < 10; ++t) rows.push_back({4, 0, t, {0.5, 1.0}, true, {}});
  rows.push_back({4, 0, 10, {NAN, NAN}, false, "solver failed"});
  auto rep = aggregate(cfg, rows);
  CHECK(rep.failures == 1);
  CHECK_FALSE(rep.over_budget());
  rows.push_back({4, 0, 11, {NAN, NAN}, false, "solver failed"});
  rep = aggregate(cfg, rows);
  CHECK(rep.over_budget());
  const auto csv = trials_csv(rep);
  CHECK(csv.find(",0,solver failed\n") != std::string::npos);
}

TEST_CASE("report files are written atomically with stable names") {
  const auto dir = std::filesystem::temp_directory_path() / ("mpal-ens-" + std::to_string(rng::splitmix64(42)));
  std::filesystem::remove_all(dir);
  const auto rep = run_experiment(smoke());
  const auto p1 = write_report(rep, dir, "20260101T000000Z");
  CHECK(p1.csv.filename() == "lifshitz-20260101T000000Z.csv");
  CHECK(p1.summary.filename() == "lifshitz-20260101T000000Z-summary.csv");
  CHECK(p1.json.filename() == "lifshitz-20260101T000000Z.json");
  CHECK(slurp(p1.csv) == trials_csv(rep));
  const auto j = nlohmann::json::parse(slurp(p1.json));
  CHECK(j["schema_version"] == kReportSchemaVersion);
  CHECK(j["config"]["seed"] == 11);
  CHECK(j["aggregates"]["scales"].size() == 2);
  const auto p2 = write_report(rep, dir, "20260101T000000Z");
  CHECK(p2.csv.filename() == "lifshitz-20260101T000000Z-2.csv");
  for (const auto& e : std::filesystem::directory_iterator(dir))
    CHECK(e.path().string().find(".tmp.") == std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("number formatting round trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.0, -2.5}) CHECK(std::stod(format_number(v)) == v);
  CHECK(format_number(NAN) == "nan");
}
