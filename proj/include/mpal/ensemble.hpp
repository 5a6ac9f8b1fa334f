#pragma once
// Monte Carlo ensembles: per-trial records, order-independent aggregation and
// reproducible CSV/JSON reports.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpal/config.hpp"

namespace mpal {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr double kFailureBudget = 0.10;

/// One record of one trial. `group` and `sub` key the parameter point
/// (e.g. scale and particle number); multi-output trials use `sub` as an index.
struct TrialRow {
  std::int64_t group = 0;
  std::int64_t sub = 0;
  std::uint64_t trial = 0;
  std::vector<double> values;
  bool ok = true;
  std::string error;
};

struct RowLayout {
  std::string group_name;
  std::string sub_name;
  std::vector<std::string> columns;
};

RowLayout row_layout(const ExperimentConfig& config);

/// hash(master seed, experiment kind, trial index).
std::uint64_t trial_seed(std::uint64_t master, ExperimentKind kind, std::uint64_t trial);

/// Runs trials [first, last) of every parameter point. Trial failures are
/// recorded in the rows; other exceptions propagate.
std::vector<TrialRow> run_trials(const ExperimentConfig& config, std::uint64_t first, std::uint64_t last,
                                 int workers = 1);

/// Union of partial results, sorted by (group, sub, trial). Duplicate keys must agree.
std::vector<TrialRow> merge_rows(std::vector<TrialRow> a, std::vector<TrialRow> b);

struct EnsembleReport {
  ExperimentConfig config;
  std::vector<TrialRow> rows;
  nlohmann::json aggregates;
  std::vector<std::string> summary_header;
  std::vector<std::vector<std::string>> summary_rows;
  std::uint64_t work_items = 0;
  std::uint64_t failures = 0;
  double wall_seconds = 0.0;

  double failure_fraction() const {
    return work_items ? static_cast<double>(failures) / static_cast<double>(work_items) : 0.0;
  }
  bool over_budget() const { return failure_fraction() > kFailureBudget; }
};

/// Aggregates depend only on the set of rows, never on their arrival order.
EnsembleReport aggregate(const ExperimentConfig& config, std::vector<TrialRow> rows);

using ProgressFn = std::function<void(std::uint64_t done, std::uint64_t total)>;
EnsembleReport run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

nlohmann::json config_to_json(const ExperimentConfig& config);
std::string trials_csv(const EnsembleReport& report);
std::string summary_csv(const EnsembleReport& report);
/// Includes timing; the CSV outputs do not.
nlohmann::json report_json(const EnsembleReport& report);

/// Shortest round-trip decimal text.
std::string format_number(double v);

/// Writes to a sibling temporary file, then renames over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& content);

struct ReportPaths {
  std::filesystem::path csv;
  std::filesystem::path summary;
  std::filesystem::path json;
};

/// <dir>/<kind>-<timestamp>.csv, -summary.csv and .json. An empty timestamp
/// means the current UTC time.
ReportPaths write_report(const EnsembleReport& report, const std::filesystem::path& dir,
                         std::string timestamp = {});

}  // namespace mpal
