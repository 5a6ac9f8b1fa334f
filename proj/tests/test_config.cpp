#include <doctest.h>

#include <algorithm>

#include "mpal/config.hpp"

using namespace mpal;

namespace {

const char* kMinimal = R"(experiment: lifshitz
trials: 200
seed: 3
hamiltonian:
  n: 1
  d: 1
  field:
    base: uniform
    a: 1.0
lifshitz:
  L: [8, 16]
)";

std::vector<ConfigIssue> issues_of(const std::string& text, const ConfigOverrides& ov = {}) {
  try {
    parse_config(text, ov);
  } catch (const ConfigError& e) {
    return e.issues;
  }
  return {};
}

bool has(const std::vector<ConfigIssue>& v, const std::string& key, const std::string& fragment) {
  return std::any_of(v.begin(), v.end(), [&](const ConfigIssue& i) {
    return i.key == key && i.message.find(fragment) != std::string::npos;
  });
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
  const auto c = parse_config(kMinimal);
  CHECK(c.kind == ExperimentKind::lifshitz);
  CHECK(c.trials == 200);
  CHECK(c.seed == 3);
  CHECK(c.workers == 1);
  CHECK(c.lifshitz.L == std::vector<Coord>{8, 16});
  CHECK(c.lifshitz.C == 1.0);
  CHECK(c.hamiltonian.field.base.kind == BaseKind::uniform);
}

TEST_CASE("kind names round trip") {
  for (auto k : all_kinds()) CHECK(parse_kind(kind_name(k)) == k);
  CHECK_FALSE(parse_kind("gamma"));
  CHECK(all_kinds().size() == 8);
}

TEST_CASE("unknown keys are rejected with their line") {
  const auto v = issues_of(std::string(kMinimal) + "msa:\n  gamma_override: 2\n");
  REQUIRE(v.size() == 1);
  CHECK(v[0].key == "msa.gamma_override");
  CHECK(v[0].line == 13);
  CHECK(v[0].message == "unknown key");
}

TEST_CASE("all violations are reported together") {
  const std::string text = R"(experiment: msa-initial
trials: 0
workers: 0
hamiltonian:
  field:
    base: gaussian
msa:
  alpha: 0.9
  p: -1
  L0: [1]
  colour: red
)";
  const auto v = issues_of(text);
  CHECK(has(v, "trials", "must be >= 1"));
  CHECK(has(v, "workers", "must be >= 1"));
  CHECK(has(v, "hamiltonian.field.base", "expected"));
  CHECK(has(v, "msa.alpha", "alpha > 1 required"));
  CHECK(has(v, "msa.p", "p > 0 required"));
  CHECK(has(v, "msa.L0", "L0 >= 2 required"));
  CHECK(has(v, "msa.colour", "unknown key"));
  for (const auto& i : v) CHECK(i.line > 0);
}

TEST_CASE("per-experiment trial minimums") {
  auto v = issues_of("experiment: large-deviation\ntrials: 500\n");
  CHECK(has(v, "trials", ">= 1000"));
  v = issues_of("experiment: lifshitz\ntrials: 99\n");
  CHECK(has(v, "trials", ">= 100"));
  CHECK(issues_of("experiment: ct-check\ntrials: 5\n").empty());
}

TEST_CASE("type errors and syntax errors") {
  auto v = issues_of("experiment: lifshitz\ntrials: many\n");
  CHECK(has(v, "trials", "cannot convert"));
  v = issues_of("experiment: [lifshitz\n");
  REQUIRE(v.size() == 1);
  CHECK(v[0].message.find("YAML syntax error") == 0);
  v = issues_of("experiment: nonsense\n");
  CHECK(has(v, "experiment", "expected one of"));
}

TEST_CASE("overrides apply before checking") {
  ConfigOverrides ov;
  ov.trials = 100;
  ov.seed = 99;
  ov.workers = 3;
  ov.estar = 2.5;
  const auto c = parse_config("experiment: lifshitz\ntrials: 5\n", ov);
  CHECK(c.trials == 100);
  CHECK(c.seed == 99);
  CHECK(c.workers == 3);
  CHECK(c.estar_override == 2.5);
  ov.trials = 0;
  CHECK(has(issues_of(kMinimal, ov), "trials", "must be >= 1"));
}

TEST_CASE("the experiment kind may come from the command line") {
  ConfigOverrides ov;
  ov.kind = ExperimentKind::spectral_edge;
  CHECK(parse_config("trials: 20\n", ov).kind == ExperimentKind::spectral_edge);
  CHECK(has(issues_of(kMinimal, ov), "experiment", "config is for lifshitz"));
  CHECK(has(issues_of("trials: 20\n"), "experiment", "required"));
}

TEST_CASE("field and interaction sections") {
  const auto c = parse_config(R"(experiment: ct-check
trials: 10
hamiltonian:
  n: 2
  d: 2
  field:
    base: exponential
    rate: 2.0
    vmax: 3.0
    kernel_box_radius: 1
  interaction:
    phi: [2.0, 1.0]
)");
  CHECK(c.hamiltonian.field.kernel.size() == 9);
  CHECK(c.hamiltonian.field.base.kind == BaseKind::exponential);
  CHECK(c.hamiltonian.interaction.r0 == 1);
  CHECK(c.hamiltonian.interaction.phi == std::vector<double>{2.0, 1.0});

  auto v = issues_of(R"(experiment: ct-check
hamiltonian:
  d: 2
  field:
    kernel:
      - offset: [0]
        weight: 1.0
)");
  CHECK(has(v, "hamiltonian.field", "offset has wrong dimension"));
  v = issues_of(R"(experiment: ct-check
hamiltonian:
  interaction:
    u: -1
    r0: 1
)");
  CHECK(has(v, "hamiltonian.interaction", "non-negative"));
}

TEST_CASE("missing files are I/O errors, not validation errors") {
  CHECK_THROWS_AS(validate_config("/nonexistent/config.yaml"), ConfigIoError);
}
