#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#ifndef MPAL_CLI_PATH
#error "MPAL_CLI_PATH must point at the command-line binary"
#endif

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(MPAL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "mpal-cli-test";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write(const std::string& name, const std::string& text) {
  const auto p = scratch(name);
  std::ofstream(p) << text;
  return p;
}

const char* kSmoke = R"(experiment: lifshitz
trials: 100
seed: 5
hamiltonian:
  field:
    base: uniform
    a: 1.0
lifshitz:
  L: [4, 8]
)";

}  // namespace

TEST_CASE("exit codes") {
  const auto good = write("good.yaml", kSmoke);
  const auto out = scratch("out");
  fs::remove_all(out);
  CHECK(run("lifshitz --config " + good.string() + " --out " + out.string() + " --quiet") == 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    (void)e;
    ++files;
  }
  CHECK(files == 3);
  CHECK(run("lifshitz --config " + good.string() + " --trials 0 --quiet") == 2);
  CHECK(run("spectral-edge --config " + good.string() + " --quiet") == 2);
  const auto bad = write("bad.yaml", "experiment: msa-initial\nmsa:\n  alpha: 0.9\n");
  CHECK(run("msa-initial --config " + bad.string()) == 2);
  CHECK(run("lifshitz") == 2);
  CHECK(run("no-such-command") == 2);
  CHECK(run("validate --config " + good.string()) == 0);
  fs::remove_all(out);
}

TEST_CASE("worker count does not change the per-trial CSV") {
  const auto good = write("det.yaml", kSmoke);
  const auto a = scratch("det-a"), b = scratch("det-b");
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(run("lifshitz --config " + good.string() + " --workers 1 --out " + a.string() + " --quiet") == 0);
  REQUIRE(run("lifshitz --config " + good.string() + " --workers 3 --out " + b.string() + " --quiet") == 0);
  auto trial_csv = [](const fs::path& dir) {
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto name = e.path().filename().string();
      if (name.ends_with(".csv") && name.find("summary") == std::string::npos) {
        std::ifstream in(e.path(), std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
      }
    }
    return std::string();
  };
  const auto ca = trial_csv(a);
  CHECK_FALSE(ca.empty());
  CHECK(ca == trial_csv(b));
  fs::remove_all(a);
  fs::remove_all(b);
}
