#include "mpal/config.hpp"

#include <yaml-cpp/yaml.h>

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mpal/observables.hpp"

namespace mpal {

namespace {

constexpr std::array<std::pair<ExperimentKind, std::string_view>, 8> kKindNames{{
    {ExperimentKind::field_certify, "field-certify"},
    {ExperimentKind::large_deviation, "large-deviation"},
    {ExperimentKind::lifshitz, "lifshitz"},
    {ExperimentKind::ct_check, "ct-check"},
    {ExperimentKind::msa_initial, "msa-initial"},
    {ExperimentKind::eigen_decay, "eigen-decay"},
    {ExperimentKind::dynloc, "dynloc"},
    {ExperimentKind::spectral_edge, "spectral-edge"},
}};

int line_of(const YAML::Node& node) {
  auto mark = node.Mark();
  return mark.line >= 0 ? mark.line + 1 : 0;
}

class Reader {
 public:
  std::vector<ConfigIssue> issues;
  std::map<std::string, int> lines;  // key path -> line of its value

  void fail(const YAML::Node& node, const std::string& key, const std::string& message) {
    issues.push_back({node ? line_of(node) : 0, key, message});
  }

  // Reports keys of `map` outside `allowed`. Returns false when `map` is not a mapping.
  bool keys(const YAML::Node& map, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!path.empty() && !lines.count(path)) lines[path] = line_of(map);
    if (!map.IsMap()) {
      fail(map, path, "expected a mapping");
      return false;
    }
    std::set<std::string_view> ok(allowed.begin(), allowed.end());
    for (const auto& kv : map) {
      auto name = kv.first.as<std::string>();
      if (!ok.count(name)) fail(kv.first, join(path, name), "unknown key");
    }
    return true;
  }

  template <class T>
  void scalar(const YAML::Node& map, const std::string& path, const char* key, T& out) {
    auto node = map[key];
    if (!node) return;
    lines[join(path, key)] = line_of(node);
    if (!node.IsScalar()) {
      fail(node, join(path, key), "expected a scalar");
      return;
    }
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, join(path, key), "cannot convert '" + node.Scalar() + "'");
    }
  }

  template <class T>
  void optional_scalar(const YAML::Node& map, const std::string& path, const char* key, std::optional<T>& out) {
    if (!map[key]) return;
    T v{};
    auto before = issues.size();
    scalar(map, path, key, v);
    if (issues.size() == before) out = v;
  }

  template <class T>
  void list(const YAML::Node& map, const std::string& path, const char* key, std::vector<T>& out) {
    auto node = map[key];
    if (!node) return;
    lines[join(path, key)] = line_of(node);
    if (node.IsScalar()) {
      std::vector<T> one(1);
      try {
        one[0] = node.as<T>();
        out = one;
      } catch (const YAML::Exception&) {
        fail(node, join(path, key), "cannot convert '" + node.Scalar() + "'");
      }
      return;
    }
    if (!node.IsSequence()) {
      fail(node, join(path, key), "expected a list");
      return;
    }
    std::vector<T> values;
    for (const auto& item : node) {
      try {
        values.push_back(item.as<T>());
      } catch (const YAML::Exception&) {
        fail(item, join(path, key), "cannot convert list entry");
        return;
      }
    }
    out = std::move(values);
  }

  static std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }
};

void read_field(Reader& r, const YAML::Node& node, int d, FieldSpec& field) {
  const std::string path = "hamiltonian.field";
  if (!r.keys(node, path, {"base", "a", "rate", "vmax", "value", "kernel", "kernel_box_radius"})) return;
  std::string base = "uniform";
  r.scalar(node, path, "base", base);
  BaseLaw law;
  if (base == "uniform") {
    law = BaseLaw::uniform(1.0);
  } else if (base == "exponential") {
    law = BaseLaw::exponential(1.0, 1.0);
  } else if (base == "constant") {
    law = BaseLaw::constant(0.0);
  } else {
    r.fail(node["base"], path + ".base", "expected uniform, exponential or constant");
  }
  r.scalar(node, path, "a", law.a);
  r.scalar(node, path, "rate", law.rate);
  r.scalar(node, path, "vmax", law.vmax);
  r.scalar(node, path, "value", law.value);
  field.d = d;
  field.base = law;
  field.kernel = {KernelTap{std::vector<Coord>(static_cast<std::size_t>(std::max(d, 1)), 0), 1.0}};

  if (node["kernel"] && node["kernel_box_radius"]) {
    r.fail(node["kernel"], path + ".kernel", "give either kernel or kernel_box_radius, not both");
    return;
  }
  if (auto radius = node["kernel_box_radius"]) {
    int R = 0;
    r.scalar(node, path, "kernel_box_radius", R);
    if (R < 0) {
      r.fail(radius, path + ".kernel_box_radius", "must be >= 0");
    } else if (d >= 1) {
      field = FieldSpec::box(d, R, law);
    }
  }
  if (auto kernel = node["kernel"]) {
    if (!kernel.IsSequence() || kernel.size() == 0) {
      r.fail(kernel, path + ".kernel", "expected a non-empty list of {offset, weight}");
      return;
    }
    std::vector<KernelTap> taps;
    for (const auto& tap : kernel) {
      if (!r.keys(tap, path + ".kernel[]", {"offset", "weight"})) continue;
      KernelTap t;
      r.list(tap, path + ".kernel[]", "offset", t.offset);
      r.scalar(tap, path + ".kernel[]", "weight", t.weight);
      if (!tap["offset"] || !tap["weight"]) r.fail(tap, path + ".kernel[]", "offset and weight are required");
      taps.push_back(std::move(t));
    }
    field.kernel = std::move(taps);
  }
}

void read_interaction(Reader& r, const YAML::Node& node, InteractionSpec& inter) {
  const std::string path = "hamiltonian.interaction";
  if (!r.keys(node, path, {"r0", "u", "phi"})) return;
  if (node["u"] && node["phi"]) {
    r.fail(node, path, "give either u or phi, not both");
    return;
  }
  Coord r0 = 0;
  r.scalar(node, path, "r0", r0);
  if (r0 < 0) {
    r.fail(node["r0"], path + ".r0", "must be >= 0");
    return;
  }
  if (node["phi"]) {
    std::vector<double> phi;
    r.list(node, path, "phi", phi);
    inter.r0 = phi.empty() ? 0 : static_cast<Coord>(phi.size()) - 1;
    inter.phi = phi.empty() ? std::vector<double>{0.0} : phi;
    if (node["r0"] && r0 != inter.r0) r.fail(node["r0"], path + ".r0", "must equal len(phi) - 1");
  } else {
    double u = 0.0;
    r.scalar(node, path, "u", u);
    inter = InteractionSpec::constant(r0, u);
  }
}

void read_hamiltonian(Reader& r, const YAML::Node& node, HamiltonianSpec& h) {
  if (!r.keys(node, "hamiltonian", {"n", "d", "field", "interaction"})) return;
  r.scalar(node, "hamiltonian", "n", h.n);
  r.scalar(node, "hamiltonian", "d", h.d);
  h.field = FieldSpec::iid(std::max(h.d, 1), BaseLaw::uniform(1.0));
  if (auto f = node["field"]) read_field(r, f, h.d, h.field);
  if (auto i = node["interaction"]) read_interaction(r, i, h.interaction);
}

}  // namespace

std::string_view kind_name(ExperimentKind kind) {
  for (auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<ExperimentKind> parse_kind(std::string_view name) {
  for (auto& [k, n] : kKindNames)
    if (n == name) return k;
  return std::nullopt;
}

const std::vector<ExperimentKind>& all_kinds() {
  static const std::vector<ExperimentKind> kinds = [] {
    std::vector<ExperimentKind> v;
    for (auto& kv : kKindNames) v.push_back(kv.first);
    return v;
  }();
  return kinds;
}

std::string ConfigIssue::str() const {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  if (!key.empty()) os << key << ": ";
  os << message;
  return os.str();
}

namespace {
std::string summarize(const std::vector<ConfigIssue>& issues) {
  std::string out = "invalid config (" + std::to_string(issues.size()) + " issue" +
                    (issues.size() == 1 ? "" : "s") + ")";
  for (const auto& i : issues) out += "\n  " + i.str();
  return out;
}
}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> list) : Error(summarize(list)), issues(std::move(list)) {}

ExperimentConfig parse_config(std::string_view text, const ConfigOverrides& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError({{e.mark.line + 1, "", "YAML syntax error: " + e.msg}});
  }
  if (root.IsNull()) {
    root = YAML::Node(YAML::NodeType::Map);
  }
  Reader r;
  ExperimentConfig cfg;
  if (!root.IsMap()) throw ConfigError({{0, "", "top level must be a mapping"}});
  r.keys(root, "",
         {"experiment", "trials", "seed", "workers", "output", "estar_override", "hamiltonian", "field_certify",
          "large_deviation", "lifshitz", "ct_check", "msa", "eigen_decay", "dynloc", "spectral_edge"});

  if (auto e = root["experiment"]) {
    auto kind = e.IsScalar() ? parse_kind(e.Scalar()) : std::nullopt;
    if (kind && overrides.kind && *kind != *overrides.kind) {
      r.fail(e, "experiment", "config is for " + e.Scalar() + ", not " + std::string(kind_name(*overrides.kind)));
    } else if (kind) {
      cfg.kind = *kind;
    } else {
      std::string names;
      for (auto& kv : kKindNames) names += (names.empty() ? "" : ", ") + std::string(kv.second);
      r.fail(e, "experiment", "expected one of " + names);
    }
  } else if (overrides.kind) {
    cfg.kind = *overrides.kind;
  } else {
    r.fail(root, "experiment", "required");
  }

  std::int64_t trials = static_cast<std::int64_t>(cfg.trials);
  r.scalar(root, "", "trials", trials);
  if (trials < 0) {
    r.fail(root["trials"], "trials", "must be >= 1");
    trials = 0;
  }
  cfg.trials = static_cast<std::uint64_t>(trials);
  r.scalar(root, "", "seed", cfg.seed);
  r.scalar(root, "", "workers", cfg.workers);
  r.scalar(root, "", "output", cfg.output);
  r.optional_scalar(root, "", "estar_override", cfg.estar_override);

  cfg.hamiltonian.field = FieldSpec::iid(1, BaseLaw::uniform(1.0));
  if (auto h = root["hamiltonian"]) read_hamiltonian(r, h, cfg.hamiltonian);

  if (auto s = root["field_certify"]; s && r.keys(s, "field_certify", {"mixing_L", "eps"})) {
    r.list(s, "field_certify", "mixing_L", cfg.field_certify.mixing_L);
    r.list(s, "field_certify", "eps", cfg.field_certify.eps);
  }
  if (auto s = root["large_deviation"]; s && r.keys(s, "large_deviation", {"E", "beta", "c"})) {
    r.scalar(s, "large_deviation", "E", cfg.large_deviation.E);
    r.scalar(s, "large_deviation", "beta", cfg.large_deviation.beta);
    r.scalar(s, "large_deviation", "c", cfg.large_deviation.c);
  }
  if (auto s = root["lifshitz"]; s && r.keys(s, "lifshitz", {"L", "C"})) {
    r.list(s, "lifshitz", "L", cfg.lifshitz.L);
    r.scalar(s, "lifshitz", "C", cfg.lifshitz.C);
  }
  if (auto s = root["ct_check"]; s && r.keys(s, "ct_check", {"max_n", "max_d", "max_L", "max_dim"})) {
    r.scalar(s, "ct_check", "max_n", cfg.ct_check.max_n);
    r.scalar(s, "ct_check", "max_d", cfg.ct_check.max_d);
    r.scalar(s, "ct_check", "max_L", cfg.ct_check.max_L);
    r.scalar(s, "ct_check", "max_dim", cfg.ct_check.max_dim);
  }
  if (auto s = root["msa"]; s && r.keys(s, "msa", {"N", "p", "L0", "alpha", "estar", "grid_points", "verify_shortcut", "n"})) {
    r.scalar(s, "msa", "N", cfg.msa.N);
    r.scalar(s, "msa", "p", cfg.msa.p);
    r.list(s, "msa", "L0", cfg.msa.L0);
    r.scalar(s, "msa", "alpha", cfg.msa.alpha);
    r.optional_scalar(s, "msa", "estar", cfg.msa.estar);
    r.scalar(s, "msa", "grid_points", cfg.msa.grid_points);
    r.scalar(s, "msa", "verify_shortcut", cfg.msa.verify_shortcut);
    r.list(s, "msa", "n", cfg.msa.n);
  }
  if (auto s = root["eigen_decay"]; s && r.keys(s, "eigen_decay", {"L", "window"})) {
    r.scalar(s, "eigen_decay", "L", cfg.eigen_decay.L);
    r.scalar(s, "eigen_decay", "window", cfg.eigen_decay.window);
  }
  if (auto s = root["dynloc"]; s && r.keys(s, "dynloc", {"L", "window", "s", "K_radius", "times"})) {
    r.scalar(s, "dynloc", "L", cfg.dynloc.L);
    r.scalar(s, "dynloc", "window", cfg.dynloc.window);
    r.scalar(s, "dynloc", "s", cfg.dynloc.s);
    r.scalar(s, "dynloc", "K_radius", cfg.dynloc.K_radius);
    r.list(s, "dynloc", "times", cfg.dynloc.times);
  }
  if (auto s = root["spectral_edge"]; s && r.keys(s, "spectral_edge", {"L"})) {
    r.list(s, "spectral_edge", "L", cfg.spectral_edge.L);
  }

  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.trials) cfg.trials = *overrides.trials;
  if (overrides.workers) cfg.workers = *overrides.workers;
  if (overrides.output) cfg.output = *overrides.output;
  if (overrides.estar) cfg.estar_override = *overrides.estar;

  auto semantic = check_config(cfg);
  for (auto& issue : semantic) {
    if (auto it = r.lines.find(issue.key); it != r.lines.end()) issue.line = it->second;
  }
  r.issues.insert(r.issues.end(), semantic.begin(), semantic.end());
  if (!r.issues.empty()) throw ConfigError(std::move(r.issues));
  return cfg;
}

std::vector<ConfigIssue> check_config(const ExperimentConfig& cfg) {
  std::vector<ConfigIssue> out;
  auto bad = [&](std::string key, std::string msg) { out.push_back({0, std::move(key), std::move(msg)}); };
  auto wrap = [&](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      bad(key, e.what());
    }
  };

  if (cfg.trials < 1) bad("trials", "must be >= 1");
  if (cfg.workers < 1) bad("workers", "must be >= 1");
  if (cfg.output.empty()) bad("output", "must not be empty");
  if (cfg.estar_override && !(*cfg.estar_override > 0)) bad("estar_override", "must be > 0");

  const auto& h = cfg.hamiltonian;
  if (h.n < 1) bad("hamiltonian.n", "must be >= 1");
  if (h.d < 1) bad("hamiltonian.d", "must be >= 1");
  if (h.d >= 1 && h.field.d != h.d) bad("hamiltonian.field", "field dimension must equal d");
  wrap("hamiltonian.field", [&] { h.field.validate(); });
  wrap("hamiltonian.interaction", [&] { h.interaction.validate(); });

  auto minimum = [&](std::uint64_t needed) {
    if (cfg.trials >= 1 && cfg.trials < needed)
      bad("trials", "must be >= " + std::to_string(needed) + " for " + std::string(kind_name(cfg.kind)));
  };
  auto positive_scales = [&](const std::string& key, const std::vector<Coord>& L, Coord lo) {
    if (L.empty()) bad(key, "must not be empty");
    for (auto v : L)
      if (v < lo) bad(key, "entries must be >= " + std::to_string(lo));
  };

  switch (cfg.kind) {
    case ExperimentKind::field_certify: {
      minimum(1000);
      positive_scales("field_certify.mixing_L", cfg.field_certify.mixing_L, 0);
      for (double e : cfg.field_certify.eps)
        if (!(e >= 0 && e < 1)) bad("field_certify.eps", "entries must lie in [0, 1)");
      break;
    }
    case ExperimentKind::large_deviation: {
      minimum(1000);
      const auto& p = cfg.large_deviation;
      if (!(p.E > 0)) bad("large_deviation.E", "must be > 0");
      if (!(p.beta > 0)) bad("large_deviation.beta", "must be > 0");
      if (!(p.c > 0)) bad("large_deviation.c", "must be > 0");
      if (p.E > 0 && p.beta > 0) wrap("large_deviation", [&] { large_deviation_scale(p.E, p.beta); });
      break;
    }
    case ExperimentKind::lifshitz:
      minimum(100);
      positive_scales("lifshitz.L", cfg.lifshitz.L, 1);
      if (!(cfg.lifshitz.C > 0)) bad("lifshitz.C", "must be > 0");
      break;
    case ExperimentKind::ct_check: {
      const auto& p = cfg.ct_check;
      if (p.max_n < 1) bad("ct_check.max_n", "must be >= 1");
      if (p.max_d < 1) bad("ct_check.max_d", "must be >= 1");
      if (p.max_L < 1) bad("ct_check.max_L", "must be >= 1");
      if (p.max_dim < 3 || p.max_dim > 5000) bad("ct_check.max_dim", "must lie in [3, 5000]");
      break;
    }
    case ExperimentKind::msa_initial: {
      minimum(100);
      const auto& p = cfg.msa;
      if (p.L0.empty()) bad("msa.L0", "must not be empty");
      if (p.grid_points < 1) bad("msa.grid_points", "must be >= 1");
      for (int n : p.n)
        if (n < 1 || n > p.N) bad("msa.n", "entries must lie in [1, N]");
      if (h.d >= 1 && p.N >= 1 && h.n > p.N) bad("hamiltonian.n", "must not exceed msa.N");
      if (p.N < 1) bad("msa.N", "must be >= 1");
      if (!(p.p > 0)) bad("msa.p", "p > 0 required");
      if (!(p.alpha > 1)) bad("msa.alpha", "alpha > 1 required");
      for (auto L0 : p.L0)
        if (L0 < 2) bad("msa.L0", "L0 >= 2 required");
      if (p.estar && !(*p.estar > 0)) bad("msa.estar", "must be > 0");
      break;
    }
    case ExperimentKind::eigen_decay:
      if (cfg.eigen_decay.L < 1) bad("eigen_decay.L", "must be >= 1");
      if (!(cfg.eigen_decay.window >= 0)) bad("eigen_decay.window", "must be >= 0");
      break;
    case ExperimentKind::dynloc: {
      const auto& p = cfg.dynloc;
      if (p.L < 1) bad("dynloc.L", "must be >= 1");
      if (!(p.window > 0)) bad("dynloc.window", "must be > 0");
      if (!(p.s > 0)) bad("dynloc.s", "must be > 0");
      if (p.K_radius < 0 || p.K_radius > p.L) bad("dynloc.K_radius", "must lie in [0, L]");
      for (double t : p.times)
        if (!(t >= 0) || !std::isfinite(t)) bad("dynloc.times", "entries must be finite and >= 0");
      break;
    }
    case ExperimentKind::spectral_edge:
      positive_scales("spectral_edge.L", cfg.spectral_edge.L, 1);
      break;
  }
  return out;
}

ExperimentConfig validate_config(const std::string& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigIoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw ConfigIoError("error reading config file: " + path);
  return parse_config(ss.str(), overrides);
}

}  // namespace mpal
