#include "isac/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace isac {

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::SweepNonlinearity, "sweep_nonlinearity"},
    {ExperimentKind::SweepSnr, "sweep_snr"},
    {ExperimentKind::Convergence, "convergence"},
    {ExperimentKind::BeamPattern, "beam_pattern"},
};

constexpr std::pair<ExperimentKind, std::string_view> kKindCliNames[] = {
    {ExperimentKind::SweepNonlinearity, "sweep-nonlin"},
    {ExperimentKind::SweepSnr, "sweep-snr"},
    {ExperimentKind::Convergence, "convergence"},
    {ExperimentKind::BeamPattern, "beam-pattern"},
};

constexpr std::pair<Scheme, std::string_view> kSchemeNames[] = {
    {Scheme::ProposedKnown, "proposed_known"},
    {Scheme::ProposedUnknown, "proposed_unknown"},
    {Scheme::Mrt, "mrt"},
    {Scheme::Zf, "zf"},
    {Scheme::Rbf, "rbf"},
};

std::vector<double> arange(double lo, double hi, double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::llround((hi - lo) / step));
  for (int i = 0; i <= n; ++i) out.push_back(lo + step * i);
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_complex(Complex z) {
  return "[" + fmt_double(z.real()) + ", " + fmt_double(z.imag()) + "]";
}

template <typename T, typename F>
std::string fmt_list(const std::vector<T>& v, F f) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += f(v[i]);
  }
  return s + "]";
}

// Parse context: source name for messages.
struct Reader {
  std::string source;

  [[noreturn]] void fail(const YAML::Mark& mark, const std::string& msg) const {
    std::ostringstream os;
    os << source;
    if (!mark.is_null()) os << ":" << mark.line + 1 << ":" << mark.column + 1;
    os << ": " << msg;
    throw ConfigError(os.str());
  }

  void require_map(const YAML::Node& node, const std::string& what) const {
    if (!node.IsMap()) fail(node.Mark(), what + " must be a mapping");
  }

  void check_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                  const std::string& section) const {
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        fail(kv.first.Mark(), "unknown key '" + key + "'" +
                                  (section.empty() ? std::string() : " in section '" + section + "'"));
      }
    }
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node.Mark(), "'" + key + "' must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node.Mark(), "'" + key + "' has an invalid value '" + node.Scalar() + "'");
    }
  }

  Complex complex(const YAML::Node& node, const std::string& key) const {
    if (node.IsScalar()) return {scalar<double>(node, key), 0.0};
    if (!node.IsSequence() || node.size() != 2)
      fail(node.Mark(), "'" + key + "' must be a number or a [real, imag] pair");
    return {scalar<double>(node[0], key), scalar<double>(node[1], key)};
  }

  std::vector<double> reals(const YAML::Node& node, const std::string& key) const {
    if (!node.IsSequence()) fail(node.Mark(), "'" + key + "' must be a list");
    std::vector<double> out;
    for (const auto& item : node) out.push_back(scalar<double>(item, key));
    return out;
  }
};

void read_system(const Reader& r, const YAML::Node& node, ExperimentSpec& spec) {
  r.require_map(node, "section 'system'");
  r.check_keys(node,
               {"n_tx", "n_rf", "n_users", "n_paths", "p_tot_dbm", "snr_db", "weight_comm",
                "weight_sense", "beta1", "beta3", "target_angle_deg", "target_gain", "penalty1",
                "penalty2"},
               "system");
  SystemConfig& s = spec.system;
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    const YAML::Node& v = kv.second;
    if (key == "n_tx") s.n_tx = r.scalar<int>(v, key);
    else if (key == "n_rf") s.n_rf = r.scalar<int>(v, key);
    else if (key == "n_users") s.n_users = r.scalar<int>(v, key);
    else if (key == "n_paths") s.n_paths = r.scalar<int>(v, key);
    else if (key == "p_tot_dbm") s.p_tot_mw = dbm_to_mw(r.scalar<double>(v, key));
    else if (key == "snr_db") spec.snr_db = r.scalar<double>(v, key);
    else if (key == "weight_comm") s.weight_comm = r.scalar<double>(v, key);
    else if (key == "weight_sense") s.weight_sense = r.scalar<double>(v, key);
    else if (key == "beta1") s.beta1 = r.complex(v, key);
    else if (key == "beta3") s.beta3 = r.complex(v, key);
    else if (key == "target_angle_deg") s.target_angle_deg = r.scalar<double>(v, key);
    else if (key == "target_gain") s.target_gain = r.complex(v, key);
    else if (key == "penalty1") s.penalty1 = r.scalar<double>(v, key);
    else if (key == "penalty2") s.penalty2 = r.scalar<double>(v, key);
  }
}

void read_solver(const Reader& r, const YAML::Node& node, SolverOptions& o) {
  r.require_map(node, "section 'solver'");
  r.check_keys(node,
               {"max_outer_iters", "outer_tol", "max_mo_iters", "mo_grad_tol", "armijo_init_step",
                "armijo_contraction", "armijo_slope", "armijo_max_backtracks", "penalty_growth",
                "moment_residual_tol", "max_growth_rounds", "max_budget_rescues"},
               "solver");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    const YAML::Node& v = kv.second;
    if (key == "max_outer_iters") o.max_outer_iters = r.scalar<int>(v, key);
    else if (key == "outer_tol") o.outer_tol = r.scalar<double>(v, key);
    else if (key == "max_mo_iters") o.max_mo_iters = r.scalar<int>(v, key);
    else if (key == "mo_grad_tol") o.mo_grad_tol = r.scalar<double>(v, key);
    else if (key == "armijo_init_step") o.armijo_init_step = r.scalar<double>(v, key);
    else if (key == "armijo_contraction") o.armijo_contraction = r.scalar<double>(v, key);
    else if (key == "armijo_slope") o.armijo_slope = r.scalar<double>(v, key);
    else if (key == "armijo_max_backtracks") o.armijo_max_backtracks = r.scalar<int>(v, key);
    else if (key == "penalty_growth") o.penalty_growth = r.scalar<double>(v, key);
    else if (key == "moment_residual_tol") o.moment_residual_tol = r.scalar<double>(v, key);
    else if (key == "max_growth_rounds") o.max_growth_rounds = r.scalar<int>(v, key);
    else if (key == "max_budget_rescues") o.max_budget_rescues = r.scalar<int>(v, key);
  }
}

void read_decomposition(const Reader& r, const YAML::Node& node, DecomposeOptions& o) {
  r.require_map(node, "section 'decomposition'");
  r.check_keys(node, {"max_iters", "rel_tol"}, "decomposition");
  if (node["max_iters"]) o.max_iters = r.scalar<int>(node["max_iters"], "max_iters");
  if (node["rel_tol"]) o.rel_tol = r.scalar<double>(node["rel_tol"], "rel_tol");
}

void read_beam(const Reader& r, const YAML::Node& node, BeamPatternOptions& o) {
  r.require_map(node, "section 'beam_pattern'");
  r.check_keys(node, {"user_angle_deg", "user_gain"}, "beam_pattern");
  if (node["user_angle_deg"])
    o.user_angle_deg = r.scalar<double>(node["user_angle_deg"], "user_angle_deg");
  if (node["user_gain"]) o.user_gain = r.scalar<double>(node["user_gain"], "user_gain");
}

ExperimentSpec from_yaml(const YAML::Node& root, std::optional<ExperimentKind> expected,
                         const Reader& r) {
  if (!root.IsDefined() || root.IsNull()) {
    if (!expected) r.fail(YAML::Mark::null_mark(), "empty config and no experiment kind given");
    return default_spec(*expected);
  }
  r.require_map(root, "config root");
  r.check_keys(root,
               {"experiment", "seed", "realizations", "workers", "output_dir", "grid", "schemes",
                "system", "solver", "decomposition", "beam_pattern"},
               "");

  std::optional<ExperimentKind> kind = expected;
  if (const auto node = root["experiment"]) {
    const auto name = r.scalar<std::string>(node, "experiment");
    const auto parsed = parse_experiment_kind(name);
    if (!parsed) r.fail(node.Mark(), "unknown experiment kind '" + name + "'");
    if (expected && *expected != *parsed) {
      r.fail(node.Mark(), "config is for experiment '" + std::string(to_string(*parsed)) +
                              "' but '" + std::string(to_string(*expected)) + "' was requested");
    }
    kind = parsed;
  }
  if (!kind) r.fail(root.Mark(), "missing required key 'experiment'");

  ExperimentSpec spec = default_spec(*kind);
  if (const auto n = root["seed"]) spec.seed = r.scalar<std::uint64_t>(n, "seed");
  if (const auto n = root["realizations"]) spec.realizations = r.scalar<int>(n, "realizations");
  if (const auto n = root["workers"]) spec.workers = r.scalar<int>(n, "workers");
  if (const auto n = root["output_dir"]) spec.output_dir = r.scalar<std::string>(n, "output_dir");
  if (const auto n = root["grid"]) spec.grid = r.reals(n, "grid");
  if (const auto n = root["schemes"]) {
    if (!n.IsSequence()) r.fail(n.Mark(), "'schemes' must be a list");
    spec.schemes.clear();
    for (const auto& item : n) {
      const auto name = r.scalar<std::string>(item, "schemes");
      const auto s = parse_scheme(name);
      if (!s) r.fail(item.Mark(), "unknown scheme '" + name + "'");
      spec.schemes.push_back(*s);
    }
  }
  if (const auto n = root["system"]) read_system(r, n, spec);
  if (const auto n = root["solver"]) read_solver(r, n, spec.solver);
  if (const auto n = root["decomposition"]) read_decomposition(r, n, spec.decomposition);
  if (const auto n = root["beam_pattern"]) read_beam(r, n, spec.beam);

  spec.system.rng_seed = spec.seed;
  spec.system.set_snr_db(spec.snr_db);
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(r.source + ": " + e.what());
  }
  return spec;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

std::string_view to_string(Scheme scheme) {
  for (const auto& [s, name] : kSchemeNames)
    if (s == scheme) return name;
  return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  for (const auto& [k, n] : kKindCliNames)
    if (n == name) return k;
  return std::nullopt;
}

std::optional<Scheme> parse_scheme(std::string_view name) {
  for (const auto& [s, n] : kSchemeNames)
    if (n == name) return s;
  return std::nullopt;
}

ExperimentSpec default_spec(ExperimentKind kind) {
  ExperimentSpec spec;
  spec.kind = kind;
  spec.schemes = {Scheme::ProposedKnown, Scheme::ProposedUnknown, Scheme::Mrt, Scheme::Zf,
                  Scheme::Rbf};
  SystemConfig& s = spec.system;
  switch (kind) {
    case ExperimentKind::SweepNonlinearity:
      spec.snr_db = 20.0;
      spec.grid = arange(0.0, 0.30, 0.025);
      break;
    case ExperimentKind::SweepSnr:
      spec.snr_db = 20.0;
      spec.grid = arange(-20.0, 25.0, 5.0);
      break;
    case ExperimentKind::Convergence:
      s.n_tx = 16;
      s.n_rf = 4;
      s.n_paths = 3;
      spec.grid = {0.0, 10.0, 20.0};
      spec.schemes = {Scheme::ProposedKnown};
      break;
    case ExperimentKind::BeamPattern:
      s.n_tx = 16;
      s.n_rf = 4;
      s.n_users = 1;
      s.n_paths = 1;
      s.p_tot_mw = dbm_to_mw(20.0);
      spec.snr_db = 25.0;
      spec.grid = arange(0.0, 180.0, 0.25);
      spec.realizations = 1;
      spec.schemes = {Scheme::ProposedKnown, Scheme::Mrt};
      break;
  }
  s.set_snr_db(spec.snr_db);
  s.rng_seed = spec.seed;
  return spec;
}

void ExperimentSpec::validate() const {
  system.validate();
  solver.validate();
  if (realizations < 1) throw ConfigError("realizations must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (grid.empty()) throw ConfigError("grid must not be empty");
  for (double g : grid)
    if (!std::isfinite(g)) throw ConfigError("grid values must be finite");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("grid must be sorted");
  if (schemes.empty()) throw ConfigError("schemes must not be empty");
  if (decomposition.max_iters < 0) throw ConfigError("decomposition.max_iters must be >= 0");
  if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");
  switch (kind) {
    case ExperimentKind::SweepNonlinearity:
      if (grid.front() < 0.0) throw ConfigError("nonlinearity grid values must be >= 0");
      if (std::abs(system.beta3) == 0.0)
        throw ConfigError("nonlinearity sweep needs a nonzero beta3 to fix its phase");
      break;
    case ExperimentKind::BeamPattern:
      if (system.n_users != 1 || system.n_paths != 1)
        throw ConfigError("beam_pattern requires n_users = 1 and n_paths = 1");
      if (grid.front() < 0.0 || grid.back() > 180.0)
        throw ConfigError("beam_pattern angles must lie in [0, 180] degrees");
      for (Scheme s : schemes) {
        if (s != Scheme::ProposedKnown && s != Scheme::Mrt)
          throw ConfigError("beam_pattern supports only the proposed_known and mrt schemes");
      }
      break;
    case ExperimentKind::Convergence:
      if (schemes.size() != 1 ||
          (schemes[0] != Scheme::ProposedKnown && schemes[0] != Scheme::ProposedUnknown))
        throw ConfigError("convergence takes exactly one scheme, proposed_known or proposed_unknown");
      break;
    case ExperimentKind::SweepSnr:
      break;
  }
}

ExperimentSpec parse_config_string(const std::string& text, std::optional<ExperimentKind> expected,
                                   const std::string& source_name) {
  const Reader r{source_name};
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    r.fail(e.mark, e.msg);
  }
  return from_yaml(root, expected, r);
}

ExperimentSpec parse_config(const std::filesystem::path& path,
                            std::optional<ExperimentKind> expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_string(buf.str(), expected, path.string());
}

std::vector<std::pair<std::string, std::string>> describe(const ExperimentSpec& spec) {
  const SystemConfig& s = spec.system;
  const SolverOptions& o = spec.solver;
  std::vector<std::pair<std::string, std::string>> kv = {
      {"experiment", std::string(to_string(spec.kind))},
      {"seed", std::to_string(spec.seed)},
      {"realizations", std::to_string(spec.realizations)},
      {"grid", fmt_list(spec.grid, fmt_double)},
      {"schemes", fmt_list(spec.schemes, [](Scheme x) { return std::string(to_string(x)); })},
      {"system.n_tx", std::to_string(s.n_tx)},
      {"system.n_rf", std::to_string(s.n_rf)},
      {"system.n_users", std::to_string(s.n_users)},
      {"system.n_paths", std::to_string(s.n_paths)},
      {"system.p_tot_dbm", fmt_double(mw_to_dbm(s.p_tot_mw))},
      {"system.snr_db", fmt_double(spec.snr_db)},
      {"system.weight_comm", fmt_double(s.weight_comm)},
      {"system.weight_sense", fmt_double(s.weight_sense)},
      {"system.beta1", fmt_complex(s.beta1)},
      {"system.beta3", fmt_complex(s.beta3)},
      {"system.target_angle_deg", fmt_double(s.target_angle_deg)},
      {"system.target_gain", fmt_complex(s.target_gain)},
      {"system.penalty1", fmt_double(s.penalty1)},
      {"system.penalty2", fmt_double(s.penalty2)},
      {"solver.max_outer_iters", std::to_string(o.max_outer_iters)},
      {"solver.outer_tol", fmt_double(o.outer_tol)},
      {"solver.max_mo_iters", std::to_string(o.max_mo_iters)},
      {"solver.mo_grad_tol", o.mo_grad_tol ? fmt_double(*o.mo_grad_tol) : "auto"},
      {"solver.armijo_init_step", o.armijo_init_step ? fmt_double(*o.armijo_init_step) : "auto"},
      {"solver.armijo_contraction", fmt_double(o.armijo_contraction)},
      {"solver.armijo_slope", fmt_double(o.armijo_slope)},
      {"solver.armijo_max_backtracks", std::to_string(o.armijo_max_backtracks)},
      {"solver.penalty_growth", fmt_double(o.penalty_growth)},
      {"solver.moment_residual_tol", fmt_double(o.moment_residual_tol)},
      {"solver.max_growth_rounds", std::to_string(o.max_growth_rounds)},
      {"solver.max_budget_rescues", std::to_string(o.max_budget_rescues)},
      {"decomposition.max_iters", std::to_string(spec.decomposition.max_iters)},
      {"decomposition.rel_tol", fmt_double(spec.decomposition.rel_tol)},
  };
  if (spec.kind == ExperimentKind::BeamPattern) {
    kv.emplace_back("beam_pattern.user_angle_deg", fmt_double(spec.beam.user_angle_deg));
    kv.emplace_back("beam_pattern.user_gain", fmt_double(spec.beam.user_gain));
  }
  return kv;
}

}  // namespace isac
