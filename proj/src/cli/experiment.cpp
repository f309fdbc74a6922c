#include <cmath>
#include <cstdio>
#include <fstream>

#include "mvb/cli.hpp"
#include "mvb/error.hpp"

namespace mvb {

using nlohmann::json;

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("wrong type at " + path + "." + key);
  }
}

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError("missing key: " + path + "." + key);
  return j.at(key);
}

}  // namespace

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  ExperimentConfig c;
  c.name = get_or<std::string>(j, "name", c.name, "config");
  c.model = RateModel::from_json(require(j, "model", "config"), "config.model");
  c.dyn = DynamicsSpec::from_json(require(j, "dynamics", "config"), "config.dynamics");
  c.grid = Grid::from_json(require(j, "grid", "config"), "config.grid");
  if (j.contains("calibrate")) {
    const auto& k = j.at("calibrate");
    CalibrationBlock b;
    b.lo = get_or(k, "lo", b.lo, "config.calibrate");
    b.hi = get_or(k, "hi", b.hi, "config.calibrate");
    b.tol = get_or(k, "tol", b.tol, "config.calibrate");
    if (!(b.lo < b.hi)) throw ConfigError("config.calibrate: lo must be below hi");
    c.calibrate = b;
  }
  const json s = j.value("solver", json::object());
  const std::string sp = "config.solver";
  c.solver.dt_pde = get_or(s, "dt_pde", c.solver.dt_pde, sp);
  c.solver.t_end = get_or(s, "t_end", c.solver.t_end, sp);
  c.solver.snapshot_dt = get_or(s, "snapshot_dt", c.solver.snapshot_dt, sp);
  c.solver.moment_order = get_or(s, "moment_order", c.solver.moment_order, sp);
  c.solver.eig_tol = get_or(s, "eig_tol", c.solver.eig_tol, sp);
  c.solver.h_tol = get_or(s, "h_tol", c.solver.h_tol, sp);
  c.solver.stretch_ratio = get_or(s, "stretch_ratio", c.solver.stretch_ratio, sp);
  c.solver.dt_report = get_or(s, "dt_report", c.solver.dt_report, sp);
  if (!(c.solver.dt_pde > 0.0) || !(c.solver.t_end > 0.0) || !(c.solver.snapshot_dt > 0.0))
    throw ConfigError("config.solver: dt_pde, t_end and snapshot_dt must be positive");
  if (c.solver.moment_order < 1 || c.solver.moment_order > 15)
    throw ConfigError("config.solver.moment_order must be in [1, 15]");

  const json m = j.value("mc", json::object());
  const std::string mp = "config.mc";
  c.mc.reps = get_or<std::size_t>(m, "reps", c.mc.reps, mp);
  c.mc.dt = get_or(m, "dt", c.mc.dt, mp);
  c.mc.seed = get_or<std::uint64_t>(m, "seed", c.mc.seed, mp);
  c.mc.x0 = get_or(m, "x0", c.mc.x0, mp);
  c.mc.times = get_or(m, "times", c.mc.times, mp);
  if (m.contains("cutoff_m") && !m.at("cutoff_m").is_null()) c.mc.cutoff_m = get_or(m, "cutoff_m", 0.0, mp);
  c.mc.engine = engine_from_string(get_or<std::string>(m, "engine", "auto", mp));
  c.mc.couple_yule = get_or(m, "couple_yule", c.mc.couple_yule, mp);
  c.mc.history_horizon = get_or(m, "history_horizon", c.mc.history_horizon, mp);
  c.mc.cutoff_grid = get_or(m, "cutoff_grid", c.mc.cutoff_grid, mp);
  if (c.mc.times.empty()) throw ConfigError("config.mc.times must not be empty");

  const json v = j.value("verify", json::object());
  c.verify.alpha = get_or(v, "alpha", c.verify.alpha, "config.verify");
  c.verify.null_reps = get_or(v, "null_reps", c.verify.null_reps, "config.verify");
  c.verify.run_mc = get_or(v, "run_mc", c.verify.run_mc, "config.verify");
  c.out_dir = j.value("output", json::object()).value("dir", std::string{});
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  json j;
  j["name"] = name;
  j["model"] = model.to_json();
  j["dynamics"] = dyn.to_json();
  j["grid"] = grid.to_json();
  if (calibrate) j["calibrate"] = {{"lo", calibrate->lo}, {"hi", calibrate->hi}, {"tol", calibrate->tol}};
  j["solver"] = {{"dt_pde", solver.dt_pde},           {"t_end", solver.t_end},
                 {"snapshot_dt", solver.snapshot_dt}, {"moment_order", solver.moment_order},
                 {"eig_tol", solver.eig_tol},         {"h_tol", solver.h_tol},
                 {"stretch_ratio", solver.stretch_ratio}, {"dt_report", solver.dt_report}};
  j["mc"] = {{"reps", mc.reps},
             {"dt", mc.dt},
             {"seed", mc.seed},
             {"x0", mc.x0},
             {"times", mc.times},
             {"cutoff_m", mc.cutoff_m ? json(*mc.cutoff_m) : json(nullptr)},
             {"engine", to_string(mc.engine)},
             {"couple_yule", mc.couple_yule},
             {"history_horizon", mc.history_horizon},
             {"cutoff_grid", mc.cutoff_grid}};
  j["verify"] = {{"alpha", verify.alpha}, {"null_reps", verify.null_reps}, {"run_mc", verify.run_mc}};
  if (!out_dir.empty()) j["output"] = {{"dir", out_dir}};
  return j;
}

std::string ExperimentConfig::hash() const {
  // output location does not change results
  json j = to_json();
  j.erase("output");
  return fnv1a_hex(j.dump());
}

}  // namespace mvb
