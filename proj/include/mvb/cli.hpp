#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvb/analysis.hpp"
#include "mvb/branching.hpp"
#include "mvb/moments.hpp"

namespace mvb {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

struct CalibrationBlock {
  double lo = -1.0;
  double hi = 1.0;
  double tol = 1e-9;
};

struct SolverBlock {
  double dt_pde = 1e-3;
  double t_end = 10.0;
  double snapshot_dt = 0.1;
  int moment_order = 4;
  double eig_tol = 1e-10;
  double h_tol = 1e-6;
  double stretch_ratio = 100.0;
  double dt_report = 0.0;
};

struct McBlock {
  std::size_t reps = 10000;
  double dt = 0.01;
  std::uint64_t seed = 1;
  double x0 = 0.0;
  std::vector<double> times{1.0};
  std::optional<double> cutoff_m;
  Engine engine = Engine::kAuto;
  bool couple_yule = false;
  double history_horizon = 0.0;  // Q-process conditioning time s (0: off)
  std::vector<double> cutoff_grid;
};

struct VerifyBlock {
  double alpha = 0.01;
  int null_reps = 2000;
  bool run_mc = true;
};

struct ExperimentConfig {
  std::string name = "experiment";
  RateModel model;
  DynamicsSpec dyn;
  Grid grid;
  std::optional<CalibrationBlock> calibrate;
  SolverBlock solver;
  McBlock mc;
  VerifyBlock verify;
  std::string out_dir;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  // FNV-1a over the canonical (sorted-key) JSON dump, hex
  std::string hash() const;
};

std::string fnv1a_hex(const std::string& s);

struct RunContext {
  ExperimentConfig cfg;
  std::filesystem::path out;
  int threads = 0;
  std::optional<Regime> regime;  // requested; nullopt = auto
  std::string command;
};

// ---- io: every artifact carries config hash, seed, tool version; wall-clock goes to run_info.json only

nlohmann::json artifact_meta(const RunContext& ctx);
void write_json(const std::filesystem::path& path, const nlohmann::json& body, const RunContext& ctx);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows, const RunContext& ctx);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_run_info(const RunContext& ctx, double wall_seconds, int exit_code);
std::string format_number(double v);

// ---- shared pipeline pieces

struct Prepared {
  RateModel model;  // after calibration
  std::optional<CalibrationResult> calibration;
  GeneratorMatrix gen;
  SpectralData spec;
  Regime regime = Regime::kCritical;
};

Prepared prepare(const RunContext& ctx);
SimulationSpec simulation_spec(const RunContext& ctx, const Prepared& p);

// exit codes: 0 ok, 1 hard error, 2 failed check
int cmd_validate(const RunContext& ctx);
int cmd_spectrum(const RunContext& ctx);
int cmd_moments(const RunContext& ctx);
int cmd_survive(const RunContext& ctx);
int cmd_simulate(const RunContext& ctx);
int cmd_verify(const RunContext& ctx);
int cmd_report(const RunContext& ctx, const std::filesystem::path& artifacts);

}  // namespace mvb
