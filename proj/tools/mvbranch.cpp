#include <chrono>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <omp.h>

#include "mvb/cli.hpp"
#include "mvb/error.hpp"

namespace {

const char* kCsvHelp = R"(Output files (CSV columns; every CSV starts with a '# config_hash=... seed=... tool_version=...' line):
  eigenfunctions.csv  x, theta0, mu0_density, V, b, d
  moments.csv         t, x, n, u_n
  survival.csv        t, x, u0
  h.csv               x, h_q, h_u0
  mc_survival.csv     t, p_survive, se
  mc_moments.csv      t, n, estimate, se, yule_ceiling, within_ceiling
  replicas.csv        replica, t, N, theta0_sum, max_abs
  cutoff.csv          m, t, p_exit, se
  r_t.csv             t, one_plus_t_r, psi_sup
  yaglom_cdf.csv      y, empirical, exp1
JSON outputs carry a "meta" block; wall-clock times are kept in run_info.json only.
Exit codes: 0 ok, 1 hard error (config, regime mismatch, numerics), 2 failed check.
Environment: MVB_OUT_ROOT sets the default output root.)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mvbranch: branching Markov processes, Feynman-Kac spectra, moments and Monte Carlo checks"};
  app.footer(kCsvHelp);
  app.require_subcommand(1);

  std::string config_path, out_dir, regime = "auto", artifacts;
  std::optional<std::uint64_t> seed;
  int threads = 0;

  const std::vector<std::pair<std::string, std::string>> cmds{
      {"validate", "check the model hypotheses (exit 2 on failure)"},
      {"spectrum", "principal eigentriple, gap, A, B and eigenfunction CSV"},
      {"moments", "moment fields u_n and regime limits"},
      {"survive", "survival field u0, h (supercritical) and asymptotics"},
      {"simulate", "Monte Carlo ensemble and estimators"},
      {"verify", "regime-appropriate test battery"},
      {"report", "markdown/JSON summary of an artifact directory"}};
  for (const auto& [name, desc] : cmds) {
    auto* sc = app.add_subcommand(name, desc);
    sc->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sc->add_option("--out", out_dir, "output directory");
    sc->add_option("--seed", seed, "override mc.seed");
    sc->add_option("--threads", threads, "OpenMP threads (0: runtime default)");
    sc->add_option("--regime", regime, "expected regime")->check(CLI::IsMember({"auto", "critical", "sub", "super"}));
    if (name == "report") sc->add_option("--artifacts", artifacts, "artifact directory (default: the output directory)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // usage errors are hard errors
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  mvb::RunContext ctx;
  ctx.command = cmd;
  int code = 1;
  const auto start = std::chrono::steady_clock::now();
  try {
    ctx.cfg = mvb::ExperimentConfig::load(config_path);
    if (seed) ctx.cfg.mc.seed = *seed;
    if (regime != "auto") ctx.regime = mvb::regime_from_string(regime);
    ctx.threads = threads;
    if (threads > 0) omp_set_num_threads(threads);
    if (!out_dir.empty()) {
      ctx.out = out_dir;
    } else {
      const char* root = std::getenv("MVB_OUT_ROOT");
      std::filesystem::path base = root ? root : "out";
      ctx.out = base / (ctx.cfg.out_dir.empty() ? ctx.cfg.name : ctx.cfg.out_dir);
    }
    if (cmd == "validate") code = mvb::cmd_validate(ctx);
    else if (cmd == "spectrum") code = mvb::cmd_spectrum(ctx);
    else if (cmd == "moments") code = mvb::cmd_moments(ctx);
    else if (cmd == "survive") code = mvb::cmd_survive(ctx);
    else if (cmd == "simulate") code = mvb::cmd_simulate(ctx);
    else if (cmd == "verify") code = mvb::cmd_verify(ctx);
    else code = mvb::cmd_report(ctx, artifacts.empty() ? ctx.out : std::filesystem::path(artifacts));
  } catch (const mvb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const mvb::RegimeError& e) {
    std::cerr << "regime error: " << e.what() << "\n";
    code = 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = 1;
  }
  if (!ctx.out.empty()) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
      mvb::write_run_info(ctx, wall, code);
    } catch (const std::exception& e) {
      std::cerr << "warning: " << e.what() << "\n";
    }
  }
  return code;
}
