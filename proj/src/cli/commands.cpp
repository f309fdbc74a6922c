#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mvb/cli.hpp"
#include "mvb/error.hpp"

namespace mvb {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double at_x(const Grid& g, const Vec& v, double x) { return g.interpolate(to_std(v), x, 0.0); }

// at most `cap` evenly spread snapshot indices, always including the last
std::vector<std::size_t> thin_indices(std::size_t n, std::size_t cap) {
  std::vector<std::size_t> idx;
  if (n == 0) return idx;
  const std::size_t stride = std::max<std::size_t>(1, (n + cap - 1) / cap);
  for (std::size_t k = 0; k < n; k += stride) idx.push_back(k);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

bool theta0_flat(const SpectralData& s) { return s.theta0.maxCoeff() - s.theta0.minCoeff() <= 1e-9; }

Functional theta0_functional(const Prepared& p) {
  // a flat eigenfunction is the constant 1 everywhere (keeps the lumped engine available)
  if (theta0_flat(p.spec)) return Functional::of_curve("theta0", Curve::constant(1.0));
  return Functional::of_grid("theta0", p.spec.grid, p.spec.theta0);
}

TestReport hard_check(std::string name, std::string stat, double value, double threshold, std::string detail = {}) {
  TestReport r;
  r.name = std::move(name);
  r.statistic = std::move(stat);
  r.value = value;
  r.threshold = threshold;
  r.status = value <= threshold ? TestStatus::kPass : TestStatus::kFail;
  r.detail = std::move(detail);
  return r;
}

// Jensen u2 >= u1^2 and Cauchy-Schwarz u2^2 <= u1 u3, relative violation
double moment_inequality_violation(const MomentField& mf) {
  double worst = 0.0;
  for (std::size_t k = 0; k < mf.times.size(); ++k) {
    const Vec u1 = mf.raw(1, k);
    if (mf.N >= 2) {
      const Vec u2 = mf.raw(2, k);
      for (int i = 0; i < u1.size(); ++i) {
        const double sc = std::max({1e-300, std::abs(u2[i]), u1[i] * u1[i]});
        worst = std::max(worst, (u1[i] * u1[i] - u2[i]) / sc);
        if (mf.N >= 3) {
          const double u3 = mf.raw(3, k)[i];
          const double sc2 = std::max({1e-300, u2[i] * u2[i], std::abs(u1[i] * u3)});
          worst = std::max(worst, (u2[i] * u2[i] - u1[i] * u3) / sc2);
        }
      }
    }
  }
  return worst;
}

double speed_measure_error(const Prepared& p, const DynamicsSpec& dyn) {
  const auto er = ell_and_rho(dyn, p.spec.grid);
  const Vec rho = to_vec(er.rho);
  const Vec pred = p.spec.theta0.cwiseProduct(rho);
  const double c = p.spec.mu0.sum() / pred.sum();
  return (p.spec.mu0 - c * pred).lpNorm<Eigen::Infinity>() / p.spec.mu0.lpNorm<Eigen::Infinity>();
}

struct Battery {
  json tests = json::array();
  bool hard_ok = true;
  int soft_fail = 0;
  int inconclusive = 0;

  void add(const TestReport& r, bool hard) {
    json j = r.to_json();
    j["hard"] = hard;
    tests.push_back(j);
    if (hard && r.status != TestStatus::kPass) hard_ok = false;
    if (!hard && r.status == TestStatus::kFail) ++soft_fail;
    if (r.status == TestStatus::kInconclusive) ++inconclusive;
  }
  void add_calibration(const std::string& name, const NullCalibration& c) {
    TestReport r;
    r.name = "null_calibration:" + name;
    r.statistic = "pass_rate";
    r.value = c.rate;
    r.threshold = c.required;
    r.sample_size = static_cast<std::size_t>(c.reps);
    r.status = c.pass ? TestStatus::kPass : TestStatus::kFail;
    add(r, false);
  }
};

// the critical asymptotic check needs t >= 50/B
double survival_horizon(double t, const Prepared& p) {
  if (p.regime == Regime::kCritical && p.spec.B > 0.0) t = std::max(t, std::ceil(60.0 / p.spec.B));
  return t;
}

std::vector<double> survival_at_x0(const SurvivalField& sv, const std::vector<double>& times, double x0) {
  std::vector<double> out;
  for (double t : times) {
    std::size_t best = 0;
    for (std::size_t k = 0; k < sv.times.size(); ++k)
      if (std::abs(sv.times[k] - t) < std::abs(sv.times[best] - t)) best = k;
    if (std::abs(sv.times[best] - t) > 1e-9 * std::max(1.0, t))
      throw NumericalError("survival snapshot missing at t = " + std::to_string(t));
    out.push_back(at_x(sv.grid, sv.u[best], x0));
  }
  return out;
}

}  // namespace

Prepared prepare(const RunContext& ctx) {
  const auto& c = ctx.cfg;
  Prepared p;
  p.model = c.model;
  if (c.calibrate) {
    auto family = [&](double theta) { return c.model.with_death_shift(theta); };
    p.calibration = calibrate_criticality(family, c.dyn, c.grid, c.calibrate->lo, c.calibrate->hi, c.calibrate->tol);
    p.model = family(p.calibration->theta);
  }
  GeneratorOptions go;
  go.dt_report = c.solver.dt_report;
  p.gen = build_generator(p.model, c.dyn, c.grid, go);
  SpectralOptions so;
  so.tol = c.solver.eig_tol;
  p.spec = principal_eigentriple(p.gen, so);
  p.regime = classify(p.spec);
  if (ctx.regime && *ctx.regime != p.regime)
    throw RegimeError("requested regime " + to_string(*ctx.regime) + " but lambda0 = " +
                      std::to_string(p.spec.lambda0) + " classifies as " + to_string(p.regime) +
                      " (|lambda0| <= eps_crit = " + std::to_string(p.spec.eps_crit()) + " is critical)");
  return p;
}

SimulationSpec simulation_spec(const RunContext& ctx, const Prepared& p) {
  const auto& mc = ctx.cfg.mc;
  SimulationSpec s;
  s.x0 = mc.x0;
  s.dt = mc.dt;
  s.record_times = mc.times;
  if (mc.cutoff_m) s.cutoff.m = *mc.cutoff_m;
  s.engine = mc.engine;
  s.functionals = {Functional::one(), theta0_functional(p)};
  s.couple_yule = mc.couple_yule;
  if (mc.history_horizon > 0.0) {
    s.history_horizon = mc.history_horizon;
    PathFunctional phi;
    phi.kind = PathFunctional::Kind::kEndpointIndicator;
    phi.lo = mc.x0 - 1.0;
    phi.hi = mc.x0 + 1.0;
    s.path_functionals = {phi};
    // the Q-process weight needs theta0 at s
    if (std::find(s.record_times.begin(), s.record_times.end(), mc.history_horizon) == s.record_times.end()) {
      s.record_times.push_back(mc.history_horizon);
      std::sort(s.record_times.begin(), s.record_times.end());
    }
  }
  return s;
}

int cmd_validate(const RunContext& ctx) {
  const auto rep = validate_hypotheses(ctx.cfg.model, ctx.cfg.dyn, ctx.cfg.grid, ctx.cfg.solver.dt_report);
  json j = rep.to_json();
  j["all_pass"] = rep.all_pass();
  write_json(ctx.out / "validation.json", j, ctx);
  return rep.all_pass() ? 0 : 2;
}

int cmd_spectrum(const RunContext& ctx) {
  const auto p = prepare(ctx);
  json j = p.spec.to_json();
  j["regime"] = to_string(p.regime);
  j["eps_crit"] = p.spec.eps_crit();
  j["model"] = p.model.to_json();
  if (p.calibration)
    j["calibration"] = {{"theta", p.calibration->theta}, {"lambda0", p.calibration->lambda0},
                        {"steps", p.calibration->history.size()}};
  if (ctx.cfg.dyn.variant == Variant::kDiffusion) {
    j["speed_measure_rel_error"] = speed_measure_error(p, ctx.cfg.dyn);
    j["girsanov"] = girsanov_crosscheck(p.model, ctx.cfg.dyn, ctx.cfg.grid).to_json();
  }
  write_json(ctx.out / "spectrum.json", j, ctx);
  std::vector<std::vector<double>> rows;
  const double dx = p.spec.grid.dx();
  for (int i = 0; i < p.spec.grid.size(); ++i)
    rows.push_back({p.spec.grid.x(i), p.spec.theta0[i], p.spec.mu0[i] / dx, p.gen.potential[i], p.gen.b[i], p.gen.d[i]});
  write_csv(ctx.out / "eigenfunctions.csv", {"x", "theta0", "mu0_density", "V", "b", "d"}, rows, ctx);
  return 0;
}

int cmd_moments(const RunContext& ctx) {
  const auto p = prepare(ctx);
  const auto& sol = ctx.cfg.solver;
  const int N = sol.moment_order;
  const Vec f = Vec::Ones(p.gen.size());
  MomentOptions mo;
  mo.dt = sol.dt_pde;
  mo.snapshot_dt = sol.snapshot_dt;
  mo.parallel = true;
  const auto mf = solve_moments(f, N, sol.t_end, p.gen, p.model.b_star, mo);
  std::vector<std::vector<double>> rows;
  for (auto k : thin_indices(mf.times.size(), 50))
    for (int n = 1; n <= N; ++n) {
      const Vec u = mf.raw(n, k);
      for (int i = 0; i < u.size(); ++i) rows.push_back({mf.times[k], p.spec.grid.x(i), double(n), u[i]});
    }
  write_csv(ctx.out / "moments.csv", {"t", "x", "n", "u_n"}, rows, ctx);

  json j;
  j["regime"] = to_string(p.regime);
  std::vector<int> idx;
  for (auto k : thin_indices(mf.times.size(), 5))
    if (k > 0) idx.push_back(static_cast<int>(k));
  json duh = json::array();
  for (const auto& d : duhamel_residuals(mf, f, p.gen, idx))
    duh.push_back({{"n", d.n}, {"t", d.t}, {"rel_residual", d.rel_residual}});
  j["duhamel"] = duh;
  j["moment_inequality_violation"] = moment_inequality_violation(mf);
  switch (p.regime) {
    case Regime::kCritical: {
      const auto lim = critical_limits(p.spec, N);
      json v = json::array();
      for (int n = 1; n <= N; ++n) v.push_back(at_x(p.spec.grid, lim[n], ctx.cfg.mc.x0));
      j["limits"] = {{"kind", "critical"}, {"x0", ctx.cfg.mc.x0}, {"V_at_x0", v}};
      break;
    }
    case Regime::kSubcritical:
      j["limits"] = subcritical_limits(p.spec, p.gen, f, N).to_json();
      break;
    case Regime::kSupercritical: {
      const auto vf = supercritical_limits(p.spec, p.gen, f, N);
      const auto vt = supercritical_limits(p.spec, p.gen, p.spec.theta0, N);
      json fe = json::array();
      for (int n = 1; n <= N; ++n) fe.push_back(factorization_error(vf, vt, p.spec.integrate(f), n));
      j["limits"] = vf.to_json();
      j["factorization_error"] = fe;
      break;
    }
  }
  write_json(ctx.out / "moments_report.json", j, ctx);
  return 0;
}

int cmd_survive(const RunContext& ctx) {
  const auto p = prepare(ctx);
  const auto& sol = ctx.cfg.solver;
  SurvivalOptions so;
  so.dt = sol.dt_pde;
  so.snapshot_dt = sol.snapshot_dt;
  const auto sv = solve_survival(survival_horizon(sol.t_end, p), p.gen, so);
  std::vector<std::vector<double>> rows;
  for (auto k : thin_indices(sv.times.size(), 50))
    for (int i = 0; i < sv.u[k].size(); ++i) rows.push_back({sv.times[k], p.spec.grid.x(i), sv.u[k][i]});
  write_csv(ctx.out / "survival.csv", {"t", "x", "u0"}, rows, ctx);
  json j;
  j["regime"] = to_string(p.regime);
  switch (p.regime) {
    case Regime::kCritical: {
      j["survival_check"] = critical_survival_check(sv, p.spec).to_json();
      const auto dec = decompose(sv, p.spec);
      j["ode_residual"] = critical_ode_residual(dec, p.spec, p.gen).to_json();
      break;
    }
    case Regime::kSubcritical: {
      json series = json::array();
      const double th = at_x(p.spec.grid, p.spec.theta0, ctx.cfg.mc.x0);
      for (auto k : thin_indices(sv.times.size(), 50))
        series.push_back({{"t", sv.times[k]},
                          {"K_estimate", std::exp(p.spec.lambda0 * sv.times[k]) * at_x(sv.grid, sv.u[k], ctx.cfg.mc.x0) / th}});
      j["K_series"] = series;
      break;
    }
    case Regime::kSupercritical: {
      HOptions ho;
      ho.tol = sol.h_tol;
      const auto h = solve_h(p.gen, ho);
      std::vector<std::vector<double>> hr;
      for (int i = 0; i < h.h_q.size(); ++i) hr.push_back({p.spec.grid.x(i), h.h_q[i], h.h_u0[i]});
      write_csv(ctx.out / "h.csv", {"x", "h_q", "h_u0"}, hr, ctx);
      j["h"] = {{"q_residual", h.q_residual}, {"q_horizon", h.q_horizon}, {"u0_time", h.u0_time},
                {"disagreement", h.disagreement}, {"agree", h.agree}, {"newton_iterations", h.newton_iterations},
                {"h_at_x0", at_x(p.spec.grid, h.h_q, ctx.cfg.mc.x0)}};
      break;
    }
  }
  write_json(ctx.out / "survival_report.json", j, ctx);
  return 0;
}

int cmd_simulate(const RunContext& ctx) {
  const auto p = prepare(ctx);
  const auto spec = simulation_spec(ctx, p);
  const auto& mc = ctx.cfg.mc;
  const auto recs = run_ensemble(p.model, ctx.cfg.dyn, spec, mc.reps, mc.seed, ctx.threads);
  std::vector<std::vector<double>> rows;
  for (const auto& r : mc_survival(recs, spec)) rows.push_back({r.t, r.est.value, r.est.se});
  write_csv(ctx.out / "mc_survival.csv", {"t", "p_survive", "se"}, rows, ctx);
  rows.clear();
  for (const auto& r : mc_moments(recs, spec, -1, 3, p.model.b_star, 1.0))
    rows.push_back({r.t, double(r.n), r.est.value, r.est.se, r.ceiling, r.within_ceiling ? 1.0 : 0.0});
  write_csv(ctx.out / "mc_moments.csv", {"t", "n", "estimate", "se", "yule_ceiling", "within_ceiling"}, rows, ctx);
  rows.clear();
  for (std::size_t r = 0; r < recs.size(); ++r)
    for (std::size_t k = 0; k < spec.record_times.size(); ++k)
      rows.push_back({double(r), spec.record_times[k], double(recs[r].N[k]), recs[r].F[1][k], recs[r].max_abs[k]});
  write_csv(ctx.out / "replicas.csv", {"replica", "t", "N", "theta0_sum", "max_abs"}, rows, ctx);
  json j;
  j["engine"] = to_string(resolve_engine(p.model, ctx.cfg.dyn, spec));
  j["reps"] = mc.reps;
  j["regime"] = to_string(p.regime);
  if (!mc.cutoff_grid.empty() && resolve_engine(p.model, ctx.cfg.dyn, spec) == Engine::kParticle) {
    rows.clear();
    for (const auto& c : cutoff_diagnostics(recs, spec, mc.cutoff_grid)) rows.push_back({c.m, c.t, c.p_exit.value, c.p_exit.se});
    write_csv(ctx.out / "cutoff.csv", {"m", "t", "p_exit", "se"}, rows, ctx);
  }
  if (spec.record_times.size() >= 2) {
    const double T = spec.record_times.back() / 2.0;
    const auto sp = stabilization_spread(recs, spec, p.spec.lambda0, T);
    j["stabilization_spread"] = {{"T", T}, {"mean", sp.value}, {"se", sp.se}, {"survivors", sp.count}};
  }
  write_json(ctx.out / "simulate_summary.json", j, ctx);
  return 0;
}

int cmd_verify(const RunContext& ctx) {
  const auto p = prepare(ctx);
  const auto& cfg = ctx.cfg;
  const auto& sol = cfg.solver;
  const double alpha = cfg.verify.alpha;
  const double x0 = cfg.mc.x0;
  Battery bat;

  // deterministic checks
  const Vec one = Vec::Ones(p.gen.size());
  {
    MomentOptions mo;
    mo.dt = sol.dt_pde;
    mo.snapshot_dt = std::min(sol.snapshot_dt, 0.02);  // the residual is a Simpson rule in s
    mo.parallel = true;
    const int N = std::min(4, sol.moment_order);
    const double T = std::min(sol.t_end, 2.0);
    const auto mf = solve_moments(one, N, T, p.gen, p.model.b_star, mo);
    std::vector<int> idx;
    for (auto k : thin_indices(mf.times.size(), 4))
      if (k > 0) idx.push_back(static_cast<int>(k));
    double worst = 0.0;
    for (const auto& d : duhamel_residuals(mf, one, p.gen, idx)) worst = std::max(worst, d.rel_residual);
    bat.add(hard_check("duhamel_residual", "max_rel", worst, 1e-4), true);
    bat.add(hard_check("jensen_cauchy_schwarz", "max_rel_violation", moment_inequality_violation(mf), 1e-9), true);
  }
  if (cfg.dyn.variant == Variant::kDiffusion)
    bat.add(hard_check("speed_measure_identity", "rel_error", speed_measure_error(p, cfg.dyn), 1e-6), true);

  SurvivalOptions so;
  so.dt = sol.dt_pde;
  so.snapshot_dt = sol.snapshot_dt;
  std::vector<double> snaps = cfg.mc.times;
  const double t_pde = survival_horizon(std::max(sol.t_end, cfg.mc.times.back()), p);
  for (double t = sol.snapshot_dt; t <= t_pde + 1e-9; t += sol.snapshot_dt) snaps.push_back(t);
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
              snaps.end());
  so.snapshot_times = snaps;
  const auto sv = solve_survival(t_pde, p.gen, so);

  std::optional<HResult> h;
  std::optional<SupercriticalLimits> vt;
  std::optional<SubcriticalLimits> sub;
  switch (p.regime) {
    case Regime::kCritical: {
      const auto dec = decompose(sv, p.spec);
      bat.add(hard_check("psi_orthogonality", "max_abs", dec.max_orthogonality, 1e-10), true);
      bat.add(critical_survival_check(sv, p.spec), false);
      bat.add(critical_ode_residual(dec, p.spec, p.gen), false);
      std::vector<std::vector<double>> rows;
      for (std::size_t k = 0; k < dec.times.size(); ++k)
        rows.push_back({dec.times[k], (1.0 + dec.times[k]) * dec.r[k], dec.psi[k].lpNorm<Eigen::Infinity>()});
      write_csv(ctx.out / "r_t.csv", {"t", "one_plus_t_r", "psi_sup"}, rows, ctx);
      break;
    }
    case Regime::kSubcritical: {
      sub = subcritical_limits(p.spec, p.gen, one, std::max(8, sol.moment_order));
      const double cs = sub->V[1] * sub->V[1] / sub->V[2];
      bat.add(hard_check("K_cauchy_schwarz", "V1^2/V2 - K", cs - sub->K, 0.0), true);
      double over = 0.0;
      for (std::size_t n = 1; n < sub->V.size(); ++n) over = std::max(over, sub->V[n] / sub->hamburger[n] - 1.0);
      bat.add(hard_check("hamburger_bound", "max V_n/bound - 1", over, 0.0), true);
      break;
    }
    case Regime::kSupercritical: {
      HOptions ho;
      ho.tol = sol.h_tol;
      h = solve_h(p.gen, ho);
      bat.add(hard_check("h_routes_agree", "disagreement", h->disagreement, sol.h_tol), true);
      vt = supercritical_limits(p.spec, p.gen, p.spec.theta0, 3);
      bat.add(hard_check("supercritical_routes", "rel_diff", vt->route_rel_diff, 1e-3), true);
      break;
    }
  }

  if (cfg.verify.run_mc) {
    const auto spec = simulation_spec(ctx, p);
    const auto recs = run_ensemble(p.model, cfg.dyn, spec, cfg.mc.reps, cfg.mc.seed, ctx.threads);
    // survival vs PDE at the configured times
    {
      const auto pde = survival_at_x0(sv, cfg.mc.times, x0);
      const auto mcs = mc_survival(recs, spec);
      std::vector<MomentTarget> mt;
      for (std::size_t k = 0, j = 0; k < spec.record_times.size(); ++k) {
        if (j < cfg.mc.times.size() && std::abs(spec.record_times[k] - cfg.mc.times[j]) < 1e-12) {
          mt.push_back({static_cast<int>(j), mcs[k].est, pde[j]});
          ++j;
        }
      }
      auto r = moment_z_test("mc_survival_vs_pde", mt, 3.0);
      bat.add(r, false);
    }
    const std::size_t last = spec.record_times.size() - 1;
    switch (p.regime) {
      case Regime::kCritical: {
        const auto cs = conditional_sample(recs, spec, last, 1);
        const auto yt = yaglom_test_critical(cs, p.spec, alpha);
        bat.add(yt, false);
        std::vector<ConditionalSample> lln;
        for (std::size_t k = 0; k < spec.record_times.size(); ++k) {
          auto c = conditional_sample(recs, spec, k, 1);
          if (c.N.size() >= 500 && spec.record_times[k] > 0.0) lln.push_back(std::move(c));
        }
        if (!lln.empty()) bat.add(lln_ratio_test(lln, nu_of(p.spec, p.spec.theta0)), false);
        bat.add(upsilon_test(conditional_sample(recs, spec, last, 0), p.spec, 1.0, alpha), false);
        if (cs.N.size() >= 20) {
          std::vector<double> y(cs.N.size());
          for (std::size_t i = 0; i < y.size(); ++i) y[i] = cs.N[i] / ((cs.t + 1.0) * p.spec.A * p.spec.B);
          std::sort(y.begin(), y.end());
          std::vector<std::vector<double>> rows;
          for (std::size_t i = 0; i < y.size(); i += std::max<std::size_t>(1, y.size() / 200))
            rows.push_back({y[i], (i + 1.0) / y.size(), exp_cdf(y[i])});
          write_csv(ctx.out / "yaglom_cdf.csv", {"y", "empirical", "exp1"}, rows, ctx);
        }
        if (spec.history_horizon > 0.0) {
          QProcessInputs q;
          q.s = spec.history_horizon;
          std::size_t ks = 0;
          while (std::abs(spec.record_times[ks] - q.s) > 1e-12) ++ks;
          const double th_x0 = at_x(p.spec.grid, p.spec.theta0, x0);
          for (const auto& r : recs) {
            q.F.push_back(r.path_values[0]);
            q.weight.push_back(
                qprocess_weight_from_sums(r.F[1][ks], q.s, theta0_flat(p.spec) ? 1.0 : th_x0, p.spec.lambda0, WeightKind::kEigen));
          }
          for (std::size_t k = 0; k < spec.record_times.size(); ++k) {
            if (spec.record_times[k] <= q.s) continue;
            q.T.push_back(spec.record_times[k]);
            std::vector<bool> sv_k;
            for (const auto& r : recs) sv_k.push_back(r.N[k] > 0);
            q.survive.push_back(std::move(sv_k));
          }
          if (!q.T.empty()) bat.add(qprocess_law_test(q), false);
        }
        break;
      }
      case Regime::kSubcritical: {
        std::vector<ConditionalSample> starts{conditional_sample(recs, spec, last, 0)};
        RunContext shifted = ctx;
        shifted.cfg.mc.x0 = x0 + 0.5;
        const auto spec2 = simulation_spec(shifted, p);
        const auto recs2 = run_ensemble(p.model, cfg.dyn, spec2, cfg.mc.reps, cfg.mc.seed + 1, ctx.threads);
        starts.push_back(conditional_sample(recs2, spec2, last, 0));
        bat.add(subcritical_yaglom_test(starts, sub->V, sub->K, p.spec.lambda0), false);
        break;
      }
      case Regime::kSupercritical: {
        std::vector<std::vector<double>> W;
        for (std::size_t k = 0; k < spec.record_times.size(); ++k) {
          std::vector<double> w;
          for (const auto& r : recs) w.push_back(std::exp(p.spec.lambda0 * spec.record_times[k]) * r.F[1][k]);
          W.push_back(std::move(w));
        }
        std::vector<double> V{0.0};
        for (int n = 1; n <= 3; ++n) V.push_back(at_x(p.spec.grid, vt->V[n], x0));
        const double th = theta0_flat(p.spec) ? 1.0 : at_x(p.spec.grid, p.spec.theta0, x0);
        bat.add(w_infty_diagnostics(W, spec.record_times, th, at_x(p.spec.grid, h->h_q, x0), V, p.spec.lambda0), false);
        break;
      }
    }
  }

  // every statistical rule on synthetic data from its own null
  const int nr = cfg.verify.null_reps;
  const std::uint64_t nseed = cfg.mc.seed ^ 0x6e756c6cULL;
  bat.add_calibration("yaglom", null_calibration([&](Stream& g) {
    return yaglom_decision(sample_exponential(2000, g), INFINITY, alpha).passed(); }, nr, nseed, alpha));
  bat.add_calibration("upsilon", null_calibration([&](Stream& g) {
    auto xi = sample_exponential(2000, g);
    for (auto& v : xi) v = upsilon_transform(v);
    return upsilon_decision(xi, INFINITY, alpha).passed(); }, nr, nseed + 1, alpha));
  bat.add_calibration("binomial_3se", null_calibration([&](Stream& g) {
    std::vector<double> b(5000);
    for (auto& v : b) v = g.uniform() < 0.1 ? 1.0 : 0.0;
    return moment_z_test("b", {{1, mean_estimate(b), 0.1}}, 3.0).passed(); }, nr, nseed + 2, alpha));
  bat.add_calibration("moments_4se", null_calibration([&](Stream& g) {
    auto xi = sample_exponential(2000, g);
    std::vector<MomentTarget> mt;
    for (int n = 1; n <= 4; ++n) mt.push_back({n, raw_moment(xi, n), std::tgamma(n + 1.0)});
    return moment_z_test("m", mt, 4.0).passed(); }, nr, nseed + 3, alpha));

  json j;
  j["regime"] = to_string(p.regime);
  j["lambda0"] = p.spec.lambda0;
  j["hard_pass"] = bat.hard_ok;
  j["soft_failures"] = bat.soft_fail;
  j["inconclusive"] = bat.inconclusive;
  j["tests"] = bat.tests;
  write_json(ctx.out / "verification.json", j, ctx);
  std::ostringstream txt;
  txt << "regime " << to_string(p.regime) << "  lambda0 " << format_number(p.spec.lambda0) << "\n";
  for (const auto& t : bat.tests)
    txt << (t["hard"].get<bool>() ? "[hard] " : "[soft] ") << t["status"].get<std::string>() << "  "
        << t["name"].get<std::string>() << "  " << t["statistic"].get<std::string>() << " = "
        << format_number(t["value"].get<double>()) << " (threshold " << format_number(t["threshold"].get<double>())
        << ")\n";
  txt << (bat.hard_ok ? "hard assertions: all pass\n" : "hard assertions: FAILED\n");
  write_text(ctx.out / "summary.txt", txt.str());
  return bat.hard_ok ? 0 : 2;
}

int cmd_report(const RunContext& ctx, const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("artifact directory " + dir.string() + " does not exist");
  json report;
  report["artifacts"] = json::array();
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  json verification, spectrum;
  for (const auto& f : files) {
    const auto name = f.filename().string();
    if (name == "report.json" || name == "report.md" || name == "run_info.json") continue;
    report["artifacts"].push_back(name);
    if (name == "verification.json") verification = json::parse(std::ifstream(f));
    if (name == "spectrum.json") spectrum = json::parse(std::ifstream(f));
  }
  if (verification.is_null() && spectrum.is_null())
    throw Error("no upstream artifacts in " + dir.string() + " (run spectrum or verify first)");
  std::ostringstream md;
  md << "# " << ctx.cfg.name << "\n\nconfig hash `" << ctx.cfg.hash() << "`, seed " << ctx.cfg.mc.seed << "\n\n";
  if (!spectrum.is_null()) {
    report["spectrum"] = {{"lambda0", spectrum["lambda0"]}, {"lambda1", spectrum["lambda1"]}, {"A", spectrum["A"]},
                          {"B", spectrum["B"]}, {"regime", spectrum["regime"]}};
    md << "## Spectrum\n\n| quantity | value |\n|---|---|\n";
    for (const char* k : {"lambda0", "lambda1", "A", "B", "H"})
      md << "| " << k << " | " << format_number(spectrum[k].get<double>()) << " |\n";
    md << "| regime | " << spectrum["regime"].get<std::string>() << " |\n\n";
  }
  if (!verification.is_null()) {
    report["verification"] = {{"hard_pass", verification["hard_pass"]},
                              {"soft_failures", verification["soft_failures"]},
                              {"inconclusive", verification["inconclusive"]}};
    md << "## Verification (" << verification["regime"].get<std::string>() << ")\n\n"
       << "| test | kind | status | statistic | value | threshold |\n|---|---|---|---|---|---|\n";
    for (const auto& t : verification["tests"])
      md << "| " << t["name"].get<std::string>() << " | " << (t["hard"].get<bool>() ? "hard" : "soft") << " | "
         << t["status"].get<std::string>() << " | " << t["statistic"].get<std::string>() << " | "
         << format_number(t["value"].get<double>()) << " | " << format_number(t["threshold"].get<double>()) << " |\n";
  }
  md << "\nPlot data (CSV): ";
  for (const auto& a : report["artifacts"])
    if (a.get<std::string>().ends_with(".csv")) md << "`" << a.get<std::string>() << "` ";
  md << "\n";
  write_json(dir / "report.json", report, ctx);
  write_text(dir / "report.md", md.str());
  return 0;
}

}  // namespace mvb
