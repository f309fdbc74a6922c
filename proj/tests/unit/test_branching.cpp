#include <doctest.h>

#include <cmath>

#include "mvb/branching.hpp"
#include "mvb/error.hpp"

using namespace mvb;

namespace {

RateModel constant_model(double b, double d) { return RateModel(Curve::constant(b), Curve::constant(d)); }

SimulationSpec counts_spec(std::vector<double> times, double dt, Engine e) {
  SimulationSpec s;
  s.dt = dt;
  s.record_times = std::move(times);
  s.engine = e;
  s.functionals = {Functional::one()};
  return s;
}

std::vector<double> counts_at(const std::vector<ReplicaRecord>& recs, std::size_t k) {
  std::vector<double> v;
  for (const auto& r : recs) v.push_back(static_cast<double>(r.N[k]));
  return v;
}

// du/dt = (b - d) u - b u^2 by classical RK4
double survival_ode(double b, double d, double t, int steps = 20000) {
  auto f = [&](double u) { return (b - d) * u - b * u * u; };
  double u = 1.0;
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const double k1 = f(u), k2 = f(u + 0.5 * h * k1), k3 = f(u + 0.5 * h * k2), k4 = f(u + h * k3);
    u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return u;
}

}  // namespace

TEST_CASE("no events keeps one particle") {
  const auto spec = counts_spec({0.0, 1.0, 5.0}, 0.01, Engine::kParticle);
  const auto recs = run_ensemble_serial(constant_model(0.0, 0.0), DynamicsSpec::diffusion(Curve::constant(0.0)), spec,
                                        50, 1);
  for (const auto& r : recs)
    for (auto n : r.N) CHECK(n == 1);
}

TEST_CASE("Yule mean") {
  const auto m = constant_model(1.0, 0.0);
  for (Engine e : {Engine::kParticle, Engine::kLumped}) {
    const auto spec = counts_spec({2.0}, 1e-3, e);
    const auto recs = run_ensemble(m, DynamicsSpec::static_motion(), spec, 10000, 3);
    const auto est = mean_estimate(counts_at(recs, 0));
    CHECK(std::abs(est.value - std::exp(2.0)) < 3.0 * est.se);
  }
}

TEST_CASE("critical survival at t = 9") {
  const auto spec = counts_spec({9.0}, 0.01, Engine::kLumped);
  const auto recs = run_ensemble(constant_model(1.0, 1.0), DynamicsSpec::static_motion(), spec, 100000, 4);
  const auto rows = mc_survival(recs, spec);
  CHECK(std::abs(rows[0].est.value - 0.1) < 3.0 * rows[0].est.se);
}

TEST_CASE("Yule moment ceiling") {
  CHECK(yule_moment_bound(1, 0.0, 3.0) == 1.0);
  CHECK(yule_moment_bound(2, 1.0, 1.0) == doctest::Approx(2.0 * std::exp(2.0)));
  const double p = std::exp(-1.0);
  CHECK((2.0 - p) / (p * p) <= yule_moment_bound(2, 1.0, 1.0));
  CHECK(std::isinf(yule_moment_bound(50, 100.0, 1.0)));
}

TEST_CASE("moment estimates") {
  const auto m = constant_model(1.0, 1.0);
  auto spec = counts_spec({0.0, 1.0}, 0.01, Engine::kLumped);
  spec.functionals = {Functional::one(), Functional::of_curve("zero", Curve::constant(0.0))};
  const auto recs = run_ensemble(m, DynamicsSpec::static_motion(), spec, 40000, 5);
  const auto rows = mc_moments(recs, spec, 0, 2, m.b_star, 1.0);
  for (const auto& r : rows) {
    CHECK(r.within_ceiling);
    if (r.t == 1.0 && r.n == 1) CHECK(std::abs(r.est.value - 1.0) < 3.0 * r.est.se);
    if (r.t == 1.0 && r.n == 2) CHECK(std::abs(r.est.value - 3.0) < 3.0 * r.est.se);
  }
  for (const auto& r : mc_moments(recs, spec, 1, 3, m.b_star, 0.0)) CHECK(r.est.value == 0.0);
}

TEST_CASE("survival estimates") {
  auto spec = counts_spec({0.0, 1.0}, 0.01, Engine::kLumped);
  const auto crit = run_ensemble(constant_model(1.0, 1.0), DynamicsSpec::static_motion(), spec, 20000, 6);
  const auto rows = mc_survival(crit, spec);
  CHECK(rows[0].est.value == 1.0);
  CHECK(std::abs(rows[1].est.value - 0.5) < 3.0 * rows[1].est.se);

  spec.record_times = {0.5, 1.0, 2.0};
  const auto sub = run_ensemble(constant_model(0.5, 1.0), DynamicsSpec::static_motion(), spec, 20000, 7);
  const auto srows = mc_survival(sub, spec);
  for (const auto& r : srows) CHECK(std::abs(r.est.value - survival_ode(0.5, 1.0, r.t)) < 3.0 * r.est.se);
  for (const auto& r : sub)
    for (std::size_t k = 1; k < r.N.size(); ++k)
      if (r.N[k - 1] == 0) CHECK(r.N[k] == 0);
}

TEST_CASE("lumped and particle engines agree") {
  const auto m = constant_model(1.0, 1.0);
  const auto pa = run_ensemble(m, DynamicsSpec::static_motion(), counts_spec({2.0}, 1e-3, Engine::kParticle), 20000, 8);
  const auto lu = run_ensemble(m, DynamicsSpec::static_motion(), counts_spec({2.0}, 1e-3, Engine::kLumped), 20000, 9);
  const auto a = mean_estimate(counts_at(pa, 0)), b = mean_estimate(counts_at(lu, 0));
  CHECK(std::abs(a.value - b.value) < 3.0 * std::hypot(a.se, b.se));
  const auto sa = mc_survival(pa, counts_spec({2.0}, 1e-3, Engine::kParticle))[0].est;
  const auto sb = mc_survival(lu, counts_spec({2.0}, 1e-3, Engine::kLumped))[0].est;
  CHECK(std::abs(sa.value - sb.value) < 3.0 * std::hypot(sa.se, sb.se));
}

TEST_CASE("lumped engine refuses trait dependence") {
  const RateModel m(Curve::constant(1.0), Curve::abs_polynomial({0.5, 1.0}));
  CHECK_THROWS_AS(resolve_engine(m, DynamicsSpec::static_motion(), counts_spec({1.0}, 0.01, Engine::kLumped)),
                  ConfigError);
  CHECK(resolve_engine(m, DynamicsSpec::static_motion(), counts_spec({1.0}, 0.01, Engine::kAuto)) == Engine::kParticle);
}

TEST_CASE("step size guard") {
  const auto m = constant_model(5.0, 6.0);
  CHECK_THROWS_AS(check_simulation(m, DynamicsSpec::static_motion(), counts_spec({1.0}, 0.05, Engine::kParticle)),
                  ConfigError);
  CHECK_THROWS_AS(check_simulation(m, DynamicsSpec::static_motion(), counts_spec({0.015}, 0.01, Engine::kParticle)),
                  ConfigError);
}

TEST_CASE("Yule coupling dominates") {
  const RateModel m(Curve::gaussian_bump(0.2, 0.8, 0.0, 1.0), Curve::abs_polynomial({0.3, 0.5}), 1.0);
  auto spec = counts_spec({0.5, 1.0, 2.0}, 0.01, Engine::kParticle);
  spec.couple_yule = true;
  spec.cutoff.m = 8.0;  // unbounded death: cap it far outside where the OU particles go
  const auto recs = run_ensemble(m, DynamicsSpec::diffusion(Curve::polynomial({0.0, 0.5})), spec, 500, 10);
  for (const auto& r : recs) {
    CHECK(r.coupling_ok);
    for (std::size_t k = 0; k < r.N.size(); ++k) CHECK(r.N[k] <= r.N_yule[k]);
  }
}

TEST_CASE("serial and parallel ensembles match") {
  const RateModel m(Curve::constant(1.0), Curve::abs_polynomial({0.5, 0.5}), 1.0);
  auto spec = counts_spec({0.5, 1.0}, 0.01, Engine::kParticle);
  spec.functionals.push_back(Functional::of_curve("bump", Curve::gaussian_bump(0.0, 1.0, 0.0, 1.0)));
  spec.cutoff.m = 8.0;
  const auto dyn = DynamicsSpec::diffusion(Curve::polynomial({0.0, 1.0}));
  const auto a = run_ensemble_serial(m, dyn, spec, 300, 11);
  const auto b = run_ensemble(m, dyn, spec, 300, 11, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    CHECK(a[r].N == b[r].N);
    CHECK(a[r].F == b[r].F);
    CHECK(a[r].max_abs == b[r].max_abs);
  }
  const auto s0 = simulate(m, dyn, spec, 11);
  CHECK(s0.record.N == a[0].N);
}

TEST_CASE("historical forest") {
  HistoricalForest f;
  const int root = f.add_root(0.0, 0.0);
  f.record(root, 0.5, 1.0);
  const int child = f.add_child(root, 0.5, 1.0);
  f.record(root, 1.0, 2.0);
  f.record(child, 1.0, -1.0);
  const auto pr = f.path(root), pc = f.path(child);
  CHECK(pr.states == std::vector<double>{0.0, 1.0, 2.0});
  CHECK(pc.times == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(pc.states == std::vector<double>{0.0, 1.0, -1.0});

  PathFunctional end;
  end.lo = -1.5;
  end.hi = -0.5;
  CHECK(end(pc) == 1.0);
  CHECK(end(pr) == 0.0);
  PathFunctional integral;
  integral.kind = PathFunctional::Kind::kTimeIntegral;
  integral.g = Curve::constant(2.0);
  CHECK(integral(pc) == doctest::Approx(2.0));
  PathFunctional mx;
  mx.kind = PathFunctional::Kind::kRunningMaxAbs;
  CHECK(mx(pr) == 2.0);
}

TEST_CASE("simulation keeps genealogy") {
  const auto m = constant_model(2.0, 0.5);
  auto spec = counts_spec({1.0}, 0.01, Engine::kParticle);
  spec.history_horizon = 1.0;
  const auto res = simulate(m, DynamicsSpec::diffusion(Curve::constant(0.0)), spec, 12, true, true);
  REQUIRE(res.forest);
  CHECK(static_cast<std::int64_t>(res.alive_at_horizon.size()) == res.record.N[0]);
  for (int id : res.alive_at_horizon) {
    const auto p = res.forest->path(id);
    CHECK(p.times.front() == 0.0);
    CHECK(p.times.back() == doctest::Approx(1.0));
    CHECK(p.states.front() == 0.0);
  }
}

TEST_CASE("Q-process weights") {
  SpectralData s;
  s.grid = Grid(-2.0, 2.0, 5);
  s.theta0 = Vec::Ones(5);
  s.lambda0 = 0.3;
  CHECK(qprocess_weight({0.0}, 0.0, 0.0, s, WeightKind::kEigen) == 1.0);
  CHECK(qprocess_weight({}, 1.0, 0.0, s, WeightKind::kEigen) == 0.0);
  const Vec h = Vec::Constant(5, 0.4);
  CHECK(qprocess_weight({}, 1.0, 0.0, s, WeightKind::kSuper, &h) == 0.0);
  CHECK(qprocess_weight({0.0}, 0.0, 0.0, s, WeightKind::kSuper, &h) == doctest::Approx(1.0));
  const Vec hz = Vec::Zero(5);
  CHECK_THROWS_AS(qprocess_weight({0.0}, 1.0, 0.0, s, WeightKind::kSuper, &hz), DomainError);

  // constant critical toy: weight = N_s and the size-biased mean is E N^2 / E N = 1 + 2 b s
  const auto spec = counts_spec({1.0}, 0.01, Engine::kLumped);
  const auto recs = run_ensemble(constant_model(1.0, 1.0), DynamicsSpec::static_motion(), spec, 40000, 13);
  std::vector<double> num, den;
  for (const auto& r : recs) {
    const double w = qprocess_weight_from_sums(static_cast<double>(r.N[0]), 1.0, 1.0, 0.0, WeightKind::kEigen);
    CHECK(w == static_cast<double>(r.N[0]));
    num.push_back(w * r.N[0]);
    den.push_back(w);
  }
  const auto ratio = jackknife_ratio(num, den);
  CHECK(std::abs(ratio.value - 3.0) < 3.0 * ratio.se);
}

TEST_CASE("cutoff exit probabilities") {
  const auto m = constant_model(1.0, 1.0);
  auto spec = counts_spec({0.0, 1.0, 2.0}, 0.01, Engine::kParticle);
  spec.x0 = 0.5;
  const auto recs = run_ensemble(m, DynamicsSpec::diffusion(Curve::polynomial({0.0, 1.0})), spec, 2000, 14);
  const auto rows = cutoff_diagnostics(recs, spec, {0.25, 1.0, 1.5, 2.0, 100.0});
  for (const auto& r : rows) {
    if (r.m == 0.25 && r.t == 0.0) CHECK(r.p_exit.value == 1.0);
    if (r.m == 100.0) CHECK(r.p_exit.value == 0.0);
  }
  for (double t : {1.0, 2.0}) {
    double prev = 2.0;
    for (const auto& r : rows)
      if (r.t == t) {
        CHECK(r.p_exit.value <= prev);
        prev = r.p_exit.value;
      }
  }
  // the lumped engine has no trait paths to scan
  const auto lspec = counts_spec({1.0}, 0.01, Engine::kLumped);
  const auto lumped = run_ensemble(m, DynamicsSpec::diffusion(Curve::constant(0.0)), lspec, 10, 1);
  CHECK_THROWS_AS(cutoff_diagnostics(lumped, lspec, {1.0}), NotApplicable);
}

TEST_CASE("mean of a trait functional matches the semigroup") {
  const RateModel m(Curve::constant(1.0), Curve::polynomial({0.5, 0.0, 0.2}), 1.0);
  const auto dyn = DynamicsSpec::diffusion(Curve::polynomial({0.0, 0.5}));
  const Curve bump = Curve::gaussian_bump(0.0, 1.0, 0.5, 0.8);
  auto spec = counts_spec({1.0}, 0.005, Engine::kParticle);
  spec.functionals = {Functional::of_curve("bump", bump)};
  spec.cutoff.m = 8.0;
  const auto recs = run_ensemble(m, dyn, spec, 20000, 15);
  std::vector<double> F;
  for (const auto& r : recs) F.push_back(r.F[0][0]);
  const auto est = mean_estimate(F);
  const Grid grid(-8.0, 8.0, 641);
  const auto gen = build_generator(m, dyn, grid);
  const Vec p = evolve_P(sample_on(grid, bump), 1.0, gen, 1e-3);
  const double pde = grid.interpolate(to_std(p), 0.0);
  // Euler bias O(dt) on top of the sampling error
  CHECK(std::abs(est.value - pde) < 3.0 * est.se + 0.01);
}
