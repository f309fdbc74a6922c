#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mvb/branching.hpp"
#include "mvb/error.hpp"

namespace mvb {

namespace {

constexpr double kMaxStepProb = 0.1;

double scan_radius(const CutoffSpec& c) { return std::isfinite(c.m) ? c.m : 50.0; }

double sup_death(const RateModel& model, const CutoffSpec& c) {
  const double r = scan_radius(c);
  double s = 0.0;
  for (int i = 0; i <= 4000; ++i) s = std::max(s, c.apply(model.d, -r + i * r / 2000.0));
  return s;
}

long long step_index(double t, double dt, const char* what) {
  const double k = std::round(t / dt);
  if (t < 0.0 || std::abs(k * dt - t) > 1e-9 * std::max(1.0, t))
    throw ConfigError(std::string(what) + " " + std::to_string(t) + " is not a multiple of dt = " + std::to_string(dt));
  return static_cast<long long>(k);
}

double functional_sum(const Functional& f, const std::vector<double>& xs) {
  if (f.constant) return *f.constant * static_cast<double>(xs.size());
  double acc = 0.0;
  for (double x : xs) acc += f.fn(x);
  return acc;
}

void init_record(ReplicaRecord& rec, const SimulationSpec& spec) {
  const std::size_t nr = spec.record_times.size();
  rec.N.assign(nr, 0);
  rec.F.assign(spec.functionals.size(), std::vector<double>(nr, 0.0));
  rec.max_abs.assign(nr, 0.0);
  if (spec.couple_yule) rec.N_yule.assign(nr, 0);
  rec.path_values.assign(spec.path_functionals.size(), 0.0);
}

// Linear birth-death: from n individuals over time tau, exact via the (alpha, beta) representation:
// K ~ Bin(n, 1 - alpha) survivors of the initial stock, total K + NegBin(K, 1 - beta).
std::int64_t birth_death_transition(std::int64_t n, double lam, double mu, double tau, Stream& rng) {
  if (n == 0 || tau == 0.0) return n;
  double one_minus_alpha, one_minus_beta;
  if (lam == mu) {
    one_minus_alpha = one_minus_beta = 1.0 / (1.0 + lam * tau);
  } else {
    const double r = lam - mu;
    if (r * tau > 0.0) {
      // supercritical: divide through by E = e^{r tau} to stay finite
      const double Einv = std::exp(-r * tau);
      const double den = lam - mu * Einv;
      one_minus_alpha = r / den;
      one_minus_beta = r * Einv / den;
    } else {
      const double E = std::exp(r * tau);
      const double den = lam * E - mu;  // < 0
      one_minus_alpha = E * r / den;
      one_minus_beta = r / den;
    }
  }
  one_minus_alpha = std::clamp(one_minus_alpha, 0.0, 1.0);
  one_minus_beta = std::clamp(one_minus_beta, 0.0, 1.0);
  std::binomial_distribution<std::int64_t> bin(n, one_minus_alpha);
  const std::int64_t k = bin(rng);
  if (k == 0 || one_minus_beta >= 1.0) return k;
  if (one_minus_beta <= 0.0) throw NumericalError("birth-death transition: degenerate geometric parameter");
  std::negative_binomial_distribution<std::int64_t> nb(k, one_minus_beta);
  return k + nb(rng);
}

struct Flags {
  bool traits = false;
  bool history = false;
  bool events = false;
};

SimulationResult run_lumped(const RateModel& model, const DynamicsSpec& dyn, const SimulationSpec& spec, Stream rng) {
  SimulationResult out;
  out.engine_used = Engine::kLumped;
  auto& rec = out.record;
  init_record(rec, spec);
  const double lam = model.b(0.0), mu = model.d(0.0);
  const bool stat = dyn.variant == Variant::kStatic;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> fval(spec.functionals.size());
  for (std::size_t j = 0; j < fval.size(); ++j) {
    const auto& f = spec.functionals[j];
    fval[j] = f.constant ? *f.constant : f.fn(spec.x0);
  }
  std::int64_t n = 1;
  double t = 0.0;
  for (std::size_t k = 0; k < spec.record_times.size(); ++k) {
    const double tk = spec.record_times[k];
    n = birth_death_transition(n, lam, mu, tk - t, rng);
    t = tk;
    rec.N[k] = n;
    for (std::size_t j = 0; j < fval.size(); ++j) rec.F[j][k] = fval[j] * static_cast<double>(n);
    rec.max_abs[k] = stat ? std::abs(spec.x0) : nan;
  }
  rec.exit_time = stat ? (std::abs(spec.x0) > spec.cutoff.m ? 0.0 : std::numeric_limits<double>::infinity()) : nan;
  return out;
}

SimulationResult run_particle(const RateModel& model, const DynamicsSpec& dyn, const SimulationSpec& spec, Stream rng,
                              Flags flags) {
  SimulationResult out;
  out.engine_used = Engine::kParticle;
  auto& rec = out.record;
  init_record(rec, spec);
  const double dt = spec.dt;
  const double m = spec.cutoff.m;
  const double bstar_dt = model.b_star * dt;
  const std::size_t nr = spec.record_times.size();

  std::vector<long long> rec_step(nr);
  for (std::size_t k = 0; k < nr; ++k) rec_step[k] = step_index(spec.record_times[k], dt, "record time");
  const bool want_history = spec.history_horizon > 0.0 || !spec.path_functionals.empty() || flags.history;
  const long long hist_step = want_history ? step_index(spec.history_horizon, dt, "history horizon") : -1;
  long long last_step = hist_step;
  for (auto s : rec_step) last_step = std::max(last_step, s);
  if (flags.traits) out.traits.assign(nr, {});

  std::vector<double> x{spec.x0};
  std::vector<Stream> streams{rng.split()};
  std::vector<int> lin{-1};
  HistoricalForest forest;
  if (want_history) lin[0] = forest.add_root(0.0, spec.x0);

  std::int64_t unmatched = 0;
  double running_max = std::abs(spec.x0);
  if (running_max > m) rec.exit_time = 0.0;
  bool horizon_done = false;

  auto take_records = [&](long long step) {
    const double t = step * dt;
    for (std::size_t k = 0; k < nr; ++k) {
      if (rec_step[k] != step) continue;
      rec.N[k] = static_cast<std::int64_t>(x.size());
      for (std::size_t j = 0; j < spec.functionals.size(); ++j) rec.F[j][k] = functional_sum(spec.functionals[j], x);
      rec.max_abs[k] = running_max;
      if (spec.couple_yule) {
        rec.N_yule[k] = rec.N[k] + unmatched;
        if (rec.N[k] > rec.N_yule[k]) rec.coupling_ok = false;
      }
      if (flags.traits) out.traits[k] = x;
    }
    if (step == hist_step) {
      rec.N_horizon = static_cast<std::int64_t>(x.size());
      for (std::size_t j = 0; j < spec.path_functionals.size(); ++j) {
        double acc = 0.0;
        for (int id : lin) acc += spec.path_functionals[j](forest.path(id));
        rec.path_values[j] = acc;
      }
      if (flags.history) out.alive_at_horizon = lin;
      horizon_done = true;
    }
    (void)t;
  };
  take_records(0);

  std::vector<double> cx;
  std::vector<Stream> cs;
  std::vector<int> cl;
  for (long long step = 0; step < last_step; ++step) {
    if (x.empty() && !spec.couple_yule) break;
    const double t1 = (step + 1) * dt;
    const bool in_history = want_history && step + 1 <= hist_step;
    // unmatched Yule individuals branch independently at rate b*
    if (unmatched > 0) {
      std::binomial_distribution<std::int64_t> bin(unmatched, bstar_dt);
      unmatched += bin(rng);
    }
    cx.clear();
    cs.clear();
    cl.clear();
    std::size_t w = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double xi = x[i];
      const double u = streams[i].uniform();
      const double bi = model.b(xi);
      const double di = spec.cutoff.apply(model.d, xi);
      if ((bi + di) * dt > kMaxStepProb)
        throw ConfigError("dt too large: (b + d^(m))(x) dt = " + std::to_string((bi + di) * dt) + " at x = " +
                          std::to_string(xi));
      const bool yule_branch = spec.couple_yule && u < bstar_dt;
      if (u < bi * dt) {
        cx.push_back(xi);
        cs.push_back(streams[i].split());
        cl.push_back(in_history ? forest.add_child(lin[i], t1, xi) : -1);
        if (flags.events) out.events.push_back({t1, true, xi});
        if (in_history) forest.record(lin[i], t1, xi);
      } else if (u < (bi + di) * dt) {
        // the Yule partner loses its match; if it branched, so did its new child
        if (spec.couple_yule) unmatched += yule_branch ? 2 : 1;
        if (flags.events) out.events.push_back({t1, false, xi});
        continue;
      } else {
        if (yule_branch) unmatched += 1;
        x[i] = motion_step(xi, dt, streams[i], dyn);
        if (in_history) forest.record(lin[i], t1, x[i]);
      }
      if (w != i) {
        x[w] = x[i];
        streams[w] = streams[i];
        lin[w] = lin[i];
      }
      ++w;
    }
    x.resize(w);
    streams.resize(w);
    lin.resize(w);
    x.insert(x.end(), cx.begin(), cx.end());
    streams.insert(streams.end(), cs.begin(), cs.end());
    lin.insert(lin.end(), cl.begin(), cl.end());
    if (static_cast<std::int64_t>(x.size()) > spec.max_particles)
      throw NumericalError("population exceeded max_particles = " + std::to_string(spec.max_particles) +
                           "; use the lumped engine or a shorter horizon");
    for (double xi : x) {
      const double ax = std::abs(xi);
      if (ax > running_max) running_max = ax;
    }
    if (running_max > m && !std::isfinite(rec.exit_time)) rec.exit_time = t1;
    take_records(step + 1);
  }
  // extinct before the last record: remaining records stay zero, sup|x| frozen
  for (std::size_t k = 0; k < nr; ++k)
    if (rec_step[k] > 0 && rec.N[k] == 0 && rec.max_abs[k] == 0.0) rec.max_abs[k] = running_max;
  if (!horizon_done) rec.N_horizon = 0;
  if (flags.history) out.forest = std::move(forest);
  return out;
}

}  // namespace

double SimulationSpec::t_end() const {
  double t = history_horizon;
  for (double r : record_times) t = std::max(t, r);
  return t;
}

Engine resolve_engine(const RateModel& model, const DynamicsSpec& dyn, const SimulationSpec& spec) {
  const bool stat = dyn.variant == Variant::kStatic;
  const bool counts_only =
      std::all_of(spec.functionals.begin(), spec.functionals.end(), [](const Functional& f) { return f.constant; });
  const bool lumpable = model.constant_rates() && !spec.couple_yule && spec.history_horizon <= 0.0 &&
                        spec.path_functionals.empty() && (stat || counts_only);
  if (spec.engine == Engine::kLumped) {
    if (!lumpable)
      throw ConfigError(
          "lumped engine needs constant rates, no history or Yule coupling, and static motion or constant functionals");
    return Engine::kLumped;
  }
  if (spec.engine == Engine::kParticle) return Engine::kParticle;
  return lumpable ? Engine::kLumped : Engine::kParticle;
}

void check_simulation(const RateModel& model, const DynamicsSpec& dyn, const SimulationSpec& spec) {
  if (!(spec.dt > 0.0)) throw ConfigError("simulation dt must be positive");
  if (!std::isfinite(spec.x0)) throw ConfigError("x0 must be finite");
  if (!(spec.cutoff.m > 0.0)) throw ConfigError("cutoff m must be positive");
  for (std::size_t k = 1; k < spec.record_times.size(); ++k)
    if (!(spec.record_times[k] > spec.record_times[k - 1]))
      throw ConfigError("record times must be strictly increasing");
  if (resolve_engine(model, dyn, spec) == Engine::kLumped) {
    for (double t : spec.record_times)
      if (t < 0.0) throw ConfigError("record times must be nonnegative");
    return;
  }
  for (double t : spec.record_times) step_index(t, spec.dt, "record time");
  if (spec.history_horizon > 0.0) step_index(spec.history_horizon, spec.dt, "history horizon");
  const double rate = model.b_star + sup_death(model, spec.cutoff);
  if (rate * spec.dt > kMaxStepProb)
    throw ConfigError("dt too large: dt (b* + sup d^(m)) = " + std::to_string(rate * spec.dt) + " > 0.1");
  check_thinning(dyn, spec.dt, scan_radius(spec.cutoff));
}

SimulationResult simulate(const RateModel& model, const DynamicsSpec& dyn, const SimulationSpec& spec,
                          std::uint64_t seed, bool keep_traits, bool keep_history, bool keep_events) {
  check_simulation(model, dyn, spec);
  Stream rng = Stream::for_replica(seed, 0);
  if (resolve_engine(model, dyn, spec) == Engine::kLumped) return run_lumped(model, dyn, spec, rng);
  return run_particle(model, dyn, spec, rng, Flags{keep_traits, keep_history, keep_events});
}

ReplicaRecord simulate_replica(const RateModel& model, const DynamicsSpec& dyn, const SimulationSpec& spec,
                               Stream rng) {
  if (resolve_engine(model, dyn, spec) == Engine::kLumped) return run_lumped(model, dyn, spec, rng).record;
  return run_particle(model, dyn, spec, rng, Flags{}).record;
}

}  // namespace mvb
