#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mvb/dynamics.hpp"
#include "mvb/semigroup.hpp"

namespace mvb {

enum class Engine { kAuto, kParticle, kLumped };
std::string to_string(Engine e);
Engine engine_from_string(const std::string& s);

// d^(m)(x) = d(clamp(x, -m, m))
struct CutoffSpec {
  double m = std::numeric_limits<double>::infinity();
  double apply(const Curve& d, double x) const { return d(x < -m ? -m : (x > m ? m : x)); }
};

// Trait function f for <Z_t, f>; `constant` set when f is a known constant.
struct Functional {
  std::string name;
  std::function<double(double)> fn;
  std::optional<double> constant;

  static Functional one();
  static Functional of_curve(std::string name, Curve c);
  static Functional of_grid(std::string name, const Grid& grid, const Vec& values);
};

struct PathFunctional {
  enum class Kind { kEndpointIndicator, kTimeIntegral, kRunningMaxAbs };
  Kind kind = Kind::kEndpointIndicator;
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  Curve g;  // integrand for kTimeIntegral

  double operator()(const PathSegment& path) const;
};

struct Lineage {
  int parent = -1;
  double birth_time = 0.0;
  std::vector<double> times;
  std::vector<double> states;
};

// Copy-on-branch path forest: each lineage stores samples from its birth on; full paths come from parent pointers.
class HistoricalForest {
 public:
  int add_root(double t, double x);
  int add_child(int parent, double t, double x);
  void record(int id, double t, double x);
  PathSegment path(int id) const;
  std::size_t size() const { return nodes_.size(); }
  const Lineage& lineage(int id) const { return nodes_[id]; }

 private:
  std::vector<Lineage> nodes_;
};

struct SimulationSpec {
  double x0 = 0.0;
  double dt = 0.01;
  std::vector<double> record_times;  // multiples of dt; 0 allowed
  CutoffSpec cutoff;
  Engine engine = Engine::kAuto;
  std::vector<Functional> functionals;
  // history (particle engine only): genealogy kept up to horizon, path functionals evaluated there
  double history_horizon = 0.0;
  std::vector<PathFunctional> path_functionals;
  bool couple_yule = false;
  std::int64_t max_particles = 20'000'000;

  double t_end() const;
};

struct ReplicaRecord {
  std::vector<std::int64_t> N;         // per record time
  std::vector<std::vector<double>> F;  // F[j][k] = <Z_{t_k}, f_j>
  std::vector<double> max_abs;         // running sup of |trait| up to t_k
  std::vector<std::int64_t> N_yule;    // coupled Yule counts
  double exit_time = std::numeric_limits<double>::infinity();  // T_m
  std::vector<double> path_values;     // <L_s, Phi_j> at the history horizon
  std::int64_t N_horizon = 0;
  bool coupling_ok = true;
};

struct Event {
  double time;
  bool birth;
  double trait;
};

struct SimulationResult {
  ReplicaRecord record;
  std::vector<std::vector<double>> traits;  // per record time (single runs only)
  std::optional<HistoricalForest> forest;
  std::vector<int> alive_at_horizon;        // lineage ids
  std::vector<Event> events;
  Engine engine_used = Engine::kParticle;
};

// Decides the engine: lumped needs constant rates and count-type observables only.
Engine resolve_engine(const RateModel& model, const DynamicsSpec& dyn, const SimulationSpec& spec);

// Throws ConfigError when dt (b* + sup_{[-m,m]} d) > 0.1 or record times are off the step grid.
void check_simulation(const RateModel& model, const DynamicsSpec& dyn, const SimulationSpec& spec);

SimulationResult simulate(const RateModel& model, const DynamicsSpec& dyn, const SimulationSpec& spec,
                          std::uint64_t seed, bool keep_traits = false, bool keep_history = false,
                          bool keep_events = false);

ReplicaRecord simulate_replica(const RateModel& model, const DynamicsSpec& dyn, const SimulationSpec& spec,
                               Stream rng);

// Replica r uses Stream::for_replica(seed, r): results do not depend on scheduling.
std::vector<ReplicaRecord> run_ensemble_serial(const RateModel& model, const DynamicsSpec& dyn,
                                               const SimulationSpec& spec, std::size_t reps, std::uint64_t seed);
std::vector<ReplicaRecord> run_ensemble(const RateModel& model, const DynamicsSpec& dyn, const SimulationSpec& spec,
                                        std::size_t reps, std::uint64_t seed, int threads = 0);

// ---- estimators

// n! e^{n b* t}; +inf (with a warning on stderr) on overflow
double yule_moment_bound(int n, double t, double b_star);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

Estimate mean_estimate(const std::vector<double>& x);
// E[num]/E[den] with jackknife SE
Estimate jackknife_ratio(const std::vector<double>& num, const std::vector<double>& den);

struct MomentRow {
  double t;
  int n;
  Estimate est;
  double ceiling;
  bool within_ceiling;
};

// functional < 0 means counts N_t
std::vector<MomentRow> mc_moments(const std::vector<ReplicaRecord>& recs, const SimulationSpec& spec, int functional,
                                  int n_max, double b_star, double f_norm);

struct SurvivalRow {
  double t;
  Estimate est;
};
std::vector<SurvivalRow> mc_survival(const std::vector<ReplicaRecord>& recs, const SimulationSpec& spec);

enum class WeightKind { kEigen, kSuper };

// critical/sub: e^{lambda0 s} <Z_s, theta0> / theta0(x0); super: (1 - exp <Z_s, log(1-h)>) / h(x0)
double qprocess_weight(const std::vector<double>& traits_at_s, double s, double x0, const SpectralData& spec,
                       WeightKind kind, const Vec* h = nullptr);
double qprocess_weight_from_sums(double functional_sum, double s, double value_at_x0, double lambda0, WeightKind kind);

struct CutoffRow {
  double m;
  double t;
  Estimate p_exit;  // P(T_m <= t)
};
std::vector<CutoffRow> cutoff_diagnostics(const std::vector<ReplicaRecord>& recs, const SimulationSpec& spec,
                                          const std::vector<double>& m_grid);

// mean over survivors of sup - inf of e^{lambda0 t} N_t over record times in [T, 2T]
Estimate stabilization_spread(const std::vector<ReplicaRecord>& recs, const SimulationSpec& spec, double lambda0,
                              double T);

}  // namespace mvb
