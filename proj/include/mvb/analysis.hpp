#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvb/branching.hpp"
#include "mvb/moments.hpp"

namespace mvb {

enum class TestStatus { kPass, kFail, kInconclusive };
std::string to_string(TestStatus s);

struct TestReport {
  std::string name;
  std::string statistic;
  double value = 0.0;
  double threshold = 0.0;
  std::size_t sample_size = 0;
  TestStatus status = TestStatus::kInconclusive;
  std::optional<double> p_value;
  std::string detail;
  nlohmann::json extra = nlohmann::json::object();

  bool passed() const { return status == TestStatus::kPass; }
  nlohmann::json to_json() const;
};

// ---- generic statistics

// P(K > lambda) for the Kolmogorov distribution
double kolmogorov_q(double lambda);

struct KsResult {
  double D = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

// one-sample, two-sided; asymptotic p-value with Stephens' small-n correction
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);
// D such that the corrected p-value equals alpha
double ks_critical(double alpha, std::size_t n);
// pass iff D <= ks_critical(alpha, n) + slack
TestReport ks_report(std::string name, const std::vector<double>& samples, const std::function<double(double)>& cdf,
                     double alpha, double slack = 0.0);

struct MomentTarget {
  int order = 1;
  Estimate sample;
  double target = 0.0;
};
// pass iff every |sample - target| <= z_max SE
TestReport moment_z_test(std::string name, const std::vector<MomentTarget>& moments, double z_max);
Estimate raw_moment(const std::vector<double>& x, int n);

struct NullCalibration {
  int reps = 0;
  int passes = 0;
  double rate = 0.0;
  double required = 0.0;
  bool pass = false;
  nlohmann::json to_json() const;
};
// runs a test on synthetic null data reps times; passes at rate >= 1 - 2 alpha
NullCalibration null_calibration(const std::function<bool(Stream&)>& run_once, int reps, std::uint64_t seed,
                                 double alpha);

double exp_cdf(double x);
std::vector<double> sample_exponential(std::size_t n, Stream& rng);

// ---- critical dynamical system

struct CriticalDecomposition {
  std::vector<double> times;
  std::vector<double> r;    // int u0 dmu0
  std::vector<Vec> psi;     // u0 - r theta0
  double max_orthogonality = 0.0;   // max |int psi dmu0|
  double max_reconstruction = 0.0;  // max |u0 - r theta0 - psi|
};

CriticalDecomposition decompose(const SurvivalField& u0, const SpectralData& s);

// sup_x |(1+t) u0 - theta0/B| against c log(2+t)/(1+t) over the last doubling of t
TestReport critical_survival_check(const SurvivalField& u0, const SpectralData& s);

// centered dr/dt vs -lambda0 r - B r^2 - 2 r mu0(theta0 b psi) - mu0(b psi^2) for t >= t_min
TestReport critical_ode_residual(const CriticalDecomposition& dec, const SpectralData& s, const GeneratorMatrix& gen,
                                 double t_min = 1.0, double rel_tol = 1e-3);

// ---- limit laws

// survivors at one record time
struct ConditionalSample {
  double t = 0.0;
  std::size_t reps = 0;
  std::vector<double> N;  // N_t, survivors only
  std::vector<double> F;  // <Z_t, f>, survivors only (empty when not recorded)
};
ConditionalSample conditional_sample(const std::vector<ReplicaRecord>& recs, const SimulationSpec& spec,
                                     std::size_t record_index, int functional = -1);

// c in the finite-t KS slack c/t: sup_t t * D(geometric with mean t+1, scaled by t+1; Exp(1))
double yaglom_slack_constant();

TestReport yaglom_test_critical(const ConditionalSample& sample, const SpectralData& s, double alpha = 0.01,
                                std::size_t min_survivors = 500);
// the same decision on already-normalized samples y = N_t/((t+1)AB); t = inf drops the slack
TestReport yaglom_decision(const std::vector<double>& y, double t, double alpha = 0.01);

// nu(f) = int f dmu0 / int dmu0
double nu_of(const SpectralData& s, const Vec& f);

// samples ordered by increasing t
TestReport lln_ratio_test(const std::vector<ConditionalSample>& samples, double nu_f, std::size_t min_survivors = 500);

// h(y) = ((y + sqrt(y^2 + 2))/2)^2, written as 1/(sqrt(y^2+2) - y)^2
double upsilon_h(double y);
double upsilon_cdf(double y);
double upsilon_exceedance(double y);
// xi^{1/2} - xi^{-1/2}/2
double upsilon_transform(double xi);
std::vector<double> upsilon_samples(const ConditionalSample& sample, double A, double B, double nu_f);
TestReport upsilon_test(const ConditionalSample& sample, const SpectralData& s, double nu_f, double alpha = 0.01,
                        std::size_t min_survivors = 500);
TestReport upsilon_decision(const std::vector<double>& values, double t, double alpha = 0.01);

// conditional moments of <Z_t, f> given survival vs V_n/K for n <= min(4, V.size()-1);
// samples from different starting traits are also compared to each other
TestReport subcritical_yaglom_test(const std::vector<ConditionalSample>& by_start, const std::vector<double>& V,
                                   double K, double lambda0, std::size_t min_survivors = 500);

struct AtomSplit {
  double threshold = 0.0;
  bool ambiguous = false;
  std::vector<double> bin_edges;  // log W
  std::vector<std::size_t> counts;
};
// W = 0 or below floor goes to the first bin; the threshold is the emptiest bin between it and the bulk mode
AtomSplit atom_threshold(const std::vector<double>& W, double floor);

// W_by_time[k][r] = e^{lambda0 t_k} <Z_{t_k}, theta0> for replica r; V[n] = V_n^+(theta0, x) (n >= 1)
TestReport w_infty_diagnostics(const std::vector<std::vector<double>>& W_by_time, const std::vector<double>& times,
                               double theta0_x, double h_x, const std::vector<double>& V, double lambda0);

struct QProcessInputs {
  std::vector<double> F;                      // F(<L_s, Phi>) per replica
  std::vector<double> weight;                 // qprocess weight at s per replica
  std::vector<std::vector<bool>> survive;     // survive[j][r] = N_{T_j} > 0
  std::vector<double> T;
  double s = 0.0;
};
TestReport qprocess_law_test(const QProcessInputs& in, std::size_t min_survivors = 200);

}  // namespace mvb
