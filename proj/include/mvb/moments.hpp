#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mvb/semigroup.hpp"

namespace mvb {

enum class Regime { kCritical, kSubcritical, kSupercritical };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);
// exactly one regime: |lambda0| <= eps_crit is critical
Regime classify(const SpectralData& s);
void require_regime(const SpectralData& s, Regime want, const char* what);

struct MomentOptions {
  double dt = 1e-3;
  double snapshot_dt = 0.05;
  double tilt = 0.0;  // fields stored as w_n = e^{n tilt t} u_n
  bool startup = true;
  bool parallel = false;  // OpenMP over orders and nodes; results identical to the serial path
};

// u_n(t, .) for n = 1..N at snapshot times (n = 0 slot unused).
struct MomentField {
  Grid grid;
  int N = 0;
  double tilt = 0.0;
  double step = 0.0;  // march step
  std::vector<double> times;
  std::vector<std::vector<Vec>> w;  // w[n][k]

  Vec raw(int n, int k) const { return std::exp(-n * tilt * times[k]) * w[n][k]; }
  // critical: u_n/(t+1)^{n-1}; subcritical: e^{lambda0 t} u_n; supercritical: e^{n lambda0 t} u_n
  Vec normalized(int n, int k, Regime r, double lambda0) const;
};

// du_n = L u_n + b sum_{k=1}^{n-1} C(n,k) u_k u_{n-k}, u_n(0) = f^n; Strang splitting with an exact polynomial substep.
MomentField solve_moments(const Vec& f, int N, double t_end, const GeneratorMatrix& gen, double b_star,
                          const MomentOptions& opt = {});

struct DuhamelCheck {
  int n = 0;
  double t = 0.0;
  double rel_residual = 0.0;
};

// Integral-form residual at snapshot index k (composite Simpson in s).
std::vector<DuhamelCheck> duhamel_residuals(const MomentField& field, const Vec& f, const GeneratorMatrix& gen,
                                            const std::vector<int>& snapshot_indices);

struct SurvivalOptions {
  double dt = 1e-3;
  std::vector<double> snapshot_times;  // empty: uniform every snapshot_dt
  double snapshot_dt = 0.1;
  // step h grows to at most t/stretch_ratio (powers of two times dt), capped at dt_max; 0 disables
  double stretch_ratio = 0.0;
  double dt_max = 1.0;
  double t_start = 0.0;  // clock offset (stretching and reported times)
};

struct SurvivalField {
  Grid grid;
  std::vector<double> times;
  std::vector<Vec> u;
};

// du0 = L u0 - b u0^2, u0(0) = init (default 1)
SurvivalField solve_survival(double t_end, const GeneratorMatrix& gen, const SurvivalOptions& opt = {},
                             std::optional<Vec> init = std::nullopt);

struct HResult {
  Vec h_q;            // Newton on L h - b h^2 = 0, verified on the Q integral form
  Vec h_u0;           // long-time limit of u0
  double q_residual = 0.0;  // |h - int_0^T Q_s(2bh - bh^2) ds|_inf
  double q_horizon = 0.0;
  double u0_time = 0.0;
  double disagreement = 0.0;
  int newton_iterations = 0;
  bool agree = false;
};

struct HOptions {
  double tol = 1e-6;
  double dt = 1e-2;
  int max_newton = 400;
  double max_time = 1e8;
};

HResult solve_h(const GeneratorMatrix& gen, const HOptions& opt = {});

// H_f(t, ., w) = E[1 - e^{w <Z_t, f>}]; dH = L H - b H^2
CVec laplace_functional(const Vec& f, std::complex<double> w, double t_end, const GeneratorMatrix& gen, double b_star,
                        double dt = 1e-3);

// u_n(t_end) recovered from w-derivatives of H at 0 (Cauchy integral on a circle inside the analyticity radius)
std::vector<Vec> laplace_moments(const Vec& f, int N, double t_end, const GeneratorMatrix& gen, double b_star,
                                 double dt = 1e-3, int points = 32, double radius_fraction = 0.5);

// ---- regime limits

std::vector<Vec> critical_limits(const SpectralData& s, int N, std::optional<Vec> f = std::nullopt);

// V from v(t) = V + E/(t+1) sampled at two times
Vec richardson_inverse_t(const Vec& v1, double t1, const Vec& v2, double t2);

struct HamburgerBound {
  double r_star = 0.0;
  double bound = 0.0;
};
HamburgerBound hamburger_bound(double a1, double eta, int n);

std::vector<double> beta_subcritical(double lambda0, double lambda1, int N);
std::vector<double> beta_supercritical(double lambda0, double lambda1, int N);

struct LimitOptions {
  double dt = 2e-3;
  double snapshot_dt = 0.05;
  double horizon = 0.0;  // 0: chosen from the decay rate
  bool parallel = false;
};

struct SubcriticalLimits {
  std::vector<double> V;       // V[n], n = 1..N
  double K = 0.0;              // K^-
  double A = 0.0;
  std::vector<double> beta;
  double C1 = 0.0;             // sup e^{lambda0 t} P_t 1
  double eta = 0.0;
  double r_star = 0.0;
  std::vector<double> hamburger;  // n!/(2 eta r*^n) * |f|^n / |theta0|
  std::vector<double> carleman;   // partial sums of (V_{2n}/K)^{-1/(2n)}
  double max_tail_fraction = 0.0;
  nlohmann::json to_json() const;
};

SubcriticalLimits subcritical_limits(const SpectralData& s, const GeneratorMatrix& gen, const Vec& f, int N,
                                     const LimitOptions& opt = {});

struct SupercriticalLimits {
  std::vector<Vec> V;          // resolvent route, V[n](x)
  std::vector<Vec> V_quad;     // time-quadrature route
  double route_rel_diff = 0.0;
  std::vector<double> beta;
  double max_tail_fraction = 0.0;
  nlohmann::json to_json() const;
};

SupercriticalLimits supercritical_limits(const SpectralData& s, const GeneratorMatrix& gen, const Vec& f, int N,
                                         const LimitOptions& opt = {});

// max_x |V_n(f,x) - V_n(theta0,x) (int f dmu0)^n| / max_x |V_n(f,x)|
double factorization_error(const SupercriticalLimits& vf, const SupercriticalLimits& vtheta, double int_f, int n);

struct CalibrationResult {
  double theta = 0.0;
  double lambda0 = 0.0;
  std::vector<std::pair<double, double>> history;  // (theta, lambda0)
};

CalibrationResult calibrate_criticality(const std::function<RateModel(double)>& family, const DynamicsSpec& dyn,
                                        const Grid& grid, double lo, double hi, double tol = 1e-6,
                                        std::optional<double> start = std::nullopt);

}  // namespace mvb
