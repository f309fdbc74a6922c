#include <algorithm>
#include <cmath>

#include "mvb/error.hpp"
#include "mvb/moments.hpp"

namespace mvb {

namespace {

double binom(int n, int k) { return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0))); }

double factorial(int n) { return std::tgamma(n + 1.0); }

// Simpson on uniform samples (3/8 closing panel when the count is odd)
double simpson(const std::vector<double>& y, double h) {
  const int K = static_cast<int>(y.size()) - 1;
  if (K <= 0) return 0.0;
  if (K == 1) return 0.5 * h * (y[0] + y[1]);
  double s = 0.0;
  const int even = (K % 2 == 0) ? K : K - 3;
  for (int j = 0; j < even; j += 2) s += h / 3.0 * (y[j] + 4.0 * y[j + 1] + y[j + 2]);
  if (even != K) s += 3.0 * h / 8.0 * (y[even] + 3.0 * y[even + 1] + 3.0 * y[even + 2] + y[even + 3]);
  return s;
}

struct TailQuad {
  double value = 0.0;
  double tail = 0.0;
};

// int_0^inf of a sampled integrand; the tail past the last sample is completed with the fitted exponential rate
TailQuad integrate_with_tail(const std::vector<double>& y, double h, double fallback_rate) {
  TailQuad q;
  q.value = simpson(y, h);
  const int K = static_cast<int>(y.size()) - 1;
  const double last = y[K];
  if (last == 0.0) return q;
  const int back = std::max(1, std::min(K, static_cast<int>(std::lround(1.0 / h))));
  double rate = fallback_rate;
  if (y[K - back] > 0.0 && last > 0.0 && y[K - back] > last) rate = std::log(y[K - back] / last) / (back * h);
  if (!(rate > 0.0)) throw NumericalError("tail completion: integrand is not decaying");
  q.tail = last / rate;
  q.value += q.tail;
  return q;
}

}  // namespace

std::vector<Vec> critical_limits(const SpectralData& s, int N, std::optional<Vec> f) {
  require_regime(s, Regime::kCritical, "critical_limits");
  const double mass = f ? s.integrate(*f) : s.A;
  std::vector<Vec> V(N + 1);
  for (int n = 1; n <= N; ++n) V[n] = factorial(n) * std::pow(mass, n) * std::pow(s.B, n - 1) * s.theta0;
  return V;
}

Vec richardson_inverse_t(const Vec& v1, double t1, const Vec& v2, double t2) {
  return ((t2 + 1.0) * v2 - (t1 + 1.0) * v1) / (t2 - t1);
}

HamburgerBound hamburger_bound(double a1, double eta, int n) {
  if (!(a1 > 0.0) || !(eta > 0.0)) throw DomainError("hamburger_bound: a1 and eta must be positive");
  HamburgerBound hb;
  hb.r_star = std::log(1.0 + 1.0 / (4.0 * eta * a1));
  hb.bound = factorial(n) / (2.0 * eta * std::pow(hb.r_star, n));
  return hb;
}

std::vector<double> beta_subcritical(double lambda0, double lambda1, int N) {
  std::vector<double> beta(N + 1, 0.0);
  if (N >= 1) beta[1] = lambda1 - lambda0;
  for (int n = 2; n <= N; ++n) beta[n] = lambda0 / lambda1 * (lambda1 - lambda0);
  return beta;
}

std::vector<double> beta_supercritical(double lambda0, double lambda1, int N) {
  std::vector<double> beta(N + 1, 0.0);
  if (N >= 1) beta[1] = lambda1 - lambda0;
  const double a = std::abs(lambda0);
  for (int n = 2; n <= N; ++n) beta[n] = beta[n - 1] * a * (n - 1) / (beta[n - 1] + a * (n - 1));
  return beta;
}

nlohmann::json SubcriticalLimits::to_json() const {
  return {{"V", V},       {"K_minus", K},        {"A", A},     {"beta", beta},
          {"C1", C1},     {"eta", eta},          {"r_star", r_star}, {"hamburger_bound", hamburger},
          {"carleman_partial_sums", carleman}, {"max_tail_fraction", max_tail_fraction}};
}

SubcriticalLimits subcritical_limits(const SpectralData& s, const GeneratorMatrix& gen, const Vec& f, int N,
                                     const LimitOptions& opt) {
  require_regime(s, Regime::kSubcritical, "subcritical_limits");
  const double lam = s.lambda0;
  const double T = opt.horizon > 0.0 ? opt.horizon : std::max(std::log(1e4) / lam, 5.0 / s.gap());
  const double bmax = gen.b.maxCoeff();
  MomentOptions mo;
  mo.dt = opt.dt;
  mo.snapshot_dt = opt.snapshot_dt;
  mo.parallel = opt.parallel;
  const long K = std::lround(T / opt.snapshot_dt);
  const double Tq = K * opt.snapshot_dt;
  const auto mf = solve_moments(f, N, Tq, gen, bmax, mo);
  const auto one = solve_moments(Vec::Ones(gen.size()), 1, Tq, gen, bmax, mo);
  SurvivalOptions so;
  so.dt = opt.dt;
  so.snapshot_dt = opt.snapshot_dt;
  const auto sv = solve_survival(Tq, gen, so);
  const double H = opt.snapshot_dt;
  const Vec bmu = gen.b.cwiseProduct(s.mu0);

  SubcriticalLimits out;
  out.A = s.A;
  out.V.assign(N + 1, 0.0);
  for (int n = 1; n <= N; ++n) {
    double v = s.mu0.dot(f.array().pow(n).matrix());
    if (n >= 2) {
      std::vector<double> J(mf.times.size());
      for (std::size_t k = 0; k < mf.times.size(); ++k) {
        Vec G = Vec::Zero(gen.size());
        for (int j = 1; j < n; ++j) G += binom(n, j) * mf.w[j][k].cwiseProduct(mf.w[n - j][k]);
        J[k] = std::exp(lam * mf.times[k]) * bmu.dot(G);
      }
      const auto q = integrate_with_tail(J, H, lam);
      if (std::abs(q.tail) > 0.01 * std::abs(q.value)) throw NumericalError("subcritical_limits: tail unresolved");
      out.max_tail_fraction = std::max(out.max_tail_fraction, std::abs(q.tail / q.value));
      v += q.value;
    }
    out.V[n] = v;
  }
  {
    std::vector<double> J(sv.times.size());
    for (std::size_t k = 0; k < sv.times.size(); ++k)
      J[k] = std::exp(lam * sv.times[k]) * bmu.dot(sv.u[k].cwiseProduct(sv.u[k]));
    const auto q = integrate_with_tail(J, H, lam);
    if (std::abs(q.tail) > 0.01 * std::abs(q.value)) throw NumericalError("subcritical_limits: tail unresolved");
    out.max_tail_fraction = std::max(out.max_tail_fraction, std::abs(q.tail / q.value));
    out.K = s.A - q.value;
  }
  out.beta = beta_subcritical(lam, s.lambda1, N);
  for (std::size_t k = 0; k < one.times.size(); ++k)
    out.C1 = std::max(out.C1, std::exp(lam * one.times[k]) * one.w[1][k].maxCoeff());
  out.eta = out.C1 * bmax / lam;
  const double fn = f.lpNorm<Eigen::Infinity>();
  const double th = s.theta0.lpNorm<Eigen::Infinity>();
  out.hamburger.assign(N + 1, 0.0);
  for (int n = 1; n <= N; ++n) {
    const auto hb = hamburger_bound(out.C1, out.eta, n);
    out.r_star = hb.r_star;
    out.hamburger[n] = std::pow(fn, n) / th * hb.bound;
  }
  double acc = 0.0;
  for (int n = 1; 2 * n <= N; ++n) {
    acc += std::pow(out.V[2 * n] / out.K, -1.0 / (2 * n));
    out.carleman.push_back(acc);
  }
  return out;
}

nlohmann::json SupercriticalLimits::to_json() const {
  nlohmann::json v = nlohmann::json::array();
  for (std::size_t n = 1; n < V.size(); ++n) v.push_back(to_std(V[n]));
  return {{"V_plus", v}, {"route_rel_diff", route_rel_diff}, {"beta", beta}, {"max_tail_fraction", max_tail_fraction}};
}

SupercriticalLimits supercritical_limits(const SpectralData& s, const GeneratorMatrix& gen, const Vec& f, int N,
                                         const LimitOptions& opt) {
  require_regime(s, Regime::kSupercritical, "supercritical_limits");
  const double lam = s.lambda0;
  const int n_pts = gen.size();
  const SpMat L = gen.full();
  SpMat I(n_pts, n_pts);
  I.setIdentity();
  SupercriticalLimits out;
  out.V.assign(N + 1, Vec());
  out.V_quad.assign(N + 1, Vec());
  out.V[1] = s.project(f);
  out.V_quad[1] = out.V[1];
  auto source = [&](const std::vector<Vec>& V, int n) {
    Vec G = Vec::Zero(n_pts);
    for (int k = 1; k < n; ++k) G += binom(n, k) * V[k].cwiseProduct(V[n - k]);
    return Vec(gen.b.cwiseProduct(G));
  };
  for (int n = 2; n <= N; ++n) {
    // resolvent: V_n = (-(L + n lambda0))^{-1} g_n
    SpMat A = -(L + n * lam * I);
    A.makeCompressed();
    Eigen::SparseLU<SpMat> lu(A);
    if (lu.info() != Eigen::Success) throw NumericalError("supercritical_limits: resolvent singular");
    out.V[n] = lu.solve(source(out.V, n));

    // time quadrature of e^{n lambda0 s} P_s g_n, tail completed at the decay rate (n-1)|lambda0|
    const double rate = (n - 1) * std::abs(lam);
    const double T = opt.horizon > 0.0 ? opt.horizon : std::max(std::log(1e4) / rate, 5.0 / s.gap());
    const long K = std::lround(T / opt.snapshot_dt);
    Propagator P(L + n * lam * I, opt.dt);
    Vec y = source(out.V_quad, n);
    std::vector<Vec> samples{y};
    for (long k = 0; k < K; ++k) {
      y = P.evolve(y, opt.snapshot_dt, k == 0);
      samples.push_back(y);
    }
    Vec val(n_pts);
    for (int i = 0; i < n_pts; ++i) {
      std::vector<double> col(samples.size());
      for (std::size_t k = 0; k < samples.size(); ++k) col[k] = samples[k][i];
      TailQuad q;
      if (col.back() > 0.0) {
        q = integrate_with_tail(col, opt.snapshot_dt, rate);
      } else {
        q.value = simpson(col, opt.snapshot_dt);
      }
      if (std::abs(q.tail) > 0.01 * std::abs(q.value) && std::abs(q.value) > 1e-12)
        throw NumericalError("supercritical_limits: tail unresolved");
      if (q.value != 0.0) out.max_tail_fraction = std::max(out.max_tail_fraction, std::abs(q.tail / q.value));
      val[i] = q.value;
    }
    out.V_quad[n] = val;
    const double d = (out.V[n] - out.V_quad[n]).lpNorm<Eigen::Infinity>() / out.V[n].lpNorm<Eigen::Infinity>();
    out.route_rel_diff = std::max(out.route_rel_diff, d);
  }
  out.beta = beta_supercritical(lam, s.lambda1, N);
  return out;
}

double factorization_error(const SupercriticalLimits& vf, const SupercriticalLimits& vtheta, double int_f, int n) {
  const Vec pred = vtheta.V[n] * std::pow(int_f, n);
  return (vf.V[n] - pred).lpNorm<Eigen::Infinity>() / std::max(vf.V[n].lpNorm<Eigen::Infinity>(), 1e-300);
}

CalibrationResult calibrate_criticality(const std::function<RateModel(double)>& family, const DynamicsSpec& dyn,
                                        const Grid& grid, double lo, double hi, double tol,
                                        std::optional<double> start) {
  CalibrationResult r;
  auto lambda0 = [&](double theta) {
    const auto gen = build_generator(family(theta), dyn, grid);
    const double l = -rightmost_eigenpair(gen.full(), 1e-12, 4000).first;
    r.history.emplace_back(theta, l);
    return l;
  };
  if (start) {
    const double l = lambda0(*start);
    if (std::abs(l) <= tol) {
      r.theta = *start;
      r.lambda0 = l;
      return r;
    }
  }
  double flo = lambda0(lo), fhi = lambda0(hi);
  if (std::abs(flo) <= tol) return r.theta = lo, r.lambda0 = flo, r;
  if (std::abs(fhi) <= tol) return r.theta = hi, r.lambda0 = fhi, r;
  if ((flo > 0.0) == (fhi > 0.0))
    throw NumericalError("calibrate_criticality: lambda0 has no sign change on [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = lambda0(mid);
    if (std::abs(fm) <= tol) {
      r.theta = mid;
      r.lambda0 = fm;
      return r;
    }
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  throw NumericalError("calibrate_criticality: bisection did not reach tolerance");
}

}  // namespace mvb
