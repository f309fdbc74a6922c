#include <cmath>
#include <numbers>

#include "mvb/error.hpp"
#include "mvb/moments.hpp"

namespace mvb {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::kCritical: return "critical";
    case Regime::kSubcritical: return "sub";
    case Regime::kSupercritical: return "super";
  }
  return "unknown";
}

Regime regime_from_string(const std::string& s) {
  if (s == "critical") return Regime::kCritical;
  if (s == "sub" || s == "subcritical") return Regime::kSubcritical;
  if (s == "super" || s == "supercritical") return Regime::kSupercritical;
  throw ConfigError("unknown regime '" + s + "'");
}

Regime classify(const SpectralData& s) {
  const double eps = s.eps_crit();
  if (std::abs(s.lambda0) <= eps) return Regime::kCritical;
  return s.lambda0 > eps ? Regime::kSubcritical : Regime::kSupercritical;
}

void require_regime(const SpectralData& s, Regime want, const char* what) {
  const Regime got = classify(s);
  if (got != want)
    throw RegimeError(std::string(what) + " needs the " + to_string(want) + " regime, but lambda0 = " +
                      std::to_string(s.lambda0) + " classifies as " + to_string(got) +
                      " (eps_crit = " + std::to_string(s.eps_crit()) + ")");
}

Vec MomentField::normalized(int n, int k, Regime r, double lambda0) const {
  const double t = times[k];
  switch (r) {
    case Regime::kCritical: return raw(n, k) / std::pow(t + 1.0, n - 1);
    case Regime::kSubcritical: return std::exp(lambda0 * t) * raw(n, k);
    case Regime::kSupercritical: return std::exp(n * (lambda0 - tilt) * t) * w[n][k];
  }
  return raw(n, k);
}

namespace {

double binom(int n, int k) { return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0))); }

// exact flow of dw_n = b sum_{k=1}^{n-1} C(n,k) w_k w_{n-k} over tau: w_n is a polynomial of degree n-1 in tau
void polynomial_substep(std::vector<Vec>& w, const Vec& b, double tau, int N, bool parallel) {
  if (N < 2) return;
  const int nodes = static_cast<int>(b.size());
  std::vector<std::vector<double>> C(N + 1, std::vector<double>(N + 1));
  for (int n = 0; n <= N; ++n)
    for (int k = 0; k <= n; ++k) C[n][k] = binom(n, k);
#pragma omp parallel for if (parallel) schedule(static)
  for (int i = 0; i < nodes; ++i) {
    double c[16][16] = {};
    for (int n = 1; n <= N; ++n) c[n][0] = w[n][i];
    for (int n = 2; n <= N; ++n) {
      for (int j = 0; j + 1 < n; ++j) {
        double s = 0.0;
        for (int k = 1; k < n; ++k)
          for (int q = 0; q <= j; ++q) s += C[n][k] * c[k][q] * c[n - k][j - q];
        c[n][j + 1] = b[i] * s / (j + 1);
      }
    }
    for (int n = 2; n <= N; ++n) {
      double acc = 0.0;
      for (int j = n - 1; j >= 0; --j) acc = acc * tau + c[n][j];
      w[n][i] = acc;
    }
  }
}

std::vector<double> simpson_weights(int K, double H) {
  std::vector<double> w(K + 1, 0.0);
  if (K == 0) return w;
  if (K == 1) {
    w[0] = w[1] = 0.5 * H;
    return w;
  }
  int even = (K % 2 == 0) ? K : K - 3;
  for (int j = 0; j < even; j += 2) {
    w[j] += H / 3.0;
    w[j + 1] += 4.0 * H / 3.0;
    w[j + 2] += H / 3.0;
  }
  if (even != K) {  // 3/8 rule on the last three intervals
    w[even] += 3.0 * H / 8.0;
    w[even + 1] += 9.0 * H / 8.0;
    w[even + 2] += 9.0 * H / 8.0;
    w[even + 3] += 3.0 * H / 8.0;
  }
  return w;
}

}  // namespace

MomentField solve_moments(const Vec& f, int N, double t_end, const GeneratorMatrix& gen, double b_star,
                          const MomentOptions& opt) {
  if (N < 1) throw DomainError("solve_moments: N must be >= 1");
  if (N > 15) throw DomainError("solve_moments: N must be <= 15");
  if (!(t_end > 0.0)) throw DomainError("solve_moments: t_end must be positive");
  Propagator P(gen.full(), opt.dt);
  const long steps = std::max(1L, static_cast<long>(std::ceil(t_end / opt.dt - 1e-9)));
  const double h = (steps * opt.dt == t_end) ? opt.dt : t_end / steps;
  const long every = std::max(1L, std::lround(opt.snapshot_dt / h));
  const auto& F = P.factor(h);

  MomentField mf;
  mf.grid = gen.grid;
  mf.N = N;
  mf.tilt = opt.tilt;
  mf.step = h;
  mf.w.assign(N + 1, {});
  std::vector<Vec> w(N + 1);
  for (int n = 1; n <= N; ++n) w[n] = f.array().pow(n).matrix();
  auto snapshot = [&](double t) {
    mf.times.push_back(t);
    for (int n = 1; n <= N; ++n) mf.w[n].push_back(w[n]);
  };
  snapshot(0.0);
  const double fnorm = std::max(f.lpNorm<Eigen::Infinity>(), 1e-300);
  std::vector<double> growth(N + 1);
  for (int n = 1; n <= N; ++n) growth[n] = std::exp(n * opt.tilt * h);

  for (long k = 0; k < steps; ++k) {
    polynomial_substep(w, gen.b, 0.5 * h, N, opt.parallel);
#pragma omp parallel for if (opt.parallel) schedule(static, 1)
    for (int n = 1; n <= N; ++n) {
      if (opt.startup && k < 2) {
        P.startup_step(w[n], F);
      } else {
        P.cn_step(w[n], F);
      }
      if (opt.tilt != 0.0) w[n] *= growth[n];
    }
    polynomial_substep(w, gen.b, 0.5 * h, N, opt.parallel);
    if ((k + 1) % every == 0 || k + 1 == steps) {
      const double t = (k + 1 == steps) ? t_end : (k + 1) * h;
      snapshot(t);
      for (int n = 1; n <= N; ++n) {
        const double m = w[n].lpNorm<Eigen::Infinity>();
        if (m == 0.0) continue;
        const double log_raw = std::log(m) - n * opt.tilt * t;
        const double log_ceiling = std::log(10.0) + n * std::log(fnorm) + std::lgamma(n + 1.0) + n * b_star * t;
        if (!std::isfinite(m) || log_raw > log_ceiling)
          throw NumericalError("solve_moments: u_" + std::to_string(n) + " exceeds 10x the Yule ceiling at t = " +
                               std::to_string(t));
      }
    }
  }
  return mf;
}

std::vector<DuhamelCheck> duhamel_residuals(const MomentField& mf, const Vec& f, const GeneratorMatrix& gen,
                                            const std::vector<int>& idx) {
  if (mf.times.size() < 2) throw DomainError("duhamel_residuals: no snapshots");
  const double H = mf.times[1] - mf.times[0];
  Propagator P(gen.full(), mf.step);
  std::vector<DuhamelCheck> out;
  for (int K : idx) {
    if (K <= 0 || K >= static_cast<int>(mf.times.size())) throw DomainError("duhamel_residuals: bad snapshot index");
    const double t = mf.times[K];
    if (std::abs(t - K * H) > 1e-9 * std::max(1.0, t)) throw DomainError("duhamel_residuals: snapshots not uniform");
    const auto wts = simpson_weights(K, H);
    for (int n = 1; n <= mf.N; ++n) {
      Vec first = P.evolve(f.array().pow(n).matrix(), t, true) * std::exp(n * mf.tilt * t);
      Vec acc = Vec::Zero(f.size());
      if (n >= 2) {
        const double g = std::exp(n * mf.tilt * H);
        for (int j = K; j >= 0; --j) {
          if (j != K) acc = g * P.evolve(acc, H, false);
          const int r = K - j;  // integrand evaluated at t - s_j
          Vec G = Vec::Zero(f.size());
          for (int k = 1; k < n; ++k) G += binom(n, k) * mf.w[k][r].cwiseProduct(mf.w[n - k][r]);
          acc += wts[j] * gen.b.cwiseProduct(G);
        }
      }
      const Vec rhs = first + acc;
      const double scale = std::max(mf.w[n][K].lpNorm<Eigen::Infinity>(), 1e-300);
      out.push_back({n, t, (mf.w[n][K] - rhs).lpNorm<Eigen::Infinity>() / scale});
    }
  }
  return out;
}

CVec laplace_functional(const Vec& f, std::complex<double> w, double t_end, const GeneratorMatrix& gen, double b_star,
                        double dt) {
  const double fn = f.lpNorm<Eigen::Infinity>();
  const double radius = 1.0 / (std::max(fn, 1e-300) * std::exp(b_star * t_end));
  if (std::abs(w) >= radius)
    throw DomainError("laplace_functional: |w| = " + std::to_string(std::abs(w)) + " outside radius " +
                      std::to_string(radius));
  const int n = static_cast<int>(f.size());
  CVec H(n);
  for (int i = 0; i < n; ++i) H[i] = 1.0 - std::exp(w * f[i]);
  if (t_end == 0.0) return H;
  Propagator P(gen.full(), dt);
  const long steps = std::max(1L, static_cast<long>(std::ceil(t_end / dt - 1e-9)));
  const double h = (steps * dt == t_end) ? dt : t_end / steps;
  const auto& F = P.factor(h);
  auto substep = [&](double tau) {
    for (int i = 0; i < n; ++i) H[i] = H[i] / (1.0 + gen.b[i] * H[i] * tau);
  };
  for (long k = 0; k < steps; ++k) {
    substep(0.5 * h);
    if (k < 2) {
      P.startup_step(H, F);
    } else {
      P.cn_step(H, F);
    }
    substep(0.5 * h);
  }
  return H;
}

std::vector<Vec> laplace_moments(const Vec& f, int N, double t_end, const GeneratorMatrix& gen, double b_star,
                                 double dt, int points, double radius_fraction) {
  if (points <= N) throw DomainError("laplace_moments: need more contour points than orders");
  const double fn = std::max(f.lpNorm<Eigen::Infinity>(), 1e-300);
  const double r = radius_fraction / (fn * std::exp(b_star * t_end));
  std::vector<CVec> H(points);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < points; ++k) {
    const std::complex<double> w = std::polar(r, 2.0 * std::numbers::pi * k / points);
    H[k] = laplace_functional(f, w, t_end, gen, b_star, dt);
  }
  // H = -sum_n w^n u_n / n!
  std::vector<Vec> u(N + 1, Vec::Zero(f.size()));
  for (int n = 1; n <= N; ++n) {
    CVec a = CVec::Zero(f.size());
    for (int k = 0; k < points; ++k) a += H[k] * std::polar(1.0, -2.0 * std::numbers::pi * k * n / points);
    a /= static_cast<double>(points) * std::pow(r, n);
    u[n] = -std::tgamma(n + 1.0) * a.real();
  }
  return u;
}

}  // namespace mvb
