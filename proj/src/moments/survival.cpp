#include <algorithm>
#include <cmath>

#include "mvb/error.hpp"
#include "mvb/moments.hpp"

namespace mvb {

namespace {

SurvivalField march_survival(double t_end, const GeneratorMatrix& gen, const SurvivalOptions& opt, const Vec& init,
                             double dt) {
  std::vector<double> targets = opt.snapshot_times;
  if (targets.empty()) {
    const long m = std::max(1L, static_cast<long>(std::ceil(t_end / opt.snapshot_dt - 1e-9)));
    for (long k = 1; k <= m; ++k) targets.push_back(std::min(t_end, k * opt.snapshot_dt));
  }
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  targets.erase(std::remove_if(targets.begin(), targets.end(), [&](double x) { return x <= 0.0 || x > t_end; }),
                targets.end());
  if (targets.empty() || targets.back() < t_end) targets.push_back(t_end);

  SurvivalField out;
  out.grid = gen.grid;
  Vec u = init;
  out.times.push_back(opt.t_start);
  out.u.push_back(u);
  Propagator P(gen.full(), dt);
  const Vec& b = gen.b;
  double t = 0.0, h_prev = -1.0;
  long steps = 0;
  for (double target : targets) {
    while (t < target) {
      double h = dt;
      if (opt.stretch_ratio > 0.0) {
        while (2.0 * h <= opt.dt_max && 2.0 * h <= (opt.t_start + t) / opt.stretch_ratio) h *= 2.0;
      }
      const bool doubled = h_prev > 0.0 && h > h_prev;
      const bool landing = t + h >= target - 1e-12 * std::max(1.0, target);
      if (landing) h = target - t;
      if (h <= 0.0) break;
      const auto& F = P.factor(h);
      for (int i = 0; i < u.size(); ++i) u[i] /= 1.0 + b[i] * u[i] * 0.5 * h;
      if (steps < 2 || doubled) {
        P.startup_step(u, F);
      } else {
        P.cn_step(u, F);
      }
      for (int i = 0; i < u.size(); ++i) u[i] /= 1.0 + b[i] * u[i] * 0.5 * h;
      if (u.minCoeff() < -1e-10) throw NumericalError("solve_survival: positivity lost");
      ++steps;
      if (!landing) h_prev = h;
      t = landing ? target : t + h;
    }
    out.times.push_back(opt.t_start + target);
    out.u.push_back(u);
  }
  return out;
}

}  // namespace

SurvivalField solve_survival(double t_end, const GeneratorMatrix& gen, const SurvivalOptions& opt,
                             std::optional<Vec> init) {
  if (!(t_end > 0.0)) throw DomainError("solve_survival: t_end must be positive");
  const Vec u0 = init ? *init : Vec::Ones(gen.size());
  double dt = opt.dt;
  for (int attempt = 0;; ++attempt) {
    try {
      return march_survival(t_end, gen, opt, u0, dt);
    } catch (const NumericalError&) {
      if (attempt >= 2) throw;
      dt *= 0.5;  // step-size reduction before giving up
    }
  }
}

HResult solve_h(const GeneratorMatrix& gen, const HOptions& opt) {
  HResult r;
  const int n = gen.size();
  const SpMat L = gen.full();
  const Vec& b = gen.b;
  auto G = [&](const Vec& h) -> Vec { return L * h - b.cwiseProduct(h.cwiseProduct(h)); };

  // Q-route: Newton on L h - b h^2 = 0 from h = 1 (equivalently h = (-L_Q)^{-1}(2bh - bh^2))
  Vec h = Vec::Ones(n);
  Vec g = G(h);
  double gn = g.lpNorm<Eigen::Infinity>();
  const double scale = std::max(1.0, L.coeffs().cwiseAbs().maxCoeff());
  int it = 0;
  for (; it < opt.max_newton; ++it) {
    if (gn == 0.0) break;
    SpMat J = L;
    for (int i = 0; i < n; ++i) J.coeffRef(i, i) -= 2.0 * b[i] * h[i];
    J.makeCompressed();
    Eigen::SparseLU<SpMat> lu(J);
    if (lu.info() != Eigen::Success) throw NumericalError("solve_h: Newton Jacobian singular");
    const Vec delta = lu.solve(-g);
    double alpha = 1.0;
    bool accepted = false;
    while (alpha > 1e-6) {
      Vec trial = (h + alpha * delta).cwiseMax(0.0).cwiseMin(1.0);
      Vec gt = G(trial);
      const double tn = gt.lpNorm<Eigen::Infinity>();
      if (tn < (1.0 - 1e-4 * alpha) * gn || tn <= 1e-15 * scale) {
        h = trial;
        g = gt;
        gn = tn;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted || (alpha * delta).lpNorm<Eigen::Infinity>() <= 1e-3 * opt.tol) break;
  }
  if (gn > 1e-8 * scale && h.maxCoeff() > opt.tol)
    throw NumericalError("solve_h: Newton did not converge (residual " + std::to_string(gn) + ")");
  r.h_q = h;
  r.newton_iterations = it;

  // verify on the integral form: y(T) = int_0^T Q_s g ds with the tail below tol
  {
    const GeneratorMatrix q = q_generator(gen);
    const SpMat LQ = q.full();
    const double gamma = -rightmost_eigenpair(LQ, 1e-10, 2000).first;
    if (!(gamma > 0.0)) throw NumericalError("solve_h: Q semigroup does not decay");
    const Vec src = 2.0 * b.cwiseProduct(h) - b.cwiseProduct(h.cwiseProduct(h));
    const double T = std::log(std::max(1.0, src.lpNorm<Eigen::Infinity>() / gamma) / (0.1 * opt.tol)) / gamma;
    const long steps = std::max(1L, static_cast<long>(std::ceil(T / opt.dt)));
    const double dt = T / steps;
    Propagator P(LQ, dt);
    const auto& F = P.factor(dt);
    Vec y = Vec::Zero(n);
    for (long k = 0; k < steps; ++k) {
      Vec rhs = F.rhs * y + dt * src;
      y = F.lu.solve(rhs);
    }
    r.q_horizon = T;
    r.q_residual = (h - y).lpNorm<Eigen::Infinity>();
  }

  // u0-route: march du0 = L u0 - b u0^2 from 1 with backward Euler and doubling steps. CN at large steps
  // loses positivity on stiff modes; backward Euler keeps it and its fixed points are exactly the steady states.
  {
    SpMat I(n, n);
    I.setIdentity();
    Vec u = Vec::Ones(n);
    double t = 0.0, step = std::min(opt.dt, 1e-2);
    while (true) {
      Vec v = u;
      bool converged = false;
      for (int k = 0; k < 60; ++k) {
        const Vec F = v - step * G(v) - u;
        SpMat J = I - step * L;
        for (int i = 0; i < n; ++i) J.coeffRef(i, i) += 2.0 * step * b[i] * v[i];
        J.makeCompressed();
        Eigen::SparseLU<SpMat> lu(J);
        if (lu.info() != Eigen::Success) throw NumericalError("solve_h: implicit step singular");
        const Vec dv = lu.solve(-F);
        v = (v + dv).cwiseMax(0.0);
        if (dv.lpNorm<Eigen::Infinity>() <= 1e-14 * std::max(1.0, v.lpNorm<Eigen::Infinity>())) {
          converged = true;
          break;
        }
      }
      if (!converged) {
        step *= 0.25;
        if (step < 1e-12) throw NumericalError("solve_h: implicit u0 march stalled");
        continue;
      }
      const double change = (v - u).lpNorm<Eigen::Infinity>();
      u = v;
      t += step;
      if (t >= 2.0 && change <= 1e-3 * opt.tol && G(u).lpNorm<Eigen::Infinity>() <= 1e-3 * opt.tol * scale) break;
      if (t >= opt.max_time) throw NumericalError("solve_h: u0 did not settle before max_time");
      step *= 2.0;
    }
    r.h_u0 = u;
    r.u0_time = t;
  }
  r.disagreement = (r.h_q - r.h_u0).lpNorm<Eigen::Infinity>();
  r.agree = r.disagreement <= 3.0 * opt.tol;
  return r;
}

}  // namespace mvb
