#include <algorithm>
#include <cmath>

#include "mvb/error.hpp"
#include "mvb/semigroup.hpp"

namespace mvb {

namespace {

double gershgorin_right(const SpMat& L) {
  Vec diag = Vec::Zero(L.rows()), off = Vec::Zero(L.rows());
  for (int k = 0; k < L.outerSize(); ++k)
    for (SpMat::InnerIterator it(L, k); it; ++it) {
      if (it.row() == it.col()) {
        diag[it.row()] += it.value();
      } else {
        off[it.row()] += std::abs(it.value());
      }
    }
  return (diag + off).maxCoeff();
}

void normalize_positive(Vec& v) {
  const Eigen::Index imax = [&] {
    Eigen::Index i;
    v.cwiseAbs().maxCoeff(&i);
    return i;
  }();
  v /= v[imax];
}

}  // namespace

std::pair<double, Vec> rightmost_eigenpair(const SpMat& L, double tol, int max_iter, int* iters) {
  const int n = static_cast<int>(L.rows());
  SpMat I(n, n);
  I.setIdentity();
  const double sigma0 = gershgorin_right(L) + 1.0;
  double sigma = sigma0;
  auto factorize = [&](double s) {
    auto lu = std::make_unique<Eigen::SparseLU<SpMat>>();
    SpMat A = s * I - L;
    A.makeCompressed();
    lu->compute(A);
    if (lu->info() != Eigen::Success) throw NumericalError("eigensolver: shifted factorization failed");
    return lu;
  };
  auto lu = factorize(sigma);
  Vec v = Vec::Ones(n);
  double lam = sigma, prev = std::numeric_limits<double>::infinity();
  bool reshifted = false;
  int calm = 0;
  for (int k = 1; k <= max_iter; ++k) {
    Vec y = lu->solve(v);
    normalize_positive(y);
    Vec Ly = L * y;
    lam = y.dot(Ly) / y.dot(y);
    const double scale = std::max(1.0, std::abs(lam));
    const double dl = std::abs(lam - prev);
    prev = lam;
    v = y;
    if (!reshifted && dl <= 1e-4 * scale) {
      sigma = lam + 1e-3 * (sigma0 - lam) + 1e-9 * scale;
      lu = factorize(sigma);
      reshifted = true;
      calm = 0;
      continue;
    }
    calm = (dl <= tol * scale) ? calm + 1 : 0;
    if (reshifted && calm >= 2) {
      const double res = (Ly - lam * y).lpNorm<Eigen::Infinity>();
      if (res <= std::sqrt(tol) * scale) {
        if (iters) *iters = k;
        return {lam, y};
      }
    }
  }
  throw NumericalError("eigensolver stagnated (no convergence in " + std::to_string(max_iter) + " iterations)");
}

std::vector<double> spectrum_real_parts(const GeneratorMatrix& gen, int count) {
  const SpMat L = gen.full();
  const int n = gen.size();
  std::vector<double> re;
  if (gen.symmetrizable) {
    Vec diag(n), sub(std::max(0, n - 1));
    for (int i = 0; i < n; ++i) diag[i] = L.coeff(i, i);
    for (int i = 0; i + 1 < n; ++i) sub[i] = std::sqrt(std::max(0.0, L.coeff(i, i + 1) * L.coeff(i + 1, i)));
    // computeFromTridiagonal does not rescale its input and stalls on stiff grids
    const double shift = diag.mean();
    double scale = 1.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(diag[i] - shift));
    for (int i = 0; i + 1 < n; ++i) scale = std::max(scale, std::abs(sub[i]));
    Vec d2 = (diag.array() - shift) / scale;
    Vec s2 = sub / scale;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d2, s2, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver failed");
    const Vec& ev = es.eigenvalues();
    for (int i = n - 1; i >= 0; --i) re.push_back(ev[i] * scale + shift);
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(L), false);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    for (int i = 0; i < n; ++i) re.push_back(es.eigenvalues()[i].real());
    std::sort(re.begin(), re.end(), std::greater<>());
  }
  if (count > 0 && static_cast<int>(re.size()) > count) re.resize(count);
  return re;
}

double SpectralData::theta0_at(double x) const {
  if (x < grid.x_min || x > grid.x_max) {
    if (grid.boundary == Boundary::kAbsorbing) return 0.0;
    return x < grid.x_min ? theta0[0] : theta0[grid.size() - 1];
  }
  const double s = (x - grid.x_min) / grid.dx();
  const int i = std::min(static_cast<int>(s), grid.size() - 2);
  const double w = s - i;
  return (1.0 - w) * theta0[i] + w * theta0[i + 1];
}

nlohmann::json SpectralData::to_json() const {
  return {{"grid", grid.to_json()}, {"lambda0", lambda0}, {"lambda1", lambda1}, {"gap", gap()},
          {"A", A},          {"B", B},         {"H", H},           {"eigen_residual", eigen_residual},
          {"theta0", to_std(theta0)}, {"mu0", to_std(mu0)}};
}

std::pair<double, double> constants_AB(const SpectralData& s, const Vec& b) {
  const double A = s.mu0.sum();
  const double B = (s.theta0.array().square() * b.array() * s.mu0.array()).sum();
  return {A, B};
}

SpectralData principal_eigentriple(const GeneratorMatrix& gen, const SpectralOptions& opt) {
  const SpMat L = gen.full();
  SpectralData s;
  s.grid = gen.grid;
  int it_r = 0, it_l = 0;
  auto [lr, vr] = rightmost_eigenpair(L, opt.tol, opt.max_iter, &it_r);
  SpMat Lt = L.transpose();
  auto [ll, vl] = rightmost_eigenpair(Lt, opt.tol, opt.max_iter, &it_l);
  s.iterations = it_r + it_l;
  s.lambda0 = -lr;
  if (vr.minCoeff() <= 0.0 && gen.grid.boundary == Boundary::kReflecting)
    throw NumericalError("principal eigenvector not positive");
  // clamp round-off negatives at absorbing edges
  s.theta0 = vr.cwiseMax(0.0);
  s.theta0 /= s.theta0.maxCoeff();
  Vec mu = vl.cwiseMax(0.0);
  mu /= mu.dot(s.theta0);
  s.mu0 = mu;
  std::tie(s.A, s.B) = constants_AB(s, gen.b);
  s.eigen_residual = (L * s.theta0 + s.lambda0 * s.theta0).lpNorm<Eigen::Infinity>();

  const auto re = spectrum_real_parts(gen, 2);
  if (re.size() < 2) throw NumericalError("spectrum too small for a gap");
  s.lambda1 = -re[1];
  const double scale = std::max(1.0, std::abs(s.lambda0));
  if (std::abs(-re[0] - s.lambda0) > 1e-6 * scale)
    throw NumericalError("inverse iteration and full spectrum disagree on lambda0");
  if (!(s.lambda1 - s.lambda0 > 1e-8 * scale)) throw NumericalError("spectral gap not resolved (lambda1 <= lambda0)");

  if (opt.fit_H) {
    const Grid& g = gen.grid;
    const double hw = g.half_width(), mid = 0.5 * (g.x_min + g.x_max);
    std::vector<Vec> tests;
    tests.push_back(Vec::Ones(g.size()));
    tests.push_back(sample_on(g, Curve::gaussian_bump(0.0, 1.0, mid, 0.25 * hw)));
    tests.push_back(sample_on(g, Curve::gaussian_bump(0.0, 1.0, mid + 0.3 * hw, 0.1 * hw)));
    Vec ind(g.size());
    for (int i = 0; i < g.size(); ++i) ind[i] = (g.x(i) >= mid && g.x(i) <= mid + 0.5 * hw) ? 1.0 : 0.0;
    tests.push_back(ind);
    const double gap = s.gap();
    const std::vector<double> ts{0.5 / gap, 1.0 / gap, 2.0 / gap, 3.0 / gap};
    Propagator P(L, std::min(opt.dt_pde, 0.05 / gap));
    double H = 0.0;
    for (const Vec& f : tests) {
      Vec u = f;
      double t_prev = 0.0;
      for (std::size_t k = 0; k < ts.size(); ++k) {
        u = P.evolve(u, ts[k] - t_prev, k == 0);
        t_prev = ts[k];
        const Vec dev = std::exp(s.lambda0 * ts[k]) * u - s.project(f);
        H = std::max(H, std::exp(gap * ts[k]) * dev.lpNorm<Eigen::Infinity>() / f.lpNorm<Eigen::Infinity>());
      }
    }
    s.H = H;
  }
  return s;
}

nlohmann::json GirsanovReport::to_json() const {
  return {{"eig_drift", eig_drift},
          {"eig_conjugate", eig_conjugate},
          {"max_eig_diff", max_eig_diff},
          {"ground_state_rel_err", ground_state_rel_err},
          {"ground_state_pass", ground_state_pass},
          {"pass", pass}};
}

GirsanovReport girsanov_crosscheck(const RateModel& model, const DynamicsSpec& dyn, const Grid& grid, int count,
                                   double tol) {
  if (dyn.variant != Variant::kDiffusion) throw NotApplicable("girsanov cross-check needs the diffusion variant");
  GirsanovReport rep;
  const auto gen = build_generator(model, dyn, grid);
  // 1/2 f'' + V~ f with V~ = V + (a' - a^2)/2
  Curve a = dyn.a;
  Vec vt(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const double x = grid.x(i);
    vt[i] = model.potential(x) + 0.5 * (a.derivative(x) - a(x) * a(x));
  }
  const auto flat = build_generator(model, DynamicsSpec::diffusion(Curve::constant(0.0)), grid).with_potential(vt);
  rep.eig_drift = spectrum_real_parts(gen, count);
  rep.eig_conjugate = spectrum_real_parts(flat, count);
  for (int k = 0; k < count; ++k)
    rep.max_eig_diff = std::max(rep.max_eig_diff, std::abs(rep.eig_drift[k] - rep.eig_conjugate[k]));

  SpectralOptions so;
  so.fit_H = false;
  const auto s1 = principal_eigentriple(gen, so);
  const auto s2 = principal_eigentriple(flat, so);
  const auto ell = ell_at(a, grid.nodes());
  Vec pred(grid.size());
  for (int i = 0; i < grid.size(); ++i) pred[i] = std::exp(ell[i]) * s2.theta0[i];
  pred /= pred.maxCoeff();
  // interior: where the ground state is not negligible
  double err = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    if (s1.theta0[i] < 1e-2) continue;
    err = std::max(err, std::abs(s1.theta0[i] - pred[i]) / s1.theta0[i]);
  }
  rep.ground_state_rel_err = err;
  rep.pass = rep.max_eig_diff <= tol;
  rep.ground_state_pass = err <= 1e-4;
  return rep;
}

nlohmann::json EdgeDecayReport::to_json() const {
  return {{"edge_max", edge_max}, {"interior_max", interior_max}, {"pass", pass}};
}

EdgeDecayReport hp4_edge_decay(const GeneratorMatrix& gen, double t, double dt) {
  if (!(t > 0.0)) throw DomainError("hp4_edge_decay: t must be positive");
  const int n = gen.size();
  const Vec u = evolve_P(Vec::Ones(n), t, gen, dt);
  const int edge = std::max(1, static_cast<int>(std::ceil(0.05 * n)));
  EdgeDecayReport r;
  for (int i = 0; i < n; ++i) {
    if (i < edge || i >= n - edge) {
      r.edge_max = std::max(r.edge_max, u[i]);
    } else {
      r.interior_max = std::max(r.interior_max, u[i]);
    }
  }
  r.pass = r.edge_max < 1e-3 * r.interior_max;
  return r;
}

}  // namespace mvb
