#include <cmath>

#include "mvb/error.hpp"
#include "mvb/semigroup.hpp"

namespace mvb {

Propagator::Propagator(SpMat L, double dt) : L_(std::move(L)), dt_(dt) {
  if (!(dt > 0.0)) throw DomainError("propagator step must be positive");
  L_.makeCompressed();
}

const Propagator::Factor& Propagator::factor(double h) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(h);
  if (it != cache_.end()) return *it->second;
  auto f = std::make_unique<Factor>();
  f->h = h;
  SpMat I(L_.rows(), L_.cols());
  I.setIdentity();
  SpMat lhs = I - (0.5 * h) * L_;
  lhs.makeCompressed();
  f->lu.compute(lhs);
  if (f->lu.info() != Eigen::Success) throw NumericalError("propagator: factorization failed");
  f->rhs = I + (0.5 * h) * L_;
  f->rhs.makeCompressed();
  auto& ref = *f;
  cache_.emplace(h, std::move(f));
  return ref;
}

void Propagator::cn_step(Vec& u, const Factor& f) const {
  Vec r = f.rhs * u;
  u = f.lu.solve(r);
}

void Propagator::startup_step(Vec& u, const Factor& f) const {
  u = f.lu.solve(u);
  u = f.lu.solve(u);
}

void Propagator::cn_step(CVec& u, const Factor& f) const {
  Vec re = u.real(), im = u.imag();
  cn_step(re, f);
  cn_step(im, f);
  u.real() = re;
  u.imag() = im;
}

void Propagator::startup_step(CVec& u, const Factor& f) const {
  Vec re = u.real(), im = u.imag();
  startup_step(re, f);
  startup_step(im, f);
  u.real() = re;
  u.imag() = im;
}

Vec Propagator::evolve(const Vec& g, double t, bool startup) const {
  if (t < 0.0) throw DomainError("evolve: negative time");
  Vec u = g;
  if (t == 0.0) return u;
  const long n = std::max(1L, static_cast<long>(std::ceil(t / dt_ - 1e-9)));
  const double h = (n * dt_ == t) ? dt_ : t / n;
  const Factor& f = factor(h);
  for (long k = 0; k < n; ++k) {
    if (startup && k < 2) {
      startup_step(u, f);
    } else {
      cn_step(u, f);
    }
  }
  return u;
}

Vec evolve_P(const Vec& g, double t, const GeneratorMatrix& gen, double dt, bool startup) {
  Propagator p(gen.full(), dt);
  return p.evolve(g, t, startup);
}

Vec evolve_Q(const Vec& g, double t, const GeneratorMatrix& gen, double dt, bool startup) {
  Propagator p(q_generator(gen).full(), dt);
  return p.evolve(g, t, startup);
}

}  // namespace mvb
