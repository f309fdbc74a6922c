#include "mvb/dynamics.hpp"

#include <cmath>
#include <string>

#include "mvb/error.hpp"

namespace mvb {

double step_diffusion(double x, double dt, double noise, const Curve& a) {
  return x - a(x) * dt + std::sqrt(dt) * noise;
}

std::pair<double, bool> step_with_jumps(double x, double dt, Stream& rng, const DynamicsSpec& dyn) {
  const double rate = dyn.R.total_mass(x);
  if (rate * dt > 0.1)
    throw ConfigError("dt too large for jump thinning: R~(x) dt = " + std::to_string(rate * dt) + " > 0.1");
  if (rng.uniform() < rate * dt) {
    const double u = rng.uniform();
    const double g = dyn.R.shape() == JumpShape::kGaussian ? rng.normal() : 0.0;
    return {x + dyn.R.offset_from(u, g), true};
  }
  if (dyn.variant == Variant::kDriftedJump) return {x + dt, false};
  return {step_diffusion(x, dt, rng.normal(), dyn.a), false};
}

double motion_step(double x, double dt, Stream& rng, const DynamicsSpec& dyn, bool* jumped) {
  bool j = false;
  switch (dyn.variant) {
    case Variant::kStatic:
      break;
    case Variant::kDiffusion:
      x = step_diffusion(x, dt, rng.normal(), dyn.a);
      break;
    case Variant::kDiffusionWithJumps:
    case Variant::kDriftedJump:
      std::tie(x, j) = step_with_jumps(x, dt, rng, dyn);
      break;
  }
  if (jumped) *jumped = j;
  return x;
}

void check_thinning(const DynamicsSpec& dyn, double dt, double radius) {
  if (dyn.variant != Variant::kDiffusionWithJumps && dyn.variant != Variant::kDriftedJump) return;
  double sup = 0.0;
  for (int i = 0; i <= 2000; ++i) sup = std::max(sup, dyn.R.total_mass(-radius + i * radius / 1000.0));
  if (sup * dt > 0.1)
    throw ConfigError("dt too large for jump thinning: sup R~ dt = " + std::to_string(sup * dt) + " > 0.1");
}

PathSegment sample_path(double x0, double t_end, double dt, const DynamicsSpec& dyn, std::uint64_t seed) {
  if (t_end < 0.0) throw DomainError("sample_path: t_end must be nonnegative");
  if (!(dt > 0.0)) throw DomainError("sample_path: dt must be positive");
  PathSegment p;
  p.times.push_back(0.0);
  p.states.push_back(x0);
  p.jumped.push_back(false);
  Stream rng(seed);
  double t = 0.0, x = x0;
  while (t < t_end) {
    double h = dt;
    // shorten the last step so the path ends at t_end exactly; absorb round-off slivers
    if (t + h >= t_end - 1e-12 * std::max(1.0, t_end)) h = t_end - t;
    bool j = false;
    x = motion_step(x, h, rng, dyn, &j);
    t = (h == t_end - p.times.back()) ? t_end : t + h;
    p.times.push_back(t);
    p.states.push_back(x);
    p.jumped.push_back(j);
  }
  return p;
}

}  // namespace mvb
