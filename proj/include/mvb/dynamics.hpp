#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mvb/model.hpp"
#include "mvb/rng.hpp"

namespace mvb {

struct PathSegment {
  std::vector<double> times;
  std::vector<double> states;
  std::vector<bool> jumped;  // jumped[k]: step ending at times[k] was a jump (jumped[0] = false)
};

// Euler-Maruyama for dX = dB - a(X) dt.
double step_diffusion(double x, double dt, double noise, const Curve& a);

// Throws ConfigError when R~(x) dt > 0.1.
std::pair<double, bool> step_with_jumps(double x, double dt, Stream& rng, const DynamicsSpec& dyn);

// One motion step for any variant (static: unchanged).
double motion_step(double x, double dt, Stream& rng, const DynamicsSpec& dyn, bool* jumped = nullptr);

// Verifies sup R~ dt <= 0.1 over [-radius, radius].
void check_thinning(const DynamicsSpec& dyn, double dt, double radius);

PathSegment sample_path(double x0, double t_end, double dt, const DynamicsSpec& dyn, std::uint64_t seed);

}  // namespace mvb
