#include <cmath>
#include <sstream>

#include "mvb/error.hpp"
#include "mvb/semigroup.hpp"

namespace mvb {

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec sample_on(const Grid& grid, const Curve& f) {
  Vec out(grid.size());
  for (int i = 0; i < grid.size(); ++i) out[i] = f(grid.x(i));
  return out;
}

SpMat GeneratorMatrix::full() const {
  SpMat L = motion;
  for (int i = 0; i < size(); ++i) L.coeffRef(i, i) += potential[i];
  L.makeCompressed();
  return L;
}

GeneratorMatrix GeneratorMatrix::with_potential(Vec v) const {
  GeneratorMatrix out = *this;
  out.potential = std::move(v);
  return out;
}

GeneratorMatrix q_generator(const GeneratorMatrix& gen) { return gen.with_potential(-(gen.b + gen.d)); }

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// conservative form of 1/2 f'' - a f' = 1/2 e^{2l} (e^{-2l} f')'
void add_diffusion(const Grid& grid, const Curve& a, Triplets& t, Vec& pi) {
  const int n = grid.size();
  const double h = grid.dx();
  std::vector<double> pts(2 * n + 1);
  for (int k = 0; k <= 2 * n; ++k) pts[k] = grid.x_min + (k - 1) * 0.5 * h;  // x_{-1/2}, x_0, ..., x_{n-1/2}
  const auto ell = ell_at(a, pts);
  auto node = [&](int i) { return ell[2 * i + 1]; };
  auto half_left = [&](int i) { return ell[2 * i]; };   // l_{i-1/2}
  auto half_right = [&](int i) { return ell[2 * i + 2]; };  // l_{i+1/2}
  const double c = 0.5 / (h * h);
  const bool absorbing = grid.boundary == Boundary::kAbsorbing;
  pi.resize(n);
  for (int i = 0; i < n; ++i) {
    pi[i] = std::exp(-2.0 * node(i));
    const double wl = c * std::exp(2.0 * (node(i) - half_left(i)));
    const double wr = c * std::exp(2.0 * (node(i) - half_right(i)));
    double diag = 0.0;
    if (i > 0) {
      t.emplace_back(i, i - 1, wl);
      diag -= wl;
    } else if (absorbing) {
      diag -= wl;  // ghost value 0
    }
    if (i < n - 1) {
      t.emplace_back(i, i + 1, wr);
      diag -= wr;
    } else if (absorbing) {
      diag -= wr;
    }
    t.emplace_back(i, i, diag);
  }
}

// +f' by forward differences
void add_unit_drift(const Grid& grid, Triplets& t) {
  const int n = grid.size();
  const double c = 1.0 / grid.dx();
  for (int i = 0; i < n; ++i) {
    if (i < n - 1) {
      t.emplace_back(i, i + 1, c);
      t.emplace_back(i, i, -c);
    } else if (grid.boundary == Boundary::kAbsorbing) {
      t.emplace_back(i, i, -c);
    }
  }
}

// L1 f(y) = int (f(z) - f(y)) R(y, dz); weights are the exact kernel masses of the dual cells
void add_jumps(const Grid& grid, const JumpKernel& R, Triplets& t) {
  const int n = grid.size();
  const double h = grid.dx();
  const double reach = R.shape() == JumpShape::kUniform ? R.scale() : 12.0 * R.scale();
  const int span = static_cast<int>(std::ceil(reach / h)) + 1;
  const bool absorbing = grid.boundary == Boundary::kAbsorbing;
  for (int i = 0; i < n; ++i) {
    const double rate = R.total_mass(grid.x(i));
    if (rate == 0.0) continue;
    const int lo = std::max(0, i - span), hi = std::min(n - 1, i + span);
    double diag = 0.0;
    for (int j = lo; j <= hi; ++j) {
      double mass;
      const double off = (j - i) * h;
      const double left = (j == 0) ? -1e300 : off - 0.5 * h;
      const double right = (j == n - 1) ? 1e300 : off + 0.5 * h;
      if (absorbing) {
        // out-of-grid jumps kill; only the dual cell itself counts
        mass = R.offset_cdf(off + 0.5 * h) - R.offset_cdf(off - 0.5 * h);
      } else {
        // reflecting: the tails fold onto the edge nodes
        mass = R.offset_cdf(right) - R.offset_cdf(left);
      }
      mass *= rate;
      if (j == i || mass == 0.0) continue;
      t.emplace_back(i, j, mass);
      diag -= mass;
    }
    if (absorbing) {
      // mass landing beyond the outer dual-cell faces
      const double out = rate * (R.offset_cdf(grid.x_min - 0.5 * h - grid.x(i)) +
                                 (1.0 - R.offset_cdf(grid.x_max + 0.5 * h - grid.x(i))));
      diag -= out;
    }
    t.emplace_back(i, i, diag);
  }
}

}  // namespace

GeneratorMatrix build_generator(const RateModel& model, const DynamicsSpec& dyn, const Grid& grid,
                                const GeneratorOptions& opt) {
  const int n = grid.size();
  if (opt.dt_report > 0.0 && grid.boundary == Boundary::kAbsorbing) {
    const double need = -5.0 / opt.dt_report;
    const double vl = model.potential(grid.x_min), vr = model.potential(grid.x_max);
    if (vl > need || vr > need) {
      // suggest a half-width where V drops below the threshold
      double r = std::max(std::abs(grid.x_min), std::abs(grid.x_max));
      for (int k = 0; k < 200 && (model.potential(-r) > need || model.potential(r) > need); ++k) r *= 1.1;
      std::ostringstream os;
      os << "grid too narrow: V(edge) = (" << vl << ", " << vr << ") exceeds " << need << "; try x_max >= " << r;
      throw DomainError(os.str());
    }
  }
  GeneratorMatrix g;
  g.grid = grid;
  g.variant = dyn.variant;
  g.b = sample_on(grid, model.b);
  g.d = sample_on(grid, model.d);
  g.potential = g.b - g.d;
  Triplets t;
  g.pi = Vec::Ones(n);
  switch (dyn.variant) {
    case Variant::kStatic:
      g.symmetrizable = true;
      break;
    case Variant::kDiffusion:
      add_diffusion(grid, dyn.a, t, g.pi);
      g.symmetrizable = true;
      break;
    case Variant::kDiffusionWithJumps:
      add_diffusion(grid, dyn.a, t, g.pi);
      if (!dyn.R.absent()) add_jumps(grid, dyn.R, t);
      g.symmetrizable = dyn.R.absent();
      break;
    case Variant::kDriftedJump:
      add_unit_drift(grid, t);
      if (!dyn.R.absent()) add_jumps(grid, dyn.R, t);
      g.symmetrizable = false;
      break;
  }
  g.motion.resize(n, n);
  g.motion.setFromTriplets(t.begin(), t.end());
  for (int i = 0; i < n; ++i) g.motion.coeffRef(i, i) += 0.0;  // keep an explicit diagonal
  g.motion.makeCompressed();
  return g;
}

}  // namespace mvb
