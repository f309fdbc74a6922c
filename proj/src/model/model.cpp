#include "mvb/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mvb/error.hpp"

namespace mvb {

namespace {

double scan_sup(const Curve& c) {
  double s = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 20000; ++i) s = std::max(s, c(-50.0 + 0.005 * i));
  return s;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

RateModel::RateModel(Curve birth, Curve death, std::optional<double> declared_b_star)
    : b(std::move(birth)), d(std::move(death)) {
  b_star = declared_b_star ? *declared_b_star : std::max(0.0, scan_sup(b));
  if (!std::isfinite(b_star) || b_star < 0.0) throw ConfigError("b_star must be finite and nonnegative");
}

RateModel RateModel::with_death_shift(double theta) const {
  RateModel out = *this;
  out.d = d.shifted(-theta);
  return out;
}

// ---- jump kernel

JumpKernel::JumpKernel(JumpShape shape, double scale, Curve rate) : shape_(shape), scale_(scale), rate_(std::move(rate)) {
  if (!(scale > 0.0)) throw ConfigError("jump kernel scale must be positive");
}

double JumpKernel::offset_cdf(double u) const {
  if (shape_ == JumpShape::kUniform) return std::clamp((u + scale_) / (2.0 * scale_), 0.0, 1.0);
  return 0.5 * std::erfc(-u / (scale_ * std::numbers::sqrt2));
}

double JumpKernel::offset_density(double u) const {
  if (shape_ == JumpShape::kUniform) return std::abs(u) < scale_ ? 0.5 / scale_ : 0.0;
  const double z = u / scale_;
  return std::exp(-0.5 * z * z) / (scale_ * std::sqrt(2.0 * std::numbers::pi));
}

double JumpKernel::fourth_moment() const {
  const double s4 = std::pow(scale_, 4);
  return shape_ == JumpShape::kUniform ? s4 / 5.0 : 3.0 * s4;
}

double JumpKernel::offset_from(double uniform, double normal) const {
  if (shape_ == JumpShape::kUniform) return scale_ * (2.0 * uniform - 1.0);
  return scale_ * normal;
}

// ---- dynamics

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kStatic: return "static";
    case Variant::kDiffusion: return "diffusion";
    case Variant::kDiffusionWithJumps: return "diffusion-with-jumps";
    case Variant::kDriftedJump: return "drifted-jump";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& s) {
  if (s == "static") return Variant::kStatic;
  if (s == "diffusion") return Variant::kDiffusion;
  if (s == "diffusion-with-jumps") return Variant::kDiffusionWithJumps;
  if (s == "drifted-jump") return Variant::kDriftedJump;
  throw ConfigError("unknown dynamics variant '" + s + "'");
}

DynamicsSpec DynamicsSpec::static_motion() {
  DynamicsSpec d;
  d.variant = Variant::kStatic;
  return d;
}

DynamicsSpec DynamicsSpec::diffusion(Curve a) {
  DynamicsSpec d;
  d.variant = Variant::kDiffusion;
  d.a = std::move(a);
  return d;
}

DynamicsSpec DynamicsSpec::diffusion_with_jumps(Curve a, JumpKernel R) {
  DynamicsSpec d;
  d.variant = Variant::kDiffusionWithJumps;
  d.a = std::move(a);
  d.R = std::move(R);
  return d;
}

DynamicsSpec DynamicsSpec::drifted_jump(JumpKernel R) {
  DynamicsSpec d;
  d.variant = Variant::kDriftedJump;
  d.R = std::move(R);
  return d;
}

// ---- l and rho

std::vector<double> ell_at(const Curve& a, const std::vector<double>& xs) {
  using boost::math::quadrature::gauss_kronrod;
  auto seg = [&](double lo, double hi) {
    if (lo == hi) return 0.0;
    return gauss_kronrod<double, 21>::integrate([&](double z) { return a(z); }, lo, hi, 15, 1e-12);
  };
  const std::size_t n = xs.size();
  std::vector<double> out(n, 0.0);
  if (a.is_zero() || n == 0) return out;
  // first point at or above zero
  const std::size_t k = std::lower_bound(xs.begin(), xs.end(), 0.0) - xs.begin();
  if (k < n) {
    out[k] = seg(0.0, xs[k]);
    for (std::size_t i = k + 1; i < n; ++i) out[i] = out[i - 1] + seg(xs[i - 1], xs[i]);
  }
  if (k > 0) {
    out[k - 1] = -seg(xs[k - 1], 0.0);
    for (std::size_t i = k - 1; i-- > 0;) out[i] = out[i + 1] - seg(xs[i], xs[i + 1]);
  }
  return out;
}

EllRho ell_and_rho(const DynamicsSpec& dyn, const Grid& grid) {
  if (dyn.variant == Variant::kDriftedJump) throw NotApplicable("l and rho are undefined for the drifted-jump variant");
  EllRho out;
  out.ell = dyn.variant == Variant::kStatic ? std::vector<double>(grid.size(), 0.0) : ell_at(dyn.a, grid.nodes());
  out.rho.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) out.rho[i] = std::exp(-2.0 * out.ell[i]) * grid.dx();
  return out;
}

// ---- validation

bool ValidationReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const HypothesisCheck& c) { return c.pass; });
}

const HypothesisCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json j{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}};
    j["witness"] = c.witness ? nlohmann::json(*c.witness) : nlohmann::json(nullptr);
    arr.push_back(j);
  }
  return {{"all_pass", all_pass()}, {"scan_radius", scan_radius}, {"checks", arr}};
}

ValidationReport validate_hypotheses(const RateModel& model, const DynamicsSpec& dyn, const Grid& grid,
                                     double dt_report) {
  ValidationReport rep;
  const auto xs = grid.nodes();
  const auto& hc = dyn.constants;
  rep.scan_radius = std::max(std::abs(grid.x_min), std::abs(grid.x_max));

  auto add = [&](std::string name, bool pass, std::string detail, std::optional<double> w = std::nullopt) {
    rep.checks.push_back({std::move(name), pass, std::move(detail), pass ? std::nullopt : w});
  };

  {  // HV1
    std::optional<double> neg;
    bool b_nonzero = false, d_nonzero = false;
    for (double x : xs) {
      const double bx = model.b(x), dx = model.d(x);
      if ((bx < 0.0 || dx < 0.0 || !std::isfinite(bx) || !std::isfinite(dx)) && !neg) neg = x;
      b_nonzero |= bx != 0.0;
      d_nonzero |= dx != 0.0;
    }
    std::string detail = neg ? "negative or non-finite rate" : (!b_nonzero ? "b vanishes on the grid" : (!d_nonzero ? "d vanishes on the grid" : "ok"));
    add("HV1", !neg && b_nonzero && d_nonzero, detail, neg ? neg : std::optional<double>(xs.front()));
  }
  {  // HV2
    double worst = -1e300;
    double where = xs.front();
    for (double x : xs) {
      const double v = model.b(x) - model.b_star;
      if (v > worst) worst = v, where = x;
    }
    const bool pass = std::isfinite(model.b_star) && worst <= 1e-12 * std::max(1.0, model.b_star);
    add("HV2", pass, pass ? "sup b <= b_star" : "b exceeds b_star by " + fmt(worst), where);
  }
  {  // HD
    const double R = hc.hd_radius ? *hc.hd_radius : 0.5 * grid.half_width();
    std::optional<double> w;
    for (double x : xs) {
      if (std::abs(x) < R) continue;
      if (model.d(x) < hc.hd_c * std::abs(x) - hc.hd_cprime) {
        w = x;
        break;
      }
    }
    add("HD", !w, "d >= " + fmt(hc.hd_c) + "|x| - " + fmt(hc.hd_cprime) + " for |x| >= " + fmt(R), w);
  }
  if (dyn.has_drift_curve()) {
    std::optional<double> w1, w2;
    const auto ell = ell_at(dyn.a, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double x = xs[i];
      if (!w1 && std::abs(dyn.a(x)) > hc.ha_C * (std::abs(x) + 1.0)) w1 = x;
      if (!w2 && std::abs(ell[i]) > hc.ha_gamma + hc.ha_beta * std::abs(x)) w2 = x;
    }
    add("HA1", !w1, "|a| <= C(|x|+1), C=" + fmt(hc.ha_C), w1);
    add("HA2", !w2, "|l| <= gamma + beta|x|", w2);
    // a' - a^2 bounded above: the sup over the outer region may not exceed the inner sup
    const double R = 0.5 * grid.half_width();
    double inner = -1e300, outer = -1e300, where = 0.0;
    for (double x : xs) {
      const double a = dyn.a(x);
      const double g = dyn.a.derivative(x) - a * a;
      if (std::abs(x) < R) {
        inner = std::max(inner, g);
      } else if (g > outer) {
        outer = g;
        where = x;
      }
    }
    add("HA3", outer <= inner + 1e-12 * std::max(1.0, std::abs(inner)),
        "sup(a'-a^2): inner " + fmt(inner) + ", outer " + fmt(outer), where);
  }
  if (dyn.variant == Variant::kDiffusionWithJumps || dyn.variant == Variant::kDriftedJump) {
    double sup_rate = 0.0, where = xs.front();
    bool neg = false;
    for (double x : xs) {
      const double r = dyn.R.total_mass(x);
      neg |= r < 0.0;
      if (r > sup_rate) sup_rate = r, where = x;
    }
    const double m4 = sup_rate * (1.0 + dyn.R.fourth_moment());
    bool pass = !neg && std::isfinite(m4);
    if (hc.hj_m4) pass = pass && m4 <= *hc.hj_m4;
    add("HJ1", pass, "sup R~ = " + fmt(sup_rate) + ", M4 = " + fmt(m4), where);
    if (hc.hj4_eps && hc.hj4_k0) {
      const double eps = *hc.hj4_eps, k0 = *hc.hj4_k0;
      std::optional<double> w;
      const double dens = dyn.R.offset_density(eps * (1.0 - 1e-12));
      for (double x : xs) {
        if (dyn.R.total_mass(x) * dens < k0) {
          w = x;
          break;
        }
      }
      add("HJ4", !w, "R(x,dz) >= k0 on (x-eps, x+eps)", w);
    }
  }
  if (dt_report > 0.0 && grid.boundary == Boundary::kAbsorbing) {
    const double need = -5.0 / dt_report;
    const double vl = model.potential(grid.x_min), vr = model.potential(grid.x_max);
    const bool pass = vl <= need && vr <= need;
    add("grid_edge", pass, "V(edge) <= " + fmt(need) + " (V = " + fmt(vl) + ", " + fmt(vr) + ")",
        vl > need ? grid.x_min : grid.x_max);
  }
  return rep;
}

}  // namespace mvb
