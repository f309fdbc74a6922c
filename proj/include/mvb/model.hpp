#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvb/curve.hpp"
#include "mvb/grid.hpp"

namespace mvb {

// Birth rate b, death rate d. b_star is sup b (declared, or scanned when absent).
struct RateModel {
  Curve b;
  Curve d;
  double b_star = 0.0;

  RateModel() = default;
  RateModel(Curve birth, Curve death, std::optional<double> declared_b_star = std::nullopt);

  double potential(double x) const { return b(x) - d(x); }
  bool constant_rates() const { return b.is_constant() && d.is_constant(); }

  // d -> d - theta (the calibration knob)
  RateModel with_death_shift(double theta) const;

  nlohmann::json to_json() const;
  static RateModel from_json(const nlohmann::json& j, const std::string& path = "model");
};

inline double potential(const RateModel& m, double x) { return m.potential(x); }

enum class JumpShape { kUniform, kGaussian };

// R(y, dz) = rate(y) * k(z - y) dz with k a symmetric probability density.
class JumpKernel {
 public:
  JumpKernel() = default;
  JumpKernel(JumpShape shape, double scale, Curve rate);

  JumpShape shape() const { return shape_; }
  double scale() const { return scale_; }  // half-width (uniform) or sigma (gaussian)
  const Curve& rate() const { return rate_; }
  double total_mass(double y) const { return rate_(y); }
  bool absent() const { return rate_.is_zero(); }

  // P(Z - y <= u)
  double offset_cdf(double u) const;
  // E|Z - y|^4
  double fourth_moment() const;
  // density of the offset at u (per unit rate)
  double offset_density(double u) const;
  // offset from a uniform in (0,1) and, for the gaussian, a standard normal
  double offset_from(double uniform, double normal) const;

  nlohmann::json to_json() const;
  static JumpKernel from_json(const nlohmann::json& j, const std::string& path);

 private:
  JumpShape shape_ = JumpShape::kUniform;
  double scale_ = 1.0;
  Curve rate_;
};

enum class Variant { kStatic, kDiffusion, kDiffusionWithJumps, kDriftedJump };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct HypothesisConstants {
  double ha_C = 10.0;      // |a| <= C(|x|+1)
  double ha_beta = 10.0;   // |l| <= gamma + beta |x|
  double ha_gamma = 10.0;
  double hd_c = 0.2;       // d >= c|x| - c' for |x| >= R
  double hd_cprime = 0.0;
  std::optional<double> hd_radius;  // default: half the grid half-width
  std::optional<double> hj_m4;      // declared bound on sup_y int (1+|z-y|^4) R(y,dz)
  std::optional<double> hj4_eps;
  std::optional<double> hj4_k0;

  nlohmann::json to_json() const;
  static HypothesisConstants from_json(const nlohmann::json& j, const std::string& path);
};

struct DynamicsSpec {
  Variant variant = Variant::kDiffusion;
  Curve a;  // drift, diffusion variants
  JumpKernel R;
  HypothesisConstants constants;

  bool has_drift_curve() const { return variant == Variant::kDiffusion || variant == Variant::kDiffusionWithJumps; }
  bool has_jumps() const {
    return (variant == Variant::kDiffusionWithJumps || variant == Variant::kDriftedJump) && !R.absent();
  }

  static DynamicsSpec static_motion();
  static DynamicsSpec diffusion(Curve a);
  static DynamicsSpec diffusion_with_jumps(Curve a, JumpKernel R);
  static DynamicsSpec drifted_jump(JumpKernel R);

  nlohmann::json to_json() const;
  static DynamicsSpec from_json(const nlohmann::json& j, const std::string& path = "dynamics");
};

struct EllRho {
  std::vector<double> ell;
  std::vector<double> rho;
};

// l(x) = int_0^x a, by adaptive Gauss-Kronrod between consecutive sorted points.
std::vector<double> ell_at(const Curve& a, const std::vector<double>& sorted_xs);
EllRho ell_and_rho(const DynamicsSpec& dyn, const Grid& grid);

struct HypothesisCheck {
  std::string name;
  bool pass = true;
  std::string detail;
  std::optional<double> witness;
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;
  double scan_radius = 0.0;

  bool all_pass() const;
  const HypothesisCheck* find(const std::string& name) const;
  nlohmann::json to_json() const;
};

// dt_report > 0 adds the absorbing-edge check V(edge) <= -5/dt_report.
ValidationReport validate_hypotheses(const RateModel& model, const DynamicsSpec& dyn, const Grid& grid,
                                     double dt_report = 0.0);

}  // namespace mvb
