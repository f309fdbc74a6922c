#include <cmath>

#include "mvb/error.hpp"
#include "mvb/model.hpp"

namespace mvb {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError("missing key: " + path + "." + key);
  return j.at(key);
}

std::optional<double> opt_num(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

json RateModel::to_json() const { return {{"b", b.to_json()}, {"d", d.to_json()}, {"b_star", b_star}}; }

RateModel RateModel::from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("expected object at " + path);
  auto b = Curve::from_json(require(j, "b", path), path + ".b");
  auto d = Curve::from_json(require(j, "d", path), path + ".d");
  return RateModel(std::move(b), std::move(d), opt_num(j, "b_star"));
}

json JumpKernel::to_json() const {
  return {{"shape", shape_ == JumpShape::kUniform ? "uniform" : "gaussian"},
          {"scale", scale_},
          {"rate", rate_.to_json()}};
}

JumpKernel JumpKernel::from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("expected object at " + path);
  const auto shape = j.value("shape", std::string("uniform"));
  JumpShape s;
  if (shape == "uniform") {
    s = JumpShape::kUniform;
  } else if (shape == "gaussian") {
    s = JumpShape::kGaussian;
  } else {
    throw ConfigError("unknown jump shape '" + shape + "' at " + path);
  }
  return JumpKernel(s, require(j, "scale", path).get<double>(), Curve::from_json(require(j, "rate", path), path + ".rate"));
}

json HypothesisConstants::to_json() const {
  json j{{"C", ha_C}, {"beta", ha_beta}, {"gamma", ha_gamma}, {"hd_c", hd_c}, {"hd_cprime", hd_cprime}};
  if (hd_radius) j["hd_radius"] = *hd_radius;
  if (hj_m4) j["hj_m4"] = *hj_m4;
  if (hj4_eps) j["hj4_eps"] = *hj4_eps;
  if (hj4_k0) j["hj4_k0"] = *hj4_k0;
  return j;
}

HypothesisConstants HypothesisConstants::from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("expected object at " + path);
  HypothesisConstants h;
  h.ha_C = j.value("C", h.ha_C);
  h.ha_beta = j.value("beta", h.ha_beta);
  h.ha_gamma = j.value("gamma", h.ha_gamma);
  h.hd_c = j.value("hd_c", h.hd_c);
  h.hd_cprime = j.value("hd_cprime", h.hd_cprime);
  h.hd_radius = opt_num(j, "hd_radius");
  h.hj_m4 = opt_num(j, "hj_m4");
  h.hj4_eps = opt_num(j, "hj4_eps");
  h.hj4_k0 = opt_num(j, "hj4_k0");
  return h;
}

json DynamicsSpec::to_json() const {
  json j{{"variant", to_string(variant)}};
  if (has_drift_curve()) j["a"] = a.to_json();
  if (variant == Variant::kDiffusionWithJumps || variant == Variant::kDriftedJump) j["R"] = R.to_json();
  j["hypothesis_constants"] = constants.to_json();
  return j;
}

DynamicsSpec DynamicsSpec::from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("expected object at " + path);
  DynamicsSpec d;
  d.variant = variant_from_string(require(j, "variant", path).get<std::string>());
  if (d.has_drift_curve()) d.a = j.contains("a") ? Curve::from_json(j.at("a"), path + ".a") : Curve::constant(0.0);
  if (d.variant == Variant::kDiffusionWithJumps || d.variant == Variant::kDriftedJump)
    d.R = JumpKernel::from_json(require(j, "R", path), path + ".R");
  if (j.contains("hypothesis_constants"))
    d.constants = HypothesisConstants::from_json(j.at("hypothesis_constants"), path + ".hypothesis_constants");
  return d;
}

}  // namespace mvb
