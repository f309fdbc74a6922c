#include "mvb/curve.hpp"

#include <algorithm>
#include <cmath>

// boost 1.74 pchip calls unqualified isnan; math.h puts it in the global namespace
#include <math.h>

#include <boost/math/interpolators/pchip.hpp>

#include "mvb/error.hpp"

namespace mvb {

using nlohmann::json;

struct Curve::Table {
  boost::math::interpolators::pchip<std::vector<double>> interp;
  std::vector<double> xs;
  std::vector<double> ys;
  double x_lo;
  double x_hi;
  double y_lo;
  double y_hi;
};

Curve::Curve() : family_(CurveFamily::kConstant), params_{0.0} {}

Curve Curve::constant(double c) {
  Curve out;
  out.family_ = CurveFamily::kConstant;
  out.params_ = {c};
  return out;
}

Curve Curve::gaussian_bump(double base, double amp, double center, double width) {
  if (!(width > 0.0)) throw ConfigError("gaussian-bump width must be positive");
  Curve out;
  out.family_ = CurveFamily::kGaussianBump;
  out.params_ = {base, amp, center, width};
  return out;
}

Curve Curve::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  Curve out;
  out.family_ = CurveFamily::kPolynomial;
  out.params_ = std::move(coeffs);
  return out;
}

Curve Curve::abs_polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  Curve out;
  out.family_ = CurveFamily::kAbsPolynomial;
  out.params_ = std::move(coeffs);
  return out;
}

Curve Curve::lorentzian(double base, double amp, double center, double width) {
  if (!(width > 0.0)) throw ConfigError("lorentzian width must be positive");
  Curve out;
  out.family_ = CurveFamily::kLorentzian;
  out.params_ = {base, amp, center, width};
  return out;
}

Curve Curve::sine(double amp, double freq, double phase) {
  Curve out;
  out.family_ = CurveFamily::kSine;
  out.params_ = {amp, freq, phase};
  return out;
}

Curve Curve::table(std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() != ys.size()) throw ConfigError("table curve: xs and ys differ in length");
  if (xs.size() < 4) throw ConfigError("table curve: at least four points required");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw ConfigError("table curve: xs must be strictly increasing");
  }
  Curve out;
  out.family_ = CurveFamily::kTable;
  auto xs_copy = xs;
  auto ys_copy = ys;
  const double x_lo = xs.front(), x_hi = xs.back(), y_lo = ys.front(), y_hi = ys.back();
  out.table_ = std::make_shared<const Table>(
      Table{boost::math::interpolators::pchip<std::vector<double>>(std::move(xs_copy), std::move(ys_copy)),
            std::move(xs), std::move(ys), x_lo, x_hi, y_lo, y_hi});
  return out;
}

double Curve::eval_raw(double x) const {
  const auto& p = params_;
  switch (family_) {
    case CurveFamily::kConstant:
      return p[0];
    case CurveFamily::kGaussianBump: {
      const double z = (x - p[2]) / p[3];
      return p[0] + p[1] * std::exp(-0.5 * z * z);
    }
    case CurveFamily::kPolynomial: {
      double acc = 0.0;
      for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
      return acc;
    }
    case CurveFamily::kAbsPolynomial: {
      const double ax = std::abs(x);
      double acc = 0.0;
      for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * ax + *it;
      return acc;
    }
    case CurveFamily::kLorentzian: {
      const double z = (x - p[2]) / p[3];
      return p[0] + p[1] / (1.0 + z * z);
    }
    case CurveFamily::kSine:
      return p[0] * std::sin(p[1] * x + p[2]);
    case CurveFamily::kTable: {
      if (x <= table_->x_lo) return table_->y_lo;
      if (x >= table_->x_hi) return table_->y_hi;
      return table_->interp(x);
    }
  }
  return 0.0;
}

double Curve::deriv_raw(double x) const {
  const auto& p = params_;
  switch (family_) {
    case CurveFamily::kConstant:
      return 0.0;
    case CurveFamily::kGaussianBump: {
      const double z = (x - p[2]) / p[3];
      return -p[1] * z / p[3] * std::exp(-0.5 * z * z);
    }
    case CurveFamily::kPolynomial: {
      double acc = 0.0;
      for (std::size_t k = p.size(); k-- > 1;) acc = acc * x + static_cast<double>(k) * p[k];
      return acc;
    }
    case CurveFamily::kAbsPolynomial: {
      const double ax = std::abs(x);
      double acc = 0.0;
      for (std::size_t k = p.size(); k-- > 1;) acc = acc * ax + static_cast<double>(k) * p[k];
      // d|x|/dx at 0 taken as 0 (one-sided derivatives average)
      const double sgn = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
      return sgn * acc;
    }
    case CurveFamily::kLorentzian: {
      const double z = (x - p[2]) / p[3];
      const double den = 1.0 + z * z;
      return -2.0 * p[1] * z / (p[3] * den * den);
    }
    case CurveFamily::kSine:
      return p[0] * p[1] * std::cos(p[1] * x + p[2]);
    case CurveFamily::kTable: {
      if (x <= table_->x_lo || x >= table_->x_hi) return 0.0;
      return table_->interp.prime(x);
    }
  }
  return 0.0;
}

double Curve::operator()(double x) const { return scale_ * eval_raw(x) + offset_; }

double Curve::derivative(double x) const { return scale_ * deriv_raw(x); }

Curve Curve::shifted(double c) const {
  Curve out = *this;
  out.offset_ += c;
  return out;
}

Curve Curve::scaled(double k) const {
  Curve out = *this;
  out.scale_ *= k;
  out.offset_ *= k;
  return out;
}

bool Curve::is_constant() const {
  switch (family_) {
    case CurveFamily::kConstant:
      return true;
    case CurveFamily::kGaussianBump:
    case CurveFamily::kLorentzian:
    case CurveFamily::kSine:
      return params_[1] == 0.0 || scale_ == 0.0;
    case CurveFamily::kPolynomial:
    case CurveFamily::kAbsPolynomial:
      return scale_ == 0.0 ||
             std::all_of(params_.begin() + 1, params_.end(), [](double c) { return c == 0.0; });
    case CurveFamily::kTable:
      return scale_ == 0.0 ||
             std::all_of(table_->ys.begin(), table_->ys.end(), [&](double y) { return y == table_->ys[0]; });
  }
  return false;
}

bool Curve::is_zero() const { return is_constant() && (*this)(0.0) == 0.0; }

std::string to_string(CurveFamily f) {
  switch (f) {
    case CurveFamily::kConstant: return "constant";
    case CurveFamily::kGaussianBump: return "gaussian-bump";
    case CurveFamily::kPolynomial: return "polynomial";
    case CurveFamily::kAbsPolynomial: return "abs-polynomial";
    case CurveFamily::kLorentzian: return "lorentzian";
    case CurveFamily::kSine: return "sine";
    case CurveFamily::kTable: return "table";
  }
  return "unknown";
}

json Curve::to_json() const {
  json j;
  j["family"] = to_string(family_);
  json params;
  const auto& p = params_;
  switch (family_) {
    case CurveFamily::kConstant:
      params["value"] = p[0];
      break;
    case CurveFamily::kGaussianBump:
    case CurveFamily::kLorentzian:
      params = {{"base", p[0]}, {"amp", p[1]}, {"center", p[2]}, {"width", p[3]}};
      break;
    case CurveFamily::kPolynomial:
    case CurveFamily::kAbsPolynomial:
      params["coeffs"] = p;
      break;
    case CurveFamily::kSine:
      params = {{"amp", p[0]}, {"freq", p[1]}, {"phase", p[2]}};
      break;
    case CurveFamily::kTable:
      params = {{"xs", table_->xs}, {"ys", table_->ys}};
      break;
  }
  j["params"] = params;
  if (offset_ != 0.0) j["offset"] = offset_;
  if (scale_ != 1.0) j["scale"] = scale_;
  return j;
}

namespace {

double num(const json& params, const char* key, const std::string& path) {
  if (!params.contains(key)) throw ConfigError("missing key: " + path + ".params." + key);
  if (!params.at(key).is_number()) throw ConfigError("expected number at " + path + ".params." + key);
  return params.at(key).get<double>();
}

double num_or(const json& params, const char* key, double fallback) {
  return params.contains(key) ? params.at(key).get<double>() : fallback;
}

}  // namespace

Curve Curve::from_json(const json& j, const std::string& path) {
  if (j.is_number()) return Curve::constant(j.get<double>());
  if (!j.is_object()) throw ConfigError("expected curve object at " + path);
  if (!j.contains("family")) throw ConfigError("missing key: " + path + ".family");
  const auto family = j.at("family").get<std::string>();
  const json params = j.value("params", json::object());
  Curve c;
  if (family == "constant") {
    c = Curve::constant(num(params, "value", path));
  } else if (family == "gaussian-bump") {
    c = Curve::gaussian_bump(num_or(params, "base", 0.0), num(params, "amp", path), num_or(params, "center", 0.0),
                             num(params, "width", path));
  } else if (family == "lorentzian") {
    c = Curve::lorentzian(num_or(params, "base", 0.0), num(params, "amp", path), num_or(params, "center", 0.0),
                          num(params, "width", path));
  } else if (family == "polynomial" || family == "polynomial-plus-constant") {
    if (!params.contains("coeffs")) throw ConfigError("missing key: " + path + ".params.coeffs");
    c = Curve::polynomial(params.at("coeffs").get<std::vector<double>>());
  } else if (family == "abs-polynomial") {
    if (!params.contains("coeffs")) throw ConfigError("missing key: " + path + ".params.coeffs");
    c = Curve::abs_polynomial(params.at("coeffs").get<std::vector<double>>());
  } else if (family == "sine") {
    c = Curve::sine(num(params, "amp", path), num_or(params, "freq", 1.0), num_or(params, "phase", 0.0));
  } else if (family == "table") {
    if (!params.contains("xs") || !params.contains("ys")) throw ConfigError("missing key: " + path + ".params.xs/ys");
    c = Curve::table(params.at("xs").get<std::vector<double>>(), params.at("ys").get<std::vector<double>>());
  } else {
    throw ConfigError("unknown curve family '" + family + "' at " + path);
  }
  if (j.contains("scale")) c = c.scaled(j.at("scale").get<double>());
  if (j.contains("offset")) c = c.shifted(j.at("offset").get<double>());
  return c;
}

}  // namespace mvb
