#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace mvb {

enum class CurveFamily {
  kConstant,
  kGaussianBump,   // base + amp * exp(-(x-center)^2 / (2 width^2))
  kPolynomial,     // sum_k c_k x^k
  kAbsPolynomial,  // sum_k c_k |x|^k
  kLorentzian,     // base + amp / (1 + ((x-center)/width)^2)
  kSine,           // amp * sin(freq x + phase)
  kTable,          // monotone cubic interpolation, flat extrapolation
};

/// Real-valued curve on the trait line, drawn from a closed parametric family.
/// Immutable; copies share the interpolation table.
class Curve {
 public:
  Curve();  // identically zero

  static Curve constant(double c);
  static Curve gaussian_bump(double base, double amp, double center, double width);
  static Curve polynomial(std::vector<double> coeffs);
  static Curve abs_polynomial(std::vector<double> coeffs);
  static Curve lorentzian(double base, double amp, double center, double width);
  static Curve sine(double amp, double freq, double phase);
  static Curve table(std::vector<double> xs, std::vector<double> ys);

  double operator()(double x) const;
  double derivative(double x) const;

  /// x -> (*this)(x) + c
  Curve shifted(double c) const;
  /// x -> k * (*this)(x)
  Curve scaled(double k) const;

  CurveFamily family() const { return family_; }
  bool is_constant() const;
  bool is_zero() const;

  nlohmann::json to_json() const;
  static Curve from_json(const nlohmann::json& j, const std::string& path);

 private:
  struct Table;

  double eval_raw(double x) const;
  double deriv_raw(double x) const;

  CurveFamily family_ = CurveFamily::kConstant;
  std::vector<double> params_;
  std::shared_ptr<const Table> table_;
  double offset_ = 0.0;
  double scale_ = 1.0;
};

std::string to_string(CurveFamily f);

}  // namespace mvb
