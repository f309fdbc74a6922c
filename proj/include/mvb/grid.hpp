#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace mvb {

enum class Boundary { kAbsorbing, kReflecting };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

// Uniform nodes x_min, ..., x_max (both ends included).
struct Grid {
  double x_min = -8.0;
  double x_max = 8.0;
  int n_points = 801;
  Boundary boundary = Boundary::kAbsorbing;

  Grid() = default;
  Grid(double lo, double hi, int n, Boundary bc = Boundary::kAbsorbing);

  double dx() const { return (x_max - x_min) / (n_points - 1); }
  double x(int i) const { return x_min + i * dx(); }
  int size() const { return n_points; }
  std::vector<double> nodes() const;
  double half_width() const { return 0.5 * (x_max - x_min); }

  // linear interpolation of nodal values; outside the grid returns `outside`
  double interpolate(const std::vector<double>& values, double x, double outside = 0.0) const;

  nlohmann::json to_json() const;
  static Grid from_json(const nlohmann::json& j, const std::string& path = "grid");
};

}  // namespace mvb
