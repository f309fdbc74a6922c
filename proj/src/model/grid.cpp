#include "mvb/grid.hpp"

#include <cmath>

#include "mvb/error.hpp"

namespace mvb {

std::string to_string(Boundary b) { return b == Boundary::kAbsorbing ? "absorbing" : "reflecting"; }

Boundary boundary_from_string(const std::string& s) {
  if (s == "absorbing") return Boundary::kAbsorbing;
  if (s == "reflecting") return Boundary::kReflecting;
  throw ConfigError("unknown boundary '" + s + "' (expected absorbing|reflecting)");
}

Grid::Grid(double lo, double hi, int n, Boundary bc) : x_min(lo), x_max(hi), n_points(n), boundary(bc) {
  if (n < 3) throw ConfigError("grid needs at least 3 nodes");
  if (!(lo < hi)) throw ConfigError("grid requires x_min < x_max");
}

std::vector<double> Grid::nodes() const {
  std::vector<double> out(n_points);
  for (int i = 0; i < n_points; ++i) out[i] = x(i);
  return out;
}

double Grid::interpolate(const std::vector<double>& values, double xq, double outside) const {
  if (!(xq >= x_min && xq <= x_max)) return outside;
  const double s = (xq - x_min) / dx();
  int i = static_cast<int>(std::floor(s));
  if (i >= n_points - 1) return values[n_points - 1];
  const double w = s - i;
  return (1.0 - w) * values[i] + w * values[i + 1];
}

nlohmann::json Grid::to_json() const {
  return {{"x_min", x_min}, {"x_max", x_max}, {"n_points", n_points}, {"boundary", to_string(boundary)}};
}

Grid Grid::from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("expected object at " + path);
  for (const char* k : {"x_min", "x_max", "n_points"}) {
    if (!j.contains(k)) throw ConfigError(std::string("missing key: ") + path + "." + k);
  }
  return Grid(j.at("x_min").get<double>(), j.at("x_max").get<double>(), j.at("n_points").get<int>(),
              boundary_from_string(j.value("boundary", std::string("absorbing"))));
}

}  // namespace mvb
