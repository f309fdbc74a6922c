#include <algorithm>
#include <cmath>
#include <numbers>

#include "mvb/analysis.hpp"
#include "mvb/error.hpp"

namespace mvb {

using nlohmann::json;

std::string to_string(TestStatus s) {
  switch (s) {
    case TestStatus::kPass: return "pass";
    case TestStatus::kFail: return "fail";
    case TestStatus::kInconclusive: return "inconclusive";
  }
  return "inconclusive";
}

json TestReport::to_json() const {
  json j{{"name", name},           {"statistic", statistic}, {"value", value},
         {"threshold", threshold}, {"sample_size", sample_size}, {"status", to_string(status)}};
  if (p_value) j["p_value"] = *p_value;
  if (!detail.empty()) j["detail"] = detail;
  if (!extra.empty()) j["extra"] = extra;
  return j;
}

double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.18) {
    // theta-function form converges fast for small lambda
    const double a = -pi * pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) s += std::exp(a * (2 * k - 1) * (2 * k - 1));
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

namespace {
double stephens(std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  return sn + 0.12 + 0.11 / sn;
}
}  // namespace

KsResult ks_test(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw DomainError("ks_test: empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double D = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    D = std::max({D, (i + 1) / n - F, F - i / n});
  }
  return {D, kolmogorov_q(stephens(x.size()) * D), x.size()};
}

double ks_critical(double alpha, std::size_t n) {
  if (n == 0) throw DomainError("ks_critical: n must be positive");
  double lo = 0.0, hi = 3.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (kolmogorov_q(mid) > alpha ? lo : hi) = mid;
  }
  return std::min(1.0, 0.5 * (lo + hi) / stephens(n));
}

TestReport ks_report(std::string name, const std::vector<double>& samples, const std::function<double(double)>& cdf,
                     double alpha, double slack) {
  TestReport rep;
  rep.name = std::move(name);
  rep.statistic = "ks_D";
  rep.sample_size = samples.size();
  if (samples.size() < 20) {
    rep.detail = "fewer than 20 samples";
    return rep;
  }
  const auto ks = ks_test(samples, cdf);
  rep.value = ks.D;
  rep.threshold = ks_critical(alpha, samples.size()) + slack;
  rep.p_value = ks.p_value;
  rep.status = ks.D <= rep.threshold ? TestStatus::kPass : TestStatus::kFail;
  rep.extra = {{"alpha", alpha}, {"slack", slack}};
  return rep;
}

Estimate raw_moment(const std::vector<double>& x, int n) {
  std::vector<double> p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p[i] = std::pow(x[i], n);
  return mean_estimate(p);
}

TestReport moment_z_test(std::string name, const std::vector<MomentTarget>& moments, double z_max) {
  TestReport rep;
  rep.name = std::move(name);
  rep.statistic = "max_abs_z";
  rep.threshold = z_max;
  if (moments.empty()) throw DomainError("moment_z_test: no moments");
  rep.sample_size = moments.front().sample.count;
  if (rep.sample_size < 20) {
    rep.detail = "fewer than 20 samples";
    return rep;
  }
  double zmax = 0.0;
  json rows = json::array();
  for (const auto& m : moments) {
    const double diff = m.sample.value - m.target;
    // exact agreement (zero variance) counts as z = 0
    const double tol = 1e-12 * std::max(1.0, std::abs(m.target));
    const double z = std::abs(diff) <= tol ? 0.0 : (m.sample.se > 0.0 ? std::abs(diff) / m.sample.se : INFINITY);
    zmax = std::max(zmax, z);
    rows.push_back({{"order", m.order}, {"estimate", m.sample.value}, {"se", m.sample.se}, {"target", m.target},
                    {"z", z}});
  }
  rep.value = zmax;
  rep.status = zmax <= z_max ? TestStatus::kPass : TestStatus::kFail;
  rep.extra["moments"] = rows;
  return rep;
}

json NullCalibration::to_json() const {
  return {{"reps", reps}, {"passes", passes}, {"rate", rate}, {"required", required}, {"pass", pass}};
}

NullCalibration null_calibration(const std::function<bool(Stream&)>& run_once, int reps, std::uint64_t seed,
                                 double alpha) {
  NullCalibration c;
  c.reps = reps;
  c.required = 1.0 - 2.0 * alpha;
  for (int i = 0; i < reps; ++i) {
    Stream rng = Stream::for_replica(seed, static_cast<std::uint64_t>(i));
    if (run_once(rng)) ++c.passes;
  }
  c.rate = reps > 0 ? static_cast<double>(c.passes) / reps : 0.0;
  c.pass = c.rate >= c.required;
  return c;
}

double exp_cdf(double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); }

std::vector<double> sample_exponential(std::size_t n, Stream& rng) {
  std::vector<double> out(n);
  // 1 - U lies in (0, 1]
  for (auto& v : out) v = -std::log1p(-rng.uniform());
  return out;
}

}  // namespace mvb
