#include <cmath>
#include <iostream>

#include "mvb/branching.hpp"
#include "mvb/error.hpp"

namespace mvb {

double yule_moment_bound(int n, double t, double b_star) {
  const double lg = std::lgamma(n + 1.0) + n * b_star * t;
  if (lg > std::log(std::numeric_limits<double>::max())) {
    std::cerr << "warning: Yule moment ceiling overflows for n=" << n << ", t=" << t << "\n";
    return std::numeric_limits<double>::infinity();
  }
  return std::exp(lg);
}

Estimate mean_estimate(const std::vector<double>& x) {
  Estimate e;
  e.count = x.size();
  if (x.empty()) return e;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  e.value = mean;
  // the jackknife SE of a sample mean reduces to s / sqrt(R)
  if (x.size() > 1) e.se = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  return e;
}

Estimate jackknife_ratio(const std::vector<double>& num, const std::vector<double>& den) {
  if (num.size() != den.size()) throw DomainError("jackknife_ratio: size mismatch");
  Estimate e;
  const std::size_t R = num.size();
  e.count = R;
  double sn = 0.0, sd = 0.0;
  for (std::size_t i = 0; i < R; ++i) {
    sn += num[i];
    sd += den[i];
  }
  if (sd == 0.0) throw DomainError("jackknife_ratio: zero denominator");
  e.value = sn / sd;
  if (R < 2) return e;
  double mean_loo = 0.0;
  std::vector<double> loo(R);
  for (std::size_t i = 0; i < R; ++i) {
    const double d = sd - den[i];
    loo[i] = d != 0.0 ? (sn - num[i]) / d : e.value;
    mean_loo += loo[i];
  }
  mean_loo /= static_cast<double>(R);
  double ss = 0.0;
  for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
  e.se = std::sqrt(static_cast<double>(R - 1) / static_cast<double>(R) * ss);
  return e;
}

std::vector<MomentRow> mc_moments(const std::vector<ReplicaRecord>& recs, const SimulationSpec& spec, int functional,
                                  int n_max, double b_star, double f_norm) {
  if (n_max < 1) throw DomainError("mc_moments: n_max must be >= 1");
  if (functional >= static_cast<int>(spec.functionals.size())) throw DomainError("mc_moments: bad functional index");
  std::vector<MomentRow> rows;
  std::vector<double> v(recs.size());
  for (std::size_t k = 0; k < spec.record_times.size(); ++k) {
    const double t = spec.record_times[k];
    for (int n = 1; n <= n_max; ++n) {
      for (std::size_t r = 0; r < recs.size(); ++r) {
        const double z = functional < 0 ? static_cast<double>(recs[r].N[k]) : recs[r].F[functional][k];
        v[r] = std::pow(z, n);
      }
      MomentRow row{t, n, mean_estimate(v), yule_moment_bound(n, t, b_star) * std::pow(f_norm, n), true};
      row.within_ceiling = std::abs(row.est.value) <= row.ceiling;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<SurvivalRow> mc_survival(const std::vector<ReplicaRecord>& recs, const SimulationSpec& spec) {
  std::vector<SurvivalRow> rows;
  const double R = static_cast<double>(recs.size());
  for (std::size_t k = 0; k < spec.record_times.size(); ++k) {
    double alive = 0.0;
    for (const auto& r : recs) alive += r.N[k] > 0 ? 1.0 : 0.0;
    Estimate e;
    e.count = recs.size();
    e.value = R > 0 ? alive / R : 0.0;
    e.se = R > 0 ? std::sqrt(e.value * (1.0 - e.value) / R) : 0.0;
    rows.push_back({spec.record_times[k], e});
  }
  return rows;
}

double qprocess_weight_from_sums(double functional_sum, double s, double value_at_x0, double lambda0,
                                 WeightKind kind) {
  if (!(value_at_x0 > 0.0)) throw DomainError("qprocess weight: normalizer at x0 must be positive");
  if (kind == WeightKind::kEigen) return std::exp(lambda0 * s) * functional_sum / value_at_x0;
  // functional_sum = <Z_s, log(1 - h)>
  return -std::expm1(functional_sum) / value_at_x0;
}

double qprocess_weight(const std::vector<double>& traits_at_s, double s, double x0, const SpectralData& spec,
                       WeightKind kind, const Vec* h) {
  const auto& g = spec.grid;
  if (kind == WeightKind::kEigen) {
    const auto th = to_std(spec.theta0);
    double sum = 0.0;
    for (double x : traits_at_s) sum += g.interpolate(th, x, 0.0);
    return qprocess_weight_from_sums(sum, s, g.interpolate(th, x0, 0.0), spec.lambda0, kind);
  }
  if (!h) throw DomainError("qprocess weight: supercritical weight needs h");
  const auto hv = to_std(*h);
  double sum = 0.0;
  for (double x : traits_at_s) sum += std::log1p(-g.interpolate(hv, x, 0.0));
  return qprocess_weight_from_sums(sum, s, g.interpolate(hv, x0, 0.0), spec.lambda0, kind);
}

std::vector<CutoffRow> cutoff_diagnostics(const std::vector<ReplicaRecord>& recs, const SimulationSpec& spec,
                                          const std::vector<double>& m_grid) {
  std::vector<CutoffRow> rows;
  std::vector<double> v(recs.size());
  for (double m : m_grid) {
    for (std::size_t k = 0; k < spec.record_times.size(); ++k) {
      for (std::size_t r = 0; r < recs.size(); ++r) {
        const double s = recs[r].max_abs[k];
        if (std::isnan(s)) throw NotApplicable("cutoff diagnostics need particle paths (particle engine)");
        v[r] = s > m ? 1.0 : 0.0;
      }
      rows.push_back({m, spec.record_times[k], mean_estimate(v)});
    }
  }
  return rows;
}

Estimate stabilization_spread(const std::vector<ReplicaRecord>& recs, const SimulationSpec& spec, double lambda0,
                              double T) {
  std::vector<double> spreads;
  const auto& ts = spec.record_times;
  for (const auto& r : recs) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    bool alive = true;
    int used = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      if (ts[k] < T - 1e-12 || ts[k] > 2.0 * T + 1e-12) continue;
      if (r.N[k] == 0) alive = false;
      const double w = std::exp(lambda0 * ts[k]) * static_cast<double>(r.N[k]);
      lo = std::min(lo, w);
      hi = std::max(hi, w);
      ++used;
    }
    if (alive && used > 0) spreads.push_back(hi - lo);
  }
  return mean_estimate(spreads);
}

}  // namespace mvb
