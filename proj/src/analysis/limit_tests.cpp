#include <algorithm>
#include <cmath>
#include <mutex>

#include "mvb/analysis.hpp"
#include "mvb/error.hpp"

namespace mvb {

using nlohmann::json;

namespace {

// sup_y |P(G/(t+1) <= y) - (1 - e^{-y})| for G geometric on {1, 2, ...} with mean t+1
double geometric_exp_distance(double t) {
  const double q = t / (1.0 + t);
  const double lq = std::log(q);
  double D = 0.0;
  for (long k = 1;; ++k) {
    const double y = k / (1.0 + t);
    const double F = exp_cdf(y);
    const double below = -std::expm1((k - 1) * lq);  // G-cdf just left of y
    const double at = -std::expm1(k * lq);
    D = std::max({D, std::abs(below - F), std::abs(at - F)});
    if (1.0 - at < 1e-16 && 1.0 - F < 1e-16) break;
  }
  return D;
}

double combined_se(double a, double b) { return std::sqrt(a * a + b * b); }

}  // namespace

ConditionalSample conditional_sample(const std::vector<ReplicaRecord>& recs, const SimulationSpec& spec,
                                     std::size_t k, int functional) {
  if (k >= spec.record_times.size()) throw DomainError("conditional_sample: bad record index");
  if (functional >= static_cast<int>(spec.functionals.size()))
    throw DomainError("conditional_sample: bad functional index");
  ConditionalSample cs;
  cs.t = spec.record_times[k];
  cs.reps = recs.size();
  for (const auto& r : recs) {
    if (r.N[k] <= 0) continue;
    cs.N.push_back(static_cast<double>(r.N[k]));
    if (functional >= 0) cs.F.push_back(r.F[functional][k]);
  }
  return cs;
}

double yaglom_slack_constant() {
  static std::once_flag once;
  static double c = 0.0;
  std::call_once(once, [] {
    for (int j = 0; j <= 70; ++j) {
      const double t = std::pow(10.0, j / 20.0);
      c = std::max(c, t * geometric_exp_distance(t));
    }
  });
  return c;
}

TestReport yaglom_decision(const std::vector<double>& y, double t, double alpha) {
  const double slack = std::isfinite(t) ? yaglom_slack_constant() / t : 0.0;
  TestReport ks = ks_report("yaglom_ks", y, exp_cdf, alpha, slack);
  std::vector<MomentTarget> mt;
  for (int n = 1; n <= 3; ++n) {
    // sample SE of a heavy moment is correlated with the estimate; floor it at the Exp(1) value
    Estimate e = raw_moment(y, n);
    const double fac = std::tgamma(n + 1.0);
    const double null_se = std::sqrt((std::tgamma(2.0 * n + 1.0) - fac * fac) / static_cast<double>(y.size()));
    e.se = std::max(e.se, null_se);
    mt.push_back({n, e, fac});
  }
  TestReport mz = moment_z_test("yaglom_moments", mt, 4.0);
  TestReport rep = ks;
  rep.name = "yaglom_critical";
  rep.status = ks.passed() && mz.passed() ? TestStatus::kPass : TestStatus::kFail;
  if (ks.status == TestStatus::kInconclusive) rep.status = TestStatus::kInconclusive;
  rep.extra["moments"] = mz.to_json();
  rep.extra["t"] = std::isfinite(t) ? json(t) : json("inf");
  return rep;
}

TestReport yaglom_test_critical(const ConditionalSample& sample, const SpectralData& s, double alpha,
                                std::size_t min_survivors) {
  require_regime(s, Regime::kCritical, "yaglom_test_critical");
  if (sample.N.size() < min_survivors) {
    TestReport rep;
    rep.name = "yaglom_critical";
    rep.sample_size = sample.N.size();
    rep.detail = "too few survivors";
    return rep;
  }
  std::vector<double> y(sample.N.size());
  const double scale = (sample.t + 1.0) * s.A * s.B;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = sample.N[i] / scale;
  auto rep = yaglom_decision(y, sample.t, alpha);
  rep.extra["survivors"] = sample.N.size();
  rep.extra["reps"] = sample.reps;
  return rep;
}

double nu_of(const SpectralData& s, const Vec& f) { return s.integrate(f) / s.mu0.sum(); }

TestReport lln_ratio_test(const std::vector<ConditionalSample>& samples, double nu_f, std::size_t min_survivors) {
  TestReport rep;
  rep.name = "lln_ratio";
  rep.statistic = "abs_z_final";
  rep.threshold = 4.0;
  if (samples.empty()) throw DomainError("lln_ratio_test: no samples");
  json rows = json::array();
  std::vector<double> sds;
  Estimate last;
  for (const auto& cs : samples) {
    if (cs.F.size() != cs.N.size()) throw DomainError("lln_ratio_test: functional values missing");
    if (cs.N.size() < min_survivors) {
      rep.sample_size = cs.N.size();
      rep.detail = "too few survivors at t = " + std::to_string(cs.t);
      return rep;
    }
    std::vector<double> ratio(cs.N.size());
    for (std::size_t i = 0; i < ratio.size(); ++i) ratio[i] = cs.F[i] / cs.N[i];
    last = mean_estimate(ratio);
    const double sd = last.se * std::sqrt(static_cast<double>(ratio.size()));
    sds.push_back(sd);
    rows.push_back({{"t", cs.t}, {"mean", last.value}, {"se", last.se}, {"sd", sd}});
  }
  rep.sample_size = last.count;
  const double diff = std::abs(last.value - nu_f);
  const double tol = 1e-12 * std::max(1.0, std::abs(nu_f));
  rep.value = diff <= tol ? 0.0 : (last.se > 0.0 ? diff / last.se : INFINITY);
  const bool shrinking = sds.size() < 2 || sds.back() <= sds.front() * (1.0 + 1e-9);
  rep.status = rep.value <= 4.0 && shrinking ? TestStatus::kPass : TestStatus::kFail;
  rep.extra = {{"nu_f", nu_f}, {"rows", rows}, {"sd_shrinking", shrinking}};
  return rep;
}

double upsilon_h(double y) {
  const double den = std::sqrt(y * y + 2.0) - y;
  return 1.0 / (den * den);
}

double upsilon_exceedance(double y) { return std::exp(-upsilon_h(y)); }
double upsilon_cdf(double y) { return -std::expm1(-upsilon_h(y)); }
double upsilon_transform(double xi) { return std::sqrt(xi) - 0.5 / std::sqrt(xi); }

std::vector<double> upsilon_samples(const ConditionalSample& sample, double A, double B, double nu_f) {
  if (nu_f == 0.0) throw DomainError("upsilon: nu(f) = 0");
  if (sample.F.size() != sample.N.size()) throw DomainError("upsilon: functional values missing");
  const double t1 = sample.t + 1.0;
  std::vector<double> out(sample.N.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (sample.F[i] / t1 - nu_f * A * B / 2.0) / (nu_f * std::sqrt(A * B) * std::sqrt(sample.N[i] / t1));
  return out;
}

TestReport upsilon_decision(const std::vector<double>& values, double t, double alpha) {
  // monotone in N for f = 1, so the geometric-vs-exponential slack carries over
  const double slack = std::isfinite(t) ? yaglom_slack_constant() / t : 0.0;
  auto rep = ks_report("upsilon_law", values, upsilon_cdf, alpha, slack);
  rep.extra["t"] = std::isfinite(t) ? json(t) : json("inf");
  return rep;
}

TestReport upsilon_test(const ConditionalSample& sample, const SpectralData& s, double nu_f, double alpha,
                        std::size_t min_survivors) {
  require_regime(s, Regime::kCritical, "upsilon_test");
  if (nu_f == 0.0) throw DomainError("upsilon_test: nu(f) = 0");
  if (sample.N.size() < min_survivors) {
    TestReport rep;
    rep.name = "upsilon_law";
    rep.sample_size = sample.N.size();
    rep.detail = "too few survivors";
    return rep;
  }
  return upsilon_decision(upsilon_samples(sample, s.A, s.B, nu_f), sample.t, alpha);
}

TestReport subcritical_yaglom_test(const std::vector<ConditionalSample>& by_start, const std::vector<double>& V,
                                   double K, double lambda0, std::size_t min_survivors) {
  TestReport rep;
  rep.name = "subcritical_yaglom";
  rep.statistic = "max_abs_z";
  rep.threshold = 4.0;
  if (by_start.empty()) throw DomainError("subcritical_yaglom_test: no samples");
  if (!(lambda0 > 0.0)) throw RegimeError("subcritical_yaglom_test needs lambda0 > 0");
  const int nmax = std::min<int>(4, static_cast<int>(V.size()) - 1);
  std::vector<std::vector<Estimate>> est(by_start.size());
  double zmax = 0.0;
  json rows = json::array();
  for (std::size_t a = 0; a < by_start.size(); ++a) {
    const auto& cs = by_start[a];
    if (cs.N.size() < min_survivors) {
      const double t_sugg = cs.t - std::log(static_cast<double>(min_survivors) / std::max<double>(1.0, cs.N.size())) / lambda0;
      rep.sample_size = cs.N.size();
      rep.detail = "too few survivors; try t <= " + std::to_string(std::max(0.0, t_sugg));
      return rep;
    }
    const auto& z = cs.F.empty() ? cs.N : cs.F;
    for (int n = 1; n <= nmax; ++n) {
      Estimate e = raw_moment(z, n);
      const double target = V[n] / K;
      // sample SEs of high moments run low with the estimate; floor with the SE under the target law
      if (static_cast<int>(V.size()) > 2 * n) {
        const double var = V[2 * n] / K - target * target;
        if (var > 0.0) e.se = std::max(e.se, std::sqrt(var / static_cast<double>(z.size())));
      }
      est[a].push_back(e);
      const double zz = e.se > 0.0 ? std::abs(e.value - target) / e.se : (e.value == target ? 0.0 : INFINITY);
      zmax = std::max(zmax, zz);
      rows.push_back({{"start", a}, {"n", n}, {"estimate", e.value}, {"se", e.se}, {"target", target}, {"z", zz}});
    }
    rep.sample_size += cs.N.size();
  }
  double zcross = 0.0;
  for (std::size_t a = 1; a < est.size(); ++a)
    for (int n = 0; n < nmax; ++n) {
      const double se = combined_se(est[0][n].se, est[a][n].se);
      const double d = std::abs(est[0][n].value - est[a][n].value);
      zcross = std::max(zcross, se > 0.0 ? d / se : (d == 0.0 ? 0.0 : INFINITY));
    }
  rep.value = std::max(zmax, zcross);
  rep.status = rep.value <= 4.0 ? TestStatus::kPass : TestStatus::kFail;
  rep.extra = {{"rows", rows}, {"max_z_limit", zmax}, {"max_z_cross_start", zcross}, {"K", K}};
  return rep;
}

AtomSplit atom_threshold(const std::vector<double>& W, double floor) {
  if (!(floor > 0.0)) throw DomainError("atom_threshold: floor must be positive");
  AtomSplit out;
  std::vector<double> lw;
  lw.reserve(W.size());
  double hi = std::log(floor);
  for (double w : W) {
    const double v = std::log(std::max(w, floor));
    lw.push_back(v);
    hi = std::max(hi, v);
  }
  const double lo = std::log(floor);
  const double width = std::max((hi - lo) / 60.0, 0.1);
  const auto nb = static_cast<std::size_t>(std::ceil((hi - lo) / width)) + 1;
  out.counts.assign(nb, 0);
  for (std::size_t i = 0; i <= nb; ++i) out.bin_edges.push_back(lo + (static_cast<double>(i) - 0.5) * width);
  for (double v : lw) ++out.counts[std::min(nb - 1, static_cast<std::size_t>(std::floor((v - lo) / width + 0.5)))];
  std::size_t mode = 1;
  for (std::size_t j = 1; j < nb; ++j)
    if (out.counts[j] > out.counts[mode]) mode = j;
  if (nb < 3 || mode <= 1) {
    out.threshold = std::exp(lo + 0.5 * width);
    out.ambiguous = nb < 2 || out.counts[std::min<std::size_t>(1, nb - 1)] > 0;
    return out;
  }
  std::size_t dip = 1;
  for (std::size_t j = 1; j < mode; ++j)
    if (out.counts[j] < out.counts[dip]) dip = j;
  out.threshold = std::exp(lo + static_cast<double>(dip) * width);
  out.ambiguous = out.counts[dip] >= 0.2 * out.counts[mode];
  return out;
}

TestReport w_infty_diagnostics(const std::vector<std::vector<double>>& W_by_time, const std::vector<double>& times,
                               double theta0_x, double h_x, const std::vector<double>& V, double lambda0) {
  TestReport rep;
  rep.name = "w_infty";
  rep.statistic = "max_abs_z";
  if (W_by_time.empty() || W_by_time.size() != times.size()) throw DomainError("w_infty_diagnostics: bad input");
  if (!(lambda0 < 0.0)) throw RegimeError("w_infty_diagnostics needs the supercritical regime");
  const auto& WT = W_by_time.back();
  const double T = times.back();
  rep.sample_size = WT.size();
  if (std::exp(lambda0 * T) > 0.01) {
    rep.detail = "horizon too short: e^{lambda0 T} > 0.01";
    return rep;
  }
  // (a) martingale mean, and paired differences against the first time
  json mart = json::array();
  double z_mart = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Estimate e = mean_estimate(W_by_time[k]);
    double z = e.se > 0.0 ? std::abs(e.value - theta0_x) / e.se : 0.0;
    double zp = 0.0;
    if (k > 0) {
      std::vector<double> d(WT.size());
      for (std::size_t r = 0; r < d.size(); ++r) d[r] = W_by_time[k][r] - W_by_time[0][r];
      const Estimate de = mean_estimate(d);
      zp = de.se > 0.0 ? std::abs(de.value) / de.se : 0.0;
    }
    z_mart = std::max({z_mart, z, zp});
    mart.push_back({{"t", times[k]}, {"mean", e.value}, {"se", e.se}, {"z", z}, {"z_paired", zp}});
  }
  // (b) atom split
  double min_pos = INFINITY;
  for (double w : WT)
    if (w > 0.0) min_pos = std::min(min_pos, w);
  const double floor = std::isfinite(min_pos) ? 0.5 * min_pos : std::exp(lambda0 * T);
  const AtomSplit split = atom_threshold(WT, floor);
  std::vector<double> above(WT.size());
  for (std::size_t r = 0; r < WT.size(); ++r) above[r] = WT[r] > split.threshold ? 1.0 : 0.0;
  const Estimate pa = mean_estimate(above);
  const double z_atom = pa.se > 0.0 ? std::abs(pa.value - h_x) / pa.se : (pa.value == h_x ? 0.0 : INFINITY);
  // (c) moments
  json mom = json::array();
  double z_mom = 0.0;
  for (int n = 1; n <= std::min<int>(3, static_cast<int>(V.size()) - 1); ++n) {
    const Estimate e = raw_moment(WT, n);
    const double z = e.se > 0.0 ? std::abs(e.value - V[n]) / e.se : 0.0;
    z_mom = std::max(z_mom, z);
    mom.push_back({{"n", n}, {"estimate", e.value}, {"se", e.se}, {"target", V[n]}, {"z", z}});
  }
  rep.value = std::max(z_atom, z_mom);  // martingale z (3-SE rule) reported separately
  rep.threshold = 4.0;
  const bool ok = z_mart <= 3.0 && z_atom <= 4.0 && z_mom <= 4.0;
  rep.status = split.ambiguous ? TestStatus::kInconclusive : (ok ? TestStatus::kPass : TestStatus::kFail);
  if (split.ambiguous) rep.detail = "atom separation ambiguous; see histogram";
  rep.extra = {{"martingale", mart},
               {"martingale_max_z", z_mart},
               {"threshold", split.threshold},
               {"p_above", pa.value},
               {"p_above_se", pa.se},
               {"h_x", h_x},
               {"atom_z", z_atom},
               {"moments", mom},
               {"histogram", {{"edges", split.bin_edges}, {"counts", split.counts}}}};
  return rep;
}

TestReport qprocess_law_test(const QProcessInputs& in, std::size_t min_survivors) {
  TestReport rep;
  rep.name = "qprocess_law";
  rep.statistic = "final_gap_over_se";
  rep.threshold = 4.0;
  const std::size_t R = in.F.size();
  if (in.weight.size() != R || in.survive.size() != in.T.size()) throw DomainError("qprocess_law_test: bad input");
  for (double T : in.T)
    if (!(in.s < T)) throw DomainError("qprocess_law_test: s must be below every T");
  rep.sample_size = R;
  std::vector<double> fw(R);
  for (std::size_t r = 0; r < R; ++r) fw[r] = in.F[r] * in.weight[r];
  const Estimate rw = mean_estimate(fw);
  const Estimate wn = mean_estimate(in.weight);
  const double z_norm = wn.se > 0.0 ? std::abs(wn.value - 1.0) / wn.se : (wn.value == 1.0 ? 0.0 : INFINITY);
  json rows = json::array();
  std::vector<double> gaps, ses;
  for (std::size_t j = 0; j < in.T.size(); ++j) {
    std::vector<double> num(R), den(R);
    std::size_t surv = 0;
    for (std::size_t r = 0; r < R; ++r) {
      den[r] = in.survive[j][r] ? 1.0 : 0.0;
      num[r] = den[r] * in.F[r];
      surv += in.survive[j][r] ? 1 : 0;
    }
    if (surv < min_survivors) {
      rep.detail = "too few survivors at T = " + std::to_string(in.T[j]);
      return rep;
    }
    const Estimate d = jackknife_ratio(num, den);
    gaps.push_back(std::abs(d.value - rw.value));
    ses.push_back(combined_se(d.se, rw.se));
    rows.push_back({{"T", in.T[j]}, {"direct", d.value}, {"direct_se", d.se}, {"survivors", surv},
                    {"gap", gaps.back()}, {"combined_se", ses.back()}});
  }
  rep.value = ses.back() > 0.0 ? gaps.back() / ses.back() : 0.0;
  const bool trend = gaps.size() < 2 || gaps.back() <= gaps.front() + 2.0 * ses.front();
  const bool ok = rep.value <= 4.0 && z_norm <= 3.0 && trend;
  rep.status = ok ? TestStatus::kPass : TestStatus::kFail;
  rep.extra = {{"reweighted", rw.value}, {"reweighted_se", rw.se}, {"weight_mean", wn.value},
               {"weight_se", wn.se},     {"weight_z", z_norm},     {"gap_nonincreasing", trend},
               {"rows", rows},           {"s", in.s}};
  return rep;
}

}  // namespace mvb
