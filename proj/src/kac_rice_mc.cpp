#include "otl/kac_rice_mc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "otl/logdomain.hpp"
#include "otl/parallel.hpp"
#include "otl/special.hpp"

namespace otl {

using nlohmann::json;

ConditionalSpec::ConditionalSpec(Vec w_in, Vec y_in, Eigen::Index d_in)
    : w(std::move(w_in)), y(std::move(y_in)), d(d_in) {
  if (w.size() != y.size()) throw std::invalid_argument("ConditionalSpec: |w| != |y|");
  if (d < 2) throw std::invalid_argument("ConditionalSpec: d must be >= 2");
  const Vec y3 = y.array().cube();
  const double nrm = y3.norm();
  if (nrm == 0.0) throw std::invalid_argument("ConditionalSpec: y^3 must be nonzero");
  qbar = y3 / nrm;
}

Mat sample_conditional_rows(const ConditionalSpec& spec, RngStream& rng) {
  const Eigen::Index rows = spec.d - 1, n = spec.w.size();
  Mat Z(rows, n);
  for (Eigen::Index r = 0; r < rows; ++r) {
    Vec ell = rng.normal_vector(n);
    ell -= ell.dot(spec.qbar) * spec.qbar;
    Z.row(r) = ell.transpose();
  }
  return Z;
}

Mat sample_conditional_matrix(const ConditionalSpec& spec, RngStream& rng) {
  const Mat Z = sample_conditional_rows(spec, rng);
  const Vec wabs = spec.w.array().abs();
  const Mat E = Z * wabs.asDiagonal();  // E E^T = Z diag(w^2) Z^T
  const double w44 = spec.w.array().square().square().sum();
  Mat M = -3.0 * (E * E.transpose());
  M.diagonal().array() += w44;
  return 0.5 * (M + M.transpose());
}

double conditional_trace_mean(const ConditionalSpec& spec) {
  const double w44 = spec.w.array().square().square().sum();
  const double w2 = spec.w.squaredNorm();
  const double y66 = spec.y.array().pow(6).sum();
  const double cross = (spec.y.array().pow(6) * spec.w.array().square()).sum() / y66;
  return static_cast<double>(spec.d - 1) * (w44 - 3.0 * w2 + 3.0 * cross);
}

namespace {

double sample_trace(const ConditionalSpec& spec, RngStream& rng) {
  // tr(M) = (d-1) ||w||_4^4 - 3 sum_r ||z_r o w||^2, no matrix needed.
  const Eigen::Index rows = spec.d - 1, n = spec.w.size();
  const double w44 = spec.w.array().square().square().sum();
  double acc = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    Vec ell = rng.normal_vector(n);
    ell -= ell.dot(spec.qbar) * spec.qbar;
    acc += (ell.array() * spec.w.array()).matrix().squaredNorm();
  }
  return static_cast<double>(rows) * w44 - 3.0 * acc;
}

struct LogMean {
  double log_mean = kNegInf;
  double log_second = kNegInf;  // log E[X^2]
  double std_err_log = 0.0;     // relative (delta-method) error of the mean
};

// Combine per-sample log values into log of the sample mean with a
// delta-method standard error; order-stable pairwise reduction.
LogMean log_mean_of(std::vector<double> logs) {
  LogMean out;
  const std::uint64_t n = logs.size();
  if (n == 0) return out;
  std::vector<double> twice(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) twice[i] = 2.0 * logs[i];
  const double lse = log_sum_exp(std::move(logs));
  const double lse2 = log_sum_exp(std::move(twice));
  out.log_mean = lse - std::log(static_cast<double>(n));
  out.log_second = lse2 - std::log(static_cast<double>(n));
  // var = E[X^2] - mean^2; se(mean)/mean = sqrt(var/n)/mean.
  const double log_var = log_sub(out.log_second, 2.0 * out.log_mean);
  if (log_var == kNegInf || out.log_mean == kNegInf) {
    out.std_err_log = 0.0;
  } else {
    out.std_err_log =
        std::exp(0.5 * (log_var - std::log(static_cast<double>(n))) - out.log_mean);
  }
  return out;
}

}  // namespace

TraceMomentReport mc_trace_moments(const ConditionalSpec& spec, int p, std::uint64_t n_samples,
                                   uint64_t seed, double epsilon, int workers) {
  if (p < 0) throw std::invalid_argument("mc_trace_moments: p must be >= 0");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("mc_trace_moments: epsilon must be in (0,1)");
  TraceMomentReport r;
  r.n_samples = n_samples;
  if (p == 0) {
    r.log_estimate = 0.0;
    r.log_bound = 0.0;
    r.holds = true;
    return r;
  }
  std::vector<double> logs(n_samples);
  parallel_for(static_cast<std::int64_t>(n_samples), workers, [&](std::int64_t i) {
    RngStream rng(seed, static_cast<uint64_t>(i));
    const double t = sample_trace(spec, rng);
    logs[static_cast<std::size_t>(i)] = t == 0.0 ? kNegInf : p * std::log(std::fabs(t));
  });
  const LogMean m = log_mean_of(std::move(logs));
  r.log_estimate = m.log_mean;
  r.std_err_log = m.std_err_log;

  const double mean_abs = std::fabs(conditional_trace_mean(spec));
  const double winf2 = spec.w.array().abs().maxCoeff();
  const double w42 = std::sqrt(spec.w.array().square().square().sum());
  const double inner = std::max(4.0 * p * winf2 * winf2,
                                2.0 * std::sqrt(static_cast<double>(p) * spec.d) * w42);
  const double b1 = p * (std::log1p(epsilon) + (mean_abs > 0.0 ? std::log(mean_abs) : kNegInf));
  const double b2 = p * (std::log(1.0 / epsilon + 1.0) + std::log(inner));
  r.log_bound = std::max(b1, b2);
  // Holds when the point estimate is below the bound within 3 relative SEs.
  r.holds = r.log_estimate <= r.log_bound + std::log1p(3.0 * std::min(r.std_err_log, 0.33));
  return r;
}

double density_at_zero_log(const CorrelationProfile& alpha, Eigen::Index d,
                           DensityConvention convention) {
  if (alpha.p6 <= 0.0) throw std::invalid_argument("density_at_zero_log: ||alpha||_6^6 must be > 0");
  const double expo = convention == DensityConvention::ambient
                          ? static_cast<double>(d) / 2.0   // ambient-dimension exponent
                          : static_cast<double>(d - 1) / 2.0;
  return -expo * (std::log(2.0 * M_PI) + std::log(alpha.p6));
}

double sphere_log_surface(Eigen::Index d, SurfaceConvention convention) {
  if (d < 2) throw std::invalid_argument("sphere_log_surface: d must be >= 2");
  const double dd = static_cast<double>(d);
  switch (convention) {
    case SurfaceConvention::surface:
      return std::log(2.0) + 0.5 * dd * std::log(M_PI) - std::lgamma(0.5 * dd);
    case SurfaceConvention::ball_volume_full:   // Vol(B_d)
      return 0.5 * dd * std::log(M_PI) - std::lgamma(0.5 * dd + 1.0);
    case SurfaceConvention::ball_volume_lower:  // Vol(B_{d-1})
      return 0.5 * (dd - 1.0) * std::log(M_PI) - std::lgamma(0.5 * (dd + 1.0));
  }
  throw std::logic_error("sphere_log_surface: bad convention");
}

TValues T_values(const CorrelationProfile& alpha, const EventThresholds& thresholds,
                 Eigen::Index d) {
  const Eigen::Index n = alpha.alpha.size();
  const EventReport ev = classify_events(alpha, thresholds, d, n);
  if (ev.S.empty()) throw std::invalid_argument("T_values: S is empty (degenerate input)");
  TValues t;
  double s44 = 0.0, s66 = 0.0;
  for (const Eigen::Index i : ev.S) {
    const double a2 = alpha.alpha[i] * alpha.alpha[i];
    s44 += a2 * a2;
    s66 += a2 * a2 * a2;
  }
  const double P = thresholds.P(d, n);
  const double qs = ev.Q_alpha_S;
  t.log_T1 = s44 > 0.0 ? -(P - qs) * (P - qs) / (36.0 * s44) : kNegInf;
  t.T2 = P <= qs;
  t.log_T3 = qs == 0.0 ? kNegInf
                       : 0.5 * static_cast<double>(d) * (2.0 * std::log(std::fabs(qs)) - std::log(s66));
  if (ev.L.empty()) {
    t.log_T4 = kNegInf;
  } else {
    double l66 = 0.0, ql = ev.Q_alpha_L;
    for (const Eigen::Index i : ev.L) {
      const double a2 = alpha.alpha[i] * alpha.alpha[i];
      l66 += a2 * a2 * a2;
    }
    t.log_T4 = ql == 0.0 ? kNegInf
                         : 0.5 * static_cast<double>(d) * (2.0 * std::log(std::fabs(ql)) - std::log(l66));
  }
  return t;
}

PsdCheck psd_check(const Mat& M) {
  const Eigen::Index p = M.rows();
  const double scale = M.cwiseAbs().rowwise().sum().maxCoeff();  // Gershgorin bound on ||M||_2
  const double floor = 1e-10 * std::max(scale, 1e-300);
  Mat L = Mat::Zero(p, p);
  bool disputed = false;
  double logdet = 0.0;
  for (Eigen::Index j = 0; j < p && !disputed; ++j) {
    double pivot = M(j, j) - L.row(j).head(j).squaredNorm();
    if (pivot < -floor) return {false, kNegInf};
    if (pivot <= floor) {
      disputed = true;
      break;
    }
    logdet += std::log(pivot);
    const double ljj = std::sqrt(pivot);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < p; ++i)
      L(i, j) = (M(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / ljj;
  }
  if (!disputed) return {true, logdet};
  // Semidefinite boundary: settle by the spectrum.
  Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
  const Vec ev = es.eigenvalues();
  if (ev.minCoeff() < -floor) return {false, kNegInf};
  double ld = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (ev[i] <= floor) return {true, kNegInf};  // det is (numerically) zero
    ld += std::log(ev[i]);
  }
  return {true, ld};
}

namespace {

bool e2_doubleprime(const Mat& Z, double delta, Eigen::Index d) {
  const double thr = (1.0 - delta) * static_cast<double>(d);
  for (Eigen::Index c = 0; c < Z.cols(); ++c)
    if (Z.col(c).squaredNorm() < thr) return false;
  return true;
}

}  // namespace

PsdProbabilityReport psd_probability(const ConditionalSpec& spec, const CorrelationProfile& alpha,
                                     const EventThresholds& thresholds, std::uint64_t n_samples,
                                     uint64_t seed, int workers) {
  PsdProbabilityReport r;
  const Eigen::Index n = alpha.alpha.size();
  const EventReport ev = classify_events(alpha, thresholds, spec.d, n);
  if (ev.F_index == 0 || !ev.E0) {
    r.verdict = PsdProbabilityReport::Verdict::inapplicable;
    return r;
  }
  r.applicable = true;
  r.n_samples = n_samples;
  std::vector<char> hit(n_samples, 0);
  const double w44 = spec.w.array().square().square().sum();
  const Vec wabs = spec.w.array().abs();
  parallel_for(static_cast<std::int64_t>(n_samples), workers, [&](std::int64_t i) {
    RngStream rng(seed, static_cast<uint64_t>(i));
    const Mat Z = sample_conditional_rows(spec, rng);
    if (!e2_doubleprime(Z, thresholds.delta, spec.d)) return;
    const Mat E = Z * wabs.asDiagonal();
    Mat M = -3.0 * (E * E.transpose());
    M.diagonal().array() += w44;
    if (psd_check(0.5 * (M + M.transpose())).psd) hit[static_cast<std::size_t>(i)] = 1;
  });
  for (const char h : hit) r.successes += h;
  const WilsonInterval w = wilson_interval(r.successes, n_samples);
  r.p_hat = w.p_hat;
  r.wilson_lower = w.lower;
  r.wilson_upper = w.upper;
  const TValues t = T_values(alpha, thresholds, spec.d);
  r.bound = std::exp(t.log_T1) + (t.T2 ? 1.0 : 0.0);
  if (r.wilson_upper <= r.bound)
    r.verdict = PsdProbabilityReport::Verdict::holds;
  else if (r.wilson_lower > r.bound)
    r.verdict = PsdProbabilityReport::Verdict::violated;
  else
    r.verdict = PsdProbabilityReport::Verdict::straddles;
  return r;
}

KacRiceEstimate estimate_W_log(const CorrelationProfile& alpha, Eigen::Index d,
                               const EventThresholds& thresholds, std::uint64_t n_samples,
                               uint64_t seed, int workers) {
  if (d > 30)
    throw std::invalid_argument("estimate_W_log: d must be <= 30 (PSD events unobservably rare)");
  KacRiceEstimate est;
  est.n_samples = n_samples;
  const Eigen::Index n = alpha.alpha.size();
  const EventReport ev = classify_events(alpha, thresholds, d, n);
  est.events_pass = ev.E0 && ev.E1 && ev.E2;
  if (!est.events_pass) {
    est.sign = 0;
    est.log_value = kNegInf;
    return est;
  }
  ConditionalSpec spec(alpha.alpha, alpha.alpha, d);
  const double dm1 = static_cast<double>(d - 1);
  std::vector<double> logs(n_samples, kNegInf);
  std::vector<double> logs_sur(n_samples, kNegInf);
  std::vector<char> psd_hits(n_samples, 0);
  const double w44 = spec.w.array().square().square().sum();
  const Vec wabs = spec.w.array().abs();
  parallel_for(static_cast<std::int64_t>(n_samples), workers, [&](std::int64_t i) {
    RngStream rng(seed, static_cast<uint64_t>(i));
    const Mat Z = sample_conditional_rows(spec, rng);
    if (!e2_doubleprime(Z, thresholds.delta, d)) return;
    const Mat E = Z * wabs.asDiagonal();
    Mat M = -3.0 * (E * E.transpose());
    M.diagonal().array() += w44;
    M = 0.5 * (M + M.transpose());
    const PsdCheck chk = psd_check(M);
    if (!chk.psd) return;
    psd_hits[static_cast<std::size_t>(i)] = 1;
    logs[static_cast<std::size_t>(i)] = chk.logdet;
    const double tr = M.trace();
    logs_sur[static_cast<std::size_t>(i)] =
        tr == 0.0 ? kNegInf : dm1 * (std::log(std::fabs(tr)) - std::log(dm1));
  });
  std::uint64_t psd_count = 0;
  for (const char h : psd_hits) psd_count += h;
  if (psd_count == 0) {
    est.zero_observed = true;
    est.sign = 0;
    est.log_value = kNegInf;
    est.cp_upper_log = std::log(clopper_pearson_upper_zero(n_samples));
    return est;
  }
  const LogMean m = log_mean_of(std::move(logs));
  const LogMean ms = log_mean_of(std::move(logs_sur));
  est.log_W = m.log_mean;
  est.log_W_surrogate = ms.log_mean;
  est.log_value = m.log_mean;
  est.std_err_log = m.std_err_log;
  est.sign = +1;
  return est;
}

KacRiceEstimate estimate_h_expectation(Eigen::Index d, Eigen::Index n,
                                       const EventThresholds& thresholds, std::uint64_t n_alpha,
                                       std::uint64_t n_matrix, uint64_t seed, WMode mode,
                                       DensityConvention density, SurfaceConvention surface,
                                       int workers) {
  if (mode == WMode::direct && d > 12)
    throw std::invalid_argument("estimate_h_expectation: direct mode requires d <= 12");
  KacRiceEstimate est;
  est.n_samples = n_alpha;
  est.density_convention = density;
  est.surface_convention = surface;
  est.log_surface = sphere_log_surface(d, surface);

  struct Outer {
    double log_h = kNegInf;
    Eigen::Index f_index = 0;
  };
  std::vector<Outer> outer(n_alpha);
  parallel_for(static_cast<std::int64_t>(n_alpha), workers, [&](std::int64_t i) {
    RngStream rng(seed, static_cast<uint64_t>(i));
    const CorrelationProfile prof = make_profile(rng.normal_vector(n));
    const EventReport ev = classify_events(prof, thresholds, d, n);
    outer[static_cast<std::size_t>(i)].f_index = ev.F_index;
    if (!(ev.E0 && ev.E1 && ev.E2)) return;
    // Inner estimate of E[det 1{psd} 1{E2''} | g=0, alpha].
    const uint64_t inner_seed = seed ^ (0x9e3779b97f4a7c15ull + static_cast<uint64_t>(i));
    double log_w;
    if (mode == WMode::direct) {
      const KacRiceEstimate w = estimate_W_log(prof, d, thresholds, n_matrix, inner_seed, 1);
      log_w = w.log_value;
    } else {
      // AM-GM surrogate: E[(|tr|/(d-1))^{d-1} 1{psd} 1{E2''}].
      ConditionalSpec spec(prof.alpha, prof.alpha, d);
      const double dm1 = static_cast<double>(d - 1);
      const double w44 = spec.w.array().square().square().sum();
      const Vec wabs = spec.w.array().abs();
      std::vector<double> logs(n_matrix, kNegInf);
      for (std::uint64_t s = 0; s < n_matrix; ++s) {
        RngStream inner(inner_seed, s);
        const Mat Z = sample_conditional_rows(spec, inner);
        if (!e2_doubleprime(Z, thresholds.delta, d)) continue;
        const Mat E = Z * wabs.asDiagonal();
        Mat M = -3.0 * (E * E.transpose());
        M.diagonal().array() += w44;
        M = 0.5 * (M + M.transpose());
        if (!psd_check(M).psd) continue;
        const double tr = M.trace();
        logs[s] = tr == 0.0 ? kNegInf : dm1 * (std::log(std::fabs(tr)) - std::log(dm1));
      }
      log_w = log_mean_of(std::move(logs)).log_mean;
    }
    if (log_w == kNegInf) return;
    outer[static_cast<std::size_t>(i)].log_h =
        est.log_surface + log_w + density_at_zero_log(prof, d, density);
  });

  // Stratify by F-index, then combine.
  std::vector<double> logs;
  logs.reserve(n_alpha);
  std::vector<StratumContribution> strata;
  auto stratum_of = [&](Eigen::Index k) -> StratumContribution& {
    for (auto& s : strata)
      if (s.k == k) return s;
    strata.push_back({k, 0, kNegInf});
    return strata.back();
  };
  for (const auto& o : outer) {
    StratumContribution& s = stratum_of(o.f_index);
    ++s.count;
    s.log_contrib = log_add(s.log_contrib, o.log_h);
    logs.push_back(o.log_h);
  }
  const double log_n = std::log(static_cast<double>(n_alpha));
  for (auto& s : strata) s.log_contrib -= log_n;
  std::sort(strata.begin(), strata.end(),
            [](const StratumContribution& a, const StratumContribution& b) { return a.k < b.k; });
  const LogMean m = log_mean_of(std::move(logs));
  est.log_value = m.log_mean;
  est.std_err_log = m.std_err_log;
  est.sign = est.log_value == kNegInf ? 0 : +1;
  est.strata = std::move(strata);
  return est;
}

std::string KacRiceEstimate::to_json() const {
  json j;
  j["log_value"] = log_value == kNegInf ? json(nullptr) : json(log_value);
  j["sign"] = sign;
  j["std_err_log"] = std_err_log;
  j["n_samples"] = n_samples;
  json js = json::array();
  for (const auto& s : strata) {
    json e;
    e["k"] = s.k;
    e["count"] = s.count;
    e["log_contrib"] = s.log_contrib == kNegInf ? json(nullptr) : json(s.log_contrib);
    js.push_back(e);
  }
  j["strata"] = js;
  j["conventions"] = {
      {"density", density_convention == DensityConvention::exact ? "exact" : "ambient"},
      {"surface", surface_convention == SurfaceConvention::surface ? "surface"
                  : surface_convention == SurfaceConvention::ball_volume_full
                      ? "ball_volume_full"
                      : "ball_volume_lower"}};
  if (zero_observed) {
    j["zero_observed"] = true;
    j["cp_upper_log"] = cp_upper_log;
  }
  return j.dump();
}

bool amgm_det_bound_holds(const Mat& M) {
  const PsdCheck chk = psd_check(M);
  if (!chk.psd) return true;  // vacuous off the PSD event
  const double p = static_cast<double>(M.rows());
  const double tr = M.trace();
  if (chk.logdet == kNegInf) return true;
  const double rhs = tr <= 0.0 ? kNegInf : p * (std::log(tr) - std::log(p));
  return chk.logdet <= rhs + 1e-9 * std::max(1.0, std::fabs(rhs));
}

namespace {

// log of (Q(z_I)^2 / ||z_I||_6^6)^{d/2}; -inf for empty I or zero Q.
double log_ratio_power(const Vec& z, const std::vector<Eigen::Index>& idx, Eigen::Index d) {
  if (idx.empty()) return kNegInf;
  double q = 0.0, six = 0.0;
  for (const Eigen::Index i : idx) {
    const double a2 = z[i] * z[i];
    q += a2 * a2 - 3.0 * a2;
    six += a2 * a2 * a2;
  }
  if (q == 0.0) return kNegInf;
  return 0.5 * static_cast<double>(d) * (2.0 * std::log(std::fabs(q)) - std::log(six));
}

}  // namespace

bool holder_split_holds(const Vec& z, const std::vector<Eigen::Index>& S_idx,
                        const std::vector<Eigen::Index>& L_idx, Eigen::Index d, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("holder_split_holds: eta in (0,1)");
  const double q = Q(z);
  const double six = z.array().pow(6).sum();
  if (six == 0.0) return true;
  const double lhs = q == 0.0 ? kNegInf
                              : static_cast<double>(d) * std::log(std::fabs(q)) -
                                    0.5 * static_cast<double>(d) * std::log(six);
  const double half = 0.5 * static_cast<double>(d) - 1.0;
  const double t1 = -half * std::log(eta) + log_ratio_power(z, S_idx, d);
  const double t2 = -half * std::log(1.0 - eta) + log_ratio_power(z, L_idx, d);
  const double rhs = log_add(t1, t2);
  return lhs <= rhs + 1e-9 * std::max(1.0, std::fabs(rhs));
}

bool large_coordinate_bound_holds(const CorrelationProfile& alpha,
                                  const EventThresholds& thresholds, Eigen::Index d,
                                  Eigen::Index n) {
  const EventReport ev = classify_events(alpha, thresholds, d, n);
  if (!ev.E0 || ev.L.empty()) return true;  // vacuous
  double six = 0.0;
  for (const Eigen::Index i : ev.L) {
    const double a2 = alpha.alpha[i] * alpha.alpha[i];
    six += a2 * a2 * a2;
  }
  const double lhs = ev.Q_alpha_L * ev.Q_alpha_L / six;
  const double rhs = (1.0 + thresholds.delta) * static_cast<double>(d);
  return lhs <= rhs * (1.0 + 1e-12);
}

}  // namespace otl
