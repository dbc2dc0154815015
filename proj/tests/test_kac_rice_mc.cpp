#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "otl/kac_rice_mc.hpp"

using namespace otl;

TEST_CASE("conditional rows are orthogonal to qbar; M is symmetric") {
  RngStream init(60, 0);
  Vec y = init.normal_vector(12);
  ConditionalSpec spec(y, y, 9);
  RngStream rng(60, 1);
  for (int s = 0; s < 20; ++s) {
    const Mat Z = sample_conditional_rows(spec, rng);
    for (Eigen::Index r = 0; r < Z.rows(); ++r)
      CHECK(std::fabs(Z.row(r).dot(spec.qbar)) < 1e-12 * Z.row(r).norm());
    const Mat M = sample_conditional_matrix(spec, rng);
    CHECK((M - M.transpose()).norm() < 1e-12);
  }
  CHECK(std::fabs(spec.qbar.norm() - 1.0) < 1e-12);
}

TEST_CASE("w = 0 gives the zero matrix") {
  Vec y(4);
  y << 1, 2, -1, 0.5;
  ConditionalSpec spec(Vec::Zero(4), y, 6);
  RngStream rng(61, 0);
  CHECK(sample_conditional_matrix(spec, rng).norm() == 0.0);
  CHECK(conditional_trace_mean(spec) == 0.0);
}

TEST_CASE("empirical row covariance matches Id - qbar qbar^T") {
  const Eigen::Index n = 8;
  RngStream init(62, 0);
  Vec y = init.normal_vector(n);
  ConditionalSpec spec(y, y, 2);  // one row per draw
  Mat cov = Mat::Zero(n, n);
  const int samples = 100000;
  for (int s = 0; s < samples; ++s) {
    RngStream rng(62, static_cast<uint64_t>(s + 1));
    const Mat Z = sample_conditional_rows(spec, rng);
    cov.noalias() += Z.row(0).transpose() * Z.row(0);
  }
  cov /= static_cast<double>(samples);
  const Mat target = Mat::Identity(n, n) - spec.qbar * spec.qbar.transpose();
  CHECK((cov - target).norm() < 0.05);
}

TEST_CASE("conditional trace mean: closed-form examples") {
  Vec oneone(2);
  oneone << 1, 1;
  CHECK(conditional_trace_mean(ConditionalSpec(oneone, oneone, 3)) == doctest::Approx(-2.0));

  Vec e1 = Vec::Zero(5);
  e1[0] = 1.0;
  CHECK(conditional_trace_mean(ConditionalSpec(e1, e1, 7)) == doctest::Approx(6.0));

  Vec zero4 = Vec::Zero(4);
  CHECK_THROWS_AS(ConditionalSpec(Vec::Ones(4), zero4, 5), std::invalid_argument);
}

TEST_CASE("MC trace mean agrees with the closed form (z-score < 3)") {
  for (uint64_t s = 0; s < 5; ++s) {
    RngStream init(63, s);
    Vec w = init.normal_vector(30);
    ConditionalSpec spec(w, w, 10);
    const int samples = 20000;
    double acc = 0.0, acc2 = 0.0;
    for (int i = 0; i < samples; ++i) {
      RngStream rng(64 + s, static_cast<uint64_t>(i));
      const double t = sample_conditional_matrix(spec, rng).trace();
      acc += t;
      acc2 += t * t;
    }
    const double mean = acc / samples;
    const double sd = std::sqrt(std::max(0.0, acc2 / samples - mean * mean));
    const double se = sd / std::sqrt(static_cast<double>(samples));
    CHECK(std::fabs(mean - conditional_trace_mean(spec)) < 3.0 * se + 1e-9);
  }
}

TEST_CASE("trace moments: p = 0, Jensen direction, seeded bound") {
  RngStream init(65, 0);
  Vec w = 0.3 * init.normal_vector(30);
  ConditionalSpec spec(w, w, 10);
  const TraceMomentReport p0 = mc_trace_moments(spec, 0, 100, 66);
  CHECK(p0.log_estimate == 0.0);
  CHECK(p0.holds);

  const TraceMomentReport p1 = mc_trace_moments(spec, 1, 50000, 67);
  const double mean_abs = std::fabs(conditional_trace_mean(spec));
  CHECK(p1.log_estimate >= std::log(mean_abs) - 3.0 * p1.std_err_log - 1e-6);

  const TraceMomentReport p9 = mc_trace_moments(spec, 9, 50000, 68);
  CHECK(p9.holds);
}

TEST_CASE("density at zero: both conventions and the histogram oracle") {
  Vec unit6(1);
  unit6 << 1.0;  // ||alpha||_6^6 = 1
  const CorrelationProfile p = make_profile(unit6);
  CHECK(density_at_zero_log(p, 2, DensityConvention::exact) ==
        doctest::Approx(-0.5 * std::log(2.0 * M_PI)));
  CHECK(density_at_zero_log(p, 2, DensityConvention::ambient) ==
        doctest::Approx(-std::log(2.0 * M_PI)));

  // One coordinate of g = sum alpha_i^3 b_i is N(0, ||alpha||_6^6): the
  // empirical density at 0 matches (2 pi ||alpha||_6^6)^{-1/2} within 5%.
  RngStream init(69, 0);
  Vec alpha = init.normal_vector(12);
  const double sigma2 = alpha.array().pow(6).sum();
  const double h = 0.05 * std::sqrt(sigma2);
  const int samples = 1000000;
  int hits = 0;
  RngStream rng(69, 1);
  for (int s = 0; s < samples; ++s) {
    double g = 0.0;
    for (Eigen::Index i = 0; i < 12; ++i)
      g += alpha[i] * alpha[i] * alpha[i] * rng.normal();
    if (std::fabs(g) < h) ++hits;
  }
  const double kde = static_cast<double>(hits) / (2.0 * h * samples);
  const double exact = 1.0 / std::sqrt(2.0 * M_PI * sigma2);
  CHECK(std::fabs(kde - exact) < 0.05 * exact);

  Vec z = Vec::Zero(3);
  CHECK_THROWS_AS(density_at_zero_log(make_profile(z), 4), std::invalid_argument);
}

TEST_CASE("sphere surface measures") {
  CHECK(sphere_log_surface(2, SurfaceConvention::surface) ==
        doctest::Approx(std::log(2.0 * M_PI)));
  CHECK(sphere_log_surface(3, SurfaceConvention::surface) ==
        doctest::Approx(std::log(4.0 * M_PI)));
  CHECK(sphere_log_surface(3, SurfaceConvention::ball_volume_full) ==
        doctest::Approx(std::log(4.0 * M_PI / 3.0)));
  CHECK(sphere_log_surface(3, SurfaceConvention::ball_volume_lower) ==
        doctest::Approx(std::log(M_PI) - std::lgamma(2.0)));
}

TEST_CASE("T values: boundary indicator, zero Q, single large coordinate") {
  EventThresholds th;
  th.delta = 0.4;
  th.C = 5.0;
  th.c_P = 2.5;  // keeps P = (2 - c_P delta) sqrt(Knd) positive
  const Eigen::Index d = 10, n = 100;
  RngStream rng(70, 0);
  Vec a = rng.normal_vector(n);
  const CorrelationProfile prof = make_profile(a);
  const TValues t = T_values(prof, th, d);
  CHECK(std::isfinite(t.log_T1));
  CHECK_FALSE(t.T2);  // P >> Q_S for random alpha
  CHECK(t.log_T4 == kNegInf);  // L empty at these draws whp

  // Planted single coordinate in L: T4^{2/d} = (t^4-3t^2)^2 / t^6.
  Vec b = 0.1 * rng.normal_vector(n);
  const double big = 4.0;
  b[0] = big;
  const TValues tb = T_values(make_profile(b), th, d);
  const double expect = std::pow(big * big - 3.0, 2) / (big * big);
  CHECK(tb.log_T4 == doctest::Approx(0.5 * d * std::log(expect)).epsilon(1e-9));
  CHECK(expect <= (1.0 + th.delta) * d);

  // T1 matches its closed form, and T2 flips once P drops below Q(alpha_S).
  const EventReport ev = classify_events(prof, th, d, n);
  double s44 = 0.0;
  for (const Eigen::Index i : ev.S) s44 += std::pow(a[i], 4);
  const double P = th.P(d, n);
  CHECK(t.log_T1 ==
        doctest::Approx(-(P - ev.Q_alpha_S) * (P - ev.Q_alpha_S) / (36.0 * s44)).epsilon(1e-12));
  EventThresholds shrunk = th;
  shrunk.K = 1e-12;  // P ~ 0: the indicator T2 = 1{P <= Q_S} follows the sign of Q_S
  const TValues ts = T_values(prof, shrunk, d);
  CHECK(ts.T2 == (shrunk.P(d, n) <= ev.Q_alpha_S));
}

TEST_CASE("psd check and per-sample AM-GM bound") {
  RngStream rng(71, 0);
  // PSD matrix with known determinant.
  Mat G(4, 6);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 6; ++j) G(i, j) = rng.normal();
  const Mat psd = G * G.transpose();
  const PsdCheck chk = psd_check(psd);
  CHECK(chk.psd);
  CHECK(chk.logdet == doctest::Approx(std::log(psd.determinant())).epsilon(1e-8));
  CHECK(amgm_det_bound_holds(psd));

  Mat indef = psd;
  indef(0, 0) -= 100.0;
  CHECK_FALSE(psd_check(indef).psd);
  CHECK(amgm_det_bound_holds(indef));  // vacuous

  // Semidefinite: rank-deficient Gram.
  Mat thin(4, 2);
  thin << 1, 0, 0, 1, 1, 1, 0, 0;
  const Mat semi = thin * thin.transpose();
  CHECK(psd_check(semi).psd);
}

TEST_CASE("psd probability: inapplicable path and planted seeded bound") {
  EventThresholds th;
  th.K = 40.0;
  const Eigen::Index d = 8, n = 200;
  RngStream rng(72, 0);
  Vec plain = rng.normal_vector(n);
  const CorrelationProfile plain_prof = make_profile(plain);
  // Random alpha fails F_k (no coordinate above tau): inapplicable.
  const PsdProbabilityReport na =
      psd_probability(ConditionalSpec(plain, plain, d), plain_prof, th, 100, 73);
  CHECK(na.verdict == PsdProbabilityReport::Verdict::inapplicable);

  Vec planted = plain;
  planted[4] = std::pow(2.0 * th.tau(d, n), 0.25);
  const CorrelationProfile prof = make_profile(planted);
  const PsdProbabilityReport rep =
      psd_probability(ConditionalSpec(planted, planted, d), prof, th, 20000, 74);
  CHECK(rep.applicable);
  CHECK(rep.verdict == PsdProbabilityReport::Verdict::holds);
  CHECK(rep.wilson_upper <= rep.bound);
}

TEST_CASE("psd probability with w = 0 reduces to Pr[E2'']") {
  EventThresholds th;
  th.K = 40.0;
  const Eigen::Index d = 8, n = 200;
  RngStream rng(75, 0);
  Vec alpha = rng.normal_vector(n);
  alpha[0] = std::pow(2.0 * th.tau(d, n), 0.25);  // make F_k and E0 hold
  const CorrelationProfile prof = make_profile(alpha);
  const ConditionalSpec spec(Vec::Zero(n), alpha, d);
  const PsdProbabilityReport rep = psd_probability(spec, prof, th, 5000, 76);
  CHECK(rep.applicable);
  // M = 0 is always PSD, so successes count exactly the E2'' event; with the
  // planted qbar weight the conditioned column is short and E2'' never holds.
  CHECK(rep.p_hat <= 0.01);
}

TEST_CASE("estimate_W_log: dead indicators, direct <= surrogate on shared samples") {
  EventThresholds th;
  const Eigen::Index d = 8, n = 20;
  const CorrelationProfile dead = make_profile(Vec::Constant(n, 0.01));
  const KacRiceEstimate zero = estimate_W_log(dead, d, th, 100, 77);
  CHECK(zero.sign == 0);
  CHECK(zero.log_value == kNegInf);
  CHECK_FALSE(zero.events_pass);

  // Force the outer events with a tailored alpha: draw until E0 E1 E2 pass.
  // (E2 caps coordinates at sqrt(delta d); the sixth-moment condition needs
  // coordinates that large, so delta d must be ~6+ for both to co-occur.)
  EventThresholds soft;
  soft.delta = 0.8;
  soft.gamma = 0.1;
  soft.K = 400.0;
  KacRiceEstimate est;
  bool found = false;
  for (uint64_t s = 0; s < 400 && !found; ++s) {
    RngStream rng(78, s);
    const CorrelationProfile prof = make_profile(rng.normal_vector(n));
    const EventReport ev = classify_events(prof, soft, d, n);
    if (!(ev.E0 && ev.E1 && ev.E2)) continue;
    found = true;
    est = estimate_W_log(prof, d, soft, 40000, 79 + s);
  }
  REQUIRE(found);
  if (est.sign != 0) {
    CHECK(est.log_W <= est.log_W_surrogate + 1e-9);
  } else {
    CHECK(est.zero_observed);
    CHECK(est.cp_upper_log > kNegInf);
  }
}

TEST_CASE("estimate_h_expectation: impossible events give zero; strata recorded") {
  EventThresholds th;
  th.gamma = 1e12;  // E1 impossible
  const KacRiceEstimate zero = estimate_h_expectation(5, 20, th, 50, 50, 80);
  CHECK(zero.sign == 0);
  CHECK(zero.log_value == kNegInf);

  EventThresholds soft;
  soft.delta = 0.8;
  soft.gamma = 0.1;
  soft.K = 4.0;
  const KacRiceEstimate est = estimate_h_expectation(8, 20, soft, 400, 400, 81);
  CHECK(est.n_samples == 400);
  std::uint64_t counted = 0;
  for (const auto& s : est.strata) counted += s.count;
  CHECK(counted == 400);
  const std::string j = est.to_json();
  CHECK(j.find("\"strata\"") != std::string::npos);
  CHECK(j.find("\"conventions\"") != std::string::npos);
}

TEST_CASE("h estimate is finite and stratified at a PSD-observable size") {
  // At d = 4 the conditional matrices are 3x3 and the PSD event is common
  // enough to estimate directly; the literal fourth-power moment switch
  // keeps E0 compatible with E2 at this size.
  EventThresholds th;
  th.delta = 0.9;
  th.gamma = 0.1;
  th.e0_sixth_moment = false;
  const KacRiceEstimate est = estimate_h_expectation(4, 10, th, 2000, 500, 4);
  CHECK(est.sign == 1);
  CHECK(std::isfinite(est.log_value));
  CHECK(est.log_value < 0.0);  // expected count far below one
  CHECK(est.std_err_log < 1.0);
  std::uint64_t mass = 0;
  for (const auto& s : est.strata) mass += s.count;
  CHECK(mass == 2000);
}

TEST_CASE("h with one alpha sample reduces to Vol * W * density") {
  EventThresholds soft;
  soft.delta = 0.8;
  soft.gamma = 0.1;
  soft.K = 400.0;
  const Eigen::Index d = 8, n = 20;
  const uint64_t seed = 91;
  const KacRiceEstimate h = estimate_h_expectation(d, n, soft, 1, 20000, seed);
  // Reconstruct the single outer draw and the inner seed the estimator used.
  RngStream rng(seed, 0);
  const CorrelationProfile prof = make_profile(rng.normal_vector(n));
  const EventReport ev = classify_events(prof, soft, d, n);
  if (ev.E0 && ev.E1 && ev.E2) {
    const KacRiceEstimate w =
        estimate_W_log(prof, d, soft, 20000, seed ^ 0x9e3779b97f4a7c15ull, 1);
    if (w.sign != 0) {
      const double expected =
          sphere_log_surface(d) + w.log_value + density_at_zero_log(prof, d);
      CHECK(h.log_value == doctest::Approx(expected).epsilon(1e-12));
    } else {
      CHECK(h.sign == 0);
    }
  } else {
    CHECK(h.sign == 0);
  }
}

TEST_CASE("Holder split and large-coordinate bound on random draws") {
  EventThresholds th;
  th.delta = 0.5;
  th.C = 4.0;
  const Eigen::Index d = 20, n = 100;
  int nonvacuous = 0;
  for (uint64_t s = 0; s < 3000; ++s) {
    RngStream rng(82, s);
    const Vec a = rng.normal_vector(n);
    const CorrelationProfile prof = make_profile(a);
    const EventReport ev = classify_events(prof, th, d, n);
    for (const double eta : {0.25, 0.5, 0.75})
      CHECK(holder_split_holds(a, ev.S, ev.L, d, eta));
    CHECK(large_coordinate_bound_holds(prof, th, d, n));
    if (ev.E0 && !ev.L.empty()) ++nonvacuous;
  }
  CHECK(nonvacuous > 50);
}

TEST_CASE("sampled PSD matrices satisfy AM-GM determinant bound per sample") {
  RngStream init(83, 0);
  Vec w = Vec::Constant(20, 3.0);  // diagonally dominant: mostly PSD
  ConditionalSpec spec(w, w, 8);
  int psd_count = 0;
  for (int s = 0; s < 500; ++s) {
    RngStream rng(84, static_cast<uint64_t>(s));
    const Mat M = sample_conditional_matrix(spec, rng);
    if (psd_check(M).psd) ++psd_count;
    CHECK(amgm_det_bound_holds(M));
  }
  CHECK(psd_count > 100);  // non-vacuous
}
