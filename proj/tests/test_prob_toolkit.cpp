#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "otl/logdomain.hpp"
#include "otl/prob_toolkit.hpp"
#include "otl/rng.hpp"

using namespace otl;

TEST_CASE("special functions: chi-square survival against erfc and known values") {
  // S(x; 1) = erfc(sqrt(x/2)).
  for (double x : {0.5, 1.0, 3.84, 10.0}) {
    CHECK(chi_square_sf(x, 1.0) == doctest::Approx(std::erfc(std::sqrt(x / 2.0))).epsilon(1e-10));
  }
  // S(x; 2) = exp(-x/2).
  CHECK(chi_square_sf(3.0, 2.0) == doctest::Approx(std::exp(-1.5)).epsilon(1e-12));
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
}

TEST_CASE("wilson interval and clopper-pearson zero bound") {
  const WilsonInterval w = wilson_interval(50, 1000);
  CHECK(w.p_hat == doctest::Approx(0.05));
  CHECK(w.lower < 0.05);
  CHECK(w.upper > 0.05);
  CHECK(w.upper < 0.07);

  const WilsonInterval zero = wilson_interval(0, 100000);
  CHECK(zero.lower == 0.0);
  CHECK(zero.upper == doctest::Approx(3.8415e-5).epsilon(0.01));

  CHECK(clopper_pearson_upper_zero(1000) ==
        doctest::Approx(1.0 - std::pow(0.05, 1e-3)).epsilon(1e-12));
}

TEST_CASE("adaptive quadrature on analytic integrals") {
  CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(integrate([](double x) { return std::exp(-x); }, 0.0, 20.0) ==
        doctest::Approx(1.0 - std::exp(-20.0)).epsilon(1e-10));
}

TEST_CASE("truncated quartic moments: analytic 42 and truncation bias") {
  // tau -> infinity: E[(x^4-3x^2)^2] = E[x^8] - 6 E[x^6] + 9 E[x^4] = 42.
  const TruncatedQuarticReport big = truncated_quartic_moments(1e6, 400000, 90);
  CHECK(big.second_moment > 40.0);
  CHECK(big.second_moment < 43.0);
  CHECK(std::fabs(big.mean) < 0.1);
  CHECK(big.mgf_ok);
  CHECK(big.nominal_nu_sq == 41.0);

  // tau = 3: truncation at 3^{1/4} keeps only the negative lobe.
  const TruncatedQuarticReport small = truncated_quartic_moments(3.0, 200000, 91);
  CHECK(small.mean != 0.0);
  CHECK(std::fabs(small.mean) < 1.0);
  CHECK(small.mgf_ok);
}

TEST_CASE("subexp tail: closed forms and empirical tail of the truncated quartic") {
  SubExpParams p{1.0, 0.5, 0.0};
  const TailBound at0 = subexp_tail(p, 0.0);
  CHECK(at0.max_form == 1.0);

  SubExpParams gauss{1.0, 1e-12, 0.0};
  CHECK(subexp_tail(gauss, 2.0).max_form == doctest::Approx(std::exp(-2.0)));

  // Empirical tail of Z = (x^4 - 3x^2) 1{|x| <= tau^{1/4}} vs the sum form
  // with the analytic parameters (nu = sqrt(42), b = 4 sqrt(tau)).
  const double tau = 100.0;
  SubExpParams zp{std::sqrt(42.0), 4.0 * std::sqrt(tau), 0.0};
  const double trunc = std::pow(tau, 0.25);
  const int n = 1000000;
  int c5 = 0, c10 = 0, c20 = 0;
  RngStream rng(92, 0);
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    const double z = std::fabs(x) <= trunc ? x * x * x * x - 3.0 * x * x : 0.0;
    if (z >= 5.0) ++c5;
    if (z >= 10.0) ++c10;
    if (z >= 20.0) ++c20;
  }
  CHECK(static_cast<double>(c5) / n <= subexp_tail(zp, 5.0).sum_form);
  CHECK(static_cast<double>(c10) / n <= subexp_tail(zp, 10.0).sum_form);
  CHECK(static_cast<double>(c20) / n <= subexp_tail(zp, 20.0).sum_form);
}

TEST_CASE("subexp moment bound: Gaussian case and empirical sixth moment") {
  // mu = 0, b = 0, p = 2: bound = c_mom nu^2 2!! = 2 c_mom nu^2 >= E[X^2] = nu^2.
  SubExpParams gauss{2.0, 0.0, 0.0};
  const double lb = subexp_moment_bound_log(gauss, 2, 0.5);
  CHECK(lb == doctest::Approx(std::log(4.0) + std::log(2.0) - std::log(0.5) + std::log(4.0)));
  CHECK(std::exp(lb) >= 4.0);

  // E|Z|^6 of the truncated quartic at tau = 100 against the bound with the
  // measured parameters.
  const double tau = 100.0;
  const TruncatedQuarticReport rep = truncated_quartic_moments(tau, 400000, 93);
  const double trunc = std::pow(tau, 0.25);
  RngStream rng(93, 1);
  double m6 = 0.0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    const double z = std::fabs(x) <= trunc ? x * x * x * x - 3.0 * x * x : 0.0;
    m6 += std::pow(std::fabs(z), 6);
  }
  m6 /= n;
  SubExpParams zp{std::sqrt(rep.nu_sq), 4.0 * std::sqrt(tau), rep.mean};
  CHECK(std::log(m6) <= subexp_moment_bound_log(zp, 6, 0.1));

  // p!! recurrence: bound(p) / bound(p-2) tracks the double-factorial growth
  // times the Holder factor (1-eps)^{-2}.
  SubExpParams pure{1.0, 0.0, 0.0};
  const double g8 = subexp_moment_bound_log(pure, 8, 0.5) - subexp_moment_bound_log(pure, 6, 0.5);
  CHECK(g8 == doctest::Approx(log_double_factorial(8) - log_double_factorial(6) +
                              2.0 * std::log(2.0)));
}

TEST_CASE("truncated moment bound: preconditions and quadrature oracles") {
  SubExpParams gauss{1.0, 1e-9, 0.0};
  CHECK_THROWS_AS(truncated_moment_bound_log(gauss, 8, 1.0, 0.5, 0.5), std::invalid_argument);

  // Gaussian branch at p = 8, s = 4: the full bound dominates the quadrature
  // oracle, and the leading term (1+z)^p p e^{-s^2/2} s^p sits within a
  // [0.1, 100] factor of it.
  const double s4 = 4.0;
  const double bound = std::exp(truncated_moment_bound_log(gauss, 8, s4, 0.5, 0.5));
  const double oracle =
      2.0 * integrate(
                [](double x) {
                  return std::pow(x, 8) * std::exp(-x * x / 2.0) / std::sqrt(2.0 * M_PI);
                },
                s4, 60.0, 1e-12);
  CHECK(bound >= oracle);
  const double leading = std::pow(1.1, 8) * 8.0 * std::exp(-s4 * s4 / 2.0) * std::pow(s4, 8);
  CHECK(leading / oracle > 0.1);
  CHECK(leading / oracle < 100.0);

  // Exponential branch: X exponential with mean 2b = 1, p = 6, s = 12; the
  // bound covers the quadrature and its leading term e^{-s} s^p / eta matches
  // the oracle's order.
  SubExpParams expo{1e-9, 0.5, 0.0};
  const double be = std::exp(truncated_moment_bound_log(expo, 6, 12.0, 0.5, 0.5));
  const double oe = integrate([](double x) { return std::pow(x, 6) * std::exp(-x); }, 12.0, 200.0,
                              1e-12);
  CHECK(be >= oe);
  const double exp_leading = std::exp(-12.0) * std::pow(12.0, 6) / 0.5;
  CHECK(exp_leading / oe > 0.1);
  CHECK(exp_leading / oe < 100.0);
}

TEST_CASE("gaussian quadratic tails: identity, zero, rank-one chi-square") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(6, 6);
  const QuadraticTailReport id = gaussian_quadratic_tail_check(eye, 1.0, 200000, 94);
  CHECK(id.upper.verdict != CheckVerdict::violated);
  CHECK(id.lower.verdict != CheckVerdict::violated);
  CHECK(id.upper.empirical <= std::exp(-1.0));

  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(4, 4);
  const QuadraticTailReport z = gaussian_quadratic_tail_check(zero, 1.0, 1000, 95);
  CHECK(z.upper.empirical == 0.0);
  CHECK(z.lower.empirical == 0.0);

  // Rank one: ||Ax||^2 = lambda chi^2_1; the upper event probability can be
  // computed exactly by the chi-square survival oracle.
  Eigen::MatrixXd r1 = Eigen::MatrixXd::Zero(3, 3);
  r1(0, 0) = 2.0;
  const double t = 0.7;
  const double thr = (2.0 + 2.0 * std::sqrt(4.0 * t) + 2.0 * 2.0 * t) / 2.0;  // chi^2_1 units
  const double exact = chi_square_sf(thr, 1.0);
  const QuadraticTailReport rr = gaussian_quadratic_tail_check(r1, t, 400000, 96);
  CHECK(rr.upper.empirical == doctest::Approx(exact).epsilon(0.1));
  CHECK(exact <= std::exp(-t));

  Eigen::MatrixXd notpsd = eye;
  notpsd(0, 0) = -1.0;
  CHECK_THROWS_AS(gaussian_quadratic_tail_check(notpsd, 1.0, 10, 97), std::invalid_argument);
}

TEST_CASE("norm lower tail: chi-square reduction and degenerate cases") {
  const Eigen::Index n = 10;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 0);
  const CheckReport r = norm_lower_tail_check(mu, eye, e1, 1.0, 200000, 98);
  CHECK(r.verdict != CheckVerdict::violated);
  // Exact: Pr[chi^2_10 >= 10 - 1 - 2 sqrt(10)] vs 1 - e^{-1}.
  const double thr = 10.0 - 1.0 - 2.0 * std::sqrt(10.0);
  CHECK(r.empirical == doctest::Approx(chi_square_sf(thr, 10.0)).epsilon(0.01));

  // t = 0: threshold tr - ||.||; frequency is just reported.
  const CheckReport t0 = norm_lower_tail_check(mu, eye, e1, 0.0, 10000, 99);
  CHECK(t0.empirical >= 0.0);

  // Sigma = 0: ||X||^2 is constant 0 >= threshold 0; frequency 1.
  const CheckReport cz = norm_lower_tail_check(mu, Eigen::MatrixXd::Zero(n, n), e1, 1.0, 100, 100);
  CHECK(cz.empirical == 1.0);

  Eigen::VectorXd bad_mu = Eigen::VectorXd::Zero(n + 1);
  CHECK_THROWS_AS(norm_lower_tail_check(bad_mu, eye, e1, 1.0, 10, 101), std::invalid_argument);
}

TEST_CASE("sixth power triangle: degenerate and adversarial scalar cases") {
  Eigen::VectorXd a(3), zero(3);
  a << 1, -2, 0.5;
  zero.setZero();
  CHECK(sixth_power_triangle_check(a, zero, 0.1));
  CHECK(sixth_power_triangle_check(zero, a, 0.1));

  // Adversarial scalar search at several epsilons: the frozen constant must
  // dominate the exact optimum (1 - (1+eps)^{-1/5})^{-5} eps^5.
  for (const double eps : {0.05, 0.1, 0.3, 0.6, 0.9}) {
    Eigen::VectorXd one(1), b(1);
    one << 1.0;
    double worst = 0.0, worst_b = 0.0;
    for (int i = 1; i <= 20000; ++i) {
      const double bv = 1e-4 * i;  // covers the maximizer for every eps in (0,1)
      const double need = (std::pow(1.0 + bv, 6) - (1.0 + eps)) / std::pow(bv, 6);
      if (need > worst) {
        worst = need;
        worst_b = bv;
      }
    }
    b << worst_b;
    CHECK(sixth_power_triangle_check(one, b, eps));
    CHECK(worst * std::pow(eps, 5) <= kSixthPowerC6);
    const double exact = std::pow(1.0 - std::pow(1.0 + eps, -0.2), -5.0) * std::pow(eps, 5);
    CHECK(worst * std::pow(eps, 5) == doctest::Approx(exact).epsilon(1e-3));
  }
}

TEST_CASE("antiderivative identity: degree zero, quadrature, pole") {
  CHECK(exp_polynomial_antiderivative(0.0, 2.0, 0, 1.0) ==
        doctest::Approx(-std::exp(-2.0) / 2.0));

  const double definite = exp_polynomial_antiderivative(0.0, 1.0, 2, 5.0) -
                          exp_polynomial_antiderivative(0.0, 1.0, 2, 1.0);
  const double oracle =
      integrate([](double x) { return std::exp(-x) * x * x; }, 1.0, 5.0, 1e-12);
  CHECK(definite == doctest::Approx(oracle).epsilon(1e-8));

  // Finite-difference derivative recovers the integrand.
  const double x0 = 2.0, h = 1e-6;
  const double fd = (exp_polynomial_antiderivative(1.0, 0.7, 3, x0 + h) -
                     exp_polynomial_antiderivative(1.0, 0.7, 3, x0 - h)) /
                    (2.0 * h);
  const double integrand = std::exp(-0.7 * x0) * std::pow(1.0 + x0, 3);
  CHECK(fd == doctest::Approx(integrand).epsilon(1e-6));

  CHECK_THROWS_AS(exp_polynomial_antiderivative(-2.0, 1.0, 3, 2.0), std::invalid_argument);
}

TEST_CASE("factorial and double factorial bounds") {
  CHECK(factorial_bounds_check(1));
  for (long n = 2; n <= 170; ++n) CHECK(factorial_bounds_check(n));
  for (long n = 2; n <= 80; ++n) CHECK(double_factorial_chain_check(n));
}

TEST_CASE("moment bounds stay finite in the log domain up to p = 500") {
  SubExpParams p{3.0, 7.0, 1.5};
  const double b500 = subexp_moment_bound_log(p, 500, 0.25);
  CHECK(std::isfinite(b500));
  CHECK(b500 > subexp_moment_bound_log(p, 400, 0.25));
  CHECK(std::isfinite(log_double_factorial(500)));
  CHECK(std::isfinite(truncated_moment_bound_log(p, 500, 2.0e4, 0.25, 0.5)));
}

TEST_CASE("subexp parameter addition") {
  const SubExpParams single{2.0, 3.0, 0.5};
  const SubExpParams same = subexp_sum_params({single});
  CHECK(same.nu == 2.0);
  CHECK(same.b == 3.0);
  CHECK(same.mu == 0.5);

  std::vector<SubExpParams> copies(16, SubExpParams{1.5, 0.7, 0.0});
  const SubExpParams sum = subexp_sum_params(copies);
  CHECK(sum.nu == doctest::Approx(4.0 * 1.5));
  CHECK(sum.b == 0.7);
  CHECK_THROWS_AS(subexp_sum_params({}), std::invalid_argument);
}

TEST_CASE("MGF of a sum stays under the combined-parameter envelope") {
  // 100 independent truncated-quartic summands; combined (nu*, b*) envelope
  // checked on the lambda grid within MC error.
  const double tau = 50.0;
  const double trunc = std::pow(tau, 0.25);
  const int terms = 100, samples = 20000;
  const TruncatedQuarticReport one = truncated_quartic_moments(tau, 300000, 102);
  const SubExpParams combined =
      subexp_sum_params(std::vector<SubExpParams>(terms, {std::sqrt(one.nu_sq), 4.0 * std::sqrt(tau), one.mean}));
  const double lambda_max = 1.0 / (8.0 * std::sqrt(tau)) * 0.999;
  for (const double lambda : {-lambda_max, -0.3 * lambda_max, 0.3 * lambda_max, lambda_max}) {
    double acc = 0.0, acc2 = 0.0;
    for (int s = 0; s < samples; ++s) {
      RngStream rng(103, static_cast<uint64_t>(s));
      double z = 0.0;
      for (int t = 0; t < terms; ++t) {
        const double x = rng.normal();
        if (std::fabs(x) <= trunc) z += x * x * x * x - 3.0 * x * x;
      }
      const double e = std::exp(lambda * (z - combined.mu));
      acc += e;
      acc2 += e * e;
    }
    const double mgf = acc / samples;
    const double se = std::sqrt(std::max(0.0, acc2 / samples - mgf * mgf) / samples);
    // Bernstein-parameter envelope: exp(nu^2 l^2 / (2 (1 - b |l|))).
    const double envelope = std::exp(0.5 * combined.nu * combined.nu * lambda * lambda /
                                     (1.0 - combined.b * std::fabs(lambda)));
    CHECK(mgf <= envelope + 3.0 * se);
  }
}
