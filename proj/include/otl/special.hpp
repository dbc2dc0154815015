#pragma once

// Statistical special functions, confidence intervals, and the adaptive
// quadrature used as an independent oracle by the bound checks.

#include <cstdint>
#include <functional>

namespace otl {

double normal_cdf(double x);

// Regularized incomplete gamma functions P(s,x), Q(s,x) = 1 - P(s,x).
double gamma_p(double s, double x);
double gamma_q(double s, double x);

// Survival function of chi-square with k degrees of freedom.
double chi_square_sf(double x, double k);

struct WilsonInterval {
  double p_hat = 0.0;
  double lower = 0.0;
  double upper = 1.0;
};

// Wilson score interval at the given confidence (default 95%).
WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                               double confidence = 0.95);

// One-sided Clopper-Pearson upper bound for zero observed successes.
double clopper_pearson_upper_zero(std::uint64_t trials, double confidence = 0.95);

// Adaptive Simpson quadrature to the requested relative tolerance.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10);

}  // namespace otl
