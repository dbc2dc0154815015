#pragma once

// Numerically checkable versions of the probabilistic toolbox: sub-exponential
// parameters, tail and moment bounds, Gaussian quadratic forms, truncated
// moments, and helper identities. Bound checks assert only the holds
// direction; violations beyond the confidence interval are reported, never
// silently passed.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "otl/special.hpp"

namespace otl {

struct SubExpParams {
  double nu = 0.0;
  double b = 0.0;
  double mu = 0.0;
};

enum class CheckVerdict { holds, straddles, violated };

struct CheckReport {
  std::string claim_id;
  double empirical = 0.0;
  double bound = 0.0;
  CheckVerdict verdict = CheckVerdict::holds;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  std::string parameters;  // JSON fragment
  std::string to_json() const;
};

struct MgfPoint {
  double lambda = 0.0;
  double empirical = 0.0;  // E[e^{lambda (Z - mean)}]
  double bound = 0.0;      // e^{nu^2 lambda^2 / 2}
  double std_err = 0.0;
};

struct TruncatedQuarticReport {
  double mean = 0.0;
  double second_moment = 0.0;  // E[Z^2]
  double nu_sq = 0.0;          // measured second central moment
  double nominal_nu_sq = 41.0;  // commonly quoted parameter; Gaussian moments give 42
  std::vector<MgfPoint> mgf;
  bool mgf_ok = false;  // empirical <= bound + 3 se at every grid point
  std::uint64_t n_samples = 0;
};

// Moments and MGF curve of Z = (x^4 - 3x^2) 1{|x| <= tau^{1/4}}, x ~ N(0,1).
// Grid spans |lambda| < 1/(8 sqrt(tau)).
TruncatedQuarticReport truncated_quartic_moments(double tau, std::uint64_t n_samples,
                                                 uint64_t seed, int grid_points = 9,
                                                 int workers = 0);

struct TailBound {
  double max_form = 0.0;
  double sum_form = 0.0;
};

// Pr[X >= x] <= max/sum of the Gaussian and exponential branches.
TailBound subexp_tail(const SubExpParams& params, double x);

// log of c_mom * (eps^{1-p} |mu|^p + (1-eps)^{1-p} (nu^p p!! + (2b)^p p!)).
double subexp_moment_bound_log(const SubExpParams& params, int p, double epsilon,
                               double c_mom = 4.0);

// log of the truncated-moment bound; requires s >= max(nu sqrt(p), 2bp(1+eta)).
double truncated_moment_bound_log(const SubExpParams& params, int p, double s, double epsilon,
                                  double eta, double zeta_p = 0.1);

struct QuadraticTailReport {
  CheckReport upper;
  CheckReport lower;
};

// MC frequencies of the two quadratic-form tail events against e^{-t}.
QuadraticTailReport gaussian_quadratic_tail_check(const Eigen::MatrixXd& Sigma, double t,
                                                  std::uint64_t n_samples, uint64_t seed,
                                                  int workers = 0);

// MC frequency of ||X||^2 >= tr - ||.|| - 2 sqrt(tr(S^2) t) against 1 - e^{-t}.
// `use_tr_sq` picks the tr(Sigma^2) variant (default); false uses tr(Sigma).
CheckReport norm_lower_tail_check(const Eigen::VectorXd& mu, const Eigen::MatrixXd& Sigma,
                                  const Eigen::VectorXd& v, double t, std::uint64_t n_samples,
                                  uint64_t seed, bool use_tr_sq = true, int workers = 0);

// ||a+b||_6^6 <= (1+eps) ||a||_6^6 + (c6 / eps^5) ||b||_6^6.
inline constexpr double kSixthPowerC6 = 2.8e4;
bool sixth_power_triangle_check(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double epsilon,
                                double c6 = kSixthPowerC6);

// Antiderivative of e^{-beta x} (mu + x)^deg evaluated at x.
double exp_polynomial_antiderivative(double mu, double beta, int deg, double x);

// e (n/e)^n <= n! <= e ((n+1)/e)^{n+1}, in the log domain.
bool factorial_bounds_check(long n);

// Double-factorial chain: 2e(2(n-1)/e)^{n-1} <= (2n-2)!! <= (2n-1)!! <= (2n)!!
// = 2^n n! <= (e/2)(2(n+1)/e)^{n+1}.
bool double_factorial_chain_check(long n);

// nu* = sqrt(sum nu_k^2), b* = max b_k, means add.
SubExpParams subexp_sum_params(const std::vector<SubExpParams>& params);

}  // namespace otl
