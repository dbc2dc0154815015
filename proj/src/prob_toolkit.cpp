#include "otl/prob_toolkit.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "otl/logdomain.hpp"
#include "otl/parallel.hpp"
#include "otl/rng.hpp"

namespace otl {

using nlohmann::json;

std::string CheckReport::to_json() const {
  json j;
  j["claim_id"] = claim_id;
  j["empirical"] = empirical;
  j["bound"] = bound;
  j["verdict"] = verdict == CheckVerdict::holds      ? "holds"
                 : verdict == CheckVerdict::straddles ? "straddles"
                                                      : "violated";
  j["ci"] = {ci_lower, ci_upper};
  if (!parameters.empty()) j["parameters"] = json::parse(parameters);
  return j.dump();
}

namespace {

CheckVerdict verdict_of(const WilsonInterval& w, double bound) {
  if (w.upper <= bound) return CheckVerdict::holds;
  if (w.lower > bound) return CheckVerdict::violated;
  return CheckVerdict::straddles;
}

double truncated_quartic_sample(RngStream& rng, double trunc) {
  const double x = rng.normal();
  if (std::fabs(x) > trunc) return 0.0;
  const double x2 = x * x;
  return x2 * x2 - 3.0 * x2;
}

}  // namespace

TruncatedQuarticReport truncated_quartic_moments(double tau, std::uint64_t n_samples,
                                                 uint64_t seed, int grid_points, int workers) {
  if (tau <= 0.0) throw std::invalid_argument("truncated_quartic_moments: tau must be > 0");
  if (grid_points < 3 || grid_points % 2 == 0)
    throw std::invalid_argument("truncated_quartic_moments: grid_points must be odd and >= 3");
  TruncatedQuarticReport rep;
  rep.n_samples = n_samples;
  const double trunc = std::pow(tau, 0.25);
  const double lambda_max = 1.0 / (8.0 * std::sqrt(tau)) * 0.999;

  // Pass 1: mean and second moment, blockwise deterministic accumulation.
  constexpr std::uint64_t kBlock = 4096;
  const std::uint64_t blocks = (n_samples + kBlock - 1) / kBlock;
  std::vector<double> s1(blocks, 0.0), s2(blocks, 0.0);
  parallel_for(static_cast<std::int64_t>(blocks), workers, [&](std::int64_t b) {
    const std::uint64_t lo = static_cast<std::uint64_t>(b) * kBlock;
    const std::uint64_t hi = std::min(n_samples, lo + kBlock);
    double a1 = 0.0, a2 = 0.0;
    for (std::uint64_t i = lo; i < hi; ++i) {
      RngStream rng(seed, i);
      const double z = truncated_quartic_sample(rng, trunc);
      a1 += z;
      a2 += z * z;
    }
    s1[static_cast<std::size_t>(b)] = a1;
    s2[static_cast<std::size_t>(b)] = a2;
  });
  double m1 = 0.0, m2 = 0.0;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    m1 += s1[b];
    m2 += s2[b];
  }
  rep.mean = m1 / static_cast<double>(n_samples);
  rep.second_moment = m2 / static_cast<double>(n_samples);
  rep.nu_sq = rep.second_moment - rep.mean * rep.mean;

  // Pass 2: MGF curve on the lambda grid against e^{nu^2 lambda^2 / 2}.
  std::vector<double> lambdas(static_cast<std::size_t>(grid_points));
  for (int g = 0; g < grid_points; ++g)
    lambdas[static_cast<std::size_t>(g)] =
        lambda_max * (2.0 * g / static_cast<double>(grid_points - 1) - 1.0);
  std::vector<std::vector<double>> es(lambdas.size(), std::vector<double>(blocks, 0.0));
  std::vector<std::vector<double>> es2(lambdas.size(), std::vector<double>(blocks, 0.0));
  parallel_for(static_cast<std::int64_t>(blocks), workers, [&](std::int64_t b) {
    const std::uint64_t lo = static_cast<std::uint64_t>(b) * kBlock;
    const std::uint64_t hi = std::min(n_samples, lo + kBlock);
    std::vector<double> acc(lambdas.size(), 0.0), acc2(lambdas.size(), 0.0);
    for (std::uint64_t i = lo; i < hi; ++i) {
      RngStream rng(seed, i);
      const double z = truncated_quartic_sample(rng, trunc) - rep.mean;
      for (std::size_t g = 0; g < lambdas.size(); ++g) {
        const double e = std::exp(lambdas[g] * z);
        acc[g] += e;
        acc2[g] += e * e;
      }
    }
    for (std::size_t g = 0; g < lambdas.size(); ++g) {
      es[g][static_cast<std::size_t>(b)] = acc[g];
      es2[g][static_cast<std::size_t>(b)] = acc2[g];
    }
  });
  rep.mgf_ok = true;
  for (std::size_t g = 0; g < lambdas.size(); ++g) {
    double t1 = 0.0, t2 = 0.0;
    for (std::uint64_t b = 0; b < blocks; ++b) {
      t1 += es[g][b];
      t2 += es2[g][b];
    }
    MgfPoint pt;
    pt.lambda = lambdas[g];
    pt.empirical = t1 / static_cast<double>(n_samples);
    const double var =
        std::max(0.0, t2 / static_cast<double>(n_samples) - pt.empirical * pt.empirical);
    pt.std_err = std::sqrt(var / static_cast<double>(n_samples));
    pt.bound = std::exp(0.5 * rep.nu_sq * pt.lambda * pt.lambda);
    if (pt.empirical > pt.bound + 3.0 * pt.std_err) rep.mgf_ok = false;
    rep.mgf.push_back(pt);
  }
  return rep;
}

TailBound subexp_tail(const SubExpParams& params, double x) {
  if (x < 0.0) throw std::invalid_argument("subexp_tail: x must be >= 0");
  TailBound t;
  const double g = params.nu > 0.0 ? std::exp(-x * x / (2.0 * params.nu * params.nu))
                                   : (x == 0.0 ? 1.0 : 0.0);
  const double e = params.b > 0.0 ? std::exp(-x / (2.0 * params.b)) : (x == 0.0 ? 1.0 : 0.0);
  t.max_form = std::max(g, e);
  t.sum_form = std::min(1.0, g + e);
  return t;
}

double subexp_moment_bound_log(const SubExpParams& params, int p, double epsilon, double c_mom) {
  if (p < 1) throw std::invalid_argument("subexp_moment_bound_log: p must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("subexp_moment_bound_log: epsilon in (0,1)");
  const double pd = static_cast<double>(p);
  const double mean_term = params.mu == 0.0
                               ? kNegInf
                               : -(pd - 1.0) * std::log(epsilon) + pd * std::log(std::fabs(params.mu));
  const double gauss = params.nu == 0.0
                           ? kNegInf
                           : pd * std::log(params.nu) + log_double_factorial(p);
  const double expo = params.b == 0.0
                          ? kNegInf
                          : pd * std::log(2.0 * params.b) + log_factorial(pd);
  const double central = -(pd - 1.0) * std::log1p(-epsilon) + log_add(gauss, expo);
  return std::log(c_mom) + log_add(mean_term, central);
}

double truncated_moment_bound_log(const SubExpParams& params, int p, double s, double epsilon,
                                  double eta, double zeta_p) {
  if (p < 2) throw std::invalid_argument("truncated_moment_bound_log: p must be >= 2");
  if (!(epsilon > 0.0 && epsilon < 1.0) || !(eta > 0.0 && eta < 1.0))
    throw std::invalid_argument("truncated_moment_bound_log: epsilon, eta in (0,1)");
  const double pd = static_cast<double>(p);
  const double s_gauss = params.nu * std::sqrt(pd);
  const double s_expo = 2.0 * params.b * pd * (1.0 + eta);
  if (s < s_gauss)
    throw std::invalid_argument("truncated_moment_bound_log: s below nu*sqrt(p) (Gaussian constraint binds)");
  if (s < s_expo)
    throw std::invalid_argument("truncated_moment_bound_log: s below 2bp(1+eta) (exponential constraint binds)");
  const double mean_term = params.mu == 0.0
                               ? kNegInf
                               : -(pd - 1.0) * std::log(epsilon) + pd * std::log(std::fabs(params.mu));
  const double g = params.nu == 0.0
                       ? kNegInf
                       : pd * std::log1p(zeta_p) + 2.0 * std::log(pd) -
                             s * s / (2.0 * params.nu * params.nu);
  const double e = params.b == 0.0
                       ? kNegInf
                       : std::log(pd) - s / (2.0 * params.b) - std::log(eta);
  const double tail = -(pd - 1.0) * std::log1p(-epsilon) + pd * std::log(s) + log_add(g, e);
  return log_add(mean_term, tail);
}

QuadraticTailReport gaussian_quadratic_tail_check(const Eigen::MatrixXd& Sigma, double t,
                                                  std::uint64_t n_samples, uint64_t seed,
                                                  int workers) {
  if (Sigma.rows() != Sigma.cols()) throw std::invalid_argument("quadratic_tail: Sigma not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Sigma + Sigma.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-12 * std::max(1.0, std::fabs(ev.maxCoeff())))
    throw std::invalid_argument("quadratic_tail: Sigma is not PSD");
  const Eigen::VectorXd evc = ev.cwiseMax(0.0);
  const double tr = evc.sum();
  const double tr2 = evc.squaredNorm();
  const double op = evc.maxCoeff();
  const double up_thr = tr + 2.0 * std::sqrt(tr2 * t) + 2.0 * op * t;
  const double lo_thr = tr - 2.0 * std::sqrt(tr2 * t);
  const Eigen::Index k = Sigma.rows();

  std::vector<char> up(n_samples, 0), lo(n_samples, 0);
  parallel_for(static_cast<std::int64_t>(n_samples), workers, [&](std::int64_t i) {
    RngStream rng(seed, static_cast<uint64_t>(i));
    double q = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double g = rng.normal();
      q += evc[j] * g * g;  // ||Ax||^2 in the eigenbasis
    }
    // Strict inequalities keep degenerate (constant) cases out of both tails.
    if (q > up_thr) up[static_cast<std::size_t>(i)] = 1;
    if (q < lo_thr) lo[static_cast<std::size_t>(i)] = 1;
  });
  std::uint64_t cu = 0, cl = 0;
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    cu += up[i];
    cl += lo[i];
  }
  const double bound = std::exp(-t);
  QuadraticTailReport rep;
  const WilsonInterval wu = wilson_interval(cu, n_samples);
  rep.upper.claim_id = "quadratic_gaussian_upper";
  rep.upper.empirical = wu.p_hat;
  rep.upper.bound = bound;
  rep.upper.ci_lower = wu.lower;
  rep.upper.ci_upper = wu.upper;
  rep.upper.verdict = verdict_of(wu, bound);
  const WilsonInterval wl = wilson_interval(cl, n_samples);
  rep.lower.claim_id = "quadratic_gaussian_lower";
  rep.lower.empirical = wl.p_hat;
  rep.lower.bound = bound;
  rep.lower.ci_lower = wl.lower;
  rep.lower.ci_upper = wl.upper;
  rep.lower.verdict = verdict_of(wl, bound);
  return rep;
}

CheckReport norm_lower_tail_check(const Eigen::VectorXd& mu, const Eigen::MatrixXd& Sigma,
                                  const Eigen::VectorXd& v, double t, std::uint64_t n_samples,
                                  uint64_t seed, bool use_tr_sq, int workers) {
  const Eigen::Index n = Sigma.rows();
  if (Sigma.cols() != n || mu.size() != n)
    throw std::invalid_argument("norm_lower_tail_check: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Sigma + Sigma.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd U = es.eigenvectors();
  const double vn2 = v.squaredNorm();
  // X = sum_i v_i z_i ~ N((sum v_i) mu, ||v||^2 Sigma).
  const Eigen::VectorXd mean = v.sum() * mu;
  const Eigen::VectorXd eff = vn2 * ev;
  const double tr = eff.sum();
  const double op = eff.maxCoeff();
  const double rad = use_tr_sq ? std::sqrt(eff.squaredNorm() * t) : std::sqrt(tr * t);
  const double thr = tr - op - 2.0 * rad;

  std::vector<char> ok(n_samples, 0);
  const Eigen::VectorXd scale = eff.cwiseSqrt();
  parallel_for(static_cast<std::int64_t>(n_samples), workers, [&](std::int64_t i) {
    RngStream rng(seed, static_cast<uint64_t>(i));
    Eigen::VectorXd g(n);
    for (Eigen::Index j = 0; j < n; ++j) g[j] = scale[j] * rng.normal();
    const Eigen::VectorXd x = mean + U * g;
    if (x.squaredNorm() >= thr) ok[static_cast<std::size_t>(i)] = 1;
  });
  std::uint64_t c = 0;
  for (std::uint64_t i = 0; i < n_samples; ++i) c += ok[i];
  CheckReport rep;
  rep.claim_id = use_tr_sq ? "norm_concentration_trsq" : "norm_concentration_tr";
  const WilsonInterval w = wilson_interval(c, n_samples);
  rep.empirical = w.p_hat;
  rep.bound = 1.0 - std::exp(-t);
  rep.ci_lower = w.lower;
  rep.ci_upper = w.upper;
  // Lower-bound claim: holds when the CI cannot place the frequency below it.
  if (w.lower >= rep.bound)
    rep.verdict = CheckVerdict::holds;
  else if (w.upper < rep.bound)
    rep.verdict = CheckVerdict::violated;
  else
    rep.verdict = CheckVerdict::straddles;
  return rep;
}

bool sixth_power_triangle_check(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double epsilon,
                                double c6) {
  if (a.size() != b.size()) throw std::invalid_argument("sixth_power_triangle_check: size mismatch");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("sixth_power_triangle_check: epsilon in (0,1)");
  const double lhs = (a + b).array().pow(6).sum();
  const double rhs = (1.0 + epsilon) * a.array().pow(6).sum() +
                     (c6 / std::pow(epsilon, 5)) * b.array().pow(6).sum();
  return lhs <= rhs * (1.0 + 1e-12);
}

double exp_polynomial_antiderivative(double mu, double beta, int deg, double x) {
  if (beta <= 0.0) throw std::invalid_argument("exp_polynomial_antiderivative: beta must be > 0");
  if (deg < 0) throw std::invalid_argument("exp_polynomial_antiderivative: deg must be >= 0");
  const double u = mu + x;
  if (u == 0.0) throw std::invalid_argument("exp_polynomial_antiderivative: pole at mu + x = 0");
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= deg; ++k) {
    term *= static_cast<double>(deg - k + 1) / (u * beta);
    sum += term;
  }
  return -std::exp(-beta * x) * std::pow(u, deg) / beta * sum;
}

bool factorial_bounds_check(long n) {
  if (n < 1) throw std::invalid_argument("factorial_bounds_check: n must be >= 1");
  const double nd = static_cast<double>(n);
  const double log_fact = log_factorial(nd);
  const double lower = 1.0 + nd * (std::log(nd) - 1.0);
  const double upper = 1.0 + (nd + 1.0) * (std::log(nd + 1.0) - 1.0);
  const double slack = 1e-12 * std::max(1.0, std::fabs(log_fact));
  return lower <= log_fact + slack && log_fact <= upper + slack;
}

bool double_factorial_chain_check(long n) {
  if (n < 1) throw std::invalid_argument("double_factorial_chain_check: n must be >= 1");
  const double nd = static_cast<double>(n);
  // First link with coefficient e: (2n-2)!! = 2^{n-1}(n-1)! >= e(2(n-1)/e)^{n-1}.
  const double lo = 1.0 + (nd - 1.0) * (std::log(2.0 * (nd - 1.0)) - 1.0);
  const double a = log_double_factorial(2 * n - 2);
  const double b = log_double_factorial(2 * n - 1);
  const double c = log_double_factorial(2 * n);
  const double c2 = nd * std::log(2.0) + log_factorial(nd);
  const double hi = std::log(0.5) + 1.0 + (nd + 1.0) * (std::log(2.0 * (nd + 1.0)) - 1.0);
  const double slack = 1e-12 * std::max(1.0, std::fabs(c));
  if (n >= 2 && !(lo <= a + slack)) return false;
  return a <= b + slack && b <= c + slack && std::fabs(c - c2) <= slack && c <= hi + slack;
}

SubExpParams subexp_sum_params(const std::vector<SubExpParams>& params) {
  if (params.empty()) throw std::invalid_argument("subexp_sum_params: empty list");
  SubExpParams out;
  double nu2 = 0.0;
  for (const auto& p : params) {
    nu2 += p.nu * p.nu;
    out.b = std::max(out.b, p.b);
    out.mu += p.mu;
  }
  out.nu = std::sqrt(nu2);
  return out;
}

}  // namespace otl
