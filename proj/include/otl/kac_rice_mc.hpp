#pragma once

// Conditional ensemble sampling for M | g = 0 and log-domain Monte Carlo
// estimation of the Kac-Rice integrand: W(alpha), h(alpha), T1..T4, PSD
// probabilities, and trace moments. Quantities of the form c^d live in the
// natural-log domain throughout.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "otl/landscape_probe.hpp"
#include "otl/logdomain.hpp"
#include "otl/tensor_core.hpp"

namespace otl {

enum class DensityConvention { ambient, exact };
enum class SurfaceConvention { surface, ball_volume_full, ball_volume_lower };
enum class WMode { direct, surrogate };

// The ensemble M_w | g_y = 0: samples are symmetric (d-1)x(d-1) matrices
//   ||w||_4^4 Id - 3 Z diag(w^2) Z^T,
// with the rows of Z standard normal conditioned orthogonal to
// qbar = y^{o3}/||y^{o3}||.
struct ConditionalSpec {
  Vec w;
  Vec y;
  Vec qbar;
  Eigen::Index d = 0;

  ConditionalSpec(Vec w_in, Vec y_in, Eigen::Index d_in);
};

struct TraceMomentReport {
  double log_estimate = 0.0;  // log E[|tr M|^p | g = 0]
  double std_err_log = 0.0;
  double log_bound = 0.0;     // the epsilon-split moment bound
  bool holds = false;         // estimate <= bound within MC error
  std::uint64_t n_samples = 0;
};

struct TValues {
  double log_T1 = 0.0;
  bool T2 = false;
  double log_T3 = 0.0;  // -inf when Q(alpha_S) = 0
  double log_T4 = 0.0;  // -inf when L is empty
};

struct PsdProbabilityReport {
  bool applicable = false;  // requires F_k (k >= 1) and E0
  std::uint64_t successes = 0;
  std::uint64_t n_samples = 0;
  double p_hat = 0.0;
  double wilson_lower = 0.0;
  double wilson_upper = 0.0;
  double bound = 0.0;  // T1 + T2
  enum class Verdict { holds, straddles, violated, inapplicable } verdict = Verdict::inapplicable;
};

struct StratumContribution {
  Eigen::Index k = 0;  // F-index
  std::uint64_t count = 0;
  double log_contrib = 0.0;  // log of the stratum's share of the h-estimate
};

struct KacRiceEstimate {
  double log_value = kNegInf;
  int sign = 0;  // 0 when the estimate is exactly zero
  double std_err_log = 0.0;
  std::uint64_t n_samples = 0;
  // Components (when meaningful for the estimator that produced this):
  double log_W = kNegInf;
  double log_W_surrogate = kNegInf;
  double log_density = 0.0;
  double log_surface = 0.0;
  bool events_pass = false;  // E0, E1, E2 on the outer alpha
  bool zero_observed = false;
  double cp_upper_log = kNegInf;  // Clopper-Pearson bound on the PSD event when zero observed
  std::vector<StratumContribution> strata;
  DensityConvention density_convention = DensityConvention::exact;
  SurfaceConvention surface_convention = SurfaceConvention::surface;
  std::string to_json() const;
};

// One draw of M | g = 0 for the given ensemble.
Mat sample_conditional_matrix(const ConditionalSpec& spec, RngStream& rng);

// Z alone (rows orthogonal to qbar); exposed for covariance tests.
Mat sample_conditional_rows(const ConditionalSpec& spec, RngStream& rng);

// E[tr(M_w) | g_y] = (d-1)(||w||_4^4 - 3||w||^2 + 3<y^6, w^2>/||y||_6^6).
double conditional_trace_mean(const ConditionalSpec& spec);

// MC estimate of E[|tr M|^p | g=0] against the epsilon-split bound.
TraceMomentReport mc_trace_moments(const ConditionalSpec& spec, int p, std::uint64_t n_samples,
                                   uint64_t seed, double epsilon = 0.1, int workers = 0);

// log p_{g|alpha}(0): `exact` uses exponent (d-1)/2 (g lives in R^{d-1});
// `ambient` uses the ambient-dimension exponent d/2.
double density_at_zero_log(const CorrelationProfile& alpha, Eigen::Index d,
                           DensityConvention convention = DensityConvention::exact);

// `surface` = log(2 pi^{d/2} / Gamma(d/2)), the (d-1)-dimensional surface
// area of S^{d-1}; the alternatives are the volumes of the unit balls in
// dimensions d and d-1, selectable for comparison.
double sphere_log_surface(Eigen::Index d, SurfaceConvention convention = SurfaceConvention::surface);

// T1, T2 from the PSD-probability bound; T3, T4 from the S/L trace split.
TValues T_values(const CorrelationProfile& alpha, const EventThresholds& thresholds,
                 Eigen::Index d);

PsdProbabilityReport psd_probability(const ConditionalSpec& spec, const CorrelationProfile& alpha,
                                     const EventThresholds& thresholds, std::uint64_t n_samples,
                                     uint64_t seed, int workers = 0);

KacRiceEstimate estimate_W_log(const CorrelationProfile& alpha, Eigen::Index d,
                               const EventThresholds& thresholds, std::uint64_t n_samples,
                               uint64_t seed, int workers = 0);

KacRiceEstimate estimate_h_expectation(Eigen::Index d, Eigen::Index n,
                                       const EventThresholds& thresholds, std::uint64_t n_alpha,
                                       std::uint64_t n_matrix, uint64_t seed,
                                       WMode mode = WMode::direct,
                                       DensityConvention density = DensityConvention::exact,
                                       SurfaceConvention surface = SurfaceConvention::surface,
                                       int workers = 0);

// PSD test: symmetric factorization with pivot floor 1e-10 * ||M||, eigmin
// fallback for disputed pivots. log|det| returned for PSD samples.
struct PsdCheck {
  bool psd = false;
  double logdet = kNegInf;
};
PsdCheck psd_check(const Mat& M);

// Per-sample inequality helpers used by the invariants and the acceptance
// suite. Both sides are evaluated in the log domain.

// det(V) 1{V >= 0} <= (|tr V| / p)^p.
bool amgm_det_bound_holds(const Mat& M);

// |Q(z)|^d (||z||_6^6)^{-d/2} <= eta^{1-d/2} T3-type(z_S) + (1-eta)^{1-d/2} T4-type(z_L).
bool holder_split_holds(const Vec& z, const std::vector<Eigen::Index>& S_idx,
                        const std::vector<Eigen::Index>& L_idx, Eigen::Index d, double eta);

// Q(alpha_L)^2 / ||alpha_L||_6^6 <= (1+delta) d, asserted only when E0 holds.
bool large_coordinate_bound_holds(const CorrelationProfile& alpha,
                                  const EventThresholds& thresholds, Eigen::Index d,
                                  Eigen::Index n);

}  // namespace otl
