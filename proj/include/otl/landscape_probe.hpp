#pragma once

// Event classifiers for the correlation profile (E0, E1, E2, F_k), the
// small/large coordinate split S/L, superlevel-set membership, RIP
// verification, and clipped-moment concentration sweeps.

#include <cstdint>
#include <string>
#include <vector>

#include "otl/tensor_core.hpp"

namespace otl {

struct EventThresholds {
  double delta = 0.1;   // in (0,1)
  double gamma = 10.0;  // L1 margin factor
  double K = 4.0;       // tau = K n / d
  double C = 20.0;      // S-threshold sqrt(C log d); C >= 2/delta keeps sizeL valid
  double zeta = 0.0;    // superlevel threshold f >= 3(1+zeta)n
  double c_P = 10.0;    // P = (2 - c_P * delta) sqrt(K n d)
  // When false, E0's moment condition uses the literal fourth-power text
  // ||alpha||_4^4 >= 15(1-delta)n instead of the sixth-power form.
  bool e0_sixth_moment = true;

  double tau(Eigen::Index d, Eigen::Index n) const {
    return K * static_cast<double>(n) / static_cast<double>(d);
  }
  double tau_hat(Eigen::Index d) const;  // sqrt(C log d); requires d >= 3
  double P(Eigen::Index d, Eigen::Index n) const {
    return (2.0 - c_P * delta) * std::sqrt(K * static_cast<double>(n) * static_cast<double>(d));
  }
  // Largest subset size strictly below delta * d / log d (>= 0).
  Eigen::Index e0_subset_size(Eigen::Index d) const;
  void validate() const;
};

struct EventReport {
  bool E0 = false;
  bool E1 = false;
  bool E2 = false;
  Eigen::Index F_index = 0;  // 0 when ||alpha||_inf^4 <= tau, else argmax alpha_i^4 (1-based)
  std::vector<Eigen::Index> S;
  std::vector<Eigen::Index> L;
  double Q_alpha = 0.0;
  double Q_alpha_S = 0.0;
  double Q_alpha_L = 0.0;
  bool size_L_ok = false;  // |L| <= delta d / log d
  std::string to_json() const;
};

struct SuperlevelReport {
  bool in_L = false;   // f >= 3(1+zeta)n
  bool in_L1 = false;  // f >= 3n + gamma sqrt(nd)
  bool in_L2 = false;  // forall i: ||P_x a_i||^2 >= (1-delta)d and <a_i,x>^2 <= delta d
};

struct RIPReport {
  double min_sigma = 0.0;
  double max_sigma = 0.0;
  bool pass = false;
  int subsets_checked = 0;
  std::string to_json() const;
};

struct ConcentrationSweep {
  int degree = 4;
  double max_excess = 0.0;       // max over samples of (stat - center)/denominator
  double worst_stat = 0.0;
  int worst_sample = -1;
  int samples = 0;
  std::string to_json() const;
};

// Q(z) = ||z||_4^4 - 3 ||z||^2.
double Q(const Vec& z);

EventReport classify_events(const CorrelationProfile& alpha, const EventThresholds& thresholds,
                            Eigen::Index d, Eigen::Index n);

SuperlevelReport superlevel_membership(const ComponentSet& A, const SpherePoint& x,
                                       const EventThresholds& thresholds);

// Extreme singular values of column-normalized random size-k subsets plus a
// greedy adversarial subset; pass iff all singular values lie in [1-d, 1+d].
RIPReport rip_check(const ComponentSet& A, Eigen::Index k, double delta, int trials,
                    uint64_t seed);

// Clipped-moment statistic of the given degree over uniform + adversarial
// sample points; excess normalized by (sqrt(nd) + d tau^4) log d.
ConcentrationSweep concentration_sweep(const Mat& components, double tau, int samples,
                                       uint64_t seed, int degree);
ConcentrationSweep concentration_sweep(const ComponentSet& A, double tau, int samples,
                                       uint64_t seed, int degree);

}  // namespace otl
