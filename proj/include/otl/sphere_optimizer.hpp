#pragma once

// Power iteration and (perturbed) projected gradient ascent on the sphere,
// local-maximum certification, component recovery, and basin census.

#include <cstdint>
#include <optional>
#include <vector>

#include "otl/tensor_core.hpp"

namespace otl {

struct OptimizerConfig {
  enum class Method { power, gradient };
  Method method = Method::power;
  double step_size = 1e-3;      // gradient method only
  int max_iters = 1000;
  double grad_tol = 0.0;        // 0 = auto: 1e-9 * d^2
  double perturb_scale = 1e-3;  // tangent noise norm on plateau
  int perturb_every = 50;       // plateau length triggering noise
  int init_probes = 1;          // m for best-of-init
  double zeta = 0.0;            // superlevel threshold f >= 3(1+zeta)n

  double resolved_grad_tol(Eigen::Index d) const {
    return grad_tol > 0.0 ? grad_tol : 1e-9 * static_cast<double>(d) * static_cast<double>(d);
  }
  void validate() const;
};

struct TrajectorySummary {
  int iterations = 0;
  bool converged = false;
  double final_grad_norm = 0.0;
  int noise_injections = 0;
  int monotonicity_violations = 0;  // f decreases not explained by an injection
  std::vector<double> f_history;
};

struct AscendResult {
  TrajectorySummary summary;
  Vec x;
};

struct Certificate {
  Vec x;
  double f_value = 0.0;
  double grad_norm = 0.0;
  double hess_eigmax = 0.0;
  Eigen::Index nearest_index = 0;
  int sign = +1;
  double correlation = 0.0;         // |<x, a_bar_k>|
  double euclidean_distance = 0.0;  // ||x - s * a_bar_k||
  bool in_L1 = false;               // f >= 3n + gamma sqrt(nd)
  bool certified = false;           // grad_norm <= grad_tol and hess_eigmax <= eig_tol
};

struct Recovery {
  int sign = +1;
  Eigen::Index index = 0;
  Vec x;
  double distance = 0.0;
};

struct RecoveryReport {
  std::vector<Recovery> found;
  double coverage = 0.0;  // distinct components recovered / n
  int restarts_used = 0;
  bool budget_exhausted = false;
};

struct CensusCluster {
  int cluster_id = 0;
  Certificate representative;
  int hits = 0;
};

struct CensusReport {
  std::vector<CensusCluster> clusters;
  int restarts = 0;
  int unconverged = 0;
};

struct ContractionProbe {
  double ratio_before = 0.0;  // ||P_{a1 perp} x|| / |<x, a1>|
  double ratio_after = 0.0;   // same ratio for the ambient gradient
  double bound_rhs = 0.0;     // (3/4) ratio_before + c_pow sqrt(nd) log^4 d / (|c1|^3 d^2)
  Eigen::Index leading_index = 0;
  bool holds = false;
  bool applicable = false;    // false when 0.99 > |c1| > sqrt(2)|c2| fails
};

struct CapConcavityReport {
  double max_eigmax = 0.0;  // max over samples of tangent Hessian eigmax
  int samples = 0;
  bool all_negative = false;
};

// One step of the power method: normalize(4 sum alpha_i^3 a_i).
// Throws if the ambient gradient vanishes.
SpherePoint power_step(const ComponentSet& A, const SpherePoint& x);

AscendResult ascend(const ComponentSet& A, const SpherePoint& x0, const OptimizerConfig& config,
                    RngStream rng);

// Best of m uniform probes among those with f >= 3(1+zeta)n; none if no probe
// qualifies.
std::optional<SpherePoint> best_of_init(const ComponentSet& A, int m, double zeta, uint64_t seed);

Certificate certify(const ComponentSet& A, const SpherePoint& x, double grad_tol, double eig_tol,
                    double gamma = 10.0, Normalization norm = Normalization::objective);

RecoveryReport recover_all(const ComponentSet& A, const OptimizerConfig& config, uint64_t seed,
                           int restart_budget = 0 /*0 = 50 n*/, bool deflate = false,
                           double dedup_correlation = 0.9);

CensusReport basin_census(const ComponentSet& A, int restarts, const OptimizerConfig& config,
                          uint64_t seed, double gamma = 10.0, double cluster_correlation = 0.99,
                          int workers = 0);

ContractionProbe contraction_probe(const ComponentSet& A, const SpherePoint& x,
                                   double c_pow = 1.0);

CapConcavityReport cap_concavity_check(const ComponentSet& A, Eigen::Index k, int samples,
                                       uint64_t seed, double cap = 0.99);

std::string census_to_csv(const CensusReport& report);

}  // namespace otl
