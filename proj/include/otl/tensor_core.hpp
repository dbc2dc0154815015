#pragma once

// Implicit representation of T = sum_i a_i^{x4} and exact evaluation of the
// quartic objective, its sphere gradient, and its sphere Hessian. The tensor
// is never materialized except in the small-dimension oracle; everything is
// computed through the correlation profile alpha_i = <a_i, x>.

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "otl/rng.hpp"

namespace otl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Gradient/Hessian scale. `objective` differentiates f(x) = sum <a_i,x>^4;
// `claim` differentiates f/4 (exactly one quarter of `objective`).
enum class Normalization { objective, claim };

class SpherePoint {
 public:
  // Renormalizes; rejects zero or non-finite input.
  explicit SpherePoint(Vec x);

  const Vec& vec() const { return x_; }
  Eigen::Index dim() const { return x_.size(); }

  // P_x v = v - <x,v> x.
  Vec project_tangent(const Vec& v) const { return v - x_.dot(v) * x_; }

 private:
  Vec x_;
};

class ComponentSet {
 public:
  // Columns are the components a_i. Requires d >= 2, n >= 1, finite entries.
  explicit ComponentSet(Mat columns);

  Eigen::Index d() const { return a_.rows(); }
  Eigen::Index n() const { return a_.cols(); }
  const Mat& matrix() const { return a_; }
  Vec column(Eigen::Index i) const { return a_.col(i); }
  Vec unit_column(Eigen::Index i) const { return a_.col(i) / a_.col(i).norm(); }

 private:
  Mat a_;
};

struct CorrelationProfile {
  Vec alpha;
  double sq_norm = 0;     // ||alpha||_2^2
  double p4 = 0;          // ||alpha||_4^4
  double p6 = 0;          // ||alpha||_6^6
  double p8 = 0;          // ||alpha||_8^8
  double inf_norm = 0;    // max |alpha_i|
};

// Entries drawn i.i.d. N(0,1); column i comes from RngStream(seed, i), so the
// matrix is reproducible entry-for-entry for a given seed on any platform.
ComponentSet sample_components(Eigen::Index d, Eigen::Index n, uint64_t seed);

CorrelationProfile correlations(const ComponentSet& A, const SpherePoint& x);
CorrelationProfile make_profile(Vec alpha);

// f(x) = sum_i <a_i,x>^4 (the un-normalized convention).
double eval_objective(const ComponentSet& A, const SpherePoint& x);

// Materializes T and contracts with x^{x4}; reference oracle, d <= 12.
double dense_tensor_eval(const ComponentSet& A, const SpherePoint& x);

// grad(claim) = P_x sum alpha_i^3 a_i; grad(objective) = 4x that.
Vec riemannian_gradient(const ComponentSet& A, const SpherePoint& x,
                        Normalization norm = Normalization::objective);

// Hess(claim) = 3 sum alpha_i^2 (P_x a_i)(P_x a_i)^T - ||alpha||_4^4 P_x.
Mat riemannian_hessian(const ComponentSet& A, const SpherePoint& x,
                       Normalization norm = Normalization::objective);

// Matrix-free Hessian action on a tangent vector xi (|<xi,x>| <= 1e-8 ||xi||).
Vec hessian_matvec(const ComponentSet& A, const SpherePoint& x, const Vec& xi,
                   Normalization norm = Normalization::objective);

// Largest eigenvalue of the Hessian restricted to the tangent space.
// Dense solve for d <= 400, shifted power iteration on the matvec otherwise.
double hessian_tangent_eigmax(const ComponentSet& A, const SpherePoint& x,
                              Normalization norm = Normalization::objective);

// Component file format: first line "d,n", then d rows of n comma-separated
// values at 17 significant digits; read(write(A)) is bitwise exact.
void write_components_csv(const ComponentSet& A, const std::string& path);
ComponentSet read_components_csv(const std::string& path);
std::string components_to_csv(const ComponentSet& A);
ComponentSet components_from_csv(const std::string& text);

}  // namespace otl
