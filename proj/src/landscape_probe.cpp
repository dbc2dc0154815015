#include "otl/landscape_probe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "otl/rng.hpp"

namespace otl {

using nlohmann::json;

void EventThresholds::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("thresholds: delta must be in (0,1)");
  if (gamma <= 0.0) throw std::invalid_argument("thresholds: gamma must be > 0");
  if (K <= 0.0) throw std::invalid_argument("thresholds: K must be > 0");
  if (C <= 0.0) throw std::invalid_argument("thresholds: C must be > 0");
  if (zeta < -1.0) throw std::invalid_argument("thresholds: zeta must be >= -1");
}

double EventThresholds::tau_hat(Eigen::Index d) const {
  if (d < 3) throw std::invalid_argument("thresholds: d must be >= 3 where sqrt(C log d) is used");
  return std::sqrt(C * std::log(static_cast<double>(d)));
}

Eigen::Index EventThresholds::e0_subset_size(Eigen::Index d) const {
  const double bound = delta * static_cast<double>(d) / std::log(static_cast<double>(d));
  const double c = std::ceil(bound);
  const Eigen::Index m = static_cast<Eigen::Index>(c == bound ? bound - 1.0 : c - 1.0);
  return std::max<Eigen::Index>(0, m);
}

double Q(const Vec& z) {
  return z.array().square().square().sum() - 3.0 * z.squaredNorm();
}

EventReport classify_events(const CorrelationProfile& alpha, const EventThresholds& thresholds,
                            Eigen::Index d, Eigen::Index n) {
  thresholds.validate();
  if (alpha.alpha.size() != n) throw std::invalid_argument("classify_events: |alpha| != n");
  EventReport r;
  const Vec& a = alpha.alpha;
  const double dd = static_cast<double>(d), nn = static_cast<double>(n);

  // E0: worst subset of the allowed size is the set of largest |alpha_i|.
  const Eigen::Index m = thresholds.e0_subset_size(d);
  bool subset_ok = true;
  if (m > 0) {
    Vec sq = a.array().square();
    std::vector<double> s(sq.data(), sq.data() + sq.size());
    const Eigen::Index take = std::min<Eigen::Index>(m, n);
    std::partial_sort(s.begin(), s.begin() + take, s.end(), std::greater<double>());
    double top = 0.0;
    for (Eigen::Index i = 0; i < take; ++i) top += s[static_cast<std::size_t>(i)];
    subset_ok = top <= (1.0 + thresholds.delta) * dd;
  }
  const double moment = thresholds.e0_sixth_moment ? alpha.p6 : alpha.p4;
  const bool moment_ok = moment >= 15.0 * (1.0 - thresholds.delta) * nn;
  const double win = 3.0 * std::sqrt(nn * dd);
  const bool norm_ok = alpha.sq_norm >= nn - win && alpha.sq_norm <= nn + win;
  r.E0 = subset_ok && moment_ok && norm_ok;

  r.E1 = alpha.p4 >= 3.0 * nn + thresholds.gamma * std::sqrt(nn * dd);
  r.E2 = alpha.inf_norm * alpha.inf_norm <= thresholds.delta * dd;

  const double tau = thresholds.tau(d, n);
  if (alpha.inf_norm * alpha.inf_norm * alpha.inf_norm * alpha.inf_norm <= tau) {
    r.F_index = 0;
  } else {
    Eigen::Index k = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = a[i] * a[i] * a[i] * a[i];
      if (v > best) {  // strict > keeps the lowest index on ties
        best = v;
        k = i;
      }
    }
    r.F_index = k + 1;
  }

  const double that = thresholds.tau_hat(d);
  for (Eigen::Index i = 0; i < n; ++i)
    (std::fabs(a[i]) <= that ? r.S : r.L).push_back(i);
  auto q_of = [&](const std::vector<Eigen::Index>& idx) {
    double q = 0.0;
    for (const Eigen::Index i : idx) {
      const double a2 = a[i] * a[i];
      q += a2 * a2 - 3.0 * a2;
    }
    return q;
  };
  r.Q_alpha = Q(a);
  r.Q_alpha_S = q_of(r.S);
  r.Q_alpha_L = q_of(r.L);
  r.size_L_ok =
      static_cast<double>(r.L.size()) <= thresholds.delta * dd / std::log(dd);
  return r;
}

std::string EventReport::to_json() const {
  json j;
  j["E0"] = E0;
  j["E1"] = E1;
  j["E2"] = E2;
  j["F_index"] = F_index;
  j["S"] = S;
  j["L"] = L;
  j["Q_alpha"] = Q_alpha;
  j["Q_alpha_S"] = Q_alpha_S;
  j["Q_alpha_L"] = Q_alpha_L;
  j["size_L_ok"] = size_L_ok;
  return j.dump();
}

SuperlevelReport superlevel_membership(const ComponentSet& A, const SpherePoint& x,
                                       const EventThresholds& thresholds) {
  thresholds.validate();
  SuperlevelReport r;
  const CorrelationProfile p = correlations(A, x);
  const double nn = static_cast<double>(A.n()), dd = static_cast<double>(A.d());
  r.in_L = p.p4 >= 3.0 * (1.0 + thresholds.zeta) * nn;
  r.in_L1 = p.p4 >= 3.0 * nn + thresholds.gamma * std::sqrt(nn * dd);
  r.in_L2 = true;
  for (Eigen::Index i = 0; i < A.n(); ++i) {
    const double ai2 = p.alpha[i] * p.alpha[i];
    const double proj2 = A.column(i).squaredNorm() - ai2;  // ||P_x a_i||^2
    if (proj2 < (1.0 - thresholds.delta) * dd || ai2 > thresholds.delta * dd) {
      r.in_L2 = false;
      break;
    }
  }
  return r;
}

namespace {

std::pair<double, double> extreme_singular_values(const Mat& cols) {
  const Mat gram = cols.transpose() * cols;
  Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
  const double lo = std::max(0.0, es.eigenvalues().minCoeff());
  const double hi = std::max(0.0, es.eigenvalues().maxCoeff());
  return {std::sqrt(lo), std::sqrt(hi)};
}

}  // namespace

RIPReport rip_check(const ComponentSet& A, Eigen::Index k, double delta, int trials,
                    uint64_t seed) {
  if (k < 1 || k > std::min(A.d(), A.n()))
    throw std::invalid_argument("rip_check: require 1 <= k <= min(d, n)");
  Mat norm = A.matrix();
  for (Eigen::Index i = 0; i < norm.cols(); ++i) norm.col(i).normalize();

  RIPReport r;
  r.min_sigma = std::numeric_limits<double>::infinity();
  r.max_sigma = 0.0;
  auto account = [&](const std::vector<Eigen::Index>& idx) {
    Mat sub(norm.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = norm.col(idx[c]);
    const auto [lo, hi] = extreme_singular_values(sub);
    r.min_sigma = std::min(r.min_sigma, lo);
    r.max_sigma = std::max(r.max_sigma, hi);
    ++r.subsets_checked;
  };

  const Eigen::Index n = A.n();
  for (int t = 0; t < trials; ++t) {
    RngStream rng(seed, static_cast<uint64_t>(t));
    // Partial Fisher-Yates draw of k distinct indices.
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) {
      const Eigen::Index j = i + static_cast<Eigen::Index>(rng.next_u64() % static_cast<uint64_t>(n - i));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
      idx.push_back(perm[static_cast<std::size_t>(i)]);
    }
    account(idx);
  }

  // Greedy adversarial subset: grow from the most correlated pair.
  if (k >= 2 && n >= 2) {
    const Mat gram = (norm.transpose() * norm).cwiseAbs();
    Eigen::Index bi = 0, bj = 1;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        if (gram(i, j) > best) {
          best = gram(i, j);
          bi = i;
          bj = j;
        }
    std::vector<Eigen::Index> idx = {bi, bj};
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    used[static_cast<std::size_t>(bi)] = used[static_cast<std::size_t>(bj)] = true;
    while (static_cast<Eigen::Index>(idx.size()) < k) {
      Eigen::Index arg = -1;
      double score = -1.0;
      for (Eigen::Index c = 0; c < n; ++c) {
        if (used[static_cast<std::size_t>(c)]) continue;
        double s = 0.0;
        for (const Eigen::Index i : idx) s += gram(i, c);
        if (s > score) {
          score = s;
          arg = c;
        }
      }
      idx.push_back(arg);
      used[static_cast<std::size_t>(arg)] = true;
    }
    account(idx);
  } else if (k == 1) {
    account({0});
  }

  r.pass = r.min_sigma >= 1.0 - delta && r.max_sigma <= 1.0 + delta;
  return r;
}

std::string RIPReport::to_json() const {
  json j;
  j["min_sigma"] = min_sigma;
  j["max_sigma"] = max_sigma;
  j["pass"] = pass;
  j["subsets_checked"] = subsets_checked;
  return j.dump();
}

ConcentrationSweep concentration_sweep(const Mat& components, double tau, int samples,
                                       uint64_t seed, int degree) {
  if (degree != 2 && degree != 3 && degree != 4)
    throw std::invalid_argument("concentration_sweep: degree must be 2, 3, or 4");
  if (samples < 1) throw std::invalid_argument("concentration_sweep: samples must be >= 1");
  const Eigen::Index d = components.rows(), n = components.cols();
  ConcentrationSweep sweep;
  sweep.degree = degree;
  sweep.samples = samples;
  if (n == 0) return sweep;

  const double dd = static_cast<double>(d), nn = static_cast<double>(n);
  const double denom = (std::sqrt(nn * dd) + dd * tau * tau * tau * tau) * std::log(dd);
  const double center = degree == 3 ? 0.0 : 3.0 * nn;
  sweep.max_excess = -std::numeric_limits<double>::infinity();

  for (int s = 0; s < samples; ++s) {
    RngStream rng(seed, static_cast<uint64_t>(s));
    Vec x;
    if (s % 2 == 0) {
      x = rng.sphere_point(d);
    } else {
      // Adversarial: a component direction plus tangent noise.
      const Eigen::Index i = static_cast<Eigen::Index>((s / 2) % n);
      const Vec abar = components.col(i) / components.col(i).norm();
      Vec t = rng.normal_vector(d);
      t -= t.dot(abar) * abar;
      const double tn = t.norm();
      x = tn > 0.0 ? (abar + (0.3 / tn) * t).normalized().eval() : abar;
    }
    const Vec alpha = components.transpose() * x;
    double stat = 0.0;
    if (degree == 4) {
      for (Eigen::Index i = 0; i < n; ++i)
        if (std::fabs(alpha[i]) <= tau) stat += std::pow(alpha[i], 4);
    } else if (degree == 3) {
      Vec acc = Vec::Zero(d);
      for (Eigen::Index i = 0; i < n; ++i)
        if (std::fabs(alpha[i]) <= tau) acc += std::pow(alpha[i], 3) * components.col(i);
      stat = acc.norm();
    } else {
      Mat acc = Mat::Zero(d, d);
      for (Eigen::Index i = 0; i < n; ++i)
        if (std::fabs(alpha[i]) <= tau)
          acc += alpha[i] * alpha[i] * components.col(i) * components.col(i).transpose();
      Eigen::SelfAdjointEigenSolver<Mat> es(acc, Eigen::EigenvaluesOnly);
      stat = std::max(std::fabs(es.eigenvalues().minCoeff()), std::fabs(es.eigenvalues().maxCoeff()));
    }
    const double excess = (stat - center) / denom;
    if (excess > sweep.max_excess) {
      sweep.max_excess = excess;
      sweep.worst_stat = stat;
      sweep.worst_sample = s;
    }
  }
  return sweep;
}

ConcentrationSweep concentration_sweep(const ComponentSet& A, double tau, int samples,
                                       uint64_t seed, int degree) {
  return concentration_sweep(A.matrix(), tau, samples, seed, degree);
}

std::string ConcentrationSweep::to_json() const {
  json j;
  j["degree"] = degree;
  j["max_excess"] = max_excess;
  j["worst_stat"] = worst_stat;
  j["worst_sample"] = worst_sample;
  j["samples"] = samples;
  return j.dump();
}

}  // namespace otl
