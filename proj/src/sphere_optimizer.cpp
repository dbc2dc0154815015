#include "otl/sphere_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "otl/parallel.hpp"

namespace otl {

void OptimizerConfig::validate() const {
  if (method == Method::gradient && step_size <= 0.0)
    throw std::invalid_argument("OptimizerConfig: step_size must be > 0 for the gradient method");
  if (grad_tol < 0.0) throw std::invalid_argument("OptimizerConfig: grad_tol must be >= 0");
  if (max_iters < 1) throw std::invalid_argument("OptimizerConfig: max_iters must be >= 1");
  if (init_probes < 1) throw std::invalid_argument("OptimizerConfig: init_probes must be >= 1");
}

namespace {

Vec ambient_gradient(const ComponentSet& A, const Vec& x) {
  const Vec alpha = A.matrix().transpose() * x;
  return 4.0 * (A.matrix() * alpha.array().cube().matrix());
}

double f_of(const ComponentSet& A, const Vec& x) {
  const Vec alpha = A.matrix().transpose() * x;
  return alpha.array().square().square().sum();
}

}  // namespace

SpherePoint power_step(const ComponentSet& A, const SpherePoint& x) {
  if (A.d() != x.dim()) throw std::invalid_argument("power_step: dimension mismatch");
  const Vec g = ambient_gradient(A, x.vec());
  const double ng = g.norm();
  if (ng == 0.0)
    throw std::runtime_error("power_step: zero ambient gradient (critical point of the ambient map)");
  return SpherePoint(g / ng);
}

AscendResult ascend(const ComponentSet& A, const SpherePoint& x0, const OptimizerConfig& config,
                    RngStream rng) {
  config.validate();
  if (A.d() != x0.dim()) throw std::invalid_argument("ascend: dimension mismatch");
  const double tol = config.resolved_grad_tol(A.d());

  Vec x = x0.vec();
  AscendResult out;
  out.summary.f_history.reserve(config.max_iters + 1);
  double f_prev = f_of(A, x);
  out.summary.f_history.push_back(f_prev);
  double best_gn = std::numeric_limits<double>::infinity();
  int stagnant = 0;
  bool just_perturbed = false;

  for (int it = 0; it < config.max_iters; ++it) {
    const Vec g = ambient_gradient(A, x);
    const Vec rg = g - g.dot(x) * x;
    const double gn = rg.norm();
    out.summary.final_grad_norm = gn;
    if (gn <= tol) {
      out.summary.converged = true;
      out.summary.iterations = it;
      break;
    }
    if (gn < best_gn * (1.0 - 1e-6)) {
      best_gn = gn;
      stagnant = 0;
    } else {
      ++stagnant;
    }
    if (config.perturb_scale > 0.0 && stagnant >= config.perturb_every) {
      Vec noise = rng.normal_vector(A.d());
      noise -= noise.dot(x) * x;
      const double nn = noise.norm();
      if (nn > 0.0) {
        x = (x + (config.perturb_scale / nn) * noise).normalized();
        ++out.summary.noise_injections;
        just_perturbed = true;
      }
      stagnant = 0;
      best_gn = std::numeric_limits<double>::infinity();
    } else if (config.method == OptimizerConfig::Method::power) {
      const double ng = g.norm();
      if (ng == 0.0) {
        out.summary.iterations = it;
        break;
      }
      x = g / ng;
      just_perturbed = false;
    } else {
      x = (x + config.step_size * rg).normalized();
      just_perturbed = false;
    }
    const double f_cur = f_of(A, x);
    if (f_cur < f_prev && !just_perturbed) ++out.summary.monotonicity_violations;
    f_prev = f_cur;
    out.summary.f_history.push_back(f_cur);
    out.summary.iterations = it + 1;
  }
  out.x = x;
  return out;
}

std::optional<SpherePoint> best_of_init(const ComponentSet& A, int m, double zeta, uint64_t seed) {
  if (m < 1) throw std::invalid_argument("best_of_init: m must be >= 1");
  double best_f = -std::numeric_limits<double>::infinity();
  Vec best;
  for (int j = 0; j < m; ++j) {
    RngStream rng(seed, static_cast<uint64_t>(j));
    const Vec x = rng.sphere_point(A.d());
    const double f = f_of(A, x);
    if (f > best_f) {
      best_f = f;
      best = x;
    }
  }
  const double threshold = 3.0 * (1.0 + zeta) * static_cast<double>(A.n());
  if (best_f < threshold) return std::nullopt;
  return SpherePoint(best);
}

Certificate certify(const ComponentSet& A, const SpherePoint& x, double grad_tol, double eig_tol,
                    double gamma, Normalization norm) {
  Certificate c;
  c.x = x.vec();
  c.f_value = f_of(A, x.vec());
  c.grad_norm = riemannian_gradient(A, x, norm).norm();
  c.hess_eigmax = hessian_tangent_eigmax(A, x, norm);
  double best = -1.0;
  for (Eigen::Index i = 0; i < A.n(); ++i) {
    const double corr = A.unit_column(i).dot(x.vec());
    if (std::fabs(corr) > best) {
      best = std::fabs(corr);
      c.nearest_index = i;
      c.sign = corr >= 0.0 ? +1 : -1;
      c.correlation = std::fabs(corr);
    }
  }
  c.euclidean_distance = (x.vec() - c.sign * A.unit_column(c.nearest_index)).norm();
  const double nd = static_cast<double>(A.n()) * static_cast<double>(A.d());
  c.in_L1 = c.f_value >= 3.0 * static_cast<double>(A.n()) + gamma * std::sqrt(nd);
  c.certified = c.grad_norm <= grad_tol && c.hess_eigmax <= eig_tol;
  return c;
}

namespace {

// Power ascent on the deflated objective f(x) - sum_j lam_j <xhat_j, x>^4.
Vec deflated_power_ascend(const ComponentSet& A, Vec x, const std::vector<double>& lams,
                          const std::vector<Vec>& xs, int iters) {
  for (int it = 0; it < iters; ++it) {
    Vec g = ambient_gradient(A, x);
    for (std::size_t j = 0; j < lams.size(); ++j) {
      const double c = xs[j].dot(x);
      g -= 4.0 * lams[j] * c * c * c * xs[j];
    }
    const double ng = g.norm();
    if (ng < 1e-300) break;
    g /= ng;
    if ((g - x).norm() < 1e-12) return g;
    x = g;
  }
  return x;
}

}  // namespace

RecoveryReport recover_all(const ComponentSet& A, const OptimizerConfig& config, uint64_t seed,
                           int restart_budget, bool deflate, double dedup_correlation) {
  config.validate();
  const Eigen::Index n = A.n();
  const int budget = restart_budget > 0 ? restart_budget : 50 * static_cast<int>(n);
  const double grad_tol = config.resolved_grad_tol(A.d());
  const double eig_tol = 1e-6 * static_cast<double>(A.d()) * static_cast<double>(A.d());

  RecoveryReport report;
  std::vector<double> lams;
  std::vector<Vec> xs;
  std::vector<bool> covered(static_cast<std::size_t>(n), false);
  Eigen::Index covered_count = 0;

  for (int j = 0; j < budget; ++j) {
    report.restarts_used = j + 1;
    RngStream rng(seed, static_cast<uint64_t>(j));
    Vec x0 = rng.sphere_point(A.d());
    Vec endpoint;
    if (deflate && !xs.empty()) {
      endpoint = deflated_power_ascend(A, x0, lams, xs, config.max_iters);
      // polish on the undeflated objective
      endpoint = ascend(A, SpherePoint(endpoint), config, RngStream(seed, 0x100000000ull + j)).x;
    } else {
      endpoint = ascend(A, SpherePoint(x0), config, RngStream(seed, 0x100000000ull + j)).x;
    }
    bool duplicate = false;
    for (const auto& r : report.found)
      if (std::fabs(r.x.dot(endpoint)) >= dedup_correlation) {
        duplicate = true;
        break;
      }
    if (duplicate) continue;
    const Certificate c = certify(A, SpherePoint(endpoint), grad_tol, eig_tol);
    if (!c.certified || c.correlation < dedup_correlation) continue;
    report.found.push_back({c.sign, c.nearest_index, endpoint, c.euclidean_distance});
    if (deflate) {
      lams.push_back(c.f_value);
      xs.push_back(endpoint);
    }
    if (!covered[static_cast<std::size_t>(c.nearest_index)]) {
      covered[static_cast<std::size_t>(c.nearest_index)] = true;
      if (++covered_count == n) break;
    }
  }
  report.coverage = static_cast<double>(covered_count) / static_cast<double>(n);
  report.budget_exhausted = covered_count < n;
  return report;
}

CensusReport basin_census(const ComponentSet& A, int restarts, const OptimizerConfig& config,
                          uint64_t seed, double gamma, double cluster_correlation, int workers) {
  if (restarts < 1) throw std::invalid_argument("basin_census: restarts must be >= 1");
  config.validate();
  const double grad_tol = config.resolved_grad_tol(A.d());
  const double eig_tol = 1e-6 * static_cast<double>(A.d()) * static_cast<double>(A.d());

  std::vector<Vec> endpoints(static_cast<std::size_t>(restarts));
  std::vector<char> converged(static_cast<std::size_t>(restarts), 0);
  parallel_for(restarts, workers, [&](std::int64_t j) {
    RngStream rng(seed, static_cast<uint64_t>(j));
    const Vec x0 = rng.sphere_point(A.d());
    AscendResult r = ascend(A, SpherePoint(x0), config, RngStream(seed, 0x100000000ull + j));
    endpoints[static_cast<std::size_t>(j)] = r.x;
    converged[static_cast<std::size_t>(j)] = r.summary.converged ? 1 : 0;
  });

  CensusReport report;
  report.restarts = restarts;
  std::vector<Vec> reps;
  std::vector<int> hits;
  for (int j = 0; j < restarts; ++j) {
    if (!converged[static_cast<std::size_t>(j)]) {
      ++report.unconverged;
      continue;
    }
    const Vec& x = endpoints[static_cast<std::size_t>(j)];
    bool placed = false;
    for (std::size_t c = 0; c < reps.size(); ++c) {
      if (reps[c].dot(x) >= cluster_correlation) {
        ++hits[c];
        placed = true;
        break;
      }
    }
    if (!placed) {
      reps.push_back(x);
      hits.push_back(1);
    }
  }
  // Single-linkage re-check: merge representatives that ended up closer than
  // the threshold so cluster identity is an equivalence relation.
  std::vector<int> owner(reps.size());
  std::iota(owner.begin(), owner.end(), 0);
  std::function<int(int)> root = [&](int i) {
    while (owner[static_cast<std::size_t>(i)] != i) {
      owner[static_cast<std::size_t>(i)] =
          owner[static_cast<std::size_t>(owner[static_cast<std::size_t>(i)])];
      i = owner[static_cast<std::size_t>(i)];
    }
    return i;
  };
  for (std::size_t a = 0; a < reps.size(); ++a)
    for (std::size_t b = a + 1; b < reps.size(); ++b)
      if (reps[a].dot(reps[b]) >= cluster_correlation) {
        const int ra = root(static_cast<int>(a)), rb = root(static_cast<int>(b));
        if (ra != rb) owner[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
      }
  std::vector<int> merged_hits;
  std::vector<Vec> merged_reps;
  std::vector<int> remap(reps.size(), -1);
  for (std::size_t c = 0; c < reps.size(); ++c) {
    const int r = root(static_cast<int>(c));
    if (remap[static_cast<std::size_t>(r)] < 0) {
      remap[static_cast<std::size_t>(r)] = static_cast<int>(merged_reps.size());
      merged_reps.push_back(reps[static_cast<std::size_t>(r)]);
      merged_hits.push_back(0);
    }
    merged_hits[static_cast<std::size_t>(remap[static_cast<std::size_t>(r)])] +=
        hits[static_cast<std::size_t>(c)];
  }
  for (std::size_t c = 0; c < merged_reps.size(); ++c) {
    const Certificate cert = certify(A, SpherePoint(merged_reps[c]), grad_tol, eig_tol, gamma);
    if (!cert.certified) continue;
    CensusCluster cl;
    cl.cluster_id = static_cast<int>(report.clusters.size());
    cl.representative = cert;
    cl.hits = merged_hits[c];
    report.clusters.push_back(std::move(cl));
  }
  return report;
}

ContractionProbe contraction_probe(const ComponentSet& A, const SpherePoint& x, double c_pow) {
  ContractionProbe probe;
  const Eigen::Index n = A.n();
  Vec corr(n);
  for (Eigen::Index i = 0; i < n; ++i) corr[i] = A.unit_column(i).dot(x.vec());
  Eigen::Index k1 = 0;
  double c1 = 0.0, c2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = std::fabs(corr[i]);
    if (a > std::fabs(c1)) {
      c2 = std::fabs(c1);
      c1 = corr[i];
      k1 = i;
    } else if (a > c2) {
      c2 = a;
    }
  }
  probe.leading_index = k1;
  if (std::fabs(c1) < 1e-8) throw std::runtime_error("contraction_probe: leading correlation is zero");
  probe.applicable = std::fabs(c1) < 0.99 && std::fabs(c1) > std::sqrt(2.0) * c2;

  const Vec abar = A.unit_column(k1);
  auto ratio = [&](const Vec& v) {
    const double along = v.dot(abar);
    const Vec perp = v - along * abar;
    return std::make_pair(perp.norm(), std::fabs(along));
  };
  const auto [pb, ab] = ratio(x.vec());
  probe.ratio_before = pb / ab;
  const Vec g = ambient_gradient(A, x.vec());
  const auto [pa, aa] = ratio(g);
  if (aa == 0.0) throw std::runtime_error("contraction_probe: gradient orthogonal to the leading component");
  probe.ratio_after = pa / aa;
  const double d = static_cast<double>(A.d());
  const double ln_d = std::log(d);
  const double penalty = c_pow * std::sqrt(static_cast<double>(n) * d) * std::pow(ln_d, 4) /
                         (std::pow(std::fabs(c1), 3) * d * d);
  probe.bound_rhs = 0.75 * probe.ratio_before + penalty;
  probe.holds = probe.ratio_after < probe.bound_rhs;
  return probe;
}

CapConcavityReport cap_concavity_check(const ComponentSet& A, Eigen::Index k, int samples,
                                       uint64_t seed, double cap) {
  if (A.d() > 400) throw std::invalid_argument("cap_concavity_check: d must be <= 400");
  if (k < 0 || k >= A.n()) throw std::invalid_argument("cap_concavity_check: bad component index");
  const Vec abar = A.unit_column(k);
  CapConcavityReport report;
  report.samples = samples;
  report.max_eigmax = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    RngStream rng(seed, static_cast<uint64_t>(s));
    const double c = cap + (1.0 - cap) * rng.uniform01();
    Vec u = rng.normal_vector(A.d());
    u -= u.dot(abar) * abar;
    const double un = u.norm();
    Vec x = un > 0.0 ? (c * abar + std::sqrt(1.0 - c * c) * (u / un)).eval() : abar;
    const double em = hessian_tangent_eigmax(A, SpherePoint(x), Normalization::claim);
    report.max_eigmax = std::max(report.max_eigmax, em);
  }
  report.all_negative = report.max_eigmax < 0.0;
  return report;
}

std::string census_to_csv(const CensusReport& report) {
  std::ostringstream out;
  out << "cluster_id,sign,nearest_index,correlation,distance,f_value,grad_norm,hess_eigmax,in_L1,hits\n";
  char buf[512];
  for (const auto& cl : report.clusters) {
    const auto& c = cl.representative;
    std::snprintf(buf, sizeof(buf), "%d,%d,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n",
                  cl.cluster_id, c.sign, static_cast<long long>(c.nearest_index), c.correlation,
                  c.euclidean_distance, c.f_value, c.grad_norm, c.hess_eigmax, c.in_L1 ? 1 : 0,
                  cl.hits);
    out << buf;
  }
  return out.str();
}

}  // namespace otl
