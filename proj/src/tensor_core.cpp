#include "otl/tensor_core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace otl {

SpherePoint::SpherePoint(Vec x) : x_(std::move(x)) {
  if (x_.size() < 1 || !x_.allFinite()) throw std::invalid_argument("SpherePoint: non-finite input");
  const double nrm = x_.norm();
  if (nrm == 0.0) throw std::invalid_argument("SpherePoint: zero vector");
  if (nrm != 1.0) x_ /= nrm;
}

ComponentSet::ComponentSet(Mat columns) : a_(std::move(columns)) {
  if (a_.rows() < 2) throw std::invalid_argument("ComponentSet: d must be >= 2");
  if (a_.cols() < 1) throw std::invalid_argument("ComponentSet: n must be >= 1");
  if (!a_.allFinite()) throw std::invalid_argument("ComponentSet: non-finite entry");
}

ComponentSet sample_components(Eigen::Index d, Eigen::Index n, uint64_t seed) {
  if (d < 2) throw std::invalid_argument("sample_components: d must be >= 2");
  if (n < 1) throw std::invalid_argument("sample_components: n must be >= 1");
  Mat a(d, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    RngStream rng(seed, static_cast<uint64_t>(i));
    for (Eigen::Index r = 0; r < d; ++r) a(r, i) = rng.normal();
  }
  return ComponentSet(std::move(a));
}

CorrelationProfile make_profile(Vec alpha) {
  CorrelationProfile p;
  p.alpha = std::move(alpha);
  for (Eigen::Index i = 0; i < p.alpha.size(); ++i) {
    const double a = p.alpha[i];
    const double a2 = a * a;
    p.sq_norm += a2;
    p.p4 += a2 * a2;
    p.p6 += a2 * a2 * a2;
    p.p8 += a2 * a2 * a2 * a2;
    p.inf_norm = std::max(p.inf_norm, std::fabs(a));
  }
  return p;
}

CorrelationProfile correlations(const ComponentSet& A, const SpherePoint& x) {
  if (A.d() != x.dim()) throw std::invalid_argument("correlations: dimension mismatch");
  return make_profile(A.matrix().transpose() * x.vec());
}

double eval_objective(const ComponentSet& A, const SpherePoint& x) {
  return correlations(A, x).p4;
}

double dense_tensor_eval(const ComponentSet& A, const SpherePoint& x) {
  const Eigen::Index d = A.d();
  if (d > 12) throw std::invalid_argument("dense_tensor_eval: d > 12");
  if (x.dim() != d) throw std::invalid_argument("dense_tensor_eval: dimension mismatch");
  std::vector<double> T(static_cast<std::size_t>(d) * d * d * d, 0.0);
  for (Eigen::Index m = 0; m < A.n(); ++m) {
    const Vec a = A.column(m);
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) {
        const double aij = a[i] * a[j];
        for (Eigen::Index k = 0; k < d; ++k) {
          const double aijk = aij * a[k];
          for (Eigen::Index l = 0; l < d; ++l) T[idx++] += aijk * a[l];
        }
      }
  }
  const Vec& v = x.vec();
  double acc = 0.0;
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double vij = v[i] * v[j];
      for (Eigen::Index k = 0; k < d; ++k) {
        const double vijk = vij * v[k];
        for (Eigen::Index l = 0; l < d; ++l) acc += T[idx++] * vijk * v[l];
      }
    }
  return acc;
}

namespace {
double scale_of(Normalization norm) { return norm == Normalization::objective ? 4.0 : 1.0; }
}  // namespace

Vec riemannian_gradient(const ComponentSet& A, const SpherePoint& x, Normalization norm) {
  const CorrelationProfile p = correlations(A, x);
  const Vec ambient = A.matrix() * p.alpha.array().cube().matrix();
  return scale_of(norm) * x.project_tangent(ambient);
}

Mat riemannian_hessian(const ComponentSet& A, const SpherePoint& x, Normalization norm) {
  const CorrelationProfile p = correlations(A, x);
  const Eigen::Index d = A.d();
  const Mat P = Mat::Identity(d, d) - x.vec() * x.vec().transpose();
  const Mat B = P * A.matrix();
  Mat H = 3.0 * B * p.alpha.array().square().matrix().asDiagonal() * B.transpose() - p.p4 * P;
  H = 0.5 * (H + H.transpose());
  return scale_of(norm) * H;
}

Vec hessian_matvec(const ComponentSet& A, const SpherePoint& x, const Vec& xi, Normalization norm) {
  if (xi.size() != x.dim()) throw std::invalid_argument("hessian_matvec: dimension mismatch");
  const double xin = xi.norm();
  if (std::fabs(x.vec().dot(xi)) > 1e-8 * std::max(1.0, xin))
    throw std::invalid_argument("hessian_matvec: xi is not tangent at x");
  const CorrelationProfile p = correlations(A, x);
  const Vec t = A.matrix().transpose() * xi;
  const Vec w = (p.alpha.array().square() * t.array()).matrix();
  const Vec h = 3.0 * x.project_tangent(A.matrix() * w) - p.p4 * xi;
  return scale_of(norm) * h;
}

double hessian_tangent_eigmax(const ComponentSet& A, const SpherePoint& x, Normalization norm) {
  const Eigen::Index d = A.d();
  if (d <= 400) {
    Mat H = riemannian_hessian(A, x, norm);
    // Push the trivial x-eigenvalue (0) far below the tangent spectrum.
    const double shift = 2.0 * H.cwiseAbs().sum() + 1.0;
    H -= shift * x.vec() * x.vec().transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  }
  // Shifted power iteration on the matvec, deflating the x-direction. The
  // shift must dominate ||H|| but stay tight, or the convergence ratio
  // collapses; estimate ||A||_2 by a short power iteration on A^T A.
  const CorrelationProfile p = correlations(A, x);
  RngStream rng(0x9e3779b97f4a7c15ull, 0);
  Vec u = rng.normal_vector(A.n()).normalized();
  double sigma_sq = 1.0;
  for (int it = 0; it < 30; ++it) {
    const Vec au = A.matrix() * u;
    u = A.matrix().transpose() * au;
    sigma_sq = u.norm();
    u /= sigma_sq;
  }
  const double c =
      scale_of(norm) * (3.0 * p.inf_norm * p.inf_norm * 1.05 * sigma_sq + p.p4) + 1.0;
  Vec v = x.project_tangent(rng.normal_vector(d));
  v.normalize();
  double lambda = v.dot(hessian_matvec(A, x, v, norm));
  for (int it = 0; it < 5000; ++it) {
    const Vec hv = hessian_matvec(A, x, v, norm);
    lambda = v.dot(hv);
    if ((hv - lambda * v).norm() <= 1e-9 * (std::fabs(lambda) + 1.0)) break;
    Vec w = x.project_tangent(hv + c * v);
    const double nw = w.norm();
    if (nw == 0.0) break;
    v = w / nw;
  }
  return lambda;
}

std::string components_to_csv(const ComponentSet& A) {
  std::string out;
  out.reserve(static_cast<std::size_t>(A.d()) * A.n() * 26 + 32);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%lld,%lld\n", static_cast<long long>(A.d()),
                static_cast<long long>(A.n()));
  out += buf;
  for (Eigen::Index r = 0; r < A.d(); ++r) {
    for (Eigen::Index i = 0; i < A.n(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", A.matrix()(r, i));
      if (i) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_components_csv(const ComponentSet& A, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << components_to_csv(A);
  if (!f) throw std::runtime_error("write failed: " + path);
}

ComponentSet components_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("component CSV: empty input");
  long long d = 0, n = 0;
  if (std::sscanf(line.c_str(), "%lld,%lld", &d, &n) != 2 || d < 2 || n < 1)
    throw std::runtime_error("component CSV line 1: expected header \"d,n\" with d >= 2, n >= 1");
  Mat a(d, n);
  for (long long r = 0; r < d; ++r) {
    if (!std::getline(in, line))
      throw std::runtime_error("component CSV line " + std::to_string(r + 2) + ": missing row");
    const char* p = line.c_str();
    for (long long i = 0; i < n; ++i) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p)
        throw std::runtime_error("component CSV line " + std::to_string(r + 2) +
                                 ": expected a number in column " + std::to_string(i + 1));
      a(r, i) = v;
      p = end;
      if (i + 1 < n) {
        while (*p == ' ') ++p;
        if (*p != ',')
          throw std::runtime_error("component CSV line " + std::to_string(r + 2) +
                                   ": expected ',' after column " + std::to_string(i + 1));
        ++p;
      }
    }
  }
  return ComponentSet(std::move(a));
}

ComponentSet read_components_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return components_from_csv(ss.str());
}

}  // namespace otl
