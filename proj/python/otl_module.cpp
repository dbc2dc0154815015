#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "otl/kac_rice_mc.hpp"
#include "otl/landscape_probe.hpp"
#include "otl/prob_toolkit.hpp"
#include "otl/sphere_optimizer.hpp"
#include "otl/tensor_core.hpp"
#include "otl/version.hpp"

namespace py = pybind11;
using namespace otl;

namespace {

Normalization norm_of(const std::string& s) {
  if (s == "objective") return Normalization::objective;
  if (s == "claim") return Normalization::claim;
  throw std::invalid_argument("normalization must be 'objective' or 'claim'");
}

EventThresholds thresholds_of(double delta, double gamma, double K, double C, double zeta,
                              double c_P, bool e0_sixth_moment) {
  EventThresholds t;
  t.delta = delta;
  t.gamma = gamma;
  t.K = K;
  t.C = C;
  t.zeta = zeta;
  t.c_P = c_P;
  t.e0_sixth_moment = e0_sixth_moment;
  t.validate();
  return t;
}

}  // namespace

PYBIND11_MODULE(otl, m) {
  m.doc() = "Over-complete fourth-order tensor decomposition on the sphere and "
            "Monte Carlo checks of its landscape.";
  m.attr("__version__") = kVersion;

  py::class_<ComponentSet>(m, "ComponentSet")
      .def(py::init<Mat>(), py::arg("columns"))
      .def_property_readonly("d", &ComponentSet::d)
      .def_property_readonly("n", &ComponentSet::n)
      .def_property_readonly("matrix", &ComponentSet::matrix)
      .def("unit_column", &ComponentSet::unit_column, py::arg("i"));

  py::class_<SpherePoint>(m, "SpherePoint")
      .def(py::init<Vec>(), py::arg("x"))
      .def_property_readonly("vec", &SpherePoint::vec)
      .def("project_tangent", &SpherePoint::project_tangent, py::arg("v"));

  m.def("sample_components", &sample_components, py::arg("d"), py::arg("n"), py::arg("seed"));
  m.def("write_components_csv", &write_components_csv, py::arg("components"), py::arg("path"));
  m.def("read_components_csv", &read_components_csv, py::arg("path"));

  m.def("eval_objective", &eval_objective, py::arg("components"), py::arg("x"));
  m.def("dense_tensor_eval", &dense_tensor_eval, py::arg("components"), py::arg("x"));
  m.def(
      "correlations",
      [](const ComponentSet& A, const SpherePoint& x) { return correlations(A, x).alpha; },
      py::arg("components"), py::arg("x"));
  m.def(
      "riemannian_gradient",
      [](const ComponentSet& A, const SpherePoint& x, const std::string& norm) {
        return riemannian_gradient(A, x, norm_of(norm));
      },
      py::arg("components"), py::arg("x"), py::arg("normalization") = "objective");
  m.def(
      "riemannian_hessian",
      [](const ComponentSet& A, const SpherePoint& x, const std::string& norm) {
        return riemannian_hessian(A, x, norm_of(norm));
      },
      py::arg("components"), py::arg("x"), py::arg("normalization") = "objective");
  m.def(
      "hessian_matvec",
      [](const ComponentSet& A, const SpherePoint& x, const Vec& xi, const std::string& norm) {
        return hessian_matvec(A, x, xi, norm_of(norm));
      },
      py::arg("components"), py::arg("x"), py::arg("xi"), py::arg("normalization") = "objective");

  m.def(
      "power_step",
      [](const ComponentSet& A, const SpherePoint& x) { return power_step(A, x).vec(); },
      py::arg("components"), py::arg("x"));

  py::class_<Certificate>(m, "Certificate")
      .def_readonly("x", &Certificate::x)
      .def_readonly("f_value", &Certificate::f_value)
      .def_readonly("grad_norm", &Certificate::grad_norm)
      .def_readonly("hess_eigmax", &Certificate::hess_eigmax)
      .def_readonly("nearest_index", &Certificate::nearest_index)
      .def_readonly("sign", &Certificate::sign)
      .def_readonly("correlation", &Certificate::correlation)
      .def_readonly("euclidean_distance", &Certificate::euclidean_distance)
      .def_readonly("in_L1", &Certificate::in_L1)
      .def_readonly("certified", &Certificate::certified);

  m.def(
      "certify",
      [](const ComponentSet& A, const SpherePoint& x, double grad_tol, double eig_tol,
         double gamma, const std::string& norm) {
        return certify(A, x, grad_tol, eig_tol, gamma, norm_of(norm));
      },
      py::arg("components"), py::arg("x"), py::arg("grad_tol"), py::arg("eig_tol"),
      py::arg("gamma") = 10.0, py::arg("normalization") = "objective");

  m.def(
      "ascend",
      [](const ComponentSet& A, const SpherePoint& x0, const std::string& method,
         double step_size, int max_iters, double grad_tol, uint64_t seed) {
        OptimizerConfig cfg;
        cfg.method = method == "gradient" ? OptimizerConfig::Method::gradient
                                          : OptimizerConfig::Method::power;
        cfg.step_size = step_size;
        cfg.max_iters = max_iters;
        cfg.grad_tol = grad_tol;
        const AscendResult r = ascend(A, x0, cfg, RngStream(seed, 0));
        return py::make_tuple(r.x, r.summary.converged, r.summary.iterations,
                              r.summary.final_grad_norm);
      },
      py::arg("components"), py::arg("x0"), py::arg("method") = "power",
      py::arg("step_size") = 1e-3, py::arg("max_iters") = 1000, py::arg("grad_tol") = 0.0,
      py::arg("seed") = 0);

  m.def(
      "recover_all",
      [](const ComponentSet& A, uint64_t seed, int restart_budget, bool deflate,
         int max_iters) {
        OptimizerConfig cfg;
        cfg.max_iters = max_iters;
        const RecoveryReport r = recover_all(A, cfg, seed, restart_budget, deflate);
        py::list found;
        for (const auto& f : r.found)
          found.append(py::make_tuple(f.sign, f.index, f.x, f.distance));
        return py::make_tuple(r.coverage, found, r.restarts_used);
      },
      py::arg("components"), py::arg("seed"), py::arg("restart_budget") = 0,
      py::arg("deflate") = false, py::arg("max_iters") = 1000);

  py::class_<CensusCluster>(m, "CensusCluster")
      .def_readonly("cluster_id", &CensusCluster::cluster_id)
      .def_readonly("representative", &CensusCluster::representative)
      .def_readonly("hits", &CensusCluster::hits);

  m.def(
      "basin_census",
      [](const ComponentSet& A, int restarts, uint64_t seed, double gamma, int max_iters,
         int workers) {
        OptimizerConfig cfg;
        cfg.max_iters = max_iters;
        const CensusReport r = basin_census(A, restarts, cfg, seed, gamma, 0.99, workers);
        return r.clusters;
      },
      py::arg("components"), py::arg("restarts"), py::arg("seed"), py::arg("gamma") = 10.0,
      py::arg("max_iters") = 1000, py::arg("workers") = 0);

  m.def("Q", &Q, py::arg("z"));

  py::class_<EventThresholds>(m, "EventThresholds")
      .def(py::init(&thresholds_of), py::arg("delta") = 0.1, py::arg("gamma") = 10.0,
           py::arg("K") = 4.0, py::arg("C") = 20.0, py::arg("zeta") = 0.0, py::arg("c_P") = 10.0,
           py::arg("e0_sixth_moment") = true)
      .def_readonly("delta", &EventThresholds::delta)
      .def("tau", &EventThresholds::tau, py::arg("d"), py::arg("n"))
      .def("tau_hat", &EventThresholds::tau_hat, py::arg("d"))
      .def("P", &EventThresholds::P, py::arg("d"), py::arg("n"));

  m.def(
      "classify_events",
      [](const Vec& alpha, const EventThresholds& th, Eigen::Index d) {
        const EventReport r = classify_events(make_profile(alpha), th, d, alpha.size());
        py::dict out;
        out["E0"] = r.E0;
        out["E1"] = r.E1;
        out["E2"] = r.E2;
        out["F_index"] = r.F_index;
        out["S"] = r.S;
        out["L"] = r.L;
        out["Q_alpha"] = r.Q_alpha;
        out["Q_alpha_S"] = r.Q_alpha_S;
        out["Q_alpha_L"] = r.Q_alpha_L;
        out["size_L_ok"] = r.size_L_ok;
        return out;
      },
      py::arg("alpha"), py::arg("thresholds"), py::arg("d"));

  m.def(
      "superlevel_membership",
      [](const ComponentSet& A, const SpherePoint& x, const EventThresholds& th) {
        const SuperlevelReport r = superlevel_membership(A, x, th);
        return py::make_tuple(r.in_L, r.in_L1, r.in_L2);
      },
      py::arg("components"), py::arg("x"), py::arg("thresholds"));

  m.def(
      "rip_check",
      [](const ComponentSet& A, Eigen::Index k, double delta, int trials, uint64_t seed) {
        const RIPReport r = rip_check(A, k, delta, trials, seed);
        return py::make_tuple(r.min_sigma, r.max_sigma, r.pass);
      },
      py::arg("components"), py::arg("k"), py::arg("delta"), py::arg("trials"), py::arg("seed"));

  py::class_<ConditionalSpec>(m, "ConditionalSpec")
      .def(py::init<Vec, Vec, Eigen::Index>(), py::arg("w"), py::arg("y"), py::arg("d"))
      .def_readonly("qbar", &ConditionalSpec::qbar);

  m.def(
      "sample_conditional_matrix",
      [](const ConditionalSpec& spec, uint64_t seed, uint64_t stream) {
        RngStream rng(seed, stream);
        return sample_conditional_matrix(spec, rng);
      },
      py::arg("spec"), py::arg("seed"), py::arg("stream") = 0);
  m.def("conditional_trace_mean", &conditional_trace_mean, py::arg("spec"));
  m.def(
      "density_at_zero_log",
      [](const Vec& alpha, Eigen::Index d, const std::string& convention) {
        return density_at_zero_log(make_profile(alpha), d,
                                   convention == "ambient" ? DensityConvention::ambient
                                                           : DensityConvention::exact);
      },
      py::arg("alpha"), py::arg("d"), py::arg("convention") = "exact");
  m.def(
      "sphere_log_surface",
      [](Eigen::Index d, const std::string& convention) {
        SurfaceConvention c = SurfaceConvention::surface;
        if (convention == "ball_volume_full") c = SurfaceConvention::ball_volume_full;
        if (convention == "ball_volume_lower") c = SurfaceConvention::ball_volume_lower;
        return sphere_log_surface(d, c);
      },
      py::arg("d"), py::arg("convention") = "surface");

  m.def(
      "estimate_W_log",
      [](const Vec& alpha, Eigen::Index d, const EventThresholds& th, std::uint64_t n_samples,
         uint64_t seed) {
        const KacRiceEstimate e = estimate_W_log(make_profile(alpha), d, th, n_samples, seed);
        py::dict out;
        out["log_value"] = e.log_value;
        out["sign"] = e.sign;
        out["std_err_log"] = e.std_err_log;
        out["events_pass"] = e.events_pass;
        out["zero_observed"] = e.zero_observed;
        return out;
      },
      py::arg("alpha"), py::arg("d"), py::arg("thresholds"), py::arg("n_samples"),
      py::arg("seed"));

  m.def(
      "estimate_h_expectation",
      [](Eigen::Index d, Eigen::Index n, const EventThresholds& th, std::uint64_t n_alpha,
         std::uint64_t n_matrix, uint64_t seed, const std::string& mode) {
        const KacRiceEstimate e =
            estimate_h_expectation(d, n, th, n_alpha, n_matrix, seed,
                                   mode == "surrogate" ? WMode::surrogate : WMode::direct);
        return e.to_json();
      },
      py::arg("d"), py::arg("n"), py::arg("thresholds"), py::arg("n_alpha"), py::arg("n_matrix"),
      py::arg("seed"), py::arg("mode") = "direct");

  m.def(
      "truncated_quartic_moments",
      [](double tau, std::uint64_t n_samples, uint64_t seed) {
        const TruncatedQuarticReport r = truncated_quartic_moments(tau, n_samples, seed);
        return py::make_tuple(r.mean, r.second_moment, r.mgf_ok);
      },
      py::arg("tau"), py::arg("n_samples"), py::arg("seed"));
  m.def(
      "subexp_tail",
      [](double nu, double b, double x) {
        const TailBound t = subexp_tail(SubExpParams{nu, b, 0.0}, x);
        return py::make_tuple(t.max_form, t.sum_form);
      },
      py::arg("nu"), py::arg("b"), py::arg("x"));
  m.def("factorial_bounds_check", &factorial_bounds_check, py::arg("n"));
}
