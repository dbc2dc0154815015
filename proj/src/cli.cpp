#include "otl/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "otl/kac_rice_mc.hpp"
#include "otl/landscape_probe.hpp"
#include "otl/parallel.hpp"
#include "otl/prob_toolkit.hpp"
#include "otl/sphere_optimizer.hpp"
#include "otl/tensor_core.hpp"
#include "otl/version.hpp"

namespace otl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json default_config(const std::string& command) {
  json c;
  c["command"] = command;
  c["d"] = 8;
  c["n"] = 16;
  c["seed"] = 1;
  c["workers"] = 0;
  c["input"] = "";
  c["thresholds"] = {{"delta", 0.1}, {"gamma", 10.0}, {"K", 4.0},
                     {"C", 20.0},    {"zeta", 0.0},   {"c_P", 10.0}};
  c["budgets"] = {{"restarts", 1000},  {"n_samples", 100000}, {"n_alpha", 1000},
                  {"n_matrix", 1000},  {"init_probes", 1},    {"restart_budget", 0}};
  c["conventions"] = {{"density", "exact"}, {"surface", "surface"}, {"e0_moment", "sixth"}};
  c["optimizer"] = {{"method", "power"},        {"step_size", 1e-3}, {"max_iters", 1000},
                    {"grad_tol", 0.0},          {"perturb_scale", 1e-3},
                    {"perturb_every", 50}};
  c["kacrice"] = {{"op", "h"}, {"p", 4}, {"epsilon", 0.1}};
  c["events"] = {{"x_source", "random"}, {"component", 0},      {"rip_k", 0},
                 {"rip_trials", 100},    {"sweep_tau", 2.0},    {"sweep_samples", 100},
                 {"sweep_degree", 4},    {"run_rip", true},     {"run_sweep", true}};
  c["recovery"] = {{"deflate", false}, {"dedup_correlation", 0.9}};
  c["census"] = {{"cluster_correlation", 0.99}};
  return c;
}

void apply_dotted(json& config, const std::string& key, const std::string& value) {
  json* node = &config;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (dot == std::string::npos) {
      json parsed;
      try {
        parsed = json::parse(value);
      } catch (const json::parse_error&) {
        parsed = value;  // bare strings
      }
      (*node)[part] = parsed;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string run_id_of(const json& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

EventThresholds thresholds_of(const json& c) {
  EventThresholds t;
  const json& th = c.at("thresholds");
  t.delta = th.at("delta").get<double>();
  t.gamma = th.at("gamma").get<double>();
  t.K = th.at("K").get<double>();
  t.C = th.at("C").get<double>();
  t.zeta = th.at("zeta").get<double>();
  t.c_P = th.at("c_P").get<double>();
  t.e0_sixth_moment = c.at("conventions").at("e0_moment").get<std::string>() != "fourth";
  t.validate();
  return t;
}

OptimizerConfig optimizer_of(const json& c) {
  OptimizerConfig o;
  const json& j = c.at("optimizer");
  o.method = j.at("method").get<std::string>() == "gradient" ? OptimizerConfig::Method::gradient
                                                             : OptimizerConfig::Method::power;
  o.step_size = j.at("step_size").get<double>();
  o.max_iters = j.at("max_iters").get<int>();
  o.grad_tol = j.at("grad_tol").get<double>();
  o.perturb_scale = j.at("perturb_scale").get<double>();
  o.perturb_every = j.at("perturb_every").get<int>();
  o.init_probes = c.at("budgets").at("init_probes").get<int>();
  o.zeta = c.at("thresholds").at("zeta").get<double>();
  o.validate();
  return o;
}

DensityConvention density_of(const json& c) {
  return c.at("conventions").at("density").get<std::string>() == "ambient"
             ? DensityConvention::ambient
             : DensityConvention::exact;
}

SurfaceConvention surface_of(const json& c) {
  const std::string s = c.at("conventions").at("surface").get<std::string>();
  if (s == "ball_volume_full") return SurfaceConvention::ball_volume_full;
  if (s == "ball_volume_lower") return SurfaceConvention::ball_volume_lower;
  return SurfaceConvention::surface;
}

struct RunContext {
  json config;
  fs::path dir;
  json findings = json::array();
  mutable std::vector<std::string> written;

  void write_text(const std::string& name, const std::string& content) const {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << content;
    written.push_back(name);
  }
  void write_json(const std::string& name, json payload) const {
    payload["config"] = config;
    payload["version"] = kVersion;
    payload["seed"] = config.at("seed");
    write_text(name, payload.dump(2) + "\n");
  }
  void finding(const std::string& check, const std::string& detail) {
    findings.push_back({{"check", check}, {"detail", detail}});
  }
};

ComponentSet load_input(const json& config) {
  const std::string path = config.at("input").get<std::string>();
  if (path.empty()) throw std::runtime_error("this command requires input=<components.csv>");
  return read_components_csv(path);
}

void cmd_gen(RunContext& ctx) {
  const auto d = ctx.config.at("d").get<Eigen::Index>();
  const auto n = ctx.config.at("n").get<Eigen::Index>();
  const auto seed = ctx.config.at("seed").get<uint64_t>();
  const ComponentSet A = sample_components(d, n, seed);
  ctx.write_text("components.csv", components_to_csv(A));
}

void cmd_decompose(RunContext& ctx) {
  const ComponentSet A = load_input(ctx.config);
  const OptimizerConfig opt = optimizer_of(ctx.config);
  const auto seed = ctx.config.at("seed").get<uint64_t>();
  const int budget = ctx.config.at("budgets").at("restart_budget").get<int>();
  const bool deflate = ctx.config.at("recovery").at("deflate").get<bool>();
  const double dedup = ctx.config.at("recovery").at("dedup_correlation").get<double>();
  const RecoveryReport rep = recover_all(A, opt, seed, budget, deflate, dedup);

  json j;
  j["coverage"] = rep.coverage;
  j["restarts_used"] = rep.restarts_used;
  j["budget_exhausted"] = rep.budget_exhausted;
  json found = json::array();
  std::ostringstream csv;
  csv << "sign,index,distance\n";
  char buf[128];
  for (const auto& r : rep.found) {
    found.push_back({{"sign", r.sign}, {"index", r.index}, {"distance", r.distance}});
    std::snprintf(buf, sizeof(buf), "%d,%lld,%.17g\n", r.sign,
                  static_cast<long long>(r.index), r.distance);
    csv << buf;
  }
  j["found"] = found;
  ctx.write_json("recovery.json", j);
  ctx.write_text("recovery.csv", csv.str());
}

void cmd_census(RunContext& ctx) {
  const ComponentSet A = load_input(ctx.config);
  const OptimizerConfig opt = optimizer_of(ctx.config);
  const auto seed = ctx.config.at("seed").get<uint64_t>();
  const int restarts = ctx.config.at("budgets").at("restarts").get<int>();
  const double gamma = ctx.config.at("thresholds").at("gamma").get<double>();
  const double cc = ctx.config.at("census").at("cluster_correlation").get<double>();
  const int workers = ctx.config.at("workers").get<int>();
  const CensusReport rep = basin_census(A, restarts, opt, seed, gamma, cc, workers);
  ctx.write_text("census.csv", census_to_csv(rep));
  json j;
  j["clusters"] = rep.clusters.size();
  j["restarts"] = rep.restarts;
  j["unconverged"] = rep.unconverged;
  ctx.write_json("census.json", j);
}

void cmd_kacrice(RunContext& ctx) {
  const auto d = ctx.config.at("d").get<Eigen::Index>();
  const auto n = ctx.config.at("n").get<Eigen::Index>();
  const auto seed = ctx.config.at("seed").get<uint64_t>();
  const EventThresholds th = thresholds_of(ctx.config);
  const json& budgets = ctx.config.at("budgets");
  const int workers = ctx.config.at("workers").get<int>();
  const std::string op = ctx.config.at("kacrice").at("op").get<std::string>();

  if (op == "h") {
    const KacRiceEstimate est = estimate_h_expectation(
        d, n, th, budgets.at("n_alpha").get<std::uint64_t>(),
        budgets.at("n_matrix").get<std::uint64_t>(), seed, WMode::direct, density_of(ctx.config),
        surface_of(ctx.config), workers);
    ctx.write_json("estimate.json", json::parse(est.to_json()));
  } else if (op == "W") {
    RngStream rng(seed, 0);
    const CorrelationProfile prof = make_profile(rng.normal_vector(n));
    const KacRiceEstimate est =
        estimate_W_log(prof, d, th, budgets.at("n_samples").get<std::uint64_t>(), seed + 1, workers);
    ctx.write_json("estimate.json", json::parse(est.to_json()));
  } else if (op == "psd") {
    RngStream rng(seed, 0);
    Vec alpha = rng.normal_vector(n);
    // Plant the largest-coordinate stratum so F_k holds.
    alpha[0] = std::pow(2.0 * th.tau(d, n), 0.25);
    const CorrelationProfile prof = make_profile(alpha);
    const PsdProbabilityReport rep =
        psd_probability(ConditionalSpec(alpha, alpha, d), prof, th,
                        budgets.at("n_samples").get<std::uint64_t>(), seed + 1, workers);
    json j;
    j["applicable"] = rep.applicable;
    j["successes"] = rep.successes;
    j["n_samples"] = rep.n_samples;
    j["p_hat"] = rep.p_hat;
    j["wilson"] = {rep.wilson_lower, rep.wilson_upper};
    j["bound"] = rep.bound;
    j["verdict"] = rep.verdict == PsdProbabilityReport::Verdict::holds       ? "holds"
                   : rep.verdict == PsdProbabilityReport::Verdict::straddles ? "straddles"
                   : rep.verdict == PsdProbabilityReport::Verdict::violated  ? "violated"
                                                                             : "inapplicable";
    if (rep.verdict == PsdProbabilityReport::Verdict::violated)
      ctx.finding("psd_probability", "Wilson lower bound exceeds T1+T2");
    ctx.write_json("estimate.json", j);
  } else if (op == "trace") {
    RngStream rng(seed, 0);
    const Vec w = rng.normal_vector(n);
    const TraceMomentReport rep = mc_trace_moments(
        ConditionalSpec(w, w, d), ctx.config.at("kacrice").at("p").get<int>(),
        budgets.at("n_samples").get<std::uint64_t>(), seed + 1,
        ctx.config.at("kacrice").at("epsilon").get<double>(), workers);
    json j;
    j["log_estimate"] = rep.log_estimate;
    j["std_err_log"] = rep.std_err_log;
    j["log_bound"] = rep.log_bound;
    j["holds"] = rep.holds;
    j["n_samples"] = rep.n_samples;
    if (!rep.holds) ctx.finding("trace_moment_bound", "estimate exceeds the moment bound");
    ctx.write_json("estimate.json", j);
  } else {
    throw std::runtime_error("kacrice.op must be one of h|W|psd|trace");
  }
}

void cmd_events(RunContext& ctx) {
  const ComponentSet A = load_input(ctx.config);
  const auto seed = ctx.config.at("seed").get<uint64_t>();
  const EventThresholds th = thresholds_of(ctx.config);
  const json& ev = ctx.config.at("events");

  SpherePoint x = [&] {
    const std::string src = ev.at("x_source").get<std::string>();
    if (src == "component") {
      const auto k = ev.at("component").get<Eigen::Index>();
      if (k < 0 || k >= A.n()) throw std::runtime_error("events.component out of range");
      return SpherePoint(A.unit_column(k));
    }
    RngStream rng(seed, 0);
    return SpherePoint(rng.sphere_point(A.d()));
  }();

  const CorrelationProfile prof = correlations(A, x);
  const EventReport report = classify_events(prof, th, A.d(), A.n());
  const SuperlevelReport sup = superlevel_membership(A, x, th);

  json j;
  j["events"] = json::parse(report.to_json());
  j["superlevel"] = {{"in_L", sup.in_L}, {"in_L1", sup.in_L1}, {"in_L2", sup.in_L2}};
  if (ev.at("run_rip").get<bool>()) {
    Eigen::Index k = ev.at("rip_k").get<Eigen::Index>();
    if (k <= 0) k = std::max<Eigen::Index>(1, A.d() / 4);
    const RIPReport rip = rip_check(A, k, th.delta, ev.at("rip_trials").get<int>(), seed + 1);
    j["rip"] = json::parse(rip.to_json());
    if (!rip.pass) ctx.finding("rip", "singular values escape [1-delta, 1+delta]");
  }
  if (ev.at("run_sweep").get<bool>()) {
    const ConcentrationSweep sweep =
        concentration_sweep(A, ev.at("sweep_tau").get<double>(), ev.at("sweep_samples").get<int>(),
                            seed + 2, ev.at("sweep_degree").get<int>());
    j["concentration"] = json::parse(sweep.to_json());
  }
  ctx.write_json("events.json", j);
}

void cmd_probcheck(RunContext& ctx) {
  const auto seed = ctx.config.at("seed").get<uint64_t>();
  const auto n_samples = ctx.config.at("budgets").at("n_samples").get<std::uint64_t>();
  const int workers = ctx.config.at("workers").get<int>();
  json checks = json::array();
  auto add = [&](const CheckReport& r) {
    checks.push_back(json::parse(r.to_json()));
    if (r.verdict == CheckVerdict::violated) ctx.finding(r.claim_id, "bound violated beyond CI");
  };

  const TruncatedQuarticReport tq = truncated_quartic_moments(1e6, n_samples, seed, 9, workers);
  json jt;
  jt["claim_id"] = "truncated_quartic_moments";
  jt["mean"] = tq.mean;
  jt["second_moment"] = tq.second_moment;
  jt["nu_sq"] = tq.nu_sq;
  jt["nominal_nu_sq"] = tq.nominal_nu_sq;
  jt["mgf_ok"] = tq.mgf_ok;
  checks.push_back(jt);
  if (!tq.mgf_ok) ctx.finding("truncated_quartic_mgf", "MGF exceeds envelope beyond 3 SE");

  const Eigen::MatrixXd eye8 = Eigen::MatrixXd::Identity(8, 8);
  const QuadraticTailReport qt = gaussian_quadratic_tail_check(eye8, 1.0, n_samples, seed + 1, workers);
  add(qt.upper);
  add(qt.lower);
  add(norm_lower_tail_check(Eigen::VectorXd::Zero(8), eye8, Eigen::VectorXd::Unit(4, 0), 1.0,
                            n_samples, seed + 2, true, workers));

  bool fact_ok = true;
  for (long n = 1; n <= 170; ++n) fact_ok = fact_ok && factorial_bounds_check(n);
  for (long n = 2; n <= 80; ++n) fact_ok = fact_ok && double_factorial_chain_check(n);
  checks.push_back({{"claim_id", "factorial_bounds"}, {"holds", fact_ok}});
  if (!fact_ok) ctx.finding("factorial_bounds", "log-domain factorial bounds violated");

  const double lhs = exp_polynomial_antiderivative(0.0, 1.0, 2, 5.0) -
                     exp_polynomial_antiderivative(0.0, 1.0, 2, 1.0);
  const double rhs = integrate([](double x) { return std::exp(-x) * x * x; }, 1.0, 5.0, 1e-12);
  const bool anti_ok = std::fabs(lhs - rhs) <= 1e-8 * std::max(1.0, std::fabs(rhs));
  checks.push_back({{"claim_id", "exp_polynomial_antiderivative"},
                    {"value", lhs},
                    {"quadrature", rhs},
                    {"holds", anti_ok}});
  if (!anti_ok) ctx.finding("exp_polynomial_antiderivative", "mismatch with quadrature");

  json j;
  j["checks"] = checks;
  ctx.write_json("probcheck.json", j);
}

}  // namespace

CliOutcome run_cli(const std::vector<std::string>& args) {
  CliOutcome out;
  try {
    if (args.empty()) {
      out.exit_code = 1;
      out.message =
          "usage: otl gen|decompose|census|kacrice|events|probcheck "
          "[--config FILE] [--seed N] [--workers N] [--out DIR] [key=value ...]";
      return out;
    }
    const std::string command = args[0];
    if (command != "gen" && command != "decompose" && command != "census" &&
        command != "kacrice" && command != "events" && command != "probcheck") {
      out.exit_code = 1;
      out.message = "unknown command: " + command;
      return out;
    }
    json config = default_config(command);
    std::string out_dir = "runs";
    std::vector<std::pair<std::string, std::string>> overrides;
    for (std::size_t i = 1; i < args.size(); ++i) {
      const std::string& a = args[i];
      auto next = [&]() -> const std::string& {
        if (++i >= args.size()) throw std::runtime_error("missing value after " + a);
        return args[i];
      };
      if (a == "--config") {
        std::ifstream f(next());
        if (!f) throw std::runtime_error("cannot open config file");
        json file_cfg = json::parse(f);
        config.merge_patch(file_cfg);
      } else if (a == "--seed") {
        overrides.emplace_back("seed", next());
      } else if (a == "--workers") {
        overrides.emplace_back("workers", next());
      } else if (a == "--out") {
        out_dir = next();
      } else if (a.find('=') != std::string::npos) {
        const std::size_t eq = a.find('=');
        overrides.emplace_back(a.substr(0, eq), a.substr(eq + 1));
      } else {
        throw std::runtime_error("unrecognized argument: " + a);
      }
    }
    for (const auto& [k, v] : overrides) apply_dotted(config, k, v);
    config["command"] = command;

    RunContext ctx;
    ctx.config = config;
    ctx.dir = fs::path(out_dir) / run_id_of(config);
    fs::create_directories(ctx.dir);

    const auto t0 = std::chrono::steady_clock::now();
    if (command == "gen") cmd_gen(ctx);
    else if (command == "decompose") cmd_decompose(ctx);
    else if (command == "census") cmd_census(ctx);
    else if (command == "kacrice") cmd_kacrice(ctx);
    else if (command == "events") cmd_events(ctx);
    else cmd_probcheck(ctx);
    const auto t1 = std::chrono::steady_clock::now();

    if (!ctx.findings.empty()) {
      json f;
      f["findings"] = ctx.findings;
      ctx.write_json("findings.json", f);
      out.exit_code = 2;
    }
    // Every run carries the resolved configuration, even when the command's
    // own outputs are plain CSV.
    {
      json manifest;
      manifest["files"] = ctx.written;
      ctx.write_json("manifest.json", manifest);
    }
    // Wall time lives in the log, not in the result files, so identical
    // configurations reproduce the run directory byte-for-byte.
    std::ofstream log(ctx.dir / "run.log");
    log << kVersion << "\ncommand: " << command << "\nrun_id: " << ctx.dir.filename().string()
        << "\nwall_time_ms: "
        << std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count() << "\n";
    out.run_dir = ctx.dir.string();
    return out;
  } catch (const std::exception& e) {
    out.exit_code = 1;
    out.message = e.what();
    return out;
  }
}

}  // namespace otl
