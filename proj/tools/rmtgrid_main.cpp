// Command-line front end: simulate a feeder scenario, run the detection
// pipeline over telemetry CSVs, estimate pattern coefficients, or check
// telemetry against the asymptotic spectral laws.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rmtgrid/detect.hpp"
#include "rmtgrid/errors.hpp"
#include "rmtgrid/estimate.hpp"
#include "rmtgrid/ingest.hpp"
#include "rmtgrid/io.hpp"
#include "rmtgrid/les.hpp"
#include "rmtgrid/pipeline.hpp"
#include "rmtgrid/rng.hpp"
#include "rmtgrid/simulate.hpp"
#include "rmtgrid/spectral.hpp"
#include "rmtgrid/stats.hpp"
#include "rmtgrid/version.hpp"

namespace fs = std::filesystem;
using namespace rmtgrid;

namespace {

// RMT_SEED in the environment beats any --seed flag.
bool env_seed(std::uint64_t* seed) {
  const char* s = std::getenv("RMT_SEED");
  if (s == nullptr || *s == '\0') return false;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0')
    throw InputError("RMT_SEED must be an unsigned integer");
  *seed = static_cast<std::uint64_t>(v);
  return true;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory: " + dir);
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const json& inputs, std::uint64_t seed,
                    const std::vector<std::string>& names) {
  // Manifest paths are relative to the output directory so reruns into any
  // directory produce byte-identical manifests.
  std::vector<std::string> abs;
  for (const std::string& n : names) abs.push_back(join(out_dir, n));
  json m = json{{"schema", kSchemaVersion},
                {"command", command},
                {"config_hash", json()},
                {"seed", seed},
                {"version", kVersion},
                {"outputs", json::array()}};
  const std::string canon = inputs.dump();
  m["config_hash"] = to_hex64(fnv1a64(canon.data(), canon.size()));
  for (std::size_t i = 0; i < names.size(); ++i)
    m["outputs"].push_back({{"path", names[i]}, {"digest", file_digest_hex(abs[i])}});
  save_json_file(join(out_dir, "manifest.json"), m);
}

struct SimulateArgs {
  std::string builtin;
  std::string scenario_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir = ".";
};

int cmd_simulate(SimulateArgs a) {
  if (env_seed(&a.seed)) a.seed_given = true;
  ScenarioConfig cfg;
  if (!a.builtin.empty()) {
    cfg = builtin_scenario_by_name(a.builtin, a.seed, a.seed_given);
  } else if (!a.scenario_path.empty()) {
    cfg = scenario_from_json(load_json_file(a.scenario_path));
    if (a.seed_given) cfg.noise.seed = a.seed;
  } else {
    throw InputError("provide --builtin <name> or --scenario <file>");
  }
  const ScenarioRun run = run_scenario(cfg);
  ensure_dir(a.out_dir);
  save_series_csv(join(a.out_dir, "P.csv"), run.telemetry.p_measured);
  save_series_csv(join(a.out_dir, "U.csv"), run.telemetry.u_measured);
  save_json_file(join(a.out_dir, "truth.json"), truth_to_json(cfg, run));
  save_json_file(join(a.out_dir, "library.json"), library_to_json(cfg));
  json inputs{{"builtin", a.builtin}, {"seed", cfg.noise.seed}};
  if (!a.scenario_path.empty())
    inputs["scenario_digest"] = file_digest_hex(a.scenario_path);
  write_manifest(a.out_dir, "simulate", inputs, cfg.noise.seed,
                 {"P.csv", "U.csv", "truth.json", "library.json"});
  std::cout << "simulated scenario '" << cfg.name << "' (seed "
            << cfg.noise.seed << ") into " << a.out_dir << "\n";
  return 0;
}

struct DetectArgs {
  std::string p_csv;
  std::string u_csv;
  std::string library_path;
  std::int64_t t = 100;
  std::int64_t dt = 1;
  std::string phi = "chebyshevT2";
  double epsilon = 1.96;
  double eps_detect = 4.5;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = ".";
};

int cmd_detect(DetectArgs a) {
  env_seed(&a.seed);
  const RawSeriesSet p = load_csv(a.p_csv, Quantity::activePower);
  const RawSeriesSet u = load_csv(a.u_csv, Quantity::voltageMagnitude);
  std::optional<PipelineLibrary> lib;
  if (!a.library_path.empty())
    lib = library_from_json(load_json_file(a.library_path));

  PipelineOptions opt;
  opt.t = a.t;
  opt.dt = a.dt;
  opt.epsilon = a.epsilon;
  opt.eps_detect = a.eps_detect;
  opt.seed = a.seed;
  opt.jobs = a.jobs;
  opt.phi = test_function_by_name(a.phi);
  const PipelineResult res = run_detection_pipeline(p, u, lib, opt);

  ensure_dir(a.out_dir);
  const std::string scenario = fs::path(a.p_csv).stem().string();
  json report = report_to_json(res, scenario);
  std::size_t h1 = 0;
  for (double z : res.state_trace.z_theory())
    if (std::abs(z) >= a.epsilon) ++h1;
  report["state_h1_windows"] = h1;
  save_json_file(join(a.out_dir, "report.json"), report);

  std::vector<std::string> names{"report.json", "state_trace.csv"};
  save_trace_csv(join(a.out_dir, "state_trace.csv"), res.state_trace);
  for (const LesTrace& tr : res.node_traces) {
    const std::string name = "trace_" + tr.node + ".csv";
    save_trace_csv(join(a.out_dir, name), tr);
    names.push_back(name);
  }
  json inputs{{"p", file_digest_hex(a.p_csv)},
              {"u", file_digest_hex(a.u_csv)},
              {"T", a.t},
              {"dT", a.dt},
              {"phi", a.phi},
              {"epsilon", a.epsilon},
              {"eps_detect", a.eps_detect},
              {"seed", a.seed}};
  if (!a.library_path.empty())
    inputs["library"] = file_digest_hex(a.library_path);
  write_manifest(a.out_dir, "detect", inputs, a.seed, names);

  std::cout << "detect: " << res.events.size() << " events, "
            << res.transitions.size() << " routine transitions, state in band "
            << res.state_in_band_fraction << "\n";
  for (const PipelineEvent& e : res.events)
    std::cout << "  " << e.node << " " << to_string(e.kind) << " ["
              << e.t_start << ", " << e.t_end << ") magnitude "
              << e.magnitude_pct << "%\n";
  return 0;
}

struct EstimateArgs {
  std::string p_csv;
  std::string library_path;
  std::string report_path;
  bool no_ulp = false;
  std::string out_dir = ".";
};

int cmd_estimate(EstimateArgs a) {
  const RawSeriesSet p = load_csv(a.p_csv, Quantity::activePower);
  const PipelineLibrary lib = library_from_json(load_json_file(a.library_path));
  if (lib.tlps.empty())
    throw NumericError("pattern library is empty: the design matrix has rank zero");
  const json report = load_json_file(a.report_path);

  // Rebuild each node's event intervals from the detection report.
  std::vector<NodeAnalysis> nodes(p.node_ids.size());
  for (std::size_t i = 0; i < p.node_ids.size(); ++i)
    nodes[i].node = p.node_ids[i];
  try {
    for (const json& je : report.value("events", json::array())) {
      const std::string node = je.at("node").get<std::string>();
      EventPair pr;
      pr.addition = je.at("kind").get<std::string>() == "invisible";
      pr.t_start = je.at("t_start").get<std::int64_t>();
      pr.t_end = je.at("t_end").get<std::int64_t>();
      pr.magnitude_pct = je.value("magnitude_pct", 0.0);
      for (NodeAnalysis& na : nodes)
        if (na.node == node) na.pairs.push_back(pr);
    }
  } catch (const json::exception& ex) {
    throw InputError(std::string("bad detection report JSON: ") + ex.what());
  }

  const std::vector<NodeEstimate> ests =
      run_estimation(p, lib, nodes, !a.no_ulp);
  ensure_dir(a.out_dir);
  save_json_file(join(a.out_dir, "estimates.json"), estimates_to_json(ests));

  // Reconstruction curves for the nodes that carry detected addition
  // intervals; columns are fractions of the node's base load.
  const std::int64_t s_total = p.values.cols();
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (const EventPair& pr : nodes[i].pairs)
      if (pr.addition) {
        picked.push_back(i);
        break;
      }
  {
    std::ofstream out(join(a.out_dir, "reconstruction.csv"));
    if (!out) throw InputError("cannot write reconstruction.csv");
    out << "time";
    for (std::size_t i : picked) {
      const std::string& id = nodes[i].node;
      out << ",obs_" << id << ",fit_with_" << id << ",fit_without_" << id;
    }
    out << "\n";
    std::vector<LoadPattern> ulps;
    for (std::size_t i : picked)
      ulps.push_back(
          ulp_profile_from_pairs(nodes[i].pairs, s_total, "u_" + nodes[i].node));
    for (std::int64_t t = 0; t < s_total; ++t) {
      out << t;
      for (std::size_t k = 0; k < picked.size(); ++k) {
        const std::size_t i = picked[k];
        const NodeEstimate& e = ests[i];
        double with = 0.0, without = 0.0;
        for (std::size_t m = 0; m < lib.tlps.size(); ++m) {
          const double pt = lib.tlps[m].profile[static_cast<std::size_t>(
              t % static_cast<std::int64_t>(lib.tlps[m].profile.size()))];
          without += e.without_ulp.values(static_cast<Eigen::Index>(m)) * pt;
          with += e.with_ulp.values(static_cast<Eigen::Index>(m)) * pt;
        }
        if (e.has_ulp)
          with += e.with_ulp.values(e.with_ulp.values.size() - 1) *
                  ulps[k].profile[static_cast<std::size_t>(t)];
        const double obs = p.values(static_cast<Eigen::Index>(i), t) /
                           lib.base_mw(static_cast<Eigen::Index>(i));
        out << "," << detail::format_double(obs) << ","
            << detail::format_double(with) << ","
            << detail::format_double(without);
      }
      out << "\n";
    }
  }
  json inputs{{"p", file_digest_hex(a.p_csv)},
              {"library", file_digest_hex(a.library_path)},
              {"report", file_digest_hex(a.report_path)},
              {"no_ulp", a.no_ulp}};
  write_manifest(a.out_dir, "estimate", inputs, 0,
                 {"estimates.json", "reconstruction.csv"});
  std::cout << "estimate: " << ests.size() << " nodes, " << picked.size()
            << " with reconstructed step profiles\n";
  return 0;
}

struct RmtCheckArgs {
  std::string csv;
  std::vector<std::int64_t> gaussian;  // N T
  std::string law = "mp";
  std::string entries = "gaussian";
  int reps = 0;  // 0 = per-law default
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

Eigen::MatrixXd draw_entries(const std::string& kind, Eigen::Index n,
                             Eigen::Index t, Rng& rng) {
  if (kind == "gaussian") return rng.normal_matrix(n, t);
  Eigen::MatrixXd m(n, t);
  if (kind == "bernoulli") {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < t; ++j)
        m(i, j) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    return m;
  }
  if (kind == "uniform") {
    const double s = std::sqrt(12.0);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < t; ++j)
        m(i, j) = (rng.uniform() - 0.5) * s;
    return m;
  }
  throw InputError("unknown entry distribution: " + kind);
}

double kappa4_of(const std::string& kind) {
  if (kind == "gaussian") return 0.0;
  if (kind == "bernoulli") return -2.0;
  return -1.2;  // uniform
}

int cmd_rmt_check(RmtCheckArgs a) {
  env_seed(&a.seed);
  const bool synthetic = !a.gaussian.empty();
  if (synthetic && a.gaussian.size() != 2)
    throw InputError("--gaussian takes two values: N T");
  if (!synthetic && a.csv.empty())
    throw InputError("provide a telemetry CSV or --gaussian N T");

  Eigen::MatrixXd base;
  if (!synthetic) {
    const RawSeriesSet set = load_csv(a.csv, Quantity::activePower);
    base = set.values;
  }
  const Eigen::Index n = synthetic ? a.gaussian[0] : base.rows();
  const Eigen::Index t = synthetic ? a.gaussian[1] : base.cols();
  if (n > t) throw InputError("need at least as many samples as nodes");
  const double c = static_cast<double>(n) / static_cast<double>(t);
  Rng rng(a.seed);

  json diag{{"schema", kSchemaVersion}, {"law", a.law},   {"n", n},
            {"t", t},                   {"c", c},         {"entries", a.entries},
            {"seed", a.seed},           {"synthetic", synthetic}};
  bool pass = false;

  if (a.law == "mp") {
    const int reps = a.reps > 0 ? a.reps : 1;
    const MpLaw law = MpLaw::make(c, SpectrumConvention::overT);
    const double bound = a.entries == "gaussian" ? 0.05 : 0.10;
    json ks_list = json::array();
    double worst = 0.0;
    for (int r = 0; r < reps; ++r) {
      Eigen::MatrixXd m = synthetic ? draw_entries(a.entries, n, t, rng)
                                    : standardize_rows(base, {});
      const CovarianceSpectrum spec =
          covariance_spectrum(m, SpectrumConvention::overT);
      const double ks = ks_distance(spec, law);
      ks_list.push_back(ks);
      worst = std::max(worst, ks);
    }
    pass = worst <= bound;
    diag["reps"] = reps;
    diag["ks"] = ks_list;
    diag["ks_max"] = worst;
    diag["bound"] = bound;
    std::cout << "mp law: ks_max=" << worst << " bound=" << bound << " "
              << (pass ? "PASS" : "FAIL") << "\n";
  } else if (a.law == "ring") {
    Eigen::MatrixXd m = synthetic ? draw_entries(a.entries, n, t, rng)
                                  : standardize_rows(base, {});
    const Eigen::VectorXcd eigs = ring_transform(m);
    const double inner = std::sqrt(1.0 - c) - 0.05;
    const double outer = 1.05;
    const double frac = annulus_fraction(eigs, inner, outer);
    pass = frac >= 0.95;
    diag["inner"] = inner;
    diag["outer"] = outer;
    diag["fraction_inside"] = frac;
    diag["bound"] = 0.95;
    std::cout << "ring law: fraction=" << frac << " annulus=[" << inner << ", "
              << outer << "] " << (pass ? "PASS" : "FAIL") << "\n";
  } else if (a.law == "clt") {
    if (!synthetic)
      throw InputError("the clt check needs --gaussian N T (synthetic windows)");
    const int reps = a.reps > 0 ? a.reps : 1000;
    const TestFunction phi = chebyshev_t2();
    const double kappa4 = kappa4_of(a.entries);
    const double mean_th = les_mean(phi, c, n);
    const double var_th = les_variance(phi, c, kappa4);
    const double offset = t2_finite_size_offset(n, t, kappa4);
    std::vector<double> taus(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
      const Eigen::MatrixXd m = draw_entries(a.entries, n, t, rng);
      const CovarianceSpectrum spec =
          covariance_spectrum(m, SpectrumConvention::overN);
      taus[static_cast<std::size_t>(r)] = les_stat(spec, phi);
    }
    const double m_hat = mean(taus);
    double v_hat = 0.0;
    for (double v : taus) v_hat += (v - m_hat) * (v - m_hat);
    v_hat /= static_cast<double>(reps - 1);
    const double se = std::sqrt(var_th / reps);
    const double ks =
        ks_distance_to_normal(taus, m_hat, std::sqrt(v_hat));
    const double ks_crit = 1.035 / std::sqrt(static_cast<double>(reps));
    const bool mean_ok = std::abs(m_hat - mean_th) <= 3.0 * se + std::abs(offset);
    const bool var_ok = std::abs(v_hat - var_th) <= 0.15 * var_th;
    const bool ks_ok = ks < ks_crit;
    pass = mean_ok && var_ok && ks_ok;
    diag["reps"] = reps;
    diag["kappa4"] = kappa4;
    diag["mean_theory"] = mean_th;
    diag["mean_sample"] = m_hat;
    diag["finite_size_offset"] = offset;
    diag["variance_theory"] = var_th;
    diag["variance_sample"] = v_hat;
    diag["ks_to_fitted_gaussian"] = ks;
    diag["ks_critical_1pct"] = ks_crit;
    diag["mean_ok"] = mean_ok;
    diag["variance_ok"] = var_ok;
    diag["ks_ok"] = ks_ok;
    std::cout << "clt: mean " << m_hat << " vs " << mean_th << " (offset "
              << offset << "), variance " << v_hat << " vs " << var_th
              << ", ks " << ks << " vs " << ks_crit << " "
              << (pass ? "PASS" : "FAIL") << "\n";
  } else {
    throw InputError("unknown law: " + a.law + " (expected mp, ring, or clt)");
  }
  diag["pass"] = pass;
  ensure_dir(a.out_dir);
  save_json_file(join(a.out_dir, "diagnostics.json"), diag);
  json inputs{{"law", a.law},         {"entries", a.entries},
              {"n", n},               {"t", t},
              {"reps", a.reps},       {"seed", a.seed},
              {"csv", a.csv.empty() ? json() : json(file_digest_hex(a.csv))}};
  write_manifest(a.out_dir, "rmt-check", inputs, a.seed, {"diagnostics.json"});
  if (!pass)
    throw NumericError("sampled statistics violate the " + a.law + " bounds");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral-statistics toolkit for distribution-grid telemetry"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* s = app.add_subcommand(
      "simulate", "Generate telemetry for a feeder scenario");
  s->add_option("--builtin", sim.builtin, "Builtin scenario (simple, complex)");
  s->add_option("--scenario", sim.scenario_path, "Scenario JSON file");
  CLI::Option* sim_seed = s->add_option("--seed", sim.seed, "Noise seed");
  s->add_option("--out", sim.out_dir, "Output directory");

  DetectArgs det;
  CLI::App* d = app.add_subcommand(
      "detect", "Run change-point detection over telemetry CSVs");
  d->add_option("--p", det.p_csv, "Active-power CSV")->required();
  d->add_option("--u", det.u_csv, "Voltage-magnitude CSV")->required();
  d->add_option("--library", det.library_path,
                "Pattern library JSON (routine profiles + base loads)");
  d->add_option("--T", det.t, "Window length in samples");
  d->add_option("--dT", det.dt, "Window step in samples");
  d->add_option("--phi", det.phi, "Test function (chebyshevT2, likelihoodRatio)");
  d->add_option("--epsilon", det.epsilon, "Band half-width in sigmas");
  d->add_option("--eps-detect", det.eps_detect, "Spike threshold on robust z");
  d->add_option("--seed", det.seed, "Seed for duplication noise");
  d->add_option("--jobs", det.jobs, "Worker threads for per-node traces");
  d->add_option("--out", det.out_dir, "Output directory");

  EstimateArgs est;
  CLI::App* e = app.add_subcommand(
      "estimate", "Least-squares coefficients from telemetry and a report");
  e->add_option("--p", est.p_csv, "Active-power CSV")->required();
  e->add_option("--library", est.library_path, "Pattern library JSON")->required();
  e->add_option("--report", est.report_path, "Detection report JSON")->required();
  e->add_flag("--no-ulp", est.no_ulp, "Skip step-profile augmentation");
  e->add_option("--out", est.out_dir, "Output directory");

  RmtCheckArgs chk;
  CLI::App* r = app.add_subcommand(
      "rmt-check", "Check telemetry or synthetic matrices against spectral laws");
  r->add_option("csv", chk.csv, "Telemetry CSV to check");
  r->add_option("--gaussian", chk.gaussian,
                "Synthetic matrix dimensions: N T")->expected(2);
  r->add_option("--law", chk.law, "Law to check (mp, ring, clt)");
  r->add_option("--entries", chk.entries,
                "Entry distribution (gaussian, bernoulli, uniform)");
  r->add_option("--reps", chk.reps, "Repetitions (clt default 1000)");
  r->add_option("--seed", chk.seed, "Seed for synthetic draws");
  r->add_option("--out", chk.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*s) {
      sim.seed_given = sim_seed->count() > 0;
      return cmd_simulate(sim);
    }
    if (*d) return cmd_detect(det);
    if (*e) return cmd_estimate(est);
    if (*r) return cmd_rmt_check(chk);
    throw InputError("no subcommand given");
  } catch (const InputError& ex) {
    std::cerr << "input error: " << ex.what() << "\n";
    return 2;
  } catch (const NumericError& ex) {
    std::cerr << "numeric error: " << ex.what() << "\n";
    return 3;
  } catch (const std::exception& ex) {
    std::cerr << "internal error: " << ex.what() << "\n";
    return 4;
  }
}
