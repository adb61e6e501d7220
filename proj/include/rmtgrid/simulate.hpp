#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "rmtgrid/errors.hpp"
#include "rmtgrid/ingest.hpp"
#include "rmtgrid/patterns.hpp"
#include "rmtgrid/rng.hpp"

namespace rmtgrid {

// ---------------------------------------------------------------------------
// Radial feeder.

struct Branch {
  int from = 0;
  int to = 0;
  double r_pu = 0.0;
  double x_pu = 0.0;
};

// Tree rooted at node 1 (the substation). Load buses are nodes 2..n_nodes and
// map to telemetry ids "n1".."n(n_nodes-1)" in that order.
struct FeederTopology {
  int n_nodes = 0;
  std::vector<Branch> branches;
  double v0 = 1.0;
};

inline constexpr double kVBaseKv = 12.66;
inline constexpr double kZBaseOhm = kVBaseKv * kVBaseKv;  // 1 MVA base

// Standard 33-bus feeder branch data (ohms) plus a short substation stub,
// renumbered so the substation is node 1 and load buses are 2..34.
inline FeederTopology ieee33_feeder() {
  static const std::array<std::array<double, 4>, 32> raw = {{
      {1, 2, 0.0922, 0.0470},   {2, 3, 0.4930, 0.2511},
      {3, 4, 0.3660, 0.1864},   {4, 5, 0.3811, 0.1941},
      {5, 6, 0.8190, 0.7070},   {6, 7, 0.1872, 0.6188},
      {7, 8, 1.7114, 1.2351},   {8, 9, 1.0300, 0.7400},
      {9, 10, 1.0440, 0.7400},  {10, 11, 0.1966, 0.0650},
      {11, 12, 0.3744, 0.1238}, {12, 13, 1.4680, 1.1550},
      {13, 14, 0.5416, 0.7129}, {14, 15, 0.5910, 0.5260},
      {15, 16, 0.7463, 0.5450}, {16, 17, 1.2890, 1.7210},
      {17, 18, 0.7320, 0.5740}, {2, 19, 0.1640, 0.1565},
      {19, 20, 1.5042, 1.3554}, {20, 21, 0.4095, 0.4784},
      {21, 22, 0.7089, 0.9373}, {3, 23, 0.4512, 0.3083},
      {23, 24, 0.8980, 0.7091}, {24, 25, 0.8960, 0.7011},
      {6, 26, 0.2030, 0.1034},  {26, 27, 0.2842, 0.1447},
      {27, 28, 1.0590, 0.9337}, {28, 29, 0.8042, 0.7006},
      {29, 30, 0.5075, 0.2585}, {30, 31, 0.9744, 0.9630},
      {31, 32, 0.3105, 0.3619}, {32, 33, 0.3410, 0.5302},
  }};
  FeederTopology topo;
  topo.n_nodes = 34;
  topo.v0 = 1.0;
  topo.branches.push_back({1, 2, 0.01 / kZBaseOhm, 0.01 / kZBaseOhm});
  for (const auto& b : raw)
    topo.branches.push_back({static_cast<int>(b[0]) + 1,
                             static_cast<int>(b[1]) + 1, b[2] / kZBaseOhm,
                             b[3] / kZBaseOhm});
  return topo;
}

// Standard 33-bus peak loads (kW) in load-bus order; the first entry is the
// substation-adjacent bus, reconstructed at 100 kW.
inline const std::vector<double>& ieee33_loads_kw() {
  static const std::vector<double> loads = {
      100, 100, 90, 120, 60, 60, 200, 200, 60, 60, 45,  60,  60,  120, 60, 60, 60,
      90,  90,  90, 90,  90, 90, 420, 420, 60, 60, 60,  120, 200, 150, 210, 60};
  return loads;
}

inline constexpr double kPowerFactor = 0.95;

namespace detail {

struct TreeOrder {
  std::vector<int> parent;        // parent[node], parent[1] = 0
  std::vector<double> r, x;       // branch into node, pu
  std::vector<int> order;         // root-first traversal
};

inline TreeOrder build_tree(const FeederTopology& topo) {
  const int n = topo.n_nodes;
  if (n < 2) throw InputError("feeder needs at least two nodes");
  if (static_cast<int>(topo.branches.size()) != n - 1)
    throw InputError("topology is not a tree: " +
                     std::to_string(topo.branches.size()) + " branches for " +
                     std::to_string(n) + " nodes");
  TreeOrder t;
  t.parent.assign(n + 1, -1);
  t.r.assign(n + 1, 0.0);
  t.x.assign(n + 1, 0.0);
  std::vector<std::vector<int>> children(n + 1);
  for (const Branch& b : topo.branches) {
    if (b.from < 1 || b.from > n || b.to < 2 || b.to > n)
      throw InputError("branch " + std::to_string(b.from) + "->" +
                       std::to_string(b.to) + " is out of range");
    if (t.parent[b.to] != -1)
      throw InputError("topology is not a tree: node " + std::to_string(b.to) +
                       " has two parents");
    t.parent[b.to] = b.from;
    t.r[b.to] = b.r_pu;
    t.x[b.to] = b.x_pu;
    children[b.from].push_back(b.to);
  }
  t.order.reserve(n);
  std::vector<int> stack = {1};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    t.order.push_back(u);
    for (int v : children[u]) stack.push_back(v);
  }
  if (static_cast<int>(t.order.size()) != n)
    throw InputError("topology is not a tree: not all nodes reach node 1");
  return t;
}

}  // namespace detail

struct PowerFlowResult {
  Eigen::MatrixXd v;            // (n_nodes-1) x S voltage magnitude, pu
  Eigen::VectorXd root_p_mw;    // active flow on the substation branch
};

// Lossless linearized DistFlow on the tree: v_k^2 = v_parent^2 -
// 2 (r P + x Q) with branch flows accumulated leaf-to-root. Injections are
// active power (MW) per load bus (nodes 2..n, telemetry order); reactive
// power follows a fixed 0.95 power factor.
inline PowerFlowResult power_flow_full(const FeederTopology& topo,
                                       const Eigen::MatrixXd& p_mw) {
  const int n = topo.n_nodes;
  if (p_mw.rows() != n - 1)
    throw InputError("injection matrix must have one row per load bus");
  if (!p_mw.allFinite()) throw NumericError("injections contain non-finite values");
  const detail::TreeOrder tree = detail::build_tree(topo);
  const double tan_phi = std::tan(std::acos(kPowerFactor));
  const Eigen::Index s = p_mw.cols();
  Eigen::MatrixXd pf = Eigen::MatrixXd::Zero(n + 1, s);
  Eigen::MatrixXd qf = Eigen::MatrixXd::Zero(n + 1, s);
  for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
    const int node = *it;
    if (node == 1) continue;
    pf.row(node) += p_mw.row(node - 2);
    qf.row(node) += p_mw.row(node - 2) * tan_phi;
    pf.row(tree.parent[node]) += pf.row(node);
    qf.row(tree.parent[node]) += qf.row(node);
  }
  Eigen::MatrixXd v2(n + 1, s);
  v2.row(1).setConstant(topo.v0 * topo.v0);
  for (int node : tree.order) {
    if (node == 1) continue;
    v2.row(node) = v2.row(tree.parent[node]) -
                   2.0 * (tree.r[node] * pf.row(node) +
                          tree.x[node] * qf.row(node));
  }
  if ((v2.bottomRows(n - 1).array() <= 0.0).any())
    throw NumericError("voltage collapse: squared magnitude went non-positive");
  PowerFlowResult out;
  out.v = v2.middleRows(2, n - 1).array().sqrt();
  out.root_p_mw = pf.row(2).transpose();
  return out;
}

inline Eigen::MatrixXd power_flow(const FeederTopology& topo,
                                  const Eigen::MatrixXd& p_mw) {
  return power_flow_full(topo, p_mw).v;
}

// ---------------------------------------------------------------------------
// Scenario definition.

struct NoiseConfig {
  double gamma1 = 0.005;   // multiplicative load noise
  double gamma2 = 0.02;    // additive load noise (fraction of base)
  double sigma_u = 0.0015; // additive voltage measurement noise, pu
  std::uint64_t seed = 0;
};

struct Event {
  enum class Kind { fraud, invisibleUsage };
  std::string node;
  Kind kind = Kind::fraud;
  std::int64_t start = 0;
  std::int64_t end = 0;
  double magnitude = 0.0;  // fraction of node base load
};

inline std::string to_string(Event::Kind k) {
  return k == Event::Kind::fraud ? "fraud" : "invisibleUsage";
}

struct ScenarioConfig {
  std::string name;
  FeederTopology topology;
  std::vector<LoadPattern> tlp_library;   // declared routine patterns
  std::vector<LoadPattern> ulp_profiles;  // unregistered unit profiles
  Eigen::MatrixXd a_coef;                 // nodes x n_tlp (Table II a-part)
  Eigen::MatrixXd b_coef;                 // nodes x n_ulp (Table II b-part)
  Eigen::VectorXd base_load_mw;           // per load bus
  NoiseConfig noise;
  std::vector<Event> events;
  std::int64_t samples_per_day = 9600;

  std::int64_t samples_per_hour() const { return samples_per_day / 24; }
  Eigen::Index n_load_nodes() const { return base_load_mw.size(); }
};

inline void validate_config(const ScenarioConfig& cfg) {
  const Eigen::Index n = cfg.n_load_nodes();
  if (n != cfg.topology.n_nodes - 1)
    throw InputError("base_load_mw must list every load bus");
  if (cfg.a_coef.rows() != n ||
      cfg.a_coef.cols() != static_cast<Eigen::Index>(cfg.tlp_library.size()))
    throw InputError("coefficient/profile count mismatch for the TLP part");
  if (cfg.b_coef.rows() != n ||
      cfg.b_coef.cols() != static_cast<Eigen::Index>(cfg.ulp_profiles.size()))
    throw InputError("coefficient/profile count mismatch for the ULP part");
  for (Eigen::Index j = 0; j < n; ++j) {
    const double total = cfg.a_coef.row(j).sum() + cfg.b_coef.row(j).sum();
    if (total > 1.0 + 1e-9)
      throw InputError("coefficients for node " + std::to_string(j + 1) +
                       " sum to " + std::to_string(total) + " > 1");
  }
  for (const LoadPattern& p : cfg.tlp_library)
    if (static_cast<std::int64_t>(p.profile.size()) != cfg.samples_per_day)
      throw InputError("pattern '" + p.id + "' does not span one day");
  for (const LoadPattern& p : cfg.ulp_profiles)
    if (static_cast<std::int64_t>(p.profile.size()) != cfg.samples_per_day)
      throw InputError("pattern '" + p.id + "' does not span one day");
}

inline Eigen::Index node_row(const ScenarioConfig& cfg, const std::string& id) {
  for (Eigen::Index j = 0; j < cfg.n_load_nodes(); ++j)
    if ("n" + std::to_string(j + 1) == id) return j;
  throw InputError("unknown node id '" + id + "'");
}

inline void validate_events(const ScenarioConfig& cfg) {
  std::map<std::string, std::vector<std::pair<std::int64_t, std::int64_t>>> spans;
  for (const Event& e : cfg.events) {
    if (!(e.start < e.end) || e.start < 0 || e.end > cfg.samples_per_day)
      throw InputError("event on " + e.node + " has bad bounds [" +
                       std::to_string(e.start) + ", " + std::to_string(e.end) + ")");
    if (!(e.magnitude > 0.0))
      throw InputError("event on " + e.node + " needs a positive magnitude");
    node_row(cfg, e.node);
    for (auto [s0, s1] : spans[e.node])
      if (e.start < s1 && s0 < e.end)
        throw InputError("overlapping events on node " + e.node);
    spans[e.node].emplace_back(e.start, e.end);
  }
}

// True consumption per load bus: base * (sum_i a_i p_i + sum_k b_k u_k),
// then per-sample noise y*(1+gamma1*z1) + gamma2*z2. The rng stream draws
// the full multiplicative block first, then the additive block.
inline Eigen::MatrixXd synthesize_loads(const ScenarioConfig& cfg, Rng& rng) {
  validate_config(cfg);
  const Eigen::Index n = cfg.n_load_nodes();
  const Eigen::Index s = static_cast<Eigen::Index>(cfg.samples_per_day);
  Eigen::MatrixXd shape = Eigen::MatrixXd::Zero(n, s);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < cfg.tlp_library.size(); ++i) {
      const double a = cfg.a_coef(j, static_cast<Eigen::Index>(i));
      if (a == 0.0) continue;
      for (Eigen::Index t = 0; t < s; ++t)
        shape(j, t) += a * cfg.tlp_library[i].profile[static_cast<std::size_t>(t)];
    }
    for (std::size_t k = 0; k < cfg.ulp_profiles.size(); ++k) {
      const double b = cfg.b_coef(j, static_cast<Eigen::Index>(k));
      if (b == 0.0) continue;
      for (Eigen::Index t = 0; t < s; ++t)
        shape(j, t) += b * cfg.ulp_profiles[k].profile[static_cast<std::size_t>(t)];
    }
  }
  const Eigen::MatrixXd z1 = rng.normal_matrix(n, s);
  const Eigen::MatrixXd z2 = rng.normal_matrix(n, s);
  Eigen::MatrixXd noisy =
      shape.array() * (1.0 + cfg.noise.gamma1 * z1.array()) +
      cfg.noise.gamma2 * z2.array();
  return cfg.base_load_mw.asDiagonal() * noisy;
}

inline Eigen::MatrixXd synthesize_loads(const ScenarioConfig& cfg) {
  Rng rng(cfg.noise.seed);
  return synthesize_loads(cfg, rng);
}

struct Telemetry {
  RawSeriesSet p_measured;
  RawSeriesSet u_measured;
  Eigen::MatrixXd p_true;  // physical injections after invisible steps
  Eigen::MatrixXd u_true;  // noise-free voltages
};

inline std::vector<std::string> load_node_ids(const ScenarioConfig& cfg) {
  std::vector<std::string> ids;
  for (Eigen::Index j = 0; j < cfg.n_load_nodes(); ++j)
    ids.push_back("n" + std::to_string(j + 1));
  return ids;
}

// Apply events and measurement noise. Invisible-usage events add their step
// to the physical injections (so the power flow is re-run and U shifts);
// fraud events remove their step from the measured power only, after every
// noise draw, so a fraud-only run reproduces the no-event voltages exactly.
inline Telemetry apply_events(const ScenarioConfig& cfg,
                              const Eigen::MatrixXd& true_loads,
                              const Eigen::MatrixXd& voltages, Rng& rng) {
  validate_events(cfg);
  Telemetry out;
  out.p_true = true_loads;
  bool any_invisible = false;
  for (const Event& e : cfg.events) {
    if (e.kind != Event::Kind::invisibleUsage) continue;
    any_invisible = true;
    const Eigen::Index j = node_row(cfg, e.node);
    for (std::int64_t t = e.start; t < e.end; ++t)
      out.p_true(j, t) += e.magnitude * cfg.base_load_mw(j);
  }
  out.u_true = any_invisible ? power_flow(cfg.topology, out.p_true) : voltages;
  const Eigen::MatrixXd u_noise =
      rng.normal_matrix(out.u_true.rows(), out.u_true.cols());
  out.u_measured.values = out.u_true + cfg.noise.sigma_u * u_noise;
  out.p_measured.values = out.p_true;
  for (const Event& e : cfg.events) {
    if (e.kind != Event::Kind::fraud) continue;
    const Eigen::Index j = node_row(cfg, e.node);
    for (std::int64_t t = e.start; t < e.end; ++t)
      out.p_measured.values(j, t) -= e.magnitude * cfg.base_load_mw(j);
  }
  out.p_measured.node_ids = load_node_ids(cfg);
  out.p_measured.quantity = Quantity::activePower;
  out.u_measured.node_ids = out.p_measured.node_ids;
  out.u_measured.quantity = Quantity::voltageMagnitude;
  return out;
}

inline Telemetry apply_events(const ScenarioConfig& cfg,
                              const Eigen::MatrixXd& true_loads,
                              const Eigen::MatrixXd& voltages) {
  Rng rng(mix_seed(cfg.noise.seed, 1));
  return apply_events(cfg, true_loads, voltages, rng);
}

// Ground truth for scoring: every fraud event plus one invisible-usage
// interval per ON-stretch of each unregistered profile with b > 0.
struct ScenarioRun {
  Telemetry telemetry;
  std::vector<Event> truth;
  Eigen::MatrixXd coef_truth;  // nodes x (n_tlp + n_ulp)
};

inline ScenarioRun run_scenario(const ScenarioConfig& cfg) {
  validate_config(cfg);
  validate_events(cfg);
  Rng rng(cfg.noise.seed);
  const Eigen::MatrixXd p_true = synthesize_loads(cfg, rng);
  const Eigen::MatrixXd u_true = power_flow(cfg.topology, p_true);
  ScenarioRun run;
  run.telemetry = apply_events(cfg, p_true, u_true, rng);
  run.truth = cfg.events;
  for (Eigen::Index j = 0; j < cfg.n_load_nodes(); ++j) {
    for (std::size_t k = 0; k < cfg.ulp_profiles.size(); ++k) {
      const double b = cfg.b_coef(j, static_cast<Eigen::Index>(k));
      if (b <= 0.0) continue;
      const std::vector<double>& prof = cfg.ulp_profiles[k].profile;
      std::int64_t start = -1;
      for (std::size_t t = 0; t <= prof.size(); ++t) {
        const bool on = t < prof.size() && prof[t] > 0.0;
        if (on && start < 0) start = static_cast<std::int64_t>(t);
        if (!on && start >= 0) {
          Event e;
          e.node = "n" + std::to_string(j + 1);
          e.kind = Event::Kind::invisibleUsage;
          e.start = start;
          e.end = static_cast<std::int64_t>(t);
          e.magnitude = b;
          run.truth.push_back(e);
          start = -1;
        }
      }
    }
  }
  std::sort(run.truth.begin(), run.truth.end(),
            [](const Event& a, const Event& b) {
              return std::tie(a.node, a.start) < std::tie(b.node, b.start);
            });
  run.coef_truth.resize(cfg.n_load_nodes(),
                        cfg.a_coef.cols() + cfg.b_coef.cols());
  run.coef_truth << cfg.a_coef, cfg.b_coef;
  return run;
}

// ---------------------------------------------------------------------------
// Builtin scenarios.

inline constexpr std::uint64_t kDefaultSimpleSeed = 11;
inline constexpr std::uint64_t kDefaultComplexSeed = 21;

// Hourly percentage tables for the routine patterns and the unregistered
// profile (fractions of base load).
inline const std::array<std::array<double, 24>, 4>& hourly_tlp_tables() {
  static const std::array<std::array<double, 24>, 4> tables = {{
      {88, 87, 88, 100, 96, 100, 98, 97, 88, 82, 82, 95,
       94, 86, 86, 88, 85, 87, 88, 85, 84, 83, 86, 88},
      {20, 20, 20, 21, 20, 20, 20, 30, 40, 85, 85, 82,
       77, 80, 86, 86, 87, 35, 25, 25, 20, 20, 20, 15},
      {25, 23, 22, 22, 27, 31, 29, 28, 31, 37, 42, 42,
       35, 30, 33, 44, 50, 56, 85, 80, 70, 76, 43, 30},
      {100, 100, 100, 100, 100, 100, 0, 0, 0, 0, 0, 0,
       0, 0, 0, 0, 100, 100, 100, 100, 100, 100, 100, 100},
  }};
  return tables;
}

inline const std::array<double, 24>& hourly_ulp_table() {
  static const std::array<double, 24> u1 = {0, 100, 100, 100, 100, 0, 0, 0,
                                            0, 0,   0,   0,   0,   0, 100, 100,
                                            100, 100, 100, 100, 0, 0, 0, 0};
  return u1;
}

inline std::vector<LoadPattern> builtin_tlp_library(std::int64_t samples_per_hour) {
  std::vector<LoadPattern> lib;
  const auto& tables = hourly_tlp_tables();
  for (std::size_t i = 0; i < tables.size(); ++i) {
    std::vector<double> frac(tables[i].begin(), tables[i].end());
    for (double& v : frac) v /= 100.0;
    lib.push_back(pattern_from_hourly("p" + std::to_string(i + 1), frac,
                                      samples_per_hour));
  }
  return lib;
}

inline LoadPattern builtin_ulp_profile(std::int64_t samples_per_hour) {
  std::vector<double> frac(hourly_ulp_table().begin(), hourly_ulp_table().end());
  for (double& v : frac) v /= 100.0;
  return pattern_from_hourly("u1", frac, samples_per_hour,
                             LoadPattern::Kind::ulp);
}

// Mixing coefficients per node (a1..a4, b1).
inline const std::array<std::array<double, 5>, 33>& node_coefficients() {
  static const std::array<std::array<double, 5>, 33> coef = {{
      {.25, .25, .25, .25, 0}, {0, .7, .1, .2, 0},   {0, .1, .8, .1, 0},
      {.05, .75, .1, .1, 0},   {0, .1, .8, .1, 0},   {.1, .2, .5, .2, 0},
      {.8, .05, .1, .05, 0},   {.85, .05, 0, .1, 0}, {.1, .15, .6, .15, 0},
      {0, .15, .8, .05, 0},    {0, .2, .75, .05, 0}, {.05, .1, .75, .1, 0},
      {.05, .05, .85, .05, 0}, {.7, .05, .2, .05, 0},{0, .05, .9, .05, 0},
      {0, 0, .95, .05, 0},     {0, .1, .8, .1, 0},   {0, .7, .1, .2, 0},
      {0, .5, .1, .4, 0},      {0, .2, .2, .3, .3},  {0, .8, .1, .1, 0},
      {.1, .75, 0, .15, 0},    {.2, .6, 0, .2, 0},   {.85, 0, .05, .1, 0},
      {.75, .1, .1, .05, 0},   {.2, 0, .7, .1, 0},   {.1, 0, .75, .15, 0},
      {.25, .1, .6, .05, 0},   {.8, .05, .1, .05, 0},{.9, 0, .05, .05, 0},
      {.1, .1, .05, .25, .5},  {.9, 0, 0, .1, 0},    {.95, 0, 0, .05, 0},
  }};
  return coef;
}

inline Eigen::VectorXd builtin_base_loads_mw() {
  const std::vector<double>& kw = ieee33_loads_kw();
  Eigen::VectorXd base(static_cast<Eigen::Index>(kw.size()));
  for (std::size_t i = 0; i < kw.size(); ++i)
    base(static_cast<Eigen::Index>(i)) = kw[i] / 1000.0;
  return base;
}

// Constant loads, two fraud events of 0.005 MW on nodes 6 and 14 over
// 14:00-17:00.
inline ScenarioConfig builtin_simple_scenario(
    std::uint64_t seed = kDefaultSimpleSeed) {
  ScenarioConfig cfg;
  cfg.name = "simple";
  cfg.topology = ieee33_feeder();
  cfg.base_load_mw = builtin_base_loads_mw();
  const std::int64_t sph = cfg.samples_per_hour();
  LoadPattern flat;
  flat.id = "flat";
  flat.profile.assign(static_cast<std::size_t>(cfg.samples_per_day), 1.0);
  cfg.tlp_library = {flat};
  cfg.a_coef = Eigen::MatrixXd::Ones(cfg.base_load_mw.size(), 1);
  cfg.b_coef.resize(cfg.base_load_mw.size(), 0);
  cfg.noise.seed = seed;
  Event f6{"n6", Event::Kind::fraud, 14 * sph, 17 * sph,
           0.005 / cfg.base_load_mw(5)};
  Event f14{"n14", Event::Kind::fraud, 14 * sph, 17 * sph,
            0.005 / cfg.base_load_mw(13)};
  cfg.events = {f6, f14};
  return cfg;
}

// Table-driven mixture loads, one unregistered profile active on two daily
// stretches (nodes 20 and 31), three fraud events (nodes 6, 14, 27).
inline ScenarioConfig builtin_complex_scenario(
    std::uint64_t seed = kDefaultComplexSeed) {
  ScenarioConfig cfg;
  cfg.name = "complex";
  cfg.topology = ieee33_feeder();
  cfg.base_load_mw = builtin_base_loads_mw();
  const std::int64_t sph = cfg.samples_per_hour();
  cfg.tlp_library = builtin_tlp_library(sph);
  cfg.ulp_profiles = {builtin_ulp_profile(sph)};
  const auto& coef = node_coefficients();
  cfg.a_coef.resize(33, 4);
  cfg.b_coef.resize(33, 1);
  for (int j = 0; j < 33; ++j) {
    for (int i = 0; i < 4; ++i) cfg.a_coef(j, i) = coef[j][i];
    cfg.b_coef(j, 0) = coef[j][4];
  }
  cfg.noise.seed = seed;
  Event f6{"n6", Event::Kind::fraud, 20 * sph, 22 * sph, 0.07};
  Event f14{"n14", Event::Kind::fraud, 14 * sph, 17 * sph, 0.08};
  Event f27{"n27", Event::Kind::fraud, 18 * sph, 19 * sph, 0.12};
  cfg.events = {f6, f14, f27};
  return cfg;
}

struct BuiltinScenarios {
  ScenarioConfig simple;
  ScenarioConfig complex;
};

inline BuiltinScenarios builtin_scenarios() {
  return {builtin_simple_scenario(), builtin_complex_scenario()};
}

inline ScenarioConfig builtin_scenario_by_name(const std::string& name,
                                               std::uint64_t seed,
                                               bool seed_given) {
  if (name == "simple")
    return seed_given ? builtin_simple_scenario(seed) : builtin_simple_scenario();
  if (name == "complex")
    return seed_given ? builtin_complex_scenario(seed)
                      : builtin_complex_scenario();
  throw InputError("unknown builtin scenario '" + name + "'");
}

}  // namespace rmtgrid
