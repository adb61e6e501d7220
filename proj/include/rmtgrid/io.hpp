#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmtgrid/detect.hpp"
#include "rmtgrid/errors.hpp"
#include "rmtgrid/ingest.hpp"
#include "rmtgrid/pipeline.hpp"
#include "rmtgrid/simulate.hpp"
#include "rmtgrid/stats.hpp"
#include "rmtgrid/version.hpp"

namespace rmtgrid {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV

// Long format: header "time,<id>,<id>,..."; one row per sample.
inline void save_series_csv(const std::string& path, const RawSeriesSet& set) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path);
  out << "time";
  for (const std::string& id : set.node_ids) out << "," << id;
  out << "\n";
  for (Eigen::Index t = 0; t < set.values.cols(); ++t) {
    out << detail::format_double(static_cast<double>(t) * set.sample_period);
    for (Eigen::Index j = 0; j < set.values.rows(); ++j)
      out << "," << detail::format_double(set.values(j, t));
    out << "\n";
  }
  if (!out) throw InputError("failed writing " + path);
}

inline void save_trace_csv(const std::string& path, const LesTrace& trace) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path);
  out << "time,tau,mean_theory,sigma_theory,z\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double z =
        (trace.tau[i] - trace.mean_theory[i]) / trace.sigma_theory[i];
    out << trace.times[i] << "," << detail::format_double(trace.tau[i]) << ","
        << detail::format_double(trace.mean_theory[i]) << ","
        << detail::format_double(trace.sigma_theory[i]) << ","
        << detail::format_double(z) << "\n";
  }
  if (!out) throw InputError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Scenario config JSON

inline json scenario_to_json(const ScenarioConfig& cfg) {
  json branches = json::array();
  for (const Branch& b : cfg.topology.branches)
    branches.push_back({{"from", b.from},
                        {"to", b.to},
                        {"r_pu", b.r_pu},
                        {"x_pu", b.x_pu}});
  auto pattern_json = [](const LoadPattern& p) {
    json jp{{"id", p.id}, {"kind", to_string(p.kind)}};
    jp["profile"] = p.profile;
    return jp;
  };
  json tlps = json::array();
  for (const LoadPattern& p : cfg.tlp_library) tlps.push_back(pattern_json(p));
  json ulps = json::array();
  for (const LoadPattern& p : cfg.ulp_profiles) ulps.push_back(pattern_json(p));
  json a = json::array(), b = json::array();
  for (Eigen::Index j = 0; j < cfg.a_coef.rows(); ++j) {
    json row = json::array();
    for (Eigen::Index i = 0; i < cfg.a_coef.cols(); ++i)
      row.push_back(cfg.a_coef(j, i));
    a.push_back(row);
  }
  for (Eigen::Index j = 0; j < cfg.b_coef.rows(); ++j) {
    json row = json::array();
    for (Eigen::Index i = 0; i < cfg.b_coef.cols(); ++i)
      row.push_back(cfg.b_coef(j, i));
    b.push_back(row);
  }
  json events = json::array();
  for (const Event& e : cfg.events)
    events.push_back({{"node", e.node},
                      {"kind", to_string(e.kind)},
                      {"start", e.start},
                      {"end", e.end},
                      {"magnitude", e.magnitude}});
  std::vector<double> base(cfg.base_load_mw.data(),
                           cfg.base_load_mw.data() + cfg.base_load_mw.size());
  return json{{"schema", kSchemaVersion},
              {"name", cfg.name},
              {"topology",
               {{"n_nodes", cfg.topology.n_nodes},
                {"v0", cfg.topology.v0},
                {"branches", branches}}},
              {"tlp_library", tlps},
              {"ulp_profiles", ulps},
              {"a_coef", a},
              {"b_coef", b},
              {"base_load_mw", base},
              {"noise",
               {{"gamma1", cfg.noise.gamma1},
                {"gamma2", cfg.noise.gamma2},
                {"sigma_u", cfg.noise.sigma_u},
                {"seed", cfg.noise.seed}}},
              {"events", events},
              {"samples_per_day", cfg.samples_per_day}};
}

inline ScenarioConfig scenario_from_json(const json& j) {
  try {
    ScenarioConfig cfg;
    cfg.name = j.value("name", "custom");
    cfg.samples_per_day = j.value("samples_per_day", std::int64_t{9600});
    const json& topo = j.at("topology");
    cfg.topology.n_nodes = topo.at("n_nodes").get<int>();
    cfg.topology.v0 = topo.value("v0", 1.0);
    for (const json& jb : topo.at("branches"))
      cfg.topology.branches.push_back({jb.at("from").get<int>(),
                                       jb.at("to").get<int>(),
                                       jb.at("r_pu").get<double>(),
                                       jb.at("x_pu").get<double>()});
    auto read_pattern = [&](const json& jp, LoadPattern::Kind kind) {
      LoadPattern p;
      p.id = jp.at("id").get<std::string>();
      p.kind = jp.value("kind", std::string()) == "ulp"
                   ? LoadPattern::Kind::ulp
                   : kind;
      if (jp.contains("hourly")) {
        std::vector<double> hourly = jp.at("hourly").get<std::vector<double>>();
        p = pattern_from_hourly(p.id, hourly, cfg.samples_per_day / 24, p.kind);
      } else {
        p.profile = jp.at("profile").get<std::vector<double>>();
        p.cps = profile_changepoints(p.profile);
      }
      return p;
    };
    for (const json& jp : j.value("tlp_library", json::array()))
      cfg.tlp_library.push_back(read_pattern(jp, LoadPattern::Kind::tlp));
    for (const json& jp : j.value("ulp_profiles", json::array()))
      cfg.ulp_profiles.push_back(read_pattern(jp, LoadPattern::Kind::ulp));
    const std::vector<double> base =
        j.at("base_load_mw").get<std::vector<double>>();
    cfg.base_load_mw.resize(static_cast<Eigen::Index>(base.size()));
    for (std::size_t i = 0; i < base.size(); ++i)
      cfg.base_load_mw(static_cast<Eigen::Index>(i)) = base[i];
    auto read_matrix = [&](const char* key, std::size_t cols) {
      const json rows = j.value(key, json::array());
      Eigen::MatrixXd m(static_cast<Eigen::Index>(base.size()),
                        static_cast<Eigen::Index>(cols));
      m.setZero();
      if (rows.size() != base.size() && !rows.empty())
        throw InputError(std::string(key) + " must have one row per node");
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::vector<double> row = rows[r].get<std::vector<double>>();
        if (row.size() != cols)
          throw InputError(std::string(key) + " row " + std::to_string(r) +
                           " has the wrong width");
        for (std::size_t c = 0; c < cols; ++c)
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
      }
      return m;
    };
    cfg.a_coef = read_matrix("a_coef", cfg.tlp_library.size());
    cfg.b_coef = read_matrix("b_coef", cfg.ulp_profiles.size());
    if (j.contains("noise")) {
      const json& n = j.at("noise");
      cfg.noise.gamma1 = n.value("gamma1", 0.005);
      cfg.noise.gamma2 = n.value("gamma2", 0.02);
      cfg.noise.sigma_u = n.value("sigma_u", 0.0015);
      cfg.noise.seed = n.value("seed", std::uint64_t{0});
    }
    for (const json& je : j.value("events", json::array())) {
      Event e;
      e.node = je.at("node").get<std::string>();
      e.kind = je.at("kind").get<std::string>() == "fraud"
                   ? Event::Kind::fraud
                   : Event::Kind::invisibleUsage;
      e.start = je.at("start").get<std::int64_t>();
      e.end = je.at("end").get<std::int64_t>();
      e.magnitude = je.at("magnitude").get<double>();
      cfg.events.push_back(e);
    }
    return cfg;
  } catch (const json::exception& ex) {
    throw InputError(std::string("bad scenario JSON: ") + ex.what());
  }
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw InputError("cannot parse " + path + ": " + ex.what());
  }
}

inline void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw InputError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Pattern library JSON (the declared utility knowledge)

inline std::optional<std::vector<double>> hourly_of(const LoadPattern& p) {
  if (p.profile.size() % 24 != 0) return std::nullopt;
  const std::size_t sph = p.profile.size() / 24;
  std::vector<double> hourly(24);
  for (std::size_t h = 0; h < 24; ++h) {
    const double v = p.profile[h * sph];
    for (std::size_t s = 0; s < sph; ++s)
      if (p.profile[h * sph + s] != v) return std::nullopt;
    hourly[h] = v;
  }
  return hourly;
}

inline json library_to_json(const ScenarioConfig& cfg) {
  json tlps = json::array();
  for (const LoadPattern& p : cfg.tlp_library) {
    json jp{{"id", p.id}};
    if (auto hourly = hourly_of(p))
      jp["hourly"] = *hourly;
    else
      jp["profile"] = p.profile;
    tlps.push_back(jp);
  }
  std::vector<double> base(cfg.base_load_mw.data(),
                           cfg.base_load_mw.data() + cfg.base_load_mw.size());
  return json{{"schema", kSchemaVersion},
              {"samples_per_day", cfg.samples_per_day},
              {"base_load_mw", base},
              {"tlps", tlps}};
}

inline PipelineLibrary library_from_json(const json& j) {
  try {
    PipelineLibrary lib;
    const std::int64_t s_day = j.value("samples_per_day", std::int64_t{9600});
    for (const json& jp : j.value("tlps", json::array())) {
      LoadPattern p;
      p.id = jp.at("id").get<std::string>();
      if (jp.contains("hourly")) {
        p = pattern_from_hourly(p.id, jp.at("hourly").get<std::vector<double>>(),
                                s_day / 24);
      } else {
        p.profile = jp.at("profile").get<std::vector<double>>();
        p.cps = profile_changepoints(p.profile);
      }
      lib.tlps.push_back(std::move(p));
    }
    const std::vector<double> base =
        j.value("base_load_mw", std::vector<double>{});
    lib.base_mw.resize(static_cast<Eigen::Index>(base.size()));
    for (std::size_t i = 0; i < base.size(); ++i)
      lib.base_mw(static_cast<Eigen::Index>(i)) = base[i];
    return lib;
  } catch (const json::exception& ex) {
    throw InputError(std::string("bad library JSON: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------
// Reports

inline json truth_to_json(const ScenarioConfig& cfg, const ScenarioRun& run) {
  json events = json::array();
  for (const Event& e : run.truth)
    events.push_back({{"node", e.node},
                      {"kind", to_string(e.kind)},
                      {"start", e.start},
                      {"end", e.end},
                      {"magnitude", e.magnitude}});
  json coef = json::array();
  for (Eigen::Index jn = 0; jn < run.coef_truth.rows(); ++jn) {
    json row = json::array();
    for (Eigen::Index i = 0; i < run.coef_truth.cols(); ++i)
      row.push_back(run.coef_truth(jn, i));
    coef.push_back(row);
  }
  return json{{"schema", kSchemaVersion},
              {"scenario", cfg.name},
              {"seed", cfg.noise.seed},
              {"samples_per_day", cfg.samples_per_day},
              {"events", events},
              {"coefficients", coef}};
}

inline json report_to_json(const PipelineResult& res,
                           const std::string& scenario) {
  json events = json::array();
  for (const PipelineEvent& e : res.events)
    events.push_back({{"node", e.node},
                      {"kind", to_string(e.kind)},
                      {"t_start", e.t_start},
                      {"t_end", e.t_end},
                      {"magnitude_pct", e.magnitude_pct}});
  json transitions = json::array();
  for (const PipelineTransition& t : res.transitions)
    transitions.push_back(
        {{"node", t.node}, {"t", t.t}, {"pattern", t.pattern_id}});
  json spikes = json::array();
  for (const NodeAnalysis& na : res.nodes) {
    json list = json::array();
    for (const Spike& s : na.cm_spikes)
      list.push_back({{"t_cp", s.t_changepoint},
                      {"t_extreme", s.t_extreme},
                      {"z_peak", s.z_peak},
                      {"span", s.span_samples}});
    spikes.push_back({{"node", na.node}, {"cm_spikes", list}});
  }
  return json{{"schema", kSchemaVersion},
              {"scenario", scenario},
              {"window", {{"T", res.window_t}, {"dT", res.window_dt}}},
              {"epsilon", res.epsilon},
              {"state_in_band_fraction", res.state_in_band_fraction},
              {"events", events},
              {"transitions", transitions},
              {"node_spikes", spikes}};
}

inline json estimates_to_json(const std::vector<NodeEstimate>& ests) {
  auto coef_json = [](const CoefficientVector& c) {
    json values = json::object();
    for (std::size_t i = 0; i < c.ids.size(); ++i)
      values[c.ids[i]] = c.values(static_cast<Eigen::Index>(i));
    return json{{"coefficients", values}, {"residual_norm", c.residual_norm}};
  };
  json nodes = json::array();
  for (const NodeEstimate& e : ests)
    nodes.push_back({{"node", e.node},
                     {"has_ulp", e.has_ulp},
                     {"with_ulp", coef_json(e.with_ulp)},
                     {"without_ulp", coef_json(e.without_ulp)}});
  return json{{"schema", kSchemaVersion}, {"nodes", nodes}};
}

// ---------------------------------------------------------------------------
// Run manifest

inline std::string file_digest_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::uint64_t h = kFnvOffset;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  return to_hex64(h);
}

// Every command records what it read, what it wrote, and the digests of both.
inline json make_manifest(const std::string& command, const json& inputs,
                          std::uint64_t seed,
                          const std::vector<std::string>& output_paths) {
  const std::string canon = inputs.dump();
  json outputs = json::array();
  for (const std::string& p : output_paths)
    outputs.push_back({{"path", p}, {"digest", file_digest_hex(p)}});
  return json{{"schema", kSchemaVersion},
              {"command", command},
              {"config_hash", to_hex64(fnv1a64(canon.data(), canon.size()))},
              {"seed", seed},
              {"version", kVersion},
              {"outputs", outputs}};
}

}  // namespace rmtgrid
