#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "rmtgrid/pipeline.hpp"
#include "rmtgrid/simulate.hpp"

using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
using namespace rmtgrid;

namespace {

const NodeAnalysis& node_by_id(const PipelineResult& res, const std::string& id) {
  for (const NodeAnalysis& na : res.nodes)
    if (na.node == id) return na;
  throw std::runtime_error("missing node " + id);
}

int test_jobs() { return 4; }

}  // namespace

TEST_CASE("ulp profile from event pairs keeps only additions", "[pipeline]") {
  const std::vector<EventPair> pairs = {
      {true, 400, 2000, 25.0},
      {false, 3000, 3500, 10.0},
      {true, 5600, 8000, 25.0},
  };
  const LoadPattern u = ulp_profile_from_pairs(pairs, 9600, "u_n20");
  CHECK(u.id == "u_n20");
  CHECK(u.kind == LoadPattern::Kind::ulp);
  CHECK(u.cps == std::vector<std::int64_t>{400, 2000, 5600, 8000});
  CHECK(u.profile[1000] == 1.0);
  CHECK(u.profile[3200] == 0.0);  // the reduction interval stays off
  CHECK(u.profile[7000] == 1.0);

  const LoadPattern none = ulp_profile_from_pairs({}, 9600, "u_none");
  CHECK(none.cps.empty());
}

TEST_CASE("estimation with a reconstructed step beats the plain fit", "[pipeline]") {
  const std::int64_t s = 9600;
  const std::vector<LoadPattern> tlps = builtin_tlp_library(400);
  const std::vector<LoadPattern> lib2 = {tlps[0], tlps[1]};

  LoadPattern u;
  u.profile.assign(static_cast<std::size_t>(s), 0.0);
  for (std::int64_t t = 400; t < 2000; ++t)
    u.profile[static_cast<std::size_t>(t)] = 1.0;

  RawSeriesSet p;
  p.node_ids = {"n1", "n2"};
  p.quantity = Quantity::activePower;
  p.values.resize(2, s);
  const Eigen::Vector2d base(2.0, 3.0);
  for (std::int64_t t = 0; t < s; ++t) {
    const double p1 = lib2[0].profile[static_cast<std::size_t>(t)];
    const double p2 = lib2[1].profile[static_cast<std::size_t>(t)];
    const double uv = u.profile[static_cast<std::size_t>(t)];
    p.values(0, t) = base(0) * (0.5 * p1 + 0.3 * p2);
    p.values(1, t) = base(1) * (0.4 * p1 + 0.2 * p2 + 0.3 * uv);
  }

  PipelineLibrary library{lib2, base};
  std::vector<NodeAnalysis> nodes(2);
  nodes[0].node = "n1";
  nodes[1].node = "n2";
  nodes[1].pairs = {{true, 400, 2000, 30.0}};

  const std::vector<NodeEstimate> est = run_estimation(p, library, nodes, true);
  REQUIRE(est.size() == 2);

  CHECK_FALSE(est[0].has_ulp);
  CHECK(est[0].with_ulp.values == est[0].without_ulp.values);
  CHECK(est[0].without_ulp.values(0) == Approx(0.5).margin(1e-9));
  CHECK(est[0].without_ulp.values(1) == Approx(0.3).margin(1e-9));

  REQUIRE(est[1].has_ulp);
  CHECK(est[1].with_ulp.values(0) == Approx(0.4).margin(1e-9));
  CHECK(est[1].with_ulp.values(1) == Approx(0.2).margin(1e-9));
  CHECK(est[1].with_ulp.value_of("u_n2") == Approx(0.3).margin(1e-9));
  CHECK(est[1].with_ulp.residual_norm < 1e-9);
  CHECK(est[1].without_ulp.residual_norm > 10.0 * est[1].with_ulp.residual_norm);

  // Estimation without the augmentation flag never attaches a profile.
  const std::vector<NodeEstimate> plain = run_estimation(p, library, nodes, false);
  CHECK_FALSE(plain[1].has_ulp);

  CHECK_THROWS_WITH(run_estimation(p, PipelineLibrary{{}, base}, nodes, true),
                    ContainsSubstring("empty pattern library"));
  CHECK_THROWS_WITH(
      run_estimation(p, PipelineLibrary{lib2, Eigen::VectorXd::Ones(1)}, nodes,
                     true),
      ContainsSubstring("base loads do not cover every node"));
}

TEST_CASE("worker count does not change pipeline output", "[pipeline]") {
  const ScenarioRun run = run_scenario(builtin_simple_scenario());
  RawSeriesSet p = run.telemetry.p_measured;
  RawSeriesSet u = run.telemetry.u_measured;
  p.values = p.values.leftCols(2400).eval();
  u.values = u.values.leftCols(2400).eval();

  PipelineOptions opt;
  opt.t = 100;
  opt.dt = 4;
  opt.seed = 3;
  opt.jobs = 1;
  const PipelineResult serial = run_detection_pipeline(p, u, std::nullopt, opt);
  opt.jobs = 8;
  const PipelineResult parallel = run_detection_pipeline(p, u, std::nullopt, opt);

  REQUIRE(serial.node_traces.size() == parallel.node_traces.size());
  for (std::size_t i = 0; i < serial.node_traces.size(); ++i)
    CHECK(serial.node_traces[i].tau == parallel.node_traces[i].tau);
  CHECK(serial.state_trace.tau == parallel.state_trace.tau);
  REQUIRE(serial.events.size() == parallel.events.size());
  for (std::size_t i = 0; i < serial.events.size(); ++i) {
    CHECK(serial.events[i].node == parallel.events[i].node);
    CHECK(serial.events[i].t_start == parallel.events[i].t_start);
  }
}

TEST_CASE("constant-load frauds are found and localized", "[pipeline]") {
  const ScenarioRun run = run_scenario(builtin_simple_scenario());

  PipelineOptions opt;
  opt.t = 100;
  opt.dt = 4;
  opt.jobs = test_jobs();
  const PipelineResult res = run_detection_pipeline(
      run.telemetry.p_measured, run.telemetry.u_measured, std::nullopt, opt);

  CHECK(res.state_in_band_fraction >= 0.95);

  // With dT = 4 the localization tolerance scales to 20 samples and the
  // spike spans to 100 +- 40.
  for (const std::string& id : {std::string("n6"), std::string("n14")}) {
    const NodeAnalysis& na = node_by_id(res, id);
    REQUIRE(na.cm_spikes.size() == 2);
    CHECK(std::llabs(na.cm_spikes[0].t_changepoint - 5600) <= 20);
    CHECK(std::llabs(na.cm_spikes[1].t_changepoint - 6800) <= 20);
    for (const Spike& s : na.cm_spikes)
      CHECK(std::llabs(s.span_samples - 100) <= 40);
  }
  for (const NodeAnalysis& na : res.nodes) {
    if (na.node == "n6" || na.node == "n14") continue;
    CHECK(na.cm_spikes.empty());
  }

  // Both frauds surface as reduction events over [5600, 6800).
  int fraud_events = 0;
  for (const PipelineEvent& e : res.events) {
    if (e.kind != EventKind::fraud) continue;
    ++fraud_events;
    CHECK((e.node == "n6" || e.node == "n14"));
    CHECK(std::llabs(e.t_start - 5600) <= 20);
    CHECK(std::llabs(e.t_end - 6800) <= 20);
  }
  CHECK(fraud_events == 2);
  CHECK(res.transitions.empty());
}

TEST_CASE("pattern mixtures with hidden units are fully attributed", "[pipeline]") {
  const ScenarioConfig cfg = builtin_complex_scenario();
  const ScenarioRun run = run_scenario(cfg);

  PipelineOptions opt;
  opt.t = 100;
  opt.dt = 4;
  opt.jobs = test_jobs();
  const PipelineLibrary library{cfg.tlp_library, cfg.base_load_mw};
  const PipelineResult res = run_detection_pipeline(
      run.telemetry.p_measured, run.telemetry.u_measured, library, opt);

  // The dominant-pattern switch on n32 at 03:00 is recognized as routine.
  bool n32_transition = false;
  for (const PipelineTransition& tr : res.transitions)
    if (tr.node == "n32" && tr.t == 1200 && tr.pattern_id == "p1")
      n32_transition = true;
  CHECK(n32_transition);

  auto has_event = [&](const std::string& node, EventKind kind,
                       std::int64_t t_start, std::int64_t t_end,
                       std::int64_t tol) {
    for (const PipelineEvent& e : res.events)
      if (e.node == node && e.kind == kind &&
          std::llabs(e.t_start - t_start) <= tol &&
          std::llabs(e.t_end - t_end) <= tol)
        return true;
    return false;
  };

  CHECK(has_event("n6", EventKind::fraud, 8000, 8800, 20));
  CHECK(has_event("n14", EventKind::fraud, 5600, 6800, 20));
  CHECK(has_event("n27", EventKind::fraud, 7200, 7600, 20));
  CHECK(has_event("n20", EventKind::invisible, 400, 2000, 20));
  CHECK(has_event("n20", EventKind::invisible, 5600, 8000, 20));
  CHECK(has_event("n31", EventKind::invisible, 400, 2000, 20));
  CHECK(has_event("n31", EventKind::invisible, 5600, 8000, 20));

  // No fraud is reported anywhere else.
  for (const PipelineEvent& e : res.events)
    if (e.kind == EventKind::fraud)
      CHECK((e.node == "n6" || e.node == "n14" || e.node == "n27"));

  // Estimation: the ULP augmentation pins down the mixing row of n20.
  const std::vector<NodeEstimate> est =
      run_estimation(run.telemetry.p_measured, library, res.nodes, true);
  const Eigen::Index j20 = 19;
  REQUIRE(est[static_cast<std::size_t>(j20)].has_ulp);
  const CoefficientVector& with20 = est[static_cast<std::size_t>(j20)].with_ulp;
  for (Eigen::Index k = 0; k < 5; ++k)
    CHECK(std::abs(with20.values(k) - run.coef_truth(j20, k)) <= 0.05);
  const CoefficientVector& wo20 = est[static_cast<std::size_t>(j20)].without_ulp;
  double err_with = 0.0, err_without = 0.0;
  for (Eigen::Index k = 0; k < 4; ++k) {
    err_with = std::max(err_with,
                        std::abs(with20.values(k) - run.coef_truth(j20, k)));
    err_without = std::max(err_without,
                           std::abs(wo20.values(k) - run.coef_truth(j20, k)));
  }
  CHECK(err_without >= 2.0 * err_with);
  CHECK(wo20.residual_norm > with20.residual_norm);
}
