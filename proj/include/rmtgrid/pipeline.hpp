#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "rmtgrid/concat.hpp"
#include "rmtgrid/detect.hpp"
#include "rmtgrid/errors.hpp"
#include "rmtgrid/estimate.hpp"
#include "rmtgrid/ingest.hpp"
#include "rmtgrid/patterns.hpp"

namespace rmtgrid {

// Declared utility knowledge: the routine pattern library and the registered
// base load per node. Detection degrades gracefully without it (no routine
// matching; base approximated by the per-node median level).
struct PipelineLibrary {
  std::vector<LoadPattern> tlps;
  Eigen::VectorXd base_mw;
};

struct PipelineOptions {
  std::int64_t t = 100;
  std::int64_t dt = 4;
  double epsilon = 1.96;     // theory-band width for the state trace
  double eps_detect = 4.5;   // robust-z spike threshold
  double eps_extent = 1.3;   // hysteresis extension threshold
  double floor_pct = 3.0;    // smallest level shift treated as real (percent)
  double rel_gate = 0.15;    // routine-residual gate, relative part
  int k_dup = 0;             // duplicate factor rows; 0 -> 0.3N default
  std::uint64_t seed = 0;
  int jobs = 1;
  TestFunction phi = chebyshev_t2();
};

struct TlpEvent {
  std::int64_t t = 0;
  int pattern_index = 0;  // 1-based index into the library
  double pred = 0.0;      // percent step predicted by the fitted mixture
  double step = 0.0;      // percent step measured on the series
};

struct EventPair {
  bool addition = false;  // rise->fall interval; false = reduction
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  double magnitude_pct = 0.0;
};

struct NodeAnalysis {
  std::string node;
  std::vector<Spike> cm_spikes;    // spikes of the common-mode-removed trace
  std::vector<Spike> raw_spikes;   // spikes of the node's own robust-z trace
  std::vector<Spike> candidates;   // clustered union used by the classifier
  Eigen::VectorXd ahat;            // routine coefficients from the step fit
  std::vector<TlpEvent> tlp_events;
  std::vector<EventPair> pairs;
  double base_mw = 0.0;
};

struct PipelineEvent {
  std::string node;
  EventKind kind = EventKind::unclassified;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  double magnitude_pct = 0.0;
};

struct PipelineTransition {
  std::string node;
  std::int64_t t = 0;
  std::string pattern_id;
};

struct PipelineResult {
  LesTrace state_trace;
  std::vector<LesTrace> node_traces;
  std::vector<NodeAnalysis> nodes;
  std::vector<PipelineEvent> events;
  std::vector<PipelineTransition> transitions;
  double state_in_band_fraction = 0.0;
  std::int64_t window_t = 0;
  std::int64_t window_dt = 1;
  double epsilon = 1.96;
};

namespace detail {

// Union of common-mode spikes and raw-trace spikes near hour boundaries,
// clustered so candidates within 200 samples keep the highest peak.
inline std::vector<Spike> detect_candidates(const std::vector<double>& z_raw,
                                            const std::vector<double>& z_cm,
                                            const std::vector<std::int64_t>& times,
                                            std::int64_t samples_per_hour,
                                            std::int64_t tol_match,
                                            const SpikeOptions& so) {
  std::vector<Spike> cand = find_spikes(z_cm, times, so);
  for (const Spike& s : find_spikes(z_raw, times, so)) {
    const std::int64_t h = std::llround(static_cast<double>(s.t_changepoint) /
                                        static_cast<double>(samples_per_hour));
    if (h >= 1 && h <= 23 &&
        std::llabs(s.t_changepoint - h * samples_per_hour) <= 2 * tol_match)
      cand.push_back(s);
  }
  std::sort(cand.begin(), cand.end(), [](const Spike& a, const Spike& b) {
    return std::tie(a.t_changepoint, a.z_peak) <
           std::tie(b.t_changepoint, b.z_peak);
  });
  std::vector<Spike> merged;
  for (const Spike& s : cand) {
    if (!merged.empty() &&
        s.t_changepoint - merged.back().t_changepoint <= 200) {
      if (s.z_peak > merged.back().z_peak) merged.back() = s;
    } else {
      merged.push_back(s);
    }
  }
  return merged;
}

struct UnmatchedCp {
  std::int64_t t = 0;
  int sign = 0;
  double resid = 0.0;
  double z_peak = 0.0;
};

struct ClassifyResult {
  std::vector<TlpEvent> tlp_events;
  std::vector<EventPair> pairs;
};

// Single-pass candidate classification:
//  * candidates near an hour boundary snap to it (a looser snap when the
//    library predicts a real step there) and are absorbed as routine
//    transitions when the measured step matches the fitted prediction;
//  * off-hour candidates with no measurable level shift are dropped;
//  * what remains pairs up by alternating step direction into intervals,
//    orphans co-opting the nearest change point as their other endpoint.
inline ClassifyResult classify_candidates(
    const std::vector<Spike>& cands, const std::vector<double>& y_pct,
    const Eigen::VectorXd& ahat, const std::vector<LoadPattern>& tlps,
    std::int64_t samples_per_hour, std::int64_t samples_per_day,
    std::int64_t tol_match, double floor_pct, double rel_gate) {
  ClassifyResult out;
  std::vector<UnmatchedCp> unmatched;
  for (const Spike& s : cands) {
    const std::int64_t t = s.t_changepoint;
    const std::int64_t h = std::llround(static_cast<double>(t) /
                                        static_cast<double>(samples_per_hour));
    bool snapped = false;
    double pred = 0.0;
    std::vector<double> contrib(tlps.size(), 0.0);
    if (h >= 1 && h <= 23) {
      for (std::size_t i = 0; i < tlps.size(); ++i) {
        const double d = 100.0 * pattern_hour_delta(tlps[i], static_cast<int>(h),
                                                    samples_per_hour);
        contrib[i] = ahat(static_cast<Eigen::Index>(i)) * d;
        pred += contrib[i];
      }
      const std::int64_t off = std::llabs(t - h * samples_per_hour);
      snapped = off <= tol_match ||
                (off <= 2 * tol_match && std::abs(pred) >= floor_pct);
    }
    const std::int64_t t_m = snapped ? h * samples_per_hour : t;
    const double step = measure_step(y_pct, t_m);
    double resid;
    if (snapped) {
      resid = step - pred;
      if (std::abs(resid) <= std::max(floor_pct, rel_gate * std::abs(pred))) {
        int best = 0;
        for (std::size_t i = 1; i < contrib.size(); ++i)
          if (std::abs(contrib[i]) > std::abs(contrib[static_cast<std::size_t>(best)]))
            best = static_cast<int>(i);
        out.tlp_events.push_back({t_m, best + 1, pred, step});
        continue;
      }
    } else {
      resid = step;
      if (std::abs(resid) < floor_pct) continue;
    }
    unmatched.push_back(
        {t_m, resid > 0.0 ? 1 : -1, std::abs(resid), s.z_peak});
  }

  // Consecutive same-direction change points collapse to the strongest one.
  std::vector<UnmatchedCp> rep;
  for (const UnmatchedCp& u : unmatched) {
    if (!rep.empty() && rep.back().sign == u.sign) {
      if (u.resid > rep.back().resid) rep.back() = u;
    } else {
      rep.push_back(u);
    }
  }
  std::vector<std::int64_t> all_cps;
  for (const TlpEvent& e : out.tlp_events) all_cps.push_back(e.t);
  for (const UnmatchedCp& u : rep) all_cps.push_back(u.t);
  std::sort(all_cps.begin(), all_cps.end());

  std::size_t i = 0;
  while (i < rep.size()) {
    if (i + 1 < rep.size() && rep[i].sign != rep[i + 1].sign) {
      EventPair p;
      p.addition = rep[i].sign > 0;
      p.t_start = rep[i].t;
      p.t_end = rep[i + 1].t;
      p.magnitude_pct = std::max(rep[i].resid, rep[i + 1].resid);
      out.pairs.push_back(p);
      i += 2;
    } else {
      const UnmatchedCp& u = rep[i];
      EventPair p;
      p.magnitude_pct = u.resid;
      if (u.sign < 0) {
        p.addition = false;
        p.t_start = u.t;
        p.t_end = samples_per_day;
        for (std::int64_t c : all_cps)
          if (c > u.t) {
            p.t_end = c;
            break;
          }
      } else {
        p.addition = true;
        p.t_start = 0;
        p.t_end = u.t;
        for (auto it = all_cps.rbegin(); it != all_cps.rend(); ++it)
          if (*it < u.t) {
            p.t_start = *it;
            break;
          }
      }
      out.pairs.push_back(p);
      ++i;
    }
  }
  return out;
}

template <typename Fn>
inline void parallel_for_nodes(int n, int jobs, Fn&& body) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::mutex mu;
  std::exception_ptr first_error;
  std::size_t next = 0;
  const int workers = std::min(jobs, n);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (first_error || next >= static_cast<std::size_t>(n)) return;
          i = next++;
        }
        try {
          body(static_cast<int>(i));
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// 0/1 daily profile covering every addition interval of one node's pairs.
inline LoadPattern ulp_profile_from_pairs(const std::vector<EventPair>& pairs,
                                          std::int64_t samples_per_day,
                                          const std::string& id) {
  LoadPattern p;
  p.id = id;
  p.kind = LoadPattern::Kind::ulp;
  p.profile.assign(static_cast<std::size_t>(samples_per_day), 0.0);
  for (const EventPair& pr : pairs) {
    if (!pr.addition) continue;
    const std::int64_t a = std::clamp<std::int64_t>(pr.t_start, 0, samples_per_day);
    const std::int64_t b = std::clamp<std::int64_t>(pr.t_end, 0, samples_per_day);
    for (std::int64_t s = a; s < b; ++s)
      p.profile[static_cast<std::size_t>(s)] = 1.0;
  }
  p.cps = profile_changepoints(p.profile);
  return p;
}

// Full detection pass: state trace, per-node concatenated traces, robust
// z-scores with common-mode removal, spike candidates, routine matching, and
// direction pairing into labeled events.
inline PipelineResult run_detection_pipeline(
    const RawSeriesSet& p_meas, const RawSeriesSet& u_meas,
    const std::optional<PipelineLibrary>& library, const PipelineOptions& opt) {
  if (p_meas.values.rows() != u_meas.values.rows() ||
      p_meas.values.cols() != u_meas.values.cols())
    throw InputError("power and voltage telemetry shapes do not match");
  const int n_nodes = static_cast<int>(p_meas.values.rows());
  const std::int64_t s_total = p_meas.values.cols();
  const std::int64_t sph = s_total / 24;
  if (!(opt.epsilon > 0.0)) throw InputError("epsilon must be positive");

  PipelineResult res;
  res.window_t = opt.t;
  res.window_dt = opt.dt;
  res.epsilon = opt.epsilon;

  TraceParams state_params{opt.t, opt.dt, opt.phi, mix_seed(opt.seed, 0x57)};
  res.state_trace = build_trace(u_meas.values, state_params);

  // Per-node concatenated traces, fanned out across the worker pool.
  res.node_traces.assign(static_cast<std::size_t>(n_nodes), LesTrace{});
  detail::parallel_for_nodes(n_nodes, opt.jobs, [&](int idx) {
    const int node = idx + 1;
    ConcatSpec cs;
    cs.k = opt.k_dup;
    cs.seed = 7000 + 131 * opt.seed + static_cast<std::uint64_t>(node);
    TraceParams params{opt.t, opt.dt, opt.phi, mix_seed(opt.seed, node)};
    const std::string id = idx < static_cast<int>(p_meas.node_ids.size())
                               ? p_meas.node_ids[static_cast<std::size_t>(idx)]
                               : "n" + std::to_string(node);
    res.node_traces[static_cast<std::size_t>(idx)] = build_concat_trace(
        u_meas.values, p_meas.values.row(idx).transpose(), cs, params, id);
  });

  const std::vector<std::int64_t>& times = res.state_trace.times;
  std::vector<std::vector<double>> z_raw(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < n_nodes; ++i)
    z_raw[static_cast<std::size_t>(i)] =
        robust_z(res.node_traces[static_cast<std::size_t>(i)].tau);
  const std::vector<std::vector<double>> z_cm = remove_common_mode(z_raw);
  const std::vector<double> state_z_robust = robust_z(res.state_trace.tau);
  const std::vector<double> state_z_theory = res.state_trace.z_theory();
  std::size_t in_band = 0;
  for (double z : state_z_theory)
    if (std::abs(z) < opt.epsilon) ++in_band;
  res.state_in_band_fraction =
      state_z_theory.empty()
          ? 0.0
          : static_cast<double>(in_band) / static_cast<double>(state_z_theory.size());

  SpikeOptions so;
  so.eps_detect = opt.eps_detect;
  so.eps_extent = opt.eps_extent;
  so.smooth_width = default_smooth_width(opt.dt);
  so.merge_gap = opt.t / 4;
  so.window_t = opt.t;
  so.window_dt = opt.dt;
  const std::int64_t tol = tol_match_samples(opt.t, opt.dt);
  const std::vector<LoadPattern> tlps =
      library ? library->tlps : std::vector<LoadPattern>{};

  res.nodes.assign(static_cast<std::size_t>(n_nodes), NodeAnalysis{});
  detail::parallel_for_nodes(n_nodes, opt.jobs, [&](int idx) {
    NodeAnalysis& na = res.nodes[static_cast<std::size_t>(idx)];
    na.node = res.node_traces[static_cast<std::size_t>(idx)].node;
    na.cm_spikes = find_spikes(z_cm[static_cast<std::size_t>(idx)], times, so);
    na.raw_spikes = find_spikes(z_raw[static_cast<std::size_t>(idx)], times, so);
    na.candidates = detail::detect_candidates(
        z_raw[static_cast<std::size_t>(idx)], z_cm[static_cast<std::size_t>(idx)],
        times, sph, tol, so);
    if (library && library->base_mw.size() > idx)
      na.base_mw = library->base_mw(idx);
    else {
      std::vector<double> row(p_meas.values.row(idx).begin(),
                              p_meas.values.row(idx).end());
      na.base_mw = median(row);
    }
    if (!(na.base_mw > 0.0))
      throw NumericError("node " + na.node + " has a non-positive base level");
    std::vector<double> y_pct(static_cast<std::size_t>(s_total));
    for (std::int64_t t = 0; t < s_total; ++t)
      y_pct[static_cast<std::size_t>(t)] =
          p_meas.values(idx, t) / na.base_mw * 100.0;
    na.ahat = tlps.empty()
                  ? Eigen::VectorXd::Zero(0).eval()
                  : robust_step_fit(y_pct, tlps, sph, opt.floor_pct);
    detail::ClassifyResult cr = detail::classify_candidates(
        na.candidates, y_pct, na.ahat, tlps, sph, s_total, tol, opt.floor_pct,
        opt.rel_gate);
    na.tlp_events = std::move(cr.tlp_events);
    na.pairs = std::move(cr.pairs);
  });

  // Interval endpoints shared across nodes mark a grid-wide unit; a state
  // trace excursion near an endpoint corroborates it too.
  auto concurrent_elsewhere = [&](int self, std::int64_t t) {
    for (int j = 0; j < n_nodes; ++j) {
      if (j == self) continue;
      for (const EventPair& pr : res.nodes[static_cast<std::size_t>(j)].pairs)
        if (std::llabs(pr.t_start - t) <= 100 || std::llabs(pr.t_end - t) <= 100)
          return true;
    }
    return false;
  };
  auto state_excursion_near = [&](std::int64_t t) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      const std::int64_t t_cp = times[i] - opt.t / 2;
      if (std::llabs(t_cp - t) <= 100 &&
          std::abs(state_z_robust[i]) >= opt.eps_detect)
        return true;
    }
    return false;
  };

  for (int idx = 0; idx < n_nodes; ++idx) {
    const NodeAnalysis& na = res.nodes[static_cast<std::size_t>(idx)];
    for (const EventPair& pr : na.pairs) {
      PipelineEvent e;
      e.node = na.node;
      e.t_start = pr.t_start;
      e.t_end = pr.t_end;
      e.magnitude_pct = pr.magnitude_pct;
      if (!pr.addition) {
        e.kind = EventKind::fraud;
      } else {
        const bool shared = concurrent_elsewhere(idx, pr.t_start) ||
                            concurrent_elsewhere(idx, pr.t_end) ||
                            state_excursion_near(pr.t_start) ||
                            state_excursion_near(pr.t_end);
        e.kind = shared ? EventKind::invisible : EventKind::fraud;
      }
      res.events.push_back(e);
    }
    for (const TlpEvent& te : na.tlp_events) {
      // Report only transitions with a real predicted or measured step; the
      // rest are anchor points for pairing, not events worth surfacing.
      if (std::abs(te.pred) < opt.floor_pct && std::abs(te.step) < opt.floor_pct)
        continue;
      PipelineTransition tr;
      tr.node = na.node;
      tr.t = te.t;
      tr.pattern_id = te.pattern_index <= static_cast<int>(tlps.size())
                          ? tlps[static_cast<std::size_t>(te.pattern_index - 1)].id
                          : "p" + std::to_string(te.pattern_index);
      res.transitions.push_back(tr);
    }
  }
  std::sort(res.events.begin(), res.events.end(),
            [](const PipelineEvent& a, const PipelineEvent& b) {
              return std::tie(a.t_start, a.node) < std::tie(b.t_start, b.node);
            });
  std::sort(res.transitions.begin(), res.transitions.end(),
            [](const PipelineTransition& a, const PipelineTransition& b) {
              return std::tie(a.t, a.node) < std::tie(b.t, b.node);
            });
  return res;
}

// Per-node coefficient estimates over the routine library, with and without
// the reconstructed step profile of that node's addition intervals.
struct NodeEstimate {
  std::string node;
  CoefficientVector with_ulp;
  CoefficientVector without_ulp;
  bool has_ulp = false;
};

inline std::vector<NodeEstimate> run_estimation(
    const RawSeriesSet& p_meas, const PipelineLibrary& library,
    const std::vector<NodeAnalysis>& nodes, bool use_ulp) {
  if (library.tlps.empty()) throw InputError("empty pattern library");
  if (library.base_mw.size() != p_meas.values.rows())
    throw InputError("library base loads do not cover every node");
  const std::int64_t s_total = p_meas.values.cols();
  std::vector<NodeEstimate> out;
  for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
    const NodeAnalysis& na = nodes[idx];
    std::vector<double> y(static_cast<std::size_t>(s_total));
    for (std::int64_t t = 0; t < s_total; ++t)
      y[static_cast<std::size_t>(t)] =
          p_meas.values(static_cast<Eigen::Index>(idx), t) /
          library.base_mw(static_cast<Eigen::Index>(idx));
    NodeEstimate est;
    est.node = na.node;
    est.without_ulp = solve_ls(library.tlps, y);
    LoadPattern ulp =
        ulp_profile_from_pairs(na.pairs, s_total, "u_" + na.node);
    est.has_ulp = use_ulp && !ulp.cps.empty();
    est.with_ulp = est.has_ulp
                       ? augment_and_estimate(library.tlps, {ulp}, y)
                       : est.without_ulp;
    out.push_back(std::move(est));
  }
  return out;
}

}  // namespace rmtgrid
