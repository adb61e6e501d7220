#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "rmtgrid/concat.hpp"
#include "rmtgrid/errors.hpp"
#include "rmtgrid/ingest.hpp"
#include "rmtgrid/les.hpp"
#include "rmtgrid/patterns.hpp"
#include "rmtgrid/spectral.hpp"
#include "rmtgrid/stats.hpp"

namespace rmtgrid {

enum class Hypothesis { H0, H1 };

struct DetectionThreshold {
  double epsilon = 1.96;
};

inline void validate(const DetectionThreshold& th) {
  if (!(th.epsilon > 0.0)) throw InputError("epsilon must be positive");
}

// Two-sided z test on one window statistic: H1 iff |tau - mean| >= eps*sigma.
inline Hypothesis hypothesis_test(double tau, double mean_theory,
                                  double sigma_theory,
                                  const DetectionThreshold& th = {}) {
  validate(th);
  if (!(sigma_theory > 0.0)) throw InputError("sigma_theory must be positive");
  const double z = (tau - mean_theory) / sigma_theory;
  return std::abs(z) >= th.epsilon ? Hypothesis::H1 : Hypothesis::H0;
}

enum class TraceLabel { stateOnly, nodeConcat };

// Sliding-window statistic trace. times holds the END sample index of each
// window; mean/sigma are the per-window theoretical values for iid entries.
struct LesTrace {
  std::vector<std::int64_t> times;
  std::vector<double> tau;
  std::vector<double> mean_theory;
  std::vector<double> sigma_theory;
  TraceLabel label = TraceLabel::stateOnly;
  std::string node;  // set when label == nodeConcat
  std::int64_t window_t = 0;
  std::int64_t window_dt = 1;

  std::size_t size() const { return tau.size(); }

  // z against the theoretical moments
  std::vector<double> z_theory() const {
    std::vector<double> z(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i)
      z[i] = (tau[i] - mean_theory[i]) / sigma_theory[i];
    return z;
  }
};

struct TraceParams {
  std::int64_t t = 100;
  std::int64_t dt = 1;
  TestFunction phi = chebyshev_t2();
  std::uint64_t seed = 0;
};

// Trace of sum_i phi(lambda_i) over sliding windows of a (rows x samples)
// matrix, rows standardized per window. Theoretical mean is fixed by the
// aspect ratio; sigma uses the per-window kurtosis estimate.
inline LesTrace build_trace(const Eigen::MatrixXd& values,
                            const TraceParams& params,
                            TraceLabel label = TraceLabel::stateOnly,
                            const std::string& node = std::string()) {
  if (params.t < 1 || params.dt < 1)
    throw InputError("window length and step must be positive");
  LesTrace tr;
  tr.label = label;
  tr.node = node;
  tr.window_t = params.t;
  tr.window_dt = params.dt;
  const double c =
      static_cast<double>(values.rows()) / static_cast<double>(params.t);
  const double mean_th =
      les_mean(params.phi, c, static_cast<double>(values.rows()));
  StandardizeOptions opt;
  opt.seed = params.seed;
  const std::int64_t count = window_count(values.cols(), params.t, params.dt);
  tr.times.reserve(count);
  tr.tau.reserve(count);
  tr.mean_theory.reserve(count);
  tr.sigma_theory.reserve(count);
  for_each_window(values, params.t, params.dt, opt, [&](TimeSeriesWindow& w) {
    CovarianceSpectrum spec =
        covariance_spectrum(w.data, SpectrumConvention::overN);
    tr.times.push_back(w.start_index + params.t - 1);
    tr.tau.push_back(les_stat(spec, params.phi));
    tr.mean_theory.push_back(mean_th);
    const double k4 = kappa4_estimate(w.data);
    tr.sigma_theory.push_back(
        std::sqrt(std::max(les_variance(params.phi, c, k4), 0.0)));
  });
  return tr;
}

// Robust noise scale of a series from first differences:
// 1.4826 * MAD(diff) / sqrt(2).
inline double robust_noise_sigma(const Eigen::VectorXd& series) {
  if (series.size() < 3) throw InputError("series too short for a noise estimate");
  std::vector<double> d(static_cast<std::size_t>(series.size() - 1));
  for (Eigen::Index i = 0; i + 1 < series.size(); ++i)
    d[static_cast<std::size_t>(i)] = series(i + 1) - series(i);
  return kMadToSigma * mad(d) / std::sqrt(2.0);
}

inline constexpr double kDupNoiseMultiplier = 1.5;

// Concatenated trace for one node: the state matrix stacked over K noisy
// duplicates of the node's power series, noise at 1.5x the series' own
// robust noise scale unless the spec pins eta.
inline LesTrace build_concat_trace(const Eigen::MatrixXd& state,
                                   const Eigen::VectorXd& c_j,
                                   const ConcatSpec& spec,
                                   const TraceParams& params,
                                   const std::string& node) {
  ConcatSpec cs = spec;
  if (cs.k == 0) cs.k = default_dup_rows(static_cast<int>(state.rows()));
  if (cs.eta < 0.0) cs.eta = kDupNoiseMultiplier * robust_noise_sigma(c_j);
  ConcatMatrix cm = concatenate(state, build_factor_matrix(c_j, cs), node);
  return build_trace(cm.data, params, TraceLabel::nodeConcat, node);
}

// Median/MAD standardization of a trace; flat traces have no usable scale.
inline std::vector<double> robust_z(const std::vector<double>& tau) {
  if (tau.empty()) throw InputError("empty trace");
  std::vector<double> v = tau;
  const double med = median(v);
  const double scale = kMadToSigma * mad(v);
  if (!(scale > 0.0))
    throw NumericError("trace has zero robust spread; cannot form z-scores");
  std::vector<double> z(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) z[i] = (tau[i] - med) / scale;
  return z;
}

// Subtract the per-window median across traces, removing shifts that hit
// every node at once (weather-like common mode).
inline std::vector<std::vector<double>> remove_common_mode(
    const std::vector<std::vector<double>>& z) {
  if (z.empty()) throw InputError("no traces");
  const std::size_t len = z.front().size();
  for (const auto& row : z)
    if (row.size() != len) throw InputError("traces differ in length");
  std::vector<std::vector<double>> out = z;
  std::vector<double> col(z.size());
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t n = 0; n < z.size(); ++n) col[n] = z[n][i];
    const double m = median(col);
    for (std::size_t n = 0; n < z.size(); ++n) out[n][i] -= m;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spike extraction with hysteresis on the smoothed |z| trace.

struct Spike {
  std::int64_t t_changepoint = 0;  // t_extreme - T/2
  std::int64_t t_extreme = 0;      // center of the spike core plateau
  double z_peak = 0.0;
  std::int64_t span_samples = 0;   // times[last] - times[first] + dT
  std::int64_t first_index = 0;    // run bounds, trace indices
  std::int64_t last_index = 0;
};

struct SpikeOptions {
  double eps_detect = 4.5;
  double eps_extent = 1.3;
  int smooth_width = 3;
  double core_frac = 0.6;
  std::int64_t merge_gap = 25;  // samples between runs that still merge
  std::int64_t window_t = 100;
  std::int64_t window_dt = 1;
};

inline int default_smooth_width(std::int64_t dt) {
  return std::max<std::int64_t>(3, std::lround(9.0 / static_cast<double>(dt)));
}

// Runs of smoothed |z| >= eps_detect, extended both ways while >= eps_extent,
// nearby runs merged. The extreme is the midpoint of the core plateau
// (>= core_frac of the peak), and the change point sits T/2 before it.
inline std::vector<Spike> find_spikes(const std::vector<double>& z,
                                      const std::vector<std::int64_t>& times,
                                      const SpikeOptions& opt) {
  if (z.size() != times.size()) throw InputError("z and times differ in length");
  const std::size_t n = z.size();
  std::vector<double> az(n);
  for (std::size_t i = 0; i < n; ++i) az[i] = std::abs(z[i]);
  std::vector<double> zs = boxcar_same(az, opt.smooth_width);
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t i = 0;
  while (i < n) {
    if (zs[i] >= opt.eps_detect) {
      std::size_t a = i;
      while (a > 0 && zs[a - 1] >= opt.eps_extent) --a;
      std::size_t b = i;
      while (b + 1 < n && zs[b + 1] >= opt.eps_extent) ++b;
      runs.emplace_back(a, b);
      i = b + 1;
    } else {
      ++i;
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> merged;
  for (auto [a, b] : runs) {
    if (!merged.empty() &&
        times[a] - times[merged.back().second] < opt.merge_gap)
      merged.back().second = b;
    else
      merged.emplace_back(a, b);
  }
  std::vector<Spike> out;
  for (auto [a, b] : merged) {
    double pk = 0.0;
    for (std::size_t k = a; k <= b; ++k) pk = std::max(pk, zs[k]);
    const double gate = std::max(opt.eps_detect, opt.core_frac * pk);
    std::size_t c0 = a, c1 = a;
    bool found = false;
    for (std::size_t k = a; k <= b; ++k) {
      if (zs[k] >= gate) {
        if (!found) c0 = k;
        c1 = k;
        found = true;
      }
    }
    const std::size_t mid =
        a + static_cast<std::size_t>(
                std::llround((static_cast<double>(c0 - a) +
                              static_cast<double>(c1 - a)) / 2.0));
    Spike s;
    s.t_extreme = times[mid];
    s.t_changepoint = s.t_extreme - opt.window_t / 2;
    s.z_peak = pk;
    s.span_samples = times[b] - times[a] + opt.window_dt;
    s.first_index = static_cast<std::int64_t>(a);
    s.last_index = static_cast<std::int64_t>(b);
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Change-point localization on a theory-normalized trace.

enum class EventKind { fraud, invisible, tlpTransition, unclassified };

inline std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::fraud: return "fraud";
    case EventKind::invisible: return "invisible";
    case EventKind::tlpTransition: return "tlpTransition";
    default: return "unclassified";
  }
}

struct ChangePointEvent {
  std::string node;  // node id, or "systemwide" for the state trace
  std::int64_t t_cp = 0;
  std::int64_t t_extreme = 0;
  std::int64_t span_first = 0;  // first/last out-of-band window indices
  std::int64_t span_last = 0;
  double z_peak = 0.0;
  EventKind kind = EventKind::unclassified;
  std::string pattern_id;  // set for tlpTransition
};

// Maximal runs of H1 windows; per run, the extreme is the window with the
// largest |z| and the change point sits T/2 before it. Runs closer than T/4
// samples merge.
inline std::vector<ChangePointEvent> localize_changepoints(
    const LesTrace& trace, const DetectionThreshold& th,
    std::int64_t t_window) {
  validate(th);
  const std::vector<double> z = trace.z_theory();
  const std::size_t n = z.size();
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t i = 0;
  while (i < n) {
    if (std::abs(z[i]) >= th.epsilon) {
      std::size_t b = i;
      while (b + 1 < n && std::abs(z[b + 1]) >= th.epsilon) ++b;
      if (!runs.empty() &&
          trace.times[i] - trace.times[runs.back().second] < t_window / 4)
        runs.back().second = b;
      else
        runs.emplace_back(i, b);
      i = b + 1;
    } else {
      ++i;
    }
  }
  std::vector<ChangePointEvent> events;
  for (auto [a, b] : runs) {
    std::size_t arg = a;
    for (std::size_t k = a; k <= b; ++k)
      if (std::abs(z[k]) > std::abs(z[arg])) arg = k;
    ChangePointEvent e;
    e.node = trace.label == TraceLabel::stateOnly ? "systemwide" : trace.node;
    e.t_extreme = trace.times[arg];
    e.t_cp = e.t_extreme - t_window / 2;
    e.span_first = static_cast<std::int64_t>(a);
    e.span_last = static_cast<std::int64_t>(b);
    e.z_peak = std::abs(z[arg]);
    events.push_back(e);
  }
  return events;
}

// TLP matching tolerance in samples.
inline std::int64_t tol_match_samples(std::int64_t t_window, std::int64_t dt) {
  return 2 * dt * static_cast<std::int64_t>(
                      std::ceil(static_cast<double>(t_window) / 20.0));
}

struct DetectionReport {
  std::string scenario;
  std::int64_t n_nodes = 0;
  std::int64_t window_t = 0;
  std::int64_t window_dt = 1;
  double epsilon = 1.96;
  std::vector<ChangePointEvent> events;  // sorted by time
};

// Rule-based attribution of node-trace change points:
//  (a) a CP within tol_match of a library pattern CP is a routine transition;
//  (b) otherwise, a concurrent out-of-band state trace or a concurrent spike
//      on another node marks an invisible unit (grid-wide chain reaction);
//  (c) otherwise the deviation is confined to one measured series: fraud.
inline DetectionReport attribute_and_classify(
    const LesTrace& state_trace, const std::vector<LesTrace>& node_traces,
    const std::vector<LoadPattern>& tlp_library, const DetectionThreshold& th) {
  validate(th);
  for (const LesTrace& tr : node_traces)
    if (tr.window_t != state_trace.window_t ||
        tr.window_dt != state_trace.window_dt ||
        tr.times != state_trace.times)
      throw InputError("trace window parameters do not match the state trace");
  const std::int64_t t_window = state_trace.window_t;
  const std::int64_t tol = tol_match_samples(t_window, state_trace.window_dt);
  const std::vector<double> state_z = state_trace.z_theory();

  std::vector<std::vector<ChangePointEvent>> per_node;
  per_node.reserve(node_traces.size());
  for (const LesTrace& tr : node_traces)
    per_node.push_back(localize_changepoints(tr, th, t_window));

  auto state_concurrent = [&](const ChangePointEvent& e) {
    for (std::int64_t k = e.span_first; k <= e.span_last; ++k)
      if (std::abs(state_z[static_cast<std::size_t>(k)]) >= th.epsilon)
        return true;
    return false;
  };
  auto other_node_concurrent = [&](std::size_t self,
                                   const ChangePointEvent& e) {
    for (std::size_t j = 0; j < per_node.size(); ++j) {
      if (j == self) continue;
      for (const ChangePointEvent& o : per_node[j])
        if (o.span_first <= e.span_last && e.span_first <= o.span_last)
          return true;
    }
    return false;
  };

  DetectionReport report;
  report.n_nodes = static_cast<std::int64_t>(node_traces.size());
  report.window_t = t_window;
  report.window_dt = state_trace.window_dt;
  report.epsilon = th.epsilon;
  for (std::size_t j = 0; j < per_node.size(); ++j) {
    for (ChangePointEvent e : per_node[j]) {
      bool matched = false;
      for (const LoadPattern& p : tlp_library) {
        for (std::int64_t cp : p.cps) {
          if (std::llabs(e.t_cp - cp) <= tol) {
            e.kind = EventKind::tlpTransition;
            e.pattern_id = p.id;
            matched = true;
            break;
          }
        }
        if (matched) break;
      }
      if (!matched) {
        e.kind = (state_concurrent(e) || other_node_concurrent(j, e))
                     ? EventKind::invisible
                     : EventKind::fraud;
      }
      report.events.push_back(std::move(e));
    }
  }
  std::sort(report.events.begin(), report.events.end(),
            [](const ChangePointEvent& a, const ChangePointEvent& b) {
              return a.t_cp < b.t_cp;
            });
  return report;
}

// 0/1 daily profile from alternating rise/fall change points (one node).
// Rises open an interval, falls close it.
inline LoadPattern build_ulp_step(
    const std::vector<std::pair<std::int64_t, int>>& cps,
    std::int64_t samples_per_day, const std::string& id = "ulp") {
  if (samples_per_day < 1) throw InputError("samples_per_day must be positive");
  std::vector<std::pair<std::int64_t, int>> sorted = cps;
  std::sort(sorted.begin(), sorted.end());
  LoadPattern p;
  p.id = id;
  p.kind = LoadPattern::Kind::ulp;
  p.profile.assign(static_cast<std::size_t>(samples_per_day), 0.0);
  std::vector<std::int64_t> orphans;
  std::size_t i = 0;
  while (i < sorted.size()) {
    if (i + 1 < sorted.size() && sorted[i].second > 0 &&
        sorted[i + 1].second < 0) {
      const std::int64_t a = std::clamp<std::int64_t>(sorted[i].first, 0,
                                                      samples_per_day);
      const std::int64_t b = std::clamp<std::int64_t>(sorted[i + 1].first, 0,
                                                      samples_per_day);
      for (std::int64_t s = a; s < b; ++s)
        p.profile[static_cast<std::size_t>(s)] = 1.0;
      i += 2;
    } else {
      orphans.push_back(sorted[i].first);
      ++i;
    }
  }
  if (!orphans.empty()) {
    std::string msg = "unpaired change points at";
    for (std::int64_t t : orphans) msg += " " + std::to_string(t);
    throw InputError(msg);
  }
  p.cps = profile_changepoints(p.profile);
  return p;
}

}  // namespace rmtgrid
