#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmtgrid/errors.hpp"

namespace rmtgrid {

// A daily load profile sampled at the series rate. TLPs are the known routine
// patterns; ULPs are reconstructed 0/1 step profiles for unregistered units.
struct LoadPattern {
  enum class Kind { tlp, ulp };

  std::string id;
  std::vector<double> profile;       // length S (samples per day)
  std::vector<std::int64_t> cps;     // sample indices where the value changes
  Kind kind = Kind::tlp;
};

inline std::string to_string(LoadPattern::Kind k) {
  return k == LoadPattern::Kind::tlp ? "tlp" : "ulp";
}

// Indices i >= 1 with profile[i] != profile[i-1].
inline std::vector<std::int64_t> profile_changepoints(
    const std::vector<double>& profile) {
  std::vector<std::int64_t> cps;
  for (std::size_t i = 1; i < profile.size(); ++i)
    if (profile[i] != profile[i - 1]) cps.push_back(static_cast<std::int64_t>(i));
  return cps;
}

inline void validate_pattern(const LoadPattern& p) {
  if (p.profile.empty()) throw InputError("pattern '" + p.id + "' is empty");
  if (p.cps != profile_changepoints(p.profile))
    throw InputError("pattern '" + p.id +
                     "' lists change points that do not match its profile");
}

// Expand an hourly table (fractions of base load, e.g. 0.88 for 88%) to the
// sample rate by zero-order hold.
inline LoadPattern pattern_from_hourly(const std::string& id,
                                       const std::vector<double>& hourly,
                                       std::int64_t samples_per_hour,
                                       LoadPattern::Kind kind = LoadPattern::Kind::tlp) {
  if (hourly.size() != 24)
    throw InputError("hourly table for '" + id + "' must have 24 entries, got " +
                     std::to_string(hourly.size()));
  if (samples_per_hour < 1) throw InputError("samples_per_hour must be positive");
  LoadPattern p;
  p.id = id;
  p.kind = kind;
  p.profile.reserve(static_cast<std::size_t>(24 * samples_per_hour));
  for (double v : hourly)
    p.profile.insert(p.profile.end(), static_cast<std::size_t>(samples_per_hour), v);
  p.cps = profile_changepoints(p.profile);
  return p;
}

// Fraction-of-base step between adjacent hours; zero outside 1..23.
inline double pattern_hour_delta(const LoadPattern& p, int hour,
                                 std::int64_t samples_per_hour) {
  if (hour < 1 || hour > 23) return 0.0;
  const std::int64_t s = hour * samples_per_hour;
  if (s >= static_cast<std::int64_t>(p.profile.size()))
    throw InputError("pattern '" + p.id + "' is shorter than a day");
  return p.profile[static_cast<std::size_t>(s)] -
         p.profile[static_cast<std::size_t>(s - 1)];
}

}  // namespace rmtgrid
