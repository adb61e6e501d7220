#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmtgrid/errors.hpp"
#include "rmtgrid/rng.hpp"
#include "rmtgrid/stats.hpp"

namespace rmtgrid {

enum class Quantity { activePower, voltageMagnitude, current };

inline std::string to_string(Quantity q) {
  switch (q) {
    case Quantity::activePower: return "activePower";
    case Quantity::voltageMagnitude: return "voltageMagnitude";
    case Quantity::current: return "current";
  }
  return "?";
}

// A set of per-node time series sharing one sampling grid. Rows are nodes.
struct RawSeriesSet {
  std::vector<std::string> node_ids;
  double sample_period = 1.0;  // seconds per sample
  Eigen::MatrixXd values;      // N x T_total
  Quantity quantity = Quantity::activePower;
};

// One standardized analysis window. Rows are mean 0, population variance 1.
struct TimeSeriesWindow {
  Eigen::MatrixXd data;
  std::int64_t start_index = 0;

  Eigen::Index n() const { return data.rows(); }
  Eigen::Index t() const { return data.cols(); }
  double c() const { return static_cast<double>(n()) / static_cast<double>(t()); }
};

enum class ZeroVariancePolicy { jitter, reject };

struct StandardizeOptions {
  ZeroVariancePolicy policy = ZeroVariancePolicy::jitter;
  std::uint64_t seed = 0;
  const std::vector<std::string>* node_ids = nullptr;  // for error messages
};

namespace detail {

inline std::string row_name(const StandardizeOptions& opt, Eigen::Index i) {
  if (opt.node_ids && i < static_cast<Eigen::Index>(opt.node_ids->size()))
    return (*opt.node_ids)[static_cast<std::size_t>(i)];
  return "row " + std::to_string(i);
}

template <typename RowXpr>
void standardize_row_inplace(RowXpr row) {
  const double m = row.mean();
  row.array() -= m;
  const double var = row.squaredNorm() / static_cast<double>(row.cols());
  row /= std::sqrt(var);
}

}  // namespace detail

// Subtract the row mean and divide by the population standard deviation.
// Constant rows either get a small seeded jitter (scaled by the row mean
// magnitude) before standardization, or raise naming the node.
inline Eigen::MatrixXd standardize_rows(const Eigen::MatrixXd& raw,
                                        const StandardizeOptions& opt = {}) {
  Eigen::MatrixXd out = raw;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    const double m = row.mean();
    const double var = (row.array() - m).matrix().squaredNorm() /
                       static_cast<double>(out.cols());
    if (var <= 0.0) {
      if (opt.policy == ZeroVariancePolicy::reject)
        throw InputError("zero-variance row for node " +
                         detail::row_name(opt, i));
      const double scale = 1e-6 * std::max(std::abs(m), 1.0);
      Rng rng(mix_seed(opt.seed, static_cast<std::uint64_t>(i)));
      for (Eigen::Index j = 0; j < out.cols(); ++j)
        out(i, j) += scale * rng.normal();
    }
    detail::standardize_row_inplace(out.row(i));
  }
  if (!out.allFinite()) throw NumericError("standardization produced non-finite values");
  return out;
}

// Check the standardized-row invariant (mean 0, population variance 1).
inline bool is_standardized(const Eigen::MatrixXd& m, double tol = 1e-9) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mu = m.row(i).mean();
    if (std::abs(mu) > tol) return false;
    const double var =
        (m.row(i).array() - mu).matrix().squaredNorm() / static_cast<double>(m.cols());
    if (std::abs(var - 1.0) > tol) return false;
  }
  return true;
}

// Number of sliding windows of length t with the given step.
inline std::int64_t window_count(std::int64_t t_total, std::int64_t t,
                                 std::int64_t step) {
  if (step < 1) throw InputError("window step must be >= 1");
  if (t > t_total)
    throw InputError("insufficient data: window length " + std::to_string(t) +
                     " exceeds series length " + std::to_string(t_total));
  return (t_total - t) / step + 1;
}

// Visit each window without materializing the whole sequence. The callback
// receives the standardized window.
template <typename Fn>
void for_each_window(const Eigen::MatrixXd& values, std::int64_t t,
                     std::int64_t step, const StandardizeOptions& opt, Fn&& fn) {
  if (values.rows() > t)
    throw InputError("window with N=" + std::to_string(values.rows()) +
                     " rows and T=" + std::to_string(t) +
                     " columns has c > 1; windows are never transposed");
  const std::int64_t count = window_count(values.cols(), t, step);
  for (std::int64_t w = 0; w < count; ++w) {
    const std::int64_t s = w * step;
    StandardizeOptions wopt = opt;
    wopt.seed = mix_seed(opt.seed, static_cast<std::uint64_t>(s));
    TimeSeriesWindow win{standardize_rows(values.middleCols(s, t), wopt), s};
    fn(win);
  }
}

// Materialized window sequence, start indices 0, step, 2*step, ...
inline std::vector<TimeSeriesWindow> sliding_windows(
    const RawSeriesSet& set, std::int64_t t, std::int64_t step,
    StandardizeOptions opt = {}) {
  opt.node_ids = &set.node_ids;
  std::vector<TimeSeriesWindow> out;
  out.reserve(static_cast<std::size_t>(window_count(set.values.cols(), t, step)));
  for_each_window(set.values, t, step, opt,
                  [&](TimeSeriesWindow& w) { out.push_back(std::move(w)); });
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline double parse_cell(const std::string& cell, std::size_t row,
                         std::size_t col) {
  const char* b = cell.data();
  const char* e = b + cell.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
  double v = 0.0;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    throw InputError("parse error at row " + std::to_string(row) + ", column " +
                     std::to_string(col) + ": '" + cell + "' is not a number");
  return v;
}

}  // namespace detail

// Load "timestamp, v_1, ..., v_N" records under a header of node ids.
inline RawSeriesSet load_csv(const std::string& path, Quantity quantity) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty file: " + path);

  auto header = detail::split_csv_line(line);
  if (header.size() < 2)
    throw InputError("header must list a timestamp column and node ids");
  RawSeriesSet set;
  set.quantity = quantity;
  set.node_ids.assign(header.begin() + 1, header.end());
  std::set<std::string> seen;
  for (const auto& id : set.node_ids)
    if (!seen.insert(id).second)
      throw InputError("duplicate node id in header: " + id);

  const std::size_t n = set.node_ids.size();
  std::vector<double> timestamps;
  std::vector<double> flat;  // sample-major
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != n + 1)
      throw InputError("row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(n + 1));
    timestamps.push_back(detail::parse_cell(cells[0], row, 1));
    for (std::size_t j = 0; j < n; ++j)
      flat.push_back(detail::parse_cell(cells[j + 1], row, j + 2));
  }
  if (timestamps.empty()) throw InputError("no data rows in " + path);

  const std::size_t t_total = timestamps.size();
  if (t_total >= 2) {
    std::vector<double> diffs(t_total - 1);
    for (std::size_t i = 0; i + 1 < t_total; ++i)
      diffs[i] = timestamps[i + 1] - timestamps[i];
    const double med = median(diffs);
    if (med <= 0.0) throw InputError("timestamps are not increasing");
    for (std::size_t i = 0; i < diffs.size(); ++i)
      if (std::abs(diffs[i] - med) > 0.01 * med)
        throw InputError("non-uniform timestamps at row " + std::to_string(i + 3) +
                         ": spacing " + std::to_string(diffs[i]) +
                         " deviates more than 1% from " + std::to_string(med));
    set.sample_period = med;
  }

  set.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t_total));
  for (std::size_t s = 0; s < t_total; ++s)
    for (std::size_t j = 0; j < n; ++j)
      set.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(s)) =
          flat[s * n + j];
  return set;
}

// Binary sidecar: magic "RMTW", u32 N, u32 T, row-major float64 payload,
// little-endian throughout.
inline void save_window_rmtw(const std::string& path, const TimeSeriesWindow& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open file for writing: " + path);
  out.write("RMTW", 4);
  const std::uint32_t n = static_cast<std::uint32_t>(w.n());
  const std::uint32_t t = static_cast<std::uint32_t>(w.t());
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&t), 4);
  for (Eigen::Index i = 0; i < w.n(); ++i)
    for (Eigen::Index j = 0; j < w.t(); ++j) {
      const double v = w.data(i, j);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  if (!out) throw InputError("write failed: " + path);
}

inline TimeSeriesWindow load_window_rmtw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "RMTW", 4) != 0)
    throw InputError("bad magic in " + path + " (expected RMTW)");
  std::uint32_t n = 0, t = 0;
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&t), 4);
  if (!in || n == 0 || t == 0) throw InputError("bad header in " + path);
  TimeSeriesWindow w;
  w.data.resize(n, t);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < t; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), 8);
      if (!in) throw InputError("truncated payload in " + path);
      w.data(i, j) = v;
    }
  return w;
}

}  // namespace rmtgrid
