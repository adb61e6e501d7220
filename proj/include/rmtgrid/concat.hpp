#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "rmtgrid/errors.hpp"
#include "rmtgrid/rng.hpp"

namespace rmtgrid {

// How to build a duplicated, noise-dressed factor matrix from one series.
// eta < 0 means "derive from snr_db and the series' standard deviation".
struct ConcatSpec {
  int k = 0;                 // duplication rows; use default_dup_rows(N) when 0
  double eta = -1.0;         // noise magnitude; negative -> derive from snr_db
  double snr_db = 20.0;
  std::uint64_t seed = 0;
};

inline int default_dup_rows(int n_state_rows) {
  return std::max(1, static_cast<int>(std::lround(0.3 * n_state_rows)));
}

// Noise magnitude giving the requested signal-to-noise ratio against the
// series' own (population) standard deviation.
inline double eta_for_snr_db(const Eigen::VectorXd& series, double snr_db) {
  const double m = series.mean();
  const double var =
      (series.array() - m).matrix().squaredNorm() / static_cast<double>(series.size());
  return std::sqrt(var) * std::pow(10.0, -snr_db / 20.0);
}

// K copies of the series plus eta times a seeded standard Gaussian matrix.
inline Eigen::MatrixXd build_factor_matrix(const Eigen::VectorXd& c_j,
                                           const ConcatSpec& spec) {
  if (c_j.size() < 1) throw InputError("factor series is empty");
  if (spec.k < 1) throw InputError("duplication count K must be >= 1");
  const double eta =
      spec.eta >= 0.0 ? spec.eta : eta_for_snr_db(c_j, spec.snr_db);
  Eigen::MatrixXd d(spec.k, c_j.size());
  Rng rng(spec.seed);
  for (int i = 0; i < spec.k; ++i)
    for (Eigen::Index t = 0; t < c_j.size(); ++t)
      d(i, t) = c_j(t) + eta * rng.normal();
  return d;
}

// A state matrix stacked over a factor matrix. Rows 0..n_state-1 are state,
// the rest are the factor block.
struct ConcatMatrix {
  Eigen::MatrixXd data;
  Eigen::Index n_state = 0;
  Eigen::Index k_factor = 0;
  std::string factor_node;
};

inline ConcatMatrix concatenate(const Eigen::MatrixXd& state,
                                const Eigen::MatrixXd& factor,
                                const std::string& factor_node = "") {
  if (state.rows() == 0) throw InputError("state matrix has no rows");
  if (factor.rows() == 0) throw InputError("factor matrix has no rows");
  if (state.cols() != factor.cols())
    throw InputError("column mismatch: state has " + std::to_string(state.cols()) +
                     ", factor has " + std::to_string(factor.cols()));
  const Eigen::Index rows = state.rows() + factor.rows();
  if (rows > state.cols())
    throw InputError("concatenated matrix has " + std::to_string(rows) +
                     " rows but only " + std::to_string(state.cols()) +
                     " columns; aspect ratio would exceed 1");
  ConcatMatrix out;
  out.data.resize(rows, state.cols());
  out.data.topRows(state.rows()) = state;
  out.data.bottomRows(factor.rows()) = factor;
  out.n_state = state.rows();
  out.k_factor = factor.rows();
  out.factor_node = factor_node;
  return out;
}

}  // namespace rmtgrid
