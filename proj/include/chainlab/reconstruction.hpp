#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chainlab/chain_core.hpp"

namespace chainlab {

// values(i, j) = p_1(x_i, x_j) for states x_0..x_{n-1} drawn i.i.d. from pi.
struct KernelSample {
  Matrix values;
  std::vector<std::size_t> states;
  std::vector<std::string> source_labels;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
};

KernelSample subsample_kernel(const ReversibleChain& chain, std::size_t n, std::uint64_t seed);

struct MatrixLogOptions {
  // Eigenvalues below `floor` are raised to it before the log.
  double floor = 1e-12;
  // The `null_modes` smallest eigenvalues are known to be exact zeros (e.g.
  // introduced by splitting a state) and are replaced by `null_value`, which
  // makes those modes decay at rate -log(null_value).
  std::size_t null_modes = 0;
  double null_value = 1e-30;
  // Off-diagonal rates in [-clamp, 0) are set to 0 and the diagonal rebalanced.
  double clamp = 1e-8;
};

struct MatrixLogResult {
  RateMatrix rate;
  std::size_t floored = 0;
  std::size_t clamped = 0;
  double min_eigenvalue = 0.0;
};

// Logarithm of a row-stochastic matrix P that is symmetric under the
// conjugation D^{1/2} P D^{-1/2}, D = diag(weights). Throws NonStochastic,
// NotReversible (no such weights), NotPositiveDefinite (eigenvalue < -1e-8),
// NotGenerator (an off-diagonal rate below -clamp).
MatrixLogResult matrix_log(const Matrix& p, const Vector& weights, const MatrixLogOptions& opts = {},
                           StateSpace states = {});
// Same, with the weights recovered from P by detailed balance.
MatrixLogResult matrix_log(const Matrix& p, const MatrixLogOptions& opts = {}, StateSpace states = {});

struct ReconstructedChain {
  ReversibleChain chain;
  Vector row_weights;  // pi_n(i) = sum_j M(i, j)
  double gamma = 0.0;  // sum_i pi_n(i)
  std::size_t floored = 0;
  std::size_t clamped = 0;
  double stationary_error = 0.0;  // max |pi(Q_n) - pi_n / gamma|
  ScaledKernel kernel;             // time-1 kernel of the rebuilt chain
  std::vector<std::string> warnings;
};

ReconstructedChain reconstruct_chain(const KernelSample& sample, const MatrixLogOptions& opts = {});

struct RoundtripReport {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double distance = 0.0;
  std::string argmax_label;
  double gamma_ratio = 0.0;               // gamma / n^2
  double max_row_weight_deviation = 0.0;  // max_i |pi_n(i) / n - 1|
  std::size_t floored = 0;
  std::size_t clamped = 0;
};

RoundtripReport roundtrip_report(const ReversibleChain& chain, std::size_t n, std::uint64_t seed, std::size_t k,
                                 std::span<const double> times, unsigned degree);

}  // namespace chainlab
