#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chainlab/error.hpp"

namespace chainlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultTol = 1e-9;

// Entries of exp(tQ) in [-kClampTol, 0) are floating-point noise and are set to 0.
inline constexpr double kClampTol = 1e-12;

struct StateSpace {
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return labels.size(); }

  // Labels "0", "1", ..., "n-1".
  static StateSpace indexed(std::size_t n);
};

// A validated generator. Rows sum to zero (the diagonal is recomputed from the
// off-diagonal rates on acceptance), off-diagonal rates are >= 0.
struct RateMatrix {
  StateSpace states;
  Matrix entries;
  bool irreducible = false;

  std::size_t size() const noexcept { return static_cast<std::size_t>(entries.rows()); }
};

struct RateDiagnostics {
  bool valid = false;
  bool irreducible = false;
  double max_row_sum_error = 0.0;
  double min_off_diagonal = 0.0;
  std::size_t clamped_entries = 0;
  std::string message;
};

// Non-throwing inspection of a candidate generator.
RateDiagnostics diagnose_rate_matrix(const Matrix& entries, double tol = kDefaultTol);

// Throws NegativeRate / RowSumViolation / Precondition. A reducible matrix is
// accepted with irreducible == false.
RateMatrix validate_rate_matrix(const Matrix& entries, double tol = kDefaultTol,
                                StateSpace states = {});

// Strong connectivity of the directed graph on strictly positive off-diagonal entries.
bool is_irreducible(const Matrix& entries);

struct StationaryDistribution {
  Vector weights;

  std::size_t size() const noexcept { return static_cast<std::size_t>(weights.size()); }
};

StationaryDistribution stationary_distribution(const RateMatrix& q);

struct ReversibilityCheck {
  bool reversible = false;
  double max_violation = 0.0;
};

ReversibilityCheck check_reversibility(const RateMatrix& q, const StationaryDistribution& pi,
                                       double tol = kDefaultTol);

struct TransitionMatrix {
  double time = 0.0;
  Matrix entries;
};

TransitionMatrix transition_matrix(const RateMatrix& q, double t);

// p_t(x, y) = P_t(x, y) / pi(y)
struct ScaledKernel {
  double time = 0.0;
  Matrix entries;
  StationaryDistribution base_measure;
};

ScaledKernel scaled_kernel(const RateMatrix& q, const StationaryDistribution& pi, double t);

// G(t) = trace(exp(tQ)).
double mixing(const RateMatrix& q, double t);

struct MixingProfile {
  std::vector<std::pair<double, double>> grid;  // (t, G(t))
};

MixingProfile mixing_profile(const RateMatrix& q, std::span<const double> times);

// Eigenvalues of D^{1/2} Q D^{-1/2} (D = diag(pi)), sorted descending, clamped
// to <= 0. Eigenvalues only; the cheap route for G(t) = sum_i exp(mu_i t).
Vector generator_spectrum(const RateMatrix& q, const StationaryDistribution& pi);

struct NormalizedChain {
  RateMatrix rate;
  StationaryDistribution stationary;
  double time_rescale = 1.0;
  // generator_spectrum of the rescaled chain; empty for non-reversible input.
  Vector generator_spectrum;
};

// Rescales Q so that G(1) = 2. Requires n >= 3 and irreducibility.
NormalizedChain normalize_chain(const RateMatrix& q);

// An irreducible reversible chain together with the eigendecomposition of its
// symmetrized generator D^{1/2} Q D^{-1/2}, D = diag(pi). Every time-t quantity
// (P_t, the scaled kernel, G(t)) is read off this decomposition. Immutable.
class ReversibleChain {
 public:
  // Computes pi and checks detailed balance; throws Reducible / NotReversible.
  explicit ReversibleChain(RateMatrix q, double tol = kDefaultTol);
  ReversibleChain(RateMatrix q, StationaryDistribution pi, double tol = kDefaultTol);

  const RateMatrix& rate() const noexcept { return rate_; }
  const StationaryDistribution& stationary() const noexcept { return stationary_; }
  const StateSpace& states() const noexcept { return rate_.states; }
  std::size_t size() const noexcept { return rate_.size(); }

  // Generator eigenvalues mu_0 = 0 >= mu_1 >= ... (sorted descending) and the
  // matching orthonormal eigenvectors of the symmetrized generator (columns).
  const Vector& generator_eigenvalues() const noexcept { return mu_; }
  const Matrix& symmetric_eigenvectors() const noexcept { return u_; }

  // Spectral norm of the symmetrized generator, max |mu_i|.
  double generator_norm() const noexcept;

  TransitionMatrix transition(double t) const;
  ScaledKernel kernel(double t) const;
  double mixing(double t) const;

 private:
  void decompose();

  RateMatrix rate_;
  StationaryDistribution stationary_;
  Vector mu_;
  Matrix u_;
};

}  // namespace chainlab
