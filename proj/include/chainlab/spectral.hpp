#pragma once

#include <cstddef>
#include <limits>

#include "chainlab/chain_core.hpp"

namespace chainlab {

// Eigenvalues below this are raised to it before forming lambda^t.
inline constexpr double kEigenvalueFloor = 1e-14;

// Spectrum of the time-1 scaled kernel: p_t(x, y) = sum_i lambda_i^t nu_i(x) nu_i(y).
// Eigenvalues are sorted descending, eigenvectors are the columns of
// `eigenvectors` and are orthonormal in L^2(pi). Within a block of repeated
// eigenvalues the basis is whatever the eigensolver returned.
struct Spectrum {
  Vector eigenvalues;
  Matrix eigenvectors;
  StationaryDistribution base_measure;
  std::size_t floored = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
};

Spectrum decompose(const ReversibleChain& chain);
Spectrum decompose(const RateMatrix& q, const StationaryDistribution& pi);

inline constexpr std::size_t kAllModes = std::numeric_limits<std::size_t>::max();

// sum_{i < rank} lambda_i^t nu_i (x) nu_i.
ScaledKernel kernel_from_spectrum(const Spectrum& spec, double t, std::size_t rank = kAllModes);

// sum_{i > k} lambda_i^t. k may equal n (empty tail).
double tail_mass(const Spectrum& spec, std::size_t k, double t);

// max_{i,j} |sum_x pi(x) nu_i(x) nu_j(x) - delta_ij|
double orthonormality_residual(const Spectrum& spec);

// ||f||_{L^2(pi x pi)} for a function on pairs of states.
double l2_norm(const Matrix& f, const Vector& pi);

struct NormIdentityReport {
  double time = 0.0;
  double kernel_norm = 0.0;
  double target = 0.0;  // sqrt(G(2t))
  double error = 0.0;
  bool passed = false;
};

NormIdentityReport norm_identity_check(const ReversibleChain& chain, double t, double tol = kDefaultTol);
NormIdentityReport norm_identity_check(const RateMatrix& q, const StationaryDistribution& pi, double t,
                                       double tol = kDefaultTol);

struct ContinuityReport {
  double measured = 0.0;  // ||p_t - p_s||^2_{L^2(pi x pi)}
  double bound = 0.0;     // (t - s)^2 ||Q||^2 exp(4 min(s, t) ||Q||)
  bool within_bound = false;
};

ContinuityReport continuity_check(const ReversibleChain& chain, double t, double s);
ContinuityReport continuity_check(const RateMatrix& q, const StationaryDistribution& pi, double t, double s);

}  // namespace chainlab
