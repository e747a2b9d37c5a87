#include "chainlab/chain_core.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <queue>

#include <fmt/format.h>
#include <unsupported/Eigen/MatrixFunctions>

namespace chainlab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NegativeRate: return "NegativeRate";
    case ErrorKind::RowSumViolation: return "RowSumViolation";
    case ErrorKind::Reducible: return "Reducible";
    case ErrorKind::NotReversible: return "NotReversible";
    case ErrorKind::NumericalOverflow: return "NumericalOverflow";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::EigensolveFailure: return "EigensolveFailure";
    case ErrorKind::TooManyIndices: return "TooManyIndices";
    case ErrorKind::AxiomViolation: return "AxiomViolation";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::NonStochastic: return "NonStochastic";
    case ErrorKind::NotGenerator: return "NotGenerator";
    case ErrorKind::ZeroRow: return "ZeroRow";
    case ErrorKind::UnknownFamily: return "UnknownFamily";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::Precondition: return "Precondition";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

StateSpace StateSpace::indexed(std::size_t n) {
  StateSpace s;
  s.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) s.labels.push_back(std::to_string(i));
  return s;
}

namespace {

bool reaches_all(const Matrix& q, bool transpose) {
  const Eigen::Index n = q.rows();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<Eigen::Index> frontier;
  frontier.push(0);
  seen[0] = 1;
  Eigen::Index count = 1;
  while (!frontier.empty()) {
    const Eigen::Index i = frontier.front();
    frontier.pop();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i || seen[static_cast<std::size_t>(j)]) continue;
      const double rate = transpose ? q(j, i) : q(i, j);
      if (rate > 0.0) {
        seen[static_cast<std::size_t>(j)] = 1;
        ++count;
        frontier.push(j);
      }
    }
  }
  return count == n;
}

void check_square_finite(const Matrix& entries) {
  if (entries.rows() != entries.cols())
    throw Error(ErrorKind::Precondition,
                fmt::format("rate matrix must be square, got {}x{}", entries.rows(), entries.cols()));
  if (entries.rows() < 2)
    throw Error(ErrorKind::Precondition, "state space needs at least 2 states");
  if (!entries.allFinite()) throw Error(ErrorKind::Precondition, "rate matrix has non-finite entries");
}

// Candidate pi from detailed balance along a BFS tree of two-way edges.
// Returns an empty vector when the tree does not span.
Vector detailed_balance_candidate(const Matrix& q) {
  const Eigen::Index n = q.rows();
  Vector pi = Vector::Zero(n);
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<Eigen::Index> frontier;
  pi(0) = 1.0;
  seen[0] = 1;
  frontier.push(0);
  Eigen::Index count = 1;
  while (!frontier.empty()) {
    const Eigen::Index i = frontier.front();
    frontier.pop();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i || seen[static_cast<std::size_t>(j)]) continue;
      if (q(i, j) > 0.0 && q(j, i) > 0.0) {
        pi(j) = pi(i) * q(i, j) / q(j, i);
        seen[static_cast<std::size_t>(j)] = 1;
        ++count;
        frontier.push(j);
      }
    }
  }
  if (count != n) return {};
  return pi / pi.sum();
}

double stationary_residual(const Matrix& q, const Vector& pi) {
  return (pi.transpose() * q).cwiseAbs().maxCoeff();
}

double residual_budget(const Matrix& q) {
  return 1e-10 * std::max(1.0, q.cwiseAbs().maxCoeff());
}

void clamp_probabilities(Matrix& m, const char* what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double& x = m(i, j);
      if (x >= 0.0) continue;
      if (x >= -kClampTol) {
        x = 0.0;
      } else {
        throw Error(ErrorKind::EigensolveFailure,
                    fmt::format("{} entry ({}, {}) = {:.3e} is negative beyond clamp tolerance", what,
                                i, j, x));
      }
    }
  }
}

}  // namespace

bool is_irreducible(const Matrix& entries) {
  if (entries.rows() != entries.cols() || entries.rows() == 0) return false;
  if (entries.rows() == 1) return true;
  return reaches_all(entries, false) && reaches_all(entries, true);
}

RateDiagnostics diagnose_rate_matrix(const Matrix& entries, double tol) {
  RateDiagnostics d;
  if (entries.rows() != entries.cols() || entries.rows() < 2 || !entries.allFinite()) {
    d.message = "matrix must be square, finite, with at least 2 states";
    return d;
  }
  const Eigen::Index n = entries.rows();
  d.min_off_diagonal = std::numeric_limits<double>::infinity();
  bool negative = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double x = entries(i, j);
      d.min_off_diagonal = std::min(d.min_off_diagonal, x);
      if (x < -tol) {
        if (!negative) d.message = fmt::format("negative rate {} at ({}, {})", x, i, j);
        negative = true;
      } else if (x < 0.0) {
        ++d.clamped_entries;
      }
    }
  }
  Eigen::Index worst_row = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double err = std::abs(entries.row(i).sum());
    if (err > d.max_row_sum_error) {
      d.max_row_sum_error = err;
      worst_row = i;
    }
  }
  const bool rows_ok = d.max_row_sum_error <= tol;
  if (!rows_ok && !negative)
    d.message = fmt::format("row {} sums to {}", worst_row, entries.row(worst_row).sum());
  d.valid = !negative && rows_ok;
  d.irreducible = is_irreducible(entries.cwiseMax(0.0));
  return d;
}

RateMatrix validate_rate_matrix(const Matrix& entries, double tol, StateSpace states) {
  check_square_finite(entries);
  const Eigen::Index n = entries.rows();
  if (states.size() == 0) states = StateSpace::indexed(static_cast<std::size_t>(n));
  if (states.size() != static_cast<std::size_t>(n))
    throw Error(ErrorKind::Precondition,
                fmt::format("{} labels for a {}-state matrix", states.size(), n));
  {
    auto sorted = states.labels;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw Error(ErrorKind::Precondition, "state labels must be unique");
  }

  Matrix q = entries;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (q(i, j) < -tol)
        throw Error(ErrorKind::NegativeRate,
                    fmt::format("off-diagonal rate Q({}, {}) = {} is negative", i, j, q(i, j)));
      if (q(i, j) < 0.0) q(i, j) = 0.0;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sum = entries.row(i).sum();
    if (std::abs(sum) > tol)
      throw Error(ErrorKind::RowSumViolation, fmt::format("row {} sums to {}", i, sum));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    q(i, i) = 0.0;
    q(i, i) = -q.row(i).sum();
  }
  RateMatrix out;
  out.states = std::move(states);
  out.irreducible = is_irreducible(q);
  out.entries = std::move(q);
  return out;
}

StationaryDistribution stationary_distribution(const RateMatrix& q) {
  if (!q.irreducible) throw Error(ErrorKind::Reducible, "stationary distribution needs an irreducible chain");
  const Matrix& m = q.entries;
  const Eigen::Index n = m.rows();
  Vector pi = detailed_balance_candidate(m);
  if (pi.size() == 0 || stationary_residual(m, pi) > residual_budget(m)) {
    // General route: solve pi Q = 0 with one equation replaced by sum(pi) = 1.
    Matrix a = m.transpose();
    a.row(n - 1).setOnes();
    Vector b = Vector::Zero(n);
    b(n - 1) = 1.0;
    pi = a.colPivHouseholderQr().solve(b);
  }
  if (!pi.allFinite() || pi.minCoeff() <= 0.0)
    throw Error(ErrorKind::Reducible, "stationary distribution is not strictly positive");
  pi /= pi.sum();
  const double residual = stationary_residual(m, pi);
  if (residual > residual_budget(m))
    throw Error(ErrorKind::Reducible,
                fmt::format("stationary residual {:.3e} exceeds budget; nullspace may be degenerate",
                            residual));
  return StationaryDistribution{std::move(pi)};
}

ReversibilityCheck check_reversibility(const RateMatrix& q, const StationaryDistribution& pi,
                                       double tol) {
  ReversibilityCheck out;
  const Eigen::Index n = q.entries.rows();
  if (pi.weights.size() != n) return out;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::abs(pi.weights(i) * q.entries(i, j) - pi.weights(j) * q.entries(j, i));
      out.max_violation = std::max(out.max_violation, v);
    }
  }
  out.reversible = out.max_violation <= tol;
  return out;
}

ReversibleChain::ReversibleChain(RateMatrix q, double tol)
    : ReversibleChain(q, stationary_distribution(q), tol) {}

ReversibleChain::ReversibleChain(RateMatrix q, StationaryDistribution pi, double tol)
    : rate_(std::move(q)), stationary_(std::move(pi)) {
  if (!rate_.irreducible) throw Error(ErrorKind::Reducible, "chain is reducible");
  if (stationary_.size() != rate_.size())
    throw Error(ErrorKind::Precondition, "stationary distribution has the wrong length");
  if (stationary_.weights.minCoeff() <= 0.0)
    throw Error(ErrorKind::Precondition, "stationary distribution must be strictly positive");
  const auto rev = check_reversibility(rate_, stationary_, tol);
  if (!rev.reversible)
    throw Error(ErrorKind::NotReversible,
                fmt::format("detailed balance violated by {:.3e}", rev.max_violation));
  decompose();
}

void ReversibleChain::decompose() {
  const Vector s = stationary_.weights.cwiseSqrt();
  Matrix a = s.asDiagonal() * rate_.entries * s.cwiseInverse().asDiagonal();
  a = 0.5 * (a + a.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::EigensolveFailure, "symmetric generator eigensolve did not converge");
  const Eigen::Index n = a.rows();
  mu_.resize(n);
  u_.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    mu_(i) = std::min(0.0, solver.eigenvalues()(n - 1 - i));
    u_.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  // The stationary mode is known exactly.
  mu_(0) = 0.0;
  u_.col(0) = s;
}

double ReversibleChain::generator_norm() const noexcept {
  return mu_.size() == 0 ? 0.0 : mu_.cwiseAbs().maxCoeff();
}

namespace {

Matrix symmetric_exponential(const Matrix& u, const Vector& mu, double t) {
  const Vector decay = (mu * t).array().exp().matrix();
  Matrix e = u * decay.asDiagonal() * u.transpose();
  return 0.5 * (e + e.transpose());
}

}  // namespace

TransitionMatrix ReversibleChain::transition(double t) const {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw Error(ErrorKind::Precondition, "time must be finite and nonnegative");
  const Vector s = stationary_.weights.cwiseSqrt();
  Matrix p = s.cwiseInverse().asDiagonal() * symmetric_exponential(u_, mu_, t) * s.asDiagonal();
  clamp_probabilities(p, "transition matrix");
  return TransitionMatrix{t, std::move(p)};
}

ScaledKernel ReversibleChain::kernel(double t) const {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw Error(ErrorKind::Precondition, "time must be finite and nonnegative");
  const Vector inv = stationary_.weights.cwiseSqrt().cwiseInverse();
  Matrix k = inv.asDiagonal() * symmetric_exponential(u_, mu_, t) * inv.asDiagonal();
  clamp_probabilities(k, "scaled kernel");
  return ScaledKernel{t, std::move(k), stationary_};
}

double ReversibleChain::mixing(double t) const {
  return (mu_ * t).array().exp().sum();
}

namespace {

// Reversible chains go through the symmetric eigen route; anything else falls
// back to Pade scaling-and-squaring.
bool eigen_route_available(const RateMatrix& q, StationaryDistribution* pi_out) {
  if (!q.irreducible) return false;
  try {
    auto pi = stationary_distribution(q);
    if (!check_reversibility(q, pi).reversible) return false;
    if (pi_out) *pi_out = std::move(pi);
    return true;
  } catch (const Error&) {
    return false;
  }
}

Matrix general_exponential(const Matrix& q, double t) {
  Matrix scaled = q * t;
  Matrix p = scaled.exp();
  if (!p.allFinite())
    throw Error(ErrorKind::NumericalOverflow, fmt::format("exp(tQ) overflowed at t = {}", t));
  return p;
}

}  // namespace

TransitionMatrix transition_matrix(const RateMatrix& q, double t) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw Error(ErrorKind::Precondition, "time must be finite and nonnegative");
  if (t == 0.0) return TransitionMatrix{0.0, Matrix::Identity(q.entries.rows(), q.entries.cols())};
  StationaryDistribution pi;
  if (eigen_route_available(q, &pi)) return ReversibleChain(q, std::move(pi)).transition(t);
  Matrix p = general_exponential(q.entries, t);
  clamp_probabilities(p, "transition matrix");
  return TransitionMatrix{t, std::move(p)};
}

ScaledKernel scaled_kernel(const RateMatrix& q, const StationaryDistribution& pi, double t) {
  return ReversibleChain(q, pi).kernel(t);
}

double mixing(const RateMatrix& q, double t) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw Error(ErrorKind::Precondition, "time must be finite and nonnegative");
  StationaryDistribution pi;
  if (eigen_route_available(q, &pi)) return ReversibleChain(q, std::move(pi)).mixing(t);
  return general_exponential(q.entries, t).trace();
}

MixingProfile mixing_profile(const RateMatrix& q, std::span<const double> times) {
  MixingProfile out;
  out.grid.reserve(times.size());
  StationaryDistribution pi;
  if (eigen_route_available(q, &pi)) {
    const ReversibleChain chain(q, std::move(pi));
    for (double t : times) out.grid.emplace_back(t, chain.mixing(t));
  } else {
    for (double t : times) out.grid.emplace_back(t, mixing(q, t));
  }
  return out;
}

Vector generator_spectrum(const RateMatrix& q, const StationaryDistribution& pi) {
  const Vector s = pi.weights.cwiseSqrt();
  Matrix a = s.asDiagonal() * q.entries * s.cwiseInverse().asDiagonal();
  a = 0.5 * (a + a.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::EigensolveFailure, "symmetric generator eigensolve did not converge");
  const Eigen::Index n = a.rows();
  Vector mu(n);
  for (Eigen::Index i = 0; i < n; ++i) mu(i) = std::min(0.0, solver.eigenvalues()(n - 1 - i));
  if (n > 0 && q.irreducible) mu(0) = 0.0;
  return mu;
}

NormalizedChain normalize_chain(const RateMatrix& q) {
  if (q.size() == 2)
    throw Error(ErrorKind::Degenerate, "a 2-state chain has G(0) = 2; no positive rescale gives G(1) = 2");
  if (!q.irreducible) throw Error(ErrorKind::Reducible, "cannot normalize a reducible chain");

  StationaryDistribution pi;
  std::vector<std::complex<double>> mu;
  Vector real_mu;
  if (eigen_route_available(q, &pi)) {
    real_mu = generator_spectrum(q, pi);
    for (Eigen::Index i = 0; i < real_mu.size(); ++i) mu.emplace_back(real_mu(i), 0.0);
  } else {
    pi = stationary_distribution(q);
    Eigen::EigenSolver<Matrix> solver(q.entries, false);
    if (solver.info() != Eigen::Success)
      throw Error(ErrorKind::EigensolveFailure, "generator eigensolve did not converge");
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) mu.push_back(solver.eigenvalues()(i));
  }
  auto trace_at = [&](double s) {
    double g = 0.0;
    for (const auto& m : mu) g += std::exp(m * s).real();
    return g;
  };

  double lo = 1e-8;
  double hi = 1.0;
  if (trace_at(lo) <= 2.0)
    throw Error(ErrorKind::Degenerate, "G already below 2 at the smallest bracket time");
  int doublings = 0;
  while (trace_at(hi) >= 2.0) {
    hi *= 2.0;
    if (++doublings > 200) throw Error(ErrorKind::Degenerate, "could not bracket G(s) = 2");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (trace_at(mid) > 2.0)
      lo = mid;
    else
      hi = mid;
  }
  const double s_star = 0.5 * (lo + hi);

  NormalizedChain out;
  out.rate.states = q.states;
  out.rate.entries = q.entries * s_star;
  out.rate.irreducible = q.irreducible;
  out.stationary = std::move(pi);
  out.time_rescale = s_star;
  if (real_mu.size() > 0) out.generator_spectrum = real_mu * s_star;
  return out;
}

}  // namespace chainlab
