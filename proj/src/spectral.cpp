#include "chainlab/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace chainlab {

Spectrum decompose(const ReversibleChain& chain) {
  const Vector& pi = chain.stationary().weights;
  const Vector root = pi.cwiseSqrt();
  const Matrix p1 = chain.transition(1.0).entries;
  Matrix s = root.asDiagonal() * p1 * root.cwiseInverse().asDiagonal();
  s = 0.5 * (s + s.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::EigensolveFailure, "time-1 kernel eigensolve did not converge");

  const Eigen::Index n = s.rows();
  Spectrum out;
  out.base_measure = chain.stationary();
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double lambda = solver.eigenvalues()(n - 1 - i);
    if (lambda < kEigenvalueFloor) {
      lambda = kEigenvalueFloor;
      ++out.floored;
    }
    out.eigenvalues(i) = lambda;
    Vector nu = root.cwiseInverse().asDiagonal() * solver.eigenvectors().col(n - 1 - i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(nu(j)) > 1e-8) {
        if (nu(j) < 0.0) nu = -nu;
        break;
      }
    }
    out.eigenvectors.col(i) = nu;
  }
  // Perron mode of an irreducible chain: lambda_0 = 1, nu_0 = 1.
  out.eigenvalues(0) = 1.0;
  out.eigenvectors.col(0).setOnes();
  return out;
}

Spectrum decompose(const RateMatrix& q, const StationaryDistribution& pi) {
  return decompose(ReversibleChain(q, pi));
}

ScaledKernel kernel_from_spectrum(const Spectrum& spec, double t, std::size_t rank) {
  if (!(t > 0.0)) throw Error(ErrorKind::Precondition, "kernel time must be positive");
  const Eigen::Index n = static_cast<Eigen::Index>(spec.size());
  const Eigen::Index r = static_cast<Eigen::Index>(std::min<std::size_t>(rank, spec.size()));
  Vector weights = Vector::Zero(n);
  for (Eigen::Index i = 0; i < r; ++i) weights(i) = std::pow(spec.eigenvalues(i), t);
  Matrix k = spec.eigenvectors * weights.asDiagonal() * spec.eigenvectors.transpose();
  k = 0.5 * (k + k.transpose()).eval();
  return ScaledKernel{t, std::move(k), spec.base_measure};
}

double tail_mass(const Spectrum& spec, std::size_t k, double t) {
  double total = 0.0;
  for (std::size_t i = k + 1; i < spec.size(); ++i)
    total += std::pow(spec.eigenvalues(static_cast<Eigen::Index>(i)), t);
  return total;
}

double orthonormality_residual(const Spectrum& spec) {
  const Matrix& v = spec.eigenvectors;
  const Matrix gram = v.transpose() * spec.base_measure.weights.asDiagonal() * v;
  return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

double l2_norm(const Matrix& f, const Vector& pi) {
  return std::sqrt((pi.transpose() * f.cwiseAbs2() * pi)(0, 0));
}

NormIdentityReport norm_identity_check(const ReversibleChain& chain, double t, double tol) {
  NormIdentityReport r;
  r.time = t;
  r.kernel_norm = l2_norm(chain.kernel(t).entries, chain.stationary().weights);
  r.target = std::sqrt(chain.mixing(2.0 * t));
  r.error = std::abs(r.kernel_norm - r.target);
  r.passed = r.error <= tol;
  return r;
}

NormIdentityReport norm_identity_check(const RateMatrix& q, const StationaryDistribution& pi, double t,
                                       double tol) {
  return norm_identity_check(ReversibleChain(q, pi), t, tol);
}

ContinuityReport continuity_check(const ReversibleChain& chain, double t, double s) {
  if (!(t > 0.0) || !(s > 0.0)) throw Error(ErrorKind::Precondition, "continuity check needs t, s > 0");
  ContinuityReport r;
  if (t != s) {
    const Matrix diff = chain.kernel(t).entries - chain.kernel(s).entries;
    const double norm = l2_norm(diff, chain.stationary().weights);
    r.measured = norm * norm;
  }
  const double q = chain.generator_norm();
  r.bound = (t - s) * (t - s) * q * q * std::exp(4.0 * std::min(s, t) * q);
  r.within_bound = r.measured <= r.bound;
  return r;
}

ContinuityReport continuity_check(const RateMatrix& q, const StationaryDistribution& pi, double t, double s) {
  return continuity_check(ReversibleChain(q, pi), t, s);
}

}  // namespace chainlab
