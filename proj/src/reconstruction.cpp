#include "chainlab/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <fmt/format.h>

#include "chainlab/density_array.hpp"
#include "chainlab/rng.hpp"

namespace chainlab {

KernelSample subsample_kernel(const ReversibleChain& chain, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorKind::Precondition, "kernel sample needs n >= 2");
  const Vector& pi = chain.stationary().weights;
  const DiscreteSampler sampler({pi.data(), static_cast<std::size_t>(pi.size())});
  CounterRng rng(seed, 0);
  KernelSample s;
  s.seed = seed;
  s.states.reserve(n);
  for (std::size_t i = 0; i < n; ++i) s.states.push_back(sampler(rng));
  for (std::size_t x : s.states) s.source_labels.push_back(chain.states().labels[x]);
  const Matrix k1 = chain.kernel(1.0).entries;
  const Eigen::Index m = static_cast<Eigen::Index>(n);
  s.values.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      s.values(i, j) = k1(static_cast<Eigen::Index>(s.states[static_cast<std::size_t>(i)]),
                          static_cast<Eigen::Index>(s.states[static_cast<std::size_t>(j)]));
  return s;
}

MatrixLogResult matrix_log(const Matrix& p, const Vector& weights, const MatrixLogOptions& opts,
                           StateSpace states) {
  if (p.rows() != p.cols() || p.rows() < 2)
    throw Error(ErrorKind::Precondition, "matrix_log needs a square matrix with at least 2 rows");
  if (!p.allFinite()) throw Error(ErrorKind::NonStochastic, "matrix has non-finite entries");
  const Eigen::Index n = p.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sum = p.row(i).sum();
    if (std::abs(sum - 1.0) > 1e-8)
      throw Error(ErrorKind::NonStochastic, fmt::format("row {} sums to {:.12g}", i, sum));
  }
  if (p.minCoeff() < -kClampTol) throw Error(ErrorKind::NonStochastic, "matrix has negative entries");
  if (weights.size() != n || !(weights.minCoeff() > 0.0))
    throw Error(ErrorKind::Precondition, "row weights must be positive, one per state");

  const Vector root = weights.cwiseSqrt();
  Matrix s = root.asDiagonal() * p * root.cwiseInverse().asDiagonal();
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * std::max(1.0, s.cwiseAbs().maxCoeff()))
    throw Error(ErrorKind::NotReversible,
                fmt::format("matrix is not symmetric under the weight conjugation (defect {:.3e})", asym));
  s = 0.5 * (s + s.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::EigensolveFailure, "matrix_log eigensolve did not converge");
  MatrixLogResult out;
  Vector lambda = solver.eigenvalues();
  out.min_eigenvalue = lambda.minCoeff();
  if (out.min_eigenvalue < -1e-8)
    throw Error(ErrorKind::NotPositiveDefinite,
                fmt::format("smallest eigenvalue {:.6g} is below -1e-8", out.min_eigenvalue));
  if (opts.null_modes >= static_cast<std::size_t>(n))
    throw Error(ErrorKind::Precondition, "null_modes must leave at least one mode");
  // Eigen returns eigenvalues in increasing order.
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<std::size_t>(i) < opts.null_modes) {
      lambda(i) = opts.null_value;
      ++out.floored;
    } else if (lambda(i) < opts.floor) {
      lambda(i) = opts.floor;
      ++out.floored;
    }
    lambda(i) = std::log(lambda(i));
  }
  Matrix l = solver.eigenvectors() * lambda.asDiagonal() * solver.eigenvectors().transpose();
  l = 0.5 * (l + l.transpose()).eval();
  Matrix q = root.cwiseInverse().asDiagonal() * l * root.asDiagonal();

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j || q(i, j) >= 0.0) continue;
      if (q(i, j) < -opts.clamp)
        throw Error(ErrorKind::NotGenerator,
                    fmt::format("log has off-diagonal entry ({}, {}) = {:.6g} below -{:g}", i, j, q(i, j),
                                opts.clamp));
      q(i, j) = 0.0;
      ++out.clamped;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    q(i, i) = 0.0;
    q(i, i) = -q.row(i).sum();
  }
  out.rate = validate_rate_matrix(q, kDefaultTol, std::move(states));
  return out;
}

MatrixLogResult matrix_log(const Matrix& p, const MatrixLogOptions& opts, StateSpace states) {
  if (p.rows() != p.cols() || p.rows() < 2)
    throw Error(ErrorKind::Precondition, "matrix_log needs a square matrix with at least 2 rows");
  // Detailed balance w_j = w_i P(i, j) / P(j, i) along BFS trees, one per
  // connected component with the root at weight 1.
  const Eigen::Index n = p.rows();
  Vector w = Vector::Zero(n);
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (Eigen::Index root = 0; root < n; ++root) {
    if (seen[static_cast<std::size_t>(root)]) continue;
    std::queue<Eigen::Index> frontier;
    w(root) = 1.0;
    seen[static_cast<std::size_t>(root)] = 1;
    frontier.push(root);
    while (!frontier.empty()) {
      const Eigen::Index i = frontier.front();
      frontier.pop();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (seen[static_cast<std::size_t>(j)] || p(i, j) <= 0.0) continue;
        if (p(j, i) <= 0.0)
          throw Error(ErrorKind::NotReversible,
                      fmt::format("P({}, {}) > 0 but P({}, {}) = 0: no symmetrizing weights", i, j, j, i));
        w(j) = w(i) * p(i, j) / p(j, i);
        seen[static_cast<std::size_t>(j)] = 1;
        frontier.push(j);
      }
    }
  }
  return matrix_log(p, w / w.sum(), opts, std::move(states));
}

ReconstructedChain reconstruct_chain(const KernelSample& sample, const MatrixLogOptions& opts) {
  const Matrix& m = sample.values;
  const Eigen::Index n = m.rows();
  if (m.cols() != n || n < 2) throw Error(ErrorKind::Precondition, "kernel sample must be square, n >= 2");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorKind::Precondition, "kernel sample is not symmetric");
  if (m.minCoeff() < 0.0) throw Error(ErrorKind::Precondition, "kernel sample has negative entries");

  const Vector row_weights = m.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(row_weights(i) > 0.0)) throw Error(ErrorKind::ZeroRow, fmt::format("row {} has zero weight", i));
  const double gamma = row_weights.sum();
  const Matrix p = row_weights.cwiseInverse().asDiagonal() * m;

  StateSpace states;
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string base = static_cast<std::size_t>(i) < sample.source_labels.size()
                                 ? sample.source_labels[static_cast<std::size_t>(i)]
                                 : std::string("x");
    states.labels.push_back(fmt::format("{}#{}", base, i));
  }
  auto log = matrix_log(p, row_weights / gamma, opts, std::move(states));

  std::vector<std::string> warnings;
  if ((m.array() - m(0, 0)).abs().maxCoeff() <= 1e-12 * scale)
    warnings.emplace_back("ZeroMixing: all sampled states are indistinguishable; the kernel is constant");
  if (log.floored > 0)
    warnings.push_back(fmt::format("{} eigenvalue(s) floored at {:g} before the logarithm", log.floored, opts.floor));

  const Vector expected = row_weights / gamma;
  const StationaryDistribution pi = stationary_distribution(log.rate);
  const double stationary_error = (pi.weights - expected).cwiseAbs().maxCoeff();
  if (stationary_error > 1e-6)
    throw Error(ErrorKind::EigensolveFailure,
                fmt::format("reconstructed stationary distribution deviates from pi_n / gamma by {:.3e}",
                            stationary_error));

  ReversibleChain chain(log.rate, StationaryDistribution{expected}, 1e-6);
  ScaledKernel kernel = chain.kernel(1.0);
  return ReconstructedChain{std::move(chain), row_weights,     gamma,
                            log.floored,      log.clamped,     stationary_error,
                            std::move(kernel), std::move(warnings)};
}

RoundtripReport roundtrip_report(const ReversibleChain& chain, std::size_t n, std::uint64_t seed, std::size_t k,
                                 std::span<const double> times, unsigned degree) {
  const KernelSample sample = subsample_kernel(chain, n, seed);
  const ReconstructedChain rec = reconstruct_chain(sample);
  const auto detail = array_distance_detail(chain, rec.chain, k, times, degree);
  RoundtripReport r;
  r.n = n;
  r.seed = seed;
  r.distance = detail.distance;
  r.argmax_label = detail.argmax_label;
  const double nn = static_cast<double>(n);
  r.gamma_ratio = rec.gamma / (nn * nn);
  r.max_row_weight_deviation = ((rec.row_weights / nn).array() - 1.0).abs().maxCoeff();
  r.floored = rec.floored;
  r.clamped = rec.clamped;
  return r;
}

}  // namespace chainlab
