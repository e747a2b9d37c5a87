#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "chainlab/density_array.hpp"
#include "chainlab/reconstruction.hpp"
#include "oracles.hpp"

using namespace chainlab;
using testutil::thrown_kind;

namespace {

ReversibleChain normalized_triangle() { return ReversibleChain(normalize_chain(testutil::complete_graph(3)).rate); }

// Symmetric rates give uniform pi.
RateMatrix random_symmetric(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed, 77);
  Matrix q = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    for (Eigen::Index j = i + 1; j < q.rows(); ++j) q(i, j) = q(j, i) = 0.2 + rng.uniform();
  q.diagonal() = -q.rowwise().sum();
  return validate_rate_matrix(q);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_CASE("subsampled kernels") {
  const ReversibleChain tri = normalized_triangle();
  const KernelSample s = subsample_kernel(tri, 100, 5);
  CHECK(s.size() == 100);
  CHECK(s.values == s.values.transpose());
  for (Eigen::Index i = 0; i < 100; ++i)
    for (Eigen::Index j = 0; j < 100; ++j) {
      const double v = s.values(i, j);
      CHECK((std::abs(v - 2.0) < 1e-10 || std::abs(v - 0.5) < 1e-10));
    }
  CHECK(subsample_kernel(tri, 100, 5).states == s.states);
  CHECK(subsample_kernel(tri, 100, 6).states != s.states);
  CHECK(thrown_kind([&] { subsample_kernel(tri, 1, 5); }) == ErrorKind::Precondition);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto c = oracle::random_reversible(6, 300 + seed);
    const ReversibleChain chain(normalize_chain(validate_rate_matrix(c.q)).rate);
    const KernelSample k = subsample_kernel(chain, 60, seed);
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(k.values).eigenvalues().minCoeff() >= -1e-10);
    CHECK(k.values.minCoeff() >= 0.0);
  }
}

TEST_CASE("matrix logarithm") {
  const MatrixLogResult id = matrix_log(Matrix::Identity(3, 3));
  CHECK(id.rate.entries.cwiseAbs().maxCoeff() < 1e-12);

  const Matrix p1 = oracle::exp_two_state(1.0, 1.0, 1.0);
  const MatrixLogResult two = matrix_log(p1);
  CHECK((two.rate.entries - testutil::matrix({{-1, 1}, {1, -1}})).cwiseAbs().maxCoeff() < 1e-8);

  // symmetric with eigenvalues 1 and -0.1
  const Matrix bad = testutil::matrix({{0.45, 0.55}, {0.55, 0.45}});
  CHECK(thrown_kind([&] { matrix_log(bad); }) == ErrorKind::NotPositiveDefinite);
  CHECK(thrown_kind([&] { matrix_log(testutil::matrix({{0.5, 0.6}, {0.5, 0.5}})); }) == ErrorKind::NonStochastic);

  // At time 0.1 P stays well conditioned, so the oracle's rounding is not amplified.
  for (const auto& c : oracle::corpus(15)) {
    const Matrix q = 0.1 * c.q;
    const Matrix p = oracle::exp_taylor(q);
    const MatrixLogResult r = matrix_log(p);
    CHECK(r.floored == 0);
    CHECK((r.rate.entries - q).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((oracle::exp_taylor(r.rate.entries) - p).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(r.rate.entries.rowwise().sum().cwiseAbs().maxCoeff() < 1e-8);
    const MatrixLogResult w = matrix_log(p, c.pi);
    CHECK((w.rate.entries - q).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("reconstruction from the exact full kernel") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const RateMatrix q = random_symmetric(5 + seed, seed);
    const NormalizedChain nc = normalize_chain(q);
    const ReversibleChain chain(nc.rate);
    KernelSample s;
    s.values = chain.kernel(1.0).entries;
    for (std::size_t i = 0; i < chain.size(); ++i) s.states.push_back(i);
    const ReconstructedChain r = reconstruct_chain(s);
    CHECK((r.chain.rate().entries - nc.rate.entries).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((r.chain.rate().entries / nc.time_rescale - q.entries).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(r.gamma - static_cast<double>(chain.size() * chain.size())) < 1e-8);
  }
}

TEST_CASE("reconstruction of random samples") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto c = oracle::random_reversible(5, 400 + seed);
    const ReversibleChain chain(normalize_chain(validate_rate_matrix(c.q)).rate);
    const KernelSample s = subsample_kernel(chain, 40, seed);
    const ReconstructedChain r = reconstruct_chain(s);
    const Vector expected = r.row_weights / r.gamma;
    CHECK((r.chain.stationary().weights - expected).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(r.stationary_error < 1e-6);
    CHECK(std::abs(r.row_weights.sum() - r.gamma) < 1e-9 * r.gamma);
    CHECK(r.chain.rate().entries.rowwise().sum().cwiseAbs().maxCoeff() < 1e-8);
    CHECK(check_reversibility(r.chain.rate(), r.chain.stationary(), 1e-6).reversible);
    const Matrix p = r.chain.transition(1.0).entries;
    CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-8);
    const std::vector<double> times{0.5, 1.0};
    // The rebuilt chain is not normalized, so only normality may fail.
    for (const auto& e : axiom_report(r.chain, times, 1e-5).entries)
      if (e.key != "normality") CHECK(e.passed);
  }
}

TEST_CASE("degenerate sample with a single distinct state") {
  const ReversibleChain tri = normalized_triangle();
  KernelSample s;
  s.values = Matrix::Constant(2, 2, 2.0);
  s.states = {0, 0};
  const ReconstructedChain r = reconstruct_chain(s);
  CHECK(r.chain.size() == 2);
  REQUIRE_FALSE(r.warnings.empty());
  CHECK(r.warnings.front().rfind("ZeroMixing", 0) == 0);

  KernelSample zero;
  zero.values = testutil::matrix({{1, 0}, {0, 0}});
  CHECK(thrown_kind([&] { reconstruct_chain(zero); }) == ErrorKind::ZeroRow);
}

TEST_CASE("round trip on the normalized triangle") {
  const ReversibleChain tri = normalized_triangle();
  const std::vector<double> one{1.0};
  std::vector<double> at50, at400;
  int close = 0, gamma_ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const RoundtripReport r400 = roundtrip_report(tri, 400, seed, 2, one, 2);
    const RoundtripReport r50 = roundtrip_report(tri, 50, seed, 2, one, 2);
    at400.push_back(r400.distance);
    at50.push_back(r50.distance);
    close += r400.distance < 0.05;
    const RoundtripReport r100 = roundtrip_report(tri, 100, seed, 2, one, 2);
    gamma_ok += r100.gamma_ratio > 0.9 && r100.gamma_ratio < 1.1;
    CHECK(r400.n == 400);
    CHECK(r400.seed == seed);
  }
  CHECK(close >= 9);
  CHECK(gamma_ok >= 9);
  CHECK(median(at400) <= median(at50));
  // deterministic given the seed
  CHECK(roundtrip_report(tri, 100, 3, 2, one, 2).distance == roundtrip_report(tri, 100, 3, 2, one, 2).distance);
}
