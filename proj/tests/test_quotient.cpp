#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "chainlab/density_array.hpp"
#include "chainlab/quotient.hpp"
#include "oracles.hpp"

using namespace chainlab;
using testutil::thrown_kind;

namespace {

ReversibleChain normalized_triangle() { return ReversibleChain(normalize_chain(testutil::complete_graph(3)).rate); }

ReversibleChain normalized_random(std::size_t n, std::uint64_t seed) {
  return ReversibleChain(normalize_chain(validate_rate_matrix(oracle::random_reversible(n, seed).q)).rate);
}

const std::vector<double> kTimes{0.5, 1.0};

}  // namespace

TEST_CASE("type vectors") {
  const ReversibleChain tri = normalized_triangle();
  const Spectrum spec = decompose(tri);
  for (std::size_t x = 0; x < 3; ++x) {
    const TypeVector tp = type_of(spec, x);
    CHECK(std::abs(tp.coordinates(0) - 1.0) < 1e-12);
    CHECK(std::abs((spec.eigenvalues.array() * tp.coordinates.array().square()).sum() - 2.0) < 1e-10);
  }
  CHECK(thrown_kind([&] { type_of(spec, 3); }) == ErrorKind::Precondition);

  // Relabelling permutes type vectors (eigenvector signs are a free choice).
  const auto c = oracle::random_reversible(5, 21);
  const std::vector<Eigen::Index> perm{3, 0, 4, 1, 2};
  Matrix qp(5, 5);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) qp(i, j) = c.q(perm[i], perm[j]);
  const Spectrum a = decompose(ReversibleChain(validate_rate_matrix(c.q)));
  const Spectrum b = decompose(ReversibleChain(validate_rate_matrix(qp)));
  for (Eigen::Index k = 0; k < 5; ++k) {
    double same = 0, flipped = 0;
    for (Eigen::Index i = 0; i < 5; ++i) {
      same = std::max(same, std::abs(b.eigenvectors(i, k) - a.eigenvectors(perm[i], k)));
      flipped = std::max(flipped, std::abs(b.eigenvectors(i, k) + a.eigenvectors(perm[i], k)));
    }
    CHECK(std::min(same, flipped) < 1e-9);
  }
}

TEST_CASE("twin distance") {
  const ReversibleChain tri = normalized_triangle();
  CHECK(twin_distance(tri, 1, 1) == 0.0);
  CHECK(std::abs(twin_distance(tri, 0, 1) - std::sqrt(3.0)) < 1e-9);
  CHECK(std::abs(twin_distance(tri, 0, 1) - 1.732051) < 1e-6);

  for (std::uint64_t seed = 50; seed < 56; ++seed) {
    const auto c = oracle::random_reversible(6, seed);
    const ReversibleChain chain(validate_rate_matrix(c.q));
    const Spectrum spec = decompose(chain);
    const Matrix k = oracle::scaled_kernel(c.q, c.pi, 1.0);
    const Matrix d = twin_distance_matrix(chain);
    for (std::size_t x = 0; x < 6; ++x)
      for (std::size_t y = 0; y < 6; ++y) {
        const auto X = static_cast<Eigen::Index>(x), Y = static_cast<Eigen::Index>(y);
        const double kernel_route = std::sqrt(std::max(0.0, k(X, X) + k(Y, Y) - 2 * k(X, Y)));
        CHECK(std::abs(twin_distance(chain, x, y) - kernel_route) < 1e-6);
        CHECK(std::abs(twin_distance(chain, x, y) - spectral_twin_distance(spec, x, y)) < 1e-9);
        CHECK(std::abs(d(X, Y) - twin_distance(chain, x, y)) < 1e-14);
      }
  }
}

TEST_CASE("splitting a state") {
  const ReversibleChain tri = normalized_triangle();
  const ReversibleChain split = split_state(tri, 1, 0.3);
  CHECK(split.size() == 4);
  CHECK(std::abs(split.stationary().weights(1) - 0.1) < 1e-12);
  CHECK(std::abs(split.stationary().weights(3) - 0.7 / 3.0) < 1e-12);
  CHECK(twin_distance(split, 1, 3) < 1e-9);
  CHECK(split.rate().entries.rowwise().sum().cwiseAbs().maxCoeff() < 1e-8);
  CHECK(array_distance(tri, split, 3, kTimes, 3) < 1e-8);
  CHECK(thrown_kind([&] { split_state(tri, 0, 0.0); }) == ErrorKind::Precondition);
  CHECK(thrown_kind([&] { split_state(tri, 0, 1.0); }) == ErrorKind::Precondition);
  CHECK(thrown_kind([&] { split_state(tri, 5, 0.5); }) == ErrorKind::Precondition);
}

TEST_CASE("finding twins") {
  const ReversibleChain tri = normalized_triangle();
  const ReversibleChain split = split_state(tri, 1, 0.3);
  const StatePartition p = find_twins(split, 1e-8);
  REQUIRE(p.blocks.size() == 3);
  const auto pair = std::find_if(p.blocks.begin(), p.blocks.end(), [](const auto& b) { return b.size() == 2; });
  REQUIRE(pair != p.blocks.end());
  CHECK(*pair == std::vector<std::size_t>{1, 3});
  CHECK_FALSE(p.twin_free());
  CHECK_FALSE(p.chained_merge());

  for (std::uint64_t seed = 60; seed < 66; ++seed) {
    const StatePartition t = find_twins(ReversibleChain(validate_rate_matrix(oracle::random_reversible(7, seed).q)), 1e-8);
    CHECK(t.twin_free());
  }

  const Matrix d = twin_distance_matrix(split);
  const StatePartition all = find_twins(split, d.maxCoeff());
  CHECK(all.blocks.size() == 1);
  CHECK(all.chained_merge());
  CHECK(all.warnings.front().rfind("ChainedMerge", 0) == 0);
}

TEST_CASE("quotients") {
  const ReversibleChain tri = normalized_triangle();
  const ReversibleChain same = quotient_chain(tri, identity_partition(3));
  CHECK(same.rate().entries == tri.rate().entries);

  const ReversibleChain split = split_state(tri, 1, 0.3);
  const StatePartition p = find_twins(split, 1e-8);
  const ReversibleChain back = quotient_chain(split, p);
  CHECK(back.size() == 3);
  CHECK(std::abs(back.stationary().weights.sum() - 1.0) < 1e-12);
  CHECK(array_distance(tri, back, 3, kTimes, 3) < 1e-8);
  CHECK((back.rate().entries - tri.rate().entries).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(find_twins(back, 1e-8).twin_free());

  // a split random chain, every moment with up to four indices
  const ReversibleChain chain = normalized_random(4, 70);
  const ReversibleChain s2 = split_state(split_state(chain, 2, 0.4), 0, 0.6);
  const ReversibleChain q2 = quotient_chain(s2, find_twins(s2, 1e-8));
  CHECK(q2.size() == 4);
  CHECK(array_distance(chain, q2, 4, kTimes, 2) < 1e-8);
  CHECK(array_distance(chain, s2, 4, kTimes, 2) < 1e-8);

  StatePartition broken = identity_partition(3);
  broken.block_of[2] = 0;
  CHECK(thrown_kind([&] { quotient_chain(tri, broken); }) == ErrorKind::Precondition);
  CHECK(thrown_kind([&] { quotient_chain(tri, identity_partition(4)); }) == ErrorKind::Precondition);
}

TEST_CASE("almost realizers") {
  const ReversibleChain tri = normalized_triangle();
  const Spectrum spec = decompose(tri);
  const std::vector<std::size_t> all{0, 1, 2};
  const Realizers r = almost_realizers(spec, type_of(spec, 0), all, 1e-6);
  CHECK(r.states == std::vector<std::size_t>{0});
  CHECK(std::abs(r.measure - 1.0 / 3.0) < 1e-12);
  CHECK(r.wide());

  const Realizers everything = almost_realizers(spec, type_of(spec, 0), all, 10.0);
  CHECK(everything.states.size() == 3);
  CHECK(std::abs(everything.measure - 1.0) < 1e-12);

  TypeVector q = type_of(spec, 0);
  q.coordinates(0) = 5.0;
  const Realizers none = almost_realizers(spec, q, all, 1e-3);
  CHECK(none.states.empty());
  CHECK(none.measure == 0.0);
  CHECK_FALSE(none.wide());

  // every state of a finite chain realizes its own type with positive mass
  const ReversibleChain chain = normalized_random(6, 80);
  const Spectrum s6 = decompose(chain);
  const std::vector<std::size_t> first3{0, 1, 2};
  for (std::size_t x = 0; x < 6; ++x)
    for (double eps : {1e-9, 1e-3, 1.0}) CHECK(almost_realizers(s6, type_of(s6, x), first3, eps).wide());
}
