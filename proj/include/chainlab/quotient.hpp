#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "chainlab/chain_core.hpp"
#include "chainlab/spectral.hpp"

namespace chainlab {

// tp(x)(i) = nu_i(x)
struct TypeVector {
  Vector coordinates;
};

TypeVector type_of(const Spectrum& spec, std::size_t state);

// d(x, y)^2 = p_1(x, x) + p_1(y, y) - 2 p_1(x, y), evaluated as
// ||p_{1/2}(x, .) - p_{1/2}(y, .)||^2_{L^2(pi)} so exact twins come out at
// rounding level instead of sqrt(rounding).
double twin_distance(const ReversibleChain& chain, std::size_t x, std::size_t y);
Matrix twin_distance_matrix(const ReversibleChain& chain);

// sqrt(sum_i lambda_i (nu_i(x) - nu_i(y))^2)
double spectral_twin_distance(const Spectrum& spec, std::size_t x, std::size_t y);

// Replaces `state` by two copies carrying alpha and 1 - alpha of its mass;
// the copies are exact twins and the density array is unchanged. The first
// copy keeps the original position, the second is appended.
ReversibleChain split_state(const ReversibleChain& chain, std::size_t state, double alpha);

struct StatePartition {
  std::vector<std::vector<std::size_t>> blocks;
  std::vector<std::size_t> block_of;
  double tol = 0.0;
  double max_intra_distance = 0.0;
  std::vector<std::string> warnings;

  bool twin_free() const noexcept { return blocks.size() == block_of.size(); }
  bool chained_merge() const noexcept { return !warnings.empty(); }
};

StatePartition identity_partition(std::size_t n);

// Single-linkage clustering of states under twin_distance <= tol.
StatePartition find_twins(const ReversibleChain& chain, double tol);

// Block masses pi(A), block kernel
//   p'(A, B) = sum_{x in A, y in B} pi(x) pi(y) p_1(x, y) / (pi(A) pi(B)),
// re-projected to a chain through the logarithm of the block time-1 matrix.
ReversibleChain quotient_chain(const ReversibleChain& chain, const StatePartition& partition);

struct Realizers {
  std::vector<std::size_t> states;
  double measure = 0.0;

  bool wide() const noexcept { return measure > 0.0; }
};

// {x : |q(i) - nu_i(x)| < eps for all i in indices}
Realizers almost_realizers(const Spectrum& spec, const TypeVector& q, std::span<const std::size_t> indices,
                           double eps);

}  // namespace chainlab
