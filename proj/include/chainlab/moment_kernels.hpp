#pragma once

// Data-parallel inner loops behind the density-array module. Every kernel has
// an OpenMP version and a serial reference; both produce bit-identical results
// because partial sums are reduced in a fixed order, never per thread.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "chainlab/chain_core.hpp"

namespace chainlab::kernels {

// Kernel matrices p_t for each time slot together with the base measure.
struct KernelTable {
  Vector pi;
  std::vector<Matrix> kernels;

  std::size_t states() const noexcept { return static_cast<std::size_t>(pi.size()); }
};

// p_{slot}(x_a, x_b)^power
struct Factor {
  int a = 0;
  int b = 0;
  int slot = 0;
  int power = 1;
};

struct Term {
  double coef = 1.0;
  std::vector<Factor> factors;
};

// A polynomial in kernel values over `arity` i.i.d. pi-distributed states.
struct CompiledPolynomial {
  int arity = 0;
  std::vector<Term> terms;
};

// sum over all arity-tuples of prod pi(x_r) * polynomial(x)
double expectation_serial(const CompiledPolynomial& poly, const KernelTable& table);
double expectation_parallel(const CompiledPolynomial& poly, const KernelTable& table);

// Variable X_{i,j}(slot) of the array.
struct Variable {
  int i = 0;
  int j = 0;
  int slot = 0;
};

// Every monomial of total degree 1..degree in `variables`, stored as a tree:
// monomial m = monomial parent[m] (or 1 when parent[m] < 0) times variable last[m].
struct MomentDictionary {
  int arity = 0;
  std::vector<Variable> variables;
  std::vector<int> parent;
  std::vector<int> last;
  std::vector<int> degree;

  std::size_t size() const noexcept { return parent.size(); }
  // Variable indices of monomial m, nondecreasing.
  std::vector<int> factors(std::size_t m) const;
};

// Variables X_{i,j}(slot) for i <= j < k (the array is symmetric, so
// X_{j,i} duplicates X_{i,j}) and every slot.
MomentDictionary make_dictionary(int k, int slots, int degree);

std::vector<double> dictionary_moments_serial(const MomentDictionary& dict, const KernelTable& table);
std::vector<double> dictionary_moments_parallel(const MomentDictionary& dict, const KernelTable& table);

// Monte Carlo draws of the array: for replicate r, k states are drawn i.i.d.
// from pi using CounterRng(seed, r * kStreamsPerReplicate + lane).
inline constexpr std::uint64_t kStreamsPerReplicate = 4;

struct ArrayDraws {
  std::size_t k = 0;
  std::size_t slots = 0;
  std::size_t replicates = 0;
  std::vector<std::size_t> states;  // replicates x k
  std::vector<double> values;       // replicates x k x k x slots

  double value(std::size_t r, std::size_t i, std::size_t j, std::size_t s) const noexcept {
    return values[((r * k + i) * k + j) * slots + s];
  }
};

ArrayDraws draw_arrays_serial(const KernelTable& table, std::size_t k, std::uint64_t seed,
                              std::uint64_t lane, std::size_t replicates);
ArrayDraws draw_arrays_parallel(const KernelTable& table, std::size_t k, std::uint64_t seed,
                                std::uint64_t lane, std::size_t replicates);

// Per-monomial sample sums of clip(X) products over the replicates.
struct MomentAccumulator {
  std::vector<double> sum;
  std::vector<double> sum_sq;
  std::size_t count = 0;
};

MomentAccumulator accumulate_serial(const MomentDictionary& dict, const ArrayDraws& draws, double clip);
MomentAccumulator accumulate_parallel(const MomentDictionary& dict, const ArrayDraws& draws, double clip);

}  // namespace chainlab::kernels
