#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chainlab/chain_core.hpp"

namespace chainlab {

// Exact moments enumerate pi^d over d distinct array indices, cost n^d.
inline constexpr std::size_t kMaxMomentIndices = 6;

// X_{i,j}(t)^multiplicity
struct MonomialFactor {
  std::size_t i = 0;
  std::size_t j = 0;
  double t = 1.0;
  unsigned multiplicity = 1;
};

struct MonomialSpec {
  std::vector<MonomialFactor> factors;
};

struct PolynomialTerm {
  double coef = 1.0;
  MonomialSpec monomial;
};

struct Polynomial {
  std::vector<PolynomialTerm> terms;
};

// E(prod X_{i,j}(t)) for the density array of `chain`.
// The array of any symmetric kernel family over a base measure. A chain
// gives p_t = scaled kernel and G(t) = its mixing; a hand-built family (for
// instance a perturbed kernel) goes through the same moment machinery.
struct ArrayKernel {
  Vector pi;
  std::function<Matrix(double)> kernel;
  std::function<double(double)> mixing;
};

ArrayKernel array_kernel(const ReversibleChain& chain);

double exact_moment(const ReversibleChain& chain, const MonomialSpec& m);
double exact_expectation(const ReversibleChain& chain, const Polynomial& p);
double exact_expectation(const ArrayKernel& source, const Polynomial& p);

struct ArraySample {
  std::size_t k = 0;
  std::vector<double> times;
  std::uint64_t seed = 0;
  std::size_t replicates = 0;
  std::string rng_algorithm;
  std::vector<std::size_t> states;  // replicates x k
  std::vector<double> values;       // replicates x k x k x |times|

  std::size_t state(std::size_t r, std::size_t i) const noexcept { return states[r * k + i]; }
  double value(std::size_t r, std::size_t i, std::size_t j, std::size_t time_index) const noexcept {
    return values[((r * k + i) * k + j) * times.size() + time_index];
  }
};

// States are drawn i.i.d. (with replacement) from pi; replicate r uses stream
// (seed, r). The result depends only on the arguments.
ArraySample sample_array(const ReversibleChain& chain, std::size_t k, std::span<const double> times,
                         std::uint64_t seed, std::size_t replicates);

struct MomentEntry {
  std::string key;
  double value = 0.0;
  double target = 0.0;
  bool passed = false;
};

struct MomentReport {
  std::vector<double> times;
  double tol = 0.0;
  std::vector<MomentEntry> entries;

  bool all_passed() const noexcept;
  // Throws AxiomViolation naming the first failed functional.
  void require_pass() const;
};

// Evaluates every axiom functional of the density array exactly:
// stochasticity and symmetry per t, Chapman-Kolmogorov (plain and diagonal)
// for every ordered pair (s, t) of the grid, normality at t = 1, E(X_00(t))
// against G(t), and E((X_01(t) - X_01(s))^2) against ||p_t - p_s||^2 for
// adjacent grid points.
MomentReport axiom_report(const ReversibleChain& chain, std::span<const double> times, double tol = 1e-8);
MomentReport axiom_report(const ArrayKernel& source, std::span<const double> times, double tol = 1e-8);

struct ArrayDistance {
  double distance = 0.0;
  std::size_t argmax = 0;
  std::string argmax_label;
  std::vector<double> moments_a;
  std::vector<double> moments_b;
};

// max |E_A - E_B| over all monomials of total degree <= degree in
// {X_{i,j}(t) : i, j < k, t in times}.
ArrayDistance array_distance_detail(const ReversibleChain& a, const ReversibleChain& b, std::size_t k,
                                    std::span<const double> times, unsigned degree);
double array_distance(const ReversibleChain& a, const ReversibleChain& b, std::size_t k,
                      std::span<const double> times, unsigned degree);

struct EmpiricalDistance {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t argmax = 0;
  double clip = 0.0;
};

// Monte Carlo version of array_distance over clipped monomials
// min(max(X, -K), K) with K = 10 * the largest diagonal kernel value of either
// chain on the grid. Chain A uses lane 0 and chain B lane 1 of each replicate.
EmpiricalDistance empirical_distance(const ReversibleChain& a, const ReversibleChain& b, std::size_t k,
                                     std::span<const double> times, std::uint64_t seed,
                                     std::size_t replicates, unsigned degree = 2);

}  // namespace chainlab
