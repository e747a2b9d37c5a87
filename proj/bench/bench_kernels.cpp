// Serial reference kernels against their OpenMP versions.
//   ./bench_kernels --benchmark_filter=Expectation

#include <cmath>

#include <benchmark/benchmark.h>

#include "chainlab/chain_core.hpp"
#include "chainlab/moment_kernels.hpp"
#include "chainlab/rng.hpp"

namespace {

using namespace chainlab;
using namespace chainlab::kernels;

// Reversible by construction: pi(x) Q(x, y) = s(x, y) sqrt(pi(x) pi(y)).
ReversibleChain random_chain(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  Vector pi(static_cast<Eigen::Index>(n));
  for (auto& w : pi) w = 0.5 + rng.uniform();
  pi /= pi.sum();
  Matrix q = Matrix::Zero(pi.size(), pi.size());
  for (Eigen::Index x = 0; x < pi.size(); ++x)
    for (Eigen::Index y = x + 1; y < pi.size(); ++y) {
      const double s = 0.1 + 0.9 * rng.uniform();
      q(x, y) = s * std::sqrt(pi(y) / pi(x));
      q(y, x) = s * std::sqrt(pi(x) / pi(y));
    }
  q.diagonal() = -q.rowwise().sum();
  return ReversibleChain(validate_rate_matrix(q));
}

KernelTable table_for(std::size_t n) {
  const ReversibleChain chain = random_chain(n, 11);
  KernelTable table{chain.stationary().weights, {}};
  for (double t : {0.5, 1.0, 2.0}) table.kernels.push_back(chain.kernel(t).entries);
  return table;
}

// E(X01(s) X12(t) X02(s+t)) style triple product over 3 indices.
CompiledPolynomial triple_product() {
  return CompiledPolynomial{3, {Term{1.0, {Factor{0, 1, 0, 1}, Factor{1, 2, 1, 1}, Factor{0, 2, 2, 2}}}}};
}

template <double (*F)(const CompiledPolynomial&, const KernelTable&)>
void BM_Expectation(benchmark::State& state) {
  const KernelTable table = table_for(static_cast<std::size_t>(state.range(0)));
  const CompiledPolynomial poly = triple_product();
  for (auto _ : state) benchmark::DoNotOptimize(F(poly, table));
  state.SetComplexityN(state.range(0));
}

template <std::vector<double> (*F)(const MomentDictionary&, const KernelTable&)>
void BM_Dictionary(benchmark::State& state) {
  const KernelTable table = table_for(static_cast<std::size_t>(state.range(0)));
  const MomentDictionary dict = make_dictionary(3, 3, 2);
  for (auto _ : state) benchmark::DoNotOptimize(F(dict, table));
}

template <ArrayDraws (*F)(const KernelTable&, std::size_t, std::uint64_t, std::uint64_t, std::size_t)>
void BM_Draws(benchmark::State& state) {
  const KernelTable table = table_for(20);
  for (auto _ : state) benchmark::DoNotOptimize(F(table, 4, 7, 0, static_cast<std::size_t>(state.range(0))));
}

template <MomentAccumulator (*F)(const MomentDictionary&, const ArrayDraws&, double)>
void BM_Accumulate(benchmark::State& state) {
  const KernelTable table = table_for(20);
  const MomentDictionary dict = make_dictionary(4, 3, 2);
  const ArrayDraws draws = draw_arrays_serial(table, 4, 7, 0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(F(dict, draws, 100.0));
}

}  // namespace

BENCHMARK(BM_Expectation<expectation_serial>)->Name("Expectation/serial")->Arg(10)->Arg(30)->Arg(60);
BENCHMARK(BM_Expectation<expectation_parallel>)->Name("Expectation/parallel")->Arg(10)->Arg(30)->Arg(60);
BENCHMARK(BM_Dictionary<dictionary_moments_serial>)->Name("Dictionary/serial")->Arg(10)->Arg(30);
BENCHMARK(BM_Dictionary<dictionary_moments_parallel>)->Name("Dictionary/parallel")->Arg(10)->Arg(30);
BENCHMARK(BM_Draws<draw_arrays_serial>)->Name("Draws/serial")->Arg(10000)->Arg(100000);
BENCHMARK(BM_Draws<draw_arrays_parallel>)->Name("Draws/parallel")->Arg(10000)->Arg(100000);
BENCHMARK(BM_Accumulate<accumulate_serial>)->Name("Accumulate/serial")->Arg(10000)->Arg(100000);
BENCHMARK(BM_Accumulate<accumulate_parallel>)->Name("Accumulate/parallel")->Arg(10000)->Arg(100000);

BENCHMARK_MAIN();
