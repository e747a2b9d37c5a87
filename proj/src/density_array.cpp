#include "chainlab/density_array.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "chainlab/moment_kernels.hpp"
#include "chainlab/rng.hpp"
#include "chainlab/spectral.hpp"

namespace chainlab {

namespace {

kernels::KernelTable kernel_table(const ArrayKernel& source, std::span<const double> times) {
  kernels::KernelTable table;
  table.pi = source.pi;
  for (double t : times) {
    if (!(t > 0.0)) throw Error(ErrorKind::Precondition, fmt::format("array time {} must be positive", t));
    table.kernels.push_back(source.kernel(t));
  }
  return table;
}

kernels::KernelTable kernel_table(const ReversibleChain& chain, std::span<const double> times) {
  return kernel_table(array_kernel(chain), times);
}

struct Compiled {
  kernels::CompiledPolynomial poly;
  std::vector<double> times;
};

Compiled compile(const Polynomial& p) {
  std::vector<std::size_t> indices;
  std::vector<double> times;
  for (const auto& term : p.terms) {
    for (const auto& f : term.monomial.factors) {
      indices.push_back(f.i);
      indices.push_back(f.j);
      times.push_back(f.t);
    }
  }
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (indices.size() > kMaxMomentIndices)
    throw Error(ErrorKind::TooManyIndices, fmt::format("{} distinct array indices; at most {} supported",
                                                       indices.size(), kMaxMomentIndices));
  auto position = [](const auto& sorted, auto value) {
    return static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), value) - sorted.begin());
  };
  Compiled out;
  out.poly.arity = static_cast<int>(indices.size());
  for (const auto& term : p.terms) {
    kernels::Term t;
    t.coef = term.coef;
    for (const auto& f : term.monomial.factors) {
      if (f.multiplicity == 0) continue;
      t.factors.push_back({position(indices, f.i), position(indices, f.j), position(times, f.t),
                           static_cast<int>(f.multiplicity)});
    }
    out.poly.terms.push_back(std::move(t));
  }
  out.times = std::move(times);
  return out;
}

MonomialSpec mono(std::initializer_list<MonomialFactor> factors) { return MonomialSpec{factors}; }

std::string variable_label(const kernels::Variable& v, std::span<const double> times) {
  return fmt::format("X{}{}({:g})", v.i, v.j, times[static_cast<std::size_t>(v.slot)]);
}

}  // namespace

ArrayKernel array_kernel(const ReversibleChain& chain) {
  return ArrayKernel{chain.stationary().weights, [chain](double t) { return chain.kernel(t).entries; },
                     [chain](double t) { return chain.mixing(t); }};
}

double exact_expectation(const ArrayKernel& source, const Polynomial& p) {
  const Compiled c = compile(p);
  const auto table = kernel_table(source, c.times);
  return kernels::expectation_parallel(c.poly, table);
}

double exact_expectation(const ReversibleChain& chain, const Polynomial& p) {
  return exact_expectation(array_kernel(chain), p);
}

double exact_moment(const ReversibleChain& chain, const MonomialSpec& m) {
  return exact_expectation(chain, Polynomial{{PolynomialTerm{1.0, m}}});
}

ArraySample sample_array(const ReversibleChain& chain, std::size_t k, std::span<const double> times,
                         std::uint64_t seed, std::size_t replicates) {
  if (k == 0) throw Error(ErrorKind::Precondition, "array sample needs k >= 1");
  const auto table = kernel_table(chain, times);
  auto draws = kernels::draw_arrays_parallel(table, k, seed, 0, replicates);
  ArraySample s;
  s.k = k;
  s.times.assign(times.begin(), times.end());
  s.seed = seed;
  s.replicates = replicates;
  s.rng_algorithm = std::string(kRngAlgorithm);
  s.states = std::move(draws.states);
  s.values = std::move(draws.values);
  return s;
}

bool MomentReport::all_passed() const noexcept {
  return std::all_of(entries.begin(), entries.end(), [](const MomentEntry& e) { return e.passed; });
}

void MomentReport::require_pass() const {
  for (const auto& e : entries) {
    if (!e.passed)
      throw Error(ErrorKind::AxiomViolation,
                  fmt::format("{} = {:.12g}, expected {:.12g} +- {:g}", e.key, e.value, e.target, tol));
  }
}

MomentReport axiom_report(const ReversibleChain& chain, std::span<const double> times, double tol) {
  return axiom_report(array_kernel(chain), times, tol);
}

MomentReport axiom_report(const ArrayKernel& chain, std::span<const double> times, double tol) {
  MomentReport report;
  report.times.assign(times.begin(), times.end());
  report.tol = tol;
  auto add = [&](std::string key, double value, double target) {
    report.entries.push_back({std::move(key), value, target, std::abs(value - target) <= tol});
  };

  for (double t : times) {
    const Polynomial stoch{{{2.0, mono({{0, 1, t}})}, {-1.0, mono({{0, 1, t}, {0, 2, t}})}}};
    add(fmt::format("stochasticity(t={:g})", t), exact_expectation(chain, stoch), 1.0);
  }
  for (double t : times) {
    const Polynomial sym{{{1.0, mono({{1, 0, t, 2}})},
                          {-2.0, mono({{1, 0, t}, {0, 1, t}})},
                          {1.0, mono({{0, 1, t, 2}})}}};
    add(fmt::format("symmetry(t={:g})", t), exact_expectation(chain, sym), 0.0);
  }
  for (double s : times) {
    for (double t : times) {
      const Polynomial ck{{{1.0, mono({{0, 1, s + t, 2}})},
                           {-2.0, mono({{0, 1, s + t}, {0, 2, s}, {2, 1, t}})},
                           {1.0, mono({{0, 2, s}, {0, 3, s}, {2, 1, t}, {3, 1, t}})}}};
      add(fmt::format("chapman_kolmogorov(s={:g},t={:g})", s, t), exact_expectation(chain, ck), 0.0);
      const Polynomial dck{{{1.0, mono({{0, 0, s + t, 2}})},
                            {-2.0, mono({{0, 0, s + t}, {0, 2, s}, {2, 0, t}})},
                            {1.0, mono({{0, 2, s}, {0, 3, s}, {2, 0, t}, {3, 0, t}})}}};
      add(fmt::format("diagonal_chapman_kolmogorov(s={:g},t={:g})", s, t), exact_expectation(chain, dck),
          0.0);
    }
  }
  auto moment = [&](const MonomialSpec& m) { return exact_expectation(chain, Polynomial{{PolynomialTerm{1.0, m}}}); };
  add("normality", moment(mono({{0, 0, 1.0}})), 2.0);
  for (double t : times) add(fmt::format("boundedness(t={:g})", t), moment(mono({{0, 0, t}})), chain.mixing(t));
  for (std::size_t g = 1; g < times.size(); ++g) {
    const double s = times[g - 1];
    const double t = times[g];
    if (s == t) continue;
    const Polynomial cont{{{1.0, mono({{0, 1, t, 2}})},
                           {-2.0, mono({{0, 1, t}, {0, 1, s}})},
                           {1.0, mono({{0, 1, s, 2}})}}};
    const double l2 = l2_norm(chain.kernel(t) - chain.kernel(s), chain.pi);
    add(fmt::format("continuity(s={:g},t={:g})", s, t), exact_expectation(chain, cont), l2 * l2);
  }
  return report;
}

ArrayDistance array_distance_detail(const ReversibleChain& a, const ReversibleChain& b, std::size_t k,
                                    std::span<const double> times, unsigned degree) {
  if (k == 0) throw Error(ErrorKind::Precondition, "array distance needs k >= 1");
  if (k > kMaxMomentIndices)
    throw Error(ErrorKind::TooManyIndices,
                fmt::format("k = {} exceeds the exact-moment limit {}", k, kMaxMomentIndices));
  if (times.empty() || degree == 0) return {};
  const auto dict = kernels::make_dictionary(static_cast<int>(k), static_cast<int>(times.size()),
                                             static_cast<int>(degree));
  ArrayDistance out;
  out.moments_a = kernels::dictionary_moments_parallel(dict, kernel_table(a, times));
  out.moments_b = kernels::dictionary_moments_parallel(dict, kernel_table(b, times));
  for (std::size_t m = 0; m < dict.size(); ++m) {
    const double d = std::abs(out.moments_a[m] - out.moments_b[m]);
    if (d > out.distance) {
      out.distance = d;
      out.argmax = m;
    }
  }
  std::string label;
  for (int f : dict.factors(out.argmax)) {
    if (!label.empty()) label += "*";
    label += variable_label(dict.variables[static_cast<std::size_t>(f)], times);
  }
  out.argmax_label = std::move(label);
  return out;
}

double array_distance(const ReversibleChain& a, const ReversibleChain& b, std::size_t k,
                      std::span<const double> times, unsigned degree) {
  return array_distance_detail(a, b, k, times, degree).distance;
}

EmpiricalDistance empirical_distance(const ReversibleChain& a, const ReversibleChain& b, std::size_t k,
                                     std::span<const double> times, std::uint64_t seed,
                                     std::size_t replicates, unsigned degree) {
  if (k == 0) throw Error(ErrorKind::Precondition, "empirical distance needs k >= 1");
  if (replicates < 2) throw Error(ErrorKind::Precondition, "empirical distance needs at least 2 replicates");
  if (times.empty() || degree == 0) return {};
  const auto table_a = kernel_table(a, times);
  const auto table_b = kernel_table(b, times);
  double max_diag = 0.0;
  for (const auto* table : {&table_a, &table_b})
    for (const auto& m : table->kernels) max_diag = std::max(max_diag, m.diagonal().maxCoeff());

  EmpiricalDistance out;
  out.clip = 10.0 * max_diag;
  const auto dict = kernels::make_dictionary(static_cast<int>(k), static_cast<int>(times.size()),
                                             static_cast<int>(degree));
  const auto acc_a = kernels::accumulate_parallel(dict, kernels::draw_arrays_parallel(table_a, k, seed, 0, replicates),
                                                  out.clip);
  const auto acc_b = kernels::accumulate_parallel(dict, kernels::draw_arrays_parallel(table_b, k, seed, 1, replicates),
                                                  out.clip);
  const double r = static_cast<double>(replicates);
  auto stats = [r](const kernels::MomentAccumulator& acc, std::size_t m) {
    const double mean = acc.sum[m] / r;
    const double var = std::max(0.0, (acc.sum_sq[m] - r * mean * mean) / (r - 1.0));
    return std::pair{mean, var};
  };
  out.estimate = -1.0;
  for (std::size_t m = 0; m < dict.size(); ++m) {
    const auto [mean_a, var_a] = stats(acc_a, m);
    const auto [mean_b, var_b] = stats(acc_b, m);
    const double d = std::abs(mean_a - mean_b);
    if (d > out.estimate) {
      out.estimate = d;
      out.argmax = m;
      out.standard_error = std::sqrt(var_a / r + var_b / r);
    }
  }
  return out;
}

}  // namespace chainlab
