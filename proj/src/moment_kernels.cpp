#include "chainlab/moment_kernels.hpp"

#include <algorithm>
#include <cmath>

#include "chainlab/rng.hpp"

namespace chainlab::kernels {

namespace {

double int_power(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

double evaluate(const CompiledPolynomial& poly, const KernelTable& table, const std::vector<int>& x) {
  double total = 0.0;
  for (const auto& term : poly.terms) {
    double v = term.coef;
    for (const auto& f : term.factors)
      v *= int_power(table.kernels[static_cast<std::size_t>(f.slot)](x[static_cast<std::size_t>(f.a)],
                                                                     x[static_cast<std::size_t>(f.b)]),
                     f.power);
    total += v;
  }
  return total;
}

// sum_{v} pi(v) * level_sum(pos + 1) with x[pos] = v; the leaf is the polynomial.
double level_sum(const CompiledPolynomial& poly, const KernelTable& table, std::vector<int>& x,
                 std::size_t pos) {
  if (pos == x.size()) return evaluate(poly, table, x);
  const Eigen::Index n = table.pi.size();
  double acc = 0.0;
  for (Eigen::Index v = 0; v < n; ++v) {
    x[pos] = static_cast<int>(v);
    acc += table.pi(v) * level_sum(poly, table, x, pos + 1);
  }
  return acc;
}

}  // namespace

double expectation_serial(const CompiledPolynomial& poly, const KernelTable& table) {
  std::vector<int> x(static_cast<std::size_t>(poly.arity), 0);
  return level_sum(poly, table, x, 0);
}

double expectation_parallel(const CompiledPolynomial& poly, const KernelTable& table) {
  if (poly.arity == 0) return expectation_serial(poly, table);
  const int n = static_cast<int>(table.pi.size());
  std::vector<double> partial(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int v = 0; v < n; ++v) {
    std::vector<int> x(static_cast<std::size_t>(poly.arity), 0);
    x[0] = v;
    partial[static_cast<std::size_t>(v)] = table.pi(v) * level_sum(poly, table, x, 1);
  }
  double acc = 0.0;
  for (double p : partial) acc += p;
  return acc;
}

std::vector<int> MomentDictionary::factors(std::size_t m) const {
  std::vector<int> out;
  for (int cur = static_cast<int>(m); cur >= 0; cur = parent[static_cast<std::size_t>(cur)])
    out.push_back(last[static_cast<std::size_t>(cur)]);
  std::reverse(out.begin(), out.end());
  return out;
}

MomentDictionary make_dictionary(int k, int slots, int degree) {
  MomentDictionary d;
  d.arity = k;
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j)
      for (int s = 0; s < slots; ++s) d.variables.push_back({i, j, s});
  const int nv = static_cast<int>(d.variables.size());
  // Breadth-first by degree so parents always precede children.
  std::size_t level_begin = 0;
  for (int v = 0; v < nv; ++v) {
    d.parent.push_back(-1);
    d.last.push_back(v);
    d.degree.push_back(1);
  }
  for (int deg = 2; deg <= degree; ++deg) {
    const std::size_t level_end = d.parent.size();
    for (std::size_t m = level_begin; m < level_end; ++m) {
      for (int v = d.last[m]; v < nv; ++v) {
        d.parent.push_back(static_cast<int>(m));
        d.last.push_back(v);
        d.degree.push_back(deg);
      }
    }
    level_begin = level_end;
  }
  return d;
}

namespace {

void leaf_values(const MomentDictionary& dict, const KernelTable& table, const std::vector<int>& x,
                 std::vector<double>& vars, std::vector<double>& mono) {
  for (std::size_t v = 0; v < dict.variables.size(); ++v) {
    const auto& var = dict.variables[v];
    vars[v] = table.kernels[static_cast<std::size_t>(var.slot)](x[static_cast<std::size_t>(var.i)],
                                                                x[static_cast<std::size_t>(var.j)]);
  }
  for (std::size_t m = 0; m < dict.size(); ++m) {
    const int p = dict.parent[m];
    const double base = p < 0 ? 1.0 : mono[static_cast<std::size_t>(p)];
    mono[m] = base * vars[static_cast<std::size_t>(dict.last[m])];
  }
}

// Reference leaf: each monomial multiplied out from its factor list, in the
// same left-to-right order the tree uses.
void leaf_values_direct(const MomentDictionary& dict, const KernelTable& table, const std::vector<int>& x,
                        std::vector<double>& mono) {
  for (std::size_t m = 0; m < dict.size(); ++m) {
    double v = 1.0;
    for (int f : dict.factors(m)) {
      const auto& var = dict.variables[static_cast<std::size_t>(f)];
      v *= table.kernels[static_cast<std::size_t>(var.slot)](x[static_cast<std::size_t>(var.i)],
                                                             x[static_cast<std::size_t>(var.j)]);
    }
    mono[m] = v;
  }
}

template <class Leaf>
void dictionary_level(const MomentDictionary& dict, const KernelTable& table, std::vector<int>& x,
                      std::size_t pos, std::vector<std::vector<double>>& scratch, const Leaf& leaf) {
  std::vector<double>& out = scratch[pos];
  if (pos == x.size()) {
    leaf(x, out);
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  const Eigen::Index n = table.pi.size();
  for (Eigen::Index v = 0; v < n; ++v) {
    x[pos] = static_cast<int>(v);
    dictionary_level(dict, table, x, pos + 1, scratch, leaf);
    const std::vector<double>& below = scratch[pos + 1];
    const double w = table.pi(v);
    for (std::size_t m = 0; m < out.size(); ++m) out[m] += w * below[m];
  }
}

}  // namespace

std::vector<double> dictionary_moments_serial(const MomentDictionary& dict, const KernelTable& table) {
  const std::size_t arity = static_cast<std::size_t>(dict.arity);
  std::vector<int> x(arity, 0);
  std::vector<std::vector<double>> scratch(arity + 1, std::vector<double>(dict.size(), 0.0));
  auto leaf = [&](const std::vector<int>& xs, std::vector<double>& out) {
    leaf_values_direct(dict, table, xs, out);
  };
  dictionary_level(dict, table, x, 0, scratch, leaf);
  return scratch[0];
}

std::vector<double> dictionary_moments_parallel(const MomentDictionary& dict, const KernelTable& table) {
  const std::size_t arity = static_cast<std::size_t>(dict.arity);
  if (arity == 0) return dictionary_moments_serial(dict, table);
  const int n = static_cast<int>(table.pi.size());
  const std::size_t m_count = dict.size();
  std::vector<double> partial(static_cast<std::size_t>(n) * m_count, 0.0);
#pragma omp parallel
  {
    std::vector<int> x(arity, 0);
    std::vector<std::vector<double>> scratch(arity + 1, std::vector<double>(m_count, 0.0));
    std::vector<double> vars(dict.variables.size(), 0.0);
    auto leaf = [&](const std::vector<int>& xs, std::vector<double>& out) {
      leaf_values(dict, table, xs, vars, out);
    };
#pragma omp for schedule(dynamic)
    for (int v = 0; v < n; ++v) {
      x[0] = v;
      dictionary_level(dict, table, x, 1, scratch, leaf);
      const double w = table.pi(v);
      double* dst = partial.data() + static_cast<std::size_t>(v) * m_count;
      for (std::size_t m = 0; m < m_count; ++m) dst[m] = w * scratch[1][m];
    }
  }
  std::vector<double> out(m_count, 0.0);
  for (int v = 0; v < n; ++v) {
    const double* src = partial.data() + static_cast<std::size_t>(v) * m_count;
    for (std::size_t m = 0; m < m_count; ++m) out[m] += src[m];
  }
  return out;
}

namespace {

void draw_one(const KernelTable& table, const DiscreteSampler& sampler, std::size_t k, std::uint64_t seed,
              std::uint64_t lane, std::size_t r, ArrayDraws& out) {
  CounterRng rng(seed, static_cast<std::uint64_t>(r) * kStreamsPerReplicate + lane);
  std::size_t* states = out.states.data() + r * k;
  for (std::size_t i = 0; i < k; ++i) states[i] = sampler(rng);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t s = 0; s < out.slots; ++s)
        out.values[((r * k + i) * k + j) * out.slots + s] =
            table.kernels[s](static_cast<Eigen::Index>(states[i]), static_cast<Eigen::Index>(states[j]));
}

ArrayDraws empty_draws(const KernelTable& table, std::size_t k, std::size_t replicates) {
  ArrayDraws d;
  d.k = k;
  d.slots = table.kernels.size();
  d.replicates = replicates;
  d.states.assign(replicates * k, 0);
  d.values.assign(replicates * k * k * d.slots, 0.0);
  return d;
}

}  // namespace

ArrayDraws draw_arrays_serial(const KernelTable& table, std::size_t k, std::uint64_t seed, std::uint64_t lane,
                              std::size_t replicates) {
  ArrayDraws d = empty_draws(table, k, replicates);
  const DiscreteSampler sampler({table.pi.data(), static_cast<std::size_t>(table.pi.size())});
  for (std::size_t r = 0; r < replicates; ++r) draw_one(table, sampler, k, seed, lane, r, d);
  return d;
}

ArrayDraws draw_arrays_parallel(const KernelTable& table, std::size_t k, std::uint64_t seed,
                                std::uint64_t lane, std::size_t replicates) {
  ArrayDraws d = empty_draws(table, k, replicates);
  const DiscreteSampler sampler({table.pi.data(), static_cast<std::size_t>(table.pi.size())});
  const long long count = static_cast<long long>(replicates);
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < count; ++r) draw_one(table, sampler, k, seed, lane, static_cast<std::size_t>(r), d);
  return d;
}

namespace {

constexpr std::size_t kBlock = 1024;

void accumulate_block(const MomentDictionary& dict, const ArrayDraws& draws, double clip, std::size_t begin,
                      std::size_t end, double* sum, double* sum_sq) {
  std::vector<double> vars(dict.variables.size());
  std::vector<double> mono(dict.size());
  for (std::size_t r = begin; r < end; ++r) {
    for (std::size_t v = 0; v < vars.size(); ++v) {
      const auto& var = dict.variables[v];
      const double x = draws.value(r, static_cast<std::size_t>(var.i), static_cast<std::size_t>(var.j),
                                   static_cast<std::size_t>(var.slot));
      vars[v] = std::clamp(x, -clip, clip);
    }
    for (std::size_t m = 0; m < dict.size(); ++m) {
      const int p = dict.parent[m];
      mono[m] = (p < 0 ? 1.0 : mono[static_cast<std::size_t>(p)]) * vars[static_cast<std::size_t>(dict.last[m])];
      sum[m] += mono[m];
      sum_sq[m] += mono[m] * mono[m];
    }
  }
}

MomentAccumulator combine(const std::vector<double>& block_sum, const std::vector<double>& block_sq,
                          std::size_t blocks, std::size_t m_count, std::size_t count) {
  MomentAccumulator acc;
  acc.sum.assign(m_count, 0.0);
  acc.sum_sq.assign(m_count, 0.0);
  acc.count = count;
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t m = 0; m < m_count; ++m) {
      acc.sum[m] += block_sum[b * m_count + m];
      acc.sum_sq[m] += block_sq[b * m_count + m];
    }
  }
  return acc;
}

}  // namespace

MomentAccumulator accumulate_serial(const MomentDictionary& dict, const ArrayDraws& draws, double clip) {
  const std::size_t blocks = (draws.replicates + kBlock - 1) / kBlock;
  const std::size_t m_count = dict.size();
  std::vector<double> block_sum(blocks * m_count, 0.0), block_sq(blocks * m_count, 0.0);
  for (std::size_t b = 0; b < blocks; ++b)
    accumulate_block(dict, draws, clip, b * kBlock, std::min(draws.replicates, (b + 1) * kBlock),
                     block_sum.data() + b * m_count, block_sq.data() + b * m_count);
  return combine(block_sum, block_sq, blocks, m_count, draws.replicates);
}

MomentAccumulator accumulate_parallel(const MomentDictionary& dict, const ArrayDraws& draws, double clip) {
  const std::size_t blocks = (draws.replicates + kBlock - 1) / kBlock;
  const std::size_t m_count = dict.size();
  std::vector<double> block_sum(blocks * m_count, 0.0), block_sq(blocks * m_count, 0.0);
  const long long nb = static_cast<long long>(blocks);
#pragma omp parallel for schedule(dynamic)
  for (long long bb = 0; bb < nb; ++bb) {
    const std::size_t b = static_cast<std::size_t>(bb);
    accumulate_block(dict, draws, clip, b * kBlock, std::min(draws.replicates, (b + 1) * kBlock),
                     block_sum.data() + b * m_count, block_sq.data() + b * m_count);
  }
  return combine(block_sum, block_sq, blocks, m_count, draws.replicates);
}

}  // namespace chainlab::kernels
