#include "chainlab/quotient.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "chainlab/reconstruction.hpp"

namespace chainlab {

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) noexcept {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const std::size_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  void unite(std::size_t a, std::size_t b) noexcept {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned char> rank_;
};

void check_state(const ReversibleChain& chain, std::size_t x) {
  if (x >= chain.size())
    throw Error(ErrorKind::Precondition, fmt::format("state index {} out of range for {} states", x, chain.size()));
}

double row_distance(const Matrix& half, const Vector& pi, Eigen::Index x, Eigen::Index y) {
  return std::sqrt((pi.array() * (half.row(x) - half.row(y)).transpose().array().square()).sum());
}

}  // namespace

TypeVector type_of(const Spectrum& spec, std::size_t state) {
  if (state >= spec.size()) throw Error(ErrorKind::Precondition, "state index out of range");
  return TypeVector{spec.eigenvectors.row(static_cast<Eigen::Index>(state)).transpose()};
}

double twin_distance(const ReversibleChain& chain, std::size_t x, std::size_t y) {
  check_state(chain, x);
  check_state(chain, y);
  if (x == y) return 0.0;
  return row_distance(chain.kernel(0.5).entries, chain.stationary().weights, static_cast<Eigen::Index>(x),
                      static_cast<Eigen::Index>(y));
}

Matrix twin_distance_matrix(const ReversibleChain& chain) {
  const Matrix half = chain.kernel(0.5).entries;
  const Vector& pi = chain.stationary().weights;
  const Eigen::Index n = half.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = x + 1; y < n; ++y) d(x, y) = d(y, x) = row_distance(half, pi, x, y);
  return d;
}

double spectral_twin_distance(const Spectrum& spec, std::size_t x, std::size_t y) {
  const Vector diff = spec.eigenvectors.row(static_cast<Eigen::Index>(x)) -
                      spec.eigenvectors.row(static_cast<Eigen::Index>(y));
  return std::sqrt((spec.eigenvalues.array() * diff.array().square()).sum());
}

ReversibleChain split_state(const ReversibleChain& chain, std::size_t state, double alpha) {
  check_state(chain, state);
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorKind::Precondition, fmt::format("split fraction {} must lie strictly in (0, 1)", alpha));
  const Eigen::Index n = static_cast<Eigen::Index>(chain.size());
  const Eigen::Index s = static_cast<Eigen::Index>(state);
  auto source = [&](Eigen::Index x) { return x == n ? s : x; };

  const Vector& pi = chain.stationary().weights;
  Vector pi2(n + 1);
  pi2.head(n) = pi;
  pi2(s) = alpha * pi(s);
  pi2(n) = (1.0 - alpha) * pi(s);

  const Matrix k1 = chain.kernel(1.0).entries;
  Matrix p(n + 1, n + 1);
  for (Eigen::Index x = 0; x <= n; ++x)
    for (Eigen::Index y = 0; y <= n; ++y) p(x, y) = k1(source(x), source(y)) * pi2(y);

  StateSpace states = chain.states();
  const std::string base = states.labels[state];
  std::string second = base + "_2";
  for (int suffix = 3; std::find(states.labels.begin(), states.labels.end(), second) != states.labels.end(); ++suffix)
    second = fmt::format("{}_{}", base, suffix);
  states.labels[state] = base + "_1";
  states.labels.push_back(second);

  // The new mode is an exact zero of P_1; modes already at the null rate from
  // earlier splits must stay there too.
  MatrixLogOptions opts;
  const double null_rate = std::log(opts.null_value);
  opts.null_modes = 1 + static_cast<std::size_t>(
                            (chain.generator_eigenvalues().array() <= 0.5 * null_rate).count());
  auto log = matrix_log(p, pi2, opts, std::move(states));
  return ReversibleChain(std::move(log.rate), StationaryDistribution{pi2}, 1e-8);
}

StatePartition identity_partition(std::size_t n) {
  StatePartition p;
  p.block_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.blocks.push_back({i});
    p.block_of[i] = i;
  }
  return p;
}

StatePartition find_twins(const ReversibleChain& chain, double tol) {
  const std::size_t n = chain.size();
  const Matrix d = twin_distance_matrix(chain);
  UnionFind uf(n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = x + 1; y < n; ++y)
      if (d(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) <= tol) uf.unite(x, y);

  StatePartition p;
  p.tol = tol;
  p.block_of.assign(n, 0);
  std::vector<std::size_t> root_block(n, n);
  for (std::size_t x = 0; x < n; ++x) {
    const std::size_t r = uf.find(x);
    if (root_block[r] == n) {
      root_block[r] = p.blocks.size();
      p.blocks.emplace_back();
    }
    p.block_of[x] = root_block[r];
    p.blocks[root_block[r]].push_back(x);
  }
  for (const auto& block : p.blocks)
    for (std::size_t a = 0; a < block.size(); ++a)
      for (std::size_t b = a + 1; b < block.size(); ++b)
        p.max_intra_distance = std::max(
            p.max_intra_distance, d(static_cast<Eigen::Index>(block[a]), static_cast<Eigen::Index>(block[b])));
  if (p.max_intra_distance > tol)
    p.warnings.push_back(fmt::format("ChainedMerge: a block has diameter {:.6g} above tol {:g}",
                                     p.max_intra_distance, tol));
  if (n > 1 && p.blocks.size() == 1)
    p.warnings.push_back(fmt::format("ChainedMerge: all {} states collapsed into a single block", n));
  return p;
}

ReversibleChain quotient_chain(const ReversibleChain& chain, const StatePartition& partition) {
  const std::size_t n = chain.size();
  if (partition.block_of.size() != n)
    throw Error(ErrorKind::Precondition, "partition does not cover the state space");
  {
    std::vector<int> hits(n, 0);
    for (std::size_t b = 0; b < partition.blocks.size(); ++b) {
      if (partition.blocks[b].empty()) throw Error(ErrorKind::Precondition, "partition has an empty block");
      for (std::size_t x : partition.blocks[b]) {
        if (x >= n || partition.block_of[x] != b)
          throw Error(ErrorKind::Precondition, "partition blocks and block_of disagree");
        ++hits[x];
      }
    }
    if (std::any_of(hits.begin(), hits.end(), [](int h) { return h != 1; }))
      throw Error(ErrorKind::Precondition, "partition is not an exact cover");
  }
  bool identity = partition.blocks.size() == n;
  for (std::size_t b = 0; identity && b < n; ++b) identity = partition.blocks[b][0] == b;
  if (identity) return chain;
  if (partition.blocks.size() < 2)
    throw Error(ErrorKind::Degenerate, "quotient by a single block leaves a 1-state chain");

  const Eigen::Index nb = static_cast<Eigen::Index>(partition.blocks.size());
  const Vector& pi = chain.stationary().weights;
  const Matrix k1 = chain.kernel(1.0).entries;
  Vector mass = Vector::Zero(nb);
  for (std::size_t x = 0; x < n; ++x) mass(static_cast<Eigen::Index>(partition.block_of[x])) += pi(static_cast<Eigen::Index>(x));

  Matrix flow = Matrix::Zero(nb, nb);  // sum pi(x) pi(y) p_1(x, y) per block pair
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      flow(static_cast<Eigen::Index>(partition.block_of[x]), static_cast<Eigen::Index>(partition.block_of[y])) +=
          pi(static_cast<Eigen::Index>(x)) * pi(static_cast<Eigen::Index>(y)) *
          k1(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  // P'(A, B) = p'(A, B) pi(B) = flow(A, B) / pi(A)
  const Matrix p = mass.cwiseInverse().asDiagonal() * flow;

  StateSpace states;
  for (const auto& block : partition.blocks) {
    std::string label;
    for (std::size_t x : block) {
      if (!label.empty()) label += "+";
      label += chain.states().labels[x];
    }
    states.labels.push_back(std::move(label));
  }
  auto log = matrix_log(p, mass, MatrixLogOptions{}, std::move(states));
  return ReversibleChain(std::move(log.rate), StationaryDistribution{mass}, 1e-8);
}

Realizers almost_realizers(const Spectrum& spec, const TypeVector& q, std::span<const std::size_t> indices,
                           double eps) {
  for (std::size_t i : indices)
    if (i >= spec.size() || static_cast<Eigen::Index>(i) >= q.coordinates.size())
      throw Error(ErrorKind::Precondition, fmt::format("type coordinate {} out of range", i));
  Realizers r;
  for (std::size_t x = 0; x < spec.size(); ++x) {
    bool ok = true;
    for (std::size_t i : indices) {
      const double diff = q.coordinates(static_cast<Eigen::Index>(i)) -
                          spec.eigenvectors(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(i));
      if (!(std::abs(diff) < eps)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      r.states.push_back(x);
      r.measure += spec.base_measure.weights(static_cast<Eigen::Index>(x));
    }
  }
  return r;
}

}  // namespace chainlab
