#include "chainlab/family.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <utility>

#include <fmt/format.h>

namespace chainlab {

ChainFamily::ChainFamily(std::string name, Generator generator, std::size_t first_index, std::size_t last_index,
                         bool normalized_members)
    : name_(std::move(name)),
      generator_(std::move(generator)),
      first_(first_index),
      last_(last_index),
      normalized_(normalized_members) {
  if (first_ > last_) throw Error(ErrorKind::Precondition, "family index range is empty");
}

FamilyMember ChainFamily::member(std::size_t index) const {
  if (index < first_ || index > last_)
    throw Error(ErrorKind::Precondition,
                fmt::format("{} index {} outside [{}, {}]", name_, index, first_, last_));
  FamilyMember m = generator_(index);
  m.index = index;
  return m;
}

namespace {

// Off-diagonal rates in, diagonal filled so rows sum to zero.
RateMatrix from_entries(Matrix q, std::vector<std::string> labels) {
  q.diagonal().setZero();
  q.diagonal() = -q.rowwise().sum();
  return validate_rate_matrix(q, kDefaultTol, StateSpace{std::move(labels)});
}

FamilyMember two_point(std::size_t n) {
  const double r = 1.0 / static_cast<double>(n);
  Matrix q(2, 2);
  q << -r, r, r, -r;
  return FamilyMember{n, from_entries(q, {"w0", "w1"}), {}, 1.0};
}

// Order w00, w01, w10, w11; the second digit mixes at rate n, the first at rate 1.
FamilyMember four_point(std::size_t n) {
  const double fast = static_cast<double>(n);
  Matrix q = Matrix::Zero(4, 4);
  q(0, 1) = q(1, 0) = q(2, 3) = q(3, 2) = fast;
  q(0, 2) = q(2, 0) = q(1, 3) = q(3, 1) = 1.0;
  return FamilyMember{n, from_entries(q, {"w00", "w01", "w10", "w11"}), {}, 1.0};
}

FamilyMember two_blocks(std::size_t n) {
  const Eigen::Index m = static_cast<Eigen::Index>(n);
  const double cross = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  Matrix q = Matrix::Constant(2 * m, 2 * m, cross);
  q.topLeftCorner(m, m).setOnes();
  q.bottomRightCorner(m, m).setOnes();
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(fmt::format("a{}", i));
  for (std::size_t i = 0; i < n; ++i) labels.push_back(fmt::format("b{}", i));
  return FamilyMember{n, from_entries(q, std::move(labels)), {}, 1.0};
}

FamilyMember hypercube(std::size_t d) {
  const Eigen::Index size = Eigen::Index{1} << d;
  Matrix q = Matrix::Zero(size, size);
  for (Eigen::Index x = 0; x < size; ++x)
    for (std::size_t bit = 0; bit < d; ++bit) q(x, x ^ (Eigen::Index{1} << bit)) = 1.0;
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(size));
  for (Eigen::Index x = 0; x < size; ++x) {
    std::string label(d, '0');
    for (std::size_t bit = 0; bit < d; ++bit)
      if (x & (Eigen::Index{1} << bit)) label[d - 1 - bit] = '1';
    labels.push_back(std::move(label));
  }
  NormalizedChain norm = normalize_chain(from_entries(std::move(q), std::move(labels)));
  return FamilyMember{d, std::move(norm.rate), std::move(norm.generator_spectrum), norm.time_rescale};
}

bool strictly_increasing(const std::vector<double>& v, std::size_t from = 0) {
  for (std::size_t i = from + 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

bool strictly_decreasing(const std::vector<double>& v, std::size_t from = 0) {
  for (std::size_t i = from + 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

std::vector<double> column(const MixingTable& table, std::size_t t) {
  std::vector<double> out;
  out.reserve(table.values.size());
  for (const auto& row : table.values) out.push_back(row[t]);
  return out;
}

CutoffEvidence evaluate_cutoff(std::vector<std::size_t> indices, std::vector<double> g_lo, std::vector<double> g_hi,
                               double t_lo, double t_hi, const TrendThresholds& th) {
  CutoffEvidence ev;
  ev.t_lo = t_lo;
  ev.t_hi = t_hi;
  const std::size_t m = indices.size();
  if (m >= 2) {
    ev.growing_below = strictly_increasing(g_lo) && g_lo.back() - g_lo.front() > th.cutoff_grow;
    std::vector<double> excess(m);
    for (std::size_t i = 0; i < m; ++i) excess[i] = g_hi[i] - 1.0;
    ev.mixing_above = strictly_decreasing(excess) && excess.back() < th.cutoff_mix;
  }
  ev.cutoff = ev.growing_below && ev.mixing_above;
  ev.indices = std::move(indices);
  ev.g_lo = std::move(g_lo);
  ev.g_hi = std::move(g_hi);
  return ev;
}

}  // namespace

ChainFamily builtin_family(std::string_view name, const FamilyParams& params) {
  const std::size_t cap = params.max_index == 0 ? 1000 : params.max_index;
  if (name == "two_point") return ChainFamily("two_point", two_point, 1, cap, false);
  if (name == "four_point") return ChainFamily("four_point", four_point, 1, cap, false);
  if (name == "two_blocks") return ChainFamily("two_blocks", two_blocks, 1, cap, false);
  if (name == "hypercube") {
    const std::size_t d_max = params.max_index == 0 ? kHypercubeDefaultCap : params.max_index;
    if (d_max > kHypercubeHardCap)
      throw Error(ErrorKind::Precondition,
                  fmt::format("hypercube dimension {} exceeds the cap {}", d_max, kHypercubeHardCap));
    ChainFamily family("hypercube", hypercube, 1, d_max, true);
    if (d_max > kHypercubeDefaultCap)
      family.warnings.push_back(fmt::format(
          "DenseCost: hypercube up to d = {} means dense {}x{} eigensolves", d_max, 1u << d_max, 1u << d_max));
    return family;
  }
  throw Error(ErrorKind::UnknownFamily,
              fmt::format("'{}' (expected two_point, four_point, two_blocks or hypercube)", name));
}

ChainFamily normalized(const ChainFamily& family) {
  if (family.normalized_members()) return family;
  auto generator = [family](std::size_t n) {
    FamilyMember m = family.member(n);
    NormalizedChain norm = normalize_chain(m.rate);
    return FamilyMember{n, std::move(norm.rate), std::move(norm.generator_spectrum),
                        m.time_rescale * norm.time_rescale};
  };
  ChainFamily out(family.name() + "/normalized", generator, family.first_index(), family.last_index(), true);
  out.warnings = family.warnings;
  return out;
}

ChainFamily constant_family(RateMatrix q, std::size_t first_index, std::size_t last_index) {
  auto generator = [q = std::move(q)](std::size_t n) { return FamilyMember{n, q, {}, 1.0}; };
  return ChainFamily("constant", generator, first_index, last_index, false);
}

std::vector<std::size_t> default_indices(const ChainFamily& family) {
  std::vector<std::size_t> base;
  if (family.name().rfind("hypercube", 0) == 0)
    base = {4, 5, 6, 7, 8, 9, 10, 11, 12};
  else
    base = {1, 2, 5, 10, 20, 50};
  std::vector<std::size_t> out;
  for (std::size_t n : base)
    if (n >= family.first_index() && n <= family.last_index()) out.push_back(n);
  return out;
}

std::vector<double> default_time_grid() {
  constexpr int points = 25;
  const double lo = std::log(0.05), hi = std::log(5.0);
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) grid[i] = std::exp(lo + (hi - lo) * i / (points - 1));
  grid.front() = 0.05;
  grid.back() = 5.0;
  return grid;
}

double MemberSpectrum::mixing(double t) const { return (generator_spectrum * t).array().exp().sum(); }

double MemberSpectrum::tail(std::size_t k, double t) const {
  const Eigen::Index n = generator_spectrum.size();
  const Eigen::Index from = static_cast<Eigen::Index>(k) + 1;
  if (from >= n) return 0.0;
  return (generator_spectrum.tail(n - from) * t).array().exp().sum();
}

std::vector<MemberSpectrum> member_spectra(const ChainFamily& family, std::span<const std::size_t> indices) {
  std::vector<MemberSpectrum> out(indices.size());
  std::vector<std::exception_ptr> failures(indices.size());
  const long count = static_cast<long>(indices.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    try {
      FamilyMember m = family.member(indices[i]);
      MemberSpectrum& s = out[i];
      s.index = m.index;
      s.states = m.rate.size();
      s.time_rescale = m.time_rescale;
      if (m.generator_spectrum.size() == static_cast<Eigen::Index>(m.rate.size())) {
        s.generator_spectrum = std::move(m.generator_spectrum);
      } else {
        const StationaryDistribution pi = stationary_distribution(m.rate);
        const ReversibilityCheck rev = check_reversibility(m.rate, pi);
        if (!rev.reversible)
          throw Error(ErrorKind::NotReversible,
                      fmt::format("{} member {}: detailed balance violated by {:.3g}", family.name(), m.index,
                                  rev.max_violation));
        s.generator_spectrum = generator_spectrum(m.rate, pi);
      }
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return out;
}

MixingTable mixing_table(std::span<const MemberSpectrum> spectra, std::span<const double> times) {
  MixingTable table;
  table.times.assign(times.begin(), times.end());
  for (const auto& s : spectra) {
    table.indices.push_back(s.index);
    std::vector<double> row;
    row.reserve(times.size());
    for (double t : times) row.push_back(s.mixing(t));
    table.values.push_back(std::move(row));
  }
  return table;
}

MixingTable mixing_table(const ChainFamily& family, std::span<const std::size_t> indices,
                         std::span<const double> times) {
  const auto spectra = member_spectra(family, indices);
  return mixing_table(spectra, times);
}

BoundednessReport boundedness_report(const MixingTable& table, bool normalized_members,
                                     const TrendThresholds& th) {
  BoundednessReport r;
  r.table = table;
  const std::size_t m = table.indices.size();
  const std::size_t nt = table.times.size();
  const std::size_t half = m / 2;
  bool any_growing = false;
  bool anomalous = m >= 2 && nt > 0;
  for (std::size_t t = 0; t < nt; ++t) {
    const std::vector<double> g = column(table, t);
    const double sup = g.empty() ? 0.0 : *std::max_element(g.begin(), g.end());
    r.supremum.push_back(sup);
    r.bound.push_back(sup);
    const bool grows = m - half >= 2 && strictly_increasing(g, half) && g.back() - g[half] > th.growth;
    r.growing.push_back(grows);
    any_growing = any_growing || grows;
    if (anomalous) {
      std::vector<double> gap(m);
      for (std::size_t i = 0; i < m; ++i) gap[i] = std::abs(g[i] - 2.0);
      anomalous = strictly_decreasing(gap) && gap.back() < th.anomaly_ratio * gap.front();
    }
  }
  r.bounded_looking = !any_growing;
  r.anomalous = anomalous;
  r.notes.push_back(fmt::format("trends over {} computed members only; flags are finite-index heuristics", m));
  if (any_growing)
    r.notes.push_back(fmt::format("growth: G increases by more than {:g} over the top half of the index list", th.growth));
  if (anomalous) r.notes.push_back("anomalous: |G - 2| shrinks at every grid time");

  if (normalized_members && m >= 2) {
    std::size_t lo = nt, hi = nt;
    for (std::size_t t = 0; t < nt; ++t) {
      if (table.times[t] < 1.0 && (lo == nt || table.times[t] < table.times[lo])) lo = t;
      if (table.times[t] > 1.0 && (hi == nt || table.times[t] > table.times[hi])) hi = t;
    }
    if (lo < nt && hi < nt) {
      const CutoffEvidence ev =
          evaluate_cutoff(table.indices, column(table, lo), column(table, hi), table.times[lo], table.times[hi], th);
      r.cutoff = ev.cutoff;
      if (ev.cutoff)
        r.notes.push_back(fmt::format("cutoff: G(t={:g}) grows and G(t={:g}) - 1 falls below {:g}", ev.t_lo,
                                      ev.t_hi, th.cutoff_mix));
    }
  }
  return r;
}

BoundednessReport boundedness_report(const ChainFamily& family, std::span<const std::size_t> indices,
                                     std::span<const double> times, const TrendThresholds& th) {
  return boundedness_report(mixing_table(family, indices, times), family.normalized_members(), th);
}

CutoffEvidence cutoff_detector(std::span<const MemberSpectrum> spectra, double t_lo, double t_hi,
                               const TrendThresholds& th) {
  if (!(t_lo > 0.0 && t_lo < 1.0 && t_hi > 1.0))
    throw Error(ErrorKind::Precondition, fmt::format("need 0 < t_lo < 1 < t_hi, got {:g} and {:g}", t_lo, t_hi));
  std::vector<std::size_t> indices;
  std::vector<double> g_lo, g_hi;
  for (const auto& s : spectra) {
    const double g1 = s.mixing(1.0);
    if (std::abs(g1 - 2.0) > 1e-6)
      throw Error(ErrorKind::NotNormalized, fmt::format("member {} has G(1) = {:.10g}", s.index, g1));
    indices.push_back(s.index);
    g_lo.push_back(s.mixing(t_lo));
    g_hi.push_back(s.mixing(t_hi));
  }
  return evaluate_cutoff(std::move(indices), std::move(g_lo), std::move(g_hi), t_lo, t_hi, th);
}

CutoffEvidence cutoff_detector(const ChainFamily& family, std::span<const std::size_t> indices, double t_lo,
                               double t_hi, const TrendThresholds& th) {
  const auto spectra = member_spectra(family, indices);
  return cutoff_detector(spectra, t_lo, t_hi, th);
}

std::vector<TailRow> tail_profile(const ChainFamily& family, std::span<const std::size_t> indices, std::size_t k,
                                  double t) {
  std::vector<TailRow> rows;
  for (const auto& s : member_spectra(family, indices)) rows.push_back(TailRow{s.index, k, t, s.tail(k, t)});
  return rows;
}

}  // namespace chainlab
