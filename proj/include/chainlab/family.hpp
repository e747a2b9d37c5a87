#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chainlab/chain_core.hpp"

namespace chainlab {

struct FamilyMember {
  std::size_t index = 0;
  RateMatrix rate;
  // Optional cached generator_spectrum of `rate` (empty when not known).
  Vector generator_spectrum;
  double time_rescale = 1.0;
};

class ChainFamily {
 public:
  using Generator = std::function<FamilyMember(std::size_t)>;

  ChainFamily(std::string name, Generator generator, std::size_t first_index, std::size_t last_index,
              bool normalized_members);

  const std::string& name() const noexcept { return name_; }
  std::size_t first_index() const noexcept { return first_; }
  std::size_t last_index() const noexcept { return last_; }
  bool normalized_members() const noexcept { return normalized_; }

  // Throws Precondition outside [first_index, last_index].
  FamilyMember member(std::size_t index) const;

  std::vector<std::string> warnings;

 private:
  std::string name_;
  Generator generator_;
  std::size_t first_;
  std::size_t last_;
  bool normalized_;
};

struct FamilyParams {
  // Largest index the family accepts; 0 picks the family default.
  std::size_t max_index = 0;
};

// Hypercube members are dense 2^d x 2^d matrices; d is capped here.
inline constexpr std::size_t kHypercubeDefaultCap = 12;
inline constexpr std::size_t kHypercubeHardCap = 14;

// two_point: Q(0, 1) = Q(1, 0) = 1/n.
// four_point: states 00, 01, 10, 11; rate n between i0 and i1, rate 1 between 0i and 1i.
// two_blocks: two complete-graph blocks of n states, rate 1 inside a block,
//   rate 1/n^2 between every cross-block pair.
// hypercube: walk on {0,1}^d flipping each coordinate at rate r_d, each member
//   normalized so that G(1) = 2.
// Throws UnknownFamily.
ChainFamily builtin_family(std::string_view name, const FamilyParams& params = {});

// Applies normalize_chain to every member.
ChainFamily normalized(const ChainFamily& family);

// The same chain at every index.
ChainFamily constant_family(RateMatrix q, std::size_t first_index = 1, std::size_t last_index = 1000);

std::vector<std::size_t> default_indices(const ChainFamily& family);
// 25 log-spaced points in [0.05, 5].
std::vector<double> default_time_grid();

struct MemberSpectrum {
  std::size_t index = 0;
  std::size_t states = 0;
  Vector generator_spectrum;  // descending, mu_0 = 0
  double time_rescale = 1.0;

  double mixing(double t) const;
  // sum_{i > k} exp(mu_i t) = sum_{i > k} lambda_i^t
  double tail(std::size_t k, double t) const;
};

// Members are independent and evaluated in parallel.
std::vector<MemberSpectrum> member_spectra(const ChainFamily& family, std::span<const std::size_t> indices);

struct MixingTable {
  std::vector<std::size_t> indices;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // values[member][time] = G_(n)(t)
};

MixingTable mixing_table(std::span<const MemberSpectrum> spectra, std::span<const double> times);
MixingTable mixing_table(const ChainFamily& family, std::span<const std::size_t> indices,
                         std::span<const double> times);

struct TrendThresholds {
  // Growth flag: G increases strictly over the top half of the index list, by more than this.
  double growth = 1.0;
  // Anomalous flag: at every t, |G - 2| shrinks strictly over the top half and
  // ends below anomaly_ratio times its value at the first index.
  double anomaly_ratio = 0.5;
  // Cutoff evidence: G(t_lo) increases strictly by more than `cutoff_grow`, and
  // G(t_hi) - 1 decreases strictly and ends below `cutoff_mix`.
  double cutoff_grow = 1.0;
  double cutoff_mix = 0.1;
};

// All flags are trends over the computed finite index list, not limits.
struct BoundednessReport {
  MixingTable table;
  std::vector<double> supremum;  // per t
  std::vector<double> bound;     // candidate B_t, >= every computed G_(n)(t)
  std::vector<bool> growing;     // per t
  bool bounded_looking = false;
  bool anomalous = false;
  bool cutoff = false;
  std::vector<std::string> notes;
};

BoundednessReport boundedness_report(const MixingTable& table, bool normalized_members,
                                     const TrendThresholds& thresholds = {});
BoundednessReport boundedness_report(const ChainFamily& family, std::span<const std::size_t> indices,
                                     std::span<const double> times, const TrendThresholds& thresholds = {});

struct CutoffEvidence {
  bool cutoff = false;
  bool growing_below = false;  // G(t_lo) trend
  bool mixing_above = false;   // G(t_hi) - 1 trend
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::vector<std::size_t> indices;
  std::vector<double> g_lo;
  std::vector<double> g_hi;
};

// Requires t_lo < 1 < t_hi and G_(n)(1) = 2 for every member (NotNormalized).
CutoffEvidence cutoff_detector(std::span<const MemberSpectrum> spectra, double t_lo, double t_hi,
                               const TrendThresholds& thresholds = {});
CutoffEvidence cutoff_detector(const ChainFamily& family, std::span<const std::size_t> indices, double t_lo,
                               double t_hi, const TrendThresholds& thresholds = {});

struct TailRow {
  std::size_t index = 0;
  std::size_t k = 0;
  double t = 0.0;
  double tail = 0.0;
};

std::vector<TailRow> tail_profile(const ChainFamily& family, std::span<const std::size_t> indices, std::size_t k,
                                  double t);

}  // namespace chainlab
