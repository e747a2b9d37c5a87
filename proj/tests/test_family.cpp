#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "chainlab/family.hpp"
#include "oracles.hpp"

using namespace chainlab;
using testutil::thrown_kind;

namespace {

std::vector<std::size_t> range(std::size_t a, std::size_t b) {
  std::vector<std::size_t> v(b - a + 1);
  std::iota(v.begin(), v.end(), a);
  return v;
}

double four_point_g(double n, double t) {
  return 1 + std::exp(-2 * t) + std::exp(-2 * n * t) + std::exp(-2 * (n + 1) * t);
}

double hypercube_g(std::size_t d, double t) {
  const double x = std::pow(2.0, 1.0 / static_cast<double>(d)) - 1.0;
  return std::pow(1 + std::pow(x, t), static_cast<double>(d));
}

}  // namespace

TEST_CASE("builtin families") {
  const FamilyMember tp = builtin_family("two_point").member(5);
  CHECK((tp.rate.entries - testutil::matrix({{-0.2, 0.2}, {0.2, -0.2}})).cwiseAbs().maxCoeff() < 1e-15);

  const RateMatrix fp = builtin_family("four_point").member(1).rate;
  CHECK(fp.size() == 4);
  const Vector mu = generator_spectrum(fp, stationary_distribution(fp));
  const std::vector<double> expected{0, -2, -2, -4};
  for (int i = 0; i < 4; ++i) CHECK(std::abs(mu(i) - expected[static_cast<std::size_t>(i)]) < 1e-12);
  CHECK(std::abs(mixing(fp, 1.0) - 1.288986) < 1e-6);
  CHECK(std::abs(mixing(fp, 1.0) - oracle::trace_exp(fp.entries, 1.0)) < 1e-12);

  const FamilyMember h3 = builtin_family("hypercube").member(3);
  CHECK(h3.rate.size() == 8);
  // closed form is 0.6736887; the commonly quoted 0.673693 is good to 1e-5
  CHECK(std::abs(h3.time_rescale - 0.673693) < 1e-5);
  CHECK(std::abs(h3.time_rescale + 0.5 * std::log(std::cbrt(2.0) - 1.0)) < 1e-10);
  CHECK(std::abs(oracle::trace_exp(h3.rate.entries, 1.0) - 2.0) < 1e-10);

  const RateMatrix tb = builtin_family("two_blocks").member(3).rate;
  CHECK(tb.size() == 6);
  CHECK(tb.irreducible);
  CHECK(std::abs(tb.entries(0, 1) - 1.0) < 1e-15);
  CHECK(std::abs(tb.entries(0, 3) - 1.0 / 9.0) < 1e-15);
  CHECK(std::abs(tb.entries.rowwise().sum().cwiseAbs().maxCoeff()) < 1e-14);

  CHECK(thrown_kind([] { builtin_family("torus"); }) == ErrorKind::UnknownFamily);
  CHECK(thrown_kind([] { builtin_family("two_point").member(0); }) == ErrorKind::Precondition);
  CHECK(thrown_kind([] { builtin_family("hypercube").member(13); }) == ErrorKind::Precondition);
  FamilyParams big;
  big.max_index = 14;
  const ChainFamily h14 = builtin_family("hypercube", big);
  CHECK(h14.last_index() == 14);
  CHECK_FALSE(h14.warnings.empty());
  big.max_index = 15;
  CHECK(thrown_kind([&] { builtin_family("hypercube", big); }) == ErrorKind::Precondition);
}

TEST_CASE("mixing tables") {
  const std::vector<double> grid = default_time_grid();
  CHECK(grid.size() == 25);
  CHECK(std::abs(grid.front() - 0.05) < 1e-15);
  CHECK(std::abs(grid.back() - 5.0) < 1e-12);

  const ChainFamily tp = builtin_family("two_point");
  const std::vector<std::size_t> ns = range(1, 50);
  const MixingTable t = mixing_table(tp, ns, grid);
  for (std::size_t m = 0; m < ns.size(); ++m)
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double n = static_cast<double>(ns[m]);
      CHECK(std::abs(t.values[m][j] - (1 + std::exp(-2 * grid[j] / n))) < 1e-10);
      if (j) CHECK(t.values[m][j] < t.values[m][j - 1]);
    }
  const std::vector<double> one{1.0};
  const std::vector<std::size_t> ten{10};
  CHECK(std::abs(mixing_table(tp, ten, one).values[0][0] - 1.818731) < 1e-6);

  const ChainFamily fp = builtin_family("four_point");
  const std::vector<std::size_t> five{5};
  CHECK(std::abs(mixing_table(fp, five, one).values[0][0] - 1.135387) < 1e-6);

  // against the trace-of-exponential route
  for (const char* name : {"four_point", "two_blocks"}) {
    const ChainFamily f = builtin_family(name);
    const std::vector<std::size_t> idx{1, 2, 5};
    const MixingTable mt = mixing_table(f, idx, grid);
    for (std::size_t m = 0; m < idx.size(); ++m) {
      const RateMatrix q = f.member(idx[m]).rate;
      for (std::size_t j = 0; j < grid.size(); j += 4) CHECK(std::abs(mt.values[m][j] - mixing(q, grid[j])) < 1e-10);
    }
  }

  const ChainFamily hc = builtin_family("hypercube");
  const std::vector<std::size_t> dims = range(4, 10);
  const auto spectra = member_spectra(hc, dims);
  const MixingTable ht = mixing_table(spectra, grid);
  for (std::size_t m = 0; m < dims.size(); ++m) {
    CHECK(std::abs(spectra[m].mixing(1.0) - 2.0) < 1e-8);
    const double x = std::exp(-2 * spectra[m].time_rescale);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      CHECK(std::abs(ht.values[m][j] - std::pow(1 + std::pow(x, grid[j]), static_cast<double>(dims[m]))) < 1e-8);
      CHECK(std::abs(ht.values[m][j] - hypercube_g(dims[m], grid[j])) < 1e-8);
    }
  }
}

TEST_CASE("boundedness reports") {
  const std::vector<double> grid = default_time_grid();
  const std::vector<std::size_t> ns = range(1, 50);

  const BoundednessReport tp = boundedness_report(builtin_family("two_point"), ns, grid);
  CHECK(tp.anomalous);
  CHECK(tp.bounded_looking);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    CHECK(tp.bound[j] <= 2.0);
    CHECK_FALSE(tp.growing[j]);
  }

  const BoundednessReport fp = boundedness_report(builtin_family("four_point"), ns, grid);
  CHECK(fp.bounded_looking);
  CHECK_FALSE(fp.anomalous);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    CHECK(fp.bound[j] <= 1 + std::exp(-2 * grid[j]) + 2);
    CHECK_FALSE(fp.growing[j]);
    for (std::size_t m = 0; m < ns.size(); ++m) {
      CHECK(fp.bound[j] >= fp.table.values[m][j]);
      CHECK(std::abs(fp.table.values[m][j] - four_point_g(static_cast<double>(ns[m]), grid[j])) < 1e-10);
    }
  }

  const std::vector<double> two_times{0.5, 2.0};
  const std::vector<std::size_t> dims = range(4, 10);
  const BoundednessReport hc = boundedness_report(builtin_family("hypercube"), dims, two_times);
  CHECK(hc.growing[0]);
  CHECK_FALSE(hc.growing[1]);
  CHECK(hc.cutoff);
  CHECK_FALSE(hc.bounded_looking);
  for (std::size_t m = 1; m < dims.size(); ++m) {
    CHECK(hc.table.values[m][0] > hc.table.values[m - 1][0]);
    CHECK(hc.table.values[m][1] < hc.table.values[m - 1][1]);
  }
}

TEST_CASE("cutoff detection") {
  const ChainFamily hc = builtin_family("hypercube");
  const std::vector<std::size_t> dims = range(4, 10);
  const CutoffEvidence e = cutoff_detector(hc, dims, 0.5, 2.0);
  CHECK(e.cutoff);
  CHECK(e.growing_below);
  CHECK(e.mixing_above);
  for (std::size_t m = 0; m < dims.size(); ++m) {
    CHECK(std::abs(e.g_lo[m] - hypercube_g(dims[m], 0.5)) < 1e-8);
    CHECK(std::abs(e.g_hi[m] - hypercube_g(dims[m], 2.0)) < 1e-8);
  }

  const std::vector<std::size_t> ns{1, 2, 5, 10, 20, 50};
  CHECK_FALSE(cutoff_detector(normalized(builtin_family("four_point")), ns, 0.5, 2.0).cutoff);
  CHECK(thrown_kind([&] { cutoff_detector(builtin_family("four_point"), ns, 0.5, 2.0); }) == ErrorKind::NotNormalized);

  const ChainFamily constant = normalized(constant_family(testutil::complete_graph(4)));
  CHECK_FALSE(cutoff_detector(constant, ns, 0.5, 2.0).cutoff);
  CHECK(thrown_kind([&] { cutoff_detector(constant, ns, 1.5, 2.0); }) == ErrorKind::Precondition);
}

TEST_CASE("tail profiles") {
  const ChainFamily fp = builtin_family("four_point");
  const std::vector<std::size_t> ns{1, 2, 5, 10};
  const auto rows = tail_profile(fp, ns, 1, 1.0);
  double previous = 1e300;
  for (std::size_t m = 0; m < ns.size(); ++m) {
    const double n = static_cast<double>(ns[m]);
    CHECK(std::abs(rows[m].tail - (std::exp(-2 * n) + std::exp(-2 * (n + 1)))) < 1e-12);
    CHECK(rows[m].tail < previous);
    previous = rows[m].tail;
  }
  for (const auto& r : tail_profile(fp, ns, 4, 1.0)) CHECK(r.tail == 0.0);

  const std::vector<std::size_t> eight{8};
  CHECK(std::abs(tail_profile(builtin_family("hypercube"), eight, 0, 1.0)[0].tail - 1.0) < 1e-8);
}

TEST_CASE("default indices") {
  CHECK(default_indices(builtin_family("two_point")) == std::vector<std::size_t>{1, 2, 5, 10, 20, 50});
  CHECK(default_indices(builtin_family("hypercube")) == range(4, 12));
}
