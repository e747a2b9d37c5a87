// chainlab: command-line front end for the chain analysis library.
//
// Every artifact starts with '#' metadata lines (tool version, subcommand,
// parameters, seed). Exit status: 0 success, 1 domain or numerical error,
// 2 usage or parse error.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "chainlab/chain_core.hpp"
#include "chainlab/chain_io.hpp"
#include "chainlab/density_array.hpp"
#include "chainlab/family.hpp"
#include "chainlab/quotient.hpp"
#include "chainlab/reconstruction.hpp"
#include "chainlab/spectral.hpp"

namespace {

using namespace chainlab;
using io::ArtifactHeader;
using io::CsvTable;
using io::format_number;

struct Options {
  std::string chain;
  std::string chain_b;
  std::string family;
  std::string mode = "mixing";
  std::string out;
  std::optional<double> tol;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::size_t k = 2;
  unsigned degree = 2;
  std::vector<std::size_t> n;
  std::size_t replicates = 0;
  std::size_t seeds = 1;
  bool types = false;
  bool normalize = false;
  double t_lo = 0.5;
  double t_hi = 2.0;
  std::size_t max_index = 0;
  double growth = 1.0;
};

std::string join(const std::vector<double>& v) { return fmt::format("{}", fmt::join(v, ",")); }
std::string join(const std::vector<std::size_t>& v) { return fmt::format("{}", fmt::join(v, ",")); }

void emit(const Options& o, const std::string& content) {
  if (o.out.empty()) {
    std::fwrite(content.data(), 1, content.size(), stdout);
    std::fflush(stdout);
  } else {
    io::atomic_write(o.out, content);
  }
}

void warn(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) fmt::print(stderr, "chainlab: warning: {}\n", w);
}

std::vector<double> times_or(const Options& o, std::vector<double> fallback) {
  return o.times.empty() ? fallback : o.times;
}

ReversibleChain load_chain(const std::string& path, const Options& o) {
  return ReversibleChain(io::parse_chain_file(path, o.tol.value_or(kDefaultTol)), o.tol.value_or(kDefaultTol));
}

ArtifactHeader header(const std::string& sub, std::vector<std::pair<std::string, std::string>> params,
                      const Options& o) {
  return ArtifactHeader{sub, std::move(params), o.seed};
}

int cmd_validate(const Options& o) {
  const double tol = o.tol.value_or(kDefaultTol);
  const RateMatrix q = io::parse_chain_file(o.chain, tol);
  CsvTable table({"property", "value"});
  table.add_row({"states", std::to_string(q.size())});
  table.add_row({"irreducible", q.irreducible ? "true" : "false"});
  if (q.irreducible) {
    const StationaryDistribution pi = stationary_distribution(q);
    const ReversibilityCheck rev = check_reversibility(q, pi, tol);
    table.add_row({"reversible", rev.reversible ? "true" : "false"});
    table.add_row({"max_detailed_balance_violation", format_number(rev.max_violation)});
    for (std::size_t i = 0; i < q.size(); ++i)
      table.add_row({"pi(" + q.states.labels[i] + ")", format_number(pi.weights(static_cast<Eigen::Index>(i)))});
  }
  emit(o, table.render(header("validate", {{"chain", o.chain}, {"tol", fmt::format("{}", tol)}}, o)));
  return 0;
}

int cmd_spectrum(const Options& o) {
  const ReversibleChain chain = load_chain(o.chain, o);
  const Spectrum spec = decompose(chain);
  const auto head = header("spectrum", {{"chain", o.chain}, {"types", o.types ? "true" : "false"}}, o);
  if (o.types) {
    std::vector<std::string> cols{"state", "label"};
    for (std::size_t i = 0; i < spec.size(); ++i) cols.push_back(fmt::format("nu_{}", i));
    CsvTable table(std::move(cols));
    for (std::size_t x = 0; x < chain.size(); ++x) {
      std::vector<std::string> row{std::to_string(x), chain.states().labels[x]};
      for (std::size_t i = 0; i < spec.size(); ++i)
        row.push_back(format_number(spec.eigenvectors(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(i))));
      table.add_row(std::move(row));
    }
    emit(o, table.render(head));
  } else {
    std::vector<std::string> cols{"index", "eigenvalue"};
    for (const auto& label : chain.states().labels) cols.push_back("nu(" + label + ")");
    CsvTable table(std::move(cols));
    for (std::size_t i = 0; i < spec.size(); ++i) {
      std::vector<std::string> row{std::to_string(i), format_number(spec.eigenvalues(static_cast<Eigen::Index>(i)))};
      for (std::size_t x = 0; x < chain.size(); ++x)
        row.push_back(format_number(spec.eigenvectors(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(i))));
      table.add_row(std::move(row));
    }
    emit(o, table.render(head));
  }
  if (spec.floored) fmt::print(stderr, "chainlab: warning: {} eigenvalues floored\n", spec.floored);
  return 0;
}

int cmd_mixing(const Options& o) {
  const ReversibleChain chain = load_chain(o.chain, o);
  const auto times = times_or(o, default_time_grid());
  CsvTable table({"t", "G"});
  for (double t : times) table.add_row({format_number(t), format_number(chain.mixing(t))});
  emit(o, table.render(header("mixing", {{"chain", o.chain}, {"times", join(times)}}, o)));
  return 0;
}

int cmd_normalize(const Options& o) {
  const RateMatrix q = io::parse_chain_file(o.chain, o.tol.value_or(kDefaultTol));
  const NormalizedChain norm = normalize_chain(q);
  emit(o, io::render_chain(norm.rate, header("normalize",
                                             {{"chain", o.chain}, {"time_rescale", format_number(norm.time_rescale)}},
                                             o)));
  return 0;
}

int cmd_kernel(const Options& o) {
  const ReversibleChain chain = load_chain(o.chain, o);
  const auto times = times_or(o, {1.0});
  CsvTable table({"t", "x", "y", "p"});
  for (double t : times) {
    const ScaledKernel kern = chain.kernel(t);
    for (std::size_t x = 0; x < chain.size(); ++x)
      for (std::size_t y = 0; y < chain.size(); ++y)
        table.add_row({format_number(t), chain.states().labels[x], chain.states().labels[y],
                       format_number(kern.entries(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)))});
  }
  emit(o, table.render(header("kernel", {{"chain", o.chain}, {"times", join(times)}}, o)));
  return 0;
}

int cmd_axioms(const Options& o) {
  const ReversibleChain chain = load_chain(o.chain, o);
  const auto times = times_or(o, {0.5, 1.0});
  const double tol = o.tol.value_or(1e-8);
  const MomentReport report = axiom_report(chain, times, tol);
  CsvTable table({"check", "value", "target", "status"});
  for (const auto& e : report.entries)
    table.add_row({e.key, format_number(e.value), format_number(e.target), e.passed ? "PASS" : "FAIL"});
  emit(o, table.render(header("axioms", {{"chain", o.chain}, {"times", join(times)}, {"tol", fmt::format("{}", tol)}}, o)));
  report.require_pass();
  return 0;
}

int cmd_sample(const Options& o) {
  const ReversibleChain chain = load_chain(o.chain, o);
  const auto times = times_or(o, {1.0});
  const std::size_t reps = o.replicates == 0 ? 1 : o.replicates;
  const ArraySample s = sample_array(chain, o.k, times, o.seed, reps);
  CsvTable table({"replicate", "i", "j", "t", "state_i", "state_j", "value"});
  for (std::size_t r = 0; r < reps; ++r)
    for (std::size_t i = 0; i < o.k; ++i)
      for (std::size_t j = 0; j < o.k; ++j)
        for (std::size_t ti = 0; ti < times.size(); ++ti)
          table.add_row({std::to_string(r), std::to_string(i), std::to_string(j), format_number(times[ti]),
                         chain.states().labels[s.state(r, i)], chain.states().labels[s.state(r, j)],
                         format_number(s.value(r, i, j, ti))});
  emit(o, table.render(header("sample",
                              {{"chain", o.chain},
                               {"k", std::to_string(o.k)},
                               {"times", join(times)},
                               {"replicates", std::to_string(reps)},
                               {"rng", s.rng_algorithm}},
                              o)));
  return 0;
}

int cmd_compare(const Options& o) {
  const ReversibleChain a = load_chain(o.chain, o);
  const ReversibleChain b = load_chain(o.chain_b, o);
  const auto times = times_or(o, {0.5, 1.0, 2.0});
  const ArrayDistance d = array_distance_detail(a, b, o.k, times, o.degree);
  CsvTable table({"metric", "value"});
  table.add_row({"array_distance", format_number(d.distance)});
  table.add_row({"argmax_moment", d.argmax_label});
  if (o.replicates > 0) {
    const EmpiricalDistance e = empirical_distance(a, b, o.k, times, o.seed, o.replicates, o.degree);
    table.add_row({"empirical_estimate", format_number(e.estimate)});
    table.add_row({"empirical_standard_error", format_number(e.standard_error)});
    table.add_row({"empirical_clip", format_number(e.clip)});
  }
  emit(o, table.render(header("compare",
                              {{"chain_a", o.chain},
                               {"chain_b", o.chain_b},
                               {"k", std::to_string(o.k)},
                               {"degree", std::to_string(o.degree)},
                               {"times", join(times)},
                               {"replicates", std::to_string(o.replicates)}},
                              o)));
  return 0;
}

int cmd_reconstruct(const Options& o) {
  const ReversibleChain chain = load_chain(o.chain, o);
  const std::size_t n = o.n.empty() ? 100 : o.n.front();
  const ReconstructedChain rec = reconstruct_chain(subsample_kernel(chain, n, o.seed));
  warn(rec.warnings);
  emit(o, io::render_chain(rec.chain.rate(), header("reconstruct",
                                                    {{"chain", o.chain},
                                                     {"n", std::to_string(n)},
                                                     {"gamma", format_number(rec.gamma)},
                                                     {"floored", std::to_string(rec.floored)},
                                                     {"clamped", std::to_string(rec.clamped)}},
                                                    o)));
  return 0;
}

int cmd_roundtrip(const Options& o) {
  const ReversibleChain chain = load_chain(o.chain, o);
  const auto times = times_or(o, {0.5, 1.0, 2.0});
  const std::vector<std::size_t> ns = o.n.empty() ? std::vector<std::size_t>{50, 100, 200, 400} : o.n;
  CsvTable table({"n", "seed", "distance", "argmax_moment", "gamma_over_n2", "max_row_weight_deviation", "floored",
                  "clamped"});
  for (std::size_t n : ns)
    for (std::size_t s = 0; s < o.seeds; ++s) {
      const RoundtripReport r = roundtrip_report(chain, n, o.seed + s, o.k, times, o.degree);
      table.add_row({std::to_string(r.n), std::to_string(r.seed), format_number(r.distance), r.argmax_label,
                     format_number(r.gamma_ratio), format_number(r.max_row_weight_deviation),
                     std::to_string(r.floored), std::to_string(r.clamped)});
    }
  emit(o, table.render(header("roundtrip",
                              {{"chain", o.chain},
                               {"n", join(ns)},
                               {"seeds", std::to_string(o.seeds)},
                               {"k", std::to_string(o.k)},
                               {"degree", std::to_string(o.degree)},
                               {"times", join(times)}},
                              o)));
  return 0;
}

int cmd_twins(const Options& o) {
  const ReversibleChain chain = load_chain(o.chain, o);
  const double tol = o.tol.value_or(1e-8);
  const StatePartition p = find_twins(chain, tol);
  warn(p.warnings);
  CsvTable table({"block", "state", "label"});
  for (std::size_t b = 0; b < p.blocks.size(); ++b)
    for (std::size_t x : p.blocks[b]) table.add_row({std::to_string(b), std::to_string(x), chain.states().labels[x]});
  emit(o, table.render(header("twins",
                              {{"chain", o.chain},
                               {"tol", fmt::format("{}", tol)},
                               {"max_intra_distance", format_number(p.max_intra_distance)}},
                              o)));
  return 0;
}

int cmd_quotient(const Options& o) {
  const ReversibleChain chain = load_chain(o.chain, o);
  const double tol = o.tol.value_or(1e-8);
  const StatePartition p = find_twins(chain, tol);
  warn(p.warnings);
  const ReversibleChain q = quotient_chain(chain, p);
  emit(o, io::render_chain(q.rate(), header("quotient",
                                            {{"chain", o.chain},
                                             {"tol", fmt::format("{}", tol)},
                                             {"blocks", std::to_string(p.blocks.size())}},
                                            o)));
  return 0;
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

int cmd_family(const Options& o) {
  ChainFamily family = builtin_family(o.family, FamilyParams{o.max_index});
  if (o.normalize) family = normalized(family);
  warn(family.warnings);
  const std::vector<std::size_t> ns = o.n.empty() ? default_indices(family) : o.n;
  const auto times = times_or(o, default_time_grid());
  std::vector<std::pair<std::string, std::string>> params{{"family", family.name()},
                                                          {"mode", o.mode},
                                                          {"n", join(ns)}};
  const auto spectra = member_spectra(family, ns);

  if (o.mode == "mixing") {
    params.emplace_back("times", join(times));
    const MixingTable mt = mixing_table(spectra, times);
    CsvTable table({"n", "t", "G"});
    for (std::size_t i = 0; i < mt.indices.size(); ++i)
      for (std::size_t t = 0; t < mt.times.size(); ++t)
        table.add_row({std::to_string(mt.indices[i]), format_number(mt.times[t]), format_number(mt.values[i][t])});
    emit(o, table.render(header("family", params, o)));
  } else if (o.mode == "tail") {
    const double t = o.times.empty() ? 1.0 : o.times.front();
    params.emplace_back("k", std::to_string(o.k));
    params.emplace_back("t", format_number(t));
    CsvTable table({"n", "k", "t", "tail"});
    for (const auto& s : spectra)
      table.add_row({std::to_string(s.index), std::to_string(o.k), format_number(t), format_number(s.tail(o.k, t))});
    emit(o, table.render(header("family", params, o)));
  } else if (o.mode == "bounded") {
    TrendThresholds th;
    th.growth = o.growth;
    params.emplace_back("times", join(times));
    params.emplace_back("growth_threshold", fmt::format("{}", o.growth));
    const BoundednessReport r = boundedness_report(mixing_table(spectra, times), family.normalized_members(), th);
    std::string text = io::comment_header(header("family", params, o));
    text += fmt::format("bounded_looking: {}\nanomalous: {}\ncutoff: {}\n", yes_no(r.bounded_looking),
                        yes_no(r.anomalous), yes_no(r.cutoff));
    for (const auto& note : r.notes) text += "note: " + note + "\n";
    text += "t,supremum,bound,growing\n";
    for (std::size_t t = 0; t < times.size(); ++t)
      text += fmt::format("{},{},{},{}\n", format_number(times[t]), format_number(r.supremum[t]),
                          format_number(r.bound[t]), r.growing[t] ? "true" : "false");
    emit(o, text);
  } else if (o.mode == "cutoff") {
    params.emplace_back("t_lo", fmt::format("{}", o.t_lo));
    params.emplace_back("t_hi", fmt::format("{}", o.t_hi));
    const CutoffEvidence ev = cutoff_detector(spectra, o.t_lo, o.t_hi);
    std::string text = io::comment_header(header("family", params, o));
    text += fmt::format("cutoff_evidence: {}\ngrowing_below: {}\nmixing_above: {}\n", yes_no(ev.cutoff),
                        yes_no(ev.growing_below), yes_no(ev.mixing_above));
    text += "note: finite-index trend only\n";
    text += "n,G_lo,G_hi\n";
    for (std::size_t i = 0; i < ev.indices.size(); ++i)
      text += fmt::format("{},{},{}\n", ev.indices[i], format_number(ev.g_lo[i]), format_number(ev.g_hi[i]));
    emit(o, text);
  } else {
    throw CLI::ValidationError("--mode", "expected mixing, tail, bounded or cutoff");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chainlab: spectral analysis of finite reversible Markov chains"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(io::kToolVersion));
  Options o;

  auto chain_arg = [&o](CLI::App* sub) { sub->add_option("chain", o.chain, "chain file (JSON)")->required(); };
  auto out_opt = [&o](CLI::App* sub) { sub->add_option("--out", o.out, "output path (default: stdout)"); };
  auto tol_opt = [&o](CLI::App* sub) { sub->add_option("--tol", o.tol, "tolerance"); };
  auto times_opt = [&o](CLI::App* sub) { sub->add_option("--times", o.times, "comma-separated times")->delimiter(','); };
  auto seed_opt = [&o](CLI::App* sub) { sub->add_option("--seed", o.seed, "random seed (default 0)"); };
  auto k_opt = [&o](CLI::App* sub) { sub->add_option("--k", o.k, "array size")->check(CLI::PositiveNumber); };
  auto degree_opt = [&o](CLI::App* sub) { sub->add_option("--degree", o.degree, "moment degree"); };
  auto n_opt = [&o](CLI::App* sub, const char* help) { sub->add_option("--n", o.n, help)->delimiter(','); };

  struct Entry {
    CLI::App* app;
    int (*run)(const Options&);
  };
  std::vector<Entry> entries;
  auto add = [&](const char* name, const char* help, int (*run)(const Options&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    entries.push_back({sub, run});
    out_opt(sub);
    return sub;
  };

  auto* validate = add("validate", "validate a chain file", cmd_validate);
  chain_arg(validate);
  tol_opt(validate);

  auto* spectrum = add("spectrum", "eigenvalues of the time-1 kernel", cmd_spectrum);
  chain_arg(spectrum);
  tol_opt(spectrum);
  spectrum->add_flag("--types", o.types, "emit per-state eigenvector coordinates");

  auto* mix = add("mixing", "G(t) on a time grid", cmd_mixing);
  chain_arg(mix);
  tol_opt(mix);
  times_opt(mix);

  auto* norm = add("normalize", "rescale time so that G(1) = 2", cmd_normalize);
  chain_arg(norm);
  tol_opt(norm);

  auto* kern = add("kernel", "scaled kernel p_t(x, y)", cmd_kernel);
  chain_arg(kern);
  tol_opt(kern);
  times_opt(kern);

  auto* axioms = add("axioms", "moment identities of the density array", cmd_axioms);
  chain_arg(axioms);
  tol_opt(axioms);
  times_opt(axioms);

  auto* sample = add("sample", "draw density arrays", cmd_sample);
  chain_arg(sample);
  tol_opt(sample);
  times_opt(sample);
  seed_opt(sample);
  k_opt(sample);
  sample->add_option("--replicates", o.replicates, "number of arrays (default 1)");

  auto* compare = add("compare", "moment distance between two chains", cmd_compare);
  chain_arg(compare);
  compare->add_option("other", o.chain_b, "second chain file")->required();
  tol_opt(compare);
  times_opt(compare);
  seed_opt(compare);
  k_opt(compare);
  degree_opt(compare);
  compare->add_option("--replicates", o.replicates, "Monte Carlo replicates (0 = exact only)");

  auto* reconstruct = add("reconstruct", "rebuild a chain from a sampled kernel", cmd_reconstruct);
  chain_arg(reconstruct);
  tol_opt(reconstruct);
  seed_opt(reconstruct);
  n_opt(reconstruct, "sample size (default 100)");

  auto* roundtrip = add("roundtrip", "sample, reconstruct and compare", cmd_roundtrip);
  chain_arg(roundtrip);
  tol_opt(roundtrip);
  times_opt(roundtrip);
  seed_opt(roundtrip);
  k_opt(roundtrip);
  degree_opt(roundtrip);
  n_opt(roundtrip, "comma-separated sample sizes (default 50,100,200,400)");
  roundtrip->add_option("--seeds", o.seeds, "seeds per size, starting at --seed")->check(CLI::PositiveNumber);

  auto* twins = add("twins", "group states at twin distance <= tol", cmd_twins);
  chain_arg(twins);
  tol_opt(twins);

  auto* quotient = add("quotient", "collapse twins into single states", cmd_quotient);
  chain_arg(quotient);
  tol_opt(quotient);

  auto* fam = add("family", "boundedness and cutoff diagnostics for a chain family", cmd_family);
  fam->add_option("name", o.family, "two_point, four_point, two_blocks or hypercube")->required();
  fam->add_option("--mode", o.mode, "mixing, tail, bounded or cutoff")
      ->check(CLI::IsMember({"mixing", "tail", "bounded", "cutoff"}));
  n_opt(fam, "comma-separated member indices");
  times_opt(fam);
  k_opt(fam);
  fam->add_flag("--normalize", o.normalize, "normalize every member first");
  fam->add_option("--t-lo", o.t_lo, "cutoff time below 1");
  fam->add_option("--t-hi", o.t_hi, "cutoff time above 1");
  fam->add_option("--max-index", o.max_index, "largest member index");
  fam->add_option("--growth", o.growth, "growth threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (const auto& e : entries)
      if (e.app->parsed()) return e.run(o);
  } catch (const Error& e) {
    fmt::print(stderr, "chainlab: {}\n", e.what());
    return e.kind() == ErrorKind::ParseError || e.kind() == ErrorKind::Io ? 2 : 1;
  } catch (const CLI::Error& e) {
    fmt::print(stderr, "chainlab: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "chainlab: {}\n", e.what());
    return 1;
  }
  return 2;
}
