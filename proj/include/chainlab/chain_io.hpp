#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chainlab/chain_core.hpp"

namespace chainlab::io {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Chain file: {"labels": [string...], "rates": [[number...]...]}; any other
// member (such as "meta") is ignored. Throws ParseError with line or row
// context, or the validation error.
RateMatrix parse_chain_text(std::string_view text, double tol = kDefaultTol, std::string_view origin = "<input>");
RateMatrix parse_chain_file(const std::filesystem::path& path, double tol = kDefaultTol);

// "%.17g"; round-trips every finite double.
std::string format_number(double x);

struct ArtifactHeader {
  std::string subcommand;
  std::vector<std::pair<std::string, std::string>> params;
  unsigned long long seed = 0;
};

std::string render_chain(const RateMatrix& q, const ArtifactHeader& header);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_row(std::vector<std::string> cells);
  std::size_t rows() const noexcept { return rows_.size(); }
  const std::vector<std::string>& columns() const noexcept { return columns_; }

  // '#'-prefixed metadata lines, then the header row, then the data rows.
  std::string render(const ArtifactHeader& header) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

// '#'-prefixed lines holding tool version, subcommand, parameters and seed.
std::string comment_header(const ArtifactHeader& header);

// Writes to a temporary sibling and renames it over `path`. Throws Io.
void atomic_write(const std::filesystem::path& path, std::string_view content);

}  // namespace chainlab::io
