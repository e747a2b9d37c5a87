#include "chainlab/chain_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include <fmt/format.h>
#include <json.hpp>

namespace chainlab::io {

namespace {

using nlohmann::json;

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

[[noreturn]] void parse_fail(std::string_view origin, const std::string& what) {
  throw Error(ErrorKind::ParseError, fmt::format("{}: {}", origin, what));
}

std::string csv_cell(const std::string& cell) {
  if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

RateMatrix parse_chain_text(std::string_view text, double tol, std::string_view origin) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    parse_fail(origin, fmt::format("line {}, column {}: malformed JSON", line, col));
  }
  if (!doc.is_object()) parse_fail(origin, "top level must be an object with \"labels\" and \"rates\"");
  if (!doc.contains("rates")) parse_fail(origin, "missing field \"rates\"");
  const json& rates = doc["rates"];
  if (!rates.is_array() || rates.empty()) parse_fail(origin, "field \"rates\" must be a non-empty array of rows");
  const std::size_t n = rates.size();

  StateSpace states;
  if (doc.contains("labels")) {
    const json& labels = doc["labels"];
    if (!labels.is_array()) parse_fail(origin, "field \"labels\" must be an array of strings");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!labels[i].is_string()) parse_fail(origin, fmt::format("labels[{}] is not a string", i));
      states.labels.push_back(labels[i].get<std::string>());
    }
    if (states.size() != n)
      parse_fail(origin, fmt::format("{} labels for {} rate rows", states.size(), n));
  } else {
    states = StateSpace::indexed(n);
  }

  Matrix q(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const json& row = rates[r];
    if (!row.is_array()) parse_fail(origin, fmt::format("rates row {} is not an array", r));
    if (row.size() != n)
      parse_fail(origin, fmt::format("rates row {} has {} entries, expected {}", r, row.size(), n));
    for (std::size_t c = 0; c < n; ++c) {
      if (!row[c].is_number()) parse_fail(origin, fmt::format("rates[{}][{}] is not a number", r, c));
      q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return validate_rate_matrix(q, tol, std::move(states));
}

RateMatrix parse_chain_file(const std::filesystem::path& path, double tol) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, fmt::format("cannot open {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_chain_text(buf.str(), tol, path.string());
}

std::string format_number(double x) {
  char buf[32];
  if (x == 0.0) x = 0.0;  // drop the sign of -0
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string comment_header(const ArtifactHeader& header) {
  std::string out = fmt::format("# tool: chainlab {}\n# subcommand: {}\n", kToolVersion, header.subcommand);
  for (const auto& [key, value] : header.params) out += fmt::format("# param {}: {}\n", key, value);
  out += fmt::format("# seed: {}\n", header.seed);
  return out;
}

std::string render_chain(const RateMatrix& q, const ArtifactHeader& header) {
  // Numbers are written by hand so the file keeps the "%.17g" form.
  json meta = {{"tool", fmt::format("chainlab {}", kToolVersion)},
               {"subcommand", header.subcommand},
               {"seed", header.seed}};
  json params = json::object();
  for (const auto& [key, value] : header.params) params[key] = value;
  meta["params"] = params;

  std::string out = "{\n  \"meta\": " + meta.dump() + ",\n  \"labels\": [";
  for (std::size_t i = 0; i < q.size(); ++i) out += (i ? ", " : "") + json(q.states.labels[i]).dump();
  out += "],\n  \"rates\": [\n";
  const Eigen::Index n = q.entries.rows();
  for (Eigen::Index r = 0; r < n; ++r) {
    out += "    [";
    for (Eigen::Index c = 0; c < n; ++c) out += (c ? ", " : "") + format_number(q.entries(r, c));
    out += r + 1 < n ? "],\n" : "]\n";
  }
  out += "  ]\n}\n";
  return out;
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size())
    throw Error(ErrorKind::Precondition,
                fmt::format("csv row has {} cells, expected {}", cells.size(), columns_.size()));
  rows_.push_back(std::move(cells));
}

std::string CsvTable::render(const ArtifactHeader& header) const {
  std::string out = comment_header(header);
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_cell(cells[i]);
    }
    out += '\n';
  };
  line(columns_);
  for (const auto& row : rows_) line(row);
  return out;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += fmt::format(".tmp.{}", static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, fmt::format("cannot write {}", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::Io, fmt::format("write to {} failed", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::Io, fmt::format("cannot move output into place at {}", path.string()));
  }
}

}  // namespace chainlab::io
