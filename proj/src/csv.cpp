#include "redcal/csv.hpp"

#include "redcal/types.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace redcal::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<Row> read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, path.string() + ": cannot open file");
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view = trim(line);
    if (view.empty()) continue;
    Row row;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = view.find(',', start);
      std::string_view field = view.substr(start, comma == std::string_view::npos ? view.npos : comma - start);
      row.emplace_back(trim(field));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

double parse_double(std::string_view field, const std::string& where) {
  std::string text(field);
  if (text.empty()) fail(ErrorKind::Parse, where + ": empty numeric field");
  errno = 0;
  char* end = nullptr;
  double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || errno == ERANGE)
    fail(ErrorKind::Parse, where + ": cannot parse '" + text + "' as a number");
  return value;
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

void write_matrix(const std::filesystem::path& path, const std::vector<std::string>& header,
                  const Eigen::Ref<const Eigen::MatrixXd>& values) {
  std::ostringstream out;
  if (!header.empty()) out << join(header) << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      out << format(values(i, j));
    }
    out << '\n';
  }
  write_text(path, out.str());
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path, std::vector<std::string>* header) {
  auto rows = read(path);
  if (rows.empty()) fail(ErrorKind::Parse, path.string() + ": no rows");
  if (header) *header = rows.front();
  const auto cols = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()) - 1, cols);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols)
      fail(ErrorKind::Parse, path.string() + ": row " + std::to_string(i) + " has " +
                                 std::to_string(rows[i].size()) + " fields, expected " +
                                 std::to_string(cols));
    for (Eigen::Index j = 0; j < cols; ++j)
      values(static_cast<Eigen::Index>(i) - 1, j) = parse_double(
          rows[i][j], path.string() + ": row " + std::to_string(i) + ", column " + std::to_string(j + 1));
  }
  return values;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, path.string() + ": cannot open for writing");
  out << text;
  if (!out) fail(ErrorKind::Io, path.string() + ": write failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, path.string() + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace redcal::csv
