#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace redcal::csv {

using Row = std::vector<std::string>;

/// Splits a comma-separated file into trimmed fields; blank lines are skipped.
std::vector<Row> read(const std::filesystem::path& path);

/// Full-precision decimal text, round-trips every finite double exactly.
std::string format(double value);

/// Parses a field as a double; `where` prefixes the error message.
double parse_double(std::string_view field, const std::string& where);

std::string join(const std::vector<std::string>& fields);

/// Writes `header` followed by one line per matrix row.
void write_matrix(const std::filesystem::path& path, const std::vector<std::string>& header,
                  const Eigen::Ref<const Eigen::MatrixXd>& values);

/// Reads a file written by write_matrix; returns the header via `header`.
Eigen::MatrixXd read_matrix(const std::filesystem::path& path, std::vector<std::string>* header);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace redcal::csv
