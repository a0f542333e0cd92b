#include "redcal/ensemble_store.hpp"

#include "redcal/csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

namespace redcal {

namespace fs = std::filesystem;
using Index = Eigen::Index;

// ---- domain types ---------------------------------------------------------

bool ParameterPoint::in_unit_cube(const Theta& c) noexcept {
  return (c.array() >= 0.0).all() && (c.array() <= 1.0).all();
}

ParameterPoint::ParameterPoint(const Theta& coords) : coords_(coords) {
  if (!in_unit_cube(coords))
    fail(ErrorKind::InvalidArgument, "parameter point outside [0,1]^4");
}

Design::Design(DesignMatrix points, std::vector<std::string> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
  if (!labels_.empty() && static_cast<Index>(labels_.size()) != points_.rows())
    fail(ErrorKind::InvalidArgument, "design label count does not match point count");
  std::map<std::array<double, kParamDim>, Index> seen;
  for (Index i = 0; i < points_.rows(); ++i) {
    std::array<double, kParamDim> key{};
    for (int k = 0; k < kParamDim; ++k) {
      key[k] = points_(i, k);
      if (!(key[k] >= 0.0 && key[k] <= 1.0))
        fail(ErrorKind::InvalidArgument, "design row " + std::to_string(i + 1) + ", column p" +
                                             std::to_string(k + 1) + ": value " + csv::format(key[k]) +
                                             " outside [0,1]");
    }
    auto [it, inserted] = seen.emplace(key, i);
    if (!inserted)
      fail(ErrorKind::InvalidArgument, "design rows " + std::to_string(it->second + 1) + " and " +
                                           std::to_string(i + 1) + " are identical");
  }
}

Design Design::subset(const std::vector<Index>& rows) const {
  DesignMatrix pts(static_cast<Index>(rows.size()), kParamDim);
  std::vector<std::string> labels;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    pts.row(static_cast<Index>(r)) = points_.row(rows[r]);
    if (!labels_.empty()) labels.push_back(labels_[rows[r]]);
  }
  return Design(std::move(pts), std::move(labels));
}

SeriesEnsemble::SeriesEnsemble(Eigen::MatrixXd values, Eigen::VectorXd times, Design design)
    : values_(std::move(values)), times_(std::move(times)), design_(std::move(design)) {
  if (values_.rows() != design_.size())
    fail(ErrorKind::InvalidArgument, "series ensemble has " + std::to_string(values_.rows()) +
                                         " rows but the design has " + std::to_string(design_.size()));
  if (values_.cols() != times_.size())
    fail(ErrorKind::InvalidArgument, "series ensemble has " + std::to_string(values_.cols()) +
                                         " columns but " + std::to_string(times_.size()) +
                                         " time coordinates");
  for (Index j = 1; j < times_.size(); ++j)
    if (!(times_[j] > times_[j - 1]))
      fail(ErrorKind::InvalidArgument,
           "time coordinates not strictly increasing at column " + std::to_string(j + 1));
  if (!values_.allFinite()) fail(ErrorKind::InvalidArgument, "series ensemble has non-finite values");
}

SeriesEnsemble SeriesEnsemble::subset(const std::vector<Index>& rows) const {
  Eigen::MatrixXd v(static_cast<Index>(rows.size()), values_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) v.row(static_cast<Index>(r)) = values_.row(rows[r]);
  return SeriesEnsemble(std::move(v), times_, design_.subset(rows));
}

Grid::Grid(int rows, int cols, std::vector<int> masked, std::string units)
    : rows_(rows), cols_(cols), masked_(std::move(masked)), units_(std::move(units)) {
  if (rows_ <= 0 || cols_ <= 0) fail(ErrorKind::InvalidArgument, "grid dimensions must be positive");
  std::sort(masked_.begin(), masked_.end());
  masked_.erase(std::unique(masked_.begin(), masked_.end()), masked_.end());
  for (int idx : masked_)
    if (idx < 0 || idx >= rows_ * cols_)
      fail(ErrorKind::InvalidArgument, "grid mask index " + std::to_string(idx) + " out of range");
  std::size_t next = 0;
  for (int flat = 0; flat < rows_ * cols_; ++flat) {
    if (next < masked_.size() && masked_[next] == flat) {
      ++next;
      continue;
    }
    cells_.emplace_back(flat / cols_, flat % cols_);
  }
}

void check_binary_entries(const Eigen::Ref<const Eigen::MatrixXd>& values, const std::string& what) {
  for (Index i = 0; i < values.rows(); ++i)
    for (Index j = 0; j < values.cols(); ++j) {
      double v = values(i, j);
      if (v != 0.0 && v != 1.0)
        fail(ErrorKind::InvalidArgument, what + ": row " + std::to_string(i + 1) + ", column " +
                                             std::to_string(j + 1) + ": binary entry " +
                                             csv::format(v) + " is not 0 or 1");
    }
}

BinaryEnsemble::BinaryEnsemble(Eigen::MatrixXd values, Grid grid, Design design)
    : values_(std::move(values)), grid_(std::move(grid)), design_(std::move(design)) {
  if (values_.rows() != design_.size())
    fail(ErrorKind::InvalidArgument, "binary ensemble has " + std::to_string(values_.rows()) +
                                         " rows but the design has " + std::to_string(design_.size()));
  if (values_.cols() != grid_.active())
    fail(ErrorKind::InvalidArgument, "binary ensemble has " + std::to_string(values_.cols()) +
                                         " columns but the grid has " + std::to_string(grid_.active()) +
                                         " active cells");
  check_binary_entries(values_, "binary ensemble");
}

// ---- files ----------------------------------------------------------------

namespace {

bool parse_cell_name(const std::string& name, int* row, int* col) {
  if (name.size() < 5 || name[0] != 'r') return false;
  auto sep = name.find("_c");
  if (sep == std::string::npos) return false;
  const char* b = name.data();
  auto r1 = std::from_chars(b + 1, b + sep, *row);
  auto r2 = std::from_chars(b + sep + 2, b + name.size(), *col);
  return r1.ec == std::errc() && r1.ptr == b + sep && r2.ec == std::errc() && r2.ptr == b + name.size();
}

Eigen::MatrixXd parse_numeric_rows(const std::vector<csv::Row>& rows, std::size_t first, std::size_t cols,
                                   const std::string& where) {
  Eigen::MatrixXd values(static_cast<Index>(rows.size() - first), static_cast<Index>(cols));
  for (std::size_t i = first; i < rows.size(); ++i) {
    if (rows[i].size() != cols)
      fail(ErrorKind::Parse, where + ": row " + std::to_string(i - first + 1) + " has " +
                                 std::to_string(rows[i].size()) + " fields, expected " + std::to_string(cols));
    for (std::size_t j = 0; j < cols; ++j)
      values(static_cast<Index>(i - first), static_cast<Index>(j)) = csv::parse_double(
          rows[i][j], where + ": row " + std::to_string(i - first + 1) + ", column " + std::to_string(j + 1));
  }
  return values;
}

void check_cell_header(const std::vector<std::string>& header, const std::string& where) {
  for (std::size_t j = 0; j < header.size(); ++j) {
    int r = 0, c = 0;
    if (!parse_cell_name(header[j], &r, &c))
      fail(ErrorKind::Parse, where + ": column " + std::to_string(j + 1) + ": header '" + header[j] +
                                 "' is not of the form r<i>_c<j>");
  }
}

bool header_is_numeric(const std::vector<std::string>& header) {
  if (header.empty()) return false;
  for (const auto& h : header) {
    try {
      csv::parse_double(h, "");
    } catch (const Error&) {
      return false;
    }
  }
  return true;
}

}  // namespace

MatrixFile load_matrix(const fs::path& path, MatrixKind kind) {
  const std::string where = path.string();
  auto rows = csv::read(path);
  if (rows.size() < 2) fail(ErrorKind::Parse, where + ": no rows");
  MatrixFile out;
  out.kind = kind;
  out.header = rows.front();
  switch (kind) {
    case MatrixKind::Design: {
      const auto& h = out.header;
      bool with_label = h.size() == 5;
      if (!(h.size() == 4 || with_label) || h[0] != "p1" || h[1] != "p2" || h[2] != "p3" || h[3] != "p4" ||
          (with_label && h[4] != "label"))
        fail(ErrorKind::Parse, where + ": design header must be p1,p2,p3,p4[,label]");
      out.values.resize(static_cast<Index>(rows.size() - 1), kParamDim);
      for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != h.size())
          fail(ErrorKind::Parse, where + ": row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                                     " fields, expected " + std::to_string(h.size()));
        for (int k = 0; k < kParamDim; ++k)
          out.values(static_cast<Index>(i - 1), k) = csv::parse_double(
              rows[i][k], where + ": row " + std::to_string(i) + ", column p" + std::to_string(k + 1));
        if (with_label) out.labels.push_back(rows[i][4]);
      }
      // Range and duplicate checks live in the Design constructor.
      try {
        Design check(out.values, out.labels);
      } catch (const Error& e) {
        fail(ErrorKind::InvalidArgument, where + ": " + e.what());
      }
      break;
    }
    case MatrixKind::Series: {
      std::vector<double> times;
      for (std::size_t j = 0; j < out.header.size(); ++j) {
        times.push_back(csv::parse_double(out.header[j], where + ": time header column " + std::to_string(j + 1)));
        if (j > 0 && !(times[j] > times[j - 1]))
          fail(ErrorKind::InvalidArgument, where + ": time coordinates not strictly increasing at column " +
                                               std::to_string(j + 1) + " (" + out.header[j - 1] + " then " +
                                               out.header[j] + ")");
      }
      out.values = parse_numeric_rows(rows, 1, out.header.size(), where);
      break;
    }
    case MatrixKind::Binary: {
      check_cell_header(out.header, where);
      out.values = parse_numeric_rows(rows, 1, out.header.size(), where);
      check_binary_entries(out.values, where);
      break;
    }
    case MatrixKind::Observation: {
      if (rows.size() != 2)
        fail(ErrorKind::Parse, where + ": observation file must hold exactly one data row, found " +
                                   std::to_string(rows.size() - 1));
      if (!header_is_numeric(out.header)) check_cell_header(out.header, where);
      out.values = parse_numeric_rows(rows, 1, out.header.size(), where);
      break;
    }
  }
  return out;
}

Design load_design(const fs::path& path) {
  auto file = load_matrix(path, MatrixKind::Design);
  return Design(file.values, file.labels);
}

void save_design(const Design& design, const fs::path& path) {
  std::string text = design.labels().empty() ? "p1,p2,p3,p4\n" : "p1,p2,p3,p4,label\n";
  for (Index i = 0; i < design.size(); ++i) {
    for (int k = 0; k < kParamDim; ++k) {
      if (k) text += ',';
      text += csv::format(design.points()(i, k));
    }
    if (!design.labels().empty()) text += ',' + design.labels()[i];
    text += '\n';
  }
  csv::write_text(path, text);
}

SeriesEnsemble load_series(const fs::path& path, const Design& design) {
  auto file = load_matrix(path, MatrixKind::Series);
  Eigen::VectorXd times(static_cast<Index>(file.header.size()));
  for (Index j = 0; j < times.size(); ++j) times[j] = csv::parse_double(file.header[j], path.string());
  try {
    return SeriesEnsemble(std::move(file.values), std::move(times), design);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

namespace {
std::vector<std::string> time_header(const Eigen::VectorXd& times) {
  std::vector<std::string> header;
  header.reserve(static_cast<std::size_t>(times.size()));
  for (Index j = 0; j < times.size(); ++j) header.push_back(csv::format(times[j]));
  return header;
}
}  // namespace

void save_series(const SeriesEnsemble& e, const fs::path& path) {
  csv::write_matrix(path, time_header(e.times()), e.values());
}

std::vector<std::string> grid_header(const Grid& grid) {
  std::vector<std::string> header;
  header.reserve(grid.cells().size());
  for (auto [r, c] : grid.cells()) header.push_back("r" + std::to_string(r) + "_c" + std::to_string(c));
  return header;
}

Grid load_grid_manifest(const fs::path& manifest) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_text(manifest));
    return Grid(j.at("grid_rows").get<int>(), j.at("grid_cols").get<int>(),
                j.value("mask", std::vector<int>{}), j.value("units", std::string("km")));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, manifest.string() + ": " + e.what());
  }
}

void save_grid_manifest(const Grid& grid, const fs::path& manifest) {
  nlohmann::ordered_json j;
  j["grid_rows"] = grid.rows();
  j["grid_cols"] = grid.cols();
  j["mask"] = grid.masked();
  j["units"] = grid.units();
  csv::write_text(manifest, j.dump(2) + "\n");
}

namespace {
void check_header_matches(const std::vector<std::string>& got, const std::vector<std::string>& want,
                          const std::string& where) {
  if (got.size() != want.size())
    fail(ErrorKind::InvalidArgument, where + ": " + std::to_string(got.size()) + " columns, expected " +
                                         std::to_string(want.size()));
  for (std::size_t j = 0; j < got.size(); ++j)
    if (got[j] != want[j])
      fail(ErrorKind::InvalidArgument, where + ": column " + std::to_string(j + 1) + " header '" + got[j] +
                                           "' does not match expected '" + want[j] + "'");
}
}  // namespace

BinaryEnsemble load_binary(const fs::path& path, const fs::path& manifest, const Design& design) {
  Grid grid = load_grid_manifest(manifest);
  auto file = load_matrix(path, MatrixKind::Binary);
  check_header_matches(file.header, grid_header(grid), path.string());
  return BinaryEnsemble(std::move(file.values), std::move(grid), design);
}

void save_binary(const BinaryEnsemble& e, const fs::path& path, const fs::path& manifest) {
  save_grid_manifest(e.grid(), manifest);
  csv::write_matrix(path, grid_header(e.grid()), e.values());
}

Eigen::MatrixXd load_field(const fs::path& path, const Grid& grid) {
  std::vector<std::string> header;
  Eigen::MatrixXd values = csv::read_matrix(path, &header);
  if (values.rows() == 0) fail(ErrorKind::Parse, path.string() + ": no rows");
  check_header_matches(header, grid_header(grid), path.string());
  return values;
}

void save_field(const Eigen::MatrixXd& values, const Grid& grid, const fs::path& path) {
  csv::write_matrix(path, grid_header(grid), values);
}

SeriesObservation load_series_observation(const fs::path& path, const Eigen::VectorXd& times) {
  auto file = load_matrix(path, MatrixKind::Observation);
  check_header_matches(file.header, time_header(times), path.string());
  return SeriesObservation{file.values.row(0).transpose()};
}

void save_series_observation(const SeriesObservation& z, const Eigen::VectorXd& times, const fs::path& path) {
  if (z.values.size() != times.size())
    fail(ErrorKind::InvalidArgument, "series observation length does not match time coordinates");
  csv::write_matrix(path, time_header(times), z.values.transpose());
}

BinaryObservation load_binary_observation(const fs::path& path, const Grid& grid) {
  auto file = load_matrix(path, MatrixKind::Observation);
  check_header_matches(file.header, grid_header(grid), path.string());
  check_binary_entries(file.values, path.string());
  return BinaryObservation{file.values.row(0).transpose()};
}

void save_binary_observation(const BinaryObservation& z, const Grid& grid, const fs::path& path) {
  if (z.values.size() != grid.active())
    fail(ErrorKind::InvalidArgument, "binary observation length does not match grid");
  check_binary_entries(z.values.transpose(), "binary observation");
  csv::write_matrix(path, grid_header(grid), z.values.transpose());
}

ExclusionResult exclude_unrealistic_runs(const SeriesEnsemble& e, double threshold_position, double cutoff_time) {
  ExclusionResult out;
  const auto& t = e.times();
  for (Index i = 0; i < e.runs(); ++i) {
    bool crossed = false;
    for (Index j = 0; j < t.size() && t[j] < cutoff_time; ++j)
      if (e.values()(i, j) <= threshold_position) {
        crossed = true;
        break;
      }
    (crossed ? out.excluded_rows : out.retained_rows).push_back(i);
  }
  if (out.retained_rows.empty()) {
    out.warnings.push_back("exclusion rule removed every run");
    out.retained = SeriesEnsemble(Eigen::MatrixXd(0, e.length()), e.times(), Design());
  } else {
    out.retained = e.subset(out.retained_rows);
  }
  return out;
}

}  // namespace redcal
