#include "modreg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "modreg/error.hpp"
#include "modreg/random.hpp"

namespace modreg {

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::optional<Eigen::MatrixXd> x, std::optional<Eigen::MatrixXd> z,
                 std::optional<Eigen::VectorXd> y, std::vector<std::string> column_names)
    : x_{std::move(x)}, z_{std::move(z)}, y_{std::move(y)}, names_{std::move(column_names)} {
  std::optional<Index> n;
  auto check = [&](Index rows, const char* block, bool finite) {
    if (n && *n != rows)
      throw DataError(std::string("block ") + block + " has " + std::to_string(rows) + " rows, expected " +
                      std::to_string(*n));
    n = rows;
    if (!finite) throw DataError(std::string("block ") + block + " contains NaN or Inf");
  };
  if (x_) check(x_->rows(), "x", x_->allFinite());
  if (z_) check(z_->rows(), "z", z_->allFinite());
  if (y_) check(y_->rows(), "y", y_->allFinite());
  if (!n) throw DataError("dataset needs at least one block");
  if (*n < 1) throw DataError("dataset needs at least one row");
  rows_ = *n;
}

const Eigen::MatrixXd& Dataset::x() const {
  if (!x_) throw DataError("dataset has no x block");
  return *x_;
}

const Eigen::MatrixXd& Dataset::z() const {
  if (!z_) throw DataError("dataset has no z block");
  return *z_;
}

const Eigen::VectorXd& Dataset::y() const {
  if (!y_) throw DataError("dataset has no y block");
  return *y_;
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  if (rows.empty()) return Dataset{};
  std::optional<Eigen::MatrixXd> x, z;
  std::optional<Eigen::VectorXd> y;
  if (x_) x = (*x_)(rows, Eigen::all);
  if (z_) z = (*z_)(rows, Eigen::all);
  if (y_) y = (*y_)(rows);
  return Dataset(std::move(x), std::move(z), std::move(y), names_);
}

// ---------------------------------------------------------------------------
// Folds

std::vector<Index> FoldAssignment::rows_in(int fold) const {
  std::vector<Index> out;
  for (Index i = 0; i < rows(); ++i)
    if (fold_of_row[i] == fold) out.push_back(i);
  return out;
}

std::vector<Index> FoldAssignment::rows_not_in(int fold) const {
  std::vector<Index> out;
  for (Index i = 0; i < rows(); ++i)
    if (fold_of_row[i] != fold) out.push_back(i);
  return out;
}

std::vector<Index> FoldAssignment::fold_sizes() const {
  std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
  for (int f : fold_of_row) ++sizes[f];
  return sizes;
}

FoldAssignment split_folds(Index n, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("split_folds: need k >= 2, got " + std::to_string(k));
  if (k > n)
    throw std::invalid_argument("split_folds: k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
  SplitMix64 rng(seed);
  const auto perm = random_permutation(n, rng);
  FoldAssignment folds;
  folds.k = k;
  folds.seed = seed;
  folds.fold_of_row.assign(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i) folds.fold_of_row[perm[i]] = static_cast<int>(i % k);
  return folds;
}

// ---------------------------------------------------------------------------
// Standardization

StandardizationSpec StandardizationSpec::fit(const Eigen::MatrixXd& m) {
  if (m.rows() < 2) throw DataError("standardize needs at least two rows");
  StandardizationSpec spec;
  spec.means = m.colwise().mean().transpose();
  spec.scales.resize(m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    const double var = (m.col(j).array() - spec.means(j)).square().mean();
    const double sd = std::sqrt(var);
    const bool constant = sd <= 1e-12 * std::max(1.0, std::abs(spec.means(j)));
    spec.scales(j) = constant ? 1.0 : sd;
  }
  return spec;
}

Eigen::MatrixXd StandardizationSpec::apply(const Eigen::MatrixXd& m) const {
  return ((m.rowwise() - means.transpose()).array().rowwise() / scales.transpose().array()).matrix();
}

Eigen::MatrixXd StandardizationSpec::invert(const Eigen::MatrixXd& m) const {
  return ((m.array().rowwise() * scales.transpose().array()).rowwise() + means.transpose().array()).matrix();
}

StandardizedDataset standardize(const Dataset& d) {
  StandardizedDataset out;
  std::optional<Eigen::MatrixXd> x, z;
  std::optional<Eigen::VectorXd> y;
  if (d.has_x()) {
    out.x = StandardizationSpec::fit(d.x());
    x = out.x->apply(d.x());
  }
  if (d.has_z()) {
    out.z = StandardizationSpec::fit(d.z());
    z = out.z->apply(d.z());
  }
  if (d.has_y()) {
    out.y = StandardizationSpec::fit(d.y());
    y = out.y->apply(d.y()).col(0);
  }
  out.data = Dataset(std::move(x), std::move(z), std::move(y), d.column_names());
  return out;
}

Dataset StandardizedDataset::invert(const Dataset& d) const {
  std::optional<Eigen::MatrixXd> xo, zo;
  std::optional<Eigen::VectorXd> yo;
  if (d.has_x()) xo = x ? x->invert(d.x()) : d.x();
  if (d.has_z()) zo = z ? z->invert(d.z()) : d.z();
  if (d.has_y()) yo = y ? Eigen::VectorXd(y->invert(d.y()).col(0)) : d.y();
  return Dataset(std::move(xo), std::move(zo), std::move(yo), d.column_names());
}

// ---------------------------------------------------------------------------
// CSV

ColumnRole parse_column_role(const std::string& s) {
  if (s == "x") return ColumnRole::x;
  if (s == "z") return ColumnRole::z;
  if (s == "y") return ColumnRole::y;
  if (s == "ignore") return ColumnRole::ignore;
  throw DataError("unknown column role '" + s + "' (expected x, z, y or ignore)");
}

Schema parse_schema_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("schema is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("schema must be a JSON object");
  Schema schema;
  for (const auto& [name, role] : j.items()) {
    if (!role.is_string()) throw DataError("schema role for '" + name + "' must be a string");
    schema[name] = parse_column_role(role.get<std::string>());
  }
  return schema;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// RFC-4180 records: quoted fields, doubled quotes, CRLF or LF line ends.
std::vector<std::vector<std::string>> split_records(const std::string& text, const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;  // UTF-8 BOM
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw DataError(source + ": unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  return records;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

Dataset parse_csv(const std::string& text, const Schema& schema, const CsvOptions& options,
                  const std::string& source) {
  const auto records = split_records(text, source);
  if (records.empty()) throw DataError(source + ": missing header row");
  const auto& header = records.front();

  std::map<std::string, std::size_t> position;
  for (std::size_t c = 0; c < header.size(); ++c) position.emplace(trim(header[c]), c);

  std::vector<std::size_t> xs, zs, ys;
  std::vector<std::string> x_names, z_names, y_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto it = schema.find(trim(header[c]));
    if (it == schema.end()) continue;
    switch (it->second) {
      case ColumnRole::x: xs.push_back(c); x_names.push_back(it->first); break;
      case ColumnRole::z: zs.push_back(c); z_names.push_back(it->first); break;
      case ColumnRole::y: ys.push_back(c); y_names.push_back(it->first); break;
      case ColumnRole::ignore: break;
    }
  }
  for (const auto& [name, role] : schema) {
    if (position.count(name)) continue;
    const bool optional =
        std::find(options.optional_roles.begin(), options.optional_roles.end(), role) != options.optional_roles.end();
    if (role != ColumnRole::ignore && !optional)
      throw DataError(source + ": schema names column '" + name + "' which is absent from the header");
  }
  if (ys.size() > 1) throw DataError(source + ": schema assigns role y to more than one column");

  const auto n = static_cast<Index>(records.size() - 1);
  if (n < 1) throw DataError(source + ": no data rows");

  auto parse_block = [&](const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd m(n, static_cast<Index>(cols.size()));
    for (Index r = 0; r < n; ++r) {
      const auto& rec = records[static_cast<std::size_t>(r) + 1];
      for (std::size_t j = 0; j < cols.size(); ++j) {
        const std::size_t c = cols[j];
        const std::string name = trim(header[c]);
        if (c >= rec.size())
          throw DataError(source + ": row " + std::to_string(r + 1) + " is missing column '" + name + "'");
        const std::string cell = trim(rec[c]);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v))
          throw DataError(source + ": non-numeric value '" + cell + "' at row " + std::to_string(r + 1) +
                          ", column '" + name + "'");
        m(r, static_cast<Index>(j)) = v;
      }
    }
    return m;
  };

  std::optional<Eigen::MatrixXd> x, z;
  std::optional<Eigen::VectorXd> y;
  if (!xs.empty()) x = parse_block(xs);
  if (!zs.empty()) z = parse_block(zs);
  if (!ys.empty()) y = parse_block(ys).col(0);

  std::vector<std::string> names = x_names;
  names.insert(names.end(), z_names.begin(), z_names.end());
  names.insert(names.end(), y_names.begin(), y_names.end());
  if (!x && !z && !y) throw DataError(source + ": schema selects no columns");
  return Dataset(std::move(x), std::move(z), std::move(y), std::move(names));
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema, const CsvOptions& options) {
  return parse_csv(read_file(path), schema, options, path.string());
}

Schema load_schema(const std::filesystem::path& path) { return parse_schema_json(read_file(path)); }

}  // namespace modreg
