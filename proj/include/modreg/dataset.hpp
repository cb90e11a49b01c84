#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace modreg {

using Eigen::Index;

/// Column-major numeric table: covariates X, auxiliaries Z, outcome Y.
///
/// Every block is optional but all present blocks share one row count and
/// contain only finite values. A default-constructed Dataset is empty (n = 0);
/// a Dataset built from blocks must have n >= 1. No intercept column is ever
/// added implicitly.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::optional<Eigen::MatrixXd> x, std::optional<Eigen::MatrixXd> z, std::optional<Eigen::VectorXd> y,
          std::vector<std::string> column_names = {});

  Index rows() const noexcept { return rows_; }
  bool empty() const noexcept { return rows_ == 0; }

  bool has_x() const noexcept { return x_.has_value(); }
  bool has_z() const noexcept { return z_.has_value(); }
  bool has_y() const noexcept { return y_.has_value(); }

  /// Throws DataError when the block is absent.
  const Eigen::MatrixXd& x() const;
  const Eigen::MatrixXd& z() const;
  const Eigen::VectorXd& y() const;

  Index p_x() const noexcept { return x_ ? x_->cols() : 0; }
  Index p_z() const noexcept { return z_ ? z_->cols() : 0; }

  const std::vector<std::string>& column_names() const noexcept { return names_; }

  /// Rows in the given order; absent blocks stay absent.
  Dataset subset(const std::vector<Index>& rows) const;

 private:
  std::optional<Eigen::MatrixXd> x_;
  std::optional<Eigen::MatrixXd> z_;
  std::optional<Eigen::VectorXd> y_;
  std::vector<std::string> names_;
  Index rows_ = 0;
};

/// Random partition of rows 0..n-1 into k folds of near-equal size.
///
/// Fold ids are 0-based. A permutation drawn from SplitMix64(seed) is dealt
/// round-robin, so sizes differ by at most one and the assignment depends
/// only on (n, k, seed).
struct FoldAssignment {
  std::vector<int> fold_of_row;
  int k = 0;
  std::uint64_t seed = 0;

  Index rows() const noexcept { return static_cast<Index>(fold_of_row.size()); }
  std::vector<Index> rows_in(int fold) const;
  std::vector<Index> rows_not_in(int fold) const;
  std::vector<Index> fold_sizes() const;
};

FoldAssignment split_folds(Index n, int k, std::uint64_t seed);

/// Per-column centering and scaling. Scales are population (1/n) standard
/// deviations; constant columns get scale 1 and are only centered.
struct StandardizationSpec {
  Eigen::VectorXd means;
  Eigen::VectorXd scales;

  static StandardizationSpec fit(const Eigen::MatrixXd& m);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& m) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& m) const;
};

struct StandardizedDataset {
  Dataset data;
  std::optional<StandardizationSpec> x;
  std::optional<StandardizationSpec> z;
  std::optional<StandardizationSpec> y;

  /// Maps a dataset on the standardized scale back to the original scale.
  Dataset invert(const Dataset& d) const;
};

StandardizedDataset standardize(const Dataset& d);

enum class ColumnRole { x, z, y, ignore };

using Schema = std::map<std::string, ColumnRole>;

ColumnRole parse_column_role(const std::string& s);

/// Parses a JSON object {column_name: "x"|"z"|"y"|"ignore"}.
Schema parse_schema_json(const std::string& text);
Schema load_schema(const std::filesystem::path& path);

/// Schema columns whose role is listed here may be missing from the file;
/// used for pair-only fusion blocks.
struct CsvOptions {
  std::vector<ColumnRole> optional_roles;
};

/// Reads an RFC-4180 CSV with a header row and routes columns per `schema`.
/// Header columns absent from the schema are ignored. At most one column may
/// have role y. Row order is preserved.
Dataset load_csv(const std::filesystem::path& path, const Schema& schema, const CsvOptions& options = {});
Dataset parse_csv(const std::string& text, const Schema& schema, const CsvOptions& options = {},
                  const std::string& source = "<memory>");

}  // namespace modreg
