#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <Eigen/Dense>

#include "modreg/crossfit.hpp"
#include "modreg/dataset.hpp"
#include "modreg/lambda_path.hpp"
#include "modreg/learners.hpp"
#include "modreg/modular.hpp"

namespace modreg {

/// Three observation patterns: full triples (X, Z, Y), (X, Z) pairs and
/// (Z, Y) pairs. Any block may be empty.
///
/// Rows share one id space used by cross-fitting and CV: triples take
/// [0, n), xz pairs [n, n + n_xz), zy pairs follow.
class FusionDataset {
 public:
  FusionDataset(Dataset triples, Dataset xz_pairs, Dataset zy_pairs);

  const Dataset& triples() const noexcept { return triples_; }
  const Dataset& xz_pairs() const noexcept { return xz_; }
  const Dataset& zy_pairs() const noexcept { return zy_; }
  Index n() const noexcept { return triples_.rows(); }
  Index n_xz() const noexcept { return xz_.rows(); }
  Index n_yz() const noexcept { return zy_.rows(); }
  Index p_x() const noexcept { return p_x_; }
  Index p_z() const noexcept { return p_z_; }
  bool pairs_empty() const noexcept { return n_xz() == 0 && n_yz() == 0; }

  /// X of every X-bearing row: triples then xz pairs.
  Eigen::MatrixXd x_rows() const;

  /// Empty path means empty block. Pair files may omit the columns their
  /// pattern lacks.
  static FusionDataset load(const std::filesystem::path& triples, const std::filesystem::path& xz,
                            const std::filesystem::path& zy, const Schema& schema);

 private:
  Dataset triples_;
  Dataset xz_;
  Dataset zy_;
  Index p_x_ = 0;
  Index p_z_ = 0;
};

/// Sub-task predictions at every row of every block. mu_x_hat is needed on
/// triples and zy pairs, mu_y_hat on triples and xz pairs; both enter the
/// product term everywhere. Blocks excluded by a structured fit have 0 rows.
struct FusionPredictions {
  CrossFitPredictions triples;
  CrossFitPredictions xz;
  CrossFitPredictions zy;
};

/// Fold plan over the fused id space: each block is split in two on its own
/// stream (triples with `seed`, so a triples-only plan equals
/// split_folds(n, 2, seed)). Fold-k models are trained on every row of the
/// relevant blocks outside fold k. A block of one row lands in fold 0.
///
/// With a partition, mu_x covers J1 on (Z, X_J2) from triples and xz pairs,
/// mu_x for J2 is X itself, and mu_y is fitted on (Z, X_J2) from the triples
/// alone; zy pairs are then unused. Requires triples.
FusionPredictions crossfit_fusion(const FusionDataset& fd, const Learner& learner_x, const Learner& learner_y,
                                  std::uint64_t seed, const std::optional<StructurePartition>& partition = std::nullopt);

/// Three signed block averages:
///   + mean over triples and xz pairs of X_i mu_y(Z_i)
///   + mean over triples and zy pairs of mu_x(Z_i) Y_i
///   - mean over all rows of mu_x(Z_i) mu_y(Z_i).
/// Without triples this is the missing-data cross term (kind miss). With a
/// partition the second average runs over triples only and the third over
/// triples and xz pairs. When both pair blocks are empty the result is the
/// single-dataset three-term cross term of the triples.
ProxyCrossTerm assemble_cross_term(const FusionDataset& fd, const FusionPredictions& preds,
                                   const std::optional<StructurePartition>& partition = std::nullopt);

/// Cross term from (X, Z) and (Z, Y) pairs only. Needs both pair blocks and
/// assumes X independent of Y given Z.
ProxyCrossTerm proxy_cross_term_miss(const FusionDataset& fd, const Learner& learner_x, const Learner& learner_y,
                                     std::uint64_t seed);

/// Cross term from all blocks.
ProxyCrossTerm proxy_cross_term_part(const FusionDataset& fd, const Learner& learner_x, const Learner& learner_y,
                                     std::uint64_t seed,
                                     const std::optional<StructurePartition>& partition = std::nullopt);

/// Gram matrix over every X-bearing row, then theta = Gram^{-1} c or, when
/// `penalized` is set, the l1 path with CV. Pair-free data give exactly the
/// single-dataset modular estimator on the triples.
ModularFit fusion_fit(const FusionDataset& fd, const ProxyCrossTerm& c,
                      const std::optional<PenaltyConfig>& penalized = std::nullopt, std::uint64_t seed = 0);

}  // namespace modreg
