#include "modreg/fusion.hpp"

#include <cmath>
#include <numeric>

#include "modreg/error.hpp"
#include "modreg/highdim.hpp"
#include "modreg/linalg.hpp"
#include "modreg/random.hpp"

namespace modreg {

namespace {

void require_blocks(const Dataset& d, bool x, bool z, bool y, const char* name) {
  if (d.empty()) return;
  if ((x && !d.has_x()) || (z && !d.has_z()) || (y && !d.has_y()))
    throw DataError(std::string(name) + " block lacks a required column group (needs" + (x ? " x" : "") +
                    (z ? " z" : "") + (y ? " y" : "") + ")");
}

Dataset keep_blocks(const Dataset& d, bool x, bool y) {
  if (d.empty()) return d;
  return Dataset(x ? std::optional<Eigen::MatrixXd>(d.x()) : std::nullopt, d.z(),
                 y ? std::optional<Eigen::VectorXd>(d.y()) : std::nullopt, d.column_names());
}

}  // namespace

FusionDataset::FusionDataset(Dataset triples, Dataset xz_pairs, Dataset zy_pairs) {
  require_blocks(triples, true, true, true, "triples");
  require_blocks(xz_pairs, true, true, false, "xz");
  require_blocks(zy_pairs, false, true, true, "zy");
  triples_ = std::move(triples);
  xz_ = keep_blocks(xz_pairs, true, false);
  zy_ = keep_blocks(zy_pairs, false, true);
  if (triples_.empty() && xz_.empty() && zy_.empty()) throw DataError("fusion data has no rows in any block");

  std::optional<Index> px, pz;
  auto agree = [](std::optional<Index>& slot, Index value, const char* what) {
    if (slot && *slot != value)
      throw DataError(std::string("fusion blocks disagree on ") + what + ": " + std::to_string(*slot) + " vs " +
                      std::to_string(value));
    slot = value;
  };
  for (const Dataset* d : {&triples_, &xz_, &zy_}) {
    if (d->empty()) continue;
    if (d->has_x()) agree(px, d->p_x(), "p_x");
    agree(pz, d->p_z(), "p_z");
  }
  p_x_ = px.value_or(0);
  p_z_ = pz.value_or(0);
}

Eigen::MatrixXd FusionDataset::x_rows() const {
  Eigen::MatrixXd out(n() + n_xz(), p_x_);
  if (n() > 0) out.topRows(n()) = triples_.x();
  if (n_xz() > 0) out.bottomRows(n_xz()) = xz_.x();
  return out;
}

FusionDataset FusionDataset::load(const std::filesystem::path& triples, const std::filesystem::path& xz,
                                  const std::filesystem::path& zy, const Schema& schema) {
  auto read = [&](const std::filesystem::path& p, std::vector<ColumnRole> optional) {
    if (p.empty()) return Dataset{};
    return load_csv(p, schema, CsvOptions{std::move(optional)});
  };
  return FusionDataset(read(triples, {}), read(xz, {ColumnRole::y}), read(zy, {ColumnRole::x}));
}

// ---------------------------------------------------------------------------
// Cross-fitting over the fused id space

namespace {

std::vector<int> two_fold_plan(Index n, std::uint64_t seed) {
  if (n == 0) return {};
  if (n == 1) return {0};
  return split_folds(n, 2, seed).fold_of_row;
}

std::vector<Index> rows_where(const std::vector<int>& fold, int k, bool in) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if ((fold[i] == k) == in) out.push_back(static_cast<Index>(i));
  return out;
}

Eigen::MatrixXd stack(const Eigen::MatrixXd& a, const std::vector<Index>& ra, const Eigen::MatrixXd& b,
                      const std::vector<Index>& rb, Index cols) {
  Eigen::MatrixXd out(static_cast<Index>(ra.size() + rb.size()), cols);
  if (!ra.empty()) out.topRows(static_cast<Index>(ra.size())) = a(ra, Eigen::all);
  if (!rb.empty()) out.bottomRows(static_cast<Index>(rb.size())) = b(rb, Eigen::all);
  return out;
}

std::vector<std::unique_ptr<Model>> fit_x_models(const Learner& learner, const Eigen::MatrixXd& features,
                                                 const Eigen::MatrixXd& targets, int k) {
  try {
    return learner.fit_columns(features, targets);
  } catch (const std::exception& e) {
    throw DataError("learner '" + learner.name() + "' failed on fold " + std::to_string(k) + " for the x targets: " +
                    e.what());
  }
}

std::unique_ptr<Model> fit_y_model(const Learner& learner, const Eigen::MatrixXd& features,
                                   const Eigen::VectorXd& targets, int k) {
  try {
    return learner.fit(features, targets);
  } catch (const std::exception& e) {
    throw DataError("learner '" + learner.name() + "' failed on fold " + std::to_string(k) + " for the y target: " +
                    e.what());
  }
}

void predict_into(CrossFitPredictions& out, const std::vector<Index>& rows, const Eigen::MatrixXd& features,
                  const std::vector<std::unique_ptr<Model>>& mx, const std::vector<Index>& x_cols,
                  const Model& my, int k) {
  if (rows.empty()) return;
  const Eigen::MatrixXd f = features(rows, Eigen::all);
  for (std::size_t j = 0; j < x_cols.size(); ++j) out.mu_x_hat(rows, x_cols[j]) = mx[j]->predict(f);
  out.mu_y_hat(rows) = my.predict(f);
  for (Index i : rows) out.trained_without[static_cast<std::size_t>(i)] = k;
}

CrossFitPredictions empty_predictions(Index n, Index p_x) {
  CrossFitPredictions p;
  p.mu_x_hat.resize(n, p_x);
  p.mu_y_hat.resize(n);
  p.trained_without.assign(static_cast<std::size_t>(n), -1);
  return p;
}

}  // namespace

FusionPredictions crossfit_fusion(const FusionDataset& fd, const Learner& learner_x, const Learner& learner_y,
                                  std::uint64_t seed, const std::optional<StructurePartition>& partition) {
  const Index px = fd.p_x();
  if (fd.p_z() < 1) throw DataError("fusion cross-fitting needs at least one auxiliary (z) column");
  FusionPredictions out;

  if (partition) {
    if (fd.n() == 0) throw DataError("structure-aware fusion needs full (x, z, y) observations");
    partition->validate(px);
    const auto& j1 = partition->j1;
    const auto& j2 = partition->j2;
    auto features = [&](const Dataset& d) {
      Eigen::MatrixXd w(d.rows(), d.p_z() + static_cast<Index>(j2.size()));
      w << d.z(), d.x()(Eigen::all, j2);
      return w;
    };
    const Dataset& t = fd.triples();
    const Dataset& a = fd.xz_pairs();
    const Eigen::MatrixXd wt = features(t);
    const Eigen::MatrixXd wa = fd.n_xz() > 0 ? features(a) : Eigen::MatrixXd(0, wt.cols());
    const Eigen::MatrixXd xt1 = t.x()(Eigen::all, j1);
    const Eigen::MatrixXd xa1 = fd.n_xz() > 0 ? Eigen::MatrixXd(a.x()(Eigen::all, j1)) : Eigen::MatrixXd(0, xt1.cols());
    const auto ft = two_fold_plan(fd.n(), seed);
    const auto fa = two_fold_plan(fd.n_xz(), derive_seed(seed, 1));
    out.triples = empty_predictions(fd.n(), px);
    out.xz = empty_predictions(fd.n_xz(), px);
    out.zy = empty_predictions(0, px);
    for (int k = 0; k < 2; ++k) {
      const auto t_in = rows_where(ft, k, true), a_in = rows_where(fa, k, true);
      if (t_in.empty() && a_in.empty()) continue;
      const auto t_out = rows_where(ft, k, false), a_out = rows_where(fa, k, false);
      std::vector<std::unique_ptr<Model>> mx;
      if (!j1.empty())
        mx = fit_x_models(learner_x, stack(wt, t_out, wa, a_out, wt.cols()),
                          stack(xt1, t_out, xa1, a_out, xt1.cols()), k);
      const auto my = fit_y_model(learner_y, wt(t_out, Eigen::all), t.y()(t_out), k);
      predict_into(out.triples, t_in, wt, mx, j1, *my, k);
      predict_into(out.xz, a_in, wa, mx, j1, *my, k);
    }
    if (!j2.empty()) {
      out.triples.mu_x_hat(Eigen::all, j2) = t.x()(Eigen::all, j2);
      if (fd.n_xz() > 0) out.xz.mu_x_hat(Eigen::all, j2) = a.x()(Eigen::all, j2);
    }
    return out;
  }

  if (fd.pairs_empty()) {
    out.triples = crossfit_means(fd.triples(), learner_x, learner_y, split_folds(fd.n(), 2, seed));
    out.xz = empty_predictions(0, px);
    out.zy = empty_predictions(0, px);
    return out;
  }

  const Dataset& t = fd.triples();
  const Dataset& a = fd.xz_pairs();
  const Dataset& b = fd.zy_pairs();
  const Index pz = fd.p_z();
  const Eigen::MatrixXd zt = fd.n() > 0 ? t.z() : Eigen::MatrixXd(0, pz);
  const Eigen::MatrixXd za = fd.n_xz() > 0 ? a.z() : Eigen::MatrixXd(0, pz);
  const Eigen::MatrixXd zb = fd.n_yz() > 0 ? b.z() : Eigen::MatrixXd(0, pz);
  const Eigen::MatrixXd xt = fd.n() > 0 ? t.x() : Eigen::MatrixXd(0, px);
  const Eigen::MatrixXd xa = fd.n_xz() > 0 ? a.x() : Eigen::MatrixXd(0, px);
  const Eigen::MatrixXd yt = fd.n() > 0 ? Eigen::MatrixXd(t.y()) : Eigen::MatrixXd(0, 1);
  const Eigen::MatrixXd yb = fd.n_yz() > 0 ? Eigen::MatrixXd(b.y()) : Eigen::MatrixXd(0, 1);
  const auto ft = two_fold_plan(fd.n(), seed);
  const auto fa = two_fold_plan(fd.n_xz(), derive_seed(seed, 1));
  const auto fb = two_fold_plan(fd.n_yz(), derive_seed(seed, 2));
  out.triples = empty_predictions(fd.n(), px);
  out.xz = empty_predictions(fd.n_xz(), px);
  out.zy = empty_predictions(fd.n_yz(), px);
  std::vector<Index> all_cols(static_cast<std::size_t>(px));
  std::iota(all_cols.begin(), all_cols.end(), Index{0});

  for (int k = 0; k < 2; ++k) {
    const auto t_in = rows_where(ft, k, true), a_in = rows_where(fa, k, true), b_in = rows_where(fb, k, true);
    if (t_in.empty() && a_in.empty() && b_in.empty()) continue;
    const auto t_out = rows_where(ft, k, false), a_out = rows_where(fa, k, false), b_out = rows_where(fb, k, false);
    const auto mx = fit_x_models(learner_x, stack(zt, t_out, za, a_out, pz), stack(xt, t_out, xa, a_out, px), k);
    const auto my = fit_y_model(learner_y, stack(zt, t_out, zb, b_out, pz),
                                Eigen::VectorXd(stack(yt, t_out, yb, b_out, 1).col(0)), k);
    predict_into(out.triples, t_in, zt, mx, all_cols, *my, k);
    predict_into(out.xz, a_in, za, mx, all_cols, *my, k);
    predict_into(out.zy, b_in, zb, mx, all_cols, *my, k);
  }
  for (const auto* p : {&out.triples, &out.xz, &out.zy})
    if (!p->mu_x_hat.allFinite() || !p->mu_y_hat.allFinite())
      throw NumericalError("cross-fitted predictions contain NaN or Inf");
  return out;
}

// ---------------------------------------------------------------------------
// Cross terms

namespace {

struct TermBuilder {
  std::vector<Eigen::MatrixXd> parts;
  std::vector<Index> ids;

  void add(Eigen::MatrixXd rows, Index offset) {
    for (Index i = 0; i < rows.rows(); ++i) ids.push_back(offset + i);
    parts.push_back(std::move(rows));
  }

  RowAverageTerm finish(Index p, double sign, const char* what) {
    if (ids.empty()) throw DataError(std::string("cross term is not identifiable: no rows for ") + what);
    Eigen::MatrixXd rows(static_cast<Index>(ids.size()), p);
    Index at = 0;
    for (auto& m : parts) {
      rows.middleRows(at, m.rows()) = m;
      at += m.rows();
    }
    return RowAverageTerm{std::move(rows), std::move(ids), sign};
  }
};

void check_predictions(const CrossFitPredictions& p, Index n, Index px, const char* block) {
  if (p.mu_x_hat.rows() != n || p.mu_x_hat.cols() != px || p.mu_y_hat.size() != n)
    throw DataError(std::string("predictions for the ") + block + " block do not match its shape");
}

}  // namespace

ProxyCrossTerm assemble_cross_term(const FusionDataset& fd, const FusionPredictions& preds,
                                   const std::optional<StructurePartition>& partition) {
  const Index px = fd.p_x();
  const Index n = fd.n(), nxz = fd.n_xz(), nyz = fd.n_yz();
  check_predictions(preds.triples, n, px, "triples");
  check_predictions(preds.xz, nxz, px, "xz");
  if (!partition) check_predictions(preds.zy, nyz, px, "zy");
  if (partition) partition->validate(px);

  if (fd.pairs_empty()) {
    const Dataset& t = fd.triples();
    ProxyCrossTerm ct = make_row_cross_term(
        cross_term_rows(t.x(), t.y(), preds.triples.mu_x_hat, preds.triples.mu_y_hat), CrossTermKind::part);
    ct.partition = partition;
    return ct;
  }

  const Dataset& t = fd.triples();
  const Dataset& a = fd.xz_pairs();
  const Dataset& b = fd.zy_pairs();
  TermBuilder t1, t2, t3;
  if (n > 0) {
    t1.add(scale_rows(t.x(), preds.triples.mu_y_hat), 0);
    t2.add(scale_rows(preds.triples.mu_x_hat, t.y()), 0);
    t3.add(scale_rows(preds.triples.mu_x_hat, preds.triples.mu_y_hat), 0);
  }
  if (nxz > 0) {
    t1.add(scale_rows(a.x(), preds.xz.mu_y_hat), n);
    t3.add(scale_rows(preds.xz.mu_x_hat, preds.xz.mu_y_hat), n);
  }
  if (nyz > 0 && !partition) {
    t2.add(scale_rows(preds.zy.mu_x_hat, b.y()), n + nxz);
    t3.add(scale_rows(preds.zy.mu_x_hat, preds.zy.mu_y_hat), n + nxz);
  }
  ProxyCrossTerm ct;
  ct.kind = n == 0 ? CrossTermKind::miss : CrossTermKind::part;
  ct.partition = partition;
  ct.terms.push_back(t1.finish(px, 1.0, "x times mu_y (needs x-bearing rows)"));
  ct.terms.push_back(t2.finish(px, 1.0, "mu_x times y (needs y-bearing rows)"));
  ct.terms.push_back(t3.finish(px, -1.0, "mu_x times mu_y"));
  ct.c_hat = evaluate_terms(ct.terms, px);
  if (!ct.c_hat.allFinite()) throw NumericalError("cross term is not finite");
  return ct;
}

ProxyCrossTerm proxy_cross_term_miss(const FusionDataset& fd, const Learner& learner_x, const Learner& learner_y,
                                     std::uint64_t seed) {
  if (fd.n() > 0) throw DataError("the missing-data cross term expects no full triples; use the partial form");
  if (fd.n_xz() < 1 || fd.n_yz() < 1)
    throw DataError("the missing-data cross term needs both (x, z) and (z, y) pairs");
  return assemble_cross_term(fd, crossfit_fusion(fd, learner_x, learner_y, seed));
}

ProxyCrossTerm proxy_cross_term_part(const FusionDataset& fd, const Learner& learner_x, const Learner& learner_y,
                                     std::uint64_t seed, const std::optional<StructurePartition>& partition) {
  if (fd.n() + fd.n_xz() < 1) throw DataError("no (x, z) observations: E[XY] is not identifiable");
  if (fd.n() + fd.n_yz() < 1) throw DataError("no (z, y) observations: E[XY] is not identifiable");
  return assemble_cross_term(fd, crossfit_fusion(fd, learner_x, learner_y, seed, partition), partition);
}

// ---------------------------------------------------------------------------
// Estimation

namespace {

/// Folds dealt block by block so every block is spread over all folds.
FoldAssignment stratified_folds(const std::vector<Index>& sizes, int k, std::uint64_t seed) {
  FoldAssignment f;
  f.k = k;
  f.seed = seed;
  Index dealt = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    SplitMix64 rng(derive_seed(seed, b));
    const auto perm = random_permutation(sizes[b], rng);
    std::vector<int> fold(static_cast<std::size_t>(sizes[b]));
    for (Index i = 0; i < sizes[b]; ++i)
      fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = static_cast<int>((dealt + i) % k);
    f.fold_of_row.insert(f.fold_of_row.end(), fold.begin(), fold.end());
    dealt += sizes[b];
  }
  return f;
}

}  // namespace

ModularFit fusion_fit(const FusionDataset& fd, const ProxyCrossTerm& c, const std::optional<PenaltyConfig>& penalized,
                      std::uint64_t seed) {
  if (fd.n() + fd.n_xz() == 0)
    throw DataError("no rows observe x: E[XX^T] is not identifiable (provide triples or (x, z) pairs)");
  if (c.p() != fd.p_x()) throw DataError("cross term length does not match p_x");

  if (fd.pairs_empty()) {
    ModularFit fit = penalized ? modular_lasso(fd.triples(), c, *penalized, seed) : modular_ols(fd.triples(), c);
    if (c.kind == CrossTermKind::identity) fit.tag = penalized ? EstimatorTag::lasso : EstimatorTag::ols;
    return fit;
  }

  const Eigen::MatrixXd xr = fd.x_rows();
  const Eigen::MatrixXd gram = second_moment(xr);
  ModularFit fit;
  fit.n = fd.n() + fd.n_xz() + fd.n_yz();
  fit.partition = c.partition;
  if (!penalized) {
    fit.theta_hat = solve_modular_normal_equations(gram, c.c_hat);
    fit.objective_value = 0.5 * fit.theta_hat.dot(gram * fit.theta_hat) - c.c_hat.dot(fit.theta_hat);
    fit.tag = EstimatorTag::mod_ols;
    return fit;
  }

  PenalizedProblem pr;
  pr.gram_rows = xr;
  pr.gram_ids.resize(static_cast<std::size_t>(xr.rows()));
  std::iota(pr.gram_ids.begin(), pr.gram_ids.end(), Index{0});
  pr.terms = c.terms;
  pr.n_ids = fit.n;
  pr.loss = CvLoss::modular_quadratic;
  pr.gram = gram;
  pr.linear = c.c_hat;
  pr.folds = stratified_folds({fd.n(), fd.n_xz(), fd.n_yz()}, penalized->cv_folds, seed);
  auto path = cv_lambda_path(pr, *penalized, seed);
  fit.theta_hat = path.chosen_theta();
  double l1 = 0.0;
  for (Index j = 0; j < fit.theta_hat.size(); ++j)
    l1 += (penalized->standardize && gram(j, j) > 0.0 ? std::sqrt(gram(j, j)) : 1.0) * std::abs(fit.theta_hat(j));
  fit.objective_value = 0.5 * fit.theta_hat.dot(gram * fit.theta_hat) - c.c_hat.dot(fit.theta_hat) +
                        path.chosen_lambda() * l1;
  fit.tag = EstimatorTag::mod_lasso;
  fit.path = std::move(path);
  return fit;
}

}  // namespace modreg
