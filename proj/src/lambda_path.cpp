#include "modreg/lambda_path.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "modreg/dataset.hpp"
#include "modreg/error.hpp"
#include "modreg/linalg.hpp"
#include "modreg/parallel.hpp"

namespace modreg {

void PenaltyConfig::validate() const {
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > 0.0) || !std::isfinite(lambda_grid[i]))
      throw std::invalid_argument("lambda grid entries must be positive and finite");
    if (i > 0 && !(lambda_grid[i] < lambda_grid[i - 1]))
      throw std::invalid_argument("lambda grid must be strictly decreasing");
  }
  if (lambda_grid.empty() && n_lambda < 1) throw std::invalid_argument("empty lambda grid");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0))
    throw std::invalid_argument("lambda_min_ratio must lie in (0, 1)");
  if (ridge_eta < 0.0) throw std::invalid_argument("ridge_eta must be nonnegative");
  if (cv_folds < 2) throw std::invalid_argument("cv_folds must be at least 2");
}

Eigen::VectorXd evaluate_terms(const std::vector<RowAverageTerm>& terms, Index p) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
  for (const auto& t : terms) {
    if (t.rows.rows() == 0) continue;
    c += t.sign * t.rows.colwise().mean().transpose();
  }
  return c;
}

namespace {

std::vector<Index> iota_ids(Index n) {
  std::vector<Index> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), Index{0});
  return ids;
}

Eigen::VectorXd penalty_scales(const Eigen::MatrixXd& gram, bool standardize) {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(gram.rows());
  if (!standardize) return s;
  for (Index j = 0; j < gram.rows(); ++j)
    if (gram(j, j) > 0.0) s(j) = std::sqrt(gram(j, j));
  return s;
}

struct ScaledPath {
  Eigen::MatrixXd coefficients;  // original scale
  double max_kkt = 0.0;
};

ScaledPath run_path(const Eigen::MatrixXd& gram, const Eigen::VectorXd& linear, const Eigen::VectorXd& scales,
                    const std::vector<double>& lambdas, const L1Options& solver) {
  const Eigen::VectorXd inv = scales.cwiseInverse();
  const Eigen::MatrixXd g = inv.asDiagonal() * gram * inv.asDiagonal();
  const Eigen::VectorXd c = inv.cwiseProduct(linear);
  ScaledPath out;
  out.coefficients.resize(linear.size(), static_cast<Index>(lambdas.size()));
  std::optional<Eigen::VectorXd> warm;
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    auto fit = solve_l1_quadratic<double>(g, c, lambdas[l], warm, solver);
    out.max_kkt = std::max(out.max_kkt, fit.kkt_residual);
    out.coefficients.col(static_cast<Index>(l)) = fit.theta.cwiseProduct(inv);
    warm = std::move(fit.theta);
  }
  return out;
}

/// Gram and linear term restricted to rows whose id satisfies `keep`.
template <class Keep>
std::pair<Eigen::MatrixXd, Eigen::VectorXd> restricted_moments(const PenalizedProblem& pr, Keep keep,
                                                               const char* what) {
  const Index p = pr.p();
  std::vector<Index> gram_sel;
  for (std::size_t i = 0; i < pr.gram_ids.size(); ++i)
    if (keep(pr.gram_ids[i])) gram_sel.push_back(static_cast<Index>(i));
  if (gram_sel.empty()) throw DataError(std::string("cross-validation fold has no ") + what + " Gram rows");
  const Eigen::MatrixXd xs = pr.gram_rows(gram_sel, Eigen::all);
  Eigen::MatrixXd g = second_moment(xs);

  Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
  for (const auto& term : pr.terms) {
    if (term.rows.rows() == 0) continue;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
    Index count = 0;
    for (std::size_t i = 0; i < term.row_ids.size(); ++i) {
      if (!keep(term.row_ids[i])) continue;
      sum += term.rows.row(static_cast<Index>(i)).transpose();
      ++count;
    }
    if (count == 0) throw DataError(std::string("cross-validation fold leaves a cross-term block without ") + what + " rows");
    c += term.sign * sum / static_cast<double>(count);
  }
  return {std::move(g), std::move(c)};
}

}  // namespace

PenalizedProblem lasso_problem(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return row_problem(x, y, scale_rows(x, y));
}

PenalizedProblem row_problem(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& per_row_terms) {
  if (x.rows() != y.size() || per_row_terms.rows() != x.rows() || per_row_terms.cols() != x.cols())
    throw DataError("row_problem: shape mismatch between x, y and per-row terms");
  PenalizedProblem pr;
  const auto ids = iota_ids(x.rows());
  pr.gram_rows = x;
  pr.gram_ids = ids;
  pr.terms.push_back(RowAverageTerm{per_row_terms, ids, 1.0});
  pr.score_x = x;
  pr.score_y = y;
  pr.score_ids = ids;
  pr.n_ids = x.rows();
  return pr;
}

std::vector<double> default_lambda_grid(double lambda_max, int n, double min_ratio) {
  if (!(lambda_max > 0.0)) return {1.0};  // linear term is zero: every lambda gives theta = 0
  if (n <= 1) return {lambda_max};
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    grid[static_cast<std::size_t>(i)] = lambda_max * std::pow(min_ratio, static_cast<double>(i) / (n - 1));
  return grid;
}

double lambda_max(const Eigen::MatrixXd& gram, const Eigen::VectorXd& linear, bool standardize) {
  return penalty_scales(gram, standardize).cwiseInverse().cwiseProduct(linear).lpNorm<Eigen::Infinity>();
}

LambdaPath solve_path(const Eigen::MatrixXd& gram, const Eigen::VectorXd& linear, const std::vector<double>& lambdas,
                      bool standardize, const L1Options& solver) {
  auto scaled = run_path(gram, linear, penalty_scales(gram, standardize), lambdas, solver);
  LambdaPath path;
  path.lambdas = lambdas;
  path.coefficients = std::move(scaled.coefficients);
  path.max_kkt_residual = scaled.max_kkt;
  for (Index l = 0; l < path.coefficients.cols(); ++l)
    path.nnz.push_back(static_cast<Index>((path.coefficients.col(l).array() != 0.0).count()));
  return path;
}

Index choose_lambda(const Eigen::VectorXd& cv_error, const Eigen::VectorXd& cv_se, CvRule rule) {
  if (cv_error.size() == 0) throw std::invalid_argument("choose_lambda: empty CV curve");
  Index best = 0;
  for (Index l = 1; l < cv_error.size(); ++l)
    if (cv_error(l) < cv_error(best)) best = l;
  if (rule == CvRule::min) return best;
  const double threshold = cv_error(best) + cv_se(best);
  for (Index l = 0; l <= best; ++l)
    if (cv_error(l) <= threshold) return l;
  return best;
}

LambdaPath cv_lambda_path(const PenalizedProblem& pr, const PenaltyConfig& config, std::uint64_t seed) {
  config.validate();
  const Index p = pr.p();
  if (pr.n_ids < config.cv_folds)
    throw std::invalid_argument("cross-validation needs at least cv_folds = " + std::to_string(config.cv_folds) +
                                " rows, got " + std::to_string(pr.n_ids));

  const Eigen::MatrixXd gram = pr.gram ? *pr.gram : second_moment(pr.gram_rows);
  const Eigen::VectorXd linear = pr.linear ? *pr.linear : evaluate_terms(pr.terms, p);
  const Eigen::VectorXd scales = penalty_scales(gram, config.standardize);
  const std::vector<double> grid =
      config.lambda_grid.empty()
          ? default_lambda_grid(scales.cwiseInverse().cwiseProduct(linear).lpNorm<Eigen::Infinity>(), config.n_lambda,
                                config.lambda_min_ratio)
          : config.lambda_grid;
  const auto n_lambda = static_cast<Index>(grid.size());

  const FoldAssignment folds = pr.folds ? *pr.folds : split_folds(pr.n_ids, config.cv_folds, seed);
  if (folds.rows() != pr.n_ids || folds.k != config.cv_folds)
    throw std::invalid_argument("fold plan does not match the problem's id space and cv_folds");
  Eigen::MatrixXd fold_error(config.cv_folds, n_lambda);

  parallel_for(config.cv_folds, config.jobs, [&](Index k) {
    const auto in_test = [&](Index id) { return folds.fold_of_row[static_cast<std::size_t>(id)] == k; };
    const auto in_train = [&](Index id) { return !in_test(id); };
    const auto [g_tr, c_tr] = restricted_moments(pr, in_train, "training");
    const auto path = run_path(g_tr, c_tr, scales, grid, config.solver);

    if (pr.loss == CvLoss::squared_error) {
      std::vector<Index> sel;
      for (std::size_t i = 0; i < pr.score_ids.size(); ++i)
        if (in_test(pr.score_ids[i])) sel.push_back(static_cast<Index>(i));
      if (sel.empty()) throw DataError("cross-validation fold " + std::to_string(k) + " has no held-out rows");
      const Eigen::MatrixXd xt = pr.score_x(sel, Eigen::all);
      const Eigen::VectorXd yt = pr.score_y(sel);
      const Eigen::MatrixXd resid = (xt * path.coefficients).colwise() - yt;
      fold_error.row(k) = resid.array().square().colwise().mean();
    } else {
      const auto [g_te, c_te] = restricted_moments(pr, in_test, "held-out");
      for (Index l = 0; l < n_lambda; ++l) {
        const Eigen::VectorXd th = path.coefficients.col(l);
        fold_error(k, l) = 0.5 * th.dot(g_te * th) - c_te.dot(th);
      }
    }
  });

  LambdaPath out = solve_path(gram, linear, grid, config.standardize, config.solver);
  const double k = static_cast<double>(config.cv_folds);
  out.cv_error = fold_error.colwise().mean().transpose();
  out.cv_se.resize(n_lambda);
  for (Index l = 0; l < n_lambda; ++l) {
    const double var = (fold_error.col(l).array() - out.cv_error(l)).square().sum() / (k - 1.0);
    out.cv_se(l) = std::sqrt(var / k);
  }
  out.chosen = choose_lambda(out.cv_error, out.cv_se, config.cv_rule);
  return out;
}

LambdaPath cv_lambda_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const PenaltyConfig& config,
                          std::uint64_t seed) {
  return cv_lambda_path(lasso_problem(x, y), config, seed);
}

LambdaPath cv_lambda_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& per_row_terms,
                          const PenaltyConfig& config, std::uint64_t seed) {
  return cv_lambda_path(row_problem(x, y, per_row_terms), config, seed);
}

}  // namespace modreg
