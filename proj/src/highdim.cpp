#include "modreg/highdim.hpp"

#include <cmath>
#include <limits>

#include "modreg/error.hpp"
#include "modreg/linalg.hpp"
#include "modreg/parallel.hpp"
#include "modreg/random.hpp"

namespace modreg {

namespace {

double penalized_objective(const Eigen::MatrixXd& gram, const Eigen::VectorXd& c, const Eigen::VectorXd& theta,
                           double lambda, bool standardize) {
  double l1 = 0.0;
  for (Index j = 0; j < theta.size(); ++j) {
    const double s = standardize && gram(j, j) > 0.0 ? std::sqrt(gram(j, j)) : 1.0;
    l1 += s * std::abs(theta(j));
  }
  return 0.5 * theta.dot(gram * theta) - c.dot(theta) + lambda * l1;
}

ModularFit fit_from_path(LambdaPath path, const Eigen::MatrixXd& gram, const Eigen::VectorXd& c, EstimatorTag tag,
                         Index n, bool standardize) {
  ModularFit fit;
  fit.theta_hat = path.chosen_theta();
  fit.objective_value = penalized_objective(gram, c, fit.theta_hat, path.chosen_lambda(), standardize);
  fit.tag = tag;
  fit.n = n;
  fit.path = std::move(path);
  return fit;
}

}  // namespace

ModularFit modular_lasso(const Dataset& d, const ProxyCrossTerm& c, const PenaltyConfig& config, std::uint64_t seed) {
  if (c.p() != d.p_x()) throw DataError("cross term length does not match p_x");
  PenalizedProblem pr = row_problem(d.x(), d.y(), c.per_row());
  pr.linear = c.c_hat;
  const Eigen::MatrixXd gram = second_moment(d.x());
  pr.gram = gram;
  auto path = cv_lambda_path(pr, config, seed);
  const auto tag = c.kind == CrossTermKind::identity ? EstimatorTag::lasso : EstimatorTag::mod_lasso;
  ModularFit fit = fit_from_path(std::move(path), gram, c.c_hat, tag, d.rows(), config.standardize);
  fit.partition = c.partition;
  return fit;
}

ModularFit lasso(const Dataset& d, const PenaltyConfig& config, std::uint64_t seed) {
  return modular_lasso(d, identity_cross_term(d), config, seed);
}

PenaltyConfig structure_penalty() {
  PenaltyConfig config;
  config.cv_rule = CvRule::one_se;
  return config;
}

StructurePartition learn_structure(const Dataset& d, const PenaltyConfig& config, std::uint64_t seed) {
  const Index px = d.p_x();
  Eigen::MatrixXd w(d.rows(), px + d.p_z());
  w << d.x(), d.z();
  const auto path = cv_lambda_path(w, d.y(), config, seed);
  const Eigen::VectorXd coef = path.chosen_theta();
  std::vector<Index> j2;
  for (Index j = 0; j < px; ++j)
    if (coef(j) != 0.0) j2.push_back(j);
  return StructurePartition::from_j2(px, std::move(j2));
}

HonestStructure learn_structure_honest(const Dataset& d, const PenaltyConfig& config, std::uint64_t seed) {
  if (d.rows() < 4) throw DataError("honest structure learning needs at least 4 rows");
  const FoldAssignment halves = split_folds(d.rows(), 2, derive_seed(seed, 0x5157));
  HonestStructure out;
  out.structure_rows = halves.rows_in(0);
  out.partition = learn_structure(d.subset(out.structure_rows), config, seed);
  out.estimation = d.subset(halves.rows_in(1));
  return out;
}

ProxyCrossTerm proxy_cross_term_struct(const Dataset& d, const StructurePartition& partition,
                                       const Learner& learner_x, const Learner& learner_y,
                                       const FoldAssignment& folds, OutcomeFeatures mode) {
  partition.validate(d.p_x());
  const Eigen::MatrixXd& x = d.x();
  const Eigen::VectorXd& y = d.y();
  Eigen::MatrixXd rows = scale_rows(x, y);
  if (!partition.j1.empty()) {
    if (d.p_z() < 1) throw DataError("structured cross term needs at least one auxiliary (z) column");
    Eigen::MatrixXd w(d.rows(), d.p_z() + static_cast<Index>(partition.j2.size()));
    w << d.z(), x(Eigen::all, partition.j2);
    const Eigen::MatrixXd x1 = x(Eigen::all, partition.j1);
    const Eigen::MatrixXd& wy = mode == OutcomeFeatures::full ? w : d.z();
    const auto preds = crossfit_means(w, x1, wy, y, learner_x, learner_y, folds);
    rows(Eigen::all, partition.j1) = cross_term_rows(x1, y, preds.mu_x_hat, preds.mu_y_hat);
  }
  ProxyCrossTerm ct = make_row_cross_term(std::move(rows), CrossTermKind::structured);
  ct.partition = partition;
  return ct;
}

// ---------------------------------------------------------------------------
// Projection shortcut

ProjectionOperator ProjectionOperator::identity(Index n) {
  ProjectionOperator op;
  op.pi = Eigen::MatrixXd::Identity(n, n);
  return op;
}

ProjectionOperator ridge_hat(const Eigen::MatrixXd& z, double eta) {
  if (!(eta >= 0.0)) throw std::invalid_argument("ridge hat: eta must be nonnegative");
  Eigen::MatrixXd a = z.transpose() * z;
  a.diagonal().array() += eta;
  const SpdFactor factor(a);
  ProjectionOperator op;
  op.pi = z * factor.solve(Eigen::MatrixXd(z.transpose()));
  op.pi = 0.5 * (op.pi + op.pi.transpose()).eval();
  op.source = eta == 0.0 ? ProjectionOperator::Source::ols_hat : ProjectionOperator::Source::ridge_hat;
  op.eta = eta;
  return op;
}

ProjectionOperator ols_hat(const Eigen::MatrixXd& z) { return ridge_hat(z, 0.0); }

Eigen::VectorXd projected_response(const ProjectionOperator& pi_x, const ProjectionOperator& pi_y,
                                   const Eigen::VectorXd& y) {
  if (pi_x.rows() != y.size() || pi_y.rows() != y.size())
    throw DataError("projection operators are " + std::to_string(pi_x.rows()) + " and " +
                    std::to_string(pi_y.rows()) + " rows, response has " + std::to_string(y.size()));
  const Eigen::VectorXd py = pi_y.pi * y;
  const Eigen::VectorXd px = pi_x.pi * y;
  return (py + px) - pi_x.pi * py;
}

ModularFit projection_shortcut(const Dataset& d, const ProjectionOperator& pi_x, const ProjectionOperator& pi_y,
                               const PenaltyConfig& config, std::uint64_t seed) {
  const Eigen::VectorXd yt = projected_response(pi_x, pi_y, d.y());
  const Eigen::MatrixXd gram = second_moment(d.x());
  const Eigen::VectorXd c = d.x().transpose() * yt / static_cast<double>(d.rows());
  auto path = cv_lambda_path(d.x(), yt, config, seed);
  return fit_from_path(std::move(path), gram, c, EstimatorTag::mod_lasso, d.rows(), config.standardize);
}

EtaSelection cv_projection_etas(const Dataset& d, const std::vector<double>& eta_grid_x,
                                const std::vector<double>& eta_grid_y, const PenaltyConfig& config,
                                std::uint64_t seed) {
  if (eta_grid_x.empty() || eta_grid_y.empty()) throw std::invalid_argument("eta grids must be non-empty");
  config.validate();
  const Eigen::MatrixXd& x = d.x();
  const Eigen::MatrixXd& z = d.z();
  const Eigen::VectorXd& y = d.y();
  const Index n = d.rows();
  if (n < config.cv_folds) throw std::invalid_argument("cross-validation needs at least cv_folds rows");
  const FoldAssignment folds = split_folds(n, config.cv_folds, seed);
  const auto nx = static_cast<Index>(eta_grid_x.size());
  const auto ny = static_cast<Index>(eta_grid_y.size());
  Eigen::MatrixXd cell_error(nx, ny);

  parallel_for(nx * ny, config.jobs, [&](Index cell) {
    const double ex = eta_grid_x[static_cast<std::size_t>(cell / ny)];
    const double ey = eta_grid_y[static_cast<std::size_t>(cell % ny)];
    const Eigen::VectorXd yt_full = projected_response(ridge_hat(z, ex), ridge_hat(z, ey), y);
    const Eigen::MatrixXd gram_full = second_moment(x);
    const Eigen::VectorXd c_full = x.transpose() * yt_full / static_cast<double>(n);
    const auto grid = config.lambda_grid.empty()
                          ? default_lambda_grid(lambda_max(gram_full, c_full, config.standardize), config.n_lambda,
                                                config.lambda_min_ratio)
                          : config.lambda_grid;
    Eigen::VectorXd err = Eigen::VectorXd::Zero(static_cast<Index>(grid.size()));
    for (int k = 0; k < folds.k; ++k) {
      const auto train = folds.rows_not_in(k);
      const auto test = folds.rows_in(k);
      const Eigen::MatrixXd z_tr = z(train, Eigen::all);
      const Eigen::MatrixXd x_tr = x(train, Eigen::all);
      const Eigen::VectorXd yt = projected_response(ridge_hat(z_tr, ex), ridge_hat(z_tr, ey), y(train));
      const Eigen::VectorXd c_tr = x_tr.transpose() * yt / static_cast<double>(train.size());
      const auto path = solve_path(second_moment(x_tr), c_tr, grid, config.standardize, config.solver);
      const Eigen::MatrixXd resid = (x(test, Eigen::all) * path.coefficients).colwise() - y(test);
      err += resid.array().square().colwise().mean().transpose().matrix();
    }
    cell_error(cell / ny, cell % ny) = err.minCoeff() / folds.k;
  });

  Index bx = 0, by = 0;
  for (Index i = 0; i < nx; ++i)
    for (Index j = 0; j < ny; ++j)
      if (cell_error(i, j) < cell_error(bx, by)) bx = i, by = j;
  EtaSelection sel;
  sel.eta_x = eta_grid_x[static_cast<std::size_t>(bx)];
  sel.eta_y = eta_grid_y[static_cast<std::size_t>(by)];
  sel.cv_error = std::move(cell_error);
  sel.fit = projection_shortcut(d, ridge_hat(z, sel.eta_x), ridge_hat(z, sel.eta_y), config, seed);
  return sel;
}

}  // namespace modreg
