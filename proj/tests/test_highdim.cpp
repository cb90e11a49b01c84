#include <doctest.h>

#include <numeric>

#include "modreg/crossfit.hpp"
#include "modreg/highdim.hpp"
#include "modreg/linalg.hpp"
#include "modreg/random.hpp"
#include "support.hpp"

using namespace modreg;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

PenaltyConfig quick_penalty() {
  PenaltyConfig cfg;
  cfg.n_lambda = 30;
  cfg.cv_folds = 5;
  return cfg;
}

// X = Z B + noise; Y = 1.0 * X_0 + Z gamma + noise, so only X_0 acts on Y
// directly.
Dataset structured_data(Index n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const Index px = 8, pz = 4;
  const MatrixXd z = normal_matrix(rng, n, pz);
  const MatrixXd b = normal_matrix(rng, pz, px, 0.5);
  const MatrixXd x = z * b + normal_matrix(rng, n, px);
  const VectorXd y = x.col(0) + z * VectorXd::Constant(pz, 0.5) + normal_matrix(rng, n, 1).col(0);
  return Dataset(x, z, y);
}

}  // namespace

TEST_CASE("identity cross term reproduces the plain Lasso") {
  SplitMix64 rng(1);
  const MatrixXd x = normal_matrix(rng, 100, 10);
  const VectorXd y = x.col(0) - x.col(4) + normal_matrix(rng, 100, 1).col(0);
  const Dataset d(x, normal_matrix(rng, 100, 2), y);
  const auto a = modular_lasso(d, identity_cross_term(d), quick_penalty(), 3);
  const auto b = lasso(d, quick_penalty(), 3);
  CHECK(a.tag == EstimatorTag::lasso);
  CHECK((a.theta_hat - b.theta_hat).lpNorm<Eigen::Infinity>() <= 1e-12);
  REQUIRE(a.path.has_value());
  CHECK((a.path->coefficients - b.path->coefficients).cwiseAbs().maxCoeff() <= 1e-12);

  const auto preds = crossfit_means(d, OlsLearner(), OlsLearner(), split_folds(100, 2, 1));
  CHECK(modular_lasso(d, proxy_cross_term_lm(d, preds), quick_penalty(), 3).tag == EstimatorTag::mod_lasso);
}

TEST_CASE("a single lambda at lambda_max gives the zero vector") {
  SplitMix64 rng(2);
  const MatrixXd x = normal_matrix(rng, 60, 5);
  const Dataset d(x, std::nullopt, VectorXd(x.col(2) + normal_matrix(rng, 60, 1).col(0)));
  PenaltyConfig cfg = quick_penalty();
  const auto c = identity_cross_term(d);
  cfg.lambda_grid = {lambda_max(second_moment(x), c.c_hat, cfg.standardize)};
  CHECK(modular_lasso(d, c, cfg, 0).theta_hat.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("structure learning finds the direct effect") {
  int hits = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto part = learn_structure(structured_data(400, derive_seed(5, s)), s);
    hits += std::find(part.j2.begin(), part.j2.end(), Index{0}) != part.j2.end();
    CHECK(part.j1.size() + part.j2.size() == 8);
  }
  CHECK(hits >= 45);

  PenaltyConfig huge = structure_penalty();
  huge.lambda_grid = {1e6};
  CHECK(learn_structure(structured_data(100, 1), huge, 0).j2.empty());
}

TEST_CASE("honest structure learning splits the rows") {
  const Dataset d = structured_data(301, 12);
  const auto h = learn_structure_honest(d, structure_penalty(), 3);
  const Index m = static_cast<Index>(h.structure_rows.size());
  CHECK(m + h.estimation.rows() == 301);
  CHECK(std::abs(static_cast<double>(m) - 150.5) <= 0.5);
  CHECK(std::is_sorted(h.structure_rows.begin(), h.structure_rows.end()));

  std::vector<Index> rest;
  for (Index i = 0, k = 0; i < 301; ++i) {
    if (k < m && h.structure_rows[static_cast<std::size_t>(k)] == i) {
      ++k;
      continue;
    }
    rest.push_back(i);
  }
  CHECK(h.estimation.x() == d.x()(rest, Eigen::all));
  CHECK(h.estimation.y() == d.y()(rest));
  const auto part = learn_structure(d.subset(h.structure_rows), structure_penalty(), 3);
  CHECK(part.j2 == h.partition.j2);
  CHECK(part.j1 == h.partition.j1);
  CHECK_THROWS_AS(learn_structure_honest(structured_data(3, 1), structure_penalty(), 0), DataError);
}

TEST_CASE("structured cross term limits") {
  const Dataset d = structured_data(120, 9);
  const auto folds = split_folds(120, 2, 4);
  const OlsLearner lx, ly;
  {
    std::vector<Index> all(8);
    std::iota(all.begin(), all.end(), Index{0});
    const auto c = proxy_cross_term_struct(d, StructurePartition::from_j2(8, all), lx, ly, folds);
    CHECK((c.per_row() - scale_rows(d.x(), d.y())).cwiseAbs().maxCoeff() == 0.0);
    CHECK(c.kind == CrossTermKind::structured);
  }
  const auto lm = proxy_cross_term_lm(d, crossfit_means(d, lx, ly, folds));
  for (auto mode : {OutcomeFeatures::full, OutcomeFeatures::z_only}) {
    const auto c = proxy_cross_term_struct(d, StructurePartition::from_j2(8, {}), lx, ly, folds, mode);
    CHECK((c.per_row() - lm.per_row()).cwiseAbs().maxCoeff() == 0.0);
  }
  // J2 coordinates keep X_j Y_i exactly, J1 coordinates use the three-term form
  const auto c = proxy_cross_term_struct(d, StructurePartition::from_j2(8, {0, 3}), lx, ly, folds);
  CHECK((c.per_row().col(0) - d.x().col(0).cwiseProduct(d.y())).cwiseAbs().maxCoeff() == 0.0);
  CHECK((c.per_row().col(3) - d.x().col(3).cwiseProduct(d.y())).cwiseAbs().maxCoeff() == 0.0);
  CHECK((c.per_row().col(1) - lm.per_row().col(1)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("ridge and OLS hats") {
  SplitMix64 rng(3);
  const MatrixXd z = normal_matrix(rng, 40, 5);
  const auto h = ols_hat(z);
  CHECK((h.pi * h.pi - h.pi).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((h.pi * z - z).cwiseAbs().maxCoeff() <= 1e-10);
  for (double eta : {0.1, 10.0, 1000.0}) {
    const auto r = ridge_hat(z, eta);
    CHECK((r.pi - r.pi.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(r.pi).eigenvalues();
    CHECK(ev.minCoeff() >= -1e-12);
    CHECK(ev.maxCoeff() < 1.0);
    const MatrixXd ref = z * (z.transpose() * z + eta * MatrixXd::Identity(5, 5)).inverse() * z.transpose();
    CHECK((r.pi - ref).cwiseAbs().maxCoeff() <= 1e-10);
  }
  CHECK((ridge_hat(z, 0.0).pi - h.pi).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK_THROWS(ridge_hat(z, -1.0));
}

TEST_CASE("projected response reproduces the summed cross term of linear smoothers") {
  SplitMix64 rng(4);
  const Index n = 50;
  const MatrixXd z = normal_matrix(rng, n, 4);
  const MatrixXd x = normal_matrix(rng, n, 6);
  const VectorXd y = normal_matrix(rng, n, 1).col(0);
  const auto px = ridge_hat(z, 3.0);
  const auto py = ridge_hat(z, 0.5);
  const VectorXd r = projected_response(px, py, y);
  const MatrixXd rows = cross_term_rows(x, y, px.pi * x, py.pi * y);
  CHECK((x.transpose() * r - rows.colwise().sum().transpose()).cwiseAbs().maxCoeff() <= 1e-10);

  const auto id = ProjectionOperator::identity(n);
  CHECK((projected_response(id, py, y) - y).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((projected_response(px, id, y) - y).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("projection shortcut with identity hats is the Lasso") {
  SplitMix64 rng(5);
  const MatrixXd x = normal_matrix(rng, 80, 6);
  const Dataset d(x, normal_matrix(rng, 80, 3), VectorXd(x.col(1) + normal_matrix(rng, 80, 1).col(0)));
  const auto id = ProjectionOperator::identity(80);
  const auto a = projection_shortcut(d, id, id, quick_penalty(), 2);
  const auto b = lasso(d, quick_penalty(), 2);
  CHECK((a.theta_hat - b.theta_hat).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("eta selection") {
  const Dataset d = structured_data(150, 21);
  PenaltyConfig cfg = quick_penalty();
  {
    const auto sel = cv_projection_etas(d, {5.0}, {7.0}, cfg, 1);
    CHECK(sel.eta_x == 5.0);
    CHECK(sel.eta_y == 7.0);
    const auto direct = projection_shortcut(d, ridge_hat(d.z(), 5.0), ridge_hat(d.z(), 7.0), cfg, 1);
    CHECK((sel.fit.theta_hat - direct.theta_hat).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  {
    const auto sel = cv_projection_etas(d, {0.0}, {0.0}, cfg, 1);
    const auto direct = projection_shortcut(d, ols_hat(d.z()), ols_hat(d.z()), cfg, 1);
    CHECK((sel.fit.theta_hat - direct.theta_hat).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("CV-selected etas predict nearly as well as the best grid cell") {
  const std::vector<double> grid = {1.0, 10.0, 100.0, 1000.0};
  const Dataset d = structured_data(200, 31);
  const Dataset test = structured_data(5000, 32);
  const PenaltyConfig cfg = quick_penalty();
  const auto sel = cv_projection_etas(d, grid, grid, cfg, 4);
  const auto test_mse = [&](const VectorXd& th) {
    return (test.y() - test.x() * th).squaredNorm() / static_cast<double>(test.rows());
  };
  double best = std::numeric_limits<double>::infinity();
  for (double ex : grid)
    for (double ey : grid)
      best = std::min(best, test_mse(projection_shortcut(d, ridge_hat(d.z(), ex), ridge_hat(d.z(), ey), cfg, 4).theta_hat));
  CHECK(test_mse(sel.fit.theta_hat) <= 1.05 * best);
  CHECK(sel.cv_error.rows() == 4);
  CHECK(sel.cv_error.cols() == 4);
}
