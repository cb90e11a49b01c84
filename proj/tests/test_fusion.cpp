#include <doctest.h>

#include "modreg/error.hpp"
#include "modreg/fusion.hpp"
#include "modreg/highdim.hpp"
#include "modreg/linalg.hpp"
#include "modreg/random.hpp"
#include "support.hpp"

using namespace modreg;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Z ~ N(0, I_3), X = Z B + e (p_x = 2), Y = Z gamma + e: X independent of Y given Z,
// E[X|Z] = Z B, E[Y|Z] = Z gamma, E[XY] = B^T gamma, E[XX^T] = B^T B + I.
struct CiModel {
  MatrixXd b;
  VectorXd gamma;
  CiModel() : b(3, 2), gamma(3) {
    b << 1.0, 0.0, 0.5, -1.0, 0.0, 0.5;
    gamma << 1.0, 0.5, -0.5;
  }
  VectorXd exy() const { return b.transpose() * gamma; }
  VectorXd theta_star() const {
    return (b.transpose() * b + MatrixXd::Identity(2, 2)).ldlt().solve(exy());
  }
  struct Draw {
    MatrixXd x, z;
    VectorXd y;
  };
  Draw draw(SplitMix64& rng, Index n) const {
    Draw d;
    d.z = normal_matrix(rng, n, 3);
    d.x = d.z * b + normal_matrix(rng, n, 2);
    d.y = d.z * gamma + normal_matrix(rng, n, 1).col(0);
    return d;
  }
  CrossFitPredictions oracle(const MatrixXd& z) const {
    CrossFitPredictions p;
    p.mu_x_hat = z * b;
    p.mu_y_hat = z * gamma;
    return p;
  }
};

FusionDataset ci_fusion(const CiModel& m, SplitMix64& rng, Index n, Index n_xz, Index n_yz) {
  const auto t = m.draw(rng, n);
  const auto a = m.draw(rng, n_xz);
  const auto c = m.draw(rng, n_yz);
  return FusionDataset(n ? Dataset(t.x, t.z, t.y) : Dataset{}, n_xz ? Dataset(a.x, a.z, std::nullopt) : Dataset{},
                       n_yz ? Dataset(std::nullopt, c.z, c.y) : Dataset{});
}

FusionPredictions oracle_predictions(const CiModel& m, const FusionDataset& fd) {
  const auto block = [&](const Dataset& d) { return m.oracle(d.empty() ? MatrixXd(0, 3) : d.z()); };
  return FusionPredictions{block(fd.triples()), block(fd.xz_pairs()), block(fd.zy_pairs())};
}

}  // namespace

TEST_CASE("missing-data cross term: single-row hand example") {
  MatrixXd one(1, 1), z0(1, 1);
  one << 1;
  z0 << 0.3;
  VectorXd two(1);
  two << 2;
  const FusionDataset fd(Dataset{}, Dataset(one, z0, std::nullopt), Dataset(std::nullopt, z0, two));
  const auto c = proxy_cross_term_miss(fd, ConstantLearner(1.0), ConstantLearner(2.0), 0);
  CHECK(c.kind == CrossTermKind::miss);
  CHECK(c.c_hat(0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("constant blocks give the constant product") {
  SplitMix64 rng(1);
  const auto block = [&](Index n, bool x, bool y) {
    return Dataset(x ? std::optional<MatrixXd>(MatrixXd::Constant(n, 1, 3.0)) : std::nullopt, normal_matrix(rng, n, 2),
                   y ? std::optional<VectorXd>(VectorXd::Constant(n, -2.0)) : std::nullopt);
  };
  const FusionDataset fd(block(10, true, true), block(7, true, false), block(9, false, true));
  const auto c = proxy_cross_term_part(fd, MeanLearner(), MeanLearner(), 4);
  CHECK(c.kind == CrossTermKind::part);
  CHECK(c.c_hat(0) == doctest::Approx(-6.0).epsilon(1e-14));
  const auto fit = fusion_fit(fd, c);
  CHECK(fit.theta_hat(0) == doctest::Approx(-6.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("pair-free fusion reduces to the single-dataset estimators") {
  const CiModel m;
  SplitMix64 rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const auto fd = ci_fusion(m, rng, 80, 0, 0);
    const Dataset& d = fd.triples();
    const std::uint64_t seed = 10 + rep;
    const auto ridge = make_learner("ridge", seed);
    const auto c = proxy_cross_term_part(fd, *ridge, *ridge, seed);
    const auto lm = proxy_cross_term_lm(d, crossfit_means(d, *ridge, *ridge, split_folds(80, 2, seed)));
    CHECK((c.c_hat - lm.c_hat).cwiseAbs().maxCoeff() == 0.0);
    CHECK((fusion_fit(fd, c).theta_hat - modular_ols(d, lm).theta_hat).cwiseAbs().maxCoeff() == 0.0);

    PenaltyConfig cfg;
    cfg.n_lambda = 20;
    cfg.cv_folds = 5;
    const auto pen = fusion_fit(fd, c, cfg, seed);
    CHECK((pen.theta_hat - modular_lasso(d, lm, cfg, seed).theta_hat).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("permuting rows within a block leaves the assembled cross term unchanged") {
  const CiModel m;
  SplitMix64 rng(3);
  const auto fd = ci_fusion(m, rng, 30, 40, 50);
  const auto preds = oracle_predictions(m, fd);
  const auto perm = random_permutation(40, rng);
  const Dataset xz_perm(MatrixXd(fd.xz_pairs().x()(perm, Eigen::all)), MatrixXd(fd.xz_pairs().z()(perm, Eigen::all)),
                        std::nullopt);
  const FusionDataset fd2(fd.triples(), xz_perm, fd.zy_pairs());
  const auto preds2 = oracle_predictions(m, fd2);
  const auto a = assemble_cross_term(fd, preds);
  const auto b = assemble_cross_term(fd2, preds2);
  CHECK((a.c_hat - b.c_hat).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("pair blocks reduce the variance of the cross term") {
  const CiModel m;
  std::vector<std::vector<double>> part(2), lm(2);
  for (int r = 0; r < 200; ++r) {
    SplitMix64 rng(derive_seed(77, static_cast<std::uint64_t>(r)));
    const auto fd = ci_fusion(m, rng, 50, 2000, 2000);
    const auto cp = assemble_cross_term(fd, oracle_predictions(m, fd));
    const auto cl = proxy_cross_term_lm(fd.triples(), m.oracle(fd.triples().z()));
    for (int j = 0; j < 2; ++j) {
      part[j].push_back(cp.c_hat(j));
      lm[j].push_back(cl.c_hat(j));
    }
  }
  for (int j = 0; j < 2; ++j) CHECK(testing_support::variance(part[j]) < testing_support::variance(lm[j]));
}

TEST_CASE("many pairs improve prediction over the triples-only Lasso") {
  // p_x = 20, p_z = 5, n = 100 triples and rho = 10
  const Index px = 20, pz = 5, n = 100, rho = 10;
  SplitMix64 prng(5);
  const MatrixXd b = normal_matrix(prng, pz, px, 0.5);
  const VectorXd gamma = VectorXd::Constant(pz, 0.7);
  const auto draw = [&](SplitMix64& rng, Index m) {
    const MatrixXd z = normal_matrix(rng, m, pz);
    const MatrixXd x = z * b + normal_matrix(rng, m, px);
    const VectorXd y = z * gamma + normal_matrix(rng, m, 1).col(0);
    return std::make_tuple(x, z, y);
  };
  double mse_fuse = 0.0, mse_lasso = 0.0;
  for (int r = 0; r < 20; ++r) {
    SplitMix64 rng(derive_seed(9, static_cast<std::uint64_t>(r)));
    const auto [x, z, y] = draw(rng, n);
    const auto [xa, za, ya] = draw(rng, rho * n);
    const auto [xb, zb, yb] = draw(rng, rho * n);
    const auto [xt, zt, yt] = draw(rng, 2000);
    const FusionDataset fd(Dataset(x, z, y), Dataset(xa, za, std::nullopt), Dataset(std::nullopt, zb, yb));
    PenaltyConfig cfg;
    cfg.n_lambda = 30;
    const OlsLearner ols_learner;
    const auto c = proxy_cross_term_part(fd, ols_learner, ols_learner, r);
    const auto fuse = fusion_fit(fd, c, cfg, r);
    const auto plain = lasso(fd.triples(), cfg, r);
    mse_fuse += (yt - xt * fuse.theta_hat).squaredNorm() / 2000.0;
    mse_lasso += (yt - xt * plain.theta_hat).squaredNorm() / 2000.0;
  }
  CHECK(mse_fuse < mse_lasso);
}

TEST_CASE("fusion_fit with orthonormal pair-only X returns the cross term") {
  SplitMix64 rng(6);
  const Index n = 40;
  const Eigen::HouseholderQR<MatrixXd> qr(normal_matrix(rng, n, 2));
  const MatrixXd x = qr.householderQ() * MatrixXd::Identity(n, 2) * std::sqrt(static_cast<double>(n));
  const FusionDataset fd(Dataset{}, Dataset(x, normal_matrix(rng, n, 2), std::nullopt),
                         Dataset(std::nullopt, normal_matrix(rng, 30, 2), normal_matrix(rng, 30, 1).col(0)));
  const auto c = proxy_cross_term_miss(fd, OlsLearner(), OlsLearner(), 1);
  const auto fit = fusion_fit(fd, c);
  CHECK((fit.theta_hat - c.c_hat).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_FALSE(fit.covariance.has_value());
}

TEST_CASE("pair-only fusion is consistent for theta*") {
  const CiModel m;
  const int reps = 200;
  MatrixXd est(reps, 2);
  for (int r = 0; r < reps; ++r) {
    SplitMix64 rng(derive_seed(31, static_cast<std::uint64_t>(r)));
    const auto fd = ci_fusion(m, rng, 0, 2000, 2000);
    est.row(r) = fusion_fit(fd, assemble_cross_term(fd, oracle_predictions(m, fd))).theta_hat.transpose();
  }
  const VectorXd mean = est.colwise().mean().transpose();
  const MatrixXd centered = est.rowwise() - mean.transpose();
  const double mc_se = std::sqrt(centered.squaredNorm() / (reps - 1) / reps);
  CHECK((mean - m.theta_star()).norm() <= 3.0 * mc_se);
  CHECK(std::sqrt(centered.squaredNorm() / (reps - 1)) < 0.1);
}

TEST_CASE("unidentifiable layouts are data errors") {
  SplitMix64 rng(7);
  const Dataset zy(std::nullopt, normal_matrix(rng, 10, 2), normal_matrix(rng, 10, 1).col(0));
  const Dataset xz(normal_matrix(rng, 10, 1), normal_matrix(rng, 10, 2), std::nullopt);
  const FusionDataset only_zy(Dataset{}, Dataset{}, zy);
  CHECK_THROWS_AS(proxy_cross_term_part(only_zy, OlsLearner(), OlsLearner(), 0), DataError);
  const FusionDataset only_xz(Dataset{}, xz, Dataset{});
  CHECK_THROWS_AS(proxy_cross_term_part(only_xz, OlsLearner(), OlsLearner(), 0), DataError);
  CHECK_THROWS_AS(FusionDataset(Dataset{}, Dataset{}, Dataset{}), DataError);
  CHECK_THROWS_AS(proxy_cross_term_miss(FusionDataset(Dataset(xz.x(), xz.z(), VectorXd::Zero(10)), xz, zy), OlsLearner(),
                                        OlsLearner(), 0),
                  DataError);
  ProxyCrossTerm c;
  c.c_hat = VectorXd::Ones(1);
  c.kind = CrossTermKind::miss;
  CHECK_THROWS_AS(fusion_fit(only_zy, c), DataError);
}

TEST_CASE("structured fusion leaves J2 columns untouched") {
  const CiModel m;
  SplitMix64 rng(8);
  const auto fd = ci_fusion(m, rng, 60, 40, 40);
  const auto part = StructurePartition::from_j2(2, {1});
  const auto c = proxy_cross_term_part(fd, OlsLearner(), OlsLearner(), 3, part);
  REQUIRE(c.partition.has_value());
  CHECK(c.partition->j2 == std::vector<Index>{1});
  const VectorXd xy = fd.triples().x().col(1).cwiseProduct(fd.triples().y());
  CHECK(c.c_hat(1) == doctest::Approx(xy.mean()).epsilon(1e-12));
}
