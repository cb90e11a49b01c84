// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modreg/crossfit.hpp"
#include "modreg/fusion.hpp"
#include "modreg/highdim.hpp"
#include "modreg/io.hpp"
#include "modreg/l1_solver.hpp"
#include "modreg/lambda_path.hpp"
#include "modreg/linalg.hpp"
#include "modreg/modular.hpp"
#include "modreg/random.hpp"
#include "modreg/simbench.hpp"
#include "../support.hpp"

using namespace modreg;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace ts = testing_support;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double max_abs(const VectorXd& a, const VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

// 1 ------------------------------------------------------------------------

Outcome collapse_suite() {
  const double tol = 1e-8;
  double worst[5] = {0, 0, 0, 0, 0};
  PenaltyConfig cfg;
  cfg.n_lambda = 50;
  for (int rep = 0; rep < 20; ++rep) {
    SplitMix64 rng(derive_seed(1001, static_cast<std::uint64_t>(rep)));
    const Index n = 100, p = 6;
    const MatrixXd x = normal_matrix(rng, n, p);
    const MatrixXd z = normal_matrix(rng, n, 3);
    const VectorXd y = x.col(0) - 0.5 * x.col(3) + z.col(1) + normal_matrix(rng, n, 1).col(0);
    const Dataset d(x, z, y);
    const VectorXd ref_ols = ts::qr_least_squares(x, y);
    const auto id = proxy_cross_term_lm(d, identity_predictions(d));

    worst[0] = std::max(worst[0], max_abs(modular_ols(d, id).theta_hat, ref_ols));
    worst[0] = std::max(worst[0], max_abs(ols(d).theta_hat, ref_ols));

    const auto plain = lasso(d, cfg, rep);
    worst[1] = std::max(worst[1], max_abs(modular_lasso(d, id, cfg, rep).theta_hat, plain.theta_hat));

    worst[2] = std::max(worst[2], max_abs(modular_glm(d, id, GlmFamily{GlmFamilyName::gaussian}).theta_hat, ref_ols));

    const FusionDataset fd(d, Dataset{}, Dataset{});
    const auto ridge = make_learner("ridge", rep);
    const auto lm = proxy_cross_term_lm(d, crossfit_means(d, *ridge, *ridge, split_folds(n, 2, rep)));
    const auto part = proxy_cross_term_part(fd, *ridge, *ridge, rep);
    worst[3] = std::max(worst[3], max_abs(fusion_fit(fd, part).theta_hat, modular_ols(d, lm).theta_hat));
    worst[3] = std::max(worst[3], max_abs(fusion_fit(fd, part, cfg, rep).theta_hat,
                                          modular_lasso(d, lm, cfg, rep).theta_hat));

    const auto eye = ProjectionOperator::identity(n);
    worst[4] = std::max(worst[4], max_abs(projection_shortcut(d, eye, eye, cfg, rep).theta_hat, plain.theta_hat));
  }
  const char* names[5] = {"mod-ols/ols", "mod-lasso/lasso", "gaussian-glm/ols", "fusion/triples", "projection/lasso"};
  Outcome o{true, ""};
  for (int k = 0; k < 5; ++k) {
    o.pass = o.pass && worst[k] <= tol;
    o.detail += std::string(k ? ", " : "") + names[k] + " max diff " + fmt(worst[k]);
  }
  return o;
}

// 2 and 8 ------------------------------------------------------------------
// X ~ N(0,1), Z = X + e_1, Y = Z + e_2: theta* = 1, E[X|Z] = Z/2, E[Y|Z] = Z.

struct Remark1Runs {
  std::vector<double> ols, mod;
  int cover_ols = 0, cover_mod = 0;
  int reps = 0;
  Index n = 0;
};

const Remark1Runs& remark1_runs() {
  static const Remark1Runs runs = [] {
    Remark1Runs r;
    r.reps = 2000;
    r.n = 2000;
    const double z975 = 1.959963984540054;
    for (int rep = 0; rep < r.reps; ++rep) {
      SplitMix64 rng(derive_seed(2002, static_cast<std::uint64_t>(rep)));
      const VectorXd x = normal_matrix(rng, r.n, 1).col(0);
      const VectorXd z = x + normal_matrix(rng, r.n, 1).col(0);
      const VectorXd y = z + normal_matrix(rng, r.n, 1).col(0);
      const Dataset d(MatrixXd(x), MatrixXd(z), y);
      CrossFitPredictions oracle;
      oracle.mu_x_hat = MatrixXd(0.5 * z);
      oracle.mu_y_hat = z;
      const auto fo = ols(d);
      const auto fm = modular_ols(d, proxy_cross_term_lm(d, oracle));
      r.ols.push_back(fo.theta_hat(0));
      r.mod.push_back(fm.theta_hat(0));
      const double se_o =
          std::sqrt(influence_covariance(d, identity_predictions(d), fo.theta_hat, InfluenceKind::ols)(0, 0) / r.n);
      const double se_m = std::sqrt(influence_covariance(d, oracle, fm.theta_hat, InfluenceKind::mod)(0, 0) / r.n);
      r.cover_ols += std::abs(fo.theta_hat(0) - 1.0) <= z975 * se_o;
      r.cover_mod += std::abs(fm.theta_hat(0) - 1.0) <= z975 * se_m;
    }
    return r;
  }();
  return runs;
}

Outcome remark1_variance() {
  const auto& r = remark1_runs();
  const auto scaled_var = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double t : v) s += (t - 1.0) * (t - 1.0);
    return s / static_cast<double>(v.size()) * static_cast<double>(r.n);
  };
  const double vo = scaled_var(r.ols), vm = scaled_var(r.mod);
  const bool pass = std::abs(vo - 2.0) <= 0.2 && std::abs(vm - 1.5) <= 0.15;
  return {pass, "n*Var ols " + fmt(vo) + " (target 2.0), mod " + fmt(vm) + " (target 1.5)"};
}

Outcome coverage() {
  const auto& r = remark1_runs();
  const double co = static_cast<double>(r.cover_ols) / r.reps;
  const double cm = static_cast<double>(r.cover_mod) / r.reps;
  const bool pass = co >= 0.92 && co <= 0.98 && cm >= 0.92 && cm <= 0.98;
  return {pass, "95% Wald coverage ols " + fmt(co) + ", mod " + fmt(cm)};
}

// 3 ------------------------------------------------------------------------

Outcome solver_oracle() {
  double worst = 0.0, worst_kkt = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    SplitMix64 rng(derive_seed(3003, static_cast<std::uint64_t>(rep)));
    const Index p = 2 + static_cast<Index>(rng.below(4));
    const MatrixXd x = normal_matrix(rng, 40, p);
    const VectorXd y = x * normal_matrix(rng, p, 1).col(0) + normal_matrix(rng, 40, 1).col(0);
    const MatrixXd g = second_moment(x);
    const VectorXd c = x.transpose() * y / 40.0;
    const double lambda = c.lpNorm<Eigen::Infinity>() * rng.uniform(0.01, 0.5);
    const auto fit = solve_l1_quadratic<double>(g, c, lambda);
    worst = std::max(worst, max_abs(fit.theta, ts::prox_gradient_l1(g, c, lambda)));

    PenaltyConfig cfg;
    const auto path = cv_lambda_path(x, y, cfg, rep);
    // residuals are reported on the solver's scaled problem; its linear term is bounded by lambda_max
    worst_kkt = std::max(worst_kkt, path.max_kkt_residual / std::max(1.0, path.lambdas.front()));
  }
  return {worst <= 1e-4 && worst_kkt <= 1e-6,
          "max coefficient diff " + fmt(worst) + ", max relative KKT residual " + fmt(worst_kkt)};
}

// 4 ------------------------------------------------------------------------

Outcome variance_dominance() {
  int checked = 0, held = 0;
  std::string worst;
  double worst_ratio = 0.0;
  for (Setting s : {Setting::remark1, Setting::low2, Setting::high1}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const SimConfig c = make_config(s, 40 + seed);
      SplitMix64 rng(derive_seed(4004, seed));
      const Dataset d = draw_rows(c, rng, 5000);
      const VectorXd theta = *analytic_theta_star(c);
      const auto oracle = oracle_means(c, d);
      const MatrixXd fitted = scale_rows(d.x(), d.x() * theta);
      const MatrixXd mod = cross_term_rows(d.x(), d.y(), oracle.mu_x_hat, oracle.mu_y_hat) - fitted;
      const MatrixXd plain = scale_rows(d.x(), d.y()) - fitted;
      const VectorXd vm = row_covariance(mod).diagonal();
      const VectorXd vp = row_covariance(plain).diagonal();
      for (Index j = 0; j < vm.size(); ++j) {
        ++checked;
        held += vm(j) <= vp(j);
        if (vm(j) / vp(j) > worst_ratio) {
          worst_ratio = vm(j) / vp(j);
          worst = to_string(s);
        }
      }
    }
  }
  return {held == checked, std::to_string(held) + "/" + std::to_string(checked) +
                               " coordinates dominated; largest mod/ols variance ratio " + fmt(worst_ratio) + " (" +
                               worst + ")"};
}

// 5 ------------------------------------------------------------------------

Outcome high1_prediction() {
  const SimConfig c = make_config(Setting::high1, 5005);
  const auto res = run_study(c, {"lasso", "mod-lasso/ridge", "mod-lasso/oracle"}, 20, 1);
  const double l = res.summaries[0].mean_excess_risk;
  const double m = res.summaries[1].mean_excess_risk;
  const double o = res.summaries[2].mean_excess_risk;
  Index failures = 0;
  for (const auto& s : res.summaries) failures += s.failures;
  // paired oracle - ridge difference, records are replicate-major in estimator order
  std::vector<double> diff;
  for (std::size_t r = 0; r + 2 < res.records.size(); r += 3)
    diff.push_back(res.records[r + 2].excess_risk - res.records[r + 1].excess_risk);
  const double k = static_cast<double>(diff.size());
  double mean = 0.0, ss = 0.0;
  for (double v : diff) mean += v / k;
  for (double v : diff) ss += (v - mean) * (v - mean);
  return {failures == 0 && m < l && o <= m && o <= l,
          "mean excess risk lasso " + fmt(l) + ", mod-lasso/ridge " + fmt(m) + ", mod-lasso/oracle " + fmt(o) +
              "; paired oracle - ridge " + fmt(mean) + " (se " + fmt(std::sqrt(ss / (k - 1.0) / k)) + ")"};
}

// 6 ------------------------------------------------------------------------

Outcome high2_structure() {
  const SimConfig c = make_config(Setting::high2, 6006);
  const auto res = run_study(c, {"lasso", "mod-lasso-struct/ridge"}, 20, 1);
  std::vector<Index> support;
  for (Index j = 0; j < res.theta_star.size(); ++j)
    if (res.theta_star(j) != 0.0) support.push_back(j);
  const auto rmse = [&](const VectorXd& th) {
    double s = 0.0;
    for (Index j : support) s += (th(j) - res.theta_star(j)) * (th(j) - res.theta_star(j));
    return std::sqrt(s / static_cast<double>(support.size()));
  };
  int wins = 0, valid = 0;
  for (std::size_t i = 0; i + 1 < res.records.size(); i += 2) {
    const auto& a = res.records[i];
    const auto& b = res.records[i + 1];
    if (a.status != "ok" || b.status != "ok") continue;
    ++valid;
    wins += rmse(b.theta_hat) < rmse(a.theta_hat);
  }
  return {valid == 20 && wins >= 14,
          "structured estimator beats Lasso on nonzero-entry RMSE in " + std::to_string(wins) + "/" +
              std::to_string(valid) + " replicates"};
}

// 7 ------------------------------------------------------------------------

Outcome fusion_unbiased() {
  SimConfig c = make_config(Setting::low2, 7007);
  c.n = 5000;
  c.n_test = 1;
  c.rho = 1.0;
  const VectorXd truth = *population_cross_moment(c);
  const int reps = 200;
  MatrixXd miss(reps, c.p_x), part(reps, c.p_x);
  for (int r = 0; r < reps; ++r) {
    const auto data = generate(c, derive_seed(c.seed, static_cast<std::uint64_t>(r)));
    const FusionDataset& fd = *data.fusion;
    part.row(r) = assemble_cross_term(fd, oracle_fusion_predictions(c, fd)).c_hat.transpose();
    const FusionDataset pairs(Dataset{}, fd.xz_pairs(), fd.zy_pairs());
    miss.row(r) = assemble_cross_term(pairs, oracle_fusion_predictions(c, pairs)).c_hat.transpose();
  }
  double worst = 0.0;
  for (const MatrixXd* m : {&miss, &part}) {
    const VectorXd mean = m->colwise().mean().transpose();
    const MatrixXd centered = m->rowwise() - mean.transpose();
    const VectorXd se = (centered.colwise().squaredNorm().transpose() / (reps - 1.0) / reps).cwiseSqrt();
    for (Index j = 0; j < c.p_x; ++j)
      if (se(j) > 0.0) worst = std::max(worst, std::abs(mean(j) - truth(j)) / se(j));
      else worst = std::max(worst, std::abs(mean(j) - truth(j)) > 1e-12 ? 1e9 : 0.0);
  }
  return {worst <= 4.0, "largest |mean - E[XY]| / mc-se over both estimators " + fmt(worst)};
}

// 9 ------------------------------------------------------------------------

Outcome determinism() {
  SimConfig c = make_config(Setting::low1, 9009);
  const std::vector<std::string> est = {"ols", "mod-ols/ridge", "mod-lasso/lasso", "lasso", "proj-ridge"};
  std::ostringstream a, b;
  write_records_csv(a, run_study(c, est, 16, 1));
  write_records_csv(b, run_study(c, est, 16, 8));
  return {a.str() == b.str() && !a.str().empty(), std::to_string(a.str().size()) + " bytes, identical: " +
                                                      (a.str() == b.str() ? "yes" : "no")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"collapse suite", collapse_suite},
      {"scalar chain variance", remark1_variance},
      {"l1 solver vs proximal gradient", solver_oracle},
      {"score variance dominance", variance_dominance},
      {"high-dimensional chain: modular Lasso prediction", high1_prediction},
      {"direct effects: structure-aware estimator", high2_structure},
      {"fusion cross terms unbiased", fusion_unbiased},
      {"Wald coverage", coverage},
      {"parallel determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %zu: %s -- %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
