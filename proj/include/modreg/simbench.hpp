#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modreg/crossfit.hpp"
#include "modreg/dataset.hpp"
#include "modreg/fusion.hpp"
#include "modreg/lambda_path.hpp"
#include "modreg/modular.hpp"
#include "modreg/random.hpp"

namespace modreg {

/// Data-generating processes. low1..low4 are the linear/nonlinear,
/// chain/fork designs with p_x = 4, p_z = 6; high1/high2 are the sparse
/// high-dimensional designs (high2 adds direct X -> Y effects); remark1 is the
/// scalar Gaussian chain X -> Z -> Y.
enum class Setting { low1, low2, low3, low4, high1, high2, remark1 };

std::string to_string(Setting s);
Setting parse_setting(const std::string& s);

struct SimConfig {
  Setting setting = Setting::low1;
  Index n = 200;
  Index n_test = 1000;
  double sigma_z = 1.0;
  double sigma_y = 1.0;
  Index p_x = 4;
  Index p_z = 6;
  Index s = 10;
  /// Fusion mix: n_xz = n_yz = round(rho * n) extra pair rows per replicate.
  std::optional<double> rho;
  std::uint64_t seed = 0;
  /// low1, low3, high*: p_z x p_x with Z = B X. low2, low4: p_x x p_z with X = B Z.
  Eigen::MatrixXd B;
  Eigen::VectorXd gamma;        ///< length p_z
  Eigen::VectorXd gamma_tilde;  ///< length p_x, direct effects (high2)
  double alpha = 1.0, beta = 1.0, sigma_x = 1.0, sigma_1 = 1.0, sigma_2 = 1.0;

  // estimator settings shared by every replicate
  int cv_folds = 10;          ///< lambda CV folds
  CvRule cv_rule = CvRule::min;
  bool standardize = false;   ///< penalize on the standardized scale
  int n_lambda = 100;
  std::vector<double> eta_grid{1.0, 10.0, 100.0, 1000.0};  ///< projection CV grid
  Index n_oracle = 1'000'000;  ///< rows for the numeric theta* when no closed form exists

  void validate() const;
};

/// Defaults for a setting with B, gamma and gamma_tilde drawn from `seed`.
SimConfig make_config(Setting setting, std::uint64_t seed);

/// Draws B, gamma and gamma_tilde from config.seed where they are empty.
void realize_parameters(SimConfig& config);

struct SimData {
  Dataset train;
  std::optional<FusionDataset> fusion;  ///< when rho is set; triples == train
  Dataset test;
};

/// One replicate's data; every draw is a function of (config, seed).
SimData generate(const SimConfig& config, std::uint64_t seed);

/// m rows of (X, Z, Y) from the DGP.
Dataset draw_rows(const SimConfig& config, SplitMix64& rng, Index m);

/// Closed-form theta* where one exists (all settings but low3/low4).
std::optional<Eigen::VectorXd> analytic_theta_star(const SimConfig& config);

/// Closed-form E[XY] where one exists.
std::optional<Eigen::VectorXd> population_cross_moment(const SimConfig& config);

/// True E[X | Z] and E[Y | Z] at the rows of `d` (uses d.z()). Available for
/// remark1, low2, low4, high1 and high2; throws for the others.
CrossFitPredictions oracle_means(const SimConfig& config, const Dataset& d);
bool has_oracle_means(Setting s);

/// oracle_means on every non-empty block.
FusionPredictions oracle_fusion_predictions(const SimConfig& config, const FusionDataset& fd);

struct NumericThetaStar {
  Eigen::VectorXd theta;
  Eigen::VectorXd mc_se;
};

/// Population OLS coefficient from n_oracle streamed draws with the outcome
/// noise removed (Y replaced by E[Y | X, Z]). The Monte Carlo standard error
/// comes from a second pass over the same draws.
NumericThetaStar numeric_theta_star(const SimConfig& config, Index n_oracle, std::uint64_t seed);

/// Estimator names:
///   ols, lasso, mod-ols/<plugin>, mod-lasso/<plugin>, mod-lasso-struct/<plugin>,
///   proj-ols, proj-ridge, fuse-ols/<plugin>, fuse-lasso/<plugin>
/// with plugin one of identity, oracle, mean, linear, ridge, lasso.
struct EstimatorSpec {
  std::string name;
  std::string method;
  std::string plugin;

  static EstimatorSpec parse(const std::string& name);
};

struct ReplicateRecord {
  Index replicate = 0;
  std::string estimator;
  std::string status = "ok";
  Eigen::VectorXd theta_hat;
  double excess_risk = 0.0;
  double mse = 0.0;
  double runtime_ms = 0.0;
};

struct EstimatorSummary {
  std::string estimator;
  Eigen::VectorXd rmse;
  Eigen::VectorXd bias;
  Eigen::VectorXd sd;  ///< population convention: rmse^2 = bias^2 + sd^2
  double mean_excess_risk = 0.0;
  double mean_mse = 0.0;
  Index failures = 0;
};

struct SimResult {
  SimConfig config;
  Eigen::VectorXd theta_star;
  std::string theta_star_source;  ///< "analytic" or "numeric"
  std::vector<ReplicateRecord> records;  ///< replicate-major, estimators in the given order
  std::vector<EstimatorSummary> summaries;
};

/// Fits one estimator on a replicate. Seeds for folds and CV derive from
/// `seed`, so every estimator sees the same splits.
ModularFit run_estimator(const EstimatorSpec& spec, const SimConfig& config, const SimData& data,
                         std::uint64_t seed);

/// Replicate r uses seed derive_seed(config.seed, r). Failures are recorded
/// per replicate and excluded from the summaries.
SimResult run_study(const SimConfig& config, const std::vector<std::string>& estimators, Index n_replicates,
                    int parallelism, bool log_progress = false);

std::vector<EstimatorSummary> summarize(const std::vector<ReplicateRecord>& records,
                                        const std::vector<std::string>& estimators,
                                        const Eigen::VectorXd& theta_star);

}  // namespace modreg
