#include "modreg/simbench.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "modreg/error.hpp"
#include "modreg/highdim.hpp"
#include "modreg/linalg.hpp"
#include "modreg/parallel.hpp"

namespace modreg {

namespace {

constexpr std::uint64_t kParameterStream = ~std::uint64_t{0};
constexpr std::uint64_t kOracleStream = ~std::uint64_t{0} - 1;

bool is_high(Setting s) { return s == Setting::high1 || s == Setting::high2; }
bool x_drives_z(Setting s) { return s == Setting::low1 || s == Setting::low3 || is_high(s); }

double indicator(double v) { return v > 0.0 ? 1.0 : 0.0; }

/// Noise-free X for low4 given Z (rows).
Eigen::MatrixXd low4_mean_x(const SimConfig& c, const Eigen::MatrixXd& z) {
  Eigen::MatrixXd x(z.rows(), 4);
  const Eigen::VectorXd b3 = z * c.B.row(3).transpose();
  for (Index i = 0; i < z.rows(); ++i) {
    x(i, 0) = 0.5 * z(i, 0) + indicator(z(i, 0));
    x(i, 1) = -0.5 * z(i, 2) + indicator(z(i, 3));
    x(i, 2) = indicator(z(i, 3));
    x(i, 3) = b3(i);
  }
  return x;
}

/// Noise-free Z for low3 given X (rows).
Eigen::MatrixXd low3_mean_z(const SimConfig& c, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = x * c.B.transpose();
  for (Index i = 0; i < x.rows(); ++i) {
    z(i, 0) = 0.5 * x(i, 0) + indicator(x(i, 0));
    z(i, 1) = -0.5 * x(i, 2) + indicator(x(i, 3));
    z(i, 2) = indicator(x(i, 3));
  }
  return z;
}

Dataset draw(const SimConfig& c, SplitMix64& rng, Index m, bool y_noise) {
  Eigen::MatrixXd x, z;
  Eigen::VectorXd y;
  switch (c.setting) {
    case Setting::low1:
      x = uniform_matrix(rng, m, c.p_x, -1.0, 1.0);
      z = x * c.B.transpose() + normal_matrix(rng, m, c.p_z, c.sigma_z);
      break;
    case Setting::low2:
      z = uniform_matrix(rng, m, c.p_z, -1.0, 1.0);
      x = z * c.B.transpose() + normal_matrix(rng, m, c.p_x, c.sigma_z);
      break;
    case Setting::low3:
      x = uniform_matrix(rng, m, c.p_x, -1.0, 1.0);
      z = low3_mean_z(c, x) + normal_matrix(rng, m, c.p_z, c.sigma_z);
      break;
    case Setting::low4:
      z = uniform_matrix(rng, m, c.p_z, -1.0, 1.0);
      x = low4_mean_x(c, z) + normal_matrix(rng, m, c.p_x, c.sigma_z);
      break;
    case Setting::high1:
    case Setting::high2:
      x = normal_matrix(rng, m, c.p_x);
      z = x * c.B.transpose() + normal_matrix(rng, m, c.p_z, c.sigma_z);
      break;
    case Setting::remark1:
      x = normal_matrix(rng, m, 1, c.sigma_x);
      z = c.alpha * x + normal_matrix(rng, m, 1, c.sigma_1);
      y = c.beta * z.col(0);
      if (y_noise) y += normal_matrix(rng, m, 1, c.sigma_2).col(0);
      return Dataset(std::move(x), std::move(z), std::move(y));
  }
  y = z * c.gamma;
  if (c.gamma_tilde.size() == c.p_x) y += x * c.gamma_tilde;
  if (y_noise) y += normal_matrix(rng, m, 1, c.sigma_y).col(0);
  return Dataset(std::move(x), std::move(z), std::move(y));
}

/// B with `count` of its entries set to `value`, chosen uniformly.
Eigen::MatrixXd sparse_pattern(SplitMix64& rng, Index rows, Index cols, Index count, double value) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(rows, cols);
  const auto perm = random_permutation(rows * cols, rng);
  for (Index k = 0; k < count; ++k) {
    const Index e = perm[static_cast<std::size_t>(k)];
    b(e / cols, e % cols) = value;
  }
  return b;
}

}  // namespace

std::string to_string(Setting s) {
  switch (s) {
    case Setting::low1: return "low1";
    case Setting::low2: return "low2";
    case Setting::low3: return "low3";
    case Setting::low4: return "low4";
    case Setting::high1: return "high1";
    case Setting::high2: return "high2";
    case Setting::remark1: return "remark1";
  }
  return "?";
}

Setting parse_setting(const std::string& s) {
  for (Setting v : {Setting::low1, Setting::low2, Setting::low3, Setting::low4, Setting::high1, Setting::high2,
                    Setting::remark1})
    if (to_string(v) == s) return v;
  throw DataError("unknown setting '" + s + "' (expected low1..low4, high1, high2 or remark1)");
}

void SimConfig::validate() const {
  if (n < 1 || n_test < 1) throw DataError("n and n_test must be positive");
  if (!(sigma_z >= 0.0) || !(sigma_y >= 0.0) || !(sigma_x > 0.0) || !(sigma_1 >= 0.0) || !(sigma_2 >= 0.0))
    throw DataError("noise standard deviations must be nonnegative (sigma_x positive)");
  if (rho && !(*rho >= 0.0)) throw DataError("rho must be nonnegative");
  if (cv_folds < 2) throw DataError("cv_folds must be at least 2");
  switch (setting) {
    case Setting::remark1:
      if (p_x != 1 || p_z != 1) throw DataError("remark1 is one-dimensional: p_x = p_z = 1");
      return;
    case Setting::low3:
    case Setting::low4:
      if (p_x != 4 || p_z != 6) throw DataError(to_string(setting) + " is defined for p_x = 4, p_z = 6 only");
      break;
    case Setting::high1:
    case Setting::high2:
      if (s < 1 || s > p_x || 2 * s > p_z) throw DataError("need 1 <= s <= p_x and 2 s <= p_z");
      break;
    default: break;
  }
  const bool xz = x_drives_z(setting);
  const Index br = xz ? p_z : p_x, bc = xz ? p_x : p_z;
  if (B.rows() != br || B.cols() != bc)
    throw DataError("B must be " + std::to_string(br) + " x " + std::to_string(bc) + " for " + to_string(setting));
  if (gamma.size() != p_z) throw DataError("gamma must have length p_z");
  if (gamma_tilde.size() != 0 && gamma_tilde.size() != p_x) throw DataError("gamma_tilde must have length p_x");
}

void realize_parameters(SimConfig& c) {
  SplitMix64 rng(derive_seed(c.seed, kParameterStream));
  if (c.setting == Setting::remark1) {
    c.p_x = c.p_z = 1;
    if (c.B.size() == 0) c.B = Eigen::MatrixXd::Constant(1, 1, c.alpha);
    if (c.gamma.size() == 0) c.gamma = Eigen::VectorXd::Constant(1, c.beta);
    return;
  }
  if (is_high(c.setting)) {
    if (c.B.size() == 0) {
      c.B = Eigen::MatrixXd::Zero(c.p_z, c.p_x);
      for (Index j = 0; j < c.s; ++j) {
        const auto rows = random_permutation(c.p_z, rng);
        for (Index k = 0; k < 2 * c.s; ++k) c.B(rows[static_cast<std::size_t>(k)], j) = 0.25;
      }
    }
    if (c.gamma.size() == 0) {
      c.gamma = Eigen::VectorXd::Zero(c.p_z);
      c.gamma.head(c.s).setConstant(0.5);
    }
    if (c.gamma_tilde.size() == 0) {
      c.gamma_tilde = Eigen::VectorXd::Zero(c.p_x);
      if (c.setting == Setting::high2) {
        const auto idx = random_permutation(c.p_x - c.s, rng);
        for (Index k = 0; k < std::min<Index>(5, c.p_x - c.s); ++k)
          c.gamma_tilde(c.s + idx[static_cast<std::size_t>(k)]) = 0.5;
      }
    }
    return;
  }
  if (c.B.size() == 0) {
    const bool xz = x_drives_z(c.setting);
    c.B = sparse_pattern(rng, xz ? c.p_z : c.p_x, xz ? c.p_x : c.p_z, 8, 0.5);
  }
  if (c.gamma.size() == 0) {
    if (c.p_z != 6) throw DataError("default gamma needs p_z = 6; supply gamma explicitly");
    c.gamma.resize(6);
    c.gamma << 0.531, -0.126, 0.312, 0.0, 0.0, 0.0;
  }
}

SimConfig make_config(Setting setting, std::uint64_t seed) {
  SimConfig c;
  c.setting = setting;
  c.seed = seed;
  if (is_high(setting)) {
    c.n = 500;
    c.p_x = c.p_z = 100;
    c.s = 10;
    c.sigma_z = 1.0;
    c.sigma_y = 2.0;
    c.cv_folds = 5;
    c.standardize = true;
  } else if (setting == Setting::remark1) {
    c.n = 2000;
    c.p_x = c.p_z = 1;
  }
  realize_parameters(c);
  return c;
}

Dataset draw_rows(const SimConfig& config, SplitMix64& rng, Index m) { return draw(config, rng, m, true); }

SimData generate(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  SimData out;
  SplitMix64 train_rng(derive_seed(seed, 0));
  out.train = draw(config, train_rng, config.n, true);
  if (config.rho) {
    const auto m = static_cast<Index>(std::llround(*config.rho * static_cast<double>(config.n)));
    Dataset xz, zy;
    if (m > 0) {
      SplitMix64 rx(derive_seed(seed, 1)), ry(derive_seed(seed, 2));
      const Dataset a = draw(config, rx, m, true);
      const Dataset b = draw(config, ry, m, true);
      xz = Dataset(a.x(), a.z(), std::nullopt);
      zy = Dataset(std::nullopt, b.z(), b.y());
    }
    out.fusion = FusionDataset(out.train, std::move(xz), std::move(zy));
  }
  SplitMix64 test_rng(derive_seed(seed, 3));
  out.test = draw(config, test_rng, config.n_test, true);
  return out;
}

std::optional<Eigen::VectorXd> analytic_theta_star(const SimConfig& c) {
  switch (c.setting) {
    case Setting::low1: return Eigen::VectorXd(c.B.transpose() * c.gamma);
    case Setting::low2: {
      Eigen::MatrixXd sxx = c.B * c.B.transpose() / 3.0;
      sxx.diagonal().array() += c.sigma_z * c.sigma_z;
      return Eigen::VectorXd(sxx.ldlt().solve(c.B * c.gamma / 3.0));
    }
    case Setting::high1:
    case Setting::high2: {
      Eigen::VectorXd t = c.B.transpose() * c.gamma;
      if (c.gamma_tilde.size() == c.p_x) t += c.gamma_tilde;
      return t;
    }
    case Setting::remark1: return Eigen::VectorXd::Constant(1, c.alpha * c.beta);
    default: return std::nullopt;
  }
}

std::optional<Eigen::VectorXd> population_cross_moment(const SimConfig& c) {
  switch (c.setting) {
    case Setting::low1: return Eigen::VectorXd(c.B.transpose() * c.gamma / 3.0);
    case Setting::low2: return Eigen::VectorXd(c.B * c.gamma / 3.0);
    case Setting::low3: {
      // E[X f(X)^T] with X uniform on [-1, 1]^4
      Eigen::MatrixXd m = c.B.transpose() / 3.0;
      m.col(0).setZero();
      m.col(1).setZero();
      m.col(2).setZero();
      m(0, 0) = 5.0 / 12.0;
      m(2, 1) = -1.0 / 6.0;
      m(3, 1) = 0.25;
      m(3, 2) = 0.25;
      return Eigen::VectorXd(m * c.gamma);
    }
    case Setting::low4: {
      // E[f(Z) Z^T] with Z uniform on [-1, 1]^6
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 6);
      m(0, 0) = 5.0 / 12.0;
      m(1, 2) = -1.0 / 6.0;
      m(1, 3) = 0.25;
      m(2, 3) = 0.25;
      m.row(3) = c.B.row(3) / 3.0;
      return Eigen::VectorXd(m * c.gamma);
    }
    case Setting::high1:
    case Setting::high2: return analytic_theta_star(c);
    case Setting::remark1: return Eigen::VectorXd::Constant(1, c.alpha * c.beta * c.sigma_x * c.sigma_x);
  }
  return std::nullopt;
}

bool has_oracle_means(Setting s) {
  return s == Setting::remark1 || s == Setting::low2 || s == Setting::low4 || is_high(s);
}

CrossFitPredictions oracle_means(const SimConfig& c, const Dataset& d) {
  const Eigen::MatrixXd& z = d.z();
  CrossFitPredictions p;
  switch (c.setting) {
    case Setting::remark1: {
      const double sx2 = c.sigma_x * c.sigma_x;
      const double k = c.alpha * sx2 / (c.alpha * c.alpha * sx2 + c.sigma_1 * c.sigma_1);
      p.mu_x_hat = k * z;
      p.mu_y_hat = c.beta * z.col(0);
      return p;
    }
    case Setting::low2:
      p.mu_x_hat = z * c.B.transpose();
      p.mu_y_hat = z * c.gamma;
      return p;
    case Setting::low4:
      p.mu_x_hat = low4_mean_x(c, z);
      p.mu_y_hat = z * c.gamma;
      return p;
    case Setting::high1:
    case Setting::high2: {
      // X ~ N(0, I), Z = B X + eps: E[X | Z] = B^T (B B^T + sigma_z^2 I)^{-1} Z
      Eigen::MatrixXd s = c.B * c.B.transpose();
      s.diagonal().array() += c.sigma_z * c.sigma_z;
      const Eigen::MatrixXd k = c.B.transpose() * s.ldlt().solve(Eigen::MatrixXd::Identity(c.p_z, c.p_z));
      p.mu_x_hat = z * k.transpose();
      p.mu_y_hat = z * c.gamma;
      if (c.gamma_tilde.size() == c.p_x) p.mu_y_hat += p.mu_x_hat * c.gamma_tilde;
      return p;
    }
    default:
      throw DataError("no closed-form conditional means for setting " + to_string(c.setting));
  }
}

FusionPredictions oracle_fusion_predictions(const SimConfig& config, const FusionDataset& fd) {
  auto block = [&](const Dataset& d) {
    if (!d.empty()) return oracle_means(config, d);
    CrossFitPredictions p;
    p.mu_x_hat.resize(0, fd.p_x());
    p.mu_y_hat.resize(0);
    return p;
  };
  return FusionPredictions{block(fd.triples()), block(fd.xz_pairs()), block(fd.zy_pairs())};
}

NumericThetaStar numeric_theta_star(const SimConfig& config, Index n_oracle, std::uint64_t seed) {
  config.validate();
  if (n_oracle < 2) throw std::invalid_argument("numeric theta* needs at least two draws");
  constexpr Index kChunk = 1 << 16;
  const Index p = config.p_x;
  auto for_each_chunk = [&](auto&& body) {
    SplitMix64 rng(seed);
    for (Index done = 0; done < n_oracle; done += kChunk) body(draw(config, rng, std::min(kChunk, n_oracle - done), false));
  };

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
  for_each_chunk([&](const Dataset& d) {
    g.noalias() += d.x().transpose() * d.x();
    c.noalias() += d.x().transpose() * d.y();
  });
  const double n = static_cast<double>(n_oracle);
  g /= n;
  c /= n;
  const SpdFactor factor(g);
  NumericThetaStar out;
  out.theta = factor.solve(c);

  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(p);
  for_each_chunk([&](const Dataset& d) {
    const Eigen::VectorXd resid = d.y() - d.x() * out.theta;
    const Eigen::MatrixXd phi = factor.solve(Eigen::MatrixXd(scale_rows(d.x(), resid).transpose()));
    sum_sq += phi.rowwise().squaredNorm();
  });
  out.mc_se = (sum_sq / n / n).cwiseSqrt();
  return out;
}

// ---------------------------------------------------------------------------
// Estimators and studies

EstimatorSpec EstimatorSpec::parse(const std::string& name) {
  EstimatorSpec spec;
  spec.name = name;
  const auto slash = name.find('/');
  spec.method = name.substr(0, slash);
  spec.plugin = slash == std::string::npos ? "" : name.substr(slash + 1);
  static const char* plain[] = {"ols", "lasso", "proj-ols", "proj-ridge"};
  static const char* modular[] = {"mod-ols", "mod-lasso", "mod-lasso-struct", "fuse-ols", "fuse-lasso"};
  static const char* plugins[] = {"identity", "oracle", "mean", "linear", "ridge", "lasso"};
  for (const char* m : plain)
    if (spec.method == m) {
      if (!spec.plugin.empty()) throw std::invalid_argument("estimator '" + name + "' takes no plug-in");
      return spec;
    }
  for (const char* m : modular)
    if (spec.method == m) {
      for (const char* p : plugins)
        if (spec.plugin == p) return spec;
      throw std::invalid_argument("estimator '" + name +
                                  "' needs a plug-in: identity, oracle, mean, linear, ridge or lasso");
    }
  throw std::invalid_argument("unknown estimator '" + name + "'");
}

ModularFit run_estimator(const EstimatorSpec& spec, const SimConfig& config, const SimData& data,
                         std::uint64_t seed) {
  const Dataset& d = data.train;
  const std::uint64_t fold_seed = derive_seed(seed, 11);
  const std::uint64_t learner_seed = derive_seed(seed, 12);
  const std::uint64_t cv_seed = derive_seed(seed, 13);
  PenaltyConfig pen;
  pen.cv_folds = config.cv_folds;
  pen.cv_rule = config.cv_rule;
  pen.standardize = config.standardize;
  pen.n_lambda = config.n_lambda;

  auto predictions = [&]() {
    if (spec.plugin == "identity") return identity_predictions(d);
    if (spec.plugin == "oracle") return oracle_means(config, d);
    const auto learner = make_learner(spec.plugin, learner_seed);
    return crossfit_means(d, *learner, *learner, split_folds(d.rows(), 2, fold_seed));
  };

  if (spec.method == "ols") return ols(d);
  if (spec.method == "lasso") return lasso(d, pen, cv_seed);
  if (spec.method == "mod-ols") return modular_ols(d, proxy_cross_term_lm(d, predictions()));
  if (spec.method == "mod-lasso") return modular_lasso(d, proxy_cross_term_lm(d, predictions()), pen, cv_seed);
  if (spec.method == "mod-lasso-struct") {
    if (spec.plugin == "oracle")
      throw std::invalid_argument("structured cross term has no oracle plug-in (conditioning set is learned)");
    PenaltyConfig sp = pen;
    sp.cv_rule = CvRule::one_se;
    const auto partition = learn_structure(d, sp, cv_seed);
    if (spec.plugin == "identity") return modular_lasso(d, identity_cross_term(d), pen, cv_seed);
    const auto learner = make_learner(spec.plugin, learner_seed);
    const auto c = proxy_cross_term_struct(d, partition, *learner, *learner, split_folds(d.rows(), 2, fold_seed));
    return modular_lasso(d, c, pen, cv_seed);
  }
  if (spec.method == "proj-ols") {
    const auto hat = ols_hat(d.z());
    return projection_shortcut(d, hat, hat, pen, cv_seed);
  }
  if (spec.method == "proj-ridge") return cv_projection_etas(d, config.eta_grid, config.eta_grid, pen, cv_seed).fit;
  if (spec.method == "fuse-ols" || spec.method == "fuse-lasso") {
    if (!data.fusion) throw std::invalid_argument("fusion estimators need rho in the configuration");
    const FusionDataset& fd = *data.fusion;
    ProxyCrossTerm c;
    if (spec.plugin == "oracle") {
      c = assemble_cross_term(fd, oracle_fusion_predictions(config, fd));
    } else if (spec.plugin == "identity") {
      if (!fd.pairs_empty()) throw std::invalid_argument("identity plug-in is undefined with pair-only rows");
      c = identity_cross_term(fd.triples());
    } else {
      const auto learner = make_learner(spec.plugin, learner_seed);
      c = proxy_cross_term_part(fd, *learner, *learner, fold_seed);
    }
    return fusion_fit(fd, c, spec.method == "fuse-lasso" ? std::optional<PenaltyConfig>(pen) : std::nullopt, cv_seed);
  }
  throw std::invalid_argument("unknown estimator '" + spec.name + "'");
}

std::vector<EstimatorSummary> summarize(const std::vector<ReplicateRecord>& records,
                                        const std::vector<std::string>& estimators,
                                        const Eigen::VectorXd& theta_star) {
  std::vector<EstimatorSummary> out;
  const Index p = theta_star.size();
  for (const auto& name : estimators) {
    EstimatorSummary s;
    s.estimator = name;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(p), sum_sq = Eigen::VectorXd::Zero(p);
    Index ok = 0;
    double risk = 0.0, mse = 0.0;
    for (const auto& r : records) {
      if (r.estimator != name) continue;
      if (r.status != "ok") {
        ++s.failures;
        continue;
      }
      const Eigen::VectorXd e = r.theta_hat - theta_star;
      sum += e;
      sum_sq += e.cwiseAbs2();
      risk += r.excess_risk;
      mse += r.mse;
      ++ok;
    }
    if (ok > 0) {
      const double k = static_cast<double>(ok);
      s.bias = sum / k;
      s.rmse = (sum_sq / k).cwiseSqrt();
      s.sd = (sum_sq / k - s.bias.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
      s.mean_excess_risk = risk / k;
      s.mean_mse = mse / k;
    } else {
      s.bias = s.rmse = s.sd = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
      s.mean_excess_risk = s.mean_mse = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(s));
  }
  return out;
}

SimResult run_study(const SimConfig& config, const std::vector<std::string>& estimators, Index n_replicates,
                    int parallelism, bool log_progress) {
  config.validate();
  if (n_replicates < 2) throw std::invalid_argument("a study needs at least two replicates");
  if (estimators.empty()) throw std::invalid_argument("a study needs at least one estimator");
  std::vector<EstimatorSpec> specs;
  for (const auto& e : estimators) specs.push_back(EstimatorSpec::parse(e));

  SimResult result;
  result.config = config;
  if (auto t = analytic_theta_star(config)) {
    result.theta_star = *t;
    result.theta_star_source = "analytic";
  } else {
    result.theta_star = numeric_theta_star(config, config.n_oracle, derive_seed(config.seed, kOracleStream)).theta;
    result.theta_star_source = "numeric";
  }

  std::vector<std::vector<ReplicateRecord>> slots(static_cast<std::size_t>(n_replicates));
  std::mutex log_mutex;
  parallel_for(n_replicates, parallelism, [&](Index r) {
    const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(r));
    const SimData data = generate(config, seed);
    auto& out = slots[static_cast<std::size_t>(r)];
    for (const auto& spec : specs) {
      ReplicateRecord rec;
      rec.replicate = r;
      rec.estimator = spec.name;
      const auto start = std::chrono::steady_clock::now();
      try {
        const ModularFit fit = run_estimator(spec, config, data, seed);
        rec.theta_hat = fit.theta_hat;
        const Eigen::VectorXd pred = data.test.x() * fit.theta_hat;
        rec.excess_risk = (pred - data.test.x() * result.theta_star).squaredNorm() / static_cast<double>(config.n_test);
        rec.mse = (pred - data.test.y()).squaredNorm() / static_cast<double>(config.n_test);
      } catch (const std::exception& e) {
        rec.status = std::string("error: ") + e.what();
        rec.theta_hat = Eigen::VectorXd::Constant(config.p_x, std::numeric_limits<double>::quiet_NaN());
        rec.excess_risk = rec.mse = std::numeric_limits<double>::quiet_NaN();
      }
      rec.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      out.push_back(std::move(rec));
    }
    if (log_progress) {
      std::lock_guard lock(log_mutex);
      std::cerr << "replicate " << r + 1 << "/" << n_replicates << " done\n";
    }
  });
  for (auto& s : slots)
    for (auto& rec : s) result.records.push_back(std::move(rec));
  result.summaries = summarize(result.records, estimators, result.theta_star);
  return result;
}

}  // namespace modreg
