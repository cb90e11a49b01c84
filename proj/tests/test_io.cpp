#include <doctest.h>

#include <charconv>
#include <sstream>

#include <json.hpp>

#include "modreg/error.hpp"
#include "modreg/highdim.hpp"
#include "modreg/io.hpp"
#include "modreg/random.hpp"

using namespace modreg;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

TEST_CASE("format_double round-trips exactly") {
  SplitMix64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-30.0, 30.0));
    const std::string s = format_double(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("fit JSON carries theta, covariance and the 1-based partition") {
  SplitMix64 rng(2);
  const MatrixXd x = normal_matrix(rng, 30, 2);
  const Dataset d(x, normal_matrix(rng, 30, 1), normal_matrix(rng, 30, 1).col(0));
  const auto fit = ols(d);
  const json j = to_json(fit);
  CHECK(j.at("tag") == "ols");
  CHECK(j.at("theta").size() == 2);
  CHECK(j.at("theta")[0].get<double>() == fit.theta_hat(0));
  CHECK(j.at("covariance").size() == 2);
  CHECK(j.at("n") == 30);
  CHECK_FALSE(j.contains("partition"));

  ModularFit f = fit;
  f.partition = StructurePartition::from_j2(2, {1});
  f.covariance.reset();
  const json k = to_json(f);
  CHECK(k.at("partition").at("j2") == json::array({2}));
  CHECK(k.at("partition").at("j1") == json::array({1}));
  CHECK(k.at("covariance").is_null());
}

TEST_CASE("path CSV has one row per lambda") {
  SplitMix64 rng(3);
  const MatrixXd x = normal_matrix(rng, 50, 3);
  PenaltyConfig cfg;
  cfg.n_lambda = 7;
  const auto fit = lasso(Dataset(x, std::nullopt, VectorXd(x.col(0) + normal_matrix(rng, 50, 1).col(0))), cfg, 1);
  std::ostringstream os;
  write_path_csv(os, *fit.path);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "lambda,cv_error,cv_se,nnz,theta_1,theta_2,theta_3");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 7);
}

TEST_CASE("simulation config parsing") {
  const auto c = sim_config_from_json(json::parse(R"({"setting": "low2", "n": 300, "sigma_z": 0.5, "seed": 4})"));
  CHECK(c.setting == Setting::low2);
  CHECK(c.n == 300);
  CHECK(c.sigma_z == 0.5);
  CHECK(c.B.rows() == 4);
  CHECK(c.B == make_config(Setting::low2, 4).B);

  const auto again = sim_config_from_json(to_json(c));
  CHECK(again.B == c.B);
  CHECK(again.gamma == c.gamma);
  CHECK(again.n == c.n);

  CHECK_THROWS_AS(sim_config_from_json(json::parse(R"({"setting": "low1", "bogus": 1})")), DataError);
  CHECK_THROWS_AS(sim_config_from_json(json::parse(R"({"setting": "low1", "n": "many"})")), DataError);
  CHECK_THROWS_AS(sim_config_from_json(json::parse(R"({"setting": "low1", "sigma_y": -1})")), DataError);
  CHECK_THROWS_AS(sim_config_from_json(json::parse(R"({"setting": "low1", "gamma": [1, 2]})")), DataError);
  CHECK_NOTHROW(sim_config_from_json(json::parse(R"({"setting": "low1", "estimators": ["ols"], "replicates": 3})")));
}

TEST_CASE("records CSV layout") {
  auto c = make_config(Setting::low1, 5);
  const auto res = run_study(c, {"ols", "mod-ols/linear"}, 2, 1);
  std::ostringstream os;
  write_records_csv(os, res);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "replicate,estimator,status,excess_risk,mse,theta_1,theta_2,theta_3,theta_4");
  std::getline(is, line);
  CHECK(line.rfind("0,ols,ok,", 0) == 0);
  const json s = summary_json(res);
  CHECK(s.at("replicates") == 2);
  CHECK(s.at("estimators").size() == 2);
}
