#include "modreg/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "modreg/error.hpp"

namespace modreg {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
  return a;
}

json index_json(const std::vector<Index>& v) {
  json a = json::array();
  for (Index i : v) a.push_back(i + 1);
  return a;
}

Eigen::VectorXd vector_from(const json& j, const char* key) {
  if (!j.is_array()) throw DataError(std::string("config key '") + key + "' must be an array of numbers");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from(const json& j, const char* key) {
  if (!j.is_array() || j.empty()) throw DataError(std::string("config key '") + key + "' must be an array of rows");
  const std::size_t cols = j.front().size();
  Eigen::MatrixXd m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != cols) throw DataError(std::string("config key '") + key + "' has ragged rows");
    m.row(static_cast<Index>(i)) = vector_from(j[i], key).transpose();
  }
  return m;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

void theta_header(std::ostream& os, Index p) {
  for (Index j = 0; j < p; ++j) os << ",theta_" << j + 1;
  os << '\n';
}

}  // namespace

json to_json(const ModularFit& fit) {
  json j;
  j["theta"] = vector_json(fit.theta_hat);
  j["covariance"] = fit.covariance ? matrix_json(*fit.covariance) : json(nullptr);
  j["tag"] = to_string(fit.tag);
  j["n"] = fit.n;
  j["p_x"] = fit.p_x();
  j["objective"] = number(fit.objective_value);
  if (fit.path) j["lambda"] = fit.path->chosen_lambda();
  if (fit.partition) j["partition"] = {{"j1", index_json(fit.partition->j1)}, {"j2", index_json(fit.partition->j2)}};
  return j;
}

void write_path_csv(std::ostream& os, const LambdaPath& path) {
  os << "lambda,cv_error,cv_se,nnz";
  theta_header(os, path.coefficients.rows());
  const bool cv = path.cv_error.size() == static_cast<Index>(path.lambdas.size());
  for (std::size_t l = 0; l < path.lambdas.size(); ++l) {
    const auto li = static_cast<Index>(l);
    os << format_double(path.lambdas[l]) << ',' << (cv ? format_double(path.cv_error(li)) : "") << ','
       << (cv ? format_double(path.cv_se(li)) : "") << ',' << path.nnz[l];
    for (Index j = 0; j < path.coefficients.rows(); ++j) os << ',' << format_double(path.coefficients(j, li));
    os << '\n';
  }
}

SimConfig sim_config_from_json(const json& j) {
  if (!j.is_object() || !j.contains("setting")) throw DataError("config must be a JSON object with a \"setting\"");
  static const char* known[] = {"setting", "n", "n_test", "sigma_z", "sigma_y", "p_x", "p_z", "s", "rho", "seed",
                                "B", "gamma", "gamma_tilde", "alpha", "beta", "sigma_x", "sigma_1", "sigma_2",
                                "cv_folds", "cv_rule", "standardize", "n_lambda", "eta_grid", "n_oracle",
                                "estimators", "replicates"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw DataError("unknown config key '" + key + "'");
  }
  try {
    const Setting setting = parse_setting(j.at("setting").get<std::string>());
    SimConfig c = make_config(setting, 0);
    c.B.resize(0, 0);
    c.gamma.resize(0);
    c.gamma_tilde.resize(0);
    auto get = [&](const char* key, auto& slot) {
      if (j.contains(key)) slot = j.at(key).get<std::remove_reference_t<decltype(slot)>>();
    };
    get("n", c.n);
    get("n_test", c.n_test);
    get("sigma_z", c.sigma_z);
    get("sigma_y", c.sigma_y);
    get("p_x", c.p_x);
    get("p_z", c.p_z);
    get("s", c.s);
    get("seed", c.seed);
    get("alpha", c.alpha);
    get("beta", c.beta);
    get("sigma_x", c.sigma_x);
    get("sigma_1", c.sigma_1);
    get("sigma_2", c.sigma_2);
    get("cv_folds", c.cv_folds);
    get("standardize", c.standardize);
    get("n_lambda", c.n_lambda);
    get("eta_grid", c.eta_grid);
    get("n_oracle", c.n_oracle);
    if (j.contains("rho") && !j.at("rho").is_null()) c.rho = j.at("rho").get<double>();
    if (j.contains("cv_rule")) {
      const auto rule = j.at("cv_rule").get<std::string>();
      if (rule == "min") c.cv_rule = CvRule::min;
      else if (rule == "1se") c.cv_rule = CvRule::one_se;
      else throw DataError("cv_rule must be \"min\" or \"1se\"");
    }
    if (j.contains("B")) c.B = matrix_from(j.at("B"), "B");
    if (j.contains("gamma")) c.gamma = vector_from(j.at("gamma"), "gamma");
    if (j.contains("gamma_tilde")) c.gamma_tilde = vector_from(j.at("gamma_tilde"), "gamma_tilde");
    realize_parameters(c);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed config: ") + e.what());
  }
}

json to_json(const SimConfig& c) {
  json j;
  j["setting"] = to_string(c.setting);
  j["n"] = c.n;
  j["n_test"] = c.n_test;
  j["sigma_z"] = c.sigma_z;
  j["sigma_y"] = c.sigma_y;
  j["p_x"] = c.p_x;
  j["p_z"] = c.p_z;
  j["s"] = c.s;
  j["rho"] = c.rho ? json(*c.rho) : json(nullptr);
  j["seed"] = c.seed;
  j["B"] = matrix_json(c.B);
  j["gamma"] = vector_json(c.gamma);
  j["gamma_tilde"] = vector_json(c.gamma_tilde);
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["sigma_x"] = c.sigma_x;
  j["sigma_1"] = c.sigma_1;
  j["sigma_2"] = c.sigma_2;
  j["cv_folds"] = c.cv_folds;
  j["cv_rule"] = c.cv_rule == CvRule::min ? "min" : "1se";
  j["standardize"] = c.standardize;
  j["n_lambda"] = c.n_lambda;
  j["eta_grid"] = c.eta_grid;
  j["n_oracle"] = c.n_oracle;
  return j;
}

void write_records_csv(std::ostream& os, const SimResult& result) {
  os << "replicate,estimator,status,excess_risk,mse";
  theta_header(os, result.theta_star.size());
  for (const auto& r : result.records) {
    os << r.replicate << ',' << csv_field(r.estimator) << ',' << csv_field(r.status) << ','
       << format_double(r.excess_risk) << ',' << format_double(r.mse);
    for (Index j = 0; j < r.theta_hat.size(); ++j) os << ',' << format_double(r.theta_hat(j));
    os << '\n';
  }
}

json summary_json(const SimResult& result) {
  json j;
  j["config"] = to_json(result.config);
  j["theta_star"] = vector_json(result.theta_star);
  j["theta_star_source"] = result.theta_star_source;
  Index n_rep = 0;
  for (const auto& r : result.records) n_rep = std::max(n_rep, r.replicate + 1);
  j["replicates"] = n_rep;
  json est = json::array();
  for (const auto& s : result.summaries)
    est.push_back({{"estimator", s.estimator},
                   {"rmse", vector_json(s.rmse)},
                   {"bias", vector_json(s.bias)},
                   {"sd", vector_json(s.sd)},
                   {"mean_excess_risk", number(s.mean_excess_risk)},
                   {"mean_mse", number(s.mean_mse)},
                   {"failures", s.failures}});
  j["estimators"] = est;
  return j;
}

}  // namespace modreg
