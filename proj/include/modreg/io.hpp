#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "modreg/lambda_path.hpp"
#include "modreg/modular.hpp"
#include "modreg/simbench.hpp"

namespace modreg {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// {theta, covariance | null, tag, n, p_x, objective, [lambda], [partition]}.
/// Partition indices are 1-based, matching theta_1..theta_p.
nlohmann::json to_json(const ModularFit& fit);

/// Columns lambda, cv_error, cv_se, nnz, theta_1..theta_p; one row per lambda.
void write_path_csv(std::ostream& os, const LambdaPath& path);

/// Reads a study configuration. Only "setting" is required; every other key
/// overrides the setting's default. B, gamma and gamma_tilde not given are
/// drawn from the seed.
SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimConfig& config);

/// One row per replicate x estimator:
/// replicate, estimator, status, excess_risk, mse, theta_1..theta_p.
void write_records_csv(std::ostream& os, const SimResult& result);

/// Configuration (with realized B), theta*, and per-estimator aggregates.
nlohmann::json summary_json(const SimResult& result);

}  // namespace modreg
