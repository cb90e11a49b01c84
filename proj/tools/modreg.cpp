// modreg: fit, simulate and fuse from the command line.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "modreg/crossfit.hpp"
#include "modreg/dataset.hpp"
#include "modreg/error.hpp"
#include "modreg/fusion.hpp"
#include "modreg/highdim.hpp"
#include "modreg/io.hpp"
#include "modreg/modular.hpp"
#include "modreg/simbench.hpp"

namespace fs = std::filesystem;
using namespace modreg;

namespace {

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int default_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

std::uint64_t effective_seed(std::uint64_t flag) {
  if (const char* env = std::getenv("MODREG_SEED"); env && *env) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(env, &pos);
      if (pos == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw Usage(std::string("MODREG_SEED is not an unsigned integer: '") + env + "'");
  }
  return flag;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

void write_path(const std::string& path, const std::optional<LambdaPath>& lp) {
  if (path.empty() || !lp) return;
  std::ostringstream os;
  write_path_csv(os, *lp);
  write_text(path, os.str());
}

struct PenaltyFlags {
  int cv_folds = 10;
  std::string cv_rule = "min";
  int n_lambda = 100;
  bool no_standardize = false;

  void add(CLI::App* app) {
    app->add_option("--cv-folds", cv_folds, "Folds for lambda cross-validation")->capture_default_str()
        ->check(CLI::Range(2, 1000));
    app->add_option("--cv-rule", cv_rule, "Lambda selection rule")->capture_default_str()
        ->check(CLI::IsMember({"min", "1se"}));
    app->add_option("--lambda-count", n_lambda, "Size of the default lambda grid")->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_flag("--no-standardize", no_standardize, "Penalize on the raw column scale");
  }

  PenaltyConfig config(int jobs) const {
    PenaltyConfig c;
    c.cv_folds = cv_folds;
    c.cv_rule = cv_rule == "1se" ? CvRule::one_se : CvRule::min;
    c.n_lambda = n_lambda;
    c.standardize = !no_standardize;
    c.jobs = jobs;
    return c;
  }
};

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string method;
  std::string data, schema;
  std::string learner = "ridge";
  std::string plugin = "crossfit";
  int folds = 2;
  std::uint64_t seed = 0;
  std::string out, path_out;
  std::string structure = "none";
  std::string outcome_features = "full";
  std::string family = "gaussian";
  std::vector<double> eta_x{0.0}, eta_y{0.0};
  int jobs = default_jobs();
  PenaltyFlags penalty;
};

ProxyCrossTerm build_cross_term(const FitArgs& a, const Dataset& d, std::uint64_t seed,
                                const std::optional<StructurePartition>& partition) {
  if (a.plugin == "identity") {
    if (a.structure != "none") throw Usage("--structure " + a.structure + " needs --plugin crossfit");
    return identity_cross_term(d);
  }
  const auto learner = make_learner(a.learner, seed);
  if (d.rows() < a.folds) throw DataError("cross-fitting with " + std::to_string(a.folds) + " folds needs at least that many rows");
  const auto folds = split_folds(d.rows(), a.folds, seed);
  if (partition) {
    const auto mode = a.outcome_features == "z-only" ? OutcomeFeatures::z_only : OutcomeFeatures::full;
    return proxy_cross_term_struct(d, *partition, *learner, *learner, folds, mode);
  }
  return proxy_cross_term_lm(d, crossfit_means(d, *learner, *learner, folds));
}

int run_fit(const FitArgs& a) {
  const std::uint64_t seed = effective_seed(a.seed);
  Dataset d = load_csv(a.data, load_schema(a.schema));
  const PenaltyConfig pen = a.penalty.config(a.jobs);
  ModularFit fit;
  nlohmann::json extra;
  std::optional<StructurePartition> partition;
  if (a.structure != "none") {
    if (a.method != "mod-ols" && a.method != "mod-lasso" && a.method != "mod-glm")
      throw Usage("--structure applies to mod-ols, mod-lasso and mod-glm");
    if (a.plugin == "identity") throw Usage("--structure " + a.structure + " needs --plugin crossfit");
    PenaltyConfig sp = pen;
    sp.cv_rule = CvRule::one_se;
    if (a.structure == "learn") {
      partition = learn_structure(d, sp, seed);
    } else {
      auto honest = learn_structure_honest(d, sp, seed);
      partition = std::move(honest.partition);
      extra["structure_rows"] = honest.structure_rows.size();
      d = std::move(honest.estimation);
    }
  }
  if (a.method == "ols") {
    fit = ols(d);
  } else if (a.method == "mod-ols") {
    fit = modular_ols(d, build_cross_term(a, d, seed, partition));
  } else if (a.method == "lasso") {
    fit = lasso(d, pen, seed);
  } else if (a.method == "mod-lasso") {
    fit = modular_lasso(d, build_cross_term(a, d, seed, partition), pen, seed);
  } else if (a.method == "glm" || a.method == "mod-glm") {
    const auto family = GlmFamily::parse(a.family);
    const auto c = a.method == "glm" ? identity_cross_term(d) : build_cross_term(a, d, seed, partition);
    fit = modular_glm(d, c, family);
    extra["family"] = a.family;
  } else {
    if (a.eta_x.size() == 1 && a.eta_y.size() == 1) {
      fit = projection_shortcut(d, ridge_hat(d.z(), a.eta_x[0]), ridge_hat(d.z(), a.eta_y[0]), pen, seed);
      extra["eta_x"] = a.eta_x[0];
      extra["eta_y"] = a.eta_y[0];
    } else {
      auto sel = cv_projection_etas(d, a.eta_x, a.eta_y, pen, seed);
      fit = std::move(sel.fit);
      extra["eta_x"] = sel.eta_x;
      extra["eta_y"] = sel.eta_y;
    }
  }
  auto j = to_json(fit);
  for (auto& [k, v] : extra.items()) j[k] = v;
  write_text(a.out, j.dump(2) + "\n");
  write_path(a.path_out, fit.path);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string config;
  long replicates = 0;
  int jobs = default_jobs();
  std::string out;
  std::vector<std::string> estimators;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

std::vector<std::string> default_estimators(Setting s) {
  switch (s) {
    case Setting::high1: return {"lasso", "mod-lasso/ridge", "mod-lasso/oracle"};
    case Setting::high2: return {"lasso", "mod-lasso/ridge", "mod-lasso-struct/ridge", "mod-lasso/oracle"};
    case Setting::remark1: return {"ols", "mod-ols/oracle"};
    default: return {"ols", "mod-ols/linear", "mod-ols/ridge", "mod-ols/lasso"};
  }
}

int run_simulate(const SimulateArgs& a) {
  std::ifstream in(a.config);
  if (!in) throw DataError("cannot open config '" + a.config + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config '" + a.config + "' is not valid JSON: " + e.what());
  }
  const bool env_seed = std::getenv("MODREG_SEED") && *std::getenv("MODREG_SEED");
  if (a.seed_given || env_seed) j["seed"] = effective_seed(a.seed);
  SimConfig config = sim_config_from_json(j);

  std::vector<std::string> estimators = a.estimators;
  if (estimators.empty() && j.contains("estimators")) estimators = j["estimators"].get<std::vector<std::string>>();
  if (estimators.empty()) estimators = default_estimators(config.setting);
  long replicates = a.replicates;
  if (replicates == 0) replicates = j.value("replicates", 100L);
  for (const auto& e : estimators) EstimatorSpec::parse(e);

  const auto result = run_study(config, estimators, replicates, a.jobs, true);
  fs::create_directories(a.out);
  std::ostringstream csv;
  write_records_csv(csv, result);
  write_text((fs::path(a.out) / "records.csv").string(), csv.str());
  write_text((fs::path(a.out) / "summary.json").string(), summary_json(result).dump(2) + "\n");
  for (const auto& s : result.summaries)
    std::cerr << s.estimator << ": mean excess risk " << format_double(s.mean_excess_risk) << ", failures "
              << s.failures << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fuse

struct FuseArgs {
  std::string triples, xz, zy, schema;
  std::string learner = "ridge";
  std::uint64_t seed = 0;
  std::string out, path_out;
  bool penalized = false;
  std::string structure = "none";
  int jobs = default_jobs();
  PenaltyFlags penalty;
};

int run_fuse(const FuseArgs& a) {
  if (a.triples.empty() && a.xz.empty() && a.zy.empty())
    throw Usage("fuse needs at least one of --triples, --xz, --zy");
  const std::uint64_t seed = effective_seed(a.seed);
  const FusionDataset fd = FusionDataset::load(a.triples, a.xz, a.zy, load_schema(a.schema));
  if (fd.n() + fd.n_xz() == 0)
    throw DataError("unidentifiable regime: no rows observe x (E[XX^T] and E[XY] need triples or --xz pairs)");
  if (fd.n() + fd.n_yz() == 0)
    throw DataError("unidentifiable regime: no rows observe y (E[XY] needs triples or --zy pairs)");
  const PenaltyConfig pen = a.penalty.config(a.jobs);
  std::optional<StructurePartition> partition;
  if (a.structure == "learn") {
    if (fd.n() == 0) throw DataError("--structure learn needs full (x, z, y) triples");
    PenaltyConfig sp = pen;
    sp.cv_rule = CvRule::one_se;
    partition = learn_structure(fd.triples(), sp, seed);
  }
  const auto learner = make_learner(a.learner, seed);
  const ProxyCrossTerm c = fd.n() == 0 ? proxy_cross_term_miss(fd, *learner, *learner, seed)
                                       : proxy_cross_term_part(fd, *learner, *learner, seed, partition);
  const ModularFit fit = fusion_fit(fd, c, a.penalized ? std::optional<PenaltyConfig>(pen) : std::nullopt, seed);
  write_text(a.out, to_json(fit).dump(2) + "\n");
  write_path(a.path_out, fit.path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"modreg: modular regression with cross-fitted proxy cross terms"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit one estimator to a CSV dataset and write ModularFit JSON");
  fit->add_option("--method", fa.method, "Estimator")->required()
      ->check(CLI::IsMember({"ols", "mod-ols", "lasso", "mod-lasso", "glm", "mod-glm", "projection"}));
  fit->add_option("--data", fa.data, "Input CSV with a header row")->required()->check(CLI::ExistingFile);
  fit->add_option("--schema", fa.schema, "JSON map {column: x|z|y|ignore}")->required()->check(CLI::ExistingFile);
  fit->add_option("--learner", fa.learner, "Sub-task learner for cross-fitting")->capture_default_str()
      ->check(CLI::IsMember({"mean", "linear", "ridge", "lasso"}));
  fit->add_option("--plugin", fa.plugin, "crossfit: learned conditional means; identity: observed values")
      ->capture_default_str()->check(CLI::IsMember({"crossfit", "identity"}));
  fit->add_option("--folds", fa.folds, "Cross-fitting folds")->capture_default_str()->check(CLI::Range(2, 1000));
  fit->add_option("--seed", fa.seed, "Seed for folds and learners (MODREG_SEED overrides)")->capture_default_str();
  fit->add_option("--out", fa.out, "Output JSON (default stdout)");
  fit->add_option("--path-out", fa.path_out, "Lambda path CSV for penalized fits");
  fit->add_option("--structure", fa.structure, "learn: Lasso-based split of X into J1/J2 (mod-ols, mod-lasso, mod-glm); "
                  "learn-split: learn it on half the rows, fit on the rest")
      ->capture_default_str()->check(CLI::IsMember({"none", "learn", "learn-split"}));
  fit->add_option("--outcome-features", fa.outcome_features, "Features of the outcome sub-task under --structure learn")
      ->capture_default_str()->check(CLI::IsMember({"full", "z-only"}));
  fit->add_option("--family", fa.family, "GLM family")->capture_default_str()
      ->check(CLI::IsMember({"gaussian", "logistic", "poisson"}));
  fit->add_option("--eta-x", fa.eta_x, "Ridge penalty (or CV grid) for the x projection")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  fit->add_option("--eta-y", fa.eta_y, "Ridge penalty (or CV grid) for the y projection")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  fit->add_option("--jobs", fa.jobs, "Worker threads")->check(CLI::PositiveNumber);
  fa.penalty.add(fit);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Run a seeded Monte Carlo study; writes records.csv and summary.json");
  sim->add_option("--config", sa.config, "Study configuration JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--replicates", sa.replicates, "Replicates (default: config or 100)")->check(CLI::Range(2L, 100000000L));
  sim->add_option("--jobs", sa.jobs, "Replicates run concurrently")->check(CLI::PositiveNumber);
  sim->add_option("--out", sa.out, "Output directory")->required();
  sim->add_option("--estimators", sa.estimators, "Comma-separated estimator names")->delimiter(',');
  sim->add_option("--seed", sa.seed, "Study seed (overrides the config; MODREG_SEED overrides both)");

  FuseArgs ua;
  auto* fuse = app.add_subcommand("fuse", "Combine full triples with (x, z) and (z, y) pair files");
  fuse->add_option("--triples", ua.triples, "CSV of full (x, z, y) rows")->check(CLI::ExistingFile);
  fuse->add_option("--xz", ua.xz, "CSV of (x, z) rows")->check(CLI::ExistingFile);
  fuse->add_option("--zy", ua.zy, "CSV of (z, y) rows")->check(CLI::ExistingFile);
  fuse->add_option("--schema", ua.schema, "JSON map {column: x|z|y|ignore}")->required()->check(CLI::ExistingFile);
  fuse->add_option("--learner", ua.learner, "Sub-task learner")->capture_default_str()
      ->check(CLI::IsMember({"mean", "linear", "ridge", "lasso"}));
  fuse->add_option("--seed", ua.seed, "Seed (MODREG_SEED overrides)")->capture_default_str();
  fuse->add_option("--out", ua.out, "Output JSON (default stdout)");
  fuse->add_option("--path-out", ua.path_out, "Lambda path CSV (with --penalized)");
  fuse->add_flag("--penalized", ua.penalized, "l1-penalized fit with lambda chosen by CV");
  fuse->add_option("--structure", ua.structure, "learn: structure-aware cross term (needs triples)")
      ->capture_default_str()->check(CLI::IsMember({"none", "learn"}));
  fuse->add_option("--jobs", ua.jobs, "Worker threads")->check(CLI::PositiveNumber);
  ua.penalty.add(fuse);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  sa.seed_given = sim->count("--seed") > 0;

  try {
    if (*fit) return run_fit(fa);
    if (*sim) return run_simulate(sa);
    if (*fuse) return run_fuse(ua);
  } catch (const Usage& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
