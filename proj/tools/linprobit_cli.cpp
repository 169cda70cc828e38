// Command-line front end: sweep | bench | estimate | verify.
// Each subcommand optionally loads a JSON config file; explicitly passed
// flags override the file. Exit codes: 0 ok, 1 partial dataset failure,
// 2 config error, 3 runtime failure, 4 verification failure.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "linprobit/commands.hpp"
#include "linprobit/errors.hpp"

namespace {

using linprobit::kExitConfigError;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw linprobit::ConfigError("cannot open config file " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<linprobit::EstimatorId> parse_estimators(
    const std::vector<std::string>& names) {
  std::vector<linprobit::EstimatorId> out;
  for (const std::string& name : names) {
    const auto id = linprobit::estimator_from_string(name);
    if (!id) {
      throw linprobit::ConfigError("unknown estimator '" + name + "'");
    }
    out.push_back(*id);
  }
  return out;
}

linprobit::OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return linprobit::OutputFormat::Csv;
  if (name == "json") return linprobit::OutputFormat::Json;
  throw linprobit::ConfigError("format must be 'csv' or 'json', got '" + name +
                               "'");
}

std::pair<int, int> parse_size(const std::string& spec) {
  const auto x = spec.find('x');
  const auto parse_int = [&](const std::string& part) {
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size() || part.empty() || value < 1) {
      throw linprobit::ConfigError("--sizes entries look like MxN, got '" +
                                   spec + "'");
    }
    return value;
  };
  if (x == std::string::npos) {
    throw linprobit::ConfigError("--sizes entries look like MxN, got '" + spec +
                                 "'");
  }
  return {parse_int(spec.substr(0, x)), parse_int(spec.substr(x + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linearized binary regression toolkit"};
  app.require_subcommand(1);

  // Shared flag storage; each subcommand binds the subset it supports.
  std::string config_path, output_path, format_name;
  std::uint64_t seed = 0;
  int trials = 0, threads = 0;
  long gibbs_samples = 0, gibbs_burn_in = 0;
  std::vector<double> snr_grid;
  std::vector<std::string> estimator_names;

  auto add_common = [&](CLI::App* cmd, bool with_format) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--threads", threads, "worker thread count");
    cmd->add_option("--output", output_path,
                    "output file (default: stdout)");
    if (with_format) {
      cmd->add_option("--format", format_name, "output format: csv or json");
    }
  };

  CLI::App* sweep = app.add_subcommand("sweep", "synthetic SNR sweep");
  std::vector<std::string> size_specs;
  double sigma_x_sq = 0.0;
  add_common(sweep, true);
  sweep->add_option("--trials", trials, "Monte-Carlo trials per point");
  sweep->add_option("--snr-grid", snr_grid, "SNR grid in dB");
  sweep->add_option("--estimators", estimator_names,
                    "estimators: lmmse ls map ml logit-map pm");
  sweep->add_option("--sizes", size_specs, "problem sizes as MxN, e.g. 50x5");
  sweep->add_option("--sigma-x-sq", sigma_x_sq, "prior variance");
  sweep->add_option("--gibbs-samples", gibbs_samples, "kept Gibbs samples");
  sweep->add_option("--gibbs-burn-in", gibbs_burn_in, "Gibbs burn-in sweeps");

  CLI::App* bench = app.add_subcommand("bench", "cross-validated benchmark");
  std::vector<std::string> dataset_paths, spec_paths;
  int folds = 0, partitions = 0;
  add_common(bench, true);
  bench->add_option("--dataset", dataset_paths, "dataset CSV path(s)");
  bench->add_option("--spec", spec_paths,
                    "ingestion spec JSON path(s), one per dataset");
  bench->add_option("--estimators", estimator_names,
                    "estimators: lmmse ls map ml logit-map pm");
  bench->add_option("--folds", folds, "cross-validation folds");
  bench->add_option("--partitions", partitions, "random partitions");
  bench->add_option("--trials", trials,
                    "alias for --partitions (random partitions)");
  bench->add_option("--gibbs-samples", gibbs_samples, "kept Gibbs samples");
  bench->add_option("--gibbs-burn-in", gibbs_burn_in, "Gibbs burn-in sweeps");

  CLI::App* estimate = app.add_subcommand("estimate", "fit a single problem");
  std::string design_path, observation_path, estimator_name;
  double est_sigma_x = 0.0, est_sigma_w = 0.0, smoothing = 0.0;
  add_common(estimate, false);
  estimate->add_option("--design", design_path, "design matrix file");
  estimate->add_option("--observations", observation_path,
                       "observation vector file");
  estimate->add_option("--estimator", estimator_name, "estimator name");
  estimate->add_option("--sigma-x-sq", est_sigma_x, "prior variance");
  estimate->add_option("--sigma-w-sq", est_sigma_w, "noise variance");
  estimate->add_option("--smoothing", smoothing, "sigmoid smoothing sigma");
  estimate->add_option("--gibbs-samples", gibbs_samples, "kept Gibbs samples");
  estimate->add_option("--gibbs-burn-in", gibbs_burn_in, "Gibbs burn-in sweeps");

  CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
  std::string sabotage;
  verify->add_option("--config", config_path, "JSON config file");
  verify->add_option("--seed", seed, "RNG seed");
  verify->add_option("--threads", threads, "worker thread count");
  verify->add_option("--trials", trials, "Monte-Carlo draws per check");
  verify->add_option("--sabotage", sabotage,
                     "fault-injection hook (e-matrix-scale)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    if (sweep->parsed()) {
      linprobit::SweepConfig cfg;
      if (sweep->count("--config")) {
        cfg = linprobit::SweepConfig::from_json_text(read_file(config_path));
      }
      if (sweep->count("--seed")) cfg.seed = seed;
      if (sweep->count("--trials")) cfg.trials = trials;
      if (sweep->count("--threads")) cfg.threads = threads;
      if (sweep->count("--output")) cfg.output_path = output_path;
      if (sweep->count("--format")) cfg.format = parse_format(format_name);
      if (sweep->count("--snr-grid")) cfg.snr_grid_db = snr_grid;
      if (sweep->count("--estimators")) {
        cfg.estimators = parse_estimators(estimator_names);
      }
      if (sweep->count("--sigma-x-sq")) cfg.sigma_x_sq = sigma_x_sq;
      if (sweep->count("--gibbs-samples")) {
        cfg.solver.gibbs_samples = gibbs_samples;
      }
      if (sweep->count("--gibbs-burn-in")) {
        cfg.solver.gibbs_burn_in = gibbs_burn_in;
      }
      if (sweep->count("--sizes")) {
        cfg.sizes.clear();
        for (const std::string& spec : size_specs) {
          cfg.sizes.push_back(parse_size(spec));
        }
      }
      return linprobit::cmd_sweep(cfg, std::cout, std::cerr);
    }

    if (bench->parsed()) {
      linprobit::BenchConfig cfg;
      if (bench->count("--config")) {
        cfg = linprobit::BenchConfig::from_json_text(read_file(config_path));
      }
      if (bench->count("--dataset")) {
        if (spec_paths.size() != dataset_paths.size()) {
          throw linprobit::ConfigError(
              "--dataset and --spec must be given the same number of times");
        }
        cfg.datasets.clear();
        for (std::size_t i = 0; i < dataset_paths.size(); ++i) {
          linprobit::DatasetRef ref;
          ref.path = dataset_paths[i];
          ref.spec_path = spec_paths[i];
          cfg.datasets.push_back(ref);
        }
      }
      if (bench->count("--seed")) cfg.seed = seed;
      if (bench->count("--threads")) cfg.threads = threads;
      if (bench->count("--output")) cfg.output_path = output_path;
      if (bench->count("--format")) cfg.format = parse_format(format_name);
      if (bench->count("--estimators")) {
        cfg.estimators = parse_estimators(estimator_names);
      }
      if (bench->count("--folds")) cfg.folds = folds;
      if (bench->count("--partitions")) cfg.partitions = partitions;
      if (bench->count("--trials")) cfg.partitions = trials;
      if (bench->count("--gibbs-samples")) {
        cfg.solver.gibbs_samples = gibbs_samples;
      }
      if (bench->count("--gibbs-burn-in")) {
        cfg.solver.gibbs_burn_in = gibbs_burn_in;
      }
      return linprobit::cmd_bench(cfg, std::cout, std::cerr);
    }

    if (estimate->parsed()) {
      linprobit::EstimateConfig cfg;
      if (estimate->count("--config")) {
        cfg = linprobit::EstimateConfig::from_json_text(read_file(config_path));
      }
      if (estimate->count("--design")) cfg.design_path = design_path;
      if (estimate->count("--observations")) {
        cfg.observation_path = observation_path;
      }
      if (estimate->count("--estimator")) {
        const auto id = linprobit::estimator_from_string(estimator_name);
        if (!id) {
          throw linprobit::ConfigError("unknown estimator '" + estimator_name +
                                       "'");
        }
        cfg.estimator = *id;
      }
      if (estimate->count("--sigma-x-sq")) cfg.sigma_x_sq = est_sigma_x;
      if (estimate->count("--sigma-w-sq")) cfg.sigma_w_sq = est_sigma_w;
      if (estimate->count("--smoothing")) cfg.smoothing = smoothing;
      if (estimate->count("--seed")) cfg.seed = seed;
      if (estimate->count("--output")) cfg.output_path = output_path;
      if (estimate->count("--gibbs-samples")) {
        cfg.solver.gibbs_samples = gibbs_samples;
      }
      if (estimate->count("--gibbs-burn-in")) {
        cfg.solver.gibbs_burn_in = gibbs_burn_in;
      }
      return linprobit::cmd_estimate(cfg, std::cout, std::cerr);
    }

    // verify
    linprobit::VerifyConfig cfg;
    if (verify->count("--config")) {
      cfg = linprobit::VerifyConfig::from_json_text(read_file(config_path));
    }
    if (verify->count("--seed")) cfg.seed = seed;
    if (verify->count("--threads")) cfg.threads = threads;
    if (verify->count("--trials")) cfg.trials = trials;
    if (verify->count("--sabotage")) cfg.sabotage = sabotage;
    return linprobit::cmd_verify(cfg, std::cout, std::cerr);
  } catch (const linprobit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return linprobit::kExitRuntimeError;
  }
}
