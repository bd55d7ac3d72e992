#include "svcscale/config.hpp"
#include "svcscale/csv.hpp"
#include "svcscale/eigenbasis.hpp"
#include "svcscale/esf.hpp"
#include "svcscale/fbgwr.hpp"
#include "svcscale/gwr.hpp"
#include "svcscale/reesf.hpp"
#include "svcscale/simulation.hpp"
#include "svcscale/spatial.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace svcscale;

namespace {

std::atomic<bool> g_interrupted{false};

void handle_sigint(int) { g_interrupted.store(true); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

uint64_t resolve_seed(bool seedSet, long seedFlag, const KeyValueConfig* cfg) {
  if (seedSet) return static_cast<uint64_t>(seedFlag);
  if (cfg && cfg->has("master_seed"))
    return static_cast<uint64_t>(cfg->get_int("master_seed", 1));
  if (const char* env = std::getenv("SVCSCALE_SEED")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*env != '\0' && end != env && *end == '\0') return static_cast<uint64_t>(v);
    throw ConfigError("SVCSCALE_SEED is not an integer");
  }
  return 1;
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitArgs {
  std::string model, data, coords, response, predictors, criterion = "aicc", out;
  long seed = 0;
  bool seedSet = false;
};

int run_fit(const FitArgs& args) {
  const ModelTag model = model_tag_from_string(args.model);
  CalibrationCriterion criterion;
  if (args.criterion == "aicc")
    criterion = CalibrationCriterion::Aicc;
  else if (args.criterion == "cv")
    criterion = CalibrationCriterion::LoocvMse;
  else
    throw ConfigError("criterion must be cv or aicc");

  const auto coordCols = split_csv_list(args.coords);
  if (coordCols.size() != 2) throw ConfigError("--coords needs exactly two column names");
  const auto predictorCols = split_csv_list(args.predictors);
  if (predictorCols.empty()) throw ConfigError("--predictors needs at least one column name");

  const CsvTable table = CsvTable::read_file(args.data);
  const Index n = static_cast<Index>(table.rows.size());
  if (n == 0) throw DataError("no data rows");

  MatrixXd coords(n, 2);
  coords.col(0) = table.numeric_column(coordCols[0]);
  coords.col(1) = table.numeric_column(coordCols[1]);
  MatrixXd X(n, static_cast<Index>(predictorCols.size()) + 1);
  X.col(0).setOnes();
  for (size_t p = 0; p < predictorCols.size(); ++p)
    X.col(static_cast<Index>(p) + 1) = table.numeric_column(predictorCols[p]);
  const VectorXd y = table.numeric_column(args.response);

  const SpatialDataset data = SpatialDataset::make(coords, X, y);
  const uint64_t seed = resolve_seed(args.seedSet, args.seed, nullptr);

  SvcFit fit;
  switch (model) {
    case ModelTag::Gwr:
      fit = gwr_fit(data, KernelSpec::calibrated(KernelMode::FixedDistance), criterion);
      break;
    case ModelTag::Gwra:
      fit = gwr_fit(data, KernelSpec::calibrated(KernelMode::AdaptiveNeighbor), criterion);
      break;
    case ModelTag::FbGwr:
      fit = fbgwr_fit(data, KernelMode::FixedDistance, criterion);
      break;
    case ModelTag::FbGwra:
      fit = fbgwr_fit(data, KernelMode::AdaptiveNeighbor, criterion);
      break;
    case ModelTag::Esf:
    case ModelTag::ReEsf: {
      const EigenBasis basis = build_model_basis(distance_matrix(data.coords));
      fit = model == ModelTag::Esf ? esf_fit(data, basis) : reesf_fit(data, basis);
      break;
    }
  }

  std::ofstream outFile(args.out);
  if (!outFile) throw DataError("cannot open output file: " + args.out);

  const double residualSd =
      std::sqrt(fit.residuals.squaredNorm() / static_cast<double>(std::max<Index>(n - 1, 1)));
  outFile << "# model = " << to_string(fit.model) << '\n';
  outFile << "# criterion = " << args.criterion << '\n';
  outFile << "# n = " << n << '\n';
  outFile << "# p_star = " << fmt(fit.pStar) << '\n';
  if (fit.scale.bandwidths.size() == 1)
    outFile << "# bandwidth = " << fmt(fit.scale.bandwidths[0]) << '\n';
  else if (fit.scale.bandwidths.size() > 1) {
    outFile << "# bandwidths = ";
    for (Index i = 0; i < fit.scale.bandwidths.size(); ++i)
      outFile << (i ? "," : "") << fmt(fit.scale.bandwidths[i]);
    outFile << '\n';
  }
  if (fit.model == ModelTag::Esf) {
    outFile << "# selected_terms = ";
    for (size_t t = 0; t < fit.scale.esfTerms.size(); ++t)
      outFile << (t ? ";" : "") << fit.scale.esfTerms[t].first << ':'
              << fit.scale.esfTerms[t].second;
    outFile << '\n';
  }
  if (fit.model == ModelTag::ReEsf) {
    outFile << "# alpha = ";
    for (Index i = 0; i < fit.scale.alpha.size(); ++i)
      outFile << (i ? "," : "") << fmt(fit.scale.alpha[i]);
    outFile << '\n';
    outFile << "# sigma_gamma = ";
    for (Index i = 0; i < fit.scale.sigmaGamma.size(); ++i)
      outFile << (i ? "," : "") << fmt(fit.scale.sigmaGamma[i]);
    outFile << '\n';
  }
  if (std::isfinite(fit.scale.sigma2)) outFile << "# sigma2 = " << fmt(fit.scale.sigma2) << '\n';
  outFile << "# residual_sd = " << fmt(residualSd) << '\n';
  outFile << "# singular_sites = " << fit.singularSites.size() << '\n';
  outFile << "# converged = " << (fit.converged ? 1 : 0) << '\n';
  outFile << "# seed = " << seed << '\n';

  outFile << "site_id,coord_1,coord_2,beta_intercept";
  for (const auto& name : predictorCols) outFile << ",beta_" << name;
  outFile << ",fitted,residual\n";
  for (Index i = 0; i < n; ++i) {
    outFile << i << ',' << fmt(data.coords(i, 0)) << ',' << fmt(data.coords(i, 1));
    for (Index c = 0; c < fit.B.cols(); ++c) outFile << ',' << fmt(fit.B(i, c));
    outFile << ',' << fmt(fit.fitted[i]) << ',' << fmt(fit.residuals[i]) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string experiment, config, out;
  int threads = 0;
  long seed = 0;
  bool seedSet = false;
};

int run_simulate(const SimulateArgs& args) {
  if (args.experiment != "complexity" && args.experiment != "accuracy")
    throw ConfigError("--experiment must be complexity or accuracy");
  const KeyValueConfig cfg = KeyValueConfig::parse_file(args.config);
  const int threads = args.threads > 0
                          ? args.threads
                          : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  fs::create_directories(args.out);
  const fs::path outDir(args.out);
  const fs::path cellsTmp = outDir / "cells.csv.tmp";
  const fs::path rawTmp = outDir / "raw.csv.tmp";
  const fs::path timesTmp = outDir / "times.csv.tmp";
  std::ofstream cellsOut(cellsTmp);
  std::ofstream rawOut(rawTmp);
  std::ofstream timesOut(timesTmp);
  if (!cellsOut || !rawOut || !timesOut)
    throw DataError("cannot open output files under " + args.out);
  ExperimentSinks sinks{&rawOut, &cellsOut, &timesOut};
  const auto abort = [] { return g_interrupted.load(); };

  bool completed = false;
  if (args.experiment == "complexity") {
    cfg.require_known_keys({"n", "replicates", "master_seed", "b_x", "r_x", "gwr_b", "gwra_bad",
                            "esf_q", "reesf_alpha", "reesf_sigma"});
    ComplexityConfig config;
    config.n = cfg.get_int("n", 400);
    config.replicates = static_cast<int>(cfg.get_int("replicates", 200));
    config.masterSeed = resolve_seed(args.seedSet, args.seed, &cfg);
    config.predictorBandwidths = cfg.get_double_list("b_x", config.predictorBandwidths);
    config.spatialRatios = cfg.get_double_list("r_x", config.spatialRatios);
    config.gwrBandwidths = cfg.get_double_list("gwr_b", config.gwrBandwidths);
    config.gwraFractions = cfg.get_double_list("gwra_bad", config.gwraFractions);
    config.esfRatios = cfg.get_double_list("esf_q", config.esfRatios);
    config.reesfAlphas = cfg.get_double_list("reesf_alpha", config.reesfAlphas);
    config.reesfSigmas = cfg.get_double_list("reesf_sigma", config.reesfSigmas);
    config.threads = threads;
    config.abortRequested = abort;
    completed = run_complexity_experiment(config, sinks).completed;
  } else {
    cfg.require_known_keys(
        {"n", "replicates", "master_seed", "svc_bandwidths", "b_x", "r_x", "models", "criterion"});
    AccuracyConfig config;
    std::vector<Index> sizes;
    for (long v : cfg.get_int_list("n", {50, 150, 400})) sizes.push_back(v);
    const auto triples = cfg.get_triple_list(
        "svc_bandwidths",
        {{0.2, 0.2, 0.2}, {1.0, 0.2, 1.0}, {0.2, 1.0, 0.2}, {1.0, 1.0, 1.0}});
    config.cells = make_accuracy_grid(sizes, triples, cfg.get_double_list("b_x", {0.2, 0.6, 1.0}),
                                      cfg.get_double_list("r_x", {0.0, 0.4, 0.8, 1.0}));
    config.models.clear();
    for (const auto& name : cfg.get_string_list(
             "models", {"gwr", "gwra", "fbgwr", "fbgwra", "esf", "reesf"}))
      config.models.push_back(model_tag_from_string(name));
    const std::string crit = cfg.get_string("criterion", "aicc");
    if (crit == "aicc")
      config.criterion = CalibrationCriterion::Aicc;
    else if (crit == "cv")
      config.criterion = CalibrationCriterion::LoocvMse;
    else
      throw ConfigError("criterion must be cv or aicc");
    config.replicates = static_cast<int>(cfg.get_int("replicates", 200));
    config.masterSeed = resolve_seed(args.seedSet, args.seed, &cfg);
    config.threads = threads;
    config.abortRequested = abort;
    completed = run_accuracy_experiment(config, sinks).completed;
  }

  cellsOut.close();
  rawOut.close();
  timesOut.close();
  const std::string suffix = completed ? "" : ".partial";
  fs::rename(cellsTmp, outDir / ("cells.csv" + suffix));
  fs::rename(rawTmp, outDir / ("raw.csv" + suffix));
  fs::rename(timesTmp, outDir / ("times.csv" + suffix));
  return completed ? 0 : 130;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string sizes, out;
  int replicates = 5;
  long seed = 0;
  bool seedSet = false;
};

int run_bench(const BenchArgs& args) {
  BenchConfig config;
  for (const auto& s : split_csv_list(args.sizes)) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || v < 10)
      throw ConfigError("bad size '" + s + "' in --sizes");
    config.sizes.push_back(v);
  }
  if (config.sizes.empty()) throw ConfigError("--sizes needs at least one sample size");
  if (args.replicates < 1) throw ConfigError("--replicates must be positive");
  config.replicates = args.replicates;
  config.masterSeed = resolve_seed(args.seedSet, args.seed, nullptr);

  const auto rows = run_timing_benchmark(config);
  std::ofstream out(args.out);
  if (!out) throw DataError("cannot open output file: " + args.out);
  write_bench_csv(out, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, handle_sigint);

  CLI::App app{"Spatially varying coefficient models: fitting, simulation and timing"};
  app.require_subcommand(1);

  FitArgs fitArgs;
  auto* fit = app.add_subcommand("fit", "Fit one SVC model to a CSV dataset");
  fit->add_option("--model", fitArgs.model, "gwr|gwra|fbgwr|fbgwra|esf|reesf")->required();
  fit->add_option("--data", fitArgs.data, "input CSV path")->required();
  fit->add_option("--coords", fitArgs.coords, "two coordinate column names, comma separated")
      ->required();
  fit->add_option("--response", fitArgs.response, "response column name")->required();
  fit->add_option("--predictors", fitArgs.predictors, "predictor column names, comma separated")
      ->required();
  fit->add_option("--criterion", fitArgs.criterion, "cv|aicc (default aicc)");
  fit->add_option("--out", fitArgs.out, "output CSV path")->required();
  auto* fitSeed = fit->add_option("--seed", fitArgs.seed, "seed recorded in the summary");

  SimulateArgs simArgs;
  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo experiment from a config file");
  sim->add_option("--experiment", simArgs.experiment, "complexity|accuracy")->required();
  sim->add_option("--config", simArgs.config, "key = value config path")->required();
  sim->add_option("--out", simArgs.out, "output directory")->required();
  sim->add_option("--threads", simArgs.threads, "worker threads (default: all cores; 1 = serial)");
  auto* simSeed = sim->add_option("--seed", simArgs.seed, "master seed override");

  BenchArgs benchArgs;
  auto* bench = app.add_subcommand("bench", "Time all six models over generated datasets");
  bench->add_option("--sizes", benchArgs.sizes, "sample sizes, comma separated")->required();
  bench->add_option("--replicates", benchArgs.replicates, "replicates per size (default 5)");
  bench->add_option("--out", benchArgs.out, "output CSV path")->required();
  auto* benchSeed = bench->add_option("--seed", benchArgs.seed, "master seed override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*fit) {
      fitArgs.seedSet = fitSeed->count() > 0;
      return run_fit(fitArgs);
    }
    if (*sim) {
      simArgs.seedSet = simSeed->count() > 0;
      return run_simulate(simArgs);
    }
    benchArgs.seedSet = benchSeed->count() > 0;
    return run_bench(benchArgs);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
