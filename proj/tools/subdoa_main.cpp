// SPDX-License-Identifier: Apache-2.0
//
// Command-line harness: simulation, estimation sweeps, network training,
// model-order selection, complexity benchmarks and hyperparameter search.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "subdoa/harness.hpp"
#include "subdoa/linalg.hpp"

namespace {

using namespace subdoa;

std::string default_out_dir() {
  const char* env = std::getenv("SUBDOA_OUT_DIR");
  return env ? env : ".";
}

// Config file first, then flag overrides.
struct ConfigCli {
  std::string config_path;
  std::string out_dir = default_out_dir();
  RunConfig config;
  std::vector<std::string> estimator_names;
  std::string sweep;
  std::string correlation = "";
  double rho = -1.0;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "JSON run configuration");
    app->add_option("-o,--out-dir", out_dir,
                    "output directory (default $SUBDOA_OUT_DIR or .)");
    app->add_option("--trials", config.trials, "Monte Carlo trials");
    app->add_option("--seed", config.seed, "master seed");
    app->add_option("--threads", config.threads, "0 = all cores, 1 = serial");
    app->add_option("--antennas", config.num_antennas, "array size M");
    app->add_option("--sources", config.num_sources, "source count L");
    app->add_option("--max-order", config.max_order, "largest candidate order");
    app->add_option("--snapshots", config.num_snapshots, "snapshots N");
    app->add_option("--snr", config.snr_db, "fixed SNR in dB");
    app->add_option("--sweep", sweep, "snr_db | snapshots | rho");
    app->add_option("--sweep-values", config.sweep_values, "sweep points");
    app->add_option("--estimators", estimator_names,
                    "subset of: ssr hybrid-ssr gls hybrid-gls mvdr "
                    "hybrid-mvdr mcenet hybrid-mcenet genie-ml");
    app->add_option("--scheme", config.scheme_file, "subarray scheme file");
    app->add_flag("--fully-sampled", config.fully_sampled,
                  "single subarray with W = M");
    app->add_option("--correlation", correlation,
                    "uncorrelated | uniform-rho | fixed-rho");
    app->add_option("--rho", rho, "correlation coefficient for fixed-rho");
    app->add_flag("--mixed-snr", config.mixed_snr,
                  "draw the noise power from the configured range");
    app->add_option("--ssr-oversampling", config.ssr_oversampling);
    app->add_option("--gls-oversampling", config.gls_oversampling);
    app->add_option("--ssr-iterations", config.ssr_iterations);
    app->add_option("--mcenet-checkpoint", config.mcenet_checkpoint);
    app->add_option("--covnet-checkpoint", config.covnet_checkpoint);
  }

  RunConfig resolve(CLI::App* app) {
    RunConfig out = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    // Flags given on the command line win over file values.
    auto touched = [&](const std::string& name) {
      return app->count(name) > 0;
    };
    if (touched("--trials")) out.trials = config.trials;
    if (touched("--seed")) out.seed = config.seed;
    if (touched("--threads")) out.threads = config.threads;
    if (touched("--antennas")) out.num_antennas = config.num_antennas;
    if (touched("--sources")) out.num_sources = config.num_sources;
    if (touched("--max-order")) out.max_order = config.max_order;
    if (touched("--snapshots")) out.num_snapshots = config.num_snapshots;
    if (touched("--snr")) out.snr_db = config.snr_db;
    if (touched("--sweep")) out.sweep = sweep_from_name(sweep);
    if (touched("--sweep-values")) out.sweep_values = config.sweep_values;
    if (touched("--scheme")) out.scheme_file = config.scheme_file;
    if (touched("--fully-sampled")) out.fully_sampled = config.fully_sampled;
    if (touched("--mixed-snr")) out.mixed_snr = config.mixed_snr;
    if (touched("--ssr-oversampling"))
      out.ssr_oversampling = config.ssr_oversampling;
    if (touched("--gls-oversampling"))
      out.gls_oversampling = config.gls_oversampling;
    if (touched("--ssr-iterations")) out.ssr_iterations = config.ssr_iterations;
    if (touched("--mcenet-checkpoint"))
      out.mcenet_checkpoint = config.mcenet_checkpoint;
    if (touched("--covnet-checkpoint"))
      out.covnet_checkpoint = config.covnet_checkpoint;
    if (!estimator_names.empty()) {
      out.estimators.clear();
      for (const auto& n : estimator_names)
        out.estimators.push_back(estimator_from_name(n));
    }
    if (!correlation.empty()) {
      if (correlation == "uncorrelated")
        out.correlation.kind = CorrelationSpec::Kind::Uncorrelated;
      else if (correlation == "uniform-rho")
        out.correlation.kind = CorrelationSpec::Kind::UniformRho;
      else if (correlation == "fixed-rho")
        out.correlation.kind = CorrelationSpec::Kind::FixedRho;
      else
        throw CLI::ValidationError("--correlation", "unknown kind");
    }
    if (rho >= 0.0) out.correlation.rho = rho;
    return out;
  }
};

int cmd_simulate(const RunConfig& config, const std::string& out_dir) {
  const SystemSetup system = make_system(config);
  Rng rng = Rng::stream(config.seed, 0);
  const Scenario scenario = draw_trial_scenario(
      config, config.sweep, config.sweep_values.front(), config.num_sources,
      rng);
  const SnapshotSet snaps = synthesize_snapshots(
      scenario, system.scheme, system.geom, config.num_snapshots, rng);

  const std::string bin = out_dir + "/snapshots.bin";
  write_snapshots(bin, snaps);

  nlohmann::json j;
  j["doas"] = std::vector<double>(scenario.doas.begin(), scenario.doas.end());
  j["noise_var"] = scenario.noise_var;
  std::vector<double> diag;
  for (int i = 0; i < scenario.num_sources(); ++i)
    diag.push_back(scenario.source_cov(i, i).real());
  j["source_powers"] = diag;
  const std::string meta = out_dir + "/scenario.json";
  std::ofstream(meta) << j.dump(2) << '\n';

  std::printf("wrote %s (K=%d W=%d N=%d) and %s\n", bin.c_str(),
              snaps.num_subarrays(), snaps.num_chains, snaps.num_snapshots,
              meta.c_str());
  return 0;
}

int cmd_estimate(const RunConfig& config, const std::string& out_dir,
                 const std::string& replay) {
  if (!replay.empty()) {
    const SystemSetup system = make_system(config);
    const SampleCovSet covs = sample_covariances(read_snapshots(replay));
    for (EstimatorKind kind : config.estimators) {
      if (kind == EstimatorKind::GenieMl) continue;  // needs ground truth
      RunConfig single = config;
      single.estimators = {kind};
      HybridOptions hybrid;
      hybrid.num_sources = config.num_sources;
      hybrid.ssr_oversampling = config.ssr_oversampling;
      hybrid.gls_oversampling = config.gls_oversampling;
      hybrid.ssr_iterations = config.ssr_iterations;
      Estimate est;
      switch (kind) {
        case EstimatorKind::Ssr:
          est = ssr_estimate(
              covs, config.num_sources,
              Dictionary::build(system.scheme, system.geom,
                                GridSpec::make(config.num_antennas,
                                               config.ssr_oversampling)),
              config.ssr_iterations);
          break;
        case EstimatorKind::Gls:
          est = gls_grid_search(covs, config.num_sources,
                                GridSpec::make(config.num_antennas,
                                               config.gls_oversampling),
                                system.scheme, system.geom);
          break;
        case EstimatorKind::Mvdr:
          est = mvdr_estimate(
              covs, config.num_sources,
              Dictionary::build(system.scheme, system.geom,
                                GridSpec::make(config.num_antennas,
                                               config.mvdr_oversampling)));
          break;
        case EstimatorKind::HybridSsr:
          hybrid.init = HybridInit::Ssr;
          est = hybrid_estimate(covs, system.scheme, system.geom, hybrid);
          break;
        case EstimatorKind::HybridGls:
          hybrid.init = HybridInit::Gls;
          est = hybrid_estimate(covs, system.scheme, system.geom, hybrid);
          break;
        case EstimatorKind::HybridMvdr:
          hybrid.init = HybridInit::Mvdr;
          est = hybrid_estimate(covs, system.scheme, system.geom, hybrid);
          break;
        default:
          std::fprintf(stderr, "%s not supported in replay mode\n",
                       estimator_name(kind).c_str());
          continue;
      }
      std::printf("%s:", estimator_name(kind).c_str());
      for (Eigen::Index i = 0; i < est.doas.size(); ++i)
        std::printf(" %.6f", est.doas(i));
      std::printf("  (noise %.6g)\n", est.noise_var);
    }
    return 0;
  }

  const ExperimentResult result = run_experiment(config, out_dir);
  for (const auto& agg : result.aggregates)
    std::printf("%s=%g  %-13s rmspe %.4f  top%.0f%% %.4f  median %.4f  "
                "(%d trials, %d failures)\n",
                sweep_name(config.sweep).c_str(), agg.sweep_value,
                agg.method.c_str(), agg.rmspe, 100.0 * config.top_quantile,
                agg.rmspe_top, agg.median_rmspe, agg.trials, agg.failures);
  std::printf("CSV written to %s\n", out_dir.c_str());
  return 0;
}

int cmd_train(const RunConfig& run, const std::string& network,
              const std::string& checkpoint_out, const std::string& warm_start,
              TrainConfig train, bool paper_scale) {
  const SystemSetup system = make_system(run);
  if (paper_scale) {
    const TrainConfig desk = train;
    train = network == "covnet" ? TrainConfig::paper_scale_covnet()
                                : TrainConfig::paper_scale_mcenet();
    train.seed = desk.seed;
    train.num_sources = desk.num_sources;
    train.num_snapshots = desk.num_snapshots;
    train.ranges = desk.ranges;
    train.correlation = desk.correlation;
  }

  TrainResult result;
  CheckpointMeta meta;
  meta.seed = train.seed;
  if (network == "mcenet") {
    meta.loss = train.loss;
    if (!warm_start.empty()) {
      CheckpointMeta prev;
      const MlpModel model = load_checkpoint(warm_start, &prev);
      result = train_mcenet(train, system.scheme, system.geom, &model,
                            prev.samples_seen);
      result.samples_seen += prev.samples_seen;
    } else {
      result = train_mcenet(train, system.scheme, system.geom);
    }
  } else if (network == "covnet") {
    meta.loss = LossKind::CrossEntropy;
    result = train_covnet(train, system.scheme, system.geom, run.max_order);
  } else {
    std::fprintf(stderr, "unknown network: %s\n", network.c_str());
    return 1;
  }
  meta.samples_seen = result.samples_seen;
  save_checkpoint(checkpoint_out, result.model, meta);
  std::printf("trained %s on %llu samples, final batch loss %.6f -> %s\n",
              network.c_str(),
              static_cast<unsigned long long>(result.samples_seen),
              result.batch_loss.empty() ? 0.0 : result.batch_loss.back(),
              checkpoint_out.c_str());
  return 0;
}

int cmd_select_order(const RunConfig& config,
                     const std::vector<std::string>& methods,
                     const std::string& out_dir) {
  const OrderSelectionExperiment result =
      run_order_selection(config, methods, nullptr, out_dir);
  for (const auto& agg : result.aggregates)
    std::printf("%s=%g  %-8s accuracy %.3f  (%d trials)\n",
                sweep_name(config.sweep).c_str(), agg.sweep_value,
                agg.method.c_str(), agg.accuracy, agg.trials);
  std::printf("CSV written to %s\n", out_dir.c_str());
  return 0;
}

int cmd_bench(const RunConfig& config) {
  const SystemSetup system = make_system(config);
  const Dictionary ssr_dict = Dictionary::build(
      system.scheme, system.geom,
      GridSpec::make(config.num_antennas, config.ssr_oversampling));
  const GridSpec gls_grid =
      GridSpec::make(config.num_antennas, config.gls_oversampling);

  MlpModel mcenet;
  if (!config.mcenet_checkpoint.empty()) {
    mcenet = load_checkpoint(config.mcenet_checkpoint);
  } else {
    const int input = system.scheme.num_subarrays() *
                      system.scheme.num_chains * system.scheme.num_chains;
    Rng init(config.seed);
    mcenet = mlp_init({input, 256, 256, 256, config.num_sources},
                      Head::Identity, init);
  }

  double ms_mcenet = 0.0, ms_ssr = 0.0, ms_gls = 0.0;
  for (int t = 0; t < config.trials; ++t) {
    Rng rng = Rng::stream(config.seed, static_cast<std::uint64_t>(t));
    const Scenario sc = draw_trial_scenario(
        config, config.sweep, config.sweep_values.front(), config.num_sources,
        rng);
    const SampleCovSet covs = sample_covariances(synthesize_snapshots(
        sc, system.scheme, system.geom, config.num_snapshots, rng));

    auto time_ms = [](auto&& fn) {
      const auto start = std::chrono::steady_clock::now();
      fn();
      return std::chrono::duration<double, std::milli>(
                 std::chrono::steady_clock::now() - start)
          .count();
    };
    ms_mcenet += time_ms([&] { mcenet_predict(mcenet, covs); });
    ms_ssr += time_ms(
        [&] { ssr_alternating(covs, ssr_dict, config.ssr_iterations); });
    ms_gls += time_ms([&] {
      gls_grid_search(covs, config.num_sources, gls_grid, system.scheme,
                      system.geom);
    });
  }
  const double n = config.trials;
  std::printf("mean inference time over %d trials:\n", config.trials);
  std::printf("  mcenet_predict   %10.3f ms\n", ms_mcenet / n);
  std::printf("  ssr_alternating  %10.3f ms\n", ms_ssr / n);
  std::printf("  gls_grid_search  %10.3f ms\n", ms_gls / n);
  const bool ordered = ms_mcenet < ms_ssr && ms_ssr < ms_gls;
  std::printf("ordering mcenet < ssr < gls: %s\n", ordered ? "yes" : "no");
  return ordered ? 0 : 1;
}

int cmd_random_search(const RunConfig& run, TrainConfig base, int budget,
                      int validation_size, const std::string& out_dir) {
  const SystemSetup system = make_system(run);
  Rng rng(base.seed);
  const std::vector<SearchRow> rows = random_search(
      SearchSpace{}, budget, validation_size, base, system.scheme, system.geom,
      rng);
  std::printf("%-14s %-12s %-13s %s\n", "hidden_layers", "hidden_units",
              "learning_rate", "validation_loss");
  for (const auto& r : rows)
    std::printf("%-14d %-12d %-13g %.6f\n", r.hidden_layers, r.hidden_units,
                r.learning_rate, r.validation_loss);
  write_search_csv(out_dir + "/search.csv", rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DoA estimation and model-order selection for antenna arrays "
               "with subarray sampling"};
  app.require_subcommand(1);

  ConfigCli shared;

  auto* sim = app.add_subcommand("simulate",
                                 "draw one scenario and dump its snapshots");
  shared.attach(sim);

  auto* est = app.add_subcommand("estimate", "run a Monte Carlo DoA sweep");
  std::string replay;
  shared.attach(est);
  est->add_option("--replay", replay, "snapshot file to estimate from");

  auto* train = app.add_subcommand("train", "train MCENet or CovNet");
  std::string network = "mcenet", checkpoint_out = "model.ckpt", warm;
  bool paper_scale = false;
  TrainConfig train_config;
  shared.attach(train);
  train->add_option("--network", network, "mcenet | covnet");
  train->add_option("--checkpoint-out", checkpoint_out, "output checkpoint");
  train->add_option("--warm-start", warm, "checkpoint to continue from");
  train->add_flag("--paper-scale", paper_scale, "full-size network/training");
  train->add_option("--hidden-layers", train_config.hidden_layers);
  train->add_option("--hidden-units", train_config.hidden_units);
  train->add_option("--batch-size", train_config.batch_size);
  train->add_option("--learning-rate", train_config.learning_rate);
  train->add_option("--samples", train_config.total_samples);
  bool permutation_loss = false;
  train->add_flag("--permutation-loss", permutation_loss,
                  "minimize over output permutations instead of fixed order");

  auto* sel = app.add_subcommand("select-order",
                                 "model-order selection trials");
  std::vector<std::string> methods = {"mdl"};
  shared.attach(sel);
  sel->add_option("--method", methods, "mdl and/or covnet");

  auto* bench = app.add_subcommand(
      "bench", "mean inference times of mcenet/ssr/gls");
  shared.attach(bench);

  auto* search = app.add_subcommand("random-search",
                                    "hyperparameter random search for MCENet");
  int budget = 8, validation_size = 256;
  shared.attach(search);
  search->add_option("--budget", budget, "number of sampled tuples");
  search->add_option("--validation-size", validation_size);
  search->add_option("--samples", train_config.total_samples,
                     "training samples per tuple");

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* active = app.get_subcommands().front();
    RunConfig config = shared.resolve(active);
    train_config.seed = config.seed;
    train_config.num_sources = config.num_sources;
    train_config.num_snapshots = config.num_snapshots;
    train_config.ranges = config.ranges;
    train_config.correlation = config.correlation;
    if (permutation_loss) train_config.loss = LossKind::PermutationMce;

    if (active == sim) return cmd_simulate(config, shared.out_dir);
    if (active == est) return cmd_estimate(config, shared.out_dir, replay);
    if (active == train)
      return cmd_train(config, network, checkpoint_out, warm, train_config,
                       paper_scale);
    if (active == sel) return cmd_select_order(config, methods, shared.out_dir);
    if (active == bench) return cmd_bench(config);
    if (active == search)
      return cmd_random_search(config, train_config, budget, validation_size,
                               shared.out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
