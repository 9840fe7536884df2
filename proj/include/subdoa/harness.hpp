// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subdoa/estimators.hpp"
#include "subdoa/metrics.hpp"
#include "subdoa/mlp.hpp"
#include "subdoa/model_order.hpp"
#include "subdoa/simulate.hpp"
#include "subdoa/train.hpp"

namespace subdoa {

// Which scenario parameter a sweep varies.
enum class SweepKind { SnrDb, Snapshots, Rho };

std::string sweep_name(SweepKind kind);
SweepKind sweep_from_name(const std::string& name);

// Full description of one Monte Carlo run. Loadable from a JSON file with
// identically named keys; CLI flags override individual fields.
struct RunConfig {
  // system
  int num_antennas = 9;
  double radius_over_wavelength = 1.0;
  std::string scheme_file;      // empty = embedded default scheme
  bool fully_sampled = false;   // K = 1, W = M special case

  // scenario
  int num_sources = 3;
  int max_order = 3;  // order-selection runs
  int num_snapshots = 10;
  double snr_db = 20.0;  // fixed-SNR value when the sweep varies N or rho
  CorrelationSpec correlation;
  ScenarioRanges ranges;
  bool equal_power = true;  // test convention: equally powered sources
  bool mixed_snr = false;   // order selection: noise drawn from the ranges

  // sweep
  SweepKind sweep = SweepKind::SnrDb;
  std::vector<double> sweep_values = {20.0};

  // estimators
  std::vector<EstimatorKind> estimators = {EstimatorKind::Ssr,
                                           EstimatorKind::HybridSsr,
                                           EstimatorKind::GenieMl};
  std::string mcenet_checkpoint;
  std::string covnet_checkpoint;
  int ssr_oversampling = 32;
  int gls_oversampling = 8;
  int mvdr_oversampling = 32;
  int ssr_iterations = 10000;
  AscentOptions ascent;

  // execution
  int trials = 200;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0 = hardware concurrency; 1 = serial
  double top_quantile = 0.9;
};

RunConfig load_run_config(const std::string& json_path);

// System assembled from a RunConfig (geometry + validated scheme).
struct SystemSetup {
  ArrayGeometry geom;
  SubarrayScheme scheme;
};
SystemSetup make_system(const RunConfig& config);

// Scenario generator shared by the DoA and order-selection drivers; the trial
// stream must already be positioned (one stream per trial).
Scenario draw_trial_scenario(const RunConfig& config, SweepKind sweep,
                             double sweep_value, int num_sources, Rng& rng);

struct TrialRecord {
  int sweep_index = 0;
  double sweep_value = 0.0;
  int trial = 0;
  std::string method;
  Eigen::VectorXd true_doas;
  Eigen::VectorXd est_doas;
  double rmspe = 0.0;
  double noise_var_est = 0.0;
  double objective = 0.0;
  double runtime_ms = 0.0;
  bool failed = false;
};

struct AggregateRecord {
  int sweep_index = 0;
  double sweep_value = 0.0;
  std::string method;
  double rmspe = 0.0;        // pooled over per-trial values
  double rmspe_top = 0.0;    // top-quantile
  double median_rmspe = 0.0;
  int trials = 0;
  int failures = 0;
};

struct ExperimentResult {
  std::vector<TrialRecord> trials;
  std::vector<AggregateRecord> aggregates;
};

// Runs every estimator on every trial of every sweep point; per-trial RNG
// streams make the result independent of the thread count. Estimator errors
// are recorded per trial and never abort the sweep. CSV files trials.csv,
// aggregate.csv and ecdf.csv are written to out_dir when non-empty.
ExperimentResult run_experiment(const RunConfig& config,
                                const std::string& out_dir);

struct OrderTrialRecord {
  int sweep_index = 0;
  double sweep_value = 0.0;
  int trial = 0;
  std::string method;
  int true_order = 0;
  int selected = 0;
  Eigen::VectorXd scores;
  double runtime_ms = 0.0;
};

struct OrderAggregateRecord {
  int sweep_index = 0;
  double sweep_value = 0.0;
  std::string method;
  double accuracy = 0.0;
  int trials = 0;
};

struct OrderSelectionExperiment {
  std::vector<OrderTrialRecord> trials;
  std::vector<OrderAggregateRecord> aggregates;
};

// Stratified order-selection trials (equal counts of each order 0..L_max)
// for the requested methods ("mdl", "covnet").
OrderSelectionExperiment run_order_selection(const RunConfig& config,
                                             const std::vector<std::string>& methods,
                                             const MlpModel* covnet,
                                             const std::string& out_dir);

// --- hyperparameter random search ------------------------------------------

struct SearchSpace {
  std::vector<int> hidden_layers = {1, 2, 3, 4};
  std::vector<int> hidden_units = {128,  256,  384,  512,  640,  768,
                                   896,  1024, 1152, 1280, 1408, 1536,
                                   1664, 1792, 1920, 2048};
  std::vector<double> learning_rates = {1e-2, 1e-3, 1e-4};
};

struct SearchRow {
  int hidden_layers = 0;
  int hidden_units = 0;
  double learning_rate = 0.0;
  double validation_loss = 0.0;
};

// Trains one MCENet per sampled tuple on a shared training stream seed and
// scores it on a shared validation set; rows come back sorted by loss.
std::vector<SearchRow> random_search(const SearchSpace& space, int budget,
                                     int validation_size,
                                     const TrainConfig& base,
                                     const SubarrayScheme& scheme,
                                     const ArrayGeometry& geom, Rng& rng);

// --- CSV -------------------------------------------------------------------

// All emitted CSVs start with this schema comment line.
inline constexpr const char* kCsvSchema = "# subdoa-csv v1";

void write_trials_csv(const std::string& path,
                      const std::vector<TrialRecord>& trials);
void write_aggregate_csv(const std::string& path,
                         const std::vector<AggregateRecord>& aggregates);
void write_ecdf_csv(const std::string& path,
                    const std::vector<TrialRecord>& trials);
void write_order_csv(const std::string& path,
                     const std::vector<OrderTrialRecord>& trials);
void write_order_aggregate_csv(
    const std::string& path,
    const std::vector<OrderAggregateRecord>& aggregates);
void write_search_csv(const std::string& path,
                      const std::vector<SearchRow>& rows);

}  // namespace subdoa
