// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "subdoa/array.hpp"
#include "subdoa/mlp.hpp"
#include "subdoa/simulate.hpp"

namespace subdoa {

// Streaming-training configuration. Every batch is synthesized fresh from the
// signal model, so there is no finite training set to overfit. Defaults are
// the desk-scale profile; paper_scale() selects the full-size setup.
struct TrainConfig {
  int hidden_layers = 3;
  int hidden_units = 256;
  int batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t total_samples = 200000;
  AdamConfig adam;  // learning_rate below overrides adam.learning_rate
  std::uint64_t seed = 1;
  LossKind loss = LossKind::SumMce;
  int num_sources = 3;    // L (MCENet); CovNet draws 0..max_order instead
  int num_snapshots = 10;
  ScenarioRanges ranges;
  CorrelationSpec correlation;
  int log_every = 100;  // batches between progress lines (0 = silent)

  static TrainConfig paper_scale_mcenet();  // 2048 x 4, batch 256, lr 1e-4
  static TrainConfig paper_scale_covnet();  // 1024 x 3, batch 64,  lr 1e-2
};

struct TrainResult {
  MlpModel model;
  std::vector<double> batch_loss;  // mean per-sample loss per batch
  std::uint64_t samples_seen = 0;
};

// DoA regression network: covariance features in, L angles out, trained on
// the summed cyclic error against ascending-sorted labels (optionally the
// permutation-minimized form). warm_start continues from a checkpoint; its
// samples_seen offsets the data stream so training is resumable and
// deterministic.
TrainResult train_mcenet(const TrainConfig& config,
                         const SubarrayScheme& scheme,
                         const ArrayGeometry& geom,
                         const MlpModel* warm_start = nullptr,
                         std::uint64_t warm_samples_seen = 0);

// Model-order classification network with a softmax head over 0..max_order;
// every batch holds exactly equal per-order counts (batch_size must be
// divisible by max_order + 1).
TrainResult train_covnet(const TrainConfig& config,
                         const SubarrayScheme& scheme,
                         const ArrayGeometry& geom, int max_order);

// forward(featurize(covs)) with outputs wrapped into [0, 2*pi) and sorted.
Eigen::VectorXd mcenet_predict(const MlpModel& model, const SampleCovSet& covs);

// argmax of the softmax posteriors; ties resolve to the smaller order.
std::pair<int, Eigen::VectorXd> covnet_predict(const MlpModel& model,
                                               const SampleCovSet& covs);

// Held-out evaluation helpers (fresh data from the config's generator).
double evaluate_mcenet_mce(const MlpModel& model, const TrainConfig& config,
                           const SubarrayScheme& scheme,
                           const ArrayGeometry& geom, int num_samples,
                           std::uint64_t seed);
double evaluate_covnet_accuracy(const MlpModel& model,
                                const TrainConfig& config,
                                const SubarrayScheme& scheme,
                                const ArrayGeometry& geom, int max_order,
                                int num_samples, std::uint64_t seed);

}  // namespace subdoa
