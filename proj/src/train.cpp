// SPDX-License-Identifier: Apache-2.0
#include "subdoa/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "subdoa/linalg.hpp"

namespace subdoa {

TrainConfig TrainConfig::paper_scale_mcenet() {
  TrainConfig c;
  c.hidden_layers = 4;
  c.hidden_units = 2048;
  c.batch_size = 256;
  c.learning_rate = 1e-4;
  c.total_samples = 128000000ull;
  return c;
}

TrainConfig TrainConfig::paper_scale_covnet() {
  TrainConfig c;
  c.hidden_layers = 3;
  c.hidden_units = 1024;
  c.batch_size = 64;
  c.learning_rate = 1e-2;
  c.total_samples = 64000000ull;  // 1e6 batches of 64
  return c;
}

namespace {

std::vector<int> layer_dims(int input, int hidden_layers, int hidden_units,
                            int output) {
  std::vector<int> dims;
  dims.push_back(input);
  for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden_units);
  dims.push_back(output);
  return dims;
}

// One data sample: features of the sample covariances of a freshly drawn
// scenario with num_sources sources. Stream id = global sample index.
Eigen::VectorXd sample_features(int num_sources, const TrainConfig& config,
                                const SubarrayScheme& scheme,
                                const ArrayGeometry& geom, std::uint64_t index,
                                Eigen::VectorXd* labels) {
  Rng rng = Rng::stream(config.seed, index);
  const Scenario sc =
      draw_scenario(num_sources, config.ranges, config.correlation, rng);
  const SnapshotSet snaps =
      synthesize_snapshots(sc, scheme, geom, config.num_snapshots, rng);
  if (labels) *labels = sc.doas;
  return featurize(sample_covariances(snaps));
}

void log_progress(const TrainConfig& config, std::uint64_t batch,
                  std::uint64_t total_batches, double running_loss) {
  if (config.log_every <= 0 || batch % config.log_every != 0) return;
  std::printf("batch %llu/%llu  loss %.6f\n",
              static_cast<unsigned long long>(batch),
              static_cast<unsigned long long>(total_batches), running_loss);
  std::fflush(stdout);
}

}  // namespace

TrainResult train_mcenet(const TrainConfig& config,
                         const SubarrayScheme& scheme,
                         const ArrayGeometry& geom, const MlpModel* warm_start,
                         std::uint64_t warm_samples_seen) {
  if (config.batch_size < 1 || config.learning_rate <= 0.0)
    throw std::invalid_argument("train_mcenet: invalid config");
  const int l = config.num_sources;
  const int input =
      scheme.num_subarrays() * scheme.num_chains * scheme.num_chains;

  TrainResult res;
  if (warm_start) {
    if (warm_start->head != Head::Identity ||
        warm_start->input_dim() != input || warm_start->output_dim() != l)
      throw std::invalid_argument("train_mcenet: warm start shape mismatch");
    res.model = *warm_start;
  } else {
    Rng init_rng = Rng::stream(config.seed, 0xffffffffffffffffull);
    res.model = mlp_init(
        layer_dims(input, config.hidden_layers, config.hidden_units, l),
        Head::Identity, init_rng);
  }

  AdamConfig adam = config.adam;
  adam.learning_rate = config.learning_rate;
  AdamState state = AdamState::zeros_like(res.model);

  const std::uint64_t batches = config.total_samples / config.batch_size;
  Eigen::MatrixXd x(input, config.batch_size);
  Eigen::MatrixXd labels(l, config.batch_size);
  ForwardTrace trace;
  for (std::uint64_t b = 0; b < batches; ++b) {
    for (int s = 0; s < config.batch_size; ++s) {
      Eigen::VectorXd doas;
      x.col(s) = sample_features(l, config, scheme, geom,
                                 warm_samples_seen + res.samples_seen + s,
                                 &doas);
      labels.col(s) = doas;  // already ascending
    }
    const Eigen::MatrixXd out = forward_batch(res.model, x, &trace);

    Eigen::MatrixXd grad(l, config.batch_size);
    double batch_loss = 0.0;
    Eigen::VectorXd g(l);
    for (int s = 0; s < config.batch_size; ++s) {
      if (config.loss == LossKind::PermutationMce) {
        const auto [loss, perm] = permutation_min_loss(
            labels.col(s), out.col(s), [](double t, double e) {
              return 2.0 * (1.0 - std::cos(t - e));
            });
        batch_loss += loss;
        g.setZero();
        for (int i = 0; i < l; ++i)
          g(perm[i]) += -2.0 * std::sin(labels(i, s) - out(perm[i], s));
        grad.col(s) = g;
      } else {
        batch_loss += mce_loss(labels.col(s), out.col(s), &g);
        grad.col(s) = g;
      }
    }
    // Mean loss over the batch.
    grad /= static_cast<double>(config.batch_size);
    batch_loss /= static_cast<double>(config.batch_size);

    const MlpGradients grads = backward(res.model, trace, grad);
    adam_step(res.model, grads, adam, state);

    res.batch_loss.push_back(batch_loss);
    res.samples_seen += config.batch_size;
    log_progress(config, b + 1, batches, batch_loss);
  }
  return res;
}

TrainResult train_covnet(const TrainConfig& config,
                         const SubarrayScheme& scheme,
                         const ArrayGeometry& geom, int max_order) {
  if (max_order < 1)
    throw std::invalid_argument("train_covnet: max_order must be >= 1");
  const int classes = max_order + 1;
  if (config.batch_size % classes != 0)
    throw std::invalid_argument(
        "train_covnet: batch size not divisible by class count");
  const int input =
      scheme.num_subarrays() * scheme.num_chains * scheme.num_chains;

  TrainResult res;
  Rng init_rng = Rng::stream(config.seed, 0xffffffffffffffffull);
  res.model = mlp_init(
      layer_dims(input, config.hidden_layers, config.hidden_units, classes),
      Head::Softmax, init_rng);

  AdamConfig adam = config.adam;
  adam.learning_rate = config.learning_rate;
  AdamState state = AdamState::zeros_like(res.model);

  const std::uint64_t batches = config.total_samples / config.batch_size;
  Eigen::MatrixXd x(input, config.batch_size);
  std::vector<int> order(config.batch_size);
  ForwardTrace trace;
  for (std::uint64_t b = 0; b < batches; ++b) {
    // Stratified batch: exactly batch_size / classes samples per order.
    for (int s = 0; s < config.batch_size; ++s) {
      order[s] = s % classes;
      x.col(s) = sample_features(order[s], config, scheme, geom,
                                 res.samples_seen + s, nullptr);
    }
    const Eigen::MatrixXd probs = forward_batch(res.model, x, &trace);

    Eigen::MatrixXd grad(classes, config.batch_size);
    double batch_loss = 0.0;
    Eigen::VectorXd g(classes);
    for (int s = 0; s < config.batch_size; ++s) {
      batch_loss += cross_entropy_loss(probs.col(s), order[s], &g);
      grad.col(s) = g;
    }
    grad /= static_cast<double>(config.batch_size);
    batch_loss /= static_cast<double>(config.batch_size);

    const MlpGradients grads = backward(res.model, trace, grad);
    adam_step(res.model, grads, adam, state);

    res.batch_loss.push_back(batch_loss);
    res.samples_seen += config.batch_size;
    log_progress(config, b + 1, batches, batch_loss);
  }
  return res;
}

Eigen::VectorXd mcenet_predict(const MlpModel& model,
                               const SampleCovSet& covs) {
  if (model.head != Head::Identity)
    throw std::invalid_argument("mcenet_predict: model head must be identity");
  Eigen::VectorXd out = forward(model, featurize(covs));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = wrap_2pi(out(i));
  std::sort(out.begin(), out.end());
  return out;
}

std::pair<int, Eigen::VectorXd> covnet_predict(const MlpModel& model,
                                               const SampleCovSet& covs) {
  if (model.head != Head::Softmax)
    throw std::invalid_argument("covnet_predict: model head must be softmax");
  Eigen::VectorXd posterior = forward(model, featurize(covs));
  int best = 0;
  for (Eigen::Index i = 1; i < posterior.size(); ++i)
    if (posterior(i) > posterior(best)) best = static_cast<int>(i);
  return {best, std::move(posterior)};
}

double evaluate_mcenet_mce(const MlpModel& model, const TrainConfig& config,
                           const SubarrayScheme& scheme,
                           const ArrayGeometry& geom, int num_samples,
                           std::uint64_t seed) {
  TrainConfig eval = config;
  eval.seed = seed;
  double total = 0.0;
  for (int s = 0; s < num_samples; ++s) {
    Eigen::VectorXd doas;
    const Eigen::VectorXd x = sample_features(config.num_sources, eval, scheme,
                                              geom, static_cast<std::uint64_t>(s),
                                              &doas);
    total += mce_loss(doas, forward(model, x));
  }
  return total / num_samples;
}

double evaluate_covnet_accuracy(const MlpModel& model,
                                const TrainConfig& config,
                                const SubarrayScheme& scheme,
                                const ArrayGeometry& geom, int max_order,
                                int num_samples, std::uint64_t seed) {
  TrainConfig eval = config;
  eval.seed = seed;
  int correct = 0;
  for (int s = 0; s < num_samples; ++s) {
    const int truth = s % (max_order + 1);
    const Eigen::VectorXd x = sample_features(
        truth, eval, scheme, geom, static_cast<std::uint64_t>(s), nullptr);
    Eigen::VectorXd posterior = forward(model, x);
    int best = 0;
    for (Eigen::Index i = 1; i < posterior.size(); ++i)
      if (posterior(i) > posterior(best)) best = static_cast<int>(i);
    if (best == truth) ++correct;
  }
  return static_cast<double>(correct) / num_samples;
}

}  // namespace subdoa
