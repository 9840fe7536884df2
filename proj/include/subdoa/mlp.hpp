// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "subdoa/rng.hpp"

namespace subdoa {

enum class Head : std::uint8_t { Identity = 0, Softmax = 1 };

// Dense feedforward network, ReLU on hidden layers, 64-bit floats throughout.
struct MlpModel {
  std::vector<int> dims;                   // input, hidden..., output
  std::vector<Eigen::MatrixXd> weights;    // layer l: dims[l+1] x dims[l]
  std::vector<Eigen::VectorXd> biases;
  Head head = Head::Identity;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
  std::size_t parameter_count() const;
};

// Glorot-uniform weights, zero biases.
MlpModel mlp_init(const std::vector<int>& dims, Head head, Rng& rng);

// Cached intermediates of one batched forward pass.
struct ForwardTrace {
  Eigen::MatrixXd input;                    // in x B
  std::vector<Eigen::MatrixXd> activations; // post-ReLU per hidden layer
};

// Forward pass; columns are samples. The softmax head returns strictly
// positive columns summing to one.
Eigen::MatrixXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& x,
                              ForwardTrace* trace = nullptr);
Eigen::VectorXd forward(const MlpModel& model, const Eigen::VectorXd& x);

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Backpropagation through the affine/ReLU chain. logit_grad holds
// dLoss/d(pre-head output) per sample column; gradients are summed over the
// batch. The ReLU subgradient at 0 is 0.
MlpGradients backward(const MlpModel& model, const ForwardTrace& trace,
                      const Eigen::MatrixXd& logit_grad);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Eigen::MatrixXd> m_weights, v_weights;
  std::vector<Eigen::VectorXd> m_biases, v_biases;
  std::int64_t step = 0;

  static AdamState zeros_like(const MlpModel& model);
};

// One bias-corrected adaptive-moment update (minimization).
void adam_step(MlpModel& model, const MlpGradients& grads,
               const AdamConfig& config, AdamState& state);

// --- losses ---------------------------------------------------------------

// Sum of the smooth cyclic errors 2(1 - cos(theta - theta_hat)) in fixed
// order; grad (optional) receives dLoss/dtheta_hat = -2 sin(theta-theta_hat).
double mce_loss(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_hat,
                Eigen::VectorXd* grad = nullptr);

// Minimum over all permutations of theta_hat of the summed element-wise
// loss; exhaustive, requires L <= 6. Ties resolve to the lexicographically
// smallest permutation. Returns {loss, permutation} with
// loss = sum_l elementwise(theta[l], theta_hat[perm[l]]).
std::pair<double, std::vector<int>> permutation_min_loss(
    const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_hat,
    const std::function<double(double, double)>& elementwise);

// -ln probs[label]; logit_grad (optional) receives the combined
// softmax-plus-cross-entropy gradient probs - onehot(label).
double cross_entropy_loss(const Eigen::VectorXd& probs, int label,
                          Eigen::VectorXd* logit_grad = nullptr);

// --- checkpoints ----------------------------------------------------------

enum class LossKind : std::uint8_t { SumMce = 0, PermutationMce = 1,
                                     CrossEntropy = 2 };

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::uint64_t samples_seen = 0;
  LossKind loss = LossKind::SumMce;
};

// Binary format: magic, version, head kind, layer dims, row-major 64-bit
// weight/bias arrays, metadata. Round trips are bit-exact.
void save_checkpoint(const std::string& path, const MlpModel& model,
                     const CheckpointMeta& meta);
MlpModel load_checkpoint(const std::string& path,
                         CheckpointMeta* meta = nullptr);

}  // namespace subdoa
