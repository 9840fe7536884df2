// SPDX-License-Identifier: Apache-2.0
#include "subdoa/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace subdoa {

std::size_t MlpModel::parameter_count() const {
  std::size_t count = 0;
  for (int l = 0; l < num_layers(); ++l)
    count += static_cast<std::size_t>(weights[l].size()) + biases[l].size();
  return count;
}

MlpModel mlp_init(const std::vector<int>& dims, Head head, Rng& rng) {
  if (dims.size() < 2)
    throw std::invalid_argument("mlp_init: need at least input and output dims");
  for (int d : dims)
    if (d <= 0) throw std::invalid_argument("mlp_init: non-positive dimension");
  MlpModel model;
  model.dims = dims;
  model.head = head;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        w(i, j) = rng.uniform(-limit, limit);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return model;
}

namespace {

Eigen::MatrixXd apply_softmax(Eigen::MatrixXd logits) {
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    logits.col(c).array() -= logits.col(c).maxCoeff();
    logits.col(c) = logits.col(c).array().exp();
    logits.col(c) /= logits.col(c).sum();
  }
  return logits;
}

}  // namespace

Eigen::MatrixXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& x,
                              ForwardTrace* trace) {
  if (x.rows() != model.input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  if (trace) {
    trace->input = x;
    trace->activations.clear();
  }
  Eigen::MatrixXd h = x;
  const int layers = model.num_layers();
  for (int l = 0; l < layers; ++l) {
    h = (model.weights[l] * h).colwise() + model.biases[l];
    if (l + 1 < layers) {
      h = h.cwiseMax(0.0);
      if (trace) trace->activations.push_back(h);
    }
  }
  return model.head == Head::Softmax ? apply_softmax(std::move(h)) : h;
}

Eigen::VectorXd forward(const MlpModel& model, const Eigen::VectorXd& x) {
  return forward_batch(model, x);
}

MlpGradients backward(const MlpModel& model, const ForwardTrace& trace,
                      const Eigen::MatrixXd& logit_grad) {
  const int layers = model.num_layers();
  if (static_cast<int>(trace.activations.size()) != layers - 1)
    throw std::invalid_argument("backward: stale or missing forward trace");
  if (logit_grad.rows() != model.output_dim() ||
      logit_grad.cols() != trace.input.cols())
    throw std::invalid_argument("backward: gradient shape mismatch");

  MlpGradients g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  Eigen::MatrixXd delta = logit_grad;
  for (int l = layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd& below =
        l == 0 ? trace.input : trace.activations[l - 1];
    g.weights[l] = delta * below.transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      delta = model.weights[l].transpose() * delta;
      delta = (trace.activations[l - 1].array() > 0.0)
                  .select(delta, Eigen::MatrixXd::Zero(delta.rows(),
                                                       delta.cols()));
    }
  }
  return g;
}

AdamState AdamState::zeros_like(const MlpModel& model) {
  AdamState s;
  for (int l = 0; l < model.num_layers(); ++l) {
    s.m_weights.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(),
                                                model.weights[l].cols()));
    s.v_weights.push_back(s.m_weights.back());
    s.m_biases.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
    s.v_biases.push_back(s.m_biases.back());
  }
  return s;
}

namespace {

template <typename Param, typename Grad>
void adam_update(Param& p, const Grad& g, Param& m, Param& v,
                 const AdamConfig& c, double bias1, double bias2) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v.array() = c.beta2 * v.array() + (1.0 - c.beta2) * g.array().square();
  p.array() -= c.learning_rate * (m.array() / bias1) /
               ((v.array() / bias2).sqrt() + c.epsilon);
}

}  // namespace

void adam_step(MlpModel& model, const MlpGradients& grads,
               const AdamConfig& config, AdamState& state) {
  ++state.step;
  const double bias1 = 1.0 - std::pow(config.beta1, state.step);
  const double bias2 = 1.0 - std::pow(config.beta2, state.step);
  for (int l = 0; l < model.num_layers(); ++l) {
    adam_update(model.weights[l], grads.weights[l], state.m_weights[l],
                state.v_weights[l], config, bias1, bias2);
    adam_update(model.biases[l], grads.biases[l], state.m_biases[l],
                state.v_biases[l], config, bias1, bias2);
  }
}

double mce_loss(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_hat,
                Eigen::VectorXd* grad) {
  if (theta.size() != theta_hat.size())
    throw std::invalid_argument("mce_loss: length mismatch");
  double loss = 0.0;
  if (grad) grad->resize(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double d = theta(i) - theta_hat(i);
    loss += 2.0 * (1.0 - std::cos(d));
    if (grad) (*grad)(i) = -2.0 * std::sin(d);
  }
  return loss;
}

std::pair<double, std::vector<int>> permutation_min_loss(
    const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_hat,
    const std::function<double(double, double)>& elementwise) {
  if (theta.size() != theta_hat.size())
    throw std::invalid_argument("permutation_min_loss: length mismatch");
  const int l = static_cast<int>(theta.size());
  if (l > 6)
    throw std::invalid_argument("permutation_min_loss: L > 6 not supported");

  std::vector<int> perm(l);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_loss = std::numeric_limits<double>::infinity();
  do {
    double loss = 0.0;
    for (int i = 0; i < l; ++i) loss += elementwise(theta(i), theta_hat(perm[i]));
    // next_permutation enumerates in lexicographic order, so strict
    // improvement keeps the smallest permutation on ties.
    if (loss < best_loss) {
      best_loss = loss;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best_loss, best};
}

double cross_entropy_loss(const Eigen::VectorXd& probs, int label,
                          Eigen::VectorXd* logit_grad) {
  if (label < 0 || label >= probs.size())
    throw std::invalid_argument("cross_entropy_loss: label out of range");
  if (logit_grad) {
    *logit_grad = probs;
    (*logit_grad)(label) -= 1.0;
  }
  return -std::log(probs(label));
}

// --- checkpoint IO ----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'D', 'O', 'A', 'M', 'L', 'P', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void save_checkpoint(const std::string& path, const MlpModel& model,
                     const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint8_t>(model.head));
  write_pod(out, static_cast<std::uint32_t>(model.dims.size()));
  for (int d : model.dims) write_pod(out, static_cast<std::uint32_t>(d));
  for (int l = 0; l < model.num_layers(); ++l) {
    // Row-major entry order.
    const Eigen::MatrixXd& w = model.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) write_pod(out, w(i, j));
    for (Eigen::Index i = 0; i < model.biases[l].size(); ++i)
      write_pod(out, model.biases[l](i));
  }
  write_pod(out, meta.seed);
  write_pod(out, meta.samples_seen);
  write_pod(out, static_cast<std::uint8_t>(meta.loss));
  if (!out) throw std::runtime_error("write failed: " + path);
}

MlpModel load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  std::uint32_t version;
  read_pod(in, version);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version");
  std::uint8_t head;
  read_pod(in, head);
  std::uint32_t num_dims;
  read_pod(in, num_dims);
  MlpModel model;
  model.head = static_cast<Head>(head);
  model.dims.resize(num_dims);
  for (auto& d : model.dims) {
    std::uint32_t v;
    read_pod(in, v);
    d = static_cast<int>(v);
  }
  for (std::size_t l = 0; l + 1 < model.dims.size(); ++l) {
    Eigen::MatrixXd w(model.dims[l + 1], model.dims[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) read_pod(in, w(i, j));
    Eigen::VectorXd b(model.dims[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) read_pod(in, b(i));
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  if (meta) {
    read_pod(in, meta->seed);
    read_pod(in, meta->samples_seen);
    std::uint8_t loss;
    read_pod(in, loss);
    meta->loss = static_cast<LossKind>(loss);
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return model;
}

}  // namespace subdoa
