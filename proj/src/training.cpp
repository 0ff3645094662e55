// Copyright 2026 The mlstm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mlstm/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace mlstm {

AdadeltaState AdadeltaState::zeros_like(const ModelParams& p, double rho, double eps) {
  AdadeltaState s;
  s.sq_grad = ModelParams::zeros(p.input_dims(), p.hidden_dim(), p.num_classes());
  s.sq_delta = s.sq_grad;
  s.rho = rho;
  s.eps = eps;
  return s;
}

void adadelta_update(AdadeltaState& state, ModelParams& params, const Gradients& grads) {
  if (!same_shapes(params, grads) || !same_shapes(params, state.sq_grad) ||
      !same_shapes(params, state.sq_delta)) {
    throw DimensionError("adadelta_update: shape mismatch between state, params and grads");
  }
  auto x = tensor_refs(params);
  const auto g = tensor_refs(grads);
  auto eg2 = tensor_refs(state.sq_grad);
  auto edx2 = tensor_refs(state.sq_delta);
  const double rho = state.rho;
  const double eps = state.eps;
  for (std::size_t t = 0; t < x.size(); ++t) {
    for (std::size_t i = 0; i < x[t].data.size(); ++i) {
      const double gi = g[t].data[i];
      double& acc_g = eg2[t].data[i];
      double& acc_dx = edx2[t].data[i];
      acc_g = rho * acc_g + (1.0 - rho) * gi * gi;
      const double dx = -std::sqrt(acc_dx + eps) / std::sqrt(acc_g + eps) * gi;
      acc_dx = rho * acc_dx + (1.0 - rho) * dx * dx;
      x[t].data[i] += dx;
    }
  }
}

double clip_global_norm(Gradients& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& t : tensor_refs(static_cast<const Gradients&>(grads)))
    for (double v : t.data) sq += v * v;
  const double norm = std::sqrt(sq);
  if (std::isfinite(max_norm) && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& t : tensor_refs(grads))
      for (double& v : t.data) v *= scale;
  }
  return norm;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error("epochs must be >= 1");
  if (hidden < 1) throw Error("hidden dimension must be >= 1");
  if (word_dim < 1) throw Error("word dimension must be >= 1");
  if (!(rho > 0.0 && rho < 1.0)) throw Error("rho must be in (0, 1)");
  if (!(eps > 0.0)) throw Error("eps must be > 0");
  if (!(clip_norm > 0.0)) throw Error("clip norm must be > 0");
  if (!(init_bound > 0.0)) throw Error("init bound must be > 0");
}

ModelParams init_params(const std::vector<Eigen::Index>& input_dims, const TrainConfig& cfg) {
  ModelParams p = ModelParams::zeros(input_dims, cfg.hidden);
  SeededRng rng(cfg.seed);
  for (auto& t : tensor_refs(p)) {
    const Matrix init = seeded_uniform_init(t.rows, t.cols, cfg.init_bound, rng);
    Eigen::Map<Matrix>(t.data.data(), t.rows, t.cols) = init;
  }
  return p;
}

TrainResult train(std::span<const AspectSequences> dataset, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (dataset.empty()) throw Error("train: empty dataset");
  bool has_vandal = false;
  bool has_benign = false;
  for (const auto& a : dataset) {
    (a.label == Label::vandal ? has_vandal : has_benign) = true;
    if (a.length() == 0) throw Error("train: user '" + a.user_id + "' has no edits");
  }
  if (!has_vandal || !has_benign) throw Error("train: dataset must contain both classes");

  std::vector<Eigen::Index> dims;
  for (const auto& seq : dataset.front().aspects) dims.push_back(seq.front().size());

  TrainResult result;
  result.params = init_params(dims, cfg);
  result.optimizer = AdadeltaState::zeros_like(result.params, cfg.rho, cfg.eps);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng shuffle_rng(splitmix64(cfg.seed ^ 0x5Au));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (cfg.shuffle) {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
      }
    }
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t idx : order) {
      const auto& user = dataset[idx];
      const int label = static_cast<int>(user.label);
      const ForwardTrace trace = forward_user(user, result.params);
      const double loss = user_loss(trace, label);
      if (!std::isfinite(loss)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                           " for user '" + user.user_id + "'");
      }
      loss_sum += loss;
      if (predicted_class(trace.probs) == label) ++correct;
      Gradients grads = backward_user(result.params, trace, label);
      clip_global_norm(grads, cfg.clip_norm);
      adadelta_update(result.optimizer, result.params, grads);
    }
    EpochStats stats;
    stats.mean_loss = loss_sum / static_cast<double>(dataset.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.epochs.push_back(stats);
    if (on_epoch) on_epoch(epoch + 1, stats);
  }
  return result;
}

}  // namespace mlstm
