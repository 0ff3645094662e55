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

#ifndef MLSTM_TRAINING_HPP
#define MLSTM_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "mlstm/ingestion.hpp"
#include "mlstm/model.hpp"

namespace mlstm {

/// Decayed accumulators of squared gradients and squared updates, one entry
/// per parameter.
struct AdadeltaState {
  ModelParams sq_grad;
  ModelParams sq_delta;
  double rho = 0.95;
  double eps = 1e-6;

  static AdadeltaState zeros_like(const ModelParams& p, double rho = 0.95, double eps = 1e-6);
};

/// One Adadelta step applied in place:
///   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
///   dx      =  -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
///   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
///   x       += dx
void adadelta_update(AdadeltaState& state, ModelParams& params, const Gradients& grads);

/// Scales `grads` so its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping. An infinite max_norm disables clipping.
double clip_global_norm(Gradients& grads, double max_norm);

struct TrainConfig {
  std::size_t epochs = 25;
  Eigen::Index hidden = 32;
  std::size_t word_dim = 50;
  std::uint64_t seed = 0;
  double rho = 0.95;
  double eps = 1e-6;
  double clip_norm = 5.0;
  double init_bound = 0.08;
  bool shuffle = false;

  void validate() const;
};

struct EpochStats {
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

struct TrainResult {
  ModelParams params;
  AdadeltaState optimizer;
  TrainHistory history;
};

/// Uniform [-init_bound, init_bound] initialization of every tensor, drawn
/// in the declared tensor order from a generator seeded with cfg.seed.
ModelParams init_params(const std::vector<Eigen::Index>& input_dims, const TrainConfig& cfg);

using EpochCallback = std::function<void(std::size_t epoch, const EpochStats&)>;

/// Per-user stochastic training: one forward/backward/clip/Adadelta update
/// per user per epoch. Epoch loss and accuracy are accumulated from each
/// user's forward pass before its update.
TrainResult train(std::span<const AspectSequences> dataset, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace mlstm

#endif  // MLSTM_TRAINING_HPP
