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

#ifndef MLSTM_MODEL_HPP
#define MLSTM_MODEL_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mlstm/ingestion.hpp"
#include "mlstm/numerics.hpp"

namespace mlstm {

/// Weights of one aspect LSTM. W_* are hidden x input, U_* hidden x hidden.
struct LstmParams {
  Matrix W_c, W_i, W_f, W_o;
  Matrix U_c, U_i, U_f, U_o;
  Vector b_c, b_i, b_f, b_o;

  static LstmParams zeros(Eigen::Index input_dim, Eigen::Index hidden_dim);
  Eigen::Index input_dim() const { return W_c.cols(); }
  Eigen::Index hidden_dim() const { return W_c.rows(); }
};

struct AttentionParams {
  Matrix W_a;  // h x h
  Vector u_a;  // h

  static AttentionParams zeros(Eigen::Index hidden_dim);
};

/// Row k of W and entry k of b score class k.
struct ClassifierParams {
  Matrix W;  // K x h
  Vector b;  // K

  static ClassifierParams zeros(Eigen::Index hidden_dim, Eigen::Index num_classes);
  Eigen::Index num_classes() const { return W.rows(); }
};

struct ModelParams {
  std::vector<LstmParams> lstms;  // one per aspect
  AttentionParams attention;
  ClassifierParams classifier;

  static ModelParams zeros(const std::vector<Eigen::Index>& input_dims, Eigen::Index hidden_dim,
                           Eigen::Index num_classes = kNumClasses);

  std::size_t num_aspects() const { return lstms.size(); }
  Eigen::Index hidden_dim() const { return attention.W_a.rows(); }
  Eigen::Index num_classes() const { return classifier.num_classes(); }
  std::vector<Eigen::Index> input_dims() const;

  /// Throws DimensionError unless every shape agrees with (input dims, h, K).
  void validate() const;
};

/// Gradients share the parameter layout.
using Gradients = ModelParams;

/// Mutable view of one parameter tensor. `data` is Eigen's column-major storage.
struct TensorRef {
  std::string name;
  std::span<double> data;
  Eigen::Index rows;
  Eigen::Index cols;
};

struct ConstTensorRef {
  std::string name;
  std::span<const double> data;
  Eigen::Index rows;
  Eigen::Index cols;
};

/// All tensors in the fixed declared order: per aspect W_c W_i W_f W_o U_c
/// U_i U_f U_o b_c b_i b_f b_o, then W_a u_a, then classifier W b.
std::vector<TensorRef> tensor_refs(ModelParams& p);
std::vector<ConstTensorRef> tensor_refs(const ModelParams& p);

std::size_t parameter_count(const ModelParams& p);
Vector flatten(const ModelParams& p);
/// Overwrites every parameter of `p` from `flat` (same order as flatten).
void unflatten(const Vector& flat, ModelParams& p);
bool same_shapes(const ModelParams& a, const ModelParams& b);

/// Activations of one LSTM step.
struct LstmStep {
  Vector h, c;
  Vector cand, in, forget, out;  // c~, i, f, o
};

LstmStep lstm_step(const Vector& x, const Vector& h_prev, const Vector& c_prev,
                   const LstmParams& p);

/// Everything one aspect LSTM computed. h and c hold T+1 entries, index 0
/// being the zero initial state; gate vectors hold T entries.
struct LstmTrace {
  std::vector<Vector> x;
  std::vector<Vector> h, c;
  std::vector<Vector> cand, in, forget, out;

  std::size_t length() const { return x.size(); }
  const Vector& last_hidden() const { return h.back(); }
};

LstmTrace lstm_forward(std::span<const Vector> seq, const LstmParams& p);

struct AttentionResult {
  Vector s;               // fused embedding
  Vector alpha;           // M weights on the simplex
  Vector scores;          // u_a^T z^(m)
  std::vector<Vector> z;  // tanh(W_a h^(m))
  std::vector<Vector> hidden;
};

AttentionResult attention_fuse(std::span<const Vector> hidden, const AttentionParams& a);

Vector class_logits(const Vector& s, const ClassifierParams& c);
Vector classify(const Vector& s, const ClassifierParams& c);

/// Lowest index wins ties.
int predicted_class(const Vector& probs);

constexpr double kProbabilityFloor = 1e-12;

/// Mean negative log-likelihood of the true classes, probabilities floored
/// at kProbabilityFloor.
double cross_entropy_loss(std::span<const Vector> probs, std::span<const int> labels);

struct ForwardTrace {
  std::vector<LstmTrace> aspects;
  AttentionResult attention;
  Vector logits;
  Vector probs;

  const Vector& embedding() const { return attention.s; }
};

ForwardTrace forward_user(const AspectSequences& a, const ModelParams& p);

/// Loss of one user given its trace.
double user_loss(const ForwardTrace& trace, int label);

/// Exact gradient of user_loss with respect to every parameter, including
/// backpropagation through all T steps of each aspect LSTM.
Gradients backward_user(const ModelParams& p, const ForwardTrace& trace, int label);

}  // namespace mlstm

#endif  // MLSTM_MODEL_HPP
