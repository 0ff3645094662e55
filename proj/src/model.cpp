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

#include "mlstm/model.hpp"

#include <cmath>

namespace mlstm {

namespace {

void expect_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(what + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                         ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

template <class Params, class Fn>
void visit(Params& p, Fn&& fn) {
  for (std::size_t m = 0; m < p.lstms.size(); ++m) {
    auto& l = p.lstms[m];
    const std::string pre = "lstm" + std::to_string(m) + ".";
    fn(pre + "W_c", l.W_c);
    fn(pre + "W_i", l.W_i);
    fn(pre + "W_f", l.W_f);
    fn(pre + "W_o", l.W_o);
    fn(pre + "U_c", l.U_c);
    fn(pre + "U_i", l.U_i);
    fn(pre + "U_f", l.U_f);
    fn(pre + "U_o", l.U_o);
    fn(pre + "b_c", l.b_c);
    fn(pre + "b_i", l.b_i);
    fn(pre + "b_f", l.b_f);
    fn(pre + "b_o", l.b_o);
  }
  fn(std::string("attention.W_a"), p.attention.W_a);
  fn(std::string("attention.u_a"), p.attention.u_a);
  fn(std::string("classifier.W"), p.classifier.W);
  fn(std::string("classifier.b"), p.classifier.b);
}

}  // namespace

LstmParams LstmParams::zeros(Eigen::Index input_dim, Eigen::Index hidden_dim) {
  if (input_dim <= 0 || hidden_dim <= 0) throw DimensionError("LSTM dimensions must be positive");
  LstmParams p;
  for (Matrix* w : {&p.W_c, &p.W_i, &p.W_f, &p.W_o}) *w = Matrix::Zero(hidden_dim, input_dim);
  for (Matrix* u : {&p.U_c, &p.U_i, &p.U_f, &p.U_o}) *u = Matrix::Zero(hidden_dim, hidden_dim);
  for (Vector* b : {&p.b_c, &p.b_i, &p.b_f, &p.b_o}) *b = Vector::Zero(hidden_dim);
  return p;
}

AttentionParams AttentionParams::zeros(Eigen::Index hidden_dim) {
  if (hidden_dim <= 0) throw DimensionError("hidden dimension must be positive");
  return {Matrix::Zero(hidden_dim, hidden_dim), Vector::Zero(hidden_dim)};
}

ClassifierParams ClassifierParams::zeros(Eigen::Index hidden_dim, Eigen::Index num_classes) {
  if (num_classes < 2) throw DimensionError("classifier needs at least two classes");
  return {Matrix::Zero(num_classes, hidden_dim), Vector::Zero(num_classes)};
}

ModelParams ModelParams::zeros(const std::vector<Eigen::Index>& input_dims, Eigen::Index hidden_dim,
                               Eigen::Index num_classes) {
  if (input_dims.empty()) throw DimensionError("model needs at least one aspect");
  ModelParams p;
  for (auto d : input_dims) p.lstms.push_back(LstmParams::zeros(d, hidden_dim));
  p.attention = AttentionParams::zeros(hidden_dim);
  p.classifier = ClassifierParams::zeros(hidden_dim, num_classes);
  return p;
}

std::vector<Eigen::Index> ModelParams::input_dims() const {
  std::vector<Eigen::Index> dims;
  for (const auto& l : lstms) dims.push_back(l.input_dim());
  return dims;
}

void ModelParams::validate() const {
  if (lstms.empty()) throw DimensionError("model has no aspects");
  const Eigen::Index h = hidden_dim();
  if (h <= 0) throw DimensionError("hidden dimension must be positive");
  expect_shape(attention.W_a, h, h, "attention.W_a");
  expect_dim(attention.u_a.size(), h, "attention.u_a");
  const Eigen::Index K = classifier.W.rows();
  if (K < 2) throw DimensionError("classifier needs at least two classes");
  expect_shape(classifier.W, K, h, "classifier.W");
  expect_dim(classifier.b.size(), K, "classifier.b");
  for (std::size_t m = 0; m < lstms.size(); ++m) {
    const auto& l = lstms[m];
    const Eigen::Index d = l.W_c.cols();
    const std::string pre = "lstm" + std::to_string(m) + ".";
    if (d <= 0) throw DimensionError(pre + "input dimension must be positive");
    for (const Matrix* w : {&l.W_c, &l.W_i, &l.W_f, &l.W_o}) expect_shape(*w, h, d, pre + "W");
    for (const Matrix* u : {&l.U_c, &l.U_i, &l.U_f, &l.U_o}) expect_shape(*u, h, h, pre + "U");
    for (const Vector* b : {&l.b_c, &l.b_i, &l.b_f, &l.b_o}) expect_dim(b->size(), h, "bias");
  }
}

std::vector<TensorRef> tensor_refs(ModelParams& p) {
  std::vector<TensorRef> refs;
  visit(p, [&](std::string name, auto& t) {
    refs.push_back({std::move(name),
                    std::span<double>(t.data(), static_cast<std::size_t>(t.size())), t.rows(),
                    t.cols()});
  });
  return refs;
}

std::vector<ConstTensorRef> tensor_refs(const ModelParams& p) {
  std::vector<ConstTensorRef> refs;
  visit(p, [&](std::string name, const auto& t) {
    refs.push_back({std::move(name),
                    std::span<const double>(t.data(), static_cast<std::size_t>(t.size())), t.rows(),
                    t.cols()});
  });
  return refs;
}

std::size_t parameter_count(const ModelParams& p) {
  std::size_t n = 0;
  for (const auto& t : tensor_refs(p)) n += t.data.size();
  return n;
}

Vector flatten(const ModelParams& p) {
  Vector flat(static_cast<Eigen::Index>(parameter_count(p)));
  Eigen::Index k = 0;
  for (const auto& t : tensor_refs(p))
    for (double v : t.data) flat[k++] = v;
  return flat;
}

void unflatten(const Vector& flat, ModelParams& p) {
  expect_dim(flat.size(), static_cast<Eigen::Index>(parameter_count(p)), "unflatten");
  Eigen::Index k = 0;
  for (auto& t : tensor_refs(p))
    for (double& v : t.data) v = flat[k++];
}

bool same_shapes(const ModelParams& a, const ModelParams& b) {
  const auto ra = tensor_refs(a);
  const auto rb = tensor_refs(b);
  if (ra.size() != rb.size()) return false;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (ra[i].rows != rb[i].rows || ra[i].cols != rb[i].cols) return false;
  }
  return true;
}

LstmStep lstm_step(const Vector& x, const Vector& h_prev, const Vector& c_prev,
                   const LstmParams& p) {
  expect_dim(x.size(), p.input_dim(), "lstm_step input");
  expect_dim(h_prev.size(), p.hidden_dim(), "lstm_step h_prev");
  expect_dim(c_prev.size(), p.hidden_dim(), "lstm_step c_prev");
  LstmStep s;
  s.cand = tanh(Vector(p.W_c * x + p.U_c * h_prev + p.b_c));
  s.in = sigmoid(Vector(p.W_i * x + p.U_i * h_prev + p.b_i));
  s.forget = sigmoid(Vector(p.W_f * x + p.U_f * h_prev + p.b_f));
  s.out = sigmoid(Vector(p.W_o * x + p.U_o * h_prev + p.b_o));
  s.c = s.in.cwiseProduct(s.cand) + s.forget.cwiseProduct(c_prev);
  s.h = s.out.cwiseProduct(tanh(s.c));
  return s;
}

LstmTrace lstm_forward(std::span<const Vector> seq, const LstmParams& p) {
  if (seq.empty()) throw DimensionError("lstm_forward: empty sequence");
  const Eigen::Index h = p.hidden_dim();
  LstmTrace tr;
  const std::size_t T = seq.size();
  tr.x.assign(seq.begin(), seq.end());
  tr.h.reserve(T + 1);
  tr.c.reserve(T + 1);
  tr.h.push_back(Vector::Zero(h));
  tr.c.push_back(Vector::Zero(h));
  for (std::size_t t = 0; t < T; ++t) {
    LstmStep s = lstm_step(seq[t], tr.h.back(), tr.c.back(), p);
    tr.h.push_back(std::move(s.h));
    tr.c.push_back(std::move(s.c));
    tr.cand.push_back(std::move(s.cand));
    tr.in.push_back(std::move(s.in));
    tr.forget.push_back(std::move(s.forget));
    tr.out.push_back(std::move(s.out));
  }
  return tr;
}

AttentionResult attention_fuse(std::span<const Vector> hidden, const AttentionParams& a) {
  if (hidden.empty()) throw DimensionError("attention_fuse: no hidden states");
  const Eigen::Index h = a.W_a.rows();
  expect_dim(a.W_a.cols(), h, "attention W_a columns");
  expect_dim(a.u_a.size(), h, "attention u_a");
  const auto M = static_cast<Eigen::Index>(hidden.size());
  AttentionResult r;
  r.hidden.assign(hidden.begin(), hidden.end());
  r.scores.resize(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    expect_dim(hidden[m].size(), h, "attention hidden state");
    r.z.push_back(tanh(Vector(a.W_a * hidden[m])));
    r.scores[m] = a.u_a.dot(r.z.back());
  }
  r.alpha = stable_softmax(r.scores);
  r.s = Vector::Zero(h);
  for (Eigen::Index m = 0; m < M; ++m) r.s += r.alpha[m] * hidden[m];
  return r;
}

Vector class_logits(const Vector& s, const ClassifierParams& c) {
  expect_dim(s.size(), c.W.cols(), "classify input");
  expect_dim(c.b.size(), c.W.rows(), "classifier bias");
  return c.W * s + c.b;
}

Vector classify(const Vector& s, const ClassifierParams& c) {
  return stable_softmax(class_logits(s, c));
}

int predicted_class(const Vector& probs) {
  if (probs.size() == 0) throw DimensionError("predicted_class: empty probabilities");
  int best = 0;
  for (Eigen::Index k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = static_cast<int>(k);
  }
  return best;
}

double cross_entropy_loss(std::span<const Vector> probs, std::span<const int> labels) {
  if (probs.empty()) throw DimensionError("cross_entropy_loss: no samples");
  if (probs.size() != labels.size()) {
    throw DimensionError("cross_entropy_loss: probabilities and labels differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= probs[i].size()) {
      throw Error("cross_entropy_loss: label " + std::to_string(y) + " out of range");
    }
    total -= std::log(std::max(probs[i][y], kProbabilityFloor));
  }
  return total / static_cast<double>(probs.size());
}

ForwardTrace forward_user(const AspectSequences& a, const ModelParams& p) {
  if (a.aspects.size() != p.num_aspects()) {
    throw DimensionError("forward_user: expected " + std::to_string(p.num_aspects()) +
                         " aspects, got " + std::to_string(a.aspects.size()));
  }
  ForwardTrace tr;
  std::vector<Vector> last;
  for (std::size_t m = 0; m < p.num_aspects(); ++m) {
    if (m > 0 && a.aspects[m].size() != a.aspects[0].size()) {
      throw DimensionError("forward_user: aspect sequences differ in length");
    }
    tr.aspects.push_back(lstm_forward(a.aspects[m], p.lstms[m]));
    last.push_back(tr.aspects.back().last_hidden());
  }
  tr.attention = attention_fuse(last, p.attention);
  tr.logits = class_logits(tr.attention.s, p.classifier);
  tr.probs = stable_softmax(tr.logits);
  return tr;
}

double user_loss(const ForwardTrace& trace, int label) {
  const Vector* probs = &trace.probs;
  return cross_entropy_loss(std::span<const Vector>(probs, 1), std::span<const int>(&label, 1));
}

Gradients backward_user(const ModelParams& p, const ForwardTrace& trace, int label) {
  const Eigen::Index h = p.hidden_dim();
  const Eigen::Index K = p.num_classes();
  const std::size_t M = p.num_aspects();
  if (trace.aspects.size() != M || trace.attention.alpha.size() != static_cast<Eigen::Index>(M) ||
      trace.probs.size() != K || trace.attention.s.size() != h) {
    throw DimensionError("backward_user: trace does not match model parameters");
  }
  for (std::size_t m = 0; m < M; ++m) {
    const auto& at = trace.aspects[m];
    if (at.length() == 0 || at.h.size() != at.length() + 1 || at.cand.size() != at.length() ||
        at.x.front().size() != p.lstms[m].input_dim() || at.h.back().size() != h) {
      throw DimensionError("backward_user: stale or incomplete trace for aspect " +
                           std::to_string(m));
    }
  }
  if (label < 0 || label >= K) {
    throw Error("backward_user: label " + std::to_string(label) + " out of range");
  }

  Gradients g = ModelParams::zeros(p.input_dims(), h, K);
  const auto& att = trace.attention;

  // Softmax + cross-entropy.
  Vector d_logits = trace.probs;
  d_logits[label] -= 1.0;
  g.classifier.W = d_logits * att.s.transpose();
  g.classifier.b = d_logits;
  const Vector d_s = p.classifier.W.transpose() * d_logits;

  // s = sum_m alpha_m h_m with alpha = softmax(u_a . tanh(W_a h_m)).
  Vector d_alpha(static_cast<Eigen::Index>(M));
  for (std::size_t m = 0; m < M; ++m) d_alpha[m] = d_s.dot(att.hidden[m]);
  const double mean_d_alpha = att.alpha.dot(d_alpha);
  std::vector<Vector> d_last(M);
  for (std::size_t m = 0; m < M; ++m) {
    const double d_score = att.alpha[m] * (d_alpha[m] - mean_d_alpha);
    g.attention.u_a += d_score * att.z[m];
    const Vector d_pre =
        (d_score * p.attention.u_a).cwiseProduct(Vector::Ones(h) - att.z[m].cwiseAbs2());
    g.attention.W_a += d_pre * att.hidden[m].transpose();
    d_last[m] = att.alpha[m] * d_s + p.attention.W_a.transpose() * d_pre;
  }

  // Backpropagation through time, one aspect at a time.
  for (std::size_t m = 0; m < M; ++m) {
    const auto& lp = p.lstms[m];
    const auto& tr = trace.aspects[m];
    auto& lg = g.lstms[m];
    Vector d_h = d_last[m];
    Vector d_c_next = Vector::Zero(h);
    for (std::size_t t = tr.length(); t-- > 0;) {
      const Vector& c_t = tr.c[t + 1];
      const Vector& c_prev = tr.c[t];
      const Vector& h_prev = tr.h[t];
      const Vector tanh_c = tanh(c_t);

      const Vector d_out = d_h.cwiseProduct(tanh_c);
      const Vector d_c =
          d_c_next + d_h.cwiseProduct(tr.out[t]).cwiseProduct(Vector::Ones(h) - tanh_c.cwiseAbs2());
      const Vector d_cand = d_c.cwiseProduct(tr.in[t]);
      const Vector d_in = d_c.cwiseProduct(tr.cand[t]);
      const Vector d_forget = d_c.cwiseProduct(c_prev);

      const Vector a_c = d_cand.cwiseProduct(Vector::Ones(h) - tr.cand[t].cwiseAbs2());
      const Vector a_i = d_in.cwiseProduct(tr.in[t].cwiseProduct(Vector::Ones(h) - tr.in[t]));
      const Vector a_f =
          d_forget.cwiseProduct(tr.forget[t].cwiseProduct(Vector::Ones(h) - tr.forget[t]));
      const Vector a_o = d_out.cwiseProduct(tr.out[t].cwiseProduct(Vector::Ones(h) - tr.out[t]));

      const Vector& x = tr.x[t];
      lg.W_c += a_c * x.transpose();
      lg.W_i += a_i * x.transpose();
      lg.W_f += a_f * x.transpose();
      lg.W_o += a_o * x.transpose();
      lg.U_c += a_c * h_prev.transpose();
      lg.U_i += a_i * h_prev.transpose();
      lg.U_f += a_f * h_prev.transpose();
      lg.U_o += a_o * h_prev.transpose();
      lg.b_c += a_c;
      lg.b_i += a_i;
      lg.b_f += a_f;
      lg.b_o += a_o;

      d_h = lp.U_c.transpose() * a_c + lp.U_i.transpose() * a_i + lp.U_f.transpose() * a_f +
            lp.U_o.transpose() * a_o;
      d_c_next = d_c.cwiseProduct(tr.forget[t]);
    }
  }
  return g;
}

}  // namespace mlstm
