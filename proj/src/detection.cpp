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

#include "mlstm/detection.hpp"

#include <cstdio>

namespace mlstm {

namespace {

constexpr int kVandal = static_cast<int>(Label::vandal);

double ratio(std::size_t num, std::size_t den, bool& defined) {
  defined = den != 0;
  return defined ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

std::string fixed(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string percent(double v) { return fixed(100.0 * v, 2) + "%"; }

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

void DetectionConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw Error("tau must be in (0, 1), got " + std::to_string(tau));
}

Prediction predict_user(const ModelParams& params, const AspectSequences& a,
                        const DetectionConfig& cfg) {
  const ForwardTrace trace = forward_user(a, params);
  Prediction p;
  p.probability = trace.probs[kVandal];
  p.verdict = exceeds_threshold(p.probability, cfg.tau) ? Label::vandal : Label::benign;
  return p;
}

StreamState StreamState::initial(const ModelParams& params) {
  StreamState s;
  for (std::size_t m = 0; m < params.num_aspects(); ++m) {
    s.h.push_back(Vector::Zero(params.hidden_dim()));
    s.c.push_back(Vector::Zero(params.hidden_dim()));
  }
  return s;
}

StreamStepResult stream_step(StreamState& state, std::span<const Vector> inputs,
                             const ModelParams& params, const DetectionConfig& cfg) {
  const std::size_t M = params.num_aspects();
  if (inputs.size() != M || state.h.size() != M || state.c.size() != M) {
    throw DimensionError("stream_step: aspect count does not match the model");
  }
  std::vector<LstmStep> steps;
  steps.reserve(M);
  for (std::size_t m = 0; m < M; ++m) {
    steps.push_back(lstm_step(inputs[m], state.h[m], state.c[m], params.lstms[m]));
  }
  std::vector<Vector> hidden;
  hidden.reserve(M);
  for (const auto& s : steps) hidden.push_back(s.h);
  const AttentionResult fused = attention_fuse(hidden, params.attention);
  const Vector probs = stable_softmax(class_logits(fused.s, params.classifier));

  // Commit only after every kernel succeeded.
  for (std::size_t m = 0; m < M; ++m) {
    state.h[m] = std::move(steps[m].h);
    state.c[m] = std::move(steps[m].c);
  }
  ++state.t;
  state.last_probability = probs[kVandal];
  if (!state.flagged_at && exceeds_threshold(state.last_probability, cfg.tau)) {
    state.flagged_at = state.t;
  }
  return {state.last_probability, state.flagged_at.has_value()};
}

StreamStepResult stream_step(StreamState& state, const EditRecord& edit, const ModelParams& params,
                             const WordVectorStore& store, const DetectionConfig& cfg) {
  const auto inputs = encode_edit(edit, store);
  return stream_step(state, inputs, params, cfg);
}

StreamOutcome stream_user(const ModelParams& params, const UserSequence& user,
                          const WordVectorStore& store, const DetectionConfig& cfg) {
  StreamOutcome out;
  out.user_id = user.user_id;
  out.label = user.label;
  out.length = user.edits.size();
  StreamState state = StreamState::initial(params);
  for (const auto& e : user.edits) {
    out.probabilities.push_back(stream_step(state, e, params, store, cfg).probability);
  }
  out.flagged_at = state.flagged_at;
  return out;
}

std::optional<std::size_t> first_crossing(std::span<const double> probabilities, double tau) {
  for (std::size_t t = 0; t < probabilities.size(); ++t) {
    if (exceeds_threshold(probabilities[t], tau)) return t + 1;
  }
  return std::nullopt;
}

MetricsReport evaluate(std::span<const Label> verdicts, std::span<const Label> labels) {
  if (verdicts.size() != labels.size()) {
    throw DimensionError("evaluate: verdicts and labels differ in length");
  }
  MetricsReport r;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const bool predicted = verdicts[i] == Label::vandal;
    const bool actual = labels[i] == Label::vandal;
    if (predicted && actual)
      ++r.tp;
    else if (predicted)
      ++r.fp;
    else if (actual)
      ++r.fn;
    else
      ++r.tn;
  }
  r.precision = ratio(r.tp, r.tp + r.fp, r.precision_defined);
  r.recall = ratio(r.tp, r.tp + r.fn, r.recall_defined);
  const double denom = r.precision + r.recall;
  r.f1_defined = r.precision_defined && r.recall_defined && denom > 0.0;
  r.f1 = r.f1_defined ? 2.0 * r.precision * r.recall / denom : 0.0;
  bool acc_defined = true;
  r.accuracy = ratio(r.tp + r.tn, verdicts.size(), acc_defined);
  return r;
}

EarlyStats early_stats(std::span<const StreamOutcome> outcomes) {
  EarlyStats s;
  double edits = 0.0;
  for (const auto& o : outcomes) {
    if (o.label != Label::vandal) continue;
    ++s.vandals;
    if (o.flagged_at && *o.flagged_at < o.length) {
      ++s.early_detected;
      edits += static_cast<double>(*o.flagged_at);
    }
  }
  if (s.early_detected) s.mean_edits_at_detection = edits / static_cast<double>(s.early_detected);
  if (s.vandals) {
    s.fraction_early = static_cast<double>(s.early_detected) / static_cast<double>(s.vandals);
  }
  return s;
}

std::vector<DetectionRow> detection_sweep(std::span<const double> p_vandal,
                                          std::span<const Label> labels,
                                          std::span<const double> taus) {
  std::vector<DetectionRow> rows;
  for (double tau : taus) {
    DetectionConfig{tau}.validate();
    std::vector<Label> verdicts;
    verdicts.reserve(p_vandal.size());
    for (double p : p_vandal) {
      verdicts.push_back(exceeds_threshold(p, tau) ? Label::vandal : Label::benign);
    }
    rows.push_back({tau, evaluate(verdicts, labels)});
  }
  return rows;
}

std::vector<EarlyDetectionRow> early_detection_sweep(std::span<const StreamOutcome> outcomes,
                                                     std::span<const double> taus) {
  std::vector<EarlyDetectionRow> rows;
  for (double tau : taus) {
    DetectionConfig{tau}.validate();
    std::vector<StreamOutcome> at_tau(outcomes.begin(), outcomes.end());
    std::vector<Label> verdicts, labels;
    for (auto& o : at_tau) {
      o.flagged_at = first_crossing(o.probabilities, tau);
      verdicts.push_back(o.flagged_at ? Label::vandal : Label::benign);
      labels.push_back(o.label);
    }
    rows.push_back({tau, evaluate(verdicts, labels), early_stats(at_tau)});
  }
  return rows;
}

void write_detection_tsv(std::ostream& out, std::span<const DetectionRow> rows) {
  out << "tau\tprecision\trecall\tf1\taccuracy\ttp\tfp\tfn\ttn\tdegenerate\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << fixed(r.tau, 2) << '\t' << fixed(m.precision, 6) << '\t' << fixed(m.recall, 6) << '\t'
        << fixed(m.f1, 6) << '\t' << fixed(m.accuracy, 6) << '\t' << m.tp << '\t' << m.fp << '\t'
        << m.fn << '\t' << m.tn << '\t' << (m.degenerate() ? 1 : 0) << '\n';
  }
}

void write_detection_table(std::ostream& out, std::span<const DetectionRow> rows) {
  out << pad("tau", 5) << pad("Precision", 12) << pad("Recall", 10) << pad("F1", 10)
      << pad("Accuracy", 10) << '\n';
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << pad(fixed(r.tau, 2), 5) << pad(percent(m.precision), 12) << pad(percent(m.recall), 10)
        << pad(percent(m.f1), 10) << pad(percent(m.accuracy), 10)
        << (m.degenerate() ? "  (degenerate)" : "") << '\n';
  }
}

void write_early_detection_tsv(std::ostream& out, std::span<const EarlyDetectionRow> rows) {
  out << "tau\tprecision\trecall\tf1\tedits_at_detection\tearly_detected\tvandals\t"
         "early_detected_count\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << fixed(r.tau, 2) << '\t' << fixed(m.precision, 6) << '\t' << fixed(m.recall, 6) << '\t'
        << fixed(m.f1, 6) << '\t' << fixed(r.early.mean_edits_at_detection, 4) << '\t'
        << fixed(r.early.fraction_early, 6) << '\t' << r.early.vandals << '\t'
        << r.early.early_detected << '\n';
  }
}

void write_early_detection_table(std::ostream& out, std::span<const EarlyDetectionRow> rows) {
  out << pad("tau", 5) << pad("Precision", 12) << pad("Recall", 10) << pad("F1", 10)
      << pad("# of Edits", 12) << pad("% of Early Detected", 21) << '\n';
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << pad(fixed(r.tau, 2), 5) << pad(percent(m.precision), 12) << pad(percent(m.recall), 10)
        << pad(percent(m.f1), 10) << pad(fixed(r.early.mean_edits_at_detection, 2), 12)
        << pad(percent(r.early.fraction_early), 21) << '\n';
  }
}

void write_stream_report(std::ostream& out, std::span<const StreamOutcome> outcomes) {
  out << "user_id\tlabel\tedits\tflagged_at\tp_vandal\n";
  char buf[32];
  for (const auto& o : outcomes) {
    std::snprintf(buf, sizeof buf, "%.17g", o.probabilities.empty() ? 0.0 : o.probabilities.back());
    out << o.user_id << '\t' << to_string(o.label) << '\t' << o.length << '\t'
        << (o.flagged_at ? std::to_string(*o.flagged_at) : std::string("-")) << '\t' << buf << '\n';
  }
}

}  // namespace mlstm
