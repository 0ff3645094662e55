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

#ifndef MLSTM_DETECTION_HPP
#define MLSTM_DETECTION_HPP

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mlstm/embeddings.hpp"
#include "mlstm/ingestion.hpp"
#include "mlstm/model.hpp"

namespace mlstm {

struct DetectionConfig {
  double tau = 0.5;

  /// Throws unless 0 < tau < 1.
  void validate() const;
};

/// A user is a vandal when P(vandal) is strictly greater than tau.
inline bool exceeds_threshold(double p_vandal, double tau) { return p_vandal > tau; }

struct Prediction {
  double probability = 0.0;  // P(vandal)
  Label verdict = Label::benign;
};

Prediction predict_user(const ModelParams& params, const AspectSequences& a,
                        const DetectionConfig& cfg);

/// Recurrent state of one user being scored edit by edit.
struct StreamState {
  std::vector<Vector> h, c;               // per aspect
  std::size_t t = 0;                      // edits consumed
  std::optional<std::size_t> flagged_at;  // 1-based step of first crossing; latched
  double last_probability = 0.0;

  static StreamState initial(const ModelParams& params);
};

struct StreamStepResult {
  double probability = 0.0;
  bool flagged = false;  // latched flag after this step
};

/// Advances every aspect LSTM by one edit, fuses the current hidden states
/// and classifies. Uses the same kernels as forward_user, so the
/// probability after t steps equals predict_user on the first t edits bit
/// for bit.
StreamStepResult stream_step(StreamState& state, const EditRecord& edit, const ModelParams& params,
                             const WordVectorStore& store, const DetectionConfig& cfg);

/// Same, with the aspect vectors of the edit already encoded.
StreamStepResult stream_step(StreamState& state, std::span<const Vector> inputs,
                             const ModelParams& params, const DetectionConfig& cfg);

struct StreamOutcome {
  std::string user_id;
  Label label = Label::benign;
  std::size_t length = 0;
  std::optional<std::size_t> flagged_at;
  std::vector<double> probabilities;  // after each edit
};

StreamOutcome stream_user(const ModelParams& params, const UserSequence& user,
                          const WordVectorStore& store, const DetectionConfig& cfg);

/// First 1-based step whose probability exceeds tau.
std::optional<std::size_t> first_crossing(std::span<const double> probabilities, double tau);

struct MetricsReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0, accuracy = 0.0;
  // False when the ratio had a zero denominator and was reported as 0.
  bool precision_defined = true, recall_defined = true, f1_defined = true;

  bool degenerate() const { return !precision_defined || !recall_defined || !f1_defined; }
};

/// Vandal is the positive class.
MetricsReport evaluate(std::span<const Label> verdicts, std::span<const Label> labels);

struct EarlyStats {
  std::size_t vandals = 0;
  std::size_t early_detected = 0;
  double mean_edits_at_detection = 0.0;  // over early-detected vandals
  double fraction_early = 0.0;           // early_detected / vandals
};

/// A vandal counts as early-detected when flagged strictly before its last
/// recorded edit (the block point).
EarlyStats early_stats(std::span<const StreamOutcome> outcomes);

struct DetectionRow {
  double tau = 0.0;
  MetricsReport metrics;
};

struct EarlyDetectionRow {
  double tau = 0.0;
  MetricsReport metrics;
  EarlyStats early;
};

/// Batch verdicts from final probabilities over a threshold grid.
std::vector<DetectionRow> detection_sweep(std::span<const double> p_vandal,
                                          std::span<const Label> labels,
                                          std::span<const double> taus);

/// Latched streaming verdicts and early statistics over a threshold grid.
std::vector<EarlyDetectionRow> early_detection_sweep(std::span<const StreamOutcome> outcomes,
                                                     std::span<const double> taus);

void write_detection_tsv(std::ostream& out, std::span<const DetectionRow> rows);
void write_detection_table(std::ostream& out, std::span<const DetectionRow> rows);
void write_early_detection_tsv(std::ostream& out, std::span<const EarlyDetectionRow> rows);
void write_early_detection_table(std::ostream& out, std::span<const EarlyDetectionRow> rows);

/// Per-user streaming rows: user_id, label, edits, flagged_at (or -), final P(vandal).
void write_stream_report(std::ostream& out, std::span<const StreamOutcome> outcomes);

}  // namespace mlstm

#endif  // MLSTM_DETECTION_HPP
