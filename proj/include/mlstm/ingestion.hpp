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

#ifndef MLSTM_INGESTION_HPP
#define MLSTM_INGESTION_HPP

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mlstm/embeddings.hpp"
#include "mlstm/numerics.hpp"

namespace mlstm {

/// Class indices used by the classifier; vandal is the positive class.
enum class Label : int { benign = 0, vandal = 1 };

constexpr int kNumClasses = 2;
/// Title, categories, revert status.
constexpr std::size_t kNumAspects = 3;
constexpr std::size_t kRevertDim = 2;

const char* to_string(Label label);
Label parse_label(std::string_view text);

struct EditRecord {
  std::string user_id;
  std::int64_t page_id = 0;
  std::string title;
  std::vector<std::string> categories;
  std::int64_t timestamp = 0;  // UTC seconds
  bool reverted = false;

  bool operator==(const EditRecord&) const = default;
};

struct UserSequence {
  std::string user_id;
  Label label = Label::benign;
  std::vector<EditRecord> edits;  // ascending timestamp, never empty

  std::int64_t first_timestamp() const { return edits.front().timestamp; }
  bool operator==(const UserSequence&) const = default;
};

/// One input-vector sequence per aspect, all of length T.
struct AspectSequences {
  std::string user_id;
  Label label = Label::benign;
  std::vector<std::vector<Vector>> aspects;  // [aspect][t]

  std::size_t length() const { return aspects.empty() ? 0 : aspects.front().size(); }
};

using LabelMap = std::map<std::string, Label>;

/// One JSON object per line with keys user_id, page_id, title, categories,
/// timestamp, reverted. Blank lines are skipped.
std::vector<EditRecord> parse_edit_log(std::istream& in);
std::vector<EditRecord> read_edit_log(const std::string& path);
void write_edit_log(std::ostream& out, const std::vector<EditRecord>& records);

/// `user_id<TAB>label` rows, label in {vandal, benign}.
LabelMap parse_labels(std::istream& in);
LabelMap read_labels(const std::string& path);
void write_labels(std::ostream& out, const LabelMap& labels);

/// Drops edits on meta pages (titles containing User:, Talk:, User talk:,
/// Wikipedia:). Order preserved.
std::vector<EditRecord> filter_meta_edits(std::vector<EditRecord> records);
bool is_meta_title(std::string_view title);

/// Groups by user, sorts each user's edits by timestamp (stable, so equal
/// timestamps keep file order). Output ordered by user_id.
std::vector<UserSequence> group_into_user_sequences(const std::vector<EditRecord>& records,
                                                    const LabelMap& labels);

/// Encodes one edit into its three aspect input vectors.
std::vector<Vector> encode_edit(const EditRecord& edit, const WordVectorStore& store);

AspectSequences build_aspect_sequences(const UserSequence& user, const WordVectorStore& store);

/// First T edits of `user` only.
AspectSequences build_aspect_sequences(const UserSequence& user, const WordVectorStore& store,
                                       std::size_t prefix);

struct DataSplit {
  std::vector<UserSequence> train;
  std::vector<UserSequence> test;
};

/// Users whose first edit is at or before `cutoff` train, the rest test.
DataSplit chronological_split(const std::vector<UserSequence>& users, std::int64_t cutoff);

struct SyntheticConfig {
  std::size_t n_users = 400;
  double mean_edits = 8.0;
  double separability = 1.0;
  std::uint64_t seed = 0;
  std::size_t pool_size = 40;            // words per topic pool
  std::int64_t start_time = 1356998400;  // 2013-01-01T00:00:00Z
  int span_months = 19;
};

constexpr std::int64_t kSecondsPerMonth = 30LL * 24 * 3600;

/// Balanced synthetic users. Vandals revert with probability
/// 0.1 + 0.8 * separability, benign users with 0.1; vandal and benign
/// titles come from word pools overlapping in (1 - separability) of their
/// words. Pure function of the config.
std::vector<UserSequence> gen_synthetic(const SyntheticConfig& cfg);

/// Vocabulary used by gen_synthetic for a given pool size.
std::vector<std::string> synthetic_vocabulary(std::size_t pool_size);

/// Deterministic random word vectors for `words` in the word-vector text format.
void write_synthetic_vectors(std::ostream& out, const std::vector<std::string>& words,
                             std::size_t dim, std::uint64_t seed);

std::vector<EditRecord> flatten(const std::vector<UserSequence>& users);
LabelMap labels_of(const std::vector<UserSequence>& users);

}  // namespace mlstm

#endif  // MLSTM_INGESTION_HPP
