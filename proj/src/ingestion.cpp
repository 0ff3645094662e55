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

#include "mlstm/ingestion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

namespace mlstm {

using nlohmann::json;

const char* to_string(Label label) { return label == Label::vandal ? "vandal" : "benign"; }

Label parse_label(std::string_view text) {
  if (text == "vandal") return Label::vandal;
  if (text == "benign") return Label::benign;
  throw ParseError("unknown label '" + std::string(text) + "'");
}

namespace {

const json& require(const json& obj, const char* key, std::size_t lineno) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing key '") + key + "'", lineno);
  return *it;
}

[[noreturn]] void wrong_type(const char* key, std::size_t lineno) {
  throw ParseError(std::string("key '") + key + "' has the wrong type", lineno);
}

EditRecord parse_edit_line(const std::string& line, std::size_t lineno) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
  }
  if (!obj.is_object()) throw ParseError("expected a JSON object", lineno);

  EditRecord r;
  const auto& user = require(obj, "user_id", lineno);
  if (!user.is_string()) wrong_type("user_id", lineno);
  r.user_id = user.get<std::string>();

  const auto& page = require(obj, "page_id", lineno);
  if (!page.is_number_integer()) wrong_type("page_id", lineno);
  r.page_id = page.get<std::int64_t>();

  const auto& title = require(obj, "title", lineno);
  if (!title.is_string()) wrong_type("title", lineno);
  r.title = title.get<std::string>();
  if (r.title.empty()) throw ParseError("empty title", lineno);

  const auto& cats = require(obj, "categories", lineno);
  if (!cats.is_array()) wrong_type("categories", lineno);
  for (const auto& c : cats) {
    if (!c.is_string()) wrong_type("categories", lineno);
    r.categories.push_back(c.get<std::string>());
  }

  const auto& ts = require(obj, "timestamp", lineno);
  if (!ts.is_number_integer()) wrong_type("timestamp", lineno);
  r.timestamp = ts.get<std::int64_t>();
  if (r.timestamp < 0) throw ParseError("negative timestamp", lineno);

  const auto& rev = require(obj, "reverted", lineno);
  if (!rev.is_boolean()) wrong_type("reverted", lineno);
  r.reverted = rev.get<bool>();
  return r;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

std::vector<EditRecord> parse_edit_log(std::istream& in) {
  std::vector<EditRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    records.push_back(parse_edit_line(line, lineno));
  }
  return records;
}

std::vector<EditRecord> read_edit_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edit log: " + path);
  try {
    return parse_edit_log(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_edit_log(std::ostream& out, const std::vector<EditRecord>& records) {
  for (const auto& r : records) {
    nlohmann::ordered_json obj;
    obj["user_id"] = r.user_id;
    obj["page_id"] = r.page_id;
    obj["title"] = r.title;
    obj["categories"] = r.categories;
    obj["timestamp"] = r.timestamp;
    obj["reverted"] = r.reverted;
    out << obj.dump() << '\n';
  }
}

LabelMap parse_labels(std::istream& in) {
  LabelMap labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected user_id<TAB>label", lineno);
    const std::string user = line.substr(0, tab);
    const std::string label = line.substr(tab + 1);
    if (lineno == 1 && user == "user_id" && label == "label") continue;
    try {
      labels[user] = parse_label(label);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return labels;
}

LabelMap read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels: " + path);
  try {
    return parse_labels(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_labels(std::ostream& out, const LabelMap& labels) {
  for (const auto& [user, label] : labels) out << user << '\t' << to_string(label) << '\n';
}

bool is_meta_title(std::string_view title) {
  // Case-sensitive substring match.
  static constexpr std::array<std::string_view, 4> kMeta = {
      "User:", "Talk:", "User talk:", "Wikipedia:"};
  return std::any_of(kMeta.begin(), kMeta.end(),
                     [&](std::string_view m) { return title.find(m) != std::string_view::npos; });
}

std::vector<EditRecord> filter_meta_edits(std::vector<EditRecord> records) {
  std::erase_if(records, [](const EditRecord& r) { return is_meta_title(r.title); });
  return records;
}

std::vector<UserSequence> group_into_user_sequences(const std::vector<EditRecord>& records,
                                                    const LabelMap& labels) {
  std::map<std::string, std::vector<EditRecord>> by_user;
  for (const auto& r : records) {
    if (!labels.count(r.user_id)) throw Error("user '" + r.user_id + "' has no label");
    by_user[r.user_id].push_back(r);
  }
  std::vector<UserSequence> users;
  users.reserve(by_user.size());
  for (auto& [user, edits] : by_user) {
    std::stable_sort(edits.begin(), edits.end(), [](const EditRecord& a, const EditRecord& b) {
      return a.timestamp < b.timestamp;
    });
    users.push_back(UserSequence{user, labels.at(user), std::move(edits)});
  }
  return users;
}

std::vector<Vector> encode_edit(const EditRecord& edit, const WordVectorStore& store) {
  std::string categories;
  for (const auto& c : edit.categories) {
    if (!categories.empty()) categories.push_back(' ');
    categories += c;
  }
  Vector revert = Vector::Zero(kRevertDim);
  revert[edit.reverted ? 1 : 0] = 1.0;
  return {store.embed_text(edit.title), store.embed_text(categories), std::move(revert)};
}

AspectSequences build_aspect_sequences(const UserSequence& user, const WordVectorStore& store,
                                       std::size_t prefix) {
  AspectSequences out;
  out.user_id = user.user_id;
  out.label = user.label;
  out.aspects.resize(kNumAspects);
  const std::size_t n = std::min(prefix, user.edits.size());
  for (auto& a : out.aspects) a.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    auto step = encode_edit(user.edits[t], store);
    for (std::size_t m = 0; m < kNumAspects; ++m) out.aspects[m].push_back(std::move(step[m]));
  }
  return out;
}

AspectSequences build_aspect_sequences(const UserSequence& user, const WordVectorStore& store) {
  return build_aspect_sequences(user, store, user.edits.size());
}

DataSplit chronological_split(const std::vector<UserSequence>& users, std::int64_t cutoff) {
  DataSplit split;
  for (const auto& u : users) {
    (u.first_timestamp() <= cutoff ? split.train : split.test).push_back(u);
  }
  return split;
}

std::vector<std::string> synthetic_vocabulary(std::size_t pool_size) {
  std::vector<std::string> words;
  words.reserve(2 * pool_size);
  char buf[32];
  for (std::size_t i = 0; i < 2 * pool_size; ++i) {
    std::snprintf(buf, sizeof buf, "topic%03zu", i);
    words.emplace_back(buf);
  }
  return words;
}

namespace {

std::string draw_phrase(SeededRng& rng, const std::vector<std::string>& vocab,
                        std::size_t pool_begin, std::size_t pool_size, std::size_t max_words) {
  const std::size_t n = 1 + rng.uniform_index(max_words);
  std::string text;
  for (std::size_t k = 0; k < n; ++k) {
    if (k) text.push_back(' ');
    std::string w = vocab[pool_begin + rng.uniform_index(pool_size)];
    if (k == 0) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    text += w;
  }
  return text;
}

}  // namespace

std::vector<UserSequence> gen_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_users == 0) throw Error("gen_synthetic: n_users must be > 0");
  if (!(cfg.mean_edits >= 1.0)) throw Error("gen_synthetic: mean_edits must be >= 1");
  if (!(cfg.separability >= 0.0 && cfg.separability <= 1.0)) {
    throw Error("gen_synthetic: separability must be in [0, 1]");
  }
  if (cfg.pool_size == 0) throw Error("gen_synthetic: pool_size must be > 0");

  const auto vocab = synthetic_vocabulary(cfg.pool_size);
  const auto overlap = static_cast<std::size_t>(
      std::lround((1.0 - cfg.separability) * static_cast<double>(cfg.pool_size)));
  const std::size_t benign_pool = 0;
  const std::size_t vandal_pool = cfg.pool_size - overlap;
  const double vandal_revert = 0.1 + 0.8 * cfg.separability;
  const double benign_revert = 0.1;
  // Geometric extra-edit count with mean (mean_edits - 1).
  const double stop_p = 1.0 / cfg.mean_edits;
  const std::int64_t span = static_cast<std::int64_t>(cfg.span_months) * kSecondsPerMonth;

  SeededRng rng(cfg.seed);
  std::vector<UserSequence> users;
  users.reserve(cfg.n_users);
  char id[32];
  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    UserSequence u;
    std::snprintf(id, sizeof id, "u%06zu", i);
    u.user_id = id;
    u.label = (i % 2 == 0) ? Label::vandal : Label::benign;
    const bool vandal = u.label == Label::vandal;
    const std::size_t pool = vandal ? vandal_pool : benign_pool;
    const double p_revert = vandal ? vandal_revert : benign_revert;

    std::size_t T = 1;
    if (stop_p < 1.0) {
      const double unit = 1.0 - rng.next_unit();  // (0, 1]
      T += static_cast<std::size_t>(std::floor(std::log(unit) / std::log(1.0 - stop_p)));
    }
    std::int64_t ts = cfg.start_time + static_cast<std::int64_t>(
                                           rng.uniform_index(static_cast<std::uint64_t>(span)));
    for (std::size_t t = 0; t < T; ++t) {
      EditRecord e;
      e.user_id = u.user_id;
      e.title = draw_phrase(rng, vocab, pool, cfg.pool_size, 3);
      e.page_id = static_cast<std::int64_t>(fnv1a64(e.title) % 100000000ULL);
      const std::size_t n_cats = rng.uniform_index(3);
      for (std::size_t c = 0; c < n_cats; ++c) {
        e.categories.push_back(draw_phrase(rng, vocab, pool, cfg.pool_size, 2));
      }
      e.timestamp = ts;
      e.reverted = rng.bernoulli(p_revert);
      u.edits.push_back(std::move(e));
      ts += 60 + static_cast<std::int64_t>(rng.uniform_index(2 * 24 * 3600));
    }
    users.push_back(std::move(u));
  }
  return users;
}

void write_synthetic_vectors(std::ostream& out, const std::vector<std::string>& words,
                             std::size_t dim, std::uint64_t seed) {
  SeededRng rng(splitmix64(seed ^ 0x5EC7095ULL));
  char buf[40];
  for (const auto& w : words) {
    out << w;
    for (std::size_t k = 0; k < dim; ++k) {
      std::snprintf(buf, sizeof buf, " %.8g", rng.uniform(-0.5, 0.5));
      out << buf;
    }
    out << '\n';
  }
}

std::vector<EditRecord> flatten(const std::vector<UserSequence>& users) {
  std::vector<EditRecord> out;
  for (const auto& u : users) out.insert(out.end(), u.edits.begin(), u.edits.end());
  return out;
}

LabelMap labels_of(const std::vector<UserSequence>& users) {
  LabelMap labels;
  for (const auto& u : users) labels[u.user_id] = u.label;
  return labels;
}

}  // namespace mlstm
