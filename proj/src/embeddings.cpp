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

#include "mlstm/embeddings.hpp"

#include <charconv>
#include <fstream>

namespace mlstm {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                               : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

WordVectorStore::WordVectorStore(std::size_t dim, std::uint64_t oov_seed)
    : dim_(dim), oov_seed_(oov_seed), oov_mutex_(std::make_unique<std::mutex>()) {
  if (dim == 0) throw DimensionError("word vector dimension must be positive");
}

WordVectorStore::WordVectorStore(WordVectorStore&&) noexcept = default;
WordVectorStore& WordVectorStore::operator=(WordVectorStore&&) noexcept = default;
WordVectorStore::~WordVectorStore() = default;

WordVectorStore WordVectorStore::load(std::istream& in, std::size_t expected_dim,
                                      std::uint64_t oov_seed) {
  WordVectorStore store(expected_dim, oov_seed);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() - 1 != expected_dim) {
      throw ParseError("expected " + std::to_string(expected_dim) + " values, found " +
                           std::to_string(fields.size() - 1),
                       lineno);
    }
    Vector v(static_cast<Eigen::Index>(expected_dim));
    for (std::size_t k = 0; k < expected_dim; ++k) {
      const auto f = fields[k + 1];
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(value)) {
        throw ParseError("bad value '" + std::string(f) + "'", lineno);
      }
      v[static_cast<Eigen::Index>(k)] = value;
    }
    store.insert(std::string(fields[0]), std::move(v));
  }
  return store;
}

WordVectorStore WordVectorStore::load_file(const std::string& path, std::size_t expected_dim,
                                           std::uint64_t oov_seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open word vectors: " + path);
  try {
    return load(in, expected_dim, oov_seed);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void WordVectorStore::insert(const std::string& word, Vector v) {
  if (static_cast<std::size_t>(v.size()) != dim_) {
    throw DimensionError("word vector for '" + word + "' has wrong dimension");
  }
  auto [it, inserted] = vectors_.insert_or_assign(word, std::move(v));
  if (!inserted) ++duplicates_;
}

std::size_t WordVectorStore::oov_cache_size() const {
  std::lock_guard<std::mutex> lock(*oov_mutex_);
  return oov_cache_.size();
}

Vector WordVectorStore::make_oov(const std::string& word) const {
  SeededRng rng(splitmix64(fnv1a64(word) ^ oov_seed_));
  Vector v(static_cast<Eigen::Index>(dim_));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-kOovBound, kOovBound);
  return v;
}

Vector WordVectorStore::lookup(const std::string& word) const {
  if (auto it = vectors_.find(word); it != vectors_.end()) return it->second;
  std::lock_guard<std::mutex> lock(*oov_mutex_);
  auto it = oov_cache_.find(word);
  if (it == oov_cache_.end()) it = oov_cache_.emplace(word, make_oov(word)).first;
  return it->second;
}

Vector WordVectorStore::embed_text(std::string_view text) const {
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(dim_));
  const auto tokens = tokenize(text);
  if (tokens.empty()) return sum;
  for (const auto& t : tokens) sum += lookup(t);
  return sum / static_cast<double>(tokens.size());
}

}  // namespace mlstm
