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

#ifndef MLSTM_EMBEDDINGS_HPP
#define MLSTM_EMBEDDINGS_HPP

#include <cstdint>
#include <istream>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mlstm/numerics.hpp"

namespace mlstm {

/// Lowercases ASCII letters and splits on runs of ASCII characters that are
/// not letters or digits. Bytes >= 0x80 are kept inside tokens so UTF-8
/// sequences stay intact.
std::vector<std::string> tokenize(std::string_view text);

/// Pretrained word vectors plus a cache of deterministic vectors for
/// out-of-vocabulary words. Vectors are never updated after loading.
class WordVectorStore {
 public:
  static constexpr double kOovBound = 0.05;

  explicit WordVectorStore(std::size_t dim, std::uint64_t oov_seed = 0);

  WordVectorStore(const WordVectorStore&) = delete;
  WordVectorStore& operator=(const WordVectorStore&) = delete;
  WordVectorStore(WordVectorStore&&) noexcept;
  WordVectorStore& operator=(WordVectorStore&&) noexcept;
  ~WordVectorStore();

  /// Reads `word v1 ... vd` lines. Blank lines are skipped; a line with the
  /// wrong number of values throws ParseError carrying its line number. A
  /// repeated word replaces the earlier vector and bumps duplicate_count().
  static WordVectorStore load(std::istream& in, std::size_t expected_dim,
                              std::uint64_t oov_seed = 0);
  static WordVectorStore load_file(const std::string& path, std::size_t expected_dim,
                                   std::uint64_t oov_seed = 0);

  void insert(const std::string& word, Vector v);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  std::size_t duplicate_count() const { return duplicates_; }
  std::uint64_t oov_seed() const { return oov_seed_; }
  bool contains(const std::string& word) const { return vectors_.count(word) != 0; }
  std::size_t oov_cache_size() const;

  /// Pretrained vector, or the cached OOV vector for `word` (generated from
  /// hash(word) and the OOV seed on first use). Safe to call concurrently.
  Vector lookup(const std::string& word) const;

  /// Mean of the token vectors of `text`; zero vector when it has no tokens.
  Vector embed_text(std::string_view text) const;

 private:
  Vector make_oov(const std::string& word) const;

  std::size_t dim_;
  std::uint64_t oov_seed_;
  std::size_t duplicates_ = 0;
  std::unordered_map<std::string, Vector> vectors_;
  mutable std::unordered_map<std::string, Vector> oov_cache_;
  mutable std::unique_ptr<std::mutex> oov_mutex_;
};

}  // namespace mlstm

#endif  // MLSTM_EMBEDDINGS_HPP
