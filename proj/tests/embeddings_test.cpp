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

#include <gtest/gtest.h>

#include <sstream>
#include <thread>

namespace mlstm {
namespace {

std::string line_with(std::string_view word, int n) {
  std::string line(word);
  for (int i = 0; i < n; ++i) line += " " + std::to_string(0.01 * i);
  return line + "\n";
}

TEST(LoadWordVectors, SingleFiftyDimLine) {
  std::istringstream in(line_with("bohr", 50));
  const auto store = WordVectorStore::load(in, 50);
  EXPECT_EQ(store.size(), 1u);
  EXPECT_EQ(store.dim(), 50u);
  EXPECT_DOUBLE_EQ(store.lookup("bohr")[49], 0.49);
}

TEST(LoadWordVectors, EmptyFile) {
  std::istringstream in("");
  const auto store = WordVectorStore::load(in, 50);
  EXPECT_EQ(store.size(), 0u);
  EXPECT_EQ(store.dim(), 50u);
}

TEST(LoadWordVectors, WrongArityNamesLine) {
  std::istringstream in(line_with("a", 50) + line_with("b", 49));
  try {
    WordVectorStore::load(in, 50);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(LoadWordVectors, DuplicateLastWins) {
  std::istringstream in("w 1 2\nw 3 4\n");
  const auto store = WordVectorStore::load(in, 2);
  EXPECT_EQ(store.size(), 1u);
  EXPECT_EQ(store.duplicate_count(), 1u);
  EXPECT_DOUBLE_EQ(store.lookup("w")[0], 3.0);
}

TEST(LoadWordVectors, BadNumber) {
  std::istringstream in("w 1 x\n");
  EXPECT_THROW(WordVectorStore::load(in, 2), ParseError);
}

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("Niels Bohr"), (std::vector<std::string>{"niels", "bohr"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("X-Factor (U.S.)"), (std::vector<std::string>{"x", "factor", "u", "s"}));
  EXPECT_EQ(tokenize("  --  "), std::vector<std::string>{});
  EXPECT_EQ(tokenize("Arctic Monkeys 2013"),
            (std::vector<std::string>{"arctic", "monkeys", "2013"}));
}

TEST(EmbedText, AveragesVectors) {
  std::istringstream in("a 1 0\nb 0 1\n");
  const auto store = WordVectorStore::load(in, 2);
  const Vector v = store.embed_text("a b");
  EXPECT_DOUBLE_EQ(v[0], 0.5);
  EXPECT_DOUBLE_EQ(v[1], 0.5);
  EXPECT_EQ(store.embed_text("A"), store.lookup("a"));
  EXPECT_EQ(store.embed_text(""), Vector::Zero(2));
  EXPECT_EQ(store.embed_text("!!"), Vector::Zero(2));
}

TEST(EmbedText, OovIsCachedAndDeterministic) {
  WordVectorStore store(8, 99);
  const Vector first = store.embed_text("zyzzyva");
  const Vector second = store.embed_text("zyzzyva");
  EXPECT_EQ(first, second);
  EXPECT_EQ(store.oov_cache_size(), 1u);
  EXPECT_LE(first.cwiseAbs().maxCoeff(), WordVectorStore::kOovBound);

  // A fresh store with the same seed regenerates the same vector.
  WordVectorStore other(8, 99);
  EXPECT_EQ(other.embed_text("zyzzyva"), first);
  WordVectorStore reseeded(8, 100);
  EXPECT_NE(reseeded.embed_text("zyzzyva"), first);
}

TEST(EmbedText, PermutationInvariantAndBounded) {
  std::istringstream in("red 0.5 -0.2 0.1\ngreen -0.4 0.3 0.9\nblue 0.1 0.1 -0.7\n");
  const auto store = WordVectorStore::load(in, 3);
  const Vector a = store.embed_text("red green blue");
  const Vector b = store.embed_text("blue red green");
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
  EXPECT_LE(a.cwiseAbs().maxCoeff(), 0.9);
}

TEST(EmbedText, ConcurrentOovLookupsAgree) {
  WordVectorStore store(16, 5);
  std::vector<Vector> results(8);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] { results[static_cast<std::size_t>(i)] = store.lookup("unseen"); });
  }
  for (auto& t : threads) t.join();
  for (const auto& r : results) EXPECT_EQ(r, results.front());
  EXPECT_EQ(store.oov_cache_size(), 1u);
}

}  // namespace
}  // namespace mlstm
