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

#include "mlstm/analysis.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "dbscan_oracle.hpp"
#include "mlstm/error.hpp"
#include "mlstm/numerics.hpp"
#include "reference_model.hpp"

namespace mlstm {
namespace {

UserEmbedding point(std::string id, std::vector<double> v, Label label = Label::benign) {
  return {std::move(id), label, Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()))};
}

// Points on a coarse grid so that duplicates and exact-eps distances occur.
std::vector<UserEmbedding> random_points(SeededRng& rng, std::size_t n, int dim) {
  std::vector<UserEmbedding> pts;
  for (std::size_t i = 0; i < n; ++i) {
    Vector v(dim);
    for (int d = 0; d < dim; ++d) v[d] = static_cast<double>(rng.uniform_index(8)) * 0.25;
    char id[16];
    std::snprintf(id, sizeof id, "p%04zu", rng.uniform_index(100000));
    pts.push_back({std::string(id) + "_" + std::to_string(i),
                   rng.bernoulli(0.5) ? Label::vandal : Label::benign, v});
  }
  return pts;
}

TEST(Dbscan, MatchesBruteForceOracle) {
  SeededRng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(120);
    const int dim = 1 + static_cast<int>(rng.uniform_index(3));
    const auto pts = random_points(rng, n, dim);
    const double eps = 0.25 * static_cast<double>(rng.uniform_index(4));
    const std::size_t min_pts = 1 + rng.uniform_index(5);
    const auto got = dbscan(pts, eps, min_pts);
    EXPECT_EQ(got.cluster, oracle::dbscan_labels(pts, eps, min_pts))
        << "trial " << trial << " n=" << n << " eps=" << eps << " minPts=" << min_pts;
  }
}

TEST(Dbscan, ZeroEpsGroupsDuplicates) {
  std::vector<UserEmbedding> pts = {
      point("a", {1, 2}), point("b", {1, 2}), point("c", {3, 4}),
      point("d", {1, 2}), point("e", {3, 4}), point("f", {5, 6}),
  };
  const auto r = dbscan(pts, 0.0, 2);
  EXPECT_EQ(r.cluster, (std::vector<int>{0, 0, 1, 0, 1, kNoise}));
  EXPECT_EQ(r.num_clusters(), 2u);
  EXPECT_EQ(r.noise_count(), 1u);
}

TEST(Dbscan, SinglePointIsNoise) {
  std::vector<UserEmbedding> pts = {point("a", {0.0})};
  const auto r = dbscan(pts, 1.0, 3);
  EXPECT_EQ(r.cluster, std::vector<int>{kNoise});
  EXPECT_TRUE(dbscan(std::span<const UserEmbedding>{}, 1.0, 3).cluster.empty());
}

TEST(Dbscan, TwoBlobsAndSummaries) {
  SeededRng rng(5);
  std::vector<UserEmbedding> pts;
  for (int i = 0; i < 20; ++i) {
    const bool left = i < 10;
    pts.push_back(point("u" + std::to_string(100 + i),
                        {(left ? 0.0 : 10.0) + rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)},
                        left ? Label::vandal : Label::benign));
  }
  const auto r = dbscan(pts, 0.5, 3);
  ASSERT_EQ(r.num_clusters(), 2u);
  EXPECT_EQ(r.noise_count(), 0u);
  EXPECT_EQ(r.clusters[0].size, 10u);
  EXPECT_EQ(r.clusters[0].vandals, 10u);
  EXPECT_EQ(r.clusters[1].benign, 10u);
  EXPECT_EQ(r.vandal_only_clusters(), 1u);
  EXPECT_EQ(r.benign_only_clusters(), 1u);
}

TEST(Dbscan, BorderPointJoinsEarliestCluster) {
  // "m" reaches one core of each cluster but has only three neighbours
  // itself, so it is a border point shared by both.
  std::vector<UserEmbedding> pts = {
      point("x1", {1.0}),  point("x2", {1.9}),  point("x3", {1.9}),
      point("x4", {1.9}),  point("m", {0.0}),   point("a1", {-1.0}),
      point("a2", {-1.9}), point("a3", {-1.9}), point("a4", {-1.9}),
  };
  const auto r = dbscan(pts, 1.0, 4);
  EXPECT_EQ(r.cluster, (std::vector<int>{1, 1, 1, 1, 0, 0, 0, 0, 0}));
  EXPECT_EQ(r.cluster, oracle::dbscan_labels(pts, 1.0, 4));
}

TEST(Dbscan, InvariantToInputPermutation) {
  SeededRng rng(77);
  auto pts = random_points(rng, 80, 2);
  const auto base = dbscan(pts, 0.5, 3);
  std::map<std::string, int> by_id;
  for (std::size_t i = 0; i < pts.size(); ++i) by_id[pts[i].user_id] = base.cluster[i];
  for (int trial = 0; trial < 5; ++trial) {
    for (std::size_t i = pts.size() - 1; i > 0; --i)
      std::swap(pts[i], pts[rng.uniform_index(i + 1)]);
    const auto r = dbscan(pts, 0.5, 3);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(r.cluster[i], by_id[pts[i].user_id]);
  }
}

TEST(Dbscan, RejectsBadArguments) {
  std::vector<UserEmbedding> pts = {point("a", {0.0}), point("b", {0.0, 1.0})};
  EXPECT_THROW(dbscan(pts, -1.0, 2), Error);
  EXPECT_THROW(dbscan(pts, 1.0, 0), Error);
  EXPECT_THROW(dbscan(pts, 1.0, 2), DimensionError);
}

TEST(Cosine, SimilarityBasics) {
  const Vector a = Vector::Unit(3, 0), b = Vector::Unit(3, 1);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, -a), -1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, Vector::Zero(3)), 0.0);
}

TEST(Cosine, NeighborsRankingAndTies) {
  std::vector<UserEmbedding> pts = {
      point("q", {1, 1}), point("dup", {1, 1}), point("orth", {1, -1}),
      point("z", {2, 0}), point("y", {0, 3}),
  };
  const auto nn = cosine_neighbors(pts, "q", 10);
  ASSERT_EQ(nn.size(), 4u);
  EXPECT_EQ(nn[0].user_id, "dup");
  EXPECT_NEAR(nn[0].similarity, 1.0, 1e-15);
  // y and z tie; the smaller id comes first.
  EXPECT_EQ(nn[1].user_id, "y");
  EXPECT_EQ(nn[2].user_id, "z");
  EXPECT_EQ(nn[3].user_id, "orth");
  EXPECT_DOUBLE_EQ(nn[3].similarity, 0.0);
  EXPECT_EQ(cosine_neighbors(pts, "q", 2).size(), 2u);
  EXPECT_THROW(cosine_neighbors(pts, "missing", 3), Error);
  EXPECT_THROW(cosine_neighbors(pts, "q", 0), Error);
}

TEST(Cosine, NeighborsMatchExhaustiveRanking) {
  SeededRng rng(9);
  std::vector<UserEmbedding> pts;
  for (int i = 0; i < 50; ++i) {
    Vector v(6);
    for (int d = 0; d < 6; ++d) v[d] = rng.uniform(-1, 1);
    pts.push_back({"n" + std::to_string(i), Label::benign, v});
  }
  for (const auto& q : pts) {
    std::vector<std::pair<double, std::string>> all;
    for (const auto& p : pts)
      if (p.user_id != q.user_id)
        all.push_back({-(q.vector.dot(p.vector) / (q.vector.norm() * p.vector.norm())), p.user_id});
    std::sort(all.begin(), all.end());
    const auto nn = cosine_neighbors(pts, q.user_id, 10);
    ASSERT_EQ(nn.size(), 10u);
    for (std::size_t r = 0; r < 10; ++r) {
      EXPECT_EQ(nn[r].user_id, all[r].second);
      EXPECT_NEAR(nn[r].similarity, -all[r].first, 1e-12);
    }
  }
}

TEST(Export, RoundTripAndShape) {
  SeededRng rng(3);
  std::vector<UserEmbedding> pts;
  for (int i = 0; i < 7; ++i) {
    Vector v(4);
    for (int d = 0; d < 4; ++d) v[d] = rng.uniform(-1, 1) * 1e-3;
    pts.push_back({"u" + std::to_string(i), i % 2 ? Label::vandal : Label::benign, v});
  }
  std::ostringstream out;
  EXPECT_EQ(export_embeddings(out, pts), 7u);
  const std::string text = out.str();
  std::istringstream lines(text);
  std::string line;
  std::size_t nlines = 0;
  while (std::getline(lines, line)) {
    ++nlines;
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 5);
  }
  EXPECT_EQ(nlines, 8u);
  EXPECT_EQ(text.substr(0, text.find('\n')), "user_id\tlabel\tv1\tv2\tv3\tv4");

  std::istringstream in(text);
  const auto back = read_embeddings(in);
  ASSERT_EQ(back.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(back[i].user_id, pts[i].user_id);
    EXPECT_EQ(back[i].label, pts[i].label);
    EXPECT_EQ(back[i].vector, pts[i].vector);  // 17 digits round-trip exactly
  }
}

TEST(Export, EmptyIsHeaderOnly) {
  std::ostringstream out;
  EXPECT_EQ(export_embeddings(out, {}), 0u);
  EXPECT_EQ(out.str(), "user_id\tlabel\n");
  std::istringstream in(out.str());
  EXPECT_TRUE(read_embeddings(in).empty());
}

TEST(Export, ReadRejectsMalformedRows) {
  std::istringstream bad_header("id\tlabel\tv1\n");
  EXPECT_THROW(read_embeddings(bad_header), ParseError);
  std::istringstream short_row("user_id\tlabel\tv1\tv2\nu1\tvandal\t0.5\n");
  try {
    read_embeddings(short_row);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream bad_value("user_id\tlabel\tv1\nu1\tvandal\tnan\n");
  EXPECT_THROW(read_embeddings(bad_value), ParseError);
  EXPECT_THROW(read_embeddings(std::string("/nonexistent/emb.tsv")), IoError);
}

TEST(ClusterReport, Format) {
  std::vector<UserEmbedding> pts = {point("a", {0.0}, Label::vandal), point("b", {0.0}),
                                    point("c", {9.0})};
  const auto r = dbscan(pts, 0.0, 2);
  std::ostringstream out;
  write_cluster_report(out, pts, r);
  EXPECT_EQ(out.str(), "user_id\tcluster_id\tlabel\na\t0\tvandal\nb\t0\tbenign\nc\t-1\tbenign\n");
}

TEST(EmbedUsers, MatchesForwardEmbedding) {
  auto g = reference::random_case({3, 3, 2}, 4, 5, 1);
  const auto trace = forward_user(g.user, g.params);
  const auto ref = reference::run(g.params, g.user, g.label);
  const Vector s = trace.embedding();
  ASSERT_EQ(static_cast<std::size_t>(s.size()), ref.s.size());
  for (std::size_t k = 0; k < ref.s.size(); ++k)
    EXPECT_NEAR(s[static_cast<Eigen::Index>(k)], ref.s[k], 1e-14);
}

}  // namespace
}  // namespace mlstm
