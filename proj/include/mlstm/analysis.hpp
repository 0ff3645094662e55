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

#ifndef MLSTM_ANALYSIS_HPP
#define MLSTM_ANALYSIS_HPP

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mlstm/embeddings.hpp"
#include "mlstm/ingestion.hpp"
#include "mlstm/model.hpp"

namespace mlstm {

struct UserEmbedding {
  std::string user_id;
  Label label = Label::benign;
  Vector vector;
};

/// Fused embedding s_T of every user under `params`.
std::vector<UserEmbedding> embed_users(const ModelParams& params,
                                       std::span<const UserSequence> users,
                                       const WordVectorStore& store);

inline constexpr int kNoise = -1;

struct ClusterSummary {
  int id = 0;
  std::size_t size = 0;
  std::size_t vandals = 0;
  std::size_t benign = 0;
};

struct ClusteringResult {
  std::vector<int> cluster;  // per input point, kNoise for noise
  double eps = 0.0;
  std::size_t min_pts = 1;
  std::vector<ClusterSummary> clusters;  // indexed by cluster id

  std::size_t num_clusters() const { return clusters.size(); }
  std::size_t noise_count() const;
  std::size_t vandal_only_clusters() const;
  std::size_t benign_only_clusters() const;
};

double euclidean_distance(const Vector& a, const Vector& b);

/// Classic DBSCAN with closed-ball neighbourhoods (distance <= eps, the
/// point itself included in its own count). Points are visited in
/// ascending user_id order, so cluster ids and border assignment do not
/// depend on input order. At eps = 0 clusters are groups of bit-identical
/// vectors.
ClusteringResult dbscan(std::span<const UserEmbedding> points, double eps, std::size_t min_pts);

/// 0 when either vector is zero.
double cosine_similarity(const Vector& a, const Vector& b);

struct Neighbor {
  std::string user_id;
  double similarity = 0.0;
};

/// Top-k most cosine-similar users to `query_id`, excluding the query
/// itself; ties broken by ascending user_id.
std::vector<Neighbor> cosine_neighbors(std::span<const UserEmbedding> points,
                                       const std::string& query_id, std::size_t k);

/// Header then `user_id label v1 ... vh` rows, tab separated, values at 17
/// significant digits. Returns the number of data rows.
std::size_t export_embeddings(std::ostream& out, std::span<const UserEmbedding> points);
std::vector<UserEmbedding> read_embeddings(std::istream& in);
std::vector<UserEmbedding> read_embeddings(const std::string& path);

/// `user_id cluster_id label` rows, cluster_id -1 for noise.
void write_cluster_report(std::ostream& out, std::span<const UserEmbedding> points,
                          const ClusteringResult& result);

}  // namespace mlstm

#endif  // MLSTM_ANALYSIS_HPP
