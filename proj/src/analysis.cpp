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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <numeric>

namespace mlstm {

std::vector<UserEmbedding> embed_users(const ModelParams& params,
                                       std::span<const UserSequence> users,
                                       const WordVectorStore& store) {
  std::vector<UserEmbedding> out;
  out.reserve(users.size());
  for (const auto& u : users) {
    const ForwardTrace trace = forward_user(build_aspect_sequences(u, store), params);
    out.push_back({u.user_id, u.label, trace.embedding()});
  }
  return out;
}

std::size_t ClusteringResult::noise_count() const {
  return static_cast<std::size_t>(std::count(cluster.begin(), cluster.end(), kNoise));
}

std::size_t ClusteringResult::vandal_only_clusters() const {
  return static_cast<std::size_t>(std::count_if(
      clusters.begin(), clusters.end(), [](const ClusterSummary& c) { return c.benign == 0; }));
}

std::size_t ClusteringResult::benign_only_clusters() const {
  return static_cast<std::size_t>(std::count_if(
      clusters.begin(), clusters.end(), [](const ClusterSummary& c) { return c.vandals == 0; }));
}

double euclidean_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("euclidean_distance: dimension mismatch");
  double sq = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

ClusteringResult dbscan(std::span<const UserEmbedding> points, double eps, std::size_t min_pts) {
  if (!(eps >= 0.0)) throw Error("dbscan: eps must be >= 0");
  if (min_pts < 1) throw Error("dbscan: min_pts must be >= 1");
  ClusteringResult result;
  result.eps = eps;
  result.min_pts = min_pts;
  const std::size_t n = points.size();
  if (n == 0) return result;
  for (const auto& p : points) {
    if (p.vector.size() != points.front().vector.size()) {
      throw DimensionError("dbscan: embeddings differ in dimension");
    }
  }

  // Visit order: ascending user_id, input index as tie-break.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a].user_id < points[b].user_id;
  });

  auto region = [&](std::size_t i) {
    std::vector<std::size_t> nb;
    for (std::size_t j : order) {
      if (euclidean_distance(points[i].vector, points[j].vector) <= eps) nb.push_back(j);
    }
    return nb;
  };

  constexpr int kUnvisited = -2;
  std::vector<int>& label = result.cluster;
  label.assign(n, kUnvisited);
  int next_cluster = 0;
  for (std::size_t i : order) {
    if (label[i] != kUnvisited) continue;
    auto seeds = region(i);
    if (seeds.size() < min_pts) {
      label[i] = kNoise;
      continue;
    }
    const int c = next_cluster++;
    label[i] = c;
    std::deque<std::size_t> queue(seeds.begin(), seeds.end());
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      if (label[q] == kNoise) label[q] = c;  // border point
      if (label[q] != kUnvisited) continue;
      label[q] = c;
      auto nb = region(q);
      if (nb.size() >= min_pts) queue.insert(queue.end(), nb.begin(), nb.end());
    }
  }

  result.clusters.resize(static_cast<std::size_t>(next_cluster));
  for (int c = 0; c < next_cluster; ++c) result.clusters[static_cast<std::size_t>(c)].id = c;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] == kNoise) continue;
    auto& s = result.clusters[static_cast<std::size_t>(label[i])];
    ++s.size;
    ++(points[i].label == Label::vandal ? s.vandals : s.benign);
  }
  return result;
}

double cosine_similarity(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("cosine_similarity: dimension mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

std::vector<Neighbor> cosine_neighbors(std::span<const UserEmbedding> points,
                                       const std::string& query_id, std::size_t k) {
  if (k < 1) throw Error("cosine_neighbors: k must be >= 1");
  auto q = std::find_if(points.begin(), points.end(),
                        [&](const UserEmbedding& p) { return p.user_id == query_id; });
  if (q == points.end()) throw Error("cosine_neighbors: unknown user '" + query_id + "'");
  std::vector<Neighbor> all;
  for (const auto& p : points) {
    if (p.user_id == query_id) continue;
    all.push_back({p.user_id, cosine_similarity(q->vector, p.vector)});
  }
  const auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.user_id < b.user_id;
  };
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    better);
  all.resize(keep);
  return all;
}

std::size_t export_embeddings(std::ostream& out, std::span<const UserEmbedding> points) {
  const Eigen::Index h = points.empty() ? 0 : points.front().vector.size();
  out << "user_id\tlabel";
  for (Eigen::Index i = 0; i < h; ++i) out << "\tv" << (i + 1);
  out << '\n';
  char buf[40];
  for (const auto& p : points) {
    if (p.vector.size() != h) throw DimensionError("export_embeddings: dimension mismatch");
    out << p.user_id << '\t' << to_string(p.label);
    for (Eigen::Index i = 0; i < h; ++i) {
      std::snprintf(buf, sizeof buf, "\t%.17g", p.vector[i]);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("export_embeddings: write failed");
  return points.size();
}

std::vector<UserEmbedding> read_embeddings(std::istream& in) {
  std::vector<UserEmbedding> points;
  std::string line;
  std::size_t lineno = 0;
  std::size_t fields_expected = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto tab = rest.find('\t');
      fields.push_back(rest.substr(0, tab));
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (lineno == 1) {
      if (fields.size() < 2 || fields[0] != "user_id" || fields[1] != "label") {
        throw ParseError("expected header 'user_id<TAB>label...'", lineno);
      }
      fields_expected = fields.size();
      continue;
    }
    if (line.empty()) continue;
    if (fields.size() != fields_expected) {
      throw ParseError("expected " + std::to_string(fields_expected) + " fields, found " +
                           std::to_string(fields.size()),
                       lineno);
    }
    UserEmbedding e;
    e.user_id = std::string(fields[0]);
    try {
      e.label = parse_label(fields[1]);
    } catch (const ParseError& err) {
      throw ParseError(err.what(), lineno);
    }
    e.vector.resize(static_cast<Eigen::Index>(fields.size() - 2));
    for (std::size_t i = 2; i < fields.size(); ++i) {
      const auto f = fields[i];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw ParseError("bad value '" + std::string(f) + "'", lineno);
      }
      e.vector[static_cast<Eigen::Index>(i - 2)] = v;
    }
    points.push_back(std::move(e));
  }
  return points;
}

std::vector<UserEmbedding> read_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings: " + path);
  try {
    return read_embeddings(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_cluster_report(std::ostream& out, std::span<const UserEmbedding> points,
                          const ClusteringResult& result) {
  if (points.size() != result.cluster.size()) {
    throw DimensionError("write_cluster_report: result does not match points");
  }
  out << "user_id\tcluster_id\tlabel\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << points[i].user_id << '\t' << result.cluster[i] << '\t' << to_string(points[i].label)
        << '\n';
  }
}

}  // namespace mlstm
