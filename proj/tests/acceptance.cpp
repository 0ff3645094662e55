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

// Release gate: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Usage: mlstm_acceptance <work-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dbscan_oracle.hpp"
#include "mlstm/analysis.hpp"
#include "mlstm/checkpoint.hpp"
#include "mlstm/cli.hpp"
#include "mlstm/detection.hpp"
#include "mlstm/training.hpp"
#include "reference_model.hpp"
#include "test_data.hpp"

namespace fs = std::filesystem;
using namespace mlstm;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  enum { pass, fail, skip } status = pass;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) {
  return {ok ? Outcome::pass : Outcome::fail, std::move(detail)};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Rows of a TSV file keyed by header name.
std::vector<std::map<std::string, std::string>> read_tsv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::map<std::string, std::string>> rows;
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
    if (header.empty()) {
      header = fields;
      continue;
    }
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < fields.size(); ++i) row[header[i]] = fields[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

// Runs the CLI in-process; throws with its stderr on a non-zero exit.
std::string cli_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != cli::kOk) {
    throw std::runtime_error("mlstm " + args.front() + " exited " + std::to_string(code) + ": " +
                             err.str());
  }
  return out.str();
}

std::string summary_value(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (line.rfind(key + "\t", 0) == 0) return line.substr(key.size() + 1);
  throw std::runtime_error("missing '" + key + "' in output");
}

// 1. Analytic gradients against central differences of the scalar reference.
Outcome gradient_check() {
  const auto t0 = Clock::now();
  constexpr double kTol = 1e-4;
  std::size_t configs = 0, coordinates = 0, failures = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 2; ++seed)
    for (Eigen::Index d : {2, 3})
      for (Eigen::Index h : {2, 4})
        for (std::size_t T : {1u, 2u, 5u}) {
          const auto g =
              reference::random_case({d, d, d}, h, T, 5000 + 97 * seed + 13 * d + 7 * h + T);
          const auto grads = backward_user(g.params, forward_user(g.user, g.params), g.label);
          const auto c = reference::check_gradient(g, flatten(grads), kTol);
          ++configs;
          coordinates += c.coordinates;
          failures += c.failures;
          worst = std::max(worst, c.max_rel_error);
        }
  const double secs = seconds_since(t0);
  return verdict(configs >= 20 && failures == 0 && secs < 60.0,
                 std::to_string(configs) + " configs, " + std::to_string(coordinates) +
                     " coordinates, max rel err " + fmt("%.2e", worst) + " (tol 1e-4), " +
                     fmt("%.2f", secs) + " s (limit 60)");
}

// 2. synth -> train -> eval through the CLI on the chronological split.
struct EndToEnd {
  Outcome outcome;
  std::vector<std::map<std::string, std::string>> sweep;  // eval report rows
};

EndToEnd synthetic_end_to_end(const fs::path& work) {
  const auto t0 = Clock::now();
  const fs::path data = work / "synthetic";
  const auto synth = cli_run({"synth", "--users", "400", "--mean-edits", "8", "--separability",
                              "1.0", "--seed", "7", "--out", data.string()});
  const std::string cutoff = summary_value(synth, "month9_cutoff");
  const std::vector<std::string> inputs = {
      "--edits",   (data / "edits.jsonl").string(), "--labels", (data / "labels.tsv").string(),
      "--vectors", (data / "vectors.txt").string(), "--cutoff", cutoff};
  std::vector<std::string> train = {"train",
                                    "--hidden",
                                    "8",
                                    "--epochs",
                                    "25",
                                    "--seed",
                                    "7",
                                    "--out",
                                    (work / "synthetic.ckpt").string(),
                                    "--history",
                                    (work / "synthetic_history.tsv").string()};
  train.insert(train.end(), inputs.begin(), inputs.end());
  const auto train_out = cli_run(train);
  std::vector<std::string> eval = {"eval", "--ckpt", (work / "synthetic.ckpt").string(), "--report",
                                   (work / "synthetic_eval.tsv").string()};
  for (const char* tau : {"0.5", "0.6", "0.7", "0.8", "0.9"}) {
    eval.push_back("--tau");
    eval.push_back(tau);
  }
  eval.insert(eval.end(), inputs.begin(), inputs.end());
  const auto eval_out = cli_run(eval);
  const double secs = seconds_since(t0);

  const auto history = read_tsv(work / "synthetic_history.tsv");
  const auto sweep = read_tsv(work / "synthetic_eval.tsv");
  if (history.size() != 25 || sweep.empty()) {
    return {verdict(false, "missing history or eval rows"), sweep};
  }
  const double accuracy = std::stod(sweep.front().at("accuracy"));
  std::size_t bad_steps = 0;
  double worst_rise = 0.0;
  for (std::size_t e = 1; e < 5; ++e) {
    const double rise =
        std::stod(history[e].at("mean_loss")) - std::stod(history[e - 1].at("mean_loss"));
    if (rise >= 0.0) {
      ++bad_steps;
      worst_rise = std::max(worst_rise, rise);
    }
  }
  const bool loss_ok = bad_steps == 0 || (bad_steps == 1 && worst_rise <= 1e-4);
  std::string losses;
  for (std::size_t e = 0; e < 5; ++e)
    losses += (e ? "," : "") + fmt("%.4f", std::stod(history[e].at("mean_loss")));
  return {verdict(accuracy >= 0.95 && loss_ok && secs < 300.0,
                  "train users " + summary_value(train_out, "training users") +
                      ", held-out users " + summary_value(eval_out, "evaluated users") +
                      ", accuracy@0.5 " + fmt("%.4f", accuracy) + " (>= 0.95), first-5 losses " +
                      losses + " (" + std::to_string(bad_steps) + " non-decreasing steps), " +
                      fmt("%.1f", secs) + " s (limit 300)"),
          sweep};
}

// 3. Streaming state replay against batch scoring of every prefix.
Outcome stream_batch_equivalence() {
  auto corpus = mlstm::testing::make_corpus(300, 0.8, 41, 50, 8.0);
  TrainConfig cfg;
  cfg.hidden = 8;
  cfg.epochs = 3;
  cfg.seed = 41;
  const auto params = train(mlstm::testing::aspects_of(corpus.users, corpus.store), cfg).params;

  SeededRng rng(4242);
  std::vector<std::size_t> pick(corpus.users.size());
  for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
  for (std::size_t i = pick.size() - 1; i > 0; --i)
    std::swap(pick[i], pick[rng.uniform_index(i + 1)]);
  pick.resize(100);

  const DetectionConfig det{0.5};
  std::size_t prefixes = 0, mismatches = 0;
  double worst = 0.0;
  for (std::size_t idx : pick) {
    const auto& u = corpus.users[idx];
    StreamState state = StreamState::initial(params);
    for (std::size_t t = 0; t < u.edits.size(); ++t) {
      const double streamed = stream_step(state, u.edits[t], params, corpus.store, det).probability;
      const double batch =
          predict_user(params, build_aspect_sequences(u, corpus.store, t + 1), det).probability;
      ++prefixes;
      if (streamed != batch) {
        ++mismatches;
        worst = std::max(worst, std::abs(streamed - batch));
      }
    }
  }
  return verdict(mismatches == 0, "100 users, " + std::to_string(prefixes) + " prefixes, " +
                                      std::to_string(mismatches) + " mismatches (max |diff| " +
                                      fmt("%.1e", worst) + ", required bit-exact)");
}

// 4. Recall and flagged count never increase as tau rises.
Outcome threshold_monotonicity(const std::vector<std::map<std::string, std::string>>& model_sweep) {
  const std::vector<double> taus = {0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t violations = 0, sweeps = 0;
  auto check_rows = [&](const std::vector<double>& recall,
                        const std::vector<std::size_t>& flagged) {
    ++sweeps;
    for (std::size_t k = 1; k < recall.size(); ++k) {
      if (recall[k] > recall[k - 1] || flagged[k] > flagged[k - 1]) ++violations;
    }
  };

  SeededRng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(300);
    std::vector<double> scores;
    std::vector<Label> labels;
    for (std::size_t i = 0; i < n; ++i) {
      // Mix of continuous scores and scores sitting exactly on the grid.
      scores.push_back(rng.bernoulli(0.2) ? taus[rng.uniform_index(taus.size())] : rng.next_unit());
      labels.push_back(rng.bernoulli(0.5) ? Label::vandal : Label::benign);
    }
    std::vector<double> recall;
    std::vector<std::size_t> flagged;
    for (const auto& r : detection_sweep(scores, labels, taus)) {
      recall.push_back(r.metrics.recall);
      flagged.push_back(r.metrics.tp + r.metrics.fp);
    }
    check_rows(recall, flagged);
  }

  std::vector<double> recall;
  std::vector<std::size_t> flagged;
  for (const auto& row : model_sweep) {
    recall.push_back(std::stod(row.at("recall")));
    flagged.push_back(std::stoul(row.at("tp")) + std::stoul(row.at("fp")));
  }
  if (recall.size() == taus.size()) check_rows(recall, flagged);
  return verdict(violations == 0 && sweeps == 201,
                 std::to_string(sweeps) +
                     " sweeps over tau {0.5..0.9} (200 random score sets + "
                     "trained-model scores), " +
                     std::to_string(violations) + " violations");
}

// 5. Attention weights on the simplex, uniform for identical inputs, and
// the fused vector inside the per-coordinate hull of its inputs.
Outcome attention_invariants() {
  SeededRng rng(555);
  std::size_t simplex_fail = 0, uniform_fail = 0, hull_fail = 0;
  double worst_sum = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index h = 1 + static_cast<Eigen::Index>(rng.uniform_index(8));
    const double scale = trial % 4 == 0 ? 20.0 : 2.0;  // include saturated scores
    AttentionParams a;
    a.W_a = seeded_uniform_init(h, h, scale, rng);
    a.u_a = seeded_uniform_init(h, 1, scale, rng).col(0);
    std::vector<Vector> hidden;
    for (int m = 0; m < 3; ++m) hidden.push_back(seeded_uniform_init(h, 1, 1.0, rng).col(0));

    const auto r = attention_fuse(hidden, a);
    const double sum_err = std::abs(r.alpha.sum() - 1.0);
    worst_sum = std::max(worst_sum, sum_err);
    if (sum_err > 1e-12 || (r.alpha.array() < 0.0).any()) ++simplex_fail;
    for (Eigen::Index k = 0; k < h; ++k) {
      const double lo = std::min({hidden[0][k], hidden[1][k], hidden[2][k]});
      const double hi = std::max({hidden[0][k], hidden[1][k], hidden[2][k]});
      // Rounding in the weighted sum may step one ulp-scale past the hull.
      const double slack =
          4 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi));
      if (r.s[k] < lo - slack || r.s[k] > hi + slack) ++hull_fail;
    }

    const std::vector<Vector> same(3, hidden[0]);
    const auto u = attention_fuse(same, a);
    if ((u.alpha.array() - 1.0 / 3.0).abs().maxCoeff() > 1e-15) ++uniform_fail;
  }
  return verdict(simplex_fail + uniform_fail + hull_fail == 0,
                 "1000 fuses, max |sum(alpha)-1| " + fmt("%.1e", worst_sum) + " (tol 1e-12), " +
                     std::to_string(simplex_fail) + " simplex / " + std::to_string(uniform_fail) +
                     " uniform / " + std::to_string(hull_fail) + " hull violations");
}

// Same partition up to a renaming of cluster ids (noise must stay noise).
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> fwd, back;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == kNoise) != (b[i] == kNoise)) return false;
    if (a[i] == kNoise) continue;
    if (fwd.emplace(a[i], b[i]).first->second != b[i]) return false;
    if (back.emplace(b[i], a[i]).first->second != a[i]) return false;
  }
  return true;
}

// 6. DBSCAN against the brute-force reachability oracle.
Outcome dbscan_oracle() {
  SeededRng rng(606);
  std::size_t mismatches = 0, total_points = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(200);
    const int dim = 1 + static_cast<int>(rng.uniform_index(4));
    const bool grid = trial % 2 == 0;  // grid points give duplicates and ties at eps
    std::vector<UserEmbedding> pts;
    for (std::size_t i = 0; i < n; ++i) {
      Vector v(dim);
      for (int d = 0; d < dim; ++d)
        v[d] = grid ? 0.25 * static_cast<double>(rng.uniform_index(6)) : rng.uniform(0.0, 1.0);
      pts.push_back({"p" + std::to_string(rng.next_u64() % 1000000) + "_" + std::to_string(i),
                     rng.bernoulli(0.5) ? Label::vandal : Label::benign, v});
    }
    const double eps =
        grid ? 0.25 * static_cast<double>(rng.uniform_index(4)) : rng.uniform(0.05, 0.4);
    const std::size_t min_pts = 1 + rng.uniform_index(6);
    total_points += n;
    if (!same_partition(dbscan(pts, eps, min_pts).cluster,
                        oracle::dbscan_labels(pts, eps, min_pts)))
      ++mismatches;
  }

  // eps = 0, minPts = 2: clusters are exactly the groups of identical vectors.
  std::size_t dup_fail = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<UserEmbedding> pts;
    std::map<std::vector<double>, std::vector<std::size_t>> groups;
    const std::size_t n = 2 + rng.uniform_index(150);
    for (std::size_t i = 0; i < n; ++i) {
      Vector v(3);
      if (!pts.empty() && rng.bernoulli(0.4)) {
        v = pts[rng.uniform_index(pts.size())].vector;
      } else {
        for (int d = 0; d < 3; ++d) v[d] = rng.uniform(-1.0, 1.0);
      }
      groups[std::vector<double>(v.data(), v.data() + 3)].push_back(i);
      pts.push_back({"d" + std::to_string(1000 + i), Label::benign, v});
    }
    std::vector<int> expected(n, kNoise);
    int id = 0;
    for (const auto& [_, members] : groups) {
      if (members.size() < 2) continue;
      for (std::size_t i : members) expected[i] = id;
      ++id;
    }
    if (!same_partition(dbscan(pts, 0.0, 2).cluster, expected)) ++dup_fail;
  }
  return verdict(mismatches == 0 && dup_fail == 0,
                 "50 random sets (" + std::to_string(total_points) + " points) with " +
                     std::to_string(mismatches) +
                     " partition mismatches; 20 duplicate sets at "
                     "eps=0/minPts=2 with " +
                     std::to_string(dup_fail) + " mismatches");
}

std::string checkpoint_bytes(const TrainResult& r, std::uint64_t oov_seed) {
  std::ostringstream out(std::ios::binary);
  save_checkpoint(out, Checkpoint{r.params, r.optimizer, oov_seed});
  return out.str();
}

// 7. Seeded training is reproducible and checkpoints round-trip exactly.
Outcome determinism_and_persistence(const fs::path& work) {
  auto corpus = mlstm::testing::make_corpus(120, 0.7, 13, 50, 6.0);
  const auto data = mlstm::testing::aspects_of(corpus.users, corpus.store);
  TrainConfig cfg;
  cfg.hidden = 6;
  cfg.epochs = 4;
  cfg.seed = 13;
  cfg.shuffle = true;
  const auto a = train(data, cfg);
  const auto b = train(data, cfg);
  const std::string bytes_a = checkpoint_bytes(a, 13), bytes_b = checkpoint_bytes(b, 13);

  const fs::path path = work / "determinism.ckpt";
  save_checkpoint(path.string(), Checkpoint{a.params, a.optimizer, 13});
  const auto loaded = load_checkpoint(path.string());
  std::size_t forward_mismatch = 0;
  for (const auto& user : data) {
    const auto before = forward_user(user, a.params);
    const auto after = forward_user(user, loaded.params);
    if (before.probs != after.probs || before.embedding() != after.embedding()) ++forward_mismatch;
  }
  const bool reload_bytes = slurp(path) == bytes_a;
  return verdict(bytes_a == bytes_b && forward_mismatch == 0 && reload_bytes,
                 "checkpoint " + std::to_string(bytes_a.size()) + " bytes, runs " +
                     (bytes_a == bytes_b ? "identical" : "DIFFER") + "; save/load/forward on " +
                     std::to_string(data.size()) + " users, " + std::to_string(forward_mismatch) +
                     " mismatches");
}

// 8. Optional: real edit data converted to this tool's formats.
Outcome real_data(const fs::path& work) {
  const char* dir_env = std::getenv("MLSTM_UMD_DIR");
  if (!dir_env || !*dir_env) {
    return {Outcome::skip,
            "set MLSTM_UMD_DIR to a directory with edits.jsonl, labels.tsv and "
            "50-dim vectors.txt"};
  }
  const fs::path dir(dir_env);
  const std::string edits = (dir / "edits.jsonl").string();
  std::int64_t cutoff = 0;
  if (const char* c = std::getenv("MLSTM_UMD_CUTOFF")) {
    cutoff = std::stoll(c);
  } else {
    std::int64_t first = std::numeric_limits<std::int64_t>::max();
    for (const auto& r : read_edit_log(edits)) first = std::min(first, r.timestamp);
    cutoff = first + 9 * kSecondsPerMonth;
  }
  const std::vector<std::string> inputs = {"--edits",   edits,
                                           "--labels",  (dir / "labels.tsv").string(),
                                           "--vectors", (dir / "vectors.txt").string(),
                                           "--cutoff",  std::to_string(cutoff)};
  const std::string ckpt = (work / "real.ckpt").string();
  std::vector<std::string> train = {"train", "--dim", "50", "--seed", "1", "--out", ckpt};
  train.insert(train.end(), inputs.begin(), inputs.end());
  cli_run(train);
  std::vector<std::string> eval = {
      "eval", "--ckpt", ckpt, "--tau", "0.5", "--report", (work / "real_eval.tsv").string()};
  eval.insert(eval.end(), inputs.begin(), inputs.end());
  cli_run(eval);
  std::vector<std::string> stream = {
      "stream", "--ckpt", ckpt, "--tau", "0.5", "--summary", (work / "real_stream.tsv").string()};
  stream.insert(stream.end(), inputs.begin(), inputs.end());
  cli_run(stream);
  const double acc = 100.0 * std::stod(read_tsv(work / "real_eval.tsv").at(0).at("accuracy"));
  const double early =
      100.0 * std::stod(read_tsv(work / "real_stream.tsv").at(0).at("early_detected"));
  return verdict(std::abs(acc - 91.33) <= 3.0 && std::abs(early - 97.35) <= 5.0,
                 "accuracy " + fmt("%.2f", acc) + "% (91.33 +/- 3), early detected " +
                     fmt("%.2f", early) + "% (97.35 +/- 5)");
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work =
      argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "mlstm_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Outcome::pass   ? "PASS"
                      : o.status == Outcome::skip ? "SKIP"
                                                  : "FAIL";
    if (o.status == Outcome::fail) ++failed;
    std::cout << tag << "  [" << id << "] " << name << ": " << o.detail << std::endl;
  };

  std::vector<std::map<std::string, std::string>> sweep;
  report(1, "gradient correctness", gradient_check);
  report(2, "synthetic end-to-end", [&] {
    auto r = synthetic_end_to_end(work);
    sweep = std::move(r.sweep);
    return r.outcome;
  });
  report(3, "streaming/batch equivalence", stream_batch_equivalence);
  report(4, "threshold monotonicity", [&] { return threshold_monotonicity(sweep); });
  report(5, "attention invariants", attention_invariants);
  report(6, "DBSCAN oracle", dbscan_oracle);
  report(7, "determinism and persistence", [&] { return determinism_and_persistence(work); });
  report(8, "real-data headline numbers (optional)", [&] { return real_data(work); });

  std::cout << (failed ? "acceptance FAILED: " + std::to_string(failed) + " criteria"
                       : std::string("acceptance passed"))
            << std::endl;
  return failed ? 1 : 0;
}
