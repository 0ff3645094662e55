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

#include "mlstm/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "mlstm/analysis.hpp"
#include "mlstm/checkpoint.hpp"
#include "mlstm/detection.hpp"
#include "mlstm/embeddings.hpp"
#include "mlstm/ingestion.hpp"
#include "mlstm/training.hpp"

#ifndef MLSTM_VERSION
#define MLSTM_VERSION "0.0.0"
#endif

namespace mlstm::cli {

const char* version() { return MLSTM_VERSION; }

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw IoError("failed writing " + path);
}

enum class Partition { all, train, test };

// Edits -> meta filter -> per-user sequences, optionally restricted to one
// side of a chronological split.
std::vector<UserSequence> load_users(const std::string& edits, const std::string& labels,
                                     std::optional<std::int64_t> cutoff, Partition part) {
  auto records = filter_meta_edits(read_edit_log(edits));
  auto users = group_into_user_sequences(records, read_labels(labels));
  if (!cutoff || part == Partition::all) return users;
  auto split = chronological_split(users, *cutoff);
  return part == Partition::train ? std::move(split.train) : std::move(split.test);
}

struct SynthOptions {
  std::size_t users = 400;
  double mean_edits = 8.0;
  double separability = 1.0;
  std::uint64_t seed = 0;
  std::size_t dim = 50;
  std::size_t pool_size = 40;
  std::string out;
};

struct TrainOptions {
  std::string edits, labels, vectors, out, history;
  std::size_t epochs = 25;
  Eigen::Index hidden = 32;
  std::size_t dim = 50;
  std::uint64_t seed = 0;
  double clip = 5.0;
  double rho = 0.95;
  double eps = 1e-6;
  bool shuffle = false;
  std::optional<std::int64_t> cutoff;
};

struct EvalOptions {
  std::string ckpt, edits, labels, vectors, report;
  std::vector<double> taus{0.5};
  std::optional<std::int64_t> cutoff;
  std::uint64_t seed = 0;
};

struct StreamOptions {
  std::string ckpt, edits, labels, vectors, report, summary;
  std::vector<double> taus{0.8};
  std::optional<std::int64_t> cutoff;
  std::uint64_t seed = 0;
};

struct ClusterOptions {
  std::string embeddings, out;
  double eps = 0.05;
  std::size_t min_pts = 3;
  std::uint64_t seed = 0;
};

struct ExportOptions {
  std::string ckpt, edits, labels, vectors, out;
  std::optional<std::int64_t> cutoff;
  std::uint64_t seed = 0;
};

struct NeighborOptions {
  std::string embeddings, user;
  std::size_t k = 10;
  std::uint64_t seed = 0;
};

int do_synth(const SynthOptions& o, std::ostream& out) {
  SyntheticConfig cfg;
  cfg.n_users = o.users;
  cfg.mean_edits = o.mean_edits;
  cfg.separability = o.separability;
  cfg.seed = o.seed;
  cfg.pool_size = o.pool_size;
  const auto users = gen_synthetic(cfg);

  std::error_code ec;
  std::filesystem::create_directories(o.out, ec);
  if (ec) throw IoError("cannot create directory " + o.out + ": " + ec.message());
  const std::filesystem::path dir(o.out);

  const std::string edits_path = (dir / "edits.jsonl").string();
  auto edits = open_output(edits_path);
  write_edit_log(edits, flatten(users));
  finish(edits, edits_path);

  const std::string labels_path = (dir / "labels.tsv").string();
  auto labels = open_output(labels_path);
  write_labels(labels, labels_of(users));
  finish(labels, labels_path);

  const std::string vectors_path = (dir / "vectors.txt").string();
  auto vectors = open_output(vectors_path);
  write_synthetic_vectors(vectors, synthetic_vocabulary(cfg.pool_size), o.dim, o.seed);
  finish(vectors, vectors_path);

  const std::int64_t cutoff = cfg.start_time + 9 * kSecondsPerMonth;
  out << "users\t" << users.size() << '\n'
      << "edits\t" << flatten(users).size() << '\n'
      << "edits_file\t" << edits_path << '\n'
      << "labels_file\t" << labels_path << '\n'
      << "vectors_file\t" << vectors_path << '\n'
      << "month9_cutoff\t" << cutoff << '\n';
  return kOk;
}

int do_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.hidden = o.hidden;
  cfg.word_dim = o.dim;
  cfg.seed = o.seed;
  cfg.clip_norm = o.clip;
  cfg.rho = o.rho;
  cfg.eps = o.eps;
  cfg.shuffle = o.shuffle;
  cfg.validate();

  const auto store = WordVectorStore::load_file(o.vectors, o.dim, o.seed);
  const auto users = load_users(o.edits, o.labels, o.cutoff, Partition::train);
  std::vector<AspectSequences> dataset;
  dataset.reserve(users.size());
  for (const auto& u : users) dataset.push_back(build_aspect_sequences(u, store));
  out << "training users\t" << dataset.size() << '\n';

  auto result = train(dataset, cfg, [&](std::size_t epoch, const EpochStats& s) {
    out << "epoch " << epoch << "\tloss " << fmt("%.6f", s.mean_loss) << "\taccuracy "
        << fmt("%.4f", s.train_accuracy) << '\n';
    err << "epoch " << epoch << " took " << fmt("%.3f", s.seconds) << " s\n";
  });

  save_checkpoint(o.out, Checkpoint{result.params, result.optimizer, o.seed});
  if (!o.history.empty()) {
    auto h = open_output(o.history);
    h << "epoch\tmean_loss\ttrain_accuracy\n";
    for (std::size_t i = 0; i < result.history.epochs.size(); ++i) {
      const auto& s = result.history.epochs[i];
      h << (i + 1) << '\t' << fmt("%.17g", s.mean_loss) << '\t' << fmt("%.17g", s.train_accuracy)
        << '\n';
    }
    finish(h, o.history);
  }
  out << "checkpoint\t" << o.out << '\n';
  return kOk;
}

struct Scoring {
  Checkpoint ckpt;
  WordVectorStore store;
  std::vector<UserSequence> users;
};

Scoring load_scoring(const std::string& ckpt_path, const std::string& vectors,
                     const std::string& edits, const std::string& labels,
                     std::optional<std::int64_t> cutoff) {
  auto ckpt = load_checkpoint(ckpt_path);
  const auto word_dim = static_cast<std::size_t>(ckpt.params.lstms.front().input_dim());
  auto store = WordVectorStore::load_file(vectors, word_dim, ckpt.oov_seed);
  auto users = load_users(edits, labels, cutoff, Partition::test);
  return {std::move(ckpt), std::move(store), std::move(users)};
}

int do_eval(const EvalOptions& o, std::ostream& out) {
  for (double tau : o.taus) DetectionConfig{tau}.validate();
  const auto s = load_scoring(o.ckpt, o.vectors, o.edits, o.labels, o.cutoff);
  std::vector<double> p_vandal;
  std::vector<Label> labels;
  const DetectionConfig cfg{o.taus.front()};
  for (const auto& u : s.users) {
    p_vandal.push_back(
        predict_user(s.ckpt.params, build_aspect_sequences(u, s.store), cfg).probability);
    labels.push_back(u.label);
  }
  const auto rows = detection_sweep(p_vandal, labels, o.taus);
  out << "evaluated users\t" << s.users.size() << '\n';
  write_detection_table(out, rows);
  if (!o.report.empty()) {
    auto f = open_output(o.report);
    write_detection_tsv(f, rows);
    finish(f, o.report);
  }
  return kOk;
}

int do_stream(const StreamOptions& o, std::ostream& out) {
  for (double tau : o.taus) DetectionConfig{tau}.validate();
  const auto s = load_scoring(o.ckpt, o.vectors, o.edits, o.labels, o.cutoff);
  const DetectionConfig cfg{o.taus.front()};
  std::vector<StreamOutcome> outcomes;
  for (const auto& u : s.users) outcomes.push_back(stream_user(s.ckpt.params, u, s.store, cfg));
  const auto rows = early_detection_sweep(outcomes, o.taus);
  out << "streamed users\t" << outcomes.size() << '\n';
  write_early_detection_table(out, rows);
  if (!o.report.empty()) {
    auto f = open_output(o.report);
    write_stream_report(f, outcomes);
    finish(f, o.report);
  }
  if (!o.summary.empty()) {
    auto f = open_output(o.summary);
    write_early_detection_tsv(f, rows);
    finish(f, o.summary);
  }
  return kOk;
}

int do_cluster(const ClusterOptions& o, std::ostream& out) {
  const auto points = read_embeddings(o.embeddings);
  const auto result = dbscan(points, o.eps, o.min_pts);
  out << "points\t" << points.size() << '\n'
      << "clusters\t" << result.num_clusters() << '\n'
      << "noise\t" << result.noise_count() << '\n'
      << "vandal_only_clusters\t" << result.vandal_only_clusters() << '\n'
      << "benign_only_clusters\t" << result.benign_only_clusters() << '\n';
  if (!o.out.empty()) {
    auto f = open_output(o.out);
    write_cluster_report(f, points, result);
    finish(f, o.out);
  } else {
    write_cluster_report(out, points, result);
  }
  return kOk;
}

int do_export(const ExportOptions& o, std::ostream& out) {
  const auto s = load_scoring(o.ckpt, o.vectors, o.edits, o.labels, o.cutoff);
  const auto points = embed_users(s.ckpt.params, s.users, s.store);
  auto f = open_output(o.out);
  const auto rows = export_embeddings(f, points);
  finish(f, o.out);
  out << "exported\t" << rows << '\n';
  return kOk;
}

int do_neighbors(const NeighborOptions& o, std::ostream& out) {
  const auto points = read_embeddings(o.embeddings);
  out << "user_id\tcosine\n";
  for (const auto& n : cosine_neighbors(points, o.user, o.k)) {
    out << n.user_id << '\t' << fmt("%.17g", n.similarity) << '\n';
  }
  return kOk;
}

void add_seed(CLI::App* sub, std::uint64_t& seed) {
  sub->add_option("--seed", seed, "Seed for every random choice")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-source LSTM vandal detection", "mlstm"};
  app.set_version_flag("--version", std::string("mlstm ") + version());
  app.require_subcommand(1);
  // Config lives on the root so one file can hold a [section] per
  // subcommand; fallthrough lets it be given after the subcommand name.
  app.set_config("--config", "", "TOML/INI file; [train], [eval], ... sections (flags override)");
  app.fallthrough();

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labelled edit corpus");
  synth_cmd->add_option("--users", synth.users, "Number of users")->required();
  synth_cmd->add_option("--mean-edits", synth.mean_edits, "Mean edits per user")
      ->capture_default_str();
  synth_cmd->add_option("--separability", synth.separability, "Class separability in [0,1]")
      ->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim, "Word vector dimension")->capture_default_str();
  synth_cmd->add_option("--pool-size", synth.pool_size, "Words per topic pool")
      ->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  add_seed(synth_cmd, synth.seed);

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--edits", tr.edits, "Edit log (JSON lines)")->required();
  train_cmd->add_option("--labels", tr.labels, "Labels TSV")->required();
  train_cmd->add_option("--vectors", tr.vectors, "Word vectors text file")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--epochs", tr.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--hidden", tr.hidden, "LSTM hidden dimension")->capture_default_str();
  train_cmd->add_option("--dim", tr.dim, "Word vector dimension")->capture_default_str();
  train_cmd->add_option("--clip", tr.clip, "Global gradient-norm clip (inf disables)")
      ->capture_default_str();
  train_cmd->add_option("--rho", tr.rho, "Adadelta decay")->capture_default_str();
  train_cmd->add_option("--eps-ada", tr.eps, "Adadelta stabilizer")->capture_default_str();
  train_cmd->add_flag("--shuffle", tr.shuffle, "Seeded per-epoch shuffle of users");
  train_cmd->add_option("--cutoff", tr.cutoff,
                        "Train only on users whose first edit is at or before this UTC time");
  train_cmd->add_option("--history", tr.history, "Write per-epoch loss/accuracy TSV");
  add_seed(train_cmd, tr.seed);

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Batch vandal detection metrics");
  eval_cmd->add_option("--ckpt", ev.ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--edits", ev.edits, "Edit log")->required();
  eval_cmd->add_option("--labels", ev.labels, "Labels TSV")->required();
  eval_cmd->add_option("--vectors", ev.vectors, "Word vectors text file")->required();
  eval_cmd->add_option("--tau", ev.taus, "Threshold(s); repeat for a sweep")->capture_default_str();
  eval_cmd->add_option("--cutoff", ev.cutoff,
                       "Evaluate only users whose first edit is after this UTC time");
  eval_cmd->add_option("--report", ev.report, "Write metrics TSV");
  add_seed(eval_cmd, ev.seed);

  StreamOptions st;
  auto* stream_cmd = app.add_subcommand("stream", "Edit-by-edit early detection");
  stream_cmd->add_option("--ckpt", st.ckpt, "Checkpoint")->required();
  stream_cmd->add_option("--edits", st.edits, "Edit log")->required();
  stream_cmd->add_option("--labels", st.labels, "Labels TSV")->required();
  stream_cmd->add_option("--vectors", st.vectors, "Word vectors text file")->required();
  stream_cmd->add_option("--tau", st.taus, "Threshold(s); the first drives --report")
      ->capture_default_str();
  stream_cmd->add_option("--cutoff", st.cutoff,
                         "Stream only users whose first edit is after this UTC time");
  stream_cmd->add_option("--report", st.report, "Write per-user streaming TSV");
  stream_cmd->add_option("--summary", st.summary, "Write early-detection metrics TSV");
  add_seed(stream_cmd, st.seed);

  ClusterOptions cl;
  auto* cluster_cmd = app.add_subcommand("cluster", "DBSCAN over exported embeddings");
  cluster_cmd->add_option("--embeddings", cl.embeddings, "Embedding TSV")->required();
  cluster_cmd->add_option("--eps", cl.eps, "Neighbourhood radius")->capture_default_str();
  cluster_cmd->add_option("--min-pts", cl.min_pts, "Minimum neighbourhood size")
      ->capture_default_str();
  cluster_cmd->add_option("--out", cl.out, "Cluster report TSV (default: stdout)");
  add_seed(cluster_cmd, cl.seed);

  ExportOptions ex;
  auto* export_cmd = app.add_subcommand("export", "Write user embeddings as TSV");
  export_cmd->add_option("--ckpt", ex.ckpt, "Checkpoint")->required();
  export_cmd->add_option("--edits", ex.edits, "Edit log")->required();
  export_cmd->add_option("--labels", ex.labels, "Labels TSV")->required();
  export_cmd->add_option("--vectors", ex.vectors, "Word vectors text file")->required();
  export_cmd->add_option("--out", ex.out, "Embedding TSV")->required();
  export_cmd->add_option("--cutoff", ex.cutoff,
                         "Export only users whose first edit is after this UTC time");
  add_seed(export_cmd, ex.seed);

  NeighborOptions nb;
  auto* nb_cmd = app.add_subcommand("neighbors", "Cosine-similarity neighbours of one user");
  nb_cmd->add_option("--embeddings", nb.embeddings, "Embedding TSV")->required();
  nb_cmd->add_option("--user", nb.user, "Query user id")->required();
  nb_cmd->add_option("--k", nb.k, "Number of neighbours")->capture_default_str();
  add_seed(nb_cmd, nb.seed);

  std::vector<const char*> argv{"mlstm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << "mlstm " << version() << '\n';
    return kOk;
  } catch (const CLI::FileError& e) {
    err << "mlstm: " << e.what() << '\n';
    return kIoError;
  } catch (const CLI::ParseError& e) {
    err << "mlstm: " << e.what() << '\n' << app.help();
    return kUsage;
  }

  try {
    if (*synth_cmd) return do_synth(synth, out);
    if (*train_cmd) return do_train(tr, out, err);
    if (*eval_cmd) return do_eval(ev, out);
    if (*stream_cmd) return do_stream(st, out);
    if (*cluster_cmd) return do_cluster(cl, out);
    if (*export_cmd) return do_export(ex, out);
    if (*nb_cmd) return do_neighbors(nb, out);
  } catch (const IoError& e) {
    err << "mlstm: " << e.what() << '\n';
    return kIoError;
  } catch (const ParseError& e) {
    err << "mlstm: " << e.what() << '\n';
    return kDataError;
  } catch (const FormatError& e) {
    err << "mlstm: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "mlstm: " << e.what() << '\n';
    return kFailure;
  }
  err << app.help();
  return kUsage;
}

}  // namespace mlstm::cli
