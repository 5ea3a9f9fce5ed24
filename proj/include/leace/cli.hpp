// Copyright 2026 The leace-embed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LEACE_CLI_HPP_
#define LEACE_CLI_HPP_

// Command-line front end. run() is the whole program; tools/leace_main.cpp
// only forwards argv.
//
// Exit codes: 0 success, 2 usage error, 3 format/validation error,
// 4 numerical error, 1 anything else.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "leace/clustering.hpp"
#include "leace/config.hpp"
#include "leace/eraser.hpp"
#include "leace/error.hpp"
#include "leace/io.hpp"
#include "leace/labels.hpp"
#include "leace/linalg.hpp"
#include "leace/metrics.hpp"
#include "leace/synth.hpp"

namespace leace::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitNumerical = 4;

struct RunConfig {
  std::string subcommand;
  std::string embeddings;
  std::string labels;
  std::string gold;
  std::string pairs;
  std::string eraser;
  std::string spec;
  std::string out;
  std::string baseline_out;
  std::string format = "auto";
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;
  std::vector<std::size_t> ks;
  std::vector<std::size_t> recall_at = {1, 10};
  std::vector<double> strengths;
  std::size_t replicates = 1;
  std::size_t components = 0;  // 0: min(10, n - 1, d)
  std::size_t restarts = KMeansOptions{}.restarts;
  double rtol = kDefaultTolerances.rank_rtol;
  std::string similarity = "cosine";
  bool normalize_rows = false;
};

namespace detail {

inline MatrixFormat parse_format(const std::string& s) {
  if (s == "embx") return MatrixFormat::kEmbx;
  if (s == "csv") return MatrixFormat::kCsv;
  return MatrixFormat::kAuto;
}

inline void require_file(const std::string& path, const std::string& flag) {
  if (path.empty()) throw ValidationError(flag + " is required");
  if (!std::filesystem::is_regular_file(path)) {
    throw ValidationError(flag + " '" + path + "' is not a readable file");
  }
}

inline void require_out_dir(const std::string& path) {
  if (path.empty()) return;
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw ValidationError("output directory '" + parent.string() +
                          "' does not exist");
  }
}

inline std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Report {
 public:
  Report(const RunConfig& cfg) : cfg_(cfg) {
    doc_["command"] = cfg.subcommand;
    doc_["run"] = {{"tool", kToolName},
                   {"version", kToolVersion},
                   {"seed", cfg.seed},
                   {"inputs", nlohmann::json::object()}};
    doc_["timestamp"] = utc_timestamp();
  }

  void input(const std::string& name, const std::string& path) {
    doc_["run"]["inputs"][name] = {{"path", path}, {"sha256", sha256_file(path)}};
  }
  void config(const std::string& key, nlohmann::json value) {
    doc_["run"]["config"][key] = std::move(value);
  }
  nlohmann::json& metrics() { return doc_["metrics"]; }

  void emit(std::ostream& out) const {
    const std::string text = doc_.dump(2) + "\n";
    if (cfg_.out.empty()) {
      out << text;
    } else {
      write_file(cfg_.out, text);
    }
  }

 private:
  const RunConfig& cfg_;
  nlohmann::json doc_;
};

inline Matrix load_matrix(const RunConfig& cfg) {
  require_file(cfg.embeddings, "--embeddings");
  return read_embeddings(cfg.embeddings, parse_format(cfg.format));
}

inline void check_rows(const Matrix& x, std::size_t rows, const std::string& what) {
  if (static_cast<std::size_t>(x.rows()) != rows) {
    throw ValidationError(what + " has " + std::to_string(rows) +
                          " rows but embeddings have " + std::to_string(x.rows()));
  }
}

inline std::optional<LeaceEraser> maybe_eraser(const RunConfig& cfg, Report& report) {
  if (cfg.eraser.empty()) return std::nullopt;
  require_file(cfg.eraser, "--eraser");
  report.input("eraser", cfg.eraser);
  return load_eraser(cfg.eraser);
}

inline Similarity parse_similarity(const std::string& s) {
  return s == "dot" ? Similarity::kDot : Similarity::kCosine;
}

// ---------------------------------------------------------------------------

inline int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.labels, "--labels");
  if (cfg.out.empty()) throw ValidationError("--out is required");
  require_out_dir(cfg.out);
  const Matrix x = load_matrix(cfg);
  const ConceptLabels c = read_labels(cfg.labels);
  check_rows(x, c.size(), "--labels");
  const LeaceEraser e = fit(x, c, cfg.rtol);
  save_eraser(cfg.out, e);
  out << nlohmann::json{{"eraser", cfg.out},
                        {"dim", e.dim()},
                        {"arity", e.arity},
                        {"erased_rank", e.erased_rank},
                        {"distortion", distortion(e, x)}}
             .dump()
      << "\n";
  return kExitOk;
}

inline int cmd_apply(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.eraser, "--eraser");
  if (cfg.out.empty()) throw ValidationError("--out is required");
  require_out_dir(cfg.out);
  const LeaceEraser e = load_eraser(cfg.eraser);
  const Matrix x = load_matrix(cfg);
  const Matrix adjusted = apply(e, x);
  write_embeddings(cfg.out, adjusted);
  out << nlohmann::json{{"adjusted", cfg.out},
                        {"rows", adjusted.rows()},
                        {"cols", adjusted.cols()}}
             .dump()
      << "\n";
  return kExitOk;
}

inline nlohmann::json cluster_block(const Matrix& x, const std::vector<std::size_t>& gold,
                                    const std::vector<std::size_t>& ks,
                                    const RunConfig& cfg) {
  KMeansOptions opts;
  opts.restarts = cfg.restarts;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k : ks) {
    const ClusterResult r = kmeans(x, k, cfg.seed, opts);
    rows.push_back({{"k", k},
                    {"purity", purity(r.assignments, gold)},
                    {"ari", ari(r.assignments, gold)},
                    {"inertia", r.inertia},
                    {"iterations", r.iterations}});
  }
  return rows;
}

inline int cmd_eval_cluster(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.gold, "--gold");
  require_out_dir(cfg.out);
  Report report(cfg);
  Matrix x = load_matrix(cfg);
  report.input("embeddings", cfg.embeddings);
  const ConceptLabels gold = read_labels(cfg.gold);
  report.input("gold", cfg.gold);
  check_rows(x, gold.size(), "--gold");
  const auto eraser = maybe_eraser(cfg, report);

  std::vector<std::size_t> ks = cfg.ks;
  if (ks.empty()) ks.push_back(gold.arity());
  report.config("k", ks);
  report.config("restarts", cfg.restarts);
  report.config("normalize_rows", cfg.normalize_rows);

  auto prepare = [&](const Matrix& m) {
    return cfg.normalize_rows ? normalize_rows(m) : m;
  };
  report.metrics()["before"] = cluster_block(prepare(x), gold.codes(), ks, cfg);
  if (eraser) {
    report.metrics()["after"] =
        cluster_block(prepare(apply(*eraser, x)), gold.codes(), ks, cfg);
  }
  report.emit(out);
  return kExitOk;
}

inline nlohmann::json retrieval_block(const Matrix& x, const std::vector<IndexPair>& pairs,
                                      const RunConfig& cfg) {
  const RetrievalResult r =
      recall_at_k(x, pairs, {}, cfg.recall_at, parse_similarity(cfg.similarity));
  nlohmann::json recall = nlohmann::json::object();
  for (const auto& [k, v] : r.recall_at) recall[std::to_string(k)] = v;
  double rank_sum = 0.0;
  std::size_t found = 0;
  for (const auto& rank : r.ranks) {
    if (rank) {
      rank_sum += static_cast<double>(*rank);
      ++found;
    }
  }
  return {{"queries", r.queries()},
          {"recall_at", recall},
          {"mean_rank", found ? rank_sum / static_cast<double>(found) : 0.0},
          {"missing", r.queries() - found}};
}

inline int cmd_eval_retrieve(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.pairs, "--pairs");
  require_out_dir(cfg.out);
  Report report(cfg);
  const Matrix x = load_matrix(cfg);
  report.input("embeddings", cfg.embeddings);
  const auto pairs = read_pairs(cfg.pairs);
  report.input("pairs", cfg.pairs);
  const auto eraser = maybe_eraser(cfg, report);
  report.config("recall_at", cfg.recall_at);
  report.config("similarity", cfg.similarity);
  report.config("normalize_rows", cfg.normalize_rows);

  auto prepare = [&](const Matrix& m) {
    return cfg.normalize_rows ? normalize_rows(m) : m;
  };
  report.metrics()["before"] = retrieval_block(prepare(x), pairs, cfg);
  if (eraser) {
    report.metrics()["after"] = retrieval_block(prepare(apply(*eraser, x)), pairs, cfg);
  }
  report.emit(out);
  return kExitOk;
}

inline std::vector<double> column(const Matrix& m, Eigen::Index j) {
  return std::vector<double>(m.col(j).data(), m.col(j).data() + m.rows());
}

inline int cmd_pca(const RunConfig& cfg, std::ostream& out) {
  require_out_dir(cfg.out);
  require_out_dir(cfg.baseline_out);
  Report report(cfg);
  Matrix x = load_matrix(cfg);
  report.input("embeddings", cfg.embeddings);
  if (cfg.normalize_rows) x = normalize_rows(x);
  std::optional<ConceptLabels> labels;
  if (!cfg.labels.empty()) {
    require_file(cfg.labels, "--labels");
    labels = read_labels(cfg.labels);
    report.input("labels", cfg.labels);
    check_rows(x, labels->size(), "--labels");
  }
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (n < 2) throw InsufficientDataError("pca needs at least 2 rows");
  const std::size_t k =
      cfg.components ? cfg.components : std::min<std::size_t>({10, n - 1, d});
  report.config("components", k);
  report.config("normalize_rows", cfg.normalize_rows);

  const PcaResult pc = pca(x, k);
  const Matrix scores = pc.scores(x);
  auto& m = report.metrics();
  m["explained_variance"] = std::vector<double>(
      pc.explained_variance.data(), pc.explained_variance.data() + k);
  m["explained_variance_ratio"] = std::vector<double>(
      pc.explained_variance_ratio.data(), pc.explained_variance_ratio.data() + k);
  m["pc1_ratio"] = pc.explained_variance_ratio(0);
  m["pc1_scores"] = column(scores, 0);
  if (k >= 2) m["pc2_scores"] = column(scores, 1);
  if (labels) {
    nlohmann::json groups = nlohmann::json::object();
    for (std::size_t j = 0; j < labels->arity(); ++j) {
      double sum = 0.0;
      double sq = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels->codes()[i] != j) continue;
        const double v = scores(static_cast<Eigen::Index>(i), 0);
        sum += v;
        sq += v * v;
        ++count;
      }
      const double mean = count ? sum / static_cast<double>(count) : 0.0;
      const double var =
          count ? std::max(0.0, sq / static_cast<double>(count) - mean * mean) : 0.0;
      groups[labels->categories()[j]] = {
          {"count", count}, {"pc1_mean", mean}, {"pc1_std", std::sqrt(var)}};
    }
    m["pc1_by_label"] = groups;
  }
  if (!cfg.baseline_out.empty()) {
    save_eraser(cfg.baseline_out, fit_pc1_baseline(x));
    m["baseline_eraser"] = cfg.baseline_out;
  }
  report.emit(out);
  return kExitOk;
}

inline SyntheticSpec load_spec(const RunConfig& cfg) {
  require_file(cfg.spec, "--spec");
  SyntheticSpec spec = load_synthetic_spec(cfg.spec);
  if (cfg.seed_given) spec.seed = cfg.seed;
  return spec;
}

inline int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  if (cfg.out.empty()) throw ValidationError("--out (a directory) is required");
  const SyntheticSpec spec = load_spec(cfg);
  const SyntheticCorpus corpus = generate(spec);
  std::filesystem::create_directories(cfg.out);
  const std::filesystem::path dir(cfg.out);
  const std::string emb = (dir / "embeddings.embx").string();
  const std::string concept_path = (dir / "concept.txt").string();
  const std::string gold_path = (dir / "gold.txt").string();
  const std::string pairs_path = (dir / "pairs.txt").string();
  write_embeddings(emb, corpus.x, MatrixFormat::kEmbx);
  write_labels(concept_path, corpus.source);
  write_labels(gold_path, corpus.gold);
  write_pairs(pairs_path, corpus.pairs);
  write_file((dir / "spec.json").string(), to_json(spec).dump(2) + "\n");

  nlohmann::json manifest = {
      {"rows", corpus.x.rows()},
      {"cols", corpus.x.cols()},
      {"seed", spec.seed},
      {"files",
       {{"embeddings", {{"path", emb}, {"sha256", sha256_file(emb)}}},
        {"concept", {{"path", concept_path}, {"sha256", sha256_file(concept_path)}}},
        {"gold", {{"path", gold_path}, {"sha256", sha256_file(gold_path)}}},
        {"pairs", {{"path", pairs_path}, {"sha256", sha256_file(pairs_path)}}}}}};
  write_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
  out << manifest.dump() << "\n";
  return kExitOk;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  if (cfg.strengths.empty()) throw ValidationError("--strength is required");
  if (cfg.replicates < 1) throw ValidationError("--replicates must be >= 1");
  require_out_dir(cfg.out);
  Report report(cfg);
  SyntheticSpec base = load_spec(cfg);
  report.input("spec", cfg.spec);
  report.config("strengths", cfg.strengths);
  report.config("replicates", cfg.replicates);
  report.config("similarity", cfg.similarity);

  SweepOptions opts;
  opts.rtol = cfg.rtol;
  opts.similarity = parse_similarity(cfg.similarity);
  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> ratio;
  std::vector<double> gain;
  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    SyntheticSpec spec = base;
    spec.seed = base.seed + r;
    for (const SweepRow& row : sweep_confounder_strength(spec, cfg.strengths, opts)) {
      rows.push_back({{"strength", row.strength},
                      {"seed", row.seed},
                      {"pc1_ratio", row.pc1_ratio},
                      {"recall1_before", row.recall1_before},
                      {"recall1_after", row.recall1_after},
                      {"recall1_improvement", row.improvement()}});
      ratio.push_back(row.pc1_ratio);
      gain.push_back(row.improvement());
    }
  }
  report.metrics()["rows"] = rows;
  try {
    report.metrics()["pearson_pc1_ratio_vs_improvement"] = pearson(ratio, gain);
  } catch (const Error&) {
    report.metrics()["pearson_pc1_ratio_vs_improvement"] = nullptr;
  }
  report.emit(out);
  return kExitOk;
}

}  // namespace detail

inline int dispatch(const RunConfig& cfg, std::ostream& out) {
  if (cfg.subcommand == "fit") return detail::cmd_fit(cfg, out);
  if (cfg.subcommand == "apply") return detail::cmd_apply(cfg, out);
  if (cfg.subcommand == "eval-cluster") return detail::cmd_eval_cluster(cfg, out);
  if (cfg.subcommand == "eval-retrieve") return detail::cmd_eval_retrieve(cfg, out);
  if (cfg.subcommand == "pca") return detail::cmd_pca(cfg, out);
  if (cfg.subcommand == "synth") return detail::cmd_synth(cfg, out);
  if (cfg.subcommand == "sweep") return detail::cmd_sweep(cfg, out);
  throw ValidationError("unknown subcommand '" + cfg.subcommand + "'");
}

// args[0] is the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Fit, apply and evaluate linear concept erasers on embeddings",
               args.empty() ? kToolName : args[0]};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_embeddings = [&](CLI::App* sub, bool required) {
    auto* o = sub->add_option("--embeddings", cfg.embeddings,
                              "embedding matrix (EMBX or CSV)");
    if (required) o->required();
    sub->add_option("--format", cfg.format, "input matrix format")
        ->check(CLI::IsMember({"auto", "embx", "csv"}));
  };
  auto add_out = [&](CLI::App* sub, const std::string& help) {
    sub->add_option("--out", cfg.out, help);
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "random seed")->each([&](const std::string&) {
      cfg.seed_given = true;
    });
  };

  auto* fit_cmd = app.add_subcommand("fit", "fit an eraser from embeddings and labels");
  add_embeddings(fit_cmd, true);
  fit_cmd->add_option("--labels", cfg.labels, "concept label file")->required();
  fit_cmd->add_option("--rtol", cfg.rtol, "relative rank cutoff");
  add_out(fit_cmd, "eraser JSON path");

  auto* apply_cmd = app.add_subcommand("apply", "apply an eraser to embeddings");
  add_embeddings(apply_cmd, true);
  apply_cmd->add_option("--eraser", cfg.eraser, "eraser JSON")->required();
  add_out(apply_cmd, "adjusted embeddings (.csv for CSV, else EMBX)");

  auto* cluster_cmd =
      app.add_subcommand("eval-cluster", "k-means purity/ARI before and after erasure");
  add_embeddings(cluster_cmd, true);
  cluster_cmd->add_option("--gold", cfg.gold, "gold category labels")->required();
  cluster_cmd->add_option("--eraser", cfg.eraser, "eraser JSON");
  cluster_cmd->add_option("--k", cfg.ks, "cluster count (repeatable)");
  cluster_cmd->add_option("--restarts", cfg.restarts, "k-means restarts");
  cluster_cmd->add_flag("--normalize-rows", cfg.normalize_rows,
                        "unit-normalize rows before clustering");
  add_seed(cluster_cmd);
  add_out(cluster_cmd, "metrics JSON path (stdout if omitted)");

  auto* retrieve_cmd =
      app.add_subcommand("eval-retrieve", "Recall@k of paired items before and after");
  add_embeddings(retrieve_cmd, true);
  retrieve_cmd->add_option("--pairs", cfg.pairs, "pair file")->required();
  retrieve_cmd->add_option("--eraser", cfg.eraser, "eraser JSON");
  retrieve_cmd->add_option("--recall-at", cfg.recall_at, "recall cutoff (repeatable)");
  retrieve_cmd->add_option("--similarity", cfg.similarity, "cosine or dot")
      ->check(CLI::IsMember({"cosine", "dot"}));
  retrieve_cmd->add_flag("--normalize-rows", cfg.normalize_rows,
                         "unit-normalize rows before ranking");
  add_seed(retrieve_cmd);
  add_out(retrieve_cmd, "metrics JSON path (stdout if omitted)");

  auto* pca_cmd = app.add_subcommand("pca", "explained variance and PC1 scores");
  add_embeddings(pca_cmd, true);
  pca_cmd->add_option("--components", cfg.components, "number of components");
  pca_cmd->add_option("--labels", cfg.labels, "labels to summarize PC1 scores by");
  pca_cmd->add_option("--baseline-out", cfg.baseline_out,
                      "write the PC1-removal eraser here");
  pca_cmd->add_flag("--normalize-rows", cfg.normalize_rows, "unit-normalize rows first");
  add_seed(pca_cmd);
  add_out(pca_cmd, "metrics JSON path (stdout if omitted)");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth_cmd->add_option("--spec", cfg.spec, "synthetic spec JSON")->required();
  add_seed(synth_cmd);
  add_out(synth_cmd, "output directory");

  auto* sweep_cmd = app.add_subcommand("sweep", "confounder-strength sweep");
  sweep_cmd->add_option("--spec", cfg.spec, "synthetic spec JSON")->required();
  sweep_cmd->add_option("--strength", cfg.strengths, "source loading scale (repeatable)")
      ->required();
  sweep_cmd->add_option("--replicates", cfg.replicates, "seeds per strength");
  sweep_cmd->add_option("--similarity", cfg.similarity, "cosine or dot")
      ->check(CLI::IsMember({"cosine", "dot"}));
  sweep_cmd->add_option("--rtol", cfg.rtol, "relative rank cutoff");
  add_seed(sweep_cmd);
  add_out(sweep_cmd, "metrics JSON path (stdout if omitted)");

  std::vector<std::string> owned = args.empty() ? std::vector<std::string>{kToolName} : args;
  std::vector<char*> argv;
  for (auto& a : owned) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }
  for (auto* sub : app.get_subcommands()) cfg.subcommand = sub->get_name();

  try {
    return dispatch(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.category() == Error::Category::kNumerical ? kExitNumerical : kExitInput;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace leace::cli

#endif  // LEACE_CLI_HPP_
