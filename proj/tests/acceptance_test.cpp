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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Synthetic configurations live in configs/.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leace/leace.hpp"
#include "oracles.hpp"

namespace {

using namespace leace;
namespace fs = std::filesystem;

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  // Records a failed requirement without stopping the criterion.
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // 0 means no limit
  std::function<void(Outcome&)> body;
};

std::string config_path(const std::string& name) {
  return std::string(LEACE_SOURCE_DIR) + "/configs/" + name;
}

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = normal(rng);
  return m;
}

Matrix random_rotation(std::mt19937_64& rng, Eigen::Index d) {
  return Eigen::HouseholderQR<Matrix>(gaussian(rng, d, d)).householderQ();
}

// Mixed Gaussian rows with class-dependent shifts; classes cycle so every
// category is populated.
std::pair<Matrix, ConceptLabels> random_instance(std::mt19937_64& rng, Eigen::Index n,
                                                 Eigen::Index d, std::size_t k) {
  const Matrix shifts = 2.0 * gaussian(rng, static_cast<Eigen::Index>(k), d);
  Matrix x = gaussian(rng, n, d) * gaussian(rng, d, d);
  std::vector<std::size_t> codes(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    codes[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i) % k;
    x.row(i) += shifts.row(static_cast<Eigen::Index>(static_cast<std::size_t>(i) % k));
  }
  return {x, ConceptLabels::from_codes(codes, k)};
}

// ---------------------------------------------------------------------------

void guardedness(Outcome& o) {
  const SyntheticSpec spec = default_synthetic_spec();
  const SyntheticCorpus corpus = generate(spec);
  const LeaceEraser e = fit(corpus.x, corpus.source);
  const Matrix adjusted = apply(e, corpus.x);
  const Matrix hot = one_hot(corpus.source);
  const double before_acc = linear_probe_accuracy(corpus.x, corpus.source);
  const double after_acc = linear_probe_accuracy(adjusted, corpus.source);
  const double majority = corpus.source.majority_rate();
  const double cov_before = covariance(corpus.x, hot).norm();
  const double rel = covariance(adjusted, hot).norm() / cov_before;
  o.detail << "n=" << corpus.x.rows() << " probe " << before_acc << " -> " << after_acc
           << " (majority " << majority << "), rel cov " << rel;
  o.require(corpus.x.rows() == 2400 && spec.d == 64, "default spec shape");
  o.require(before_acc >= 0.90, "probe before >= 0.90");
  o.require(after_acc <= majority + 0.02, "probe after <= majority + 0.02");
  o.require(rel <= 1e-8, "relative cross-covariance <= 1e-8");
}

void minimality(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<Eigen::Index> dim(1, 4), rows(8, 64);
  double worst_gap = 0.0, worst_excess = -1e300;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index d = dim(rng);
    const std::size_t k = trial % 2 == 0 ? 2 : 3;
    const auto [x, c] = random_instance(rng, rows(rng), d, k);
    const double ours = mean_squared_distortion(fit(x, c), x);
    const double ref = oracle::min_distortion_under_constraint(x, one_hot(c)).objective;
    worst_gap = std::max(worst_gap, std::abs(ours - ref));
    worst_excess = std::max(worst_excess, ours - ref);
  }
  o.detail << "50 instances, max |gap| " << worst_gap << ", max excess " << worst_excess;
  o.require(worst_gap <= 1e-5, "|LEACE - oracle| <= 1e-5");
  o.require(worst_excess <= 1e-6, "LEACE <= oracle + 1e-6");
}

void hand_case(Outcome& o) {
  Matrix x(2, 1);
  x << 1, -1;
  const LeaceEraser e = fit(x, ConceptLabels::from_labels({"A", "B"}));
  const Matrix adjusted = apply(e, x);
  o.detail << "P=" << e.proj(0, 0) << " b=" << e.offset(0);
  o.require(std::abs(e.proj(0, 0)) <= 1e-12, "P = [[0]]");
  o.require(std::abs(e.offset(0)) <= 1e-12, "b = (0)");
  o.require(adjusted.cwiseAbs().maxCoeff() <= 1e-12, "adjusted points are 0");
}

void idempotence_equivariance(Outcome& o) {
  std::mt19937_64 rng(4);
  double idem = 0.0, scale = 0.0, rot = 0.0;
  bool ok_idem = true;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index d = 2 + trial % 7;
    const auto [x, c] = random_instance(rng, 40 + 5 * trial, d, 2 + trial % 4);
    const LeaceEraser e = fit(x, c);
    const double r_idem = (e.proj * e.proj - e.proj).norm();
    idem = std::max(idem, r_idem / static_cast<double>(d));
    ok_idem = ok_idem && r_idem <= 1e-8 * static_cast<double>(d);

    const double s = std::exp(std::uniform_real_distribution<double>(-4.0, 4.0)(rng));
    scale = std::max(scale, (fit(s * x, c).proj - e.proj).cwiseAbs().maxCoeff());

    const Matrix r = random_rotation(rng, d);
    const LeaceEraser rotated = fit(x * r.transpose(), c);
    rot = std::max(rot, (rotated.proj - r * e.proj * r.transpose()).cwiseAbs().maxCoeff());
  }
  o.detail << "max ||P^2-P||_F/d " << idem << ", scale " << scale << ", rotation " << rot;
  o.require(ok_idem, "||P^2 - P||_F <= 1e-8 d");
  o.require(scale <= 1e-8, "scale invariance within 1e-8");
  o.require(rot <= 1e-7, "rotation equivariance within 1e-7");
}

void zero_confounder(Outcome& o) {
  double p_err = 0.0, b_err = 0.0, moved = 0.0;
  auto check = [&](const Matrix& x, const ConceptLabels& c) {
    const LeaceEraser e = fit(x, c);
    const auto d = x.cols();
    p_err = std::max(p_err, (e.proj - Matrix::Identity(d, d)).cwiseAbs().maxCoeff());
    b_err = std::max(b_err, e.offset.cwiseAbs().maxCoeff());
    moved = std::max(moved, (apply(e, x) - x).cwiseAbs().maxCoeff());
  };
  Matrix line(4, 1);
  line << 1, -1, 1, -1;
  check(line, ConceptLabels::from_labels({"A", "A", "B", "B"}));
  // Every class holds the same multiset of rows, so Cov(X, C) = 0 exactly.
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index d = 2 + trial % 5;
    const std::size_t k = 2 + static_cast<std::size_t>(trial % 3);
    const Matrix base = gaussian(rng, 12, d);
    Matrix x(12 * static_cast<Eigen::Index>(k), d);
    std::vector<std::size_t> codes;
    for (std::size_t j = 0; j < k; ++j) {
      x.middleRows(12 * static_cast<Eigen::Index>(j), 12) = base;
      codes.insert(codes.end(), 12, j);
    }
    check(x, ConceptLabels::from_codes(codes, k));
  }
  o.detail << "max |P-I| " << p_err << ", max |b| " << b_err << ", max |x~-x| " << moved;
  o.require(p_err <= 1e-10, "P = I within 1e-10");
  o.require(b_err <= 1e-10, "b = 0 within 1e-10");
  o.require(moved <= 1e-9, "adjusted within 1e-9 of input");
}

void metric_correctness(Outcome& o) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> size(2, 30), arity(1, 6);
  double purity_err = 0.0, ari_err = 0.0, self_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = size(rng);
    std::vector<std::size_t> a(n), b(n);
    std::uniform_int_distribution<std::size_t> ka(0, arity(rng) - 1), kb(0, arity(rng) - 1);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = ka(rng);
      b[i] = kb(rng);
    }
    purity_err = std::max(purity_err, std::abs(purity(a, b) - oracle::purity(a, b)));
    const ContingencyTable t = contingency(a, b);
    if (t.rows > 1 || t.cols > 1) {
      ari_err = std::max(ari_err, std::abs(ari(a, b) - oracle::ari_pairs(a, b)));
    }
    self_err = std::max(self_err, std::abs(ari(a, a) - 1.0));
  }
  std::vector<std::size_t> one(20, 0), balanced(20);
  for (std::size_t i = 0; i < 20; ++i) balanced[i] = i % 2;
  const double trivial = ari(one, balanced);
  o.detail << "purity err " << purity_err << ", ari err " << ari_err << ", ARI(a,a)-1 "
           << self_err << ", one-vs-balanced " << trivial;
  o.require(purity_err <= 1e-12, "purity matches oracle");
  o.require(ari_err <= 1e-12, "ARI matches oracle");
  o.require(self_err == 0.0, "ARI(a,a) = 1");
  o.require(std::abs(trivial) <= 1e-12, "one-cluster vs balanced ARI = 0");
}

void clustering_direction(Outcome& o) {
  const SyntheticSpec spec = load_synthetic_spec(config_path("clustering_flip.json"));
  const SyntheticCorpus corpus = generate(spec);
  const std::vector<std::size_t>& gold = corpus.gold.codes();
  const ClusterResult before = kmeans(corpus.x, spec.topics, spec.seed);
  const Matrix adjusted = apply(fit(corpus.x, corpus.source), corpus.x);
  const ClusterResult after = kmeans(adjusted, spec.topics, spec.seed);
  const double ari_before = ari(before.assignments, gold);
  const double ari_after = ari(after.assignments, gold);
  o.detail << "seed " << spec.seed << ", ARI vs topics " << ari_before << " -> " << ari_after;
  o.require(ari_before < 0.3, "ARI before < 0.3");
  o.require(ari_after > 0.9, "ARI after > 0.9");
}

void retrieval_direction(Outcome& o) {
  const SyntheticSpec spec = load_synthetic_spec(config_path("bilingual.json"));
  const SyntheticCorpus corpus = generate(spec);
  const std::vector<std::size_t> ks = {1, 5, 10, 50, 100};
  const RetrievalResult before = recall_at_k(corpus.x, corpus.pairs, {}, ks);
  const Matrix adjusted = apply(fit(corpus.x, corpus.source), corpus.x);
  const RetrievalResult after = recall_at_k(adjusted, corpus.pairs, {}, ks);
  bool monotone = true;
  for (std::size_t i = 1; i < ks.size(); ++i) {
    monotone = monotone && before.recall_at.at(ks[i - 1]) <= before.recall_at.at(ks[i]) &&
               after.recall_at.at(ks[i - 1]) <= after.recall_at.at(ks[i]);
  }
  const double gain = after.recall_at.at(1) - before.recall_at.at(1);
  o.detail << before.queries() << " queries, R@1 " << before.recall_at.at(1) << " -> "
           << after.recall_at.at(1) << ", R@10 " << before.recall_at.at(10) << " -> "
           << after.recall_at.at(10);
  o.require(gain >= 0.3, "R@1 gain >= 0.3");
  o.require(monotone, "Recall@k monotone in k");
}

void pc1_correlation(Outcome& o) {
  const SyntheticSpec base = load_synthetic_spec(config_path("bilingual.json"));
  const std::vector<double> strengths = {0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0};
  std::vector<double> ratio, gain;
  for (std::uint64_t r = 0; r < 3; ++r) {
    SyntheticSpec spec = base;
    spec.seed = base.seed + r;
    for (const SweepRow& row : sweep_confounder_strength(spec, strengths)) {
      ratio.push_back(row.pc1_ratio);
      gain.push_back(row.improvement());
    }
  }
  const double r = pearson(ratio, gain);
  o.detail << strengths.size() << " strengths x 3 seeds, pearson " << r;
  o.require(r > 0.5, "pearson > 0.5");
}

void pc1_baseline_contrast(Outcome& o) {
  const SyntheticSpec spec = load_synthetic_spec(config_path("pc1_contrast.json"));
  const SyntheticCorpus corpus = generate(spec);
  const std::vector<std::size_t>& gold = corpus.gold.codes();
  auto topic_ari = [&](const Matrix& m) {
    return ari(kmeans(m, spec.topics, spec.seed).assignments, gold);
  };
  const double none = topic_ari(corpus.x);
  const double pc1 = topic_ari(apply(fit_pc1_baseline(corpus.x), corpus.x));
  const double leace = topic_ari(apply(fit(corpus.x, corpus.source), corpus.x));
  o.detail << "topic ARI: none " << none << ", PC1 removal " << pc1 << ", LEACE " << leace;
  o.require(pc1 < none, "PC1 removal degrades ARI");
  o.require(leace > none, "LEACE improves ARI");
}

void numerics(Outcome& o) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<Eigen::Index> dim(2, 8);
  double mp = 0.0, proj = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = dim(rng);
    const Eigen::Index rank = std::uniform_int_distribution<Eigen::Index>(1, d)(rng);
    const Matrix factor = gaussian(rng, d, rank);
    const Matrix psd = factor * factor.transpose();
    const Matrix rect = gaussian(rng, d + 2, rank) * gaussian(rng, rank, d);
    for (const Matrix& a : {psd, rect}) {
      const Matrix p = pinv(a);
      mp = std::max({mp, (a * p * a - a).cwiseAbs().maxCoeff(),
                     (p * a * p - p).cwiseAbs().maxCoeff(),
                     ((a * p).transpose() - a * p).cwiseAbs().maxCoeff(),
                     ((p * a).transpose() - p * a).cwiseAbs().maxCoeff()});
    }
    const Matrix w = inv_sqrt_psd(psd);
    const Matrix q = w * psd * w;
    proj = std::max({proj, (q * q - q).cwiseAbs().maxCoeff(),
                     (q - q.transpose()).cwiseAbs().maxCoeff(),
                     (q * psd - psd).cwiseAbs().maxCoeff()});
  }
  o.detail << "100 matrices, max MP residual " << mp << ", max projector residual " << proj;
  o.require(mp <= 1e-8, "Moore-Penrose identities within 1e-8");
  o.require(proj <= 1e-8, "inverse square root projector within 1e-8");
}

// Runs the installed binary; returns its exit status.
int shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void reproducibility(Outcome& o) {
  const fs::path dir = fs::temp_directory_path() / "leace_acceptance_repro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string bin = LEACE_CLI_PATH;
  auto p = [&](const std::string& name) { return (dir / name).string(); };

  write_file(p("spec.json"), R"({"d": 16, "topics": 4, "sources": 2, "n_per_cell": 30,
                                 "u_dim": 4, "loading_u": {"random_orthogonal": 0.3},
                                 "loading_c": {"random_orthogonal": 2.0}})");
  o.require(shell(bin + " synth --spec " + p("spec.json") + " --out " + p("c")) == 0, "synth");
  const std::string emb = p("c/embeddings.embx");
  o.require(shell(bin + " fit --embeddings " + emb + " --labels " + p("c/concept.txt") +
                  " --out " + p("e.json")) == 0,
            "fit");

  const std::vector<std::pair<std::string, std::string>> runs = {
      {"eval-cluster", "eval-cluster --embeddings " + emb + " --gold " + p("c/gold.txt") +
                           " --eraser " + p("e.json") + " --k 2 --k 4 --k 8"},
      {"eval-retrieve", "eval-retrieve --embeddings " + emb + " --pairs " + p("c/pairs.txt") +
                            " --eraser " + p("e.json") + " --recall-at 1 --recall-at 5"},
      {"pca", "pca --embeddings " + emb + " --labels " + p("c/concept.txt") +
                  " --baseline-out " + p("pc1.json")},
      {"sweep", "sweep --spec " + p("spec.json") +
                    " --strength 0 --strength 1 --strength 2 --replicates 2"},
      {"apply", "apply --embeddings " + emb + " --eraser " + p("e.json") + " --out " +
                    p("adjusted_%.embx")},
  };
  auto strip = [](const std::string& text) {
    auto doc = nlohmann::json::parse(text);
    doc.erase("timestamp");
    return doc.dump();
  };
  std::size_t compared = 0;
  for (const auto& [name, args] : runs) {
    std::string outputs[2], sidecar[2];
    for (int rep = 0; rep < 2; ++rep) {
      std::string cmd = args;
      const auto pct = cmd.find('%');
      if (pct != std::string::npos) cmd.replace(pct, 1, std::to_string(rep));
      const std::string out = p(name + "_" + std::to_string(rep) + ".json");
      if (name != "apply") cmd += " --out " + out;
      if (shell(bin + " " + cmd) != 0) {
        o.require(false, name + " exited non-zero");
        break;
      }
      if (name == "apply") {
        outputs[rep] = read_file(p("adjusted_" + std::to_string(rep) + ".embx"));
      } else {
        outputs[rep] = strip(read_file(out));
      }
      if (name == "pca") sidecar[rep] = read_file(p("pc1.json"));
    }
    o.require(!outputs[0].empty() && outputs[0] == outputs[1], name + " output identical");
    o.require(sidecar[0] == sidecar[1], name + " side output identical");
    ++compared;
  }
  o.detail << compared << " commands run twice";
  fs::remove_all(dir);
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "Guardedness certificate", 5.0, guardedness},
      {2, "Minimality oracle", 60.0, minimality},
      {3, "Closed-form hand case", 0.0, hand_case},
      {4, "Idempotence and equivariance", 0.0, idempotence_equivariance},
      {5, "Zero-confounder no-op", 0.0, zero_confounder},
      {6, "Metric correctness", 0.0, metric_correctness},
      {7, "Clustering direction", 10.0, clustering_direction},
      {8, "Retrieval direction", 0.0, retrieval_direction},
      {9, "PC1 correlation", 60.0, pc1_correlation},
      {10, "PC1-baseline contrast", 0.0, pc1_baseline_contrast},
      {11, "Numerics", 0.0, numerics},
      {12, "Reproducibility", 0.0, reproducibility},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0.0 && secs >= c.time_limit_s) {
      o.ok = false;
      o.detail << " [over time limit " << c.time_limit_s << " s]";
    }
    failures += !o.ok;
    std::printf("%s %2d %s (%.2f s): %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name.c_str(),
                secs, o.detail.str().c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
