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

#ifndef LEACE_METRICS_HPP_
#define LEACE_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "leace/config.hpp"
#include "leace/error.hpp"
#include "leace/labels.hpp"
#include "leace/linalg.hpp"

namespace leace {

using IndexPair = std::pair<std::size_t, std::size_t>;

// ---------------------------------------------------------------------------
// Partition comparison.

struct ContingencyTable {
  std::size_t rows = 0;  // distinct labels of the first partition
  std::size_t cols = 0;  // distinct labels of the second partition
  std::vector<std::int64_t> counts;  // row-major rows x cols
  std::size_t n = 0;

  std::int64_t at(std::size_t r, std::size_t c) const {
    return counts[r * cols + c];
  }
  std::vector<std::int64_t> row_sums() const {
    std::vector<std::int64_t> out(rows, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) out[r] += at(r, c);
    }
    return out;
  }
  std::vector<std::int64_t> col_sums() const {
    std::vector<std::int64_t> out(cols, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) out[c] += at(r, c);
    }
    return out;
  }
};

namespace detail {

// Relabels arbitrary ids densely in order of first appearance.
inline std::vector<std::size_t> dense_ids(const std::vector<std::size_t>& ids,
                                          std::size_t& distinct) {
  std::unordered_map<std::size_t, std::size_t> map;
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) {
    auto [it, inserted] = map.emplace(id, map.size());
    out.push_back(it->second);
  }
  distinct = map.size();
  return out;
}

inline double choose2(std::int64_t m) {
  return static_cast<double>(m) * static_cast<double>(m - 1) / 2.0;
}

}  // namespace detail

inline ContingencyTable contingency(const std::vector<std::size_t>& a,
                                    const std::vector<std::size_t>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("partitions differ in length: " +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  ContingencyTable t;
  const auto da = detail::dense_ids(a, t.rows);
  const auto db = detail::dense_ids(b, t.cols);
  t.counts.assign(t.rows * t.cols, 0);
  for (std::size_t i = 0; i < a.size(); ++i) ++t.counts[da[i] * t.cols + db[i]];
  t.n = a.size();
  return t;
}

// (1/n) sum over clusters of the size of the cluster's dominant gold class.
inline double purity(const std::vector<std::size_t>& assignments,
                     const std::vector<std::size_t>& gold) {
  const ContingencyTable t = contingency(assignments, gold);
  if (t.n == 0) throw ValidationError("purity needs at least one item");
  std::int64_t total = 0;
  for (std::size_t r = 0; r < t.rows; ++r) {
    std::int64_t best = 0;
    for (std::size_t c = 0; c < t.cols; ++c) best = std::max(best, t.at(r, c));
    total += best;
  }
  return static_cast<double>(total) / static_cast<double>(t.n);
}

// Adjusted Rand index (Hubert-Arabie). When the denominator vanishes (both
// partitions are all-singletons or all-one-cluster) the result is 1 for
// identical partitions and 0 otherwise.
inline double ari(const std::vector<std::size_t>& a,
                  const std::vector<std::size_t>& b) {
  const ContingencyTable t = contingency(a, b);
  if (t.n < 2) throw ValidationError("ari needs at least two items");
  double index = 0.0;
  for (std::int64_t v : t.counts) index += detail::choose2(v);
  double sum_a = 0.0;
  for (std::int64_t v : t.row_sums()) sum_a += detail::choose2(v);
  double sum_b = 0.0;
  for (std::int64_t v : t.col_sums()) sum_b += detail::choose2(v);
  const double pairs = detail::choose2(static_cast<std::int64_t>(t.n));
  const double expected = sum_a * sum_b / pairs;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) {
    // Identical partitions have one nonzero cell per row and per column.
    bool identical = t.rows == t.cols;
    for (std::size_t r = 0; identical && r < t.rows; ++r) {
      std::size_t nonzero = 0;
      for (std::size_t c = 0; c < t.cols; ++c) nonzero += t.at(r, c) != 0;
      identical = nonzero == 1;
    }
    return identical ? 1.0 : 0.0;
  }
  return (index - expected) / denom;
}

// ---------------------------------------------------------------------------
// Retrieval.

enum class Similarity { kCosine, kDot };

struct RetrievalResult {
  // Per query, 1-based rank of the counterpart among the candidates; empty
  // when the counterpart is not a candidate. Queries are ordered a->b then
  // b->a for each pair in input order.
  std::vector<std::optional<std::size_t>> ranks;
  std::map<std::size_t, double> recall_at;

  std::size_t queries() const noexcept { return ranks.size(); }
};

// Every pair (a, b) is queried in both directions. Candidates default to all
// rows; the query itself is never ranked. Ties go to the lower row index.
inline RetrievalResult recall_at_k(const Matrix& x,
                                   const std::vector<IndexPair>& pairs,
                                   std::vector<std::size_t> candidates,
                                   const std::vector<std::size_t>& ks,
                                   Similarity similarity = Similarity::kCosine) {
  const auto n = static_cast<std::size_t>(x.rows());
  require_finite(x, "embeddings");
  for (const auto& [a, b] : pairs) {
    if (a >= n || b >= n) {
      throw ValidationError("pair (" + std::to_string(a) + "," +
                            std::to_string(b) + ") out of range for " +
                            std::to_string(n) + " rows");
    }
  }
  if (candidates.empty()) {
    candidates.resize(n);
    for (std::size_t i = 0; i < n; ++i) candidates[i] = i;
  }
  std::vector<char> is_candidate(n, 0);
  for (std::size_t c : candidates) {
    if (c >= n) {
      throw ValidationError("candidate " + std::to_string(c) +
                            " out of range for " + std::to_string(n) + " rows");
    }
    is_candidate[c] = 1;
  }
  candidates.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (is_candidate[i]) candidates.push_back(i);
  }
  for (std::size_t k : ks) {
    if (k == 0) throw ValidationError("recall cutoffs must be >= 1");
  }

  const Matrix vecs = similarity == Similarity::kCosine ? normalize_rows(x) : x;

  std::vector<IndexPair> queries;
  queries.reserve(2 * pairs.size());
  for (const auto& [a, b] : pairs) queries.emplace_back(a, b);
  for (const auto& [a, b] : pairs) queries.emplace_back(b, a);
  // Interleave so query order is a->b, b->a per pair.
  std::vector<IndexPair> ordered;
  ordered.reserve(queries.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    ordered.push_back(queries[p]);
    ordered.push_back(queries[p + pairs.size()]);
  }

  RetrievalResult out;
  out.ranks.resize(ordered.size());
  constexpr std::size_t kBlock = 256;
  for (std::size_t start = 0; start < ordered.size(); start += kBlock) {
    const std::size_t stop = std::min(ordered.size(), start + kBlock);
    Matrix qs(static_cast<Eigen::Index>(stop - start), vecs.cols());
    for (std::size_t q = start; q < stop; ++q) {
      qs.row(static_cast<Eigen::Index>(q - start)) =
          vecs.row(static_cast<Eigen::Index>(ordered[q].first));
    }
    const Matrix scores = qs * vecs.transpose();
    for (std::size_t q = start; q < stop; ++q) {
      const auto [query, target] = ordered[q];
      if (!is_candidate[target] || target == query) continue;
      const auto row = static_cast<Eigen::Index>(q - start);
      const double t_score = scores(row, static_cast<Eigen::Index>(target));
      std::size_t ahead = 0;
      for (std::size_t j : candidates) {
        if (j == query || j == target) continue;
        const double s = scores(row, static_cast<Eigen::Index>(j));
        if (s > t_score || (s == t_score && j < target)) ++ahead;
      }
      out.ranks[q] = ahead + 1;
    }
  }
  for (std::size_t k : ks) {
    std::size_t hits = 0;
    for (const auto& r : out.ranks) hits += r.has_value() && *r <= k;
    out.recall_at[k] = out.ranks.empty()
                           ? 0.0
                           : static_cast<double>(hits) /
                                 static_cast<double>(out.ranks.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Guardedness probe.

// Training accuracy of a one-vs-rest ridge least-squares probe predicting C
// from x: beta = (Cov(X) + ridge I)^-1 Cov(X, one_hot(C)), scores are
// centered-x * beta plus the class priors, prediction is the argmax. Scores
// within probe_tie_rtol of the best count as tied and resolve to the more
// frequent class, then the lower index. The probe family includes the
// constant majority predictor, so the result is never below majority_rate().
inline double linear_probe_accuracy(
    const Matrix& x, const ConceptLabels& c,
    double ridge = kDefaultTolerances.probe_ridge,
    double tie_rtol = kDefaultTolerances.probe_tie_rtol) {
  if (static_cast<std::size_t>(x.rows()) != c.size()) {
    throw DimensionError("embedding rows (" + std::to_string(x.rows()) +
                         ") != label rows (" + std::to_string(c.size()) + ")");
  }
  if (c.size() < c.arity() + 1) {
    throw InsufficientDataError("probe needs at least arity + 1 rows");
  }
  if (ridge < 0.0) throw ValidationError("ridge must be non-negative");
  require_finite(x, "embeddings");
  const Matrix hot = one_hot(c);
  const RowVector prior = column_mean(hot);
  const Matrix xc = centered(x, column_mean(x));
  const double n = static_cast<double>(x.rows());
  Matrix gram = xc.transpose() * xc / n;
  gram.diagonal().array() += ridge;
  const Matrix cross = xc.transpose() * centered(hot, prior) / n;
  const Matrix beta = gram.ldlt().solve(cross);
  Matrix scores = xc * beta;
  scores.rowwise() += prior;

  const auto counts = c.counts();
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double top = scores.row(i).maxCoeff();
    const double slack = tie_rtol * std::max(1.0, std::abs(top));
    std::size_t pick = 0;
    bool found = false;
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (scores(i, j) < top - slack) continue;
      const auto jj = static_cast<std::size_t>(j);
      if (!found || counts[jj] > counts[pick]) {
        pick = jj;
        found = true;
      }
    }
    correct += pick == c.codes()[static_cast<std::size_t>(i)];
  }
  const double accuracy = static_cast<double>(correct) / n;
  return std::max(accuracy, c.majority_rate());
}

// ---------------------------------------------------------------------------
// Correlation.

inline double pearson(const std::vector<double>& u,
                      const std::vector<double>& v) {
  if (u.size() != v.size()) {
    throw DimensionError("pearson needs equal lengths");
  }
  if (u.size() < 3) throw ValidationError("pearson needs at least 3 points");
  const auto m = static_cast<Eigen::Index>(u.size());
  const Eigen::Map<const Vector> a(u.data(), m);
  const Eigen::Map<const Vector> b(v.data(), m);
  if (!a.allFinite() || !b.allFinite()) {
    throw ValidationError("pearson inputs must be finite");
  }
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  const double saa = ac.squaredNorm();
  const double sbb = bc.squaredNorm();
  if (saa == 0.0 || sbb == 0.0) {
    throw DegenerateInputError("pearson input has zero variance");
  }
  const double r = ac.dot(bc) / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace leace

#endif  // LEACE_METRICS_HPP_
