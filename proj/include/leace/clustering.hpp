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

#ifndef LEACE_CLUSTERING_HPP_
#define LEACE_CLUSTERING_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "leace/config.hpp"
#include "leace/error.hpp"
#include "leace/linalg.hpp"

namespace leace {

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
  double tol = 1e-6;  // stop once no centroid moves farther than this
};

struct ClusterResult {
  std::vector<std::size_t> assignments;
  Matrix centroids;  // k x d
  double inertia = 0.0;
  std::size_t iterations = 0;
  std::size_t restarts_used = 0;
  std::size_t winning_restart = 0;
  // Inertia after every assignment step of the winning restart.
  std::vector<double> inertia_history;
};

namespace detail {

struct LloydRun {
  std::vector<std::size_t> assignments;
  Matrix centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
  std::vector<double> history;
};

// Nearest centroid per row (ties to the lower index); returns the inertia.
inline double assign(const Matrix& x, const Matrix& centroids,
                     std::vector<std::size_t>& labels,
                     std::vector<double>& dist) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = centroids.rows();
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double d2 = (x.row(i) - centroids.row(j)).squaredNorm();
      if (d2 < best) {
        best = d2;
        arg = static_cast<std::size_t>(j);
      }
    }
    labels[static_cast<std::size_t>(i)] = arg;
    dist[static_cast<std::size_t>(i)] = best;
    inertia += best;
  }
  return inertia;
}

inline Matrix kmeanspp_init(const Matrix& x, std::size_t k,
                            std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  Matrix centroids(static_cast<Eigen::Index>(k), x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = x.row(first(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    d2[static_cast<std::size_t>(i)] = (x.row(i) - centroids.row(0)).squaredNorm();
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double run = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        run += d2[static_cast<std::size_t>(i)];
        if (run > target && d2[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centroids.row(static_cast<Eigen::Index>(c)) = x.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v =
          (x.row(i) - centroids.row(static_cast<Eigen::Index>(c))).squaredNorm();
      auto& cur = d2[static_cast<std::size_t>(i)];
      if (v < cur) cur = v;
    }
  }
  return centroids;
}

// Moves, for each empty cluster in index order, the point farthest from its
// centroid (taken from a cluster with more than one member) into it.
inline void fill_empty_clusters(std::vector<std::size_t>& labels,
                                std::vector<double>& dist,
                                std::vector<std::size_t>& counts) {
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = labels.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (counts[labels[i]] > 1 && dist[i] > far_d) {
        far_d = dist[i];
        far = i;
      }
    }
    if (far == labels.size()) return;  // fewer distinct rows than clusters
    --counts[labels[far]];
    labels[far] = c;
    dist[far] = 0.0;
    ++counts[c];
  }
}

inline LloydRun lloyd(const Matrix& x, Matrix centroids,
                      const KMeansOptions& opts) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto k = static_cast<std::size_t>(centroids.rows());
  LloydRun run;
  run.assignments.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
    run.history.push_back(assign(x, centroids, run.assignments, dist));
    ++run.iterations;

    std::vector<std::size_t> counts(k, 0);
    for (std::size_t label : run.assignments) ++counts[label];
    fill_empty_clusters(run.assignments, dist, counts);

    Matrix next = Matrix::Zero(centroids.rows(), centroids.cols());
    for (std::size_t i = 0; i < n; ++i) {
      next.row(static_cast<Eigen::Index>(run.assignments[i])) +=
          x.row(static_cast<Eigen::Index>(i));
    }
    for (std::size_t c = 0; c < k; ++c) {
      const auto cc = static_cast<Eigen::Index>(c);
      if (counts[c] > 0) {
        next.row(cc) /= static_cast<double>(counts[c]);
      } else {
        next.row(cc) = centroids.row(cc);
      }
    }
    const double shift = (next - centroids).rowwise().norm().maxCoeff();
    centroids = std::move(next);
    if (shift < opts.tol) break;
  }
  run.inertia = assign(x, centroids, run.assignments, dist);
  run.history.push_back(run.inertia);
  run.centroids = std::move(centroids);
  return run;
}

}  // namespace detail

// k-means with k-means++ seeding and Lloyd iterations; returns the restart
// with the lowest inertia (ties to the earliest restart). Deterministic for a
// fixed (x, k, seed, opts).
inline ClusterResult kmeans(const Matrix& x, std::size_t k,
                            std::uint64_t seed = kDefaultSeed,
                            const KMeansOptions& opts = {}) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (k < 1 || k > n) {
    throw DimensionError("k-means needs 1 <= k <= n, got k=" +
                         std::to_string(k) + " n=" + std::to_string(n));
  }
  if (!x.allFinite()) {
    throw ValidationError("k-means input contains NaN or infinite entries");
  }
  if (opts.restarts < 1 || opts.max_iter < 1) {
    throw ValidationError("k-means needs restarts >= 1 and max_iter >= 1");
  }

  ClusterResult best;
  bool have = false;
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    detail::LloydRun run =
        detail::lloyd(x, detail::kmeanspp_init(x, k, rng), opts);
    if (!have || run.inertia < best.inertia) {
      have = true;
      best.assignments = std::move(run.assignments);
      best.centroids = std::move(run.centroids);
      best.inertia = run.inertia;
      best.iterations = run.iterations;
      best.inertia_history = std::move(run.history);
      best.winning_restart = r;
    }
  }
  best.restarts_used = opts.restarts;
  return best;
}

}  // namespace leace

#endif  // LEACE_CLUSTERING_HPP_
