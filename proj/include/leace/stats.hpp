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

#ifndef LEACE_STATS_HPP_
#define LEACE_STATS_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "leace/error.hpp"
#include "leace/labels.hpp"
#include "leace/linalg.hpp"

namespace leace {

// Mergeable first and second moments of (X, one_hot(C)).
//
// Stores means and centered co-moments rather than raw sums; batches are
// combined with the pairwise update of Chan, Golub and LeVeque, so merging
// two objects equals accumulating the union of their rows up to round-off.
class SufficientStats {
 public:
  SufficientStats(std::size_t dim, std::vector<std::string> categories)
      : categories_(std::move(categories)),
        mean_x_(RowVector::Zero(static_cast<Eigen::Index>(dim))),
        mean_c_(RowVector::Zero(static_cast<Eigen::Index>(categories_.size()))),
        comoment_xx_(Matrix::Zero(mean_x_.size(), mean_x_.size())),
        comoment_xc_(Matrix::Zero(mean_x_.size(), mean_c_.size())) {
    if (dim == 0) throw DimensionError("stats dimension must be positive");
    if (categories_.size() < 2) {
      throw ValidationError("stats need at least 2 categories");
    }
  }

  void accumulate(const Matrix& x, const ConceptLabels& c) {
    if (static_cast<std::size_t>(x.rows()) != c.size()) {
      throw DimensionError("embedding rows (" + std::to_string(x.rows()) +
                           ") != label rows (" + std::to_string(c.size()) +
                           ")");
    }
    if (x.cols() != mean_x_.size()) {
      throw DimensionError("embedding width " + std::to_string(x.cols()) +
                           " != stats dimension " +
                           std::to_string(mean_x_.size()));
    }
    if (c.categories() != categories_) {
      throw ValidationError("label categories differ from stats categories");
    }
    require_finite(x, "embeddings");
    if (x.rows() == 0) return;
    const Matrix hot = one_hot(c);
    SufficientStats batch(static_cast<std::size_t>(x.cols()), categories_);
    batch.n_ = static_cast<std::size_t>(x.rows());
    batch.mean_x_ = column_mean(x);
    batch.mean_c_ = column_mean(hot);
    const Matrix xc = centered(x, batch.mean_x_);
    batch.comoment_xx_ = xc.transpose() * xc;
    batch.comoment_xc_ = xc.transpose() * centered(hot, batch.mean_c_);
    merge(batch);
  }

  void merge(const SufficientStats& other) {
    if (other.dim() != dim() || other.categories_ != categories_) {
      throw DimensionError("cannot merge stats of different shape");
    }
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double total = na + nb;
    const RowVector dx = other.mean_x_ - mean_x_;
    const RowVector dc = other.mean_c_ - mean_c_;
    const double w = na * nb / total;
    comoment_xx_ += other.comoment_xx_ + w * dx.transpose() * dx;
    comoment_xc_ += other.comoment_xc_ + w * dx.transpose() * dc;
    mean_x_ += dx * (nb / total);
    mean_c_ += dc * (nb / total);
    n_ += other.n_;
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t dim() const noexcept {
    return static_cast<std::size_t>(mean_x_.size());
  }
  std::size_t arity() const noexcept { return categories_.size(); }
  const std::vector<std::string>& categories() const noexcept {
    return categories_;
  }
  const RowVector& mean_x() const noexcept { return mean_x_; }
  const RowVector& mean_c() const noexcept { return mean_c_; }

  // Rows per category, recovered from the one-hot means.
  std::vector<std::size_t> category_counts() const {
    std::vector<std::size_t> out(arity());
    for (std::size_t j = 0; j < arity(); ++j) {
      out[j] = static_cast<std::size_t>(
          std::llround(mean_c_(static_cast<Eigen::Index>(j)) *
                       static_cast<double>(n_)));
    }
    return out;
  }

  Matrix cov_xx() const { return comoment_xx_ / normalizer(); }
  Matrix cov_xc() const { return comoment_xc_ / normalizer(); }

  // trace Cov(one_hot(C)) = sum_j p_j (1 - p_j).
  double cov_cc_trace() const {
    return (mean_c_.array() * (1.0 - mean_c_.array())).sum();
  }

 private:
  double normalizer() const {
    if (n_ < 2) throw InsufficientDataError("stats need at least 2 rows");
    return static_cast<double>(n_);
  }

  std::size_t n_ = 0;
  std::vector<std::string> categories_;
  RowVector mean_x_;
  RowVector mean_c_;
  Matrix comoment_xx_;
  Matrix comoment_xc_;
};

}  // namespace leace

#endif  // LEACE_STATS_HPP_
