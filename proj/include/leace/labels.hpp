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

#ifndef LEACE_LABELS_HPP_
#define LEACE_LABELS_HPP_

#include <algorithm>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "leace/error.hpp"
#include "leace/linalg.hpp"

namespace leace {

// Per-row categorical values (a source, a language, a gold topic) together
// with the ordered list of categories they are drawn from.
class ConceptLabels {
 public:
  // Categories in order of first appearance.
  static ConceptLabels from_labels(std::vector<std::string> labels) {
    std::vector<std::string> categories;
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& label : labels) {
      if (seen.emplace(label, categories.size()).second) {
        categories.push_back(label);
      }
    }
    return ConceptLabels(std::move(labels), std::move(categories));
  }

  // Integer codes in [0, arity); category names are "0", "1", ...
  static ConceptLabels from_codes(const std::vector<std::size_t>& codes,
                                  std::size_t arity) {
    std::vector<std::string> categories;
    categories.reserve(arity);
    for (std::size_t j = 0; j < arity; ++j) {
      categories.push_back(std::to_string(j));
    }
    std::vector<std::string> labels;
    labels.reserve(codes.size());
    for (std::size_t code : codes) {
      if (code >= arity) {
        throw ValidationError("label code " + std::to_string(code) +
                              " outside arity " + std::to_string(arity));
      }
      labels.push_back(categories[code]);
    }
    return ConceptLabels(std::move(labels), std::move(categories));
  }

  ConceptLabels(std::vector<std::string> labels,
                std::vector<std::string> categories)
      : labels_(std::move(labels)), categories_(std::move(categories)) {
    if (categories_.size() < 2) {
      throw ValidationError("a concept needs at least 2 categories, got " +
                            std::to_string(categories_.size()));
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < categories_.size(); ++j) {
      if (!index.emplace(categories_[j], j).second) {
        throw ValidationError("duplicate category '" + categories_[j] + "'");
      }
    }
    codes_.reserve(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      auto it = index.find(labels_[i]);
      if (it == index.end()) {
        throw ValidationError("row " + std::to_string(i) + " has label '" +
                              labels_[i] + "' outside the category list");
      }
      codes_.push_back(it->second);
    }
  }

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t arity() const noexcept { return categories_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& categories() const noexcept {
    return categories_;
  }
  const std::vector<std::size_t>& codes() const noexcept { return codes_; }

  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> out(arity(), 0);
    for (std::size_t code : codes_) ++out[code];
    return out;
  }

  // Fraction of rows in the most frequent category.
  double majority_rate() const {
    if (codes_.empty()) return 0.0;
    std::size_t best = 0;
    for (std::size_t count : counts()) best = std::max(best, count);
    return static_cast<double>(best) / static_cast<double>(codes_.size());
  }

 private:
  std::vector<std::string> labels_;
  std::vector<std::string> categories_;
  std::vector<std::size_t> codes_;
};

// n x k indicator matrix, one column per category (all k columns kept).
inline Matrix one_hot(const ConceptLabels& c) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(c.size()),
                            static_cast<Eigen::Index>(c.arity()));
  const auto& codes = c.codes();
  for (std::size_t i = 0; i < codes.size(); ++i) {
    out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(codes[i])) = 1.0;
  }
  return out;
}

}  // namespace leace

#endif  // LEACE_LABELS_HPP_
