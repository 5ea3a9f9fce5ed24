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

#ifndef LEACE_ERASER_HPP_
#define LEACE_ERASER_HPP_

// Least-squares concept eraser (LEACE).
//
// Given embeddings X and a categorical concept C, the eraser is the affine map
//
//   x -> P x + b,   P = I - W^+ (W S_xc)(W S_xc)^+ W,   b = mu - P mu,
//
// where S_xx = Cov(X), S_xc = Cov(X, one_hot(C)), mu = E[X] and
// W = S_xx^{-1/2} is the whitening matrix. Among all affine maps whose output
// has zero cross-covariance with C it moves points least in mean squared
// Euclidean distance. The same map applies to rows that have no label.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "leace/config.hpp"
#include "leace/error.hpp"
#include "leace/labels.hpp"
#include "leace/linalg.hpp"
#include "leace/stats.hpp"

namespace leace {

struct LeaceEraser {
  Matrix proj;    // d x d
  Vector offset;  // d
  Vector mu;      // fit-time mean, d
  std::size_t arity = 0;        // 0 for erasers fit without a concept
  std::size_t erased_rank = 0;  // rank of I - P
  double rtol = kDefaultTolerances.rank_rtol;
  std::vector<std::string> categories;

  std::size_t dim() const noexcept {
    return static_cast<std::size_t>(proj.rows());
  }

  static LeaceEraser identity(std::size_t d) {
    LeaceEraser e;
    const auto n = static_cast<Eigen::Index>(d);
    e.proj = Matrix::Identity(n, n);
    e.offset = Vector::Zero(n);
    e.mu = Vector::Zero(n);
    return e;
  }
};

namespace detail {

inline LeaceEraser erase_from_moments(const Vector& mu, const Matrix& cov_xx,
                                      const Matrix& cov_xc, double cov_cc_trace,
                                      double rtol) {
  const Eigen::Index d = cov_xx.rows();
  const PsdRoots roots = psd_roots(cov_xx, rtol);
  const Matrix& whiten = roots.inv_sqrt;
  const Matrix& unwhiten = roots.sqrt;  // W^+

  // (W S_xc)(W S_xc)^+ is the orthogonal projector onto the column space of
  // W S_xc. After whitening, its singular values are canonical correlations
  // scaled by at most sqrt(tr Cov(C)), which sets the zero threshold even when
  // S_xc itself is pure round-off.
  const Matrix whitened_cross = whiten * cov_xc;
  Eigen::JacobiSVD<Matrix> svd(whitened_cross, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  const double top = s.size() > 0 ? s(0) : 0.0;
  const double cutoff = rtol * std::max(top, std::sqrt(cov_cc_trace));
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  const Matrix basis = svd.matrixU().leftCols(rank);

  LeaceEraser e;
  e.proj = Matrix::Identity(d, d) -
           unwhiten * (basis * basis.transpose()) * whiten;
  e.mu = mu;
  e.offset = mu - e.proj * mu;
  e.erased_rank = static_cast<std::size_t>(rank);
  e.rtol = rtol;
  return e;
}

inline void check_categories_populated(const std::vector<std::size_t>& counts,
                                       const std::vector<std::string>& names) {
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) {
      throw EmptyCategoryError("category '" + names[j] + "' has no rows");
    }
  }
}

}  // namespace detail

// Fits from accumulated moments; equals fit() on the same rows.
inline LeaceEraser fit_incremental(const SufficientStats& stats,
                                   double rtol = kDefaultTolerances.rank_rtol) {
  if (rtol <= 0.0) throw ValidationError("rtol must be positive");
  // Two rows suffice for the moments; every category must still appear.
  const std::size_t need = std::max<std::size_t>(2, stats.arity());
  if (stats.n() < need) {
    throw InsufficientDataError("fit needs at least " + std::to_string(need) +
                                " rows, got " + std::to_string(stats.n()));
  }
  detail::check_categories_populated(stats.category_counts(),
                                     stats.categories());
  LeaceEraser e = detail::erase_from_moments(
      stats.mean_x().transpose(), stats.cov_xx(), stats.cov_xc(),
      stats.cov_cc_trace(), rtol);
  e.arity = stats.arity();
  e.categories = stats.categories();
  return e;
}

inline LeaceEraser fit(const Matrix& x, const ConceptLabels& c,
                       double rtol = kDefaultTolerances.rank_rtol) {
  if (static_cast<std::size_t>(x.rows()) != c.size()) {
    throw DimensionError("embedding rows (" + std::to_string(x.rows()) +
                         ") != label rows (" + std::to_string(c.size()) + ")");
  }
  if (x.cols() < 1) throw DimensionError("embeddings need at least 1 column");
  SufficientStats stats(static_cast<std::size_t>(x.cols()), c.categories());
  stats.accumulate(x, c);
  return fit_incremental(stats, rtol);
}

// Baseline that projects out the top principal direction v of x:
// P = I - v v^T, b = mu - P mu.
inline LeaceEraser fit_pc1_baseline(const Matrix& x) {
  if (x.rows() < 2) throw InsufficientDataError("baseline needs >= 2 rows");
  if (x.cols() < 1) throw DimensionError("embeddings need at least 1 column");
  const PcaResult pc = pca(x, 1);
  const Vector v = pc.components.col(0);
  const Eigen::Index d = x.cols();
  LeaceEraser e;
  e.proj = Matrix::Identity(d, d) - v * v.transpose();
  e.mu = pc.mean.transpose();
  e.offset = e.mu - e.proj * e.mu;
  e.erased_rank = 1;
  return e;
}

inline void check_width(const LeaceEraser& e, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != e.dim()) {
    throw DimensionError("embedding width " + std::to_string(x.cols()) +
                         " != eraser dimension " + std::to_string(e.dim()));
  }
}

// Row-wise x -> P x + b.
inline Matrix apply(const LeaceEraser& e, const Matrix& x) {
  check_width(e, x);
  require_finite(x, "embeddings");
  Matrix out = x * e.proj.transpose();
  out.rowwise() += e.offset.transpose();
  return out;
}

// Mean Euclidean displacement (1/n) sum_i ||x~_i - x_i||.
inline double distortion(const LeaceEraser& e, const Matrix& x) {
  const Matrix moved = apply(e, x) - x;
  if (moved.rows() == 0) return 0.0;
  return moved.rowwise().norm().mean();
}

// Mean squared displacement (1/n) sum_i ||x~_i - x_i||^2, the quantity the
// eraser minimizes.
inline double mean_squared_distortion(const LeaceEraser& e, const Matrix& x) {
  const Matrix moved = apply(e, x) - x;
  if (moved.rows() == 0) return 0.0;
  return moved.rowwise().squaredNorm().mean();
}

// ---------------------------------------------------------------------------
// JSON file format (version 1).

inline constexpr int kEraserFormatVersion = 1;

inline nlohmann::json to_json(const LeaceEraser& e) {
  nlohmann::json proj = nlohmann::json::array();
  for (Eigen::Index i = 0; i < e.proj.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < e.proj.cols(); ++j) row.push_back(e.proj(i, j));
    proj.push_back(std::move(row));
  }
  auto vec = [](const Vector& v) {
    return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
  };
  nlohmann::json out = {
      {"version", kEraserFormatVersion},
      {"dim", e.dim()},
      {"arity", e.arity},
      {"erased_rank", e.erased_rank},
      {"rtol", e.rtol},
      {"proj", std::move(proj)},
      {"offset", vec(e.offset)},
      {"mu", vec(e.mu)},
  };
  if (!e.categories.empty()) out["categories"] = e.categories;
  return out;
}

inline std::string serialize(const LeaceEraser& e) {
  return to_json(e).dump(1) + "\n";
}

namespace detail {

// Offset of a key in the raw payload, for locating schema errors.
inline std::size_t key_offset(std::string_view text, const std::string& key) {
  const std::size_t pos = text.find("\"" + key + "\"");
  return pos == std::string_view::npos ? text.size() : pos;
}

inline double finite_number(const nlohmann::json& v, std::string_view text,
                            const std::string& key) {
  if (!v.is_number()) {
    throw FormatError::at_byte("field '" + key + "' must hold numbers",
                               key_offset(text, key));
  }
  const double out = v.get<double>();
  if (!std::isfinite(out)) {
    throw FormatError::at_byte("field '" + key + "' holds a non-finite value",
                               key_offset(text, key));
  }
  return out;
}

inline Vector read_vector(const nlohmann::json& doc, std::string_view text,
                          const std::string& key, std::size_t expected) {
  const auto& arr = doc.at(key);
  if (!arr.is_array() || arr.size() != expected) {
    throw FormatError::at_byte(
        "field '" + key + "' must be an array of " + std::to_string(expected),
        key_offset(text, key));
  }
  Vector out(static_cast<Eigen::Index>(expected));
  for (std::size_t i = 0; i < expected; ++i) {
    out(static_cast<Eigen::Index>(i)) = finite_number(arr[i], text, key);
  }
  return out;
}

inline std::size_t read_count(const nlohmann::json& doc, std::string_view text,
                              const std::string& key) {
  const auto& v = doc.at(key);
  if (!v.is_number_unsigned()) {
    throw FormatError::at_byte("field '" + key + "' must be a non-negative integer",
                               key_offset(text, key));
  }
  return v.get<std::size_t>();
}

}  // namespace detail

inline LeaceEraser deserialize(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& err) {
    throw FormatError::at_byte(std::string("malformed eraser JSON: ") + err.what(),
                               err.byte);
  }
  if (!doc.is_object()) {
    throw FormatError::at_byte("eraser payload must be a JSON object", 0);
  }
  for (const char* key : {"version", "dim", "arity", "erased_rank", "rtol",
                          "proj", "offset", "mu"}) {
    if (!doc.contains(key)) {
      throw FormatError::at_byte(std::string("missing field '") + key + "'",
                                 text.size());
    }
  }
  const auto& version = doc.at("version");
  if (!version.is_number_integer() ||
      version.get<long long>() != kEraserFormatVersion) {
    throw FormatError::at_byte("unsupported eraser version",
                               detail::key_offset(text, "version"));
  }
  LeaceEraser e;
  const std::size_t d = detail::read_count(doc, text, "dim");
  e.arity = detail::read_count(doc, text, "arity");
  e.erased_rank = detail::read_count(doc, text, "erased_rank");
  e.rtol = detail::finite_number(doc.at("rtol"), text, "rtol");

  const auto& proj = doc.at("proj");
  if (!proj.is_array() || proj.size() != d) {
    throw FormatError::at_byte("field 'proj' must have dim rows",
                               detail::key_offset(text, "proj"));
  }
  const auto dd = static_cast<Eigen::Index>(d);
  e.proj.resize(dd, dd);
  for (std::size_t i = 0; i < d; ++i) {
    if (!proj[i].is_array() || proj[i].size() != d) {
      throw FormatError::at_byte("row " + std::to_string(i) +
                                     " of 'proj' must have dim entries",
                                 detail::key_offset(text, "proj"));
    }
    for (std::size_t j = 0; j < d; ++j) {
      e.proj(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          detail::finite_number(proj[i][j], text, "proj");
    }
  }
  e.offset = detail::read_vector(doc, text, "offset", d);
  e.mu = detail::read_vector(doc, text, "mu", d);
  if (doc.contains("categories")) {
    const auto& cats = doc.at("categories");
    if (!cats.is_array()) {
      throw FormatError::at_byte("field 'categories' must be an array",
                                 detail::key_offset(text, "categories"));
    }
    for (const auto& c : cats) {
      if (!c.is_string()) {
        throw FormatError::at_byte("categories must be strings",
                                   detail::key_offset(text, "categories"));
      }
      e.categories.push_back(c.get<std::string>());
    }
  }
  return e;
}

inline void save_eraser(const std::string& path, const LeaceEraser& e) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << serialize(e);
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

inline LeaceEraser load_eraser(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open eraser file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace leace

#endif  // LEACE_ERASER_HPP_
