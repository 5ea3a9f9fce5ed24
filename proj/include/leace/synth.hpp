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

#ifndef LEACE_SYNTH_HPP_
#define LEACE_SYNTH_HPP_

// Synthetic corpora drawn from the structural model
//
//   x_i = B_z z_i + B_c c_i + B_u u_i + eps_i
//
// with one-hot topic z, one-hot source c, standard normal latent context u
// and isotropic Gaussian noise eps. Every topic holds n_per_cell "events";
// each event is rendered once per source, sharing z and u and drawing fresh
// noise, and the renderings of one event form the retrieval pairs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "leace/config.hpp"
#include "leace/eraser.hpp"
#include "leace/error.hpp"
#include "leace/labels.hpp"
#include "leace/linalg.hpp"
#include "leace/metrics.hpp"

namespace leace {

// A loading matrix, either given explicitly (d x m) or drawn as m orthonormal
// random directions times a scale when the corpus is generated.
class Loading {
 public:
  Loading() = default;

  static Loading explicit_matrix(Matrix m) {
    require_finite(m, "loading");
    Loading out;
    out.matrix_ = std::move(m);
    out.is_explicit_ = true;
    return out;
  }

  static Loading random_orthogonal(double scale) {
    if (!std::isfinite(scale)) throw ValidationError("loading scale must be finite");
    Loading out;
    out.scale_ = scale;
    return out;
  }

  Loading scaled(double s) const {
    Loading out = *this;
    if (is_explicit_) {
      out.matrix_ *= s;
    } else {
      out.scale_ *= s;
    }
    return out;
  }

  bool is_explicit() const noexcept { return is_explicit_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  double scale() const noexcept { return scale_; }

 private:
  bool is_explicit_ = false;
  Matrix matrix_;
  double scale_ = 0.0;
};

struct SyntheticSpec {
  std::size_t d = 64;
  std::size_t n_per_cell = 200;
  std::size_t topics = 6;
  std::size_t sources = 2;
  std::size_t u_dim = 8;
  Loading loading_z = Loading::random_orthogonal(1.0);
  Loading loading_c = Loading::random_orthogonal(1.0);
  Loading loading_u = Loading::random_orthogonal(0.5);
  double noise_sigma = 0.1;
  std::uint64_t seed = kDefaultSeed;
  bool normalize_rows = false;

  std::size_t rows() const noexcept { return topics * sources * n_per_cell; }
};

// d=64, 6 topics, 2 sources, 200 rows per cell (2400 rows). Mirrored in
// configs/default_synth.json.
inline SyntheticSpec default_synthetic_spec() { return SyntheticSpec{}; }

struct SyntheticCorpus {
  Matrix x;
  ConceptLabels source;  // confounder (source) per row
  ConceptLabels gold;     // topic per row
  std::vector<IndexPair> pairs;
  Matrix latent_u;   // n x u_dim
  Matrix loading_z;  // materialized B_z, d x topics
  Matrix loading_c;  // d x sources
  Matrix loading_u;  // d x u_dim
};

namespace detail {

inline std::mt19937_64 substream(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

// d x m matrix with orthonormal columns (Haar-distributed via QR of a
// Gaussian matrix with the sign of diag(R) fixed).
inline Matrix random_orthonormal(std::size_t d, std::size_t m,
                                 std::mt19937_64& rng) {
  if (m > d) {
    throw DimensionError("cannot draw " + std::to_string(m) +
                         " orthonormal directions in dimension " +
                         std::to_string(d));
  }
  const auto dd = static_cast<Eigen::Index>(d);
  const auto mm = static_cast<Eigen::Index>(m);
  if (m == 0) return Matrix(dd, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(dd, mm);
  for (Eigen::Index j = 0; j < mm; ++j) {
    for (Eigen::Index i = 0; i < dd; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dd, mm);
  const Matrix r = qr.matrixQR().topRows(mm).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < mm; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

inline void check_explicit(const Loading& l, std::size_t d, std::size_t cols,
                           const std::string& name) {
  if (!l.is_explicit()) return;
  if (static_cast<std::size_t>(l.matrix().rows()) != d ||
      static_cast<std::size_t>(l.matrix().cols()) != cols) {
    throw DimensionError(name + " must be " + std::to_string(d) + "x" +
                         std::to_string(cols) + ", got " +
                         std::to_string(l.matrix().rows()) + "x" +
                         std::to_string(l.matrix().cols()));
  }
}

}  // namespace detail

inline void validate(const SyntheticSpec& spec) {
  if (spec.d < 1) throw DimensionError("d must be positive");
  if (spec.topics < 2) throw DimensionError("need at least 2 topics");
  if (spec.sources < 2) throw DimensionError("need at least 2 sources");
  if (spec.n_per_cell < 1) throw DimensionError("n_per_cell must be positive");
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    throw ValidationError("noise_sigma must be finite and non-negative");
  }
  detail::check_explicit(spec.loading_z, spec.d, spec.topics, "loading_z");
  detail::check_explicit(spec.loading_c, spec.d, spec.sources, "loading_c");
  detail::check_explicit(spec.loading_u, spec.d, spec.u_dim, "loading_u");
}

inline SyntheticCorpus generate(const SyntheticSpec& spec) {
  validate(spec);
  const std::size_t d = spec.d;
  const std::size_t T = spec.topics;
  const std::size_t S = spec.sources;
  const std::size_t U = spec.u_dim;

  // Random directions for all three loadings come from one orthonormal basis
  // when they fit, so topic, source and context subspaces are orthogonal.
  std::mt19937_64 loading_rng = detail::substream(spec.seed, 1);
  Matrix bz, bc, bu;
  const bool joint = !spec.loading_z.is_explicit() &&
                     !spec.loading_c.is_explicit() &&
                     !spec.loading_u.is_explicit() && T + S + U <= d;
  const auto dd = static_cast<Eigen::Index>(d);
  const auto tt = static_cast<Eigen::Index>(T);
  const auto ss = static_cast<Eigen::Index>(S);
  const auto uu = static_cast<Eigen::Index>(U);
  if (joint) {
    const Matrix q = detail::random_orthonormal(d, T + S + U, loading_rng);
    bz = q.leftCols(tt) * spec.loading_z.scale();
    bc = q.middleCols(tt, ss) * spec.loading_c.scale();
    bu = q.rightCols(uu) * spec.loading_u.scale();
  } else {
    auto materialize = [&](const Loading& l, std::size_t cols) -> Matrix {
      if (l.is_explicit()) return l.matrix();
      return detail::random_orthonormal(d, cols, loading_rng) * l.scale();
    };
    bz = materialize(spec.loading_z, T);
    bc = materialize(spec.loading_c, S);
    bu = materialize(spec.loading_u, U);
  }

  std::mt19937_64 rng = detail::substream(spec.seed, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = spec.rows();
  Matrix x(static_cast<Eigen::Index>(n), dd);
  Matrix latent(static_cast<Eigen::Index>(n), uu);
  std::vector<std::size_t> topic_codes(n);
  std::vector<std::size_t> source_codes(n);
  std::vector<IndexPair> pairs;
  pairs.reserve(T * spec.n_per_cell * S * (S - 1) / 2);

  Vector u(uu);
  Vector eps(dd);
  std::size_t row = 0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t e = 0; e < spec.n_per_cell; ++e) {
      for (Eigen::Index j = 0; j < uu; ++j) u(j) = normal(rng);
      const Vector shared = bz.col(static_cast<Eigen::Index>(t)) + bu * u;
      const std::size_t first_row = row;
      for (std::size_t s = 0; s < S; ++s) {
        for (Eigen::Index j = 0; j < dd; ++j) {
          eps(j) = spec.noise_sigma * normal(rng);
        }
        const auto r = static_cast<Eigen::Index>(row);
        x.row(r) = (shared + bc.col(static_cast<Eigen::Index>(s)) + eps).transpose();
        latent.row(r) = u.transpose();
        topic_codes[row] = t;
        source_codes[row] = s;
        ++row;
      }
      for (std::size_t a = 0; a < S; ++a) {
        for (std::size_t b = a + 1; b < S; ++b) {
          pairs.emplace_back(first_row + a, first_row + b);
        }
      }
    }
  }
  if (spec.normalize_rows) x = normalize_rows(x);

  return SyntheticCorpus{std::move(x),
                         ConceptLabels::from_codes(source_codes, S),
                         ConceptLabels::from_codes(topic_codes, T),
                         std::move(pairs),
                         std::move(latent),
                         std::move(bz),
                         std::move(bc),
                         std::move(bu)};
}

// ---------------------------------------------------------------------------
// Confounder-strength sweep.

struct SweepOptions {
  double rtol = kDefaultTolerances.rank_rtol;
  Similarity similarity = Similarity::kCosine;
};

struct SweepRow {
  double strength = 0.0;
  std::uint64_t seed = 0;
  double pc1_ratio = 0.0;
  double recall1_before = 0.0;
  double recall1_after = 0.0;

  double improvement() const noexcept { return recall1_after - recall1_before; }
};

// For each strength s: scale B_c by s, generate, fit on the whole corpus,
// apply, and compare Recall@1 of the event pairs before and after.
inline std::vector<SweepRow> sweep_confounder_strength(
    const SyntheticSpec& base, const std::vector<double>& strengths,
    const SweepOptions& opts = {}) {
  for (std::size_t i = 0; i < strengths.size(); ++i) {
    if (!(strengths[i] >= 0.0) || !std::isfinite(strengths[i])) {
      throw ValidationError("strengths must be finite and non-negative");
    }
    if (i > 0 && strengths[i] < strengths[i - 1]) {
      throw ValidationError("strengths must be ascending");
    }
  }
  std::vector<SweepRow> rows;
  rows.reserve(strengths.size());
  for (double s : strengths) {
    SyntheticSpec spec = base;
    spec.loading_c = base.loading_c.scaled(s);
    const SyntheticCorpus corpus = generate(spec);
    const LeaceEraser eraser = fit(corpus.x, corpus.source, opts.rtol);
    const Matrix adjusted = apply(eraser, corpus.x);

    SweepRow row;
    row.strength = s;
    row.seed = spec.seed;
    row.pc1_ratio = pca(corpus.x, 1).explained_variance_ratio(0);
    row.recall1_before =
        recall_at_k(corpus.x, corpus.pairs, {}, {1}, opts.similarity).recall_at[1];
    row.recall1_after =
        recall_at_k(adjusted, corpus.pairs, {}, {1}, opts.similarity).recall_at[1];
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// JSON config.
//
// Loadings are either explicit arrays (d rows of m numbers) or
// {"random_orthogonal": scale}. loading_u may be omitted (no latent context).

namespace detail {

inline Loading loading_from_json(const nlohmann::json& j,
                                 const std::string& name) {
  if (j.is_object()) {
    if (!j.contains("random_orthogonal") || !j.at("random_orthogonal").is_number()) {
      throw ValidationError(name + " object must be {\"random_orthogonal\": scale}");
    }
    return Loading::random_orthogonal(j.at("random_orthogonal").get<double>());
  }
  if (!j.is_array() || j.empty()) {
    throw ValidationError(name + " must be an array of rows or an object");
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw ValidationError(name + " rows must be arrays of equal length");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw ValidationError(name + " entries must be numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          j[i][k].get<double>();
    }
  }
  return Loading::explicit_matrix(std::move(m));
}

inline nlohmann::json loading_to_json(const Loading& l) {
  if (!l.is_explicit()) return {{"random_orthogonal", l.scale()}};
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < l.matrix().rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(l.matrix().cols()));
    for (Eigen::Index k = 0; k < l.matrix().cols(); ++k) {
      r[static_cast<std::size_t>(k)] = l.matrix()(i, k);
    }
    rows.push_back(r);
  }
  return rows;
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("synthetic spec must be an object");
  for (const auto& [key, value] : j.items()) {
    static const std::vector<std::string> known = {
        "d", "n_per_cell", "topics", "sources", "u_dim", "loading_z",
        "loading_c", "loading_u", "noise_sigma", "seed", "normalize_rows"};
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError("unknown synthetic spec field '" + key + "'");
    }
  }
  SyntheticSpec spec;
  spec.d = detail::get_or<std::size_t>(j, "d", spec.d);
  spec.n_per_cell = detail::get_or<std::size_t>(j, "n_per_cell", spec.n_per_cell);
  spec.topics = detail::get_or<std::size_t>(j, "topics", spec.topics);
  spec.sources = detail::get_or<std::size_t>(j, "sources", spec.sources);
  spec.noise_sigma = detail::get_or<double>(j, "noise_sigma", spec.noise_sigma);
  spec.seed = detail::get_or<std::uint64_t>(j, "seed", spec.seed);
  spec.normalize_rows = detail::get_or<bool>(j, "normalize_rows", spec.normalize_rows);
  if (j.contains("loading_z")) {
    spec.loading_z = detail::loading_from_json(j.at("loading_z"), "loading_z");
  }
  if (j.contains("loading_c")) {
    spec.loading_c = detail::loading_from_json(j.at("loading_c"), "loading_c");
  }
  if (j.contains("loading_u")) {
    spec.loading_u = detail::loading_from_json(j.at("loading_u"), "loading_u");
    spec.u_dim = spec.loading_u.is_explicit()
                     ? static_cast<std::size_t>(spec.loading_u.matrix().cols())
                     : detail::get_or<std::size_t>(j, "u_dim", spec.u_dim);
  } else {
    spec.u_dim = detail::get_or<std::size_t>(j, "u_dim", 0);
    if (spec.u_dim != 0) {
      throw ValidationError("u_dim given without loading_u");
    }
    spec.loading_u = Loading::random_orthogonal(0.0);
  }
  validate(spec);
  return spec;
}

inline nlohmann::json to_json(const SyntheticSpec& spec) {
  return {{"d", spec.d},
          {"n_per_cell", spec.n_per_cell},
          {"topics", spec.topics},
          {"sources", spec.sources},
          {"u_dim", spec.u_dim},
          {"loading_z", detail::loading_to_json(spec.loading_z)},
          {"loading_c", detail::loading_to_json(spec.loading_c)},
          {"loading_u", detail::loading_to_json(spec.loading_u)},
          {"noise_sigma", spec.noise_sigma},
          {"seed", spec.seed},
          {"normalize_rows", spec.normalize_rows}};
}

inline SyntheticSpec load_synthetic_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open spec file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw FormatError::at_byte(std::string("malformed spec JSON: ") + err.what(),
                               err.byte);
  }
  return synthetic_spec_from_json(j);
}

}  // namespace leace

#endif  // LEACE_SYNTH_HPP_
