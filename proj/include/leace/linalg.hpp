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

#ifndef LEACE_LINALG_HPP_
#define LEACE_LINALG_HPP_

// Dense primitives behind the eraser: symmetric eigendecomposition,
// Moore-Penrose pseudoinverse, PSD (inverse) square roots, covariance and PCA.
//
// Matrices are Eigen::MatrixXd. Data matrices are n x d with one observation
// per row. All rank decisions use a relative cutoff: a value v counts as zero
// when |v| <= rtol * (largest |value|).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "leace/config.hpp"
#include "leace/error.hpp"

namespace leace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) {
    throw ValidationError(what + " contains NaN or infinite entries");
  }
}

inline void require_square(const Matrix& m, const std::string& what) {
  if (m.rows() != m.cols()) {
    throw DimensionError(what + " must be square, got " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
}

struct SymEigResult {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // orthonormal columns, matching eigenvalues
};

namespace detail {

// Flips each column so its largest-magnitude entry is positive. Makes
// eigenvector and principal-component signs reproducible.
inline void canonicalize_signs(Matrix& columns) {
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Eigen::Index arg = 0;
    columns.col(j).cwiseAbs().maxCoeff(&arg);
    if (columns(arg, j) < 0.0) columns.col(j) *= -1.0;
  }
}

}  // namespace detail

inline SymEigResult sym_eig(
    const Matrix& m, double symmetry_rtol = kDefaultTolerances.symmetry_rtol) {
  require_square(m, "sym_eig input");
  require_finite(m, "sym_eig input");
  if (m.size() == 0) return {Vector(0), Matrix(0, 0)};
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > symmetry_rtol * scale) {
    throw DimensionError("sym_eig input is not symmetric (max asymmetry " +
                         std::to_string(asym) + ")");
  }
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver did not converge");
  }
  // Eigen returns ascending order.
  SymEigResult out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  detail::canonicalize_signs(out.eigenvectors);
  return out;
}

inline bool is_symmetric(const Matrix& m,
                         double rtol = kDefaultTolerances.symmetry_rtol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rtol * scale;
}

// Moore-Penrose pseudoinverse. Symmetric inputs go through sym_eig so the
// cutoff matches inv_sqrt_psd; everything else uses a thin SVD.
inline Matrix pinv(const Matrix& m, double rtol = kDefaultTolerances.rank_rtol) {
  require_finite(m, "pinv input");
  if (rtol <= 0.0) throw ValidationError("pinv rtol must be positive");
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  if (is_symmetric(m)) {
    const SymEigResult eig = sym_eig(m);
    const double cutoff = rtol * eig.eigenvalues.cwiseAbs().maxCoeff();
    Vector inv = Vector::Zero(eig.eigenvalues.size());
    for (Eigen::Index i = 0; i < inv.size(); ++i) {
      const double v = eig.eigenvalues(i);
      if (std::abs(v) > cutoff) inv(i) = 1.0 / v;
    }
    return eig.eigenvectors * inv.asDiagonal() * eig.eigenvectors.transpose();
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = rtol * (s.size() > 0 ? s(0) : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline std::size_t numerical_rank(const Matrix& m,
                                  double rtol = kDefaultTolerances.rank_rtol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  const double cutoff = rtol * s(0);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) ++rank;
  }
  return rank;
}

// Both square roots of a PSD matrix from one eigendecomposition:
//   inv_sqrt = V diag(l^-1/2 on kept l) V^T   (the whitening matrix W)
//   sqrt     = V diag(l^1/2 on kept l) V^T    (equal to pinv(W))
struct PsdRoots {
  Matrix inv_sqrt;
  Matrix sqrt;
  std::size_t rank = 0;
  double largest_eigenvalue = 0.0;
};

inline PsdRoots psd_roots(const Matrix& m,
                          double rtol = kDefaultTolerances.rank_rtol) {
  if (rtol <= 0.0) throw ValidationError("rtol must be positive");
  const SymEigResult eig = sym_eig(m);
  const Eigen::Index d = eig.eigenvalues.size();
  const double top = d > 0 ? std::max(eig.eigenvalues(0), 0.0) : 0.0;
  const double cutoff = rtol * top;
  PsdRoots out;
  out.largest_eigenvalue = top;
  Vector inv_root = Vector::Zero(d);
  Vector root = Vector::Zero(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double v = eig.eigenvalues(i);
    if (v < -cutoff) {
      throw NotPsdError("matrix is not positive semidefinite (eigenvalue " +
                        std::to_string(v) + ")");
    }
    if (v > cutoff) {
      inv_root(i) = 1.0 / std::sqrt(v);
      root(i) = std::sqrt(v);
      ++out.rank;
    }
  }
  const Matrix& vecs = eig.eigenvectors;
  out.inv_sqrt = vecs * inv_root.asDiagonal() * vecs.transpose();
  out.sqrt = vecs * root.asDiagonal() * vecs.transpose();
  return out;
}

inline Matrix inv_sqrt_psd(const Matrix& m,
                           double rtol = kDefaultTolerances.rank_rtol) {
  return psd_roots(m, rtol).inv_sqrt;
}

inline RowVector column_mean(const Matrix& x) { return x.colwise().mean(); }

inline Matrix centered(const Matrix& x, const RowVector& mean) {
  return x.rowwise() - mean;
}

// Centered co-moment sum_i (x_i - xbar)(y_i - ybar)^T, unnormalized.
inline Matrix comoment(const Matrix& x, const Matrix& y) {
  return centered(x, column_mean(x)).transpose() *
         centered(y, column_mean(y));
}

// Biased (1/n) cross-covariance of the columns of x and y.
inline Matrix covariance(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) {
    throw DimensionError("covariance needs equal row counts, got " +
                         std::to_string(x.rows()) + " and " +
                         std::to_string(y.rows()));
  }
  if (x.rows() < 2) {
    throw InsufficientDataError("covariance needs at least 2 rows");
  }
  require_finite(x, "covariance input");
  require_finite(y, "covariance input");
  return comoment(x, y) / static_cast<double>(x.rows());
}

inline Matrix covariance(const Matrix& x) { return covariance(x, x); }

struct PcaResult {
  Matrix components;                // d x k, orthonormal columns
  Vector explained_variance;        // k
  Vector explained_variance_ratio;  // k, fractions of total variance
  RowVector mean;                   // 1 x d
  double total_variance = 0.0;

  // Projections of rows of x onto the components, n x k.
  Matrix scores(const Matrix& x) const {
    return centered(x, mean) * components;
  }
};

inline PcaResult pca(const Matrix& x, std::size_t k) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (n < 2) throw InsufficientDataError("pca needs at least 2 rows");
  if (k < 1 || k > std::min(n - 1, d)) {
    throw DimensionError("pca component count " + std::to_string(k) +
                         " outside [1, " + std::to_string(std::min(n - 1, d)) +
                         "]");
  }
  const SymEigResult eig = sym_eig(covariance(x));
  const Vector clamped = eig.eigenvalues.cwiseMax(0.0);
  const double total = clamped.sum();
  const auto kk = static_cast<Eigen::Index>(k);

  PcaResult out;
  out.components = eig.eigenvectors.leftCols(kk);
  out.explained_variance = clamped.head(kk);
  out.explained_variance_ratio = total > 0.0
                                     ? Vector(out.explained_variance / total)
                                     : Vector(Vector::Zero(kk));
  out.mean = column_mean(x);
  out.total_variance = total;
  return out;
}

inline Matrix normalize_rows(const Matrix& x) {
  Matrix out = x;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

}  // namespace leace

#endif  // LEACE_LINALG_HPP_
