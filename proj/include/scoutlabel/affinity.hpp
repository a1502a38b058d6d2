#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "scoutlabel/error.hpp"

namespace scoutlabel {

enum class AffinityKind { cosine_similarity, euclidean_distance, gaussian_kernel, normalized_propagation };

/// A symmetric n x n pairwise matrix plus how it was built.
template <typename Scalar>
struct AffinityMatrix {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix values;
  AffinityKind kind = AffinityKind::cosine_similarity;
  std::optional<Scalar> sigma;

  Eigen::Index size() const { return values.rows(); }
};

namespace detail {

template <typename Derived, typename F>
AffinityMatrix<typename Derived::Scalar> symmetric_from_rows(const Eigen::MatrixBase<Derived>& X, AffinityKind kind,
                                                             F&& pair_value, typename Derived::Scalar diagonal) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = X.rows();
  AffinityMatrix<Scalar> out;
  out.kind = kind;
  out.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i, i) = diagonal;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Scalar v = pair_value(i, j);
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return out;
}

}  // namespace detail

/// values(i, j) = <xi, xj> / (|xi| |xj|). Rows are samples.
template <typename Derived>
AffinityMatrix<typename Derived::Scalar> cosine_similarity_matrix(const Eigen::MatrixBase<Derived>& X) {
  using Scalar = typename Derived::Scalar;
  require(X.rows() >= 2, ErrorCode::invalid_argument, "cosine similarity needs at least two samples");
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> norms = X.rowwise().norm();
  require((norms.array() > Scalar(0)).all(), ErrorCode::zero_norm, "cosine similarity of a zero-norm sample");
  const auto unit = (X.array().colwise() / norms.array()).matrix().eval();
  return detail::symmetric_from_rows(
      X, AffinityKind::cosine_similarity,
      [&](Eigen::Index i, Eigen::Index j) {
        return std::clamp(unit.row(i).dot(unit.row(j)), Scalar(-1), Scalar(1));
      },
      Scalar(1));
}

/// values(i, j) = |xi - xj|_2 with an exact zero diagonal.
template <typename Derived>
AffinityMatrix<typename Derived::Scalar> pairwise_euclidean(const Eigen::MatrixBase<Derived>& X) {
  using Scalar = typename Derived::Scalar;
  require(X.rows() >= 2, ErrorCode::invalid_argument, "pairwise distances need at least two samples");
  return detail::symmetric_from_rows(
      X, AffinityKind::euclidean_distance,
      [&](Eigen::Index i, Eigen::Index j) { return (X.row(i) - X.row(j)).norm(); }, Scalar(0));
}

/// Median of the off-diagonal upper-triangle entries of a distance matrix.
template <typename Scalar>
Scalar median_upper_triangle(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& D) {
  std::vector<Scalar> values;
  const Eigen::Index n = D.rows();
  values.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) values.push_back(D(i, j));
  require(!values.empty(), ErrorCode::invalid_argument, "median of an empty triangle");
  const std::size_t m = values.size();
  auto mid = values.begin() + static_cast<std::ptrdiff_t>(m / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (m % 2 == 1) return *mid;
  const Scalar upper = *mid;
  const Scalar lower = *std::max_element(values.begin(), mid);
  return (lower + upper) / Scalar(2);
}

template <typename Derived>
typename Derived::Scalar median_pairwise_distance(const Eigen::MatrixBase<Derived>& X) {
  return median_upper_triangle(pairwise_euclidean(X).values);
}

/// Fully connected Gaussian kernel, W(i, j) = exp(-|xi - xj|^2 / (2 sigma^2)), zero diagonal.
template <typename Derived>
AffinityMatrix<typename Derived::Scalar> gaussian_affinity(const Eigen::MatrixBase<Derived>& X,
                                                           typename Derived::Scalar sigma) {
  using Scalar = typename Derived::Scalar;
  require(sigma > Scalar(0), ErrorCode::invalid_argument, "kernel sigma must be positive");
  require(X.rows() >= 1, ErrorCode::invalid_argument, "kernel needs at least one sample");
  const Scalar denom = Scalar(2) * sigma * sigma;
  auto W = detail::symmetric_from_rows(
      X, AffinityKind::gaussian_kernel,
      [&](Eigen::Index i, Eigen::Index j) { return std::exp(-(X.row(i) - X.row(j)).squaredNorm() / denom); },
      Scalar(0));
  W.sigma = sigma;
  return W;
}

/// S = D^-1/2 W D^-1/2 with D the row-degree diagonal of W.
template <typename Scalar>
AffinityMatrix<Scalar> normalize_propagation(const AffinityMatrix<Scalar>& W) {
  require(W.kind == AffinityKind::gaussian_kernel, ErrorCode::invalid_argument,
          "propagation normalisation expects a Gaussian kernel matrix");
  require((W.values.array() >= Scalar(0)).all(), ErrorCode::invalid_argument, "kernel must be nonnegative");
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> degree = W.values.rowwise().sum();
  require((degree.array() > Scalar(0)).all(), ErrorCode::isolated_sample,
          "a sample has zero kernel degree and cannot propagate labels");
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_sqrt = degree.array().rsqrt();
  AffinityMatrix<Scalar> S;
  S.kind = AffinityKind::normalized_propagation;
  S.sigma = W.sigma;
  S.values = inv_sqrt.asDiagonal() * W.values * inv_sqrt.asDiagonal();
  // Mirror the upper triangle so symmetry is exact regardless of rounding.
  S.values.template triangularView<Eigen::StrictlyLower>() = S.values.transpose().eval();
  return S;
}

/// Debug dump, row-major, one matrix row per line.
template <typename Scalar>
void write_matrix_csv(const AffinityMatrix<Scalar>& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::io, "cannot write \"" + path.string() + "\"");
  const Eigen::IOFormat csv(Eigen::FullPrecision, Eigen::DontAlignCols, ",", "\n");
  out << m.values.format(csv) << '\n';
}

}  // namespace scoutlabel
