#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "scoutlabel/affinity.hpp"
#include "support.hpp"

using namespace scoutlabel;

TEST_CASE("cosine similarity") {
  Eigen::MatrixXd X(3, 2);
  X << 1, 0, 1, 1, 0, 2;
  const auto S = cosine_similarity_matrix(X);
  CHECK(S.kind == AffinityKind::cosine_similarity);
  CHECK(S.values(0, 0) == doctest::Approx(1.0));
  CHECK(S.values(0, 2) == doctest::Approx(0.0));
  CHECK(std::abs(S.values(0, 1) - 0.70711) < 1e-5);
  CHECK(S.values(1, 0) == S.values(0, 1));
}

TEST_CASE("pairwise euclidean against a direct loop") {
  Eigen::MatrixXd P(2, 2);
  P << 0, 0, 3, 4;
  CHECK(pairwise_euclidean(P).values(0, 1) == doctest::Approx(5.0));

  Eigen::MatrixXd dup(2, 3);
  dup << 1, 2, 3, 1, 2, 3;
  CHECK(pairwise_euclidean(dup).values(0, 1) == 0.0);

  std::mt19937_64 rng(7);
  const Eigen::MatrixXd X = testing::random_matrix(5, 3, rng);
  const auto D = pairwise_euclidean(X);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) {
      double s = 0;
      for (Eigen::Index k = 0; k < 3; ++k) s += (X(i, k) - X(j, k)) * (X(i, k) - X(j, k));
      CHECK(D.values(i, j) == doctest::Approx(std::sqrt(s)).epsilon(1e-12));
    }
}

TEST_CASE("median pairwise distance") {
  Eigen::MatrixXd two(2, 1);
  two << 0, 5;
  CHECK(median_pairwise_distance(two) == doctest::Approx(5.0));

  Eigen::MatrixXd line(3, 1);
  line << 0, 1, 3;
  CHECK(median_pairwise_distance(line) == doctest::Approx(2.0));

  std::mt19937_64 rng(3);
  const Eigen::MatrixXd X = testing::random_matrix(20, 4, rng);
  std::vector<double> d;
  for (Eigen::Index i = 0; i < 20; ++i)
    for (Eigen::Index j = i + 1; j < 20; ++j) d.push_back((X.row(i) - X.row(j)).norm());
  std::sort(d.begin(), d.end());
  const double oracle = d.size() % 2 ? d[d.size() / 2] : 0.5 * (d[d.size() / 2 - 1] + d[d.size() / 2]);
  CHECK(median_pairwise_distance(X) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("gaussian kernel") {
  Eigen::MatrixXd X(3, 1);
  X << 0, 0, 0.16;
  const auto W = gaussian_affinity(X, 0.16);
  CHECK(W.values(0, 1) == doctest::Approx(1.0));
  CHECK(std::abs(W.values(0, 2) - 0.60653) < 1e-5);
  CHECK(W.values.diagonal().isZero(0.0));
}

TEST_CASE("symmetric normalisation") {
  AffinityMatrix<double> W2{Eigen::MatrixXd(2, 2), AffinityKind::gaussian_kernel, 0.16};
  W2.values << 0, 0.37, 0.37, 0;
  const auto S2 = normalize_propagation(W2);
  CHECK(S2.values(0, 1) == doctest::Approx(1.0));
  CHECK(S2.values(0, 0) == 0.0);

  AffinityMatrix<double> W3{Eigen::MatrixXd::Constant(3, 3, 0.2), AffinityKind::gaussian_kernel, 0.16};
  W3.values.diagonal().setZero();
  const auto S3 = normalize_propagation(W3);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(S3.values(i, j) == doctest::Approx(i == j ? 0.0 : 0.5));
}

TEST_CASE("property: propagation matrix is symmetric with spectral radius <= 1") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd X = testing::random_matrix(12 + trial, 3, rng).rowwise().normalized();
    const auto S = normalize_propagation(gaussian_affinity(X, 0.5)).values;
    CHECK((S - S.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    CHECK(eig.eigenvalues().cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
  }
}

TEST_CASE("property: cosine similarity is scale invariant and bounded") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd X = testing::random_matrix(8, 4, rng);
  Eigen::VectorXd scale(8);
  for (Eigen::Index i = 0; i < 8; ++i) scale(i) = 0.5 + i;
  const Eigen::MatrixXd Y = scale.asDiagonal() * X;
  const auto a = cosine_similarity_matrix(X).values;
  const auto b = cosine_similarity_matrix(Y).values;
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(a.maxCoeff() <= 1.0 + 1e-12);
  CHECK(a.minCoeff() >= -1.0 - 1e-12);
}

TEST_CASE("float scalar instantiation") {
  Eigen::MatrixXf X(2, 2);
  X << 1, 0, 1, 1;
  const auto S = cosine_similarity_matrix(X);
  CHECK(S.values(0, 1) == doctest::Approx(0.70711).epsilon(1e-5));
}
