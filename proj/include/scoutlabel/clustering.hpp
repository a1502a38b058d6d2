#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "scoutlabel/affinity.hpp"

namespace scoutlabel {

/// Partition of samples into dense cluster indices 0..n_clusters-1.
struct ClusterAssignment {
  std::vector<int> labels;
  int n_clusters = 0;
  /// Per-cluster exemplar sample index (affinity propagation only).
  std::vector<Eigen::Index> exemplar_of;
  bool converged = true;
  int iterations = 0;

  std::vector<std::vector<Eigen::Index>> members() const;
  bool operator==(const ClusterAssignment&) const = default;
};

/// Renumbers arbitrary cluster ids to 0..k-1 in order of first appearance.
ClusterAssignment densify(const std::vector<int>& raw_labels);

// ---------------------------------------------------------------------------
// Affinity propagation

struct FixedPreference {
  double value = 0;
};
using Preference = std::variant<std::monostate, FixedPreference>;  // monostate = median similarity

struct APParams {
  double damping = 0.5;
  Preference preference{};
  int max_iterations = 1000;
  int convergence_window = 50;

  void validate() const;
};

/// Message state after a run (s has the preference on its diagonal).
struct APState {
  Eigen::MatrixXd similarity;
  Eigen::MatrixXd responsibility;
  Eigen::MatrixXd availability;
};

struct APResult {
  ClusterAssignment assignment;
  APState state;
  double preference = 0;
};

/// Frey-Dueck message passing with damping. Deterministic: no noise is added,
/// assignment ties go to the lowest exemplar index. If no sample ever becomes
/// an exemplar the best-scoring one (max r(k,k) + a(k,k)) is used and the
/// result is flagged non-converged.
APResult affinity_propagation_full(const AffinityMatrix<double>& S, const APParams& params = {});
ClusterAssignment affinity_propagation(const AffinityMatrix<double>& S, const APParams& params = {});

/// Median of the off-diagonal entries of a similarity matrix.
double median_similarity(const Eigen::MatrixXd& S);

/// Sum over non-exemplars of their best similarity to an exemplar, plus
/// |exemplars| * preference.
double net_similarity(const Eigen::MatrixXd& S, const std::vector<Eigen::Index>& exemplars, double preference);

// ---------------------------------------------------------------------------
// k-means++

struct KMeansParams {
  int k = 2;
  int n_runs = 10;
  int max_iterations = 300;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
};

struct KMeansRun {
  ClusterAssignment assignment;
  Eigen::MatrixXd centroids;
  double inertia = 0;
  /// Inertia after each assignment step.
  std::vector<double> inertia_history;
  std::uint64_t seed = 0;
};

/// Independent k-means++ seeded Lloyd runs, one sub-seed per run.
std::vector<KMeansRun> kmeans(const Eigen::MatrixXd& X, const KMeansParams& params);

/// splitmix64 finaliser, used to fan seeds out.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Locked hierarchical clustering

/// Diagonal Gaussian summary of a cluster.
template <typename Scalar>
struct GaussianClusterStats {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> variance;
  Eigen::Index count = 1;
};

/// Symmetric KL divergence KL(a||b) + KL(b||a) of two diagonal Gaussians.
template <typename Scalar>
Scalar kl2_distance(const GaussianClusterStats<Scalar>& a, const GaussianClusterStats<Scalar>& b) {
  const auto va = a.variance.array();
  const auto vb = b.variance.array();
  const auto diff2 = (a.mean - b.mean).array().square();
  return Scalar(0.5) * (va / vb + vb / va - Scalar(2) + diff2 * (va.inverse() + vb.inverse())).sum();
}

struct MedianPairwiseStd {};
struct FixedStd {
  double value = 1.0;
};
using SingletonStd = std::variant<MedianPairwiseStd, FixedStd>;

struct HierParams {
  double bic_lambda = 1.0;
  double variance_floor = 1e-6;
  SingletonStd singleton_std{};

  void validate() const;
};

/// n_a ln|Sa| + n_b ln|Sb| - n_m ln|Sm| + lambda * 2d * ln N. Non-negative
/// means the merge is allowed.
template <typename Scalar>
Scalar delta_bic(const GaussianClusterStats<Scalar>& a, const GaussianClusterStats<Scalar>& b,
                 const GaussianClusterStats<Scalar>& merged, Eigen::Index total_count, Scalar bic_lambda) {
  auto logdet = [](const GaussianClusterStats<Scalar>& g) { return g.variance.array().log().sum(); };
  const Scalar params = Scalar(2) * static_cast<Scalar>(a.mean.size());
  return static_cast<Scalar>(a.count) * logdet(a) + static_cast<Scalar>(b.count) * logdet(b) -
         static_cast<Scalar>(merged.count) * logdet(merged) +
         bic_lambda * params * std::log(static_cast<Scalar>(total_count));
}

template <typename Scalar>
Scalar delta_bic(const GaussianClusterStats<Scalar>& a, const GaussianClusterStats<Scalar>& b,
                 const GaussianClusterStats<Scalar>& merged, Eigen::Index total_count, const HierParams& params) {
  return delta_bic(a, b, merged, total_count, static_cast<Scalar>(params.bic_lambda));
}

/// Empirical diagonal stats of the given rows of X. Dimensions whose values are
/// all identical (fewer than two distinct observations) fall back to
/// `singleton_variance`; the rest are floored at `variance_floor`.
GaussianClusterStats<double> empirical_stats(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& rows,
                                             double singleton_variance, double variance_floor);

struct HierResult {
  ClusterAssignment assignment;
  std::vector<GaussianClusterStats<double>> stats;
  double singleton_std = 0;
  int merges = 0;
};

/// Agglomerative clustering seeded with one locked cluster per plant. Initial
/// clusters use the group mean and `singleton_std` in every dimension; merges
/// take the KL2-closest pair and stop once that pair's delta BIC is negative.
HierResult locked_hierarchical_full(const Eigen::MatrixXd& X, const std::vector<std::string>& plant_ids,
                                    const HierParams& params = {});
ClusterAssignment locked_hierarchical(const Eigen::MatrixXd& X, const std::vector<std::string>& plant_ids,
                                      const HierParams& params = {});

}  // namespace scoutlabel
