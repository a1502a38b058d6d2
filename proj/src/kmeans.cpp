#include <limits>
#include <random>

#include "scoutlabel/clustering.hpp"

namespace scoutlabel {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

using Eigen::Index;

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& X, int k, std::mt19937_64& rng) {
  const Index n = X.rows();
  Eigen::MatrixXd centroids(k, X.cols());
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centroids.row(0) = X.row(pick(rng));
  Eigen::VectorXd best = (X.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = best.sum();
    Index chosen = 0;
    if (total > 0) {
      double target = unit(rng) * total;
      chosen = n - 1;
      for (Index i = 0; i < n; ++i) {
        target -= best(i);
        if (target < 0 && best(i) > 0) {
          chosen = i;
          break;
        }
      }
      // Guard the rounding tail: never re-pick a zero-weight point.
      while (best(chosen) <= 0 && chosen > 0) --chosen;
    }
    centroids.row(c) = X.row(chosen);
    best = best.cwiseMin((X.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

double assign(const Eigen::MatrixXd& X, const Eigen::MatrixXd& centroids, std::vector<int>& labels,
              Eigen::VectorXd& dist2) {
  double inertia = 0;
  for (Index i = 0; i < X.rows(); ++i) {
    int best = 0;
    double best_d = (X.row(i) - centroids.row(0)).squaredNorm();
    for (Index c = 1; c < centroids.rows(); ++c) {
      const double d = (X.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    dist2(i) = best_d;
    inertia += best_d;
  }
  return inertia;
}

// Moves the point farthest from its centroid into each empty cluster.
void reseed_empty(const Eigen::MatrixXd& X, Eigen::MatrixXd& centroids, std::vector<int>& labels,
                  Eigen::VectorXd& dist2) {
  const Index k = centroids.rows();
  std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  for (Index c = 0; c < k; ++c) {
    if (sizes[static_cast<std::size_t>(c)] > 0) continue;
    Index far = -1;
    for (Index i = 0; i < X.rows(); ++i) {
      if (sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] < 2) continue;
      if (far < 0 || dist2(i) > dist2(far)) far = i;
    }
    require(far >= 0, ErrorCode::invalid_argument, "k-means cannot fill an empty cluster");
    --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
    labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
    sizes[static_cast<std::size_t>(c)] = 1;
    centroids.row(c) = X.row(far);
    dist2(far) = 0;
  }
}

Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& X, const std::vector<int>& labels, Index k) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  for (Index i = 0; i < X.rows(); ++i) {
    sums.row(labels[static_cast<std::size_t>(i)]) += X.row(i);
    counts(labels[static_cast<std::size_t>(i)]) += 1;
  }
  return sums.array().colwise() / counts.array();
}

KMeansRun run_once(const Eigen::MatrixXd& X, const KMeansParams& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  KMeansRun run;
  run.seed = seed;
  Eigen::MatrixXd centroids = seed_plus_plus(X, params.k, rng);
  std::vector<int> labels(static_cast<std::size_t>(X.rows()), 0);
  Eigen::VectorXd dist2(X.rows());
  int it = 0;
  bool converged = false;
  for (; it < params.max_iterations; ++it) {
    assign(X, centroids, labels, dist2);
    reseed_empty(X, centroids, labels, dist2);
    run.inertia_history.push_back(dist2.sum());
    Eigen::MatrixXd updated = cluster_means(X, labels, params.k);
    const double shift = (updated - centroids).rowwise().norm().maxCoeff();
    centroids = std::move(updated);
    if (shift < params.tolerance) {
      converged = true;
      ++it;
      break;
    }
  }
  double inertia = 0;
  for (Index i = 0; i < X.rows(); ++i) inertia += (X.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  run.inertia_history.push_back(inertia);
  run.inertia = inertia;
  run.centroids = std::move(centroids);
  run.assignment.labels = std::move(labels);
  run.assignment.n_clusters = params.k;
  run.assignment.converged = converged;
  run.assignment.iterations = it;
  return run;
}

}  // namespace

std::vector<KMeansRun> kmeans(const Eigen::MatrixXd& X, const KMeansParams& params) {
  require(params.k >= 1, ErrorCode::invalid_argument, "k must be >= 1");
  require(params.k <= X.rows(), ErrorCode::invalid_argument,
          "k = " + std::to_string(params.k) + " exceeds the sample count " + std::to_string(X.rows()));
  require(params.n_runs >= 1 && params.max_iterations >= 1, ErrorCode::invalid_argument,
          "k-means needs at least one run and one iteration");
  std::vector<KMeansRun> runs;
  runs.reserve(static_cast<std::size_t>(params.n_runs));
  for (int r = 0; r < params.n_runs; ++r)
    runs.push_back(run_once(X, params, mix_seed(params.seed, static_cast<std::uint64_t>(r))));
  return runs;
}

}  // namespace scoutlabel
