#include <limits>
#include <unordered_map>

#include "scoutlabel/clustering.hpp"

namespace scoutlabel {

void HierParams::validate() const {
  require(bic_lambda > 0, ErrorCode::invalid_argument, "bic_lambda must be positive");
  require(variance_floor > 0, ErrorCode::invalid_argument, "variance_floor must be positive");
  if (auto fixed = std::get_if<FixedStd>(&singleton_std))
    require(fixed->value > 0, ErrorCode::invalid_argument, "fixed singleton std must be positive");
}

GaussianClusterStats<double> empirical_stats(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& rows,
                                             double singleton_variance, double variance_floor) {
  GaussianClusterStats<double> g;
  g.count = static_cast<Eigen::Index>(rows.size());
  g.mean = Eigen::VectorXd::Zero(X.cols());
  for (auto r : rows) g.mean += X.row(r).transpose();
  g.mean /= static_cast<double>(g.count);
  g.variance = Eigen::VectorXd::Zero(X.cols());
  for (auto r : rows) g.variance += (X.row(r).transpose() - g.mean).array().square().matrix();
  g.variance /= static_cast<double>(g.count);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    bool constant = true;
    for (auto r : rows) {
      if (X(r, j) != X(rows.front(), j)) {
        constant = false;
        break;
      }
    }
    g.variance(j) = constant ? singleton_variance : std::max(g.variance(j), variance_floor);
  }
  return g;
}

HierResult locked_hierarchical_full(const Eigen::MatrixXd& X, const std::vector<std::string>& plant_ids,
                                    const HierParams& params) {
  params.validate();
  const Eigen::Index n = X.rows();
  require(n >= 2, ErrorCode::invalid_argument, "hierarchical clustering needs at least two samples");
  require(plant_ids.empty() || plant_ids.size() == static_cast<std::size_t>(n), ErrorCode::invalid_argument,
          "plant_ids must be empty or one per sample");

  HierResult result;
  result.singleton_std = std::holds_alternative<FixedStd>(params.singleton_std)
                             ? std::get<FixedStd>(params.singleton_std).value
                             : median_pairwise_distance(X);
  const double singleton_var = std::max(result.singleton_std * result.singleton_std, params.variance_floor);

  // Locked initialisation: one cluster per plant, in order of first appearance.
  std::vector<std::vector<Eigen::Index>> members;
  {
    std::unordered_map<std::string, std::size_t> group;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (plant_ids.empty()) {
        members.push_back({i});
        continue;
      }
      auto [it, inserted] = group.emplace(plant_ids[static_cast<std::size_t>(i)], members.size());
      if (inserted) members.emplace_back();
      members[it->second].push_back(i);
    }
  }
  const std::size_t c0 = members.size();
  std::vector<GaussianClusterStats<double>> stats(c0);
  for (std::size_t c = 0; c < c0; ++c) {
    auto& g = stats[c];
    g.count = static_cast<Eigen::Index>(members[c].size());
    g.mean = Eigen::VectorXd::Zero(X.cols());
    for (auto r : members[c]) g.mean += X.row(r).transpose();
    g.mean /= static_cast<double>(g.count);
    g.variance = Eigen::VectorXd::Constant(X.cols(), singleton_var);
  }

  std::vector<bool> active(c0, true);
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd dist = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(c0), static_cast<Eigen::Index>(c0), inf);
  for (std::size_t a = 0; a < c0; ++a)
    for (std::size_t b = a + 1; b < c0; ++b)
      dist(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = kl2_distance(stats[a], stats[b]);

  std::size_t remaining = c0;
  while (remaining > 1) {
    // Exact closest pair; strict comparison keeps the lowest (a, b) on ties.
    Eigen::Index best_a = -1, best_b = -1;
    double best = inf;
    for (std::size_t a = 0; a < c0; ++a) {
      if (!active[a]) continue;
      for (std::size_t b = a + 1; b < c0; ++b) {
        if (!active[b]) continue;
        const double d = dist(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (d < best || best_a < 0) {
          best = d;
          best_a = static_cast<Eigen::Index>(a);
          best_b = static_cast<Eigen::Index>(b);
        }
      }
    }
    const auto ia = static_cast<std::size_t>(best_a);
    const auto ib = static_cast<std::size_t>(best_b);
    std::vector<Eigen::Index> merged_rows = members[ia];
    merged_rows.insert(merged_rows.end(), members[ib].begin(), members[ib].end());
    auto merged = empirical_stats(X, merged_rows, singleton_var, params.variance_floor);
    if (delta_bic(stats[ia], stats[ib], merged, n, params) < 0) break;

    members[ia] = std::move(merged_rows);
    members[ib].clear();
    stats[ia] = std::move(merged);
    active[ib] = false;
    --remaining;
    ++result.merges;
    for (std::size_t o = 0; o < c0; ++o) {
      if (!active[o] || o == ia) continue;
      const double d = kl2_distance(stats[ia], stats[o]);
      if (o < ia)
        dist(static_cast<Eigen::Index>(o), best_a) = d;
      else
        dist(best_a, static_cast<Eigen::Index>(o)) = d;
    }
  }

  std::vector<int> raw(static_cast<std::size_t>(n), -1);
  for (std::size_t c = 0; c < c0; ++c)
    for (auto r : members[c]) raw[static_cast<std::size_t>(r)] = static_cast<int>(c);
  result.assignment = densify(raw);
  result.stats.resize(static_cast<std::size_t>(result.assignment.n_clusters));
  for (std::size_t c = 0; c < c0; ++c) {
    if (!active[c]) continue;
    const int dense = result.assignment.labels[static_cast<std::size_t>(members[c].front())];
    result.stats[static_cast<std::size_t>(dense)] = stats[c];
  }
  result.assignment.iterations = result.merges;
  return result;
}

ClusterAssignment locked_hierarchical(const Eigen::MatrixXd& X, const std::vector<std::string>& plant_ids,
                                      const HierParams& params) {
  return locked_hierarchical_full(X, plant_ids, params).assignment;
}

}  // namespace scoutlabel
