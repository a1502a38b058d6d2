#include <algorithm>
#include <limits>
#include <map>

#include "scoutlabel/clustering.hpp"

namespace scoutlabel {

std::vector<std::vector<Eigen::Index>> ClusterAssignment::members() const {
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(n_clusters));
  for (std::size_t i = 0; i < labels.size(); ++i)
    out[static_cast<std::size_t>(labels[i])].push_back(static_cast<Eigen::Index>(i));
  return out;
}

ClusterAssignment densify(const std::vector<int>& raw_labels) {
  ClusterAssignment out;
  std::map<int, int> remap;
  out.labels.reserve(raw_labels.size());
  for (int raw : raw_labels) {
    auto [it, inserted] = remap.emplace(raw, static_cast<int>(remap.size()));
    out.labels.push_back(it->second);
  }
  out.n_clusters = static_cast<int>(remap.size());
  return out;
}

void APParams::validate() const {
  require(damping > 0 && damping < 1, ErrorCode::invalid_argument, "damping must lie strictly inside (0, 1)");
  require(max_iterations >= 1, ErrorCode::invalid_argument, "max_iterations must be >= 1");
  require(convergence_window >= 1, ErrorCode::invalid_argument, "convergence_window must be >= 1");
}

double median_similarity(const Eigen::MatrixXd& S) {
  std::vector<double> values;
  const Eigen::Index n = S.rows();
  values.reserve(static_cast<std::size_t>(n * (n - 1)));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      if (i != k) values.push_back(S(i, k));
  require(!values.empty(), ErrorCode::invalid_argument, "median similarity needs n >= 2");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  return m % 2 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

double net_similarity(const Eigen::MatrixXd& S, const std::vector<Eigen::Index>& exemplars, double preference) {
  double total = preference * static_cast<double>(exemplars.size());
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    if (std::find(exemplars.begin(), exemplars.end(), i) != exemplars.end()) continue;
    double best = -std::numeric_limits<double>::infinity();
    for (auto k : exemplars) best = std::max(best, S(i, k));
    total += best;
  }
  return total;
}

namespace {

// Non-exemplars go to the exemplar of highest similarity, ties to the lowest index.
ClusterAssignment assign_to_exemplars(const Eigen::MatrixXd& S, const std::vector<Eigen::Index>& exemplars) {
  const Eigen::Index n = S.rows();
  ClusterAssignment out;
  out.labels.assign(static_cast<std::size_t>(n), -1);
  out.n_clusters = static_cast<int>(exemplars.size());
  out.exemplar_of = exemplars;
  for (std::size_t c = 0; c < exemplars.size(); ++c) out.labels[static_cast<std::size_t>(exemplars[c])] = static_cast<int>(c);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (out.labels[static_cast<std::size_t>(i)] >= 0) continue;
    int best = 0;
    for (std::size_t c = 1; c < exemplars.size(); ++c)
      if (S(i, exemplars[c]) > S(i, exemplars[static_cast<std::size_t>(best)])) best = static_cast<int>(c);
    out.labels[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

std::vector<Eigen::Index> current_exemplars(const Eigen::MatrixXd& R, const Eigen::MatrixXd& A) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index k = 0; k < R.rows(); ++k)
    if (R(k, k) + A(k, k) > 0) out.push_back(k);
  return out;
}

}  // namespace

APResult affinity_propagation_full(const AffinityMatrix<double>& similarity, const APParams& params) {
  params.validate();
  const Eigen::Index n = similarity.size();
  require(n >= 2, ErrorCode::invalid_argument, "affinity propagation needs at least two samples");
  require((similarity.values - similarity.values.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
          ErrorCode::invalid_argument, "similarity matrix must be symmetric");

  APResult result;
  result.preference = std::holds_alternative<FixedPreference>(params.preference)
                          ? std::get<FixedPreference>(params.preference).value
                          : median_similarity(similarity.values);

  Eigen::MatrixXd S = similarity.values;
  S.diagonal().setConstant(result.preference);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd fresh(n, n);
  const double keep = params.damping;
  const double take = 1.0 - params.damping;

  std::vector<Eigen::Index> exemplars;
  int stable = 0;
  bool converged = false;
  int it = 0;
  for (; it < params.max_iterations; ++it) {
    // Responsibilities: r(i,k) = s(i,k) - max_{k' != k} [a(i,k') + s(i,k')].
    for (Eigen::Index i = 0; i < n; ++i) {
      double first = -std::numeric_limits<double>::infinity();
      double second = first;
      Eigen::Index arg_first = 0;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double v = A(i, k) + S(i, k);
        if (v > first) {
          second = first;
          first = v;
          arg_first = k;
        } else if (v > second) {
          second = v;
        }
      }
      for (Eigen::Index k = 0; k < n; ++k) fresh(i, k) = S(i, k) - (k == arg_first ? second : first);
    }
    R = keep * R + take * fresh;

    // Availabilities: a(i,k) = min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k))),
    // a(k,k) = sum_{i' != k} max(0, r(i',k)).
    for (Eigen::Index k = 0; k < n; ++k) {
      double positive = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != k) positive += std::max(0.0, R(i, k));
      for (Eigen::Index i = 0; i < n; ++i) {
        fresh(i, k) = i == k ? positive : std::min(0.0, R(k, k) + positive - std::max(0.0, R(i, k)));
      }
    }
    A = keep * A + take * fresh;

    require(R.allFinite() && A.allFinite(), ErrorCode::invalid_argument, "affinity propagation messages diverged");

    auto now = current_exemplars(R, A);
    if (now == exemplars) {
      ++stable;
    } else {
      exemplars = std::move(now);
      stable = 1;
    }
    if (!exemplars.empty() && stable >= params.convergence_window) {
      converged = true;
      ++it;
      break;
    }
  }

  if (exemplars.empty()) {
    Eigen::Index best = 0;
    (R.diagonal() + A.diagonal()).maxCoeff(&best);
    exemplars.push_back(best);
    converged = false;
  }

  result.assignment = assign_to_exemplars(S, exemplars);
  result.assignment.converged = converged;
  result.assignment.iterations = it;
  result.state = APState{std::move(S), std::move(R), std::move(A)};
  return result;
}

ClusterAssignment affinity_propagation(const AffinityMatrix<double>& S, const APParams& params) {
  return affinity_propagation_full(S, params).assignment;
}

}  // namespace scoutlabel
