#include "scoutlabel/affinity.hpp"
#include "scoutlabel/labelling.hpp"

namespace scoutlabel {

void LPParams::validate() const {
  require(alpha > 0 && alpha < 1, ErrorCode::invalid_argument, "alpha must lie strictly inside (0, 1)");
  require(sigma > 0, ErrorCode::invalid_argument, "sigma must be positive");
  require(max_iterations >= 1, ErrorCode::invalid_argument, "max_iterations must be >= 1");
  require(tolerance > 0, ErrorCode::invalid_argument, "tolerance must be positive");
}

LabelAssignment propagate_on_graph(const Eigen::MatrixXd& S, const Eigen::MatrixXd& Y,
                                   const std::vector<Eigen::Index>& labelled, const LPParams& params) {
  params.validate();
  require(S.rows() == S.cols() && S.rows() == Y.rows(), ErrorCode::invalid_argument,
          "propagation graph and seed matrix disagree in size");
  require(!labelled.empty(), ErrorCode::invalid_argument, "label propagation needs at least one labelled sample");

  LabelAssignment out;
  out.converged = false;
  Eigen::MatrixXd F = Y;
  const Eigen::MatrixXd seed = (1.0 - params.alpha) * Y;
  int it = 0;
  for (; it < params.max_iterations; ++it) {
    Eigen::MatrixXd next = params.alpha * (S * F) + seed;
    if (params.locked)
      for (auto r : labelled) next.row(r) = Y.row(r);
    const double change = (next - F).cwiseAbs().maxCoeff();
    F = std::move(next);
    if (change < params.tolerance) {
      out.converged = true;
      ++it;
      break;
    }
  }
  out.iterations = it;
  out.labels.resize(static_cast<std::size_t>(F.rows()));
  for (Eigen::Index i = 0; i < F.rows(); ++i) out.labels[static_cast<std::size_t>(i)] = argmax_row(F.row(i));
  out.confidence = std::move(F);
  out.labelled_indices = labelled;
  return out;
}

LabelAssignment propagate_labels(const Eigen::MatrixXd& X, const ExemplarSet& exemplars, const Labeller& labeller,
                                 int n_classes, const LPParams& params) {
  params.validate();
  require(!exemplars.indices.empty(), ErrorCode::invalid_argument, "label propagation needs at least one exemplar");
  require(n_classes >= 1, ErrorCode::invalid_argument, "label propagation needs at least one class");

  const auto S = normalize_propagation(gaussian_affinity(X, params.sigma));
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(X.rows(), n_classes);
  std::vector<int> given;
  for (auto e : exemplars.indices) {
    const int label = labeller.label(e);
    require(label >= 0 && label < n_classes, ErrorCode::invalid_argument, "labeller returned an unknown class");
    Y.row(e).setZero();
    Y(e, label) = 1.0;
    given.push_back(label);
  }
  auto out = propagate_on_graph(S.values, Y, exemplars.indices, params);
  out.given_labels = std::move(given);
  return out;
}

}  // namespace scoutlabel
