#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scoutlabel/clustering.hpp"

namespace scoutlabel {

enum class ExemplarOrigin { cluster_mean, ap_exemplar, ap_refine, random };

/// Samples shown to the labeller. `owner[e]` is the (sub)cluster whose members
/// inherit the label of `indices[e]`; -1 when the exemplar owns no cluster.
struct ExemplarSet {
  std::vector<Eigen::Index> indices;
  ExemplarOrigin origin = ExemplarOrigin::random;
  std::vector<int> owner;

  std::size_t size() const { return indices.size(); }
};

/// Answers label queries for training-sample indices.
class Labeller {
 public:
  /// Returns the true label of every queried sample.
  static Labeller oracle(std::vector<int> true_labels);
  /// Looks queries up by image id in an annotations map (image_id -> class index).
  static Labeller from_annotations(std::map<std::string, int> annotations, std::vector<std::string> image_ids);

  int label(Eigen::Index sample) const;
  bool is_oracle() const { return oracle_; }

 private:
  bool oracle_ = true;
  std::vector<int> truth_;
  std::map<std::string, int> annotations_;
  std::vector<std::string> image_ids_;
};

/// Reads an `image_id,label` CSV (header optional) into image_id -> label name.
std::map<std::string, std::string> read_annotations(const std::filesystem::path& path);

struct LabelAssignment {
  std::vector<int> labels;
  /// Row per sample: one-hot for cluster methods, propagated F otherwise.
  Eigen::MatrixXd confidence;
  std::vector<Eigen::Index> labelled_indices;
  /// Label the labeller gave to each entry of labelled_indices.
  std::vector<int> given_labels;
  bool converged = true;
  int iterations = 0;
};

ExemplarSet mean_exemplars(const Eigen::MatrixXd& X, const ClusterAssignment& clusters);

/// AP exemplars of an affinity-propagation clustering, one per cluster.
ExemplarSet ap_exemplars(const ClusterAssignment& clusters);

struct RefinedExemplars {
  ExemplarSet exemplars;
  /// Subclusters over all samples; exemplar e owns subcluster owner[e].
  ClusterAssignment subclusters;
  /// Parent cluster of each subcluster.
  std::vector<int> parent;
};

/// Runs affinity propagation on each cluster's own cosine similarity matrix
/// and returns every subcluster exemplar.
RefinedExemplars ap_refine_exemplars(const Eigen::MatrixXd& X, const ClusterAssignment& clusters,
                                     const APParams& params = {});

/// Uniform sample of m distinct indices from [0, n), sorted.
ExemplarSet random_exemplars(Eigen::Index n, Eigen::Index m, std::uint64_t seed);

/// Every sample of a (sub)cluster takes the label of that cluster's exemplar.
LabelAssignment assign_cluster_labels(const ClusterAssignment& clusters, const ExemplarSet& exemplars,
                                      const Labeller& labeller, int n_classes);

struct LPParams {
  double alpha = 0.2;
  double sigma = 0.16;
  int max_iterations = 1000;
  double tolerance = 1e-6;
  bool locked = false;

  void validate() const;
};

/// Iterates F <- alpha S F + (1 - alpha) Y from F = Y, with S the normalised
/// Gaussian kernel graph. Locked runs reset labelled rows to Y after every step.
LabelAssignment propagate_labels(const Eigen::MatrixXd& X, const ExemplarSet& exemplars, const Labeller& labeller,
                                 int n_classes, const LPParams& params = {});

/// Same iteration on a prebuilt propagation matrix and seed matrix Y.
LabelAssignment propagate_on_graph(const Eigen::MatrixXd& S, const Eigen::MatrixXd& Y,
                                   const std::vector<Eigen::Index>& labelled, const LPParams& params);

/// Row argmax with ties to the lowest column.
int argmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// Relabels each plant's images to their modal class. Ties go to the highest
/// summed confidence over the plant's rows, then to the lowest class index.
LabelAssignment majority_vote(const LabelAssignment& labels, const std::vector<std::string>& plant_ids);

}  // namespace scoutlabel
