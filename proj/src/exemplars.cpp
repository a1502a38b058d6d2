#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "scoutlabel/labelling.hpp"

namespace scoutlabel {

Labeller Labeller::oracle(std::vector<int> true_labels) {
  Labeller l;
  l.oracle_ = true;
  l.truth_ = std::move(true_labels);
  return l;
}

Labeller Labeller::from_annotations(std::map<std::string, int> annotations, std::vector<std::string> image_ids) {
  Labeller l;
  l.oracle_ = false;
  l.annotations_ = std::move(annotations);
  l.image_ids_ = std::move(image_ids);
  return l;
}

int Labeller::label(Eigen::Index sample) const {
  const auto i = static_cast<std::size_t>(sample);
  if (oracle_) {
    require(i < truth_.size(), ErrorCode::invalid_argument, "labeller queried outside its sample range");
    return truth_[i];
  }
  require(i < image_ids_.size(), ErrorCode::invalid_argument, "labeller queried outside its sample range");
  auto it = annotations_.find(image_ids_[i]);
  require(it != annotations_.end(), ErrorCode::missing_annotation,
          "no annotation for exemplar image \"" + image_ids_[i] + "\"");
  return it->second;
}

std::map<std::string, std::string> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open \"" + path.string() + "\"");
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    auto comma = line.find(',');
    require(comma != std::string::npos, ErrorCode::parse,
            path.string() + ":" + std::to_string(line_no) + ": expected image_id,label");
    std::string id = line.substr(0, comma);
    std::string label = line.substr(comma + 1);
    if (line_no == 1 && id == "image_id") continue;
    out[id] = label;
  }
  return out;
}

ExemplarSet mean_exemplars(const Eigen::MatrixXd& X, const ClusterAssignment& clusters) {
  require(clusters.n_clusters >= 1, ErrorCode::invalid_argument, "mean exemplars need at least one cluster");
  ExemplarSet out;
  out.origin = ExemplarOrigin::cluster_mean;
  const auto members = clusters.members();
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto& rows = members[c];
    require(!rows.empty(), ErrorCode::invalid_argument, "cluster " + std::to_string(c) + " is empty");
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(X.cols());
    for (auto r : rows) mean += X.row(r);
    mean /= static_cast<double>(rows.size());
    Eigen::Index best = rows.front();
    double best_d = (X.row(best) - mean).squaredNorm();
    for (auto r : rows) {
      const double d = (X.row(r) - mean).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = r;
      }
    }
    out.indices.push_back(best);
    out.owner.push_back(static_cast<int>(c));
  }
  return out;
}

ExemplarSet ap_exemplars(const ClusterAssignment& clusters) {
  require(clusters.exemplar_of.size() == static_cast<std::size_t>(clusters.n_clusters), ErrorCode::missing_exemplar,
          "clustering carries no per-cluster exemplars");
  ExemplarSet out;
  out.origin = ExemplarOrigin::ap_exemplar;
  out.indices = clusters.exemplar_of;
  out.owner.resize(out.indices.size());
  std::iota(out.owner.begin(), out.owner.end(), 0);
  return out;
}

RefinedExemplars ap_refine_exemplars(const Eigen::MatrixXd& X, const ClusterAssignment& clusters,
                                     const APParams& params) {
  RefinedExemplars out;
  out.exemplars.origin = ExemplarOrigin::ap_refine;
  out.subclusters.labels.assign(clusters.labels.size(), -1);
  out.subclusters.converged = true;
  const auto members = clusters.members();
  int next = 0;
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto& rows = members[c];
    require(!rows.empty(), ErrorCode::invalid_argument, "cluster " + std::to_string(c) + " is empty");
    if (rows.size() == 1) {
      out.subclusters.labels[static_cast<std::size_t>(rows.front())] = next;
      out.subclusters.exemplar_of.push_back(rows.front());
      out.exemplars.indices.push_back(rows.front());
      out.exemplars.owner.push_back(next);
      out.parent.push_back(static_cast<int>(c));
      ++next;
      continue;
    }
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = X.row(rows[r]);
    const auto local = affinity_propagation(cosine_similarity_matrix(sub), params);
    out.subclusters.converged = out.subclusters.converged && local.converged;
    for (std::size_t r = 0; r < rows.size(); ++r)
      out.subclusters.labels[static_cast<std::size_t>(rows[r])] = next + local.labels[r];
    for (int k = 0; k < local.n_clusters; ++k) {
      const Eigen::Index global = rows[static_cast<std::size_t>(local.exemplar_of[static_cast<std::size_t>(k)])];
      out.subclusters.exemplar_of.push_back(global);
      out.exemplars.indices.push_back(global);
      out.exemplars.owner.push_back(next + k);
      out.parent.push_back(static_cast<int>(c));
    }
    next += local.n_clusters;
  }
  out.subclusters.n_clusters = next;
  return out;
}

ExemplarSet random_exemplars(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  require(m >= 1, ErrorCode::invalid_argument, "at least one exemplar is required");
  require(m <= n, ErrorCode::invalid_argument,
          "cannot draw " + std::to_string(m) + " exemplars from " + std::to_string(n) + " samples");
  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  ExemplarSet out;
  out.origin = ExemplarOrigin::random;
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(out.indices), m, rng);
  out.owner.assign(out.indices.size(), -1);
  return out;
}

LabelAssignment assign_cluster_labels(const ClusterAssignment& clusters, const ExemplarSet& exemplars,
                                      const Labeller& labeller, int n_classes) {
  std::vector<int> cluster_label(static_cast<std::size_t>(clusters.n_clusters), -1);
  LabelAssignment out;
  for (std::size_t e = 0; e < exemplars.size(); ++e) {
    const int label = labeller.label(exemplars.indices[e]);
    require(label >= 0 && label < n_classes, ErrorCode::invalid_argument, "labeller returned an unknown class");
    out.labelled_indices.push_back(exemplars.indices[e]);
    out.given_labels.push_back(label);
    const int owner = e < exemplars.owner.size() ? exemplars.owner[e] : -1;
    if (owner >= 0 && owner < clusters.n_clusters && cluster_label[static_cast<std::size_t>(owner)] < 0)
      cluster_label[static_cast<std::size_t>(owner)] = label;
  }
  for (int c = 0; c < clusters.n_clusters; ++c)
    require(cluster_label[static_cast<std::size_t>(c)] >= 0, ErrorCode::missing_exemplar,
            "cluster " + std::to_string(c) + " has no exemplar");

  const auto n = static_cast<Eigen::Index>(clusters.labels.size());
  out.labels.resize(clusters.labels.size());
  out.confidence = Eigen::MatrixXd::Zero(n, n_classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = cluster_label[static_cast<std::size_t>(clusters.labels[static_cast<std::size_t>(i)])];
    out.labels[static_cast<std::size_t>(i)] = label;
    out.confidence(i, label) = 1.0;
  }
  return out;
}

int argmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j)
    if (row(j) > row(best)) best = static_cast<int>(j);
  return best;
}

LabelAssignment majority_vote(const LabelAssignment& labels, const std::vector<std::string>& plant_ids) {
  require(plant_ids.size() == labels.labels.size(), ErrorCode::invalid_argument,
          "majority vote needs one plant id per labelled image");
  const Eigen::Index n_classes = labels.confidence.cols();
  std::unordered_map<std::string, std::vector<std::size_t>> plants;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < plant_ids.size(); ++i) {
    auto [it, inserted] = plants.try_emplace(plant_ids[i]);
    if (inserted) order.push_back(plant_ids[i]);
    it->second.push_back(i);
  }
  LabelAssignment out = labels;
  for (const auto& plant : order) {
    const auto& rows = plants[plant];
    if (rows.size() == 1) continue;
    std::vector<int> votes(static_cast<std::size_t>(n_classes), 0);
    Eigen::RowVectorXd mass = Eigen::RowVectorXd::Zero(n_classes);
    for (auto r : rows) {
      ++votes[static_cast<std::size_t>(labels.labels[r])];
      mass += labels.confidence.row(static_cast<Eigen::Index>(r));
    }
    int winner = 0;
    for (int c = 1; c < n_classes; ++c) {
      const auto uc = static_cast<std::size_t>(c);
      const auto uw = static_cast<std::size_t>(winner);
      if (votes[uc] > votes[uw] || (votes[uc] == votes[uw] && mass(c) > mass(winner))) winner = c;
    }
    for (auto r : rows) out.labels[r] = winner;
  }
  return out;
}

}  // namespace scoutlabel
