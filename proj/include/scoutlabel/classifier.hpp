#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scoutlabel {

/// Multinomial logistic regression over descriptor vectors.
struct SoftmaxModel {
  Eigen::MatrixXd weights;  // classes x features
  Eigen::VectorXd bias;
  std::vector<std::string> class_names;

  Eigen::Index n_classes() const { return weights.rows(); }
  Eigen::Index dim() const { return weights.cols(); }
};

struct TrainConfig {
  double learning_rate = 0.1;
  double l2_penalty = 1e-4;
  int epochs = 500;
  std::uint64_t seed = 0;  // unused by zero initialisation, kept for config round-trips
  double tolerance = 1e-8;

  void validate() const;
};

/// Full-batch gradient descent on mean cross-entropy + (l2/2)|W|^2 from zero
/// weights. `labels` index into `class_names`; at least two distinct labels are
/// required. When `loss_history` is given it receives the loss before each step
/// and after the last one.
SoftmaxModel train_softmax(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                           std::vector<std::string> class_names, const TrainConfig& config = {},
                           std::vector<double>* loss_history = nullptr);

double softmax_loss(const SoftmaxModel& model, const Eigen::MatrixXd& X, const std::vector<int>& labels,
                    double l2_penalty);

Eigen::MatrixXd predict_logits(const SoftmaxModel& model, const Eigen::MatrixXd& X);

/// Softmax probabilities, one row per sample.
Eigen::MatrixXd predict_scores(const SoftmaxModel& model, const Eigen::MatrixXd& X);

enum class ScoreMode { probability, logit };

struct PlantPredictions {
  std::vector<std::string> plants;  // first-appearance order
  std::vector<int> plant_class;     // aligned with `plants`
  std::vector<int> image_class;     // per input row
  std::vector<int> image_plant_class;  // plant decision broadcast to each row
};

/// Sums each plant's image score rows and takes the argmax (ties to the lowest
/// class). Image classes are the per-row argmax.
PlantPredictions classify_plants(const Eigen::MatrixXd& scores, const std::vector<std::string>& plant_ids);
PlantPredictions classify_plants(const SoftmaxModel& model, const Eigen::MatrixXd& X,
                                 const std::vector<std::string>& plant_ids, ScoreMode mode = ScoreMode::probability);

std::string model_to_json(const SoftmaxModel& model);
SoftmaxModel model_from_json(const std::string& text);
void save_model(const SoftmaxModel& model, const std::filesystem::path& path);
SoftmaxModel load_model(const std::filesystem::path& path);

}  // namespace scoutlabel
