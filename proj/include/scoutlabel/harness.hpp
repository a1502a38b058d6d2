#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scoutlabel/classifier.hpp"
#include "scoutlabel/clustering.hpp"
#include "scoutlabel/dataset.hpp"
#include "scoutlabel/labelling.hpp"

namespace scoutlabel {

// Clustering + labelling compositions of the selective-labelling test matrix.
enum class StrategyName { Full, KMeans, Mean, AP_Refine, AP, LP, LLP, APLP, APLLP };

std::string_view to_string(StrategyName name);
StrategyName parse_strategy(std::string_view text);

/// Strategies whose exemplar count falls out of their clustering.
bool has_auto_budget(StrategyName name);
/// Strategies that draw fresh randomness per repetition.
bool is_randomised(StrategyName name);

struct Budget {
  enum class Kind { automatic, percent, match };
  Kind kind = Kind::automatic;
  double percent = 0;
  StrategyName match = StrategyName::AP;

  static Budget automatic_budget() { return {}; }
  static Budget of_percent(double p) { return {Kind::percent, p, StrategyName::AP}; }
  static Budget matching(StrategyName s) { return {Kind::match, 0, s}; }

  /// "auto", "10%", "match:AP".
  std::string label() const;
  static Budget parse(std::string_view text);
};

struct StrategySpec {
  StrategyName name = StrategyName::Full;
  Budget budget{};
  int repetitions = 0;  // 0: 10 for randomised strategies, 1 otherwise
  std::uint64_t seed = 0;

  int effective_repetitions() const;
  /// Throws budget_mismatch for an illegal strategy/budget pairing.
  void validate() const;
};

struct PipelineConfig {
  APParams ap{};
  HierParams hier{};
  LPParams lp{};
  TrainConfig train{};
  int kmeans_max_iterations = 300;
  double kmeans_tolerance = 1e-6;
  ScoreMode score_mode = ScoreMode::probability;
};

/// Percentages are in [0, 100]; accuracies are percent too.
struct CellMetrics {
  double percent_labelled = 0;
  double labelling_accuracy = 0;
  double classification_accuracy_plant = 0;
  double classification_accuracy_image = 0;
  double reduction_factor = 0;
  std::vector<double> per_class_tpr;
  double n_exemplars = 0;
  double n_clusters = 0;
};

struct RepetitionResult {
  std::uint64_t seed = 0;
  /// Labelling output before the plant majority vote.
  LabelAssignment raw;
  LabelAssignment labels;
  std::optional<SoftmaxModel> model;
  PlantPredictions test_predictions;
  CellMetrics metrics;
  int n_clusters = 0;
  bool converged = true;
};

struct StrategyResult {
  StrategySpec spec;
  Eigen::Index exemplar_count = 0;  // resolved budget (0 for automatic)
  std::vector<RepetitionResult> repetitions;
  CellMetrics mean;
  CellMetrics stddev;
};

/// Exemplar count an automatic strategy selects on the training split.
Eigen::Index auto_exemplar_count(const Dataset& ds, StrategyName name, const PipelineConfig& config);

/// Exemplar count for a percent budget: round(p * n / 100), clamped to [1, n].
Eigen::Index budget_count(double percent, Eigen::Index n_train);

/// Runs one test-matrix cell. Match budgets are resolved with
/// `matched_count` when provided, otherwise by running the matched strategy.
StrategyResult run_strategy(const Dataset& ds, const StrategySpec& spec, const PipelineConfig& config,
                            std::optional<Eigen::Index> matched_count = std::nullopt);

/// Exemplars the first repetition of `spec` would show to a labeller
/// (indices into the training split).
ExemplarSet plan_exemplars(const Dataset& ds, const StrategySpec& spec, const PipelineConfig& config,
                           std::optional<Eigen::Index> matched_count = std::nullopt);

/// One repetition of `spec` answered by `labeller` instead of the oracle.
/// Metrics against the dataset labels are still computed.
RepetitionResult label_with(const Dataset& ds, const StrategySpec& spec, const PipelineConfig& config,
                            const Labeller& labeller, std::optional<Eigen::Index> matched_count = std::nullopt);

/// Row-per-truth confusion counts.
Eigen::MatrixXi confusion_matrix(const std::vector<int>& truth, const std::vector<int>& predicted, int n_classes);
/// Per-class recall in percent; NaN for classes with no true members.
std::vector<double> per_class_tpr(const Eigen::MatrixXi& confusion);

/// Metrics for one repetition. `labels` covers the training split in
/// ds.indices(train) order; `predictions` covers ds.indices(test) order and
/// may be null when the test split is empty.
CellMetrics compute_metrics(const Dataset& ds, const LabelAssignment& labels, const PlantPredictions* predictions);

struct MatrixCellSpec {
  StrategyName name = StrategyName::Full;
  Budget budget{};
  int repetitions = 0;
};

struct MatrixConfig {
  std::uint64_t master_seed = 0;
  std::vector<MatrixCellSpec> cells;
  PipelineConfig pipeline{};
  int threads = 1;
};

MatrixConfig parse_matrix_config(std::string_view json_text);
PipelineConfig parse_pipeline_config(std::string_view json_text);

/// Stable per-cell seed from (master seed, strategy, budget).
std::uint64_t cell_seed(std::uint64_t master_seed, StrategyName name, const Budget& budget);

struct ReportRow {
  std::string test_name;
  std::string budget;
  int repetitions = 0;
  CellMetrics mean;
  CellMetrics stddev;
  std::string error;  // empty when the cell succeeded
};

struct ExperimentReport {
  std::vector<std::string> class_names;
  std::vector<ReportRow> rows;
};

ReportRow summarise(const StrategyResult& result);

/// Runs every cell; a failing cell is recorded with its error and the run goes on.
ExperimentReport run_matrix(const Dataset& ds, const MatrixConfig& config);

}  // namespace scoutlabel
