#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "scoutlabel/error.hpp"

namespace scoutlabel {

using Index = Eigen::Index;

enum class Split { train, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

/// One segmented plant image and its descriptor.
struct ImageSample {
  std::string image_id;
  std::string plant_id;
  Split split = Split::train;
  std::string label;
  Eigen::VectorXd features;

  bool operator==(const ImageSample&) const = default;
};

/// A validated collection of samples. `class_names` is sorted lexicographically
/// so the class index of a label is reproducible across runs and files.
struct Dataset {
  std::vector<ImageSample> samples;
  std::vector<std::string> class_names;
  Index dim = 0;

  std::size_t size() const { return samples.size(); }

  /// Throws invalid_argument for a label not in `class_names`.
  int class_index(const std::string& label) const;

  std::vector<std::size_t> indices(Split split) const;

  /// Row-stacked features of the given samples (rows = samples).
  Eigen::MatrixXd features(std::span<const std::size_t> rows) const;
  std::vector<int> label_indices(std::span<const std::size_t> rows) const;
  std::vector<std::string> plant_ids(std::span<const std::size_t> rows) const;
  std::vector<std::string> image_ids(std::span<const std::size_t> rows) const;

  bool operator==(const Dataset&) const = default;
};

/// Plant atomicity check: every plant_id has one split and one label.
bool plants_are_atomic(const Dataset& ds);

enum class DataFormat { jsonl, csv };

/// jsonl unless the extension is ".csv".
DataFormat format_from_path(const std::filesystem::path& path);

struct LoadOptions {
  bool normalize = true;
};

/// Validates `samples` and builds the dataset. Each violated invariant raises
/// its own ErrorCode: dimension_mismatch, duplicate_image_id, split_conflict,
/// label_conflict, empty_train_split.
Dataset make_dataset(std::vector<ImageSample> samples, const LoadOptions& options = {});

Dataset load_dataset(const std::filesystem::path& path, DataFormat format,
                     const LoadOptions& options = {});
Dataset parse_dataset(std::string_view text, DataFormat format, const LoadOptions& options = {});

void save_dataset(const Dataset& ds, const std::filesystem::path& path, DataFormat format);
std::string serialize_dataset(const Dataset& ds, DataFormat format);

/// Scales `x` to unit Euclidean norm. Throws zero_norm on a zero vector.
template <typename Derived>
typename Derived::PlainObject l2_normalize(const Eigen::MatrixBase<Derived>& x) {
  const auto norm = x.norm();
  require(norm > 0 && std::isfinite(norm), ErrorCode::zero_norm,
          "cannot L2-normalise a zero or non-finite vector");
  return x / norm;
}

struct SyntheticSpec {
  int n_classes = 4;
  int plants_per_class = 60;
  int images_per_plant_min = 1;
  int images_per_plant_max = 3;
  Index d = 128;
  double class_separation = 10.0;
  double within_class_spread = 0.5;
  double within_plant_spread = 0.1;
  std::uint64_t seed = 1;
  /// Optional per-class plant counts; overrides plants_per_class when non-empty.
  std::vector<int> class_plant_counts;

  void validate() const;
  int plants_in_class(int cls) const;
};

SyntheticSpec parse_synthetic_spec(std::string_view json_text);
std::string to_json(const SyntheticSpec& spec);

/// Draws a plant-structured Gaussian dataset. Class centres sit at pairwise
/// distance `class_separation` around a shared unit offset; spreads are RMS
/// radii (per-dimension std = spread / sqrt(d)). Plants are split 50/50 per
/// class, train taking the extra plant when the count is odd.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Class centres used by the generator (rows = classes), before normalisation.
Eigen::MatrixXd synthetic_class_centres(const SyntheticSpec& spec);

struct SplitCountRow {
  std::string class_name;
  std::size_t train = 0;
  std::size_t test = 0;

  bool operator==(const SplitCountRow&) const = default;
};

std::vector<SplitCountRow> split_counts(const Dataset& ds);

}  // namespace scoutlabel
