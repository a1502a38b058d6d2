#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"
#include "scoutlabel/dataset.hpp"

namespace scoutlabel {

void SyntheticSpec::validate() const {
  require(n_classes >= 1, ErrorCode::invalid_argument, "n_classes must be >= 1");
  require(plants_per_class >= 1, ErrorCode::invalid_argument, "plants_per_class must be >= 1");
  require(images_per_plant_min >= 1 && images_per_plant_max >= images_per_plant_min,
          ErrorCode::invalid_argument, "images_per_plant must be a range with min >= 1");
  require(d >= 1, ErrorCode::invalid_argument, "d must be >= 1");
  require(class_separation >= 0, ErrorCode::invalid_argument, "class_separation must be >= 0");
  require(within_class_spread > 0 && within_plant_spread > 0, ErrorCode::invalid_argument,
          "spreads must be positive");
  require(within_plant_spread <= within_class_spread, ErrorCode::invalid_argument,
          "within_plant_spread must not exceed within_class_spread");
  require(class_plant_counts.empty() || class_plant_counts.size() == static_cast<std::size_t>(n_classes),
          ErrorCode::invalid_argument, "class_plant_counts must list one count per class");
  for (int c : class_plant_counts)
    require(c >= 1, ErrorCode::invalid_argument, "class_plant_counts entries must be >= 1");
}

int SyntheticSpec::plants_in_class(int cls) const {
  return class_plant_counts.empty() ? plants_per_class : class_plant_counts[static_cast<std::size_t>(cls)];
}

SyntheticSpec parse_synthetic_spec(std::string_view json_text) {
  SyntheticSpec spec;
  try {
    auto j = nlohmann::json::parse(json_text);
    spec.n_classes = j.value("n_classes", spec.n_classes);
    spec.plants_per_class = j.value("plants_per_class", spec.plants_per_class);
    if (j.contains("images_per_plant")) {
      const auto& r = j.at("images_per_plant");
      if (r.is_array()) {
        spec.images_per_plant_min = r.at(0).get<int>();
        spec.images_per_plant_max = r.at(1).get<int>();
      } else {
        spec.images_per_plant_min = spec.images_per_plant_max = r.get<int>();
      }
    }
    spec.d = j.value("d", spec.d);
    spec.class_separation = j.value("class_separation", spec.class_separation);
    spec.within_class_spread = j.value("within_class_spread", spec.within_class_spread);
    spec.within_plant_spread = j.value("within_plant_spread", spec.within_plant_spread);
    spec.seed = j.value("seed", spec.seed);
    spec.class_plant_counts = j.value("class_plant_counts", spec.class_plant_counts);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string to_json(const SyntheticSpec& spec) {
  nlohmann::json j;
  j["n_classes"] = spec.n_classes;
  j["plants_per_class"] = spec.plants_per_class;
  j["images_per_plant"] = {spec.images_per_plant_min, spec.images_per_plant_max};
  j["d"] = spec.d;
  j["class_separation"] = spec.class_separation;
  j["within_class_spread"] = spec.within_class_spread;
  j["within_plant_spread"] = spec.within_plant_spread;
  j["seed"] = spec.seed;
  if (!spec.class_plant_counts.empty()) j["class_plant_counts"] = spec.class_plant_counts;
  return j.dump(2);
}

namespace {

Eigen::MatrixXd gaussian_matrix(Index rows, Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

// Rows: [offset, centre_0 - offset, ...] directions, orthonormal when they fit in d.
Eigen::MatrixXd class_directions(const SyntheticSpec& spec, std::mt19937_64& rng) {
  const Index k = spec.n_classes + 1;
  Eigen::MatrixXd g = gaussian_matrix(spec.d, k, 1.0, rng);
  if (k <= spec.d) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(spec.d, k);
    return q.transpose();
  }
  Eigen::MatrixXd dirs = g.transpose();
  for (Index i = 0; i < dirs.rows(); ++i) dirs.row(i).normalize();
  return dirs;
}

}  // namespace

Eigen::MatrixXd synthetic_class_centres(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  Eigen::MatrixXd dirs = class_directions(spec, rng);
  Eigen::MatrixXd centres(spec.n_classes, spec.d);
  const double radius = spec.class_separation / std::sqrt(2.0);
  for (Index c = 0; c < spec.n_classes; ++c) centres.row(c) = dirs.row(0) + radius * dirs.row(c + 1);
  return centres;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  Eigen::MatrixXd dirs = class_directions(spec, rng);
  const double radius = spec.class_separation / std::sqrt(2.0);
  const double class_sd = spec.within_class_spread / std::sqrt(static_cast<double>(spec.d));
  const double plant_sd = spec.within_plant_spread / std::sqrt(static_cast<double>(spec.d));
  std::uniform_int_distribution<int> image_count(spec.images_per_plant_min, spec.images_per_plant_max);

  // Class names are zero-padded so lexicographic order matches generation order.
  const int width = static_cast<int>(std::to_string(std::max(spec.n_classes - 1, 0)).size());
  auto pad = [](int v, int w) {
    std::string s = std::to_string(v);
    return std::string(static_cast<std::size_t>(std::max(0, w - static_cast<int>(s.size()))), '0') + s;
  };

  std::vector<ImageSample> samples;
  for (int c = 0; c < spec.n_classes; ++c) {
    const std::string label = "class" + pad(c, width);
    Eigen::VectorXd centre = (dirs.row(0) + radius * dirs.row(c + 1)).transpose();
    const int n_plants = spec.plants_in_class(c);
    std::vector<int> order(static_cast<std::size_t>(n_plants));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Split> split_of(static_cast<std::size_t>(n_plants));
    const int n_train = (n_plants + 1) / 2;
    for (int i = 0; i < n_plants; ++i)
      split_of[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i < n_train ? Split::train : Split::test;

    for (int p = 0; p < n_plants; ++p) {
      const std::string plant_id = label + "_p" + std::to_string(p);
      Eigen::VectorXd plant_centre = centre + gaussian_matrix(spec.d, 1, class_sd, rng);
      const int n_images = image_count(rng);
      for (int m = 0; m < n_images; ++m) {
        ImageSample s;
        s.image_id = plant_id + "_i" + std::to_string(m);
        s.plant_id = plant_id;
        s.split = split_of[static_cast<std::size_t>(p)];
        s.label = label;
        s.features = plant_centre + gaussian_matrix(spec.d, 1, plant_sd, rng);
        samples.push_back(std::move(s));
      }
    }
  }
  return make_dataset(std::move(samples), LoadOptions{.normalize = true});
}

}  // namespace scoutlabel
