#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scoutlabel/dataset.hpp"

namespace testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

// Two tight triads around (1,0) and (0,1): well separated in cosine terms too.
inline Eigen::MatrixXd two_triads() {
  Eigen::MatrixXd X(6, 2);
  X << 1.0, 0.00, 1.0, 0.02, 1.0, -0.02, 0.00, 1.0, 0.02, 1.0, -0.02, 1.0;
  return X;
}

inline scoutlabel::ImageSample sample(std::string image, std::string plant, scoutlabel::Split split,
                                      std::string label, std::vector<double> f) {
  scoutlabel::ImageSample s;
  s.image_id = std::move(image);
  s.plant_id = std::move(plant);
  s.split = split;
  s.label = std::move(label);
  s.features = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  return s;
}

inline scoutlabel::SyntheticSpec separated_spec(std::uint64_t seed, int plants_per_class = 20) {
  scoutlabel::SyntheticSpec spec;
  spec.n_classes = 4;
  spec.plants_per_class = plants_per_class;
  spec.images_per_plant_min = 1;
  spec.images_per_plant_max = 3;
  spec.d = 32;
  spec.class_separation = 4.0;
  spec.within_class_spread = 1.0;
  spec.within_plant_spread = 0.1;
  spec.seed = seed;
  return spec;
}

// Exhaustive search over nonempty exemplar subsets maximising
// sum_i max_{k in E} s(i, k) over non-exemplars + |E| * preference.
struct BruteForceOptimum {
  std::vector<Eigen::Index> exemplars;
  double net = 0;
};

inline double subset_net_similarity(const Eigen::MatrixXd& S, unsigned mask, double preference) {
  const auto n = S.rows();
  double net = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mask >> i & 1u) {
      net += preference;
      continue;
    }
    double best = -1e300;
    for (Eigen::Index k = 0; k < n; ++k)
      if (mask >> k & 1u) best = std::max(best, S(i, k));
    net += best;
  }
  return net;
}

inline BruteForceOptimum brute_force_exemplars(const Eigen::MatrixXd& S, double preference) {
  const auto n = static_cast<unsigned>(S.rows());
  BruteForceOptimum out;
  out.net = -1e300;
  unsigned best_mask = 0;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    const double net = subset_net_similarity(S, mask, preference);
    if (net > out.net + 1e-12) {
      out.net = net;
      best_mask = mask;
    }
  }
  for (unsigned k = 0; k < n; ++k)
    if (best_mask >> k & 1u) out.exemplars.push_back(k);
  return out;
}

}  // namespace testing
