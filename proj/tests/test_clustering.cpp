#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "doctest.h"
#include "scoutlabel/clustering.hpp"
#include "scoutlabel/dataset.hpp"
#include "support.hpp"

using namespace scoutlabel;

namespace {

// Canonical form of a partition: sorted member lists.
std::set<std::vector<Eigen::Index>> partition_of(const ClusterAssignment& a) {
  std::set<std::vector<Eigen::Index>> out;
  for (auto m : a.members()) {
    std::sort(m.begin(), m.end());
    out.insert(m);
  }
  return out;
}

void check_dense(const ClusterAssignment& a) {
  std::set<int> ids(a.labels.begin(), a.labels.end());
  CHECK(static_cast<int>(ids.size()) == a.n_clusters);
  CHECK(*ids.begin() == 0);
  CHECK(*ids.rbegin() == a.n_clusters - 1);
}

GaussianClusterStats<double> gauss(std::vector<double> mean, std::vector<double> var, Eigen::Index count) {
  GaussianClusterStats<double> g;
  g.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  g.variance = Eigen::Map<Eigen::VectorXd>(var.data(), static_cast<Eigen::Index>(var.size()));
  g.count = count;
  return g;
}

}  // namespace

TEST_CASE("AP recovers two triads at the brute-force optimum") {
  const auto X = testing::two_triads();
  const auto S = cosine_similarity_matrix(X);
  const auto result = affinity_propagation_full(S);
  const auto& a = result.assignment;
  CHECK(a.converged);
  REQUIRE(a.n_clusters == 2);
  check_dense(a);
  CHECK(partition_of(a) == std::set<std::vector<Eigen::Index>>{{0, 1, 2}, {3, 4, 5}});
  REQUIRE(a.exemplar_of.size() == 2);
  for (int c = 0; c < 2; ++c) CHECK(a.labels[static_cast<std::size_t>(a.exemplar_of[c])] == c);

  Eigen::MatrixXd off = S.values;
  const double pref = median_similarity(off);
  CHECK(result.preference == doctest::Approx(pref));
  const auto oracle = testing::brute_force_exemplars(off, pref);
  std::vector<Eigen::Index> got = a.exemplar_of;
  std::sort(got.begin(), got.end());
  CHECK(net_similarity(off, got, pref) == doctest::Approx(oracle.net).epsilon(1e-12));
  CHECK(got == oracle.exemplars);
}

TEST_CASE("AP on two points matches the exhaustive optimum") {
  Eigen::MatrixXd X(2, 2);
  X << 1, 0, 0.6, 0.8;
  const auto S = cosine_similarity_matrix(X);
  const auto a = affinity_propagation(S);
  CHECK((a.n_clusters == 1 || a.n_clusters == 2));
  const double pref = median_similarity(S.values);
  const auto oracle = testing::brute_force_exemplars(S.values, pref);
  CHECK(net_similarity(S.values, a.exemplar_of, pref) == doctest::Approx(oracle.net).epsilon(1e-12));
}

TEST_CASE("AP is deterministic and permutation-equivariant") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd X = testing::two_triads();
  const auto S = cosine_similarity_matrix(X);
  CHECK(affinity_propagation(S) == affinity_propagation(S));

  std::vector<Eigen::Index> perm{4, 0, 5, 2, 1, 3};
  Eigen::MatrixXd Y(6, 2);
  for (Eigen::Index i = 0; i < 6; ++i) Y.row(i) = X.row(perm[static_cast<std::size_t>(i)]);
  const auto a = affinity_propagation(S);
  const auto b = affinity_propagation(cosine_similarity_matrix(Y));
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 6; ++j) {
      const bool same_a = a.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] ==
                          a.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
      const bool same_b = b.labels[static_cast<std::size_t>(i)] == b.labels[static_cast<std::size_t>(j)];
      CHECK(same_a == same_b);
    }
}

TEST_CASE("AP fixed preference controls the cluster count") {
  const auto S = cosine_similarity_matrix(testing::two_triads());
  APParams many;
  many.preference = FixedPreference{10.0};
  CHECK(affinity_propagation(S, many).n_clusters == 6);
  APParams few;
  few.preference = FixedPreference{-10.0};
  CHECK(affinity_propagation(S, few).n_clusters == 1);
}

TEST_CASE("AP validates its inputs") {
  APParams bad;
  bad.damping = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  AffinityMatrix<double> asym{Eigen::MatrixXd::Identity(3, 3), AffinityKind::cosine_similarity, {}};
  asym.values(0, 1) = 0.5;
  CHECK_THROWS_AS(affinity_propagation(asym), Error);
  AffinityMatrix<double> one{Eigen::MatrixXd::Identity(1, 1), AffinityKind::cosine_similarity, {}};
  CHECK_THROWS_AS(affinity_propagation(one), Error);
}

TEST_CASE("property: AP exemplars own their clusters and labels are dense") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd X = testing::random_matrix(15, 3, rng);
    const auto a = affinity_propagation(cosine_similarity_matrix(X));
    check_dense(a);
    REQUIRE(static_cast<int>(a.exemplar_of.size()) == a.n_clusters);
    for (int c = 0; c < a.n_clusters; ++c) CHECK(a.labels[static_cast<std::size_t>(a.exemplar_of[c])] == c);
  }
}

TEST_CASE("k-means recovers the triads in every run") {
  const auto X = testing::two_triads();
  KMeansParams params;
  params.k = 2;
  params.seed = 17;
  const auto runs = kmeans(X, params);
  REQUIRE(runs.size() == 10);
  // Within-triad squared deviations: 0 + 0.02^2 + 0.02^2 per triad.
  const double oracle = 2 * (0.0004 + 0.0004);
  for (const auto& run : runs) {
    CHECK(partition_of(run.assignment) == std::set<std::vector<Eigen::Index>>{{0, 1, 2}, {3, 4, 5}});
    CHECK(run.inertia == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("k-means degenerate and error cases") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd X = testing::random_matrix(7, 3, rng);
  KMeansParams params;
  params.k = 7;
  params.n_runs = 3;
  for (const auto& run : kmeans(X, params)) {
    CHECK(run.inertia == doctest::Approx(0.0));
    CHECK(run.assignment.n_clusters == 7);
  }
  params.k = 8;
  CHECK_THROWS_AS(kmeans(X, params), Error);
}

TEST_CASE("k-means is deterministic under a seed and inertia never rises") {
  std::mt19937_64 rng(12);
  const Eigen::MatrixXd X = testing::random_matrix(60, 4, rng);
  KMeansParams params;
  params.k = 5;
  params.seed = 99;
  const auto a = kmeans(X, params);
  const auto b = kmeans(X, params);
  REQUIRE(a.size() == b.size());
  std::set<std::uint64_t> seeds;
  for (std::size_t r = 0; r < a.size(); ++r) {
    CHECK(a[r].assignment == b[r].assignment);
    CHECK(a[r].inertia == b[r].inertia);
    seeds.insert(a[r].seed);
    check_dense(a[r].assignment);
    CHECK(a[r].assignment.n_clusters == 5);
    const auto& h = a[r].inertia_history;
    for (std::size_t t = 1; t < h.size(); ++t) CHECK(h[t] <= h[t - 1] + 1e-12);
  }
  CHECK(seeds.size() == a.size());
}

TEST_CASE("KL2 distance") {
  const auto a = gauss({0}, {1}, 1);
  const auto b = gauss({1}, {1}, 1);
  CHECK(kl2_distance(a, a) == doctest::Approx(0.0));
  CHECK(kl2_distance(a, b) == doctest::Approx(1.0));
  const auto c = gauss({0.3, -1}, {2, 0.5}, 1);
  const auto d = gauss({1, 2}, {0.7, 3}, 1);
  CHECK(kl2_distance(c, d) == doctest::Approx(kl2_distance(d, c)));
  // Closed form per dimension: (va/vb + vb/va - 2 + dm^2 (1/va + 1/vb)) / 2.
  double oracle = 0;
  for (int k = 0; k < 2; ++k) {
    const double va = c.variance(k), vb = d.variance(k), dm = c.mean(k) - d.mean(k);
    oracle += 0.5 * (va / vb + vb / va - 2 + dm * dm * (1 / va + 1 / vb));
  }
  CHECK(kl2_distance(c, d) == doctest::Approx(oracle));
}

TEST_CASE("delta BIC") {
  const auto a = gauss({0, 0}, {0.5, 0.2}, 3);
  const auto merged_same = gauss({0, 0}, {0.5, 0.2}, 6);
  CHECK(delta_bic(a, a, merged_same, 6, 1.0) > 0);
  CHECK(delta_bic(a, a, merged_same, 6, 1.0) == doctest::Approx(1.0 * 4 * std::log(6.0)));

  // Two singleton-seeded points 10 apart with singleton std 0.1.
  const double sv = 0.01;
  Eigen::MatrixXd X(2, 2);
  X << 0, 0, 10, 0;
  const auto p = gauss({0, 0}, {sv, sv}, 1);
  const auto q = gauss({10, 0}, {sv, sv}, 1);
  const auto m = empirical_stats(X, {0, 1}, sv, 1e-6);
  CHECK(m.variance(0) == doctest::Approx(25.0));
  CHECK(m.variance(1) == doctest::Approx(sv));
  const double oracle = std::log(sv * sv) * 2 - 2 * std::log(25.0 * sv) + 4 * std::log(2.0);
  CHECK(delta_bic(p, q, m, 2, 1.0) == doctest::Approx(oracle));
  CHECK(delta_bic(p, q, m, 2, 1.0) < 0);
  CHECK(delta_bic(p, q, m, 2, 1e-9) < delta_bic(p, q, m, 2, 1.0));
}

TEST_CASE("locked hierarchical keeps plants whole and classes pure") {
  SyntheticSpec spec;
  spec.n_classes = 4;
  spec.plants_per_class = 3;
  spec.images_per_plant_min = spec.images_per_plant_max = 3;
  spec.d = 8;
  spec.class_separation = 10;
  spec.within_class_spread = 0.01;
  spec.within_plant_spread = 0.01;
  spec.seed = 1;
  auto ds = generate_synthetic(spec);
  for (auto& s : ds.samples) s.split = Split::train;
  ds = make_dataset(ds.samples);
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto X = ds.features(all);
  const auto plants = ds.plant_ids(all);
  const auto labels = ds.label_indices(all);
  HierParams params;
  params.singleton_std = FixedStd{0.05};
  const auto result = locked_hierarchical_full(X, plants, params);
  const auto& a = result.assignment;
  CHECK(a.n_clusters < 12);
  check_dense(a);
  std::map<std::string, int> plant_cluster;
  std::map<int, std::set<int>> cluster_classes;
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto [it, fresh] = plant_cluster.emplace(plants[i], a.labels[i]);
    CHECK(it->second == a.labels[i]);
    cluster_classes[a.labels[i]].insert(labels[i]);
  }
  for (const auto& [c, classes] : cluster_classes) CHECK(classes.size() == 1);
  CHECK(result.stats.size() == static_cast<std::size_t>(a.n_clusters));
}

TEST_CASE("locked hierarchical two-sample and identical-sample cases") {
  Eigen::MatrixXd far(2, 2);
  far << 0, 0, 10, 0;
  HierParams tight;
  tight.singleton_std = FixedStd{0.1};
  CHECK(locked_hierarchical(far, {"p0", "p1"}, tight).n_clusters == 2);

  const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(5, 3, 0.4);
  CHECK(locked_hierarchical(same, {"a", "b", "c", "d", "e"}).n_clusters == 1);
}

TEST_CASE("locked hierarchical is deterministic") {
  const auto ds = generate_synthetic(testing::separated_spec(3, 8));
  const auto train = ds.indices(Split::train);
  const auto X = ds.features(train);
  const auto plants = ds.plant_ids(train);
  CHECK(locked_hierarchical(X, plants) == locked_hierarchical(X, plants));
}

TEST_CASE("property: locked hierarchical never splits a plant") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto spec = testing::separated_spec(seed, 6);
    spec.class_separation = 1.0;
    const auto ds = generate_synthetic(spec);
    const auto train = ds.indices(Split::train);
    const auto plants = ds.plant_ids(train);
    const auto a = locked_hierarchical(ds.features(train), plants);
    std::map<std::string, int> seen;
    for (std::size_t i = 0; i < plants.size(); ++i) {
      auto [it, fresh] = seen.emplace(plants[i], a.labels[i]);
      CHECK(it->second == a.labels[i]);
    }
  }
}

TEST_CASE("mix_seed spreads streams") {
  std::set<std::uint64_t> out;
  for (std::uint64_t s = 0; s < 100; ++s) out.insert(mix_seed(42, s));
  CHECK(out.size() == 100);
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
}
