#include <filesystem>
#include <map>
#include <numeric>

#include "doctest.h"
#include "scoutlabel/classifier.hpp"
#include "scoutlabel/error.hpp"
#include "support.hpp"

using namespace scoutlabel;

namespace {

struct Blobs {
  Eigen::MatrixXd X;
  std::vector<int> y;
};

Blobs two_blobs(std::uint64_t seed, int per_class = 20) {
  std::mt19937_64 rng(seed);
  Blobs b;
  b.X = testing::random_matrix(2 * per_class, 2, rng) * 0.3;
  for (int i = 0; i < 2 * per_class; ++i) {
    const int c = i < per_class ? 0 : 1;
    b.X(i, 0) += c == 0 ? -2.0 : 2.0;
    b.X(i, 1) += c == 0 ? 1.0 : -1.0;
    b.y.push_back(c);
  }
  return b;
}

// Independent separability witness: the perceptron converges on separable data.
bool perceptron_separable(const Eigen::MatrixXd& X, const std::vector<int>& y) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(X.cols() + 1);
  for (int epoch = 0; epoch < 1000; ++epoch) {
    int mistakes = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double t = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
      const double s = X.row(i).dot(w.head(X.cols())) + w(X.cols());
      if (t * s <= 0) {
        w.head(X.cols()) += t * X.row(i).transpose();
        w(X.cols()) += t;
        ++mistakes;
      }
    }
    if (mistakes == 0) return true;
  }
  return false;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& P) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    Eigen::Index c = 0;
    P.row(i).maxCoeff(&c);
    out.push_back(static_cast<int>(c));
  }
  return out;
}

}  // namespace

TEST_CASE("separable blobs are fit exactly") {
  const auto b = two_blobs(1);
  REQUIRE(perceptron_separable(b.X, b.y));
  std::vector<double> history;
  const auto model = train_softmax(b.X, b.y, {"a", "b"}, TrainConfig{}, &history);
  CHECK(argmax_rows(predict_scores(model, b.X)) == b.y);
  REQUIRE(history.size() >= 2);
  CHECK(history.front() == doctest::Approx(std::log(2.0)));
  for (std::size_t t = 1; t < history.size(); ++t) CHECK(history[t] <= history[t - 1] + 1e-12);
}

TEST_CASE("duplicating the training set leaves predictions unchanged") {
  const auto b = two_blobs(2);
  Eigen::MatrixXd X2(2 * b.X.rows(), b.X.cols());
  X2 << b.X, b.X;
  std::vector<int> y2 = b.y;
  y2.insert(y2.end(), b.y.begin(), b.y.end());
  const auto m1 = train_softmax(b.X, b.y, {"a", "b"});
  const auto m2 = train_softmax(X2, y2, {"a", "b"});
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd probe = testing::random_matrix(50, 2, rng) * 3;
  CHECK(argmax_rows(predict_scores(m1, probe)) == argmax_rows(predict_scores(m2, probe)));
  CHECK((m1.weights - m2.weights).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("training preconditions") {
  Eigen::MatrixXd X(3, 2);
  X << 1, 0, 0, 1, 1, 1;
  try {
    train_softmax(X, {1, 1, 1}, {"a", "b"});
    FAIL("expected single_class");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::single_class);
  }
  CHECK_THROWS_AS(train_softmax(X, {0, 1}, {"a", "b"}), Error);
  CHECK_THROWS_AS(train_softmax(X, {0, 1, 2}, {"a", "b"}), Error);
  TrainConfig bad;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(train_softmax(X, {0, 1, 0}, {"a", "b"}, bad), Error);
}

TEST_CASE("zero model scores uniformly and rows sum to one") {
  SoftmaxModel zero;
  zero.weights = Eigen::MatrixXd::Zero(4, 3);
  zero.bias = Eigen::VectorXd::Zero(4);
  zero.class_names = {"a", "b", "c", "d"};
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd X = testing::random_matrix(10, 3, rng);
  const auto P = predict_scores(zero, X);
  CHECK((P.array() - 0.25).abs().maxCoeff() < 1e-12);

  const auto b = two_blobs(3);
  const auto model = train_softmax(b.X, b.y, {"a", "b"});
  const auto Q = predict_scores(model, testing::random_matrix(25, 2, rng) * 10);
  CHECK((Q.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
  CHECK_THROWS_AS(predict_scores(model, X), Error);
}

TEST_CASE("plant scores are summed, not voted") {
  Eigen::MatrixXd two(2, 2);
  two << 0.6, 0.4, 0.3, 0.7;
  const auto a = classify_plants(two, {"p", "p"});
  CHECK(a.plant_class == std::vector<int>{1});
  CHECK(a.image_class == std::vector<int>{0, 1});
  CHECK(a.image_plant_class == std::vector<int>{1, 1});

  Eigen::MatrixXd three(3, 2);
  three << 0.55, 0.45, 0.55, 0.45, 0.0, 0.3;
  // Sums (1.1, 1.2): two weak votes for class 0 lose to one strong image for class 1.
  const auto b = classify_plants(three, {"p", "p", "p"});
  CHECK(b.plant_class == std::vector<int>{1});

  Eigen::MatrixXd single(1, 3);
  single << 0.1, 0.7, 0.2;
  const auto c = classify_plants(single, {"solo"});
  CHECK(c.plant_class == c.image_class);
}

TEST_CASE("property: plant decisions ignore image order") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> plant(0, 5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd scores = testing::random_matrix(20, 3, rng).array().abs();
    std::vector<std::string> ids(20);
    for (auto& id : ids) id = "p" + std::to_string(plant(rng));
    std::vector<Eigen::Index> perm(20);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd shuffled(20, 3);
    std::vector<std::string> shuffled_ids(20);
    for (Eigen::Index i = 0; i < 20; ++i) {
      shuffled.row(i) = scores.row(perm[static_cast<std::size_t>(i)]);
      shuffled_ids[static_cast<std::size_t>(i)] = ids[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    const auto a = classify_plants(scores, ids);
    const auto b = classify_plants(shuffled, shuffled_ids);
    std::map<std::string, int> by_plant;
    for (std::size_t p = 0; p < a.plants.size(); ++p) by_plant[a.plants[p]] = a.plant_class[p];
    for (std::size_t p = 0; p < b.plants.size(); ++p) CHECK(by_plant.at(b.plants[p]) == b.plant_class[p]);
  }
}

TEST_CASE("model JSON round trip") {
  const auto b = two_blobs(4);
  const auto model = train_softmax(b.X, b.y, {"a", "b"});
  const auto back = model_from_json(model_to_json(model));
  CHECK(back.class_names == model.class_names);
  CHECK(back.weights == model.weights);
  CHECK(back.bias == model.bias);

  const auto path = std::filesystem::temp_directory_path() / "scoutlabel_model.json";
  save_model(model, path);
  CHECK(load_model(path).weights == model.weights);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(model_from_json("{\"rows\": 2}"), Error);
}

TEST_CASE("logit scoring mode") {
  const auto b = two_blobs(6);
  const auto model = train_softmax(b.X, b.y, {"a", "b"});
  std::vector<std::string> ids;
  for (int i = 0; i < b.X.rows(); ++i) ids.push_back("p" + std::to_string(i));
  const auto p = classify_plants(model, b.X, ids, ScoreMode::probability);
  const auto l = classify_plants(model, b.X, ids, ScoreMode::logit);
  CHECK(p.plant_class == l.plant_class);
}
