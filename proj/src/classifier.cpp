#include "scoutlabel/classifier.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "scoutlabel/error.hpp"
#include "scoutlabel/labelling.hpp"

namespace scoutlabel {

void TrainConfig::validate() const {
  require(learning_rate > 0, ErrorCode::invalid_argument, "learning_rate must be positive");
  require(l2_penalty >= 0, ErrorCode::invalid_argument, "l2_penalty must be nonnegative");
  require(epochs >= 1, ErrorCode::invalid_argument, "epochs must be >= 1");
}

Eigen::MatrixXd predict_logits(const SoftmaxModel& model, const Eigen::MatrixXd& X) {
  require(X.cols() == model.dim(), ErrorCode::dimension_mismatch,
          "model expects " + std::to_string(model.dim()) + " features, got " + std::to_string(X.cols()));
  return (X * model.weights.transpose()).rowwise() + model.bias.transpose();
}

namespace {

Eigen::MatrixXd softmax_rows(Eigen::MatrixXd logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    logits.row(i).array() -= logits.row(i).maxCoeff();
    logits.row(i) = logits.row(i).array().exp().matrix();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

}  // namespace

Eigen::MatrixXd predict_scores(const SoftmaxModel& model, const Eigen::MatrixXd& X) {
  return softmax_rows(predict_logits(model, X));
}

double softmax_loss(const SoftmaxModel& model, const Eigen::MatrixXd& X, const std::vector<int>& labels,
                    double l2_penalty) {
  const Eigen::MatrixXd logits = predict_logits(model, X);
  double total = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    total += lse - logits(i, labels[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<double>(logits.rows()) + 0.5 * l2_penalty * model.weights.squaredNorm();
}

SoftmaxModel train_softmax(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                           std::vector<std::string> class_names, const TrainConfig& config,
                           std::vector<double>* loss_history) {
  config.validate();
  const auto c = static_cast<Eigen::Index>(class_names.size());
  require(X.rows() == static_cast<Eigen::Index>(labels.size()) && X.rows() > 0, ErrorCode::invalid_argument,
          "training needs one label per sample");
  std::set<int> distinct(labels.begin(), labels.end());
  for (int l : distinct) require(l >= 0 && l < c, ErrorCode::invalid_argument, "training label outside class list");
  require(distinct.size() >= 2, ErrorCode::single_class, "a classifier needs at least two distinct training labels");

  SoftmaxModel model;
  model.class_names = std::move(class_names);
  model.weights = Eigen::MatrixXd::Zero(c, X.cols());
  model.bias = Eigen::VectorXd::Zero(c);

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(X.rows(), c);
  for (Eigen::Index i = 0; i < X.rows(); ++i) onehot(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  const double inv_n = 1.0 / static_cast<double>(X.rows());

  double previous = softmax_loss(model, X, labels, config.l2_penalty);
  if (loss_history) loss_history->push_back(previous);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Eigen::MatrixXd residual = (predict_scores(model, X) - onehot) * inv_n;
    model.weights -= config.learning_rate * (residual.transpose() * X + config.l2_penalty * model.weights);
    model.bias -= config.learning_rate * residual.colwise().sum().transpose();
    const double loss = softmax_loss(model, X, labels, config.l2_penalty);
    if (loss_history) loss_history->push_back(loss);
    if (std::abs(previous - loss) < config.tolerance) break;
    previous = loss;
  }
  return model;
}

PlantPredictions classify_plants(const Eigen::MatrixXd& scores, const std::vector<std::string>& plant_ids) {
  require(static_cast<Eigen::Index>(plant_ids.size()) == scores.rows(), ErrorCode::invalid_argument,
          "one plant id per scored image is required");
  PlantPredictions out;
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<Eigen::RowVectorXd> sums;
  out.image_class.resize(plant_ids.size());
  for (std::size_t i = 0; i < plant_ids.size(); ++i) {
    const auto row = scores.row(static_cast<Eigen::Index>(i));
    out.image_class[i] = argmax_row(row);
    auto [it, inserted] = slot.emplace(plant_ids[i], sums.size());
    if (inserted) {
      out.plants.push_back(plant_ids[i]);
      sums.push_back(row);
    } else {
      sums[it->second] += row;
    }
  }
  out.plant_class.reserve(sums.size());
  for (const auto& s : sums) out.plant_class.push_back(argmax_row(s));
  out.image_plant_class.reserve(plant_ids.size());
  for (const auto& p : plant_ids) out.image_plant_class.push_back(out.plant_class[slot.at(p)]);
  return out;
}

PlantPredictions classify_plants(const SoftmaxModel& model, const Eigen::MatrixXd& X,
                                 const std::vector<std::string>& plant_ids, ScoreMode mode) {
  return classify_plants(mode == ScoreMode::logit ? predict_logits(model, X) : predict_scores(model, X), plant_ids);
}

std::string model_to_json(const SoftmaxModel& model) {
  nlohmann::json j;
  j["class_names"] = model.class_names;
  j["rows"] = model.weights.rows();
  j["cols"] = model.weights.cols();
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(model.weights.size()));
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < model.weights.cols(); ++c) w.push_back(model.weights(r, c));
  j["weights"] = w;
  j["bias"] = std::vector<double>(model.bias.data(), model.bias.data() + model.bias.size());
  return j.dump();
}

SoftmaxModel model_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    SoftmaxModel m;
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto w = j.at("weights").get<std::vector<double>>();
    const auto b = j.at("bias").get<std::vector<double>>();
    require(static_cast<Eigen::Index>(w.size()) == rows * cols && static_cast<Eigen::Index>(b.size()) == rows &&
                static_cast<Eigen::Index>(m.class_names.size()) == rows,
            ErrorCode::parse, "model JSON has inconsistent shapes");
    m.weights.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
    m.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("model JSON: ") + e.what());
  }
}

void save_model(const SoftmaxModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::io, "cannot write \"" + path.string() + "\"");
  out << model_to_json(model) << '\n';
}

SoftmaxModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open \"" + path.string() + "\"");
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace scoutlabel
