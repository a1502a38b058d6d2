#include "scoutlabel/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include "json.hpp"

namespace scoutlabel {

namespace {

constexpr StrategyName kAllStrategies[] = {StrategyName::Full, StrategyName::KMeans, StrategyName::Mean,
                                           StrategyName::AP_Refine, StrategyName::AP, StrategyName::LP,
                                           StrategyName::LLP, StrategyName::APLP, StrategyName::APLLP};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string_view to_string(StrategyName name) {
  switch (name) {
    case StrategyName::Full: return "Full";
    case StrategyName::KMeans: return "KMeans";
    case StrategyName::Mean: return "Mean";
    case StrategyName::AP_Refine: return "AP-Refine";
    case StrategyName::AP: return "AP";
    case StrategyName::LP: return "LP";
    case StrategyName::LLP: return "LLP";
    case StrategyName::APLP: return "APLP";
    case StrategyName::APLLP: return "APLLP";
  }
  return "?";
}

StrategyName parse_strategy(std::string_view text) {
  for (auto s : kAllStrategies)
    if (to_string(s) == text) return s;
  if (text == "AP_Refine") return StrategyName::AP_Refine;
  throw Error(ErrorCode::invalid_argument, "unknown strategy \"" + std::string(text) + "\"");
}

bool has_auto_budget(StrategyName name) {
  return name != StrategyName::KMeans && name != StrategyName::LP && name != StrategyName::LLP;
}

bool is_randomised(StrategyName name) {
  return name == StrategyName::KMeans || name == StrategyName::LP || name == StrategyName::LLP;
}

std::string Budget::label() const {
  switch (kind) {
    case Kind::automatic: return "auto";
    case Kind::match: return "match:" + std::string(to_string(match));
    case Kind::percent: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g%%", percent);
      return buf;
    }
  }
  return "?";
}

Budget Budget::parse(std::string_view text) {
  if (text == "auto") return automatic_budget();
  if (text.starts_with("match:")) return matching(parse_strategy(text.substr(6)));
  std::string s(text);
  if (!s.empty() && s.back() == '%') s.pop_back();
  try {
    std::size_t used = 0;
    const double p = std::stod(s, &used);
    if (used == s.size()) return of_percent(p);
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::budget_mismatch, "unrecognised budget \"" + std::string(text) + "\"");
}

int StrategySpec::effective_repetitions() const {
  if (repetitions > 0) return repetitions;
  return is_randomised(name) ? 10 : 1;
}

void StrategySpec::validate() const {
  const std::string who(to_string(name));
  if (has_auto_budget(name)) {
    require(budget.kind == Budget::Kind::automatic, ErrorCode::budget_mismatch,
            who + " selects its own exemplars and takes no budget");
    require(effective_repetitions() == 1, ErrorCode::budget_mismatch, who + " is deterministic; use one repetition");
  } else {
    require(budget.kind != Budget::Kind::automatic, ErrorCode::budget_mismatch,
            who + " requires a predefined exemplar budget");
    if (budget.kind == Budget::Kind::percent)
      require(budget.percent > 0 && budget.percent <= 100, ErrorCode::budget_mismatch,
              who + " budget must lie in (0, 100] percent");
    if (budget.kind == Budget::Kind::match)
      require(has_auto_budget(budget.match) && budget.match != StrategyName::Full, ErrorCode::budget_mismatch,
              who + " can only match the exemplar count of a clustering-determined strategy");
  }
}

Eigen::Index budget_count(double percent, Eigen::Index n_train) {
  const auto k = static_cast<Eigen::Index>(std::llround(percent * static_cast<double>(n_train) / 100.0));
  return std::clamp<Eigen::Index>(k, 1, n_train);
}

Eigen::MatrixXi confusion_matrix(const std::vector<int>& truth, const std::vector<int>& predicted, int n_classes) {
  require(truth.size() == predicted.size(), ErrorCode::invalid_argument, "confusion inputs differ in length");
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(n_classes, n_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) ++m(truth[i], predicted[i]);
  return m;
}

std::vector<double> per_class_tpr(const Eigen::MatrixXi& confusion) {
  std::vector<double> out;
  for (Eigen::Index c = 0; c < confusion.rows(); ++c) {
    const int total = confusion.row(c).sum();
    out.push_back(total == 0 ? kNaN : 100.0 * confusion(c, c) / total);
  }
  return out;
}

CellMetrics compute_metrics(const Dataset& ds, const LabelAssignment& labels, const PlantPredictions* predictions) {
  const auto train = ds.indices(Split::train);
  const auto truth = ds.label_indices(train);
  require(labels.labels.size() == truth.size(), ErrorCode::invalid_argument,
          "label assignment does not cover the training split");
  CellMetrics m;
  const auto n_train = static_cast<double>(truth.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += labels.labels[i] == truth[i];
  m.labelling_accuracy = 100.0 * static_cast<double>(correct) / n_train;
  m.n_exemplars = static_cast<double>(labels.labelled_indices.size());
  m.percent_labelled = 100.0 * m.n_exemplars / n_train;
  m.reduction_factor = 100.0 / m.percent_labelled;

  const int c = static_cast<int>(ds.class_names.size());
  m.classification_accuracy_plant = kNaN;
  m.classification_accuracy_image = kNaN;
  m.per_class_tpr.assign(static_cast<std::size_t>(c), kNaN);
  const auto test = ds.indices(Split::test);
  if (predictions == nullptr || test.empty()) return m;

  const auto test_truth = ds.label_indices(test);
  require(predictions->image_class.size() == test.size(), ErrorCode::invalid_argument,
          "predictions do not cover the test split");
  std::size_t image_correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) image_correct += predictions->image_class[i] == test_truth[i];
  m.classification_accuracy_image = 100.0 * static_cast<double>(image_correct) / static_cast<double>(test.size());

  std::unordered_map<std::string, int> plant_truth;
  for (std::size_t i = 0; i < test.size(); ++i) plant_truth.emplace(ds.samples[test[i]].plant_id, test_truth[i]);
  std::vector<int> truth_per_plant;
  truth_per_plant.reserve(predictions->plants.size());
  for (const auto& p : predictions->plants) truth_per_plant.push_back(plant_truth.at(p));
  const auto confusion = confusion_matrix(truth_per_plant, predictions->plant_class, c);
  m.classification_accuracy_plant = 100.0 * confusion.trace() / static_cast<double>(truth_per_plant.size());
  m.per_class_tpr = per_class_tpr(confusion);
  return m;
}

namespace {

struct TrainView {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  Eigen::MatrixXd X;
  Eigen::MatrixXd X_test;
  std::vector<int> truth;
  std::vector<std::string> plants;
  std::vector<std::string> test_plants;
  bool multi_image = false;
  int n_classes = 0;

  explicit TrainView(const Dataset& ds)
      : train(ds.indices(Split::train)),
        test(ds.indices(Split::test)),
        X(ds.features(train)),
        X_test(ds.features(test)),
        truth(ds.label_indices(train)),
        plants(ds.plant_ids(train)),
        test_plants(ds.plant_ids(test)),
        n_classes(static_cast<int>(ds.class_names.size())) {
    std::set<std::string> seen;
    for (const auto& p : plants)
      if (!seen.insert(p).second) multi_image = true;
  }
};

ClusterAssignment run_ap(const TrainView& v, const PipelineConfig& config) {
  return affinity_propagation(cosine_similarity_matrix(v.X), config.ap);
}

// Seed matrix Y for the labeller's answers on `exemplars`.
Eigen::MatrixXd seed_matrix(const TrainView& v, const ExemplarSet& exemplars, const Labeller& labeller,
                            std::vector<int>& given) {
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(v.X.rows(), v.n_classes);
  for (auto e : exemplars.indices) {
    const int label = labeller.label(e);
    Y(e, label) = 1.0;
    given.push_back(label);
  }
  return Y;
}

LabelAssignment propagate_with(const Eigen::MatrixXd& S, const TrainView& v, const ExemplarSet& exemplars,
                               const Labeller& labeller, LPParams params, bool locked) {
  params.locked = locked;
  std::vector<int> given;
  const Eigen::MatrixXd Y = seed_matrix(v, exemplars, labeller, given);
  auto out = propagate_on_graph(S, Y, exemplars.indices, params);
  out.given_labels = std::move(given);
  return out;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0;
  std::size_t k = 0;
  for (double x : xs)
    if (!std::isnan(x)) {
      s += x;
      ++k;
    }
  return k == 0 ? kNaN : s / static_cast<double>(k);
}

double std_of(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  double s = 0;
  std::size_t k = 0;
  for (double x : xs)
    if (!std::isnan(x)) {
      s += (x - m) * (x - m);
      ++k;
    }
  if (k == 0) return kNaN;
  return k < 2 ? 0.0 : std::sqrt(s / static_cast<double>(k - 1));
}

void aggregate(StrategyResult& r) {
  auto field = [&](auto getter) {
    std::vector<double> xs;
    for (const auto& rep : r.repetitions) xs.push_back(getter(rep));
    return std::pair{mean_of(xs), std_of(xs)};
  };
#define SCOUT_AGG(member)                                                           \
  std::tie(r.mean.member, r.stddev.member) =                                        \
      field([](const RepetitionResult& rep) { return static_cast<double>(rep.metrics.member); })
  SCOUT_AGG(percent_labelled);
  SCOUT_AGG(labelling_accuracy);
  SCOUT_AGG(classification_accuracy_plant);
  SCOUT_AGG(classification_accuracy_image);
  SCOUT_AGG(reduction_factor);
  SCOUT_AGG(n_exemplars);
  SCOUT_AGG(n_clusters);
#undef SCOUT_AGG
  const std::size_t c = r.repetitions.empty() ? 0 : r.repetitions.front().metrics.per_class_tpr.size();
  r.mean.per_class_tpr.assign(c, kNaN);
  r.stddev.per_class_tpr.assign(c, kNaN);
  for (std::size_t k = 0; k < c; ++k) {
    std::tie(r.mean.per_class_tpr[k], r.stddev.per_class_tpr[k]) =
        field([k](const RepetitionResult& rep) { return rep.metrics.per_class_tpr[k]; });
  }
}

}  // namespace

Eigen::Index auto_exemplar_count(const Dataset& ds, StrategyName name, const PipelineConfig& config) {
  require(has_auto_budget(name) && name != StrategyName::Full, ErrorCode::budget_mismatch,
          std::string(to_string(name)) + " has no clustering-determined exemplar count");
  const TrainView v(ds);
  switch (name) {
    case StrategyName::Mean:
      return locked_hierarchical(v.X, v.plants, config.hier).n_clusters;
    case StrategyName::AP_Refine: {
      const auto hier = locked_hierarchical(v.X, v.plants, config.hier);
      return static_cast<Eigen::Index>(ap_refine_exemplars(v.X, hier, config.ap).exemplars.size());
    }
    default:
      return run_ap(v, config).n_clusters;
  }
}

namespace {

// Exemplars (and the clustering they label) for one repetition of a strategy.
struct Selection {
  ClusterAssignment clusters;
  ExemplarSet exemplars;
  bool propagate = false;
  bool locked = false;
  bool full = false;
  int n_clusters = 0;
  bool converged = true;
  std::uint64_t seed = 0;
};

Eigen::Index resolve_count(const Dataset& ds, const StrategySpec& spec, const PipelineConfig& config, Eigen::Index n,
                           std::optional<Eigen::Index> matched_count) {
  if (spec.budget.kind == Budget::Kind::percent) return budget_count(spec.budget.percent, n);
  if (spec.budget.kind == Budget::Kind::match) {
    const auto k = matched_count ? *matched_count : auto_exemplar_count(ds, spec.budget.match, config);
    return std::clamp<Eigen::Index>(k, 1, n);
  }
  return 0;
}

std::vector<Selection> select_all(const TrainView& v, const StrategySpec& spec, const PipelineConfig& config,
                                  Eigen::Index count, int reps) {
  std::vector<Selection> out;
  const auto n = v.X.rows();
  switch (spec.name) {
    case StrategyName::Full: {
      Selection s;
      s.full = true;
      s.exemplars.indices.resize(static_cast<std::size_t>(n));
      std::iota(s.exemplars.indices.begin(), s.exemplars.indices.end(), Eigen::Index{0});
      s.seed = spec.seed;
      out.push_back(std::move(s));
      break;
    }
    case StrategyName::KMeans: {
      KMeansParams params;
      params.k = static_cast<int>(count);
      params.n_runs = reps;
      params.max_iterations = config.kmeans_max_iterations;
      params.tolerance = config.kmeans_tolerance;
      params.seed = spec.seed;
      for (auto& run : kmeans(v.X, params)) {
        Selection s;
        s.exemplars = mean_exemplars(v.X, run.assignment);
        s.n_clusters = run.assignment.n_clusters;
        s.converged = run.assignment.converged;
        s.seed = run.seed;
        s.clusters = std::move(run.assignment);
        out.push_back(std::move(s));
      }
      break;
    }
    case StrategyName::Mean:
    case StrategyName::AP_Refine: {
      Selection s;
      auto hier = locked_hierarchical(v.X, v.plants, config.hier);
      s.n_clusters = hier.n_clusters;
      s.seed = spec.seed;
      if (spec.name == StrategyName::Mean) {
        s.exemplars = mean_exemplars(v.X, hier);
        s.clusters = std::move(hier);
      } else {
        auto refined = ap_refine_exemplars(v.X, hier, config.ap);
        s.exemplars = std::move(refined.exemplars);
        s.converged = refined.subclusters.converged;
        s.clusters = std::move(refined.subclusters);
      }
      out.push_back(std::move(s));
      break;
    }
    case StrategyName::AP:
    case StrategyName::APLP:
    case StrategyName::APLLP: {
      Selection s;
      s.clusters = run_ap(v, config);
      s.exemplars = ap_exemplars(s.clusters);
      s.n_clusters = s.clusters.n_clusters;
      s.converged = s.clusters.converged;
      s.propagate = spec.name != StrategyName::AP;
      s.locked = spec.name == StrategyName::APLLP;
      s.seed = spec.seed;
      out.push_back(std::move(s));
      break;
    }
    case StrategyName::LP:
    case StrategyName::LLP: {
      for (int r = 0; r < reps; ++r) {
        Selection s;
        s.seed = mix_seed(spec.seed, static_cast<std::uint64_t>(r));
        s.exemplars = random_exemplars(n, count, s.seed);
        s.propagate = true;
        s.locked = spec.name == StrategyName::LLP;
        out.push_back(std::move(s));
      }
      break;
    }
  }
  return out;
}

LabelAssignment label_selection(const TrainView& v, const Selection& s, const Labeller& labeller,
                                const PipelineConfig& config, const Eigen::MatrixXd* propagation_graph) {
  if (s.full) {
    LabelAssignment raw;
    const auto n = v.X.rows();
    raw.labels.resize(static_cast<std::size_t>(n));
    raw.confidence = Eigen::MatrixXd::Zero(n, v.n_classes);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int label = labeller.label(i);
      raw.labels[static_cast<std::size_t>(i)] = label;
      raw.confidence(i, label) = 1.0;
    }
    raw.labelled_indices = s.exemplars.indices;
    raw.given_labels = raw.labels;
    return raw;
  }
  if (s.propagate) return propagate_with(*propagation_graph, v, s.exemplars, labeller, config.lp, s.locked);
  return assign_cluster_labels(s.clusters, s.exemplars, labeller, v.n_classes);
}

RepetitionResult finish_repetition(const Dataset& ds, const TrainView& v, const Selection& s, LabelAssignment raw,
                                   const PipelineConfig& config) {
  RepetitionResult rep;
  rep.seed = s.seed;
  rep.n_clusters = s.n_clusters;
  rep.converged = s.converged && raw.converged;
  rep.labels = v.multi_image ? majority_vote(raw, v.plants) : raw;
  rep.raw = std::move(raw);
  std::set<int> distinct(rep.labels.labels.begin(), rep.labels.labels.end());
  if (distinct.size() >= 2) rep.model = train_softmax(v.X, rep.labels.labels, ds.class_names, config.train);
  if (!v.test.empty()) {
    if (rep.model) {
      rep.test_predictions = classify_plants(*rep.model, v.X_test, v.test_plants, config.score_mode);
    } else {
      // One labelled class: every test image gets that class.
      Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(v.X_test.rows(), v.n_classes);
      scores.col(*distinct.begin()).setOnes();
      rep.test_predictions = classify_plants(scores, v.test_plants);
    }
  }
  rep.metrics = compute_metrics(ds, rep.labels, v.test.empty() ? nullptr : &rep.test_predictions);
  rep.metrics.n_clusters = s.n_clusters;
  return rep;
}

void validate_all(const StrategySpec& spec, const PipelineConfig& config) {
  spec.validate();
  config.ap.validate();
  config.hier.validate();
  config.lp.validate();
  config.train.validate();
}

}  // namespace

StrategyResult run_strategy(const Dataset& ds, const StrategySpec& spec, const PipelineConfig& config,
                            std::optional<Eigen::Index> matched_count) {
  validate_all(spec, config);
  StrategyResult result;
  result.spec = spec;
  const TrainView v(ds);
  result.exemplar_count = resolve_count(ds, spec, config, v.X.rows(), matched_count);
  const Labeller oracle = Labeller::oracle(v.truth);
  const auto selections = select_all(v, spec, config, result.exemplar_count, spec.effective_repetitions());
  std::optional<Eigen::MatrixXd> graph;
  for (const auto& s : selections) {
    if (s.propagate && !graph) graph = normalize_propagation(gaussian_affinity(v.X, config.lp.sigma)).values;
    auto raw = label_selection(v, s, oracle, config, graph ? &*graph : nullptr);
    result.repetitions.push_back(finish_repetition(ds, v, s, std::move(raw), config));
  }
  aggregate(result);
  return result;
}

ExemplarSet plan_exemplars(const Dataset& ds, const StrategySpec& spec, const PipelineConfig& config,
                           std::optional<Eigen::Index> matched_count) {
  validate_all(spec, config);
  const TrainView v(ds);
  const auto count = resolve_count(ds, spec, config, v.X.rows(), matched_count);
  return select_all(v, spec, config, count, 1).front().exemplars;
}

RepetitionResult label_with(const Dataset& ds, const StrategySpec& spec, const PipelineConfig& config,
                            const Labeller& labeller, std::optional<Eigen::Index> matched_count) {
  validate_all(spec, config);
  const TrainView v(ds);
  const auto count = resolve_count(ds, spec, config, v.X.rows(), matched_count);
  const auto selection = select_all(v, spec, config, count, 1).front();
  std::optional<Eigen::MatrixXd> graph;
  if (selection.propagate) graph = normalize_propagation(gaussian_affinity(v.X, config.lp.sigma)).values;
  auto raw = label_selection(v, selection, labeller, config, graph ? &*graph : nullptr);
  return finish_repetition(ds, v, selection, std::move(raw), config);
}

std::uint64_t cell_seed(std::uint64_t master_seed, StrategyName name, const Budget& budget) {
  // FNV-1a over "name|budget".
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::string key = std::string(to_string(name)) + "|" + budget.label();
  for (unsigned char ch : key) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return mix_seed(master_seed, h);
}

ReportRow summarise(const StrategyResult& result) {
  ReportRow row;
  row.test_name = std::string(to_string(result.spec.name));
  row.budget = result.spec.budget.label();
  row.repetitions = static_cast<int>(result.repetitions.size());
  row.mean = result.mean;
  row.stddev = result.stddev;
  return row;
}

namespace {

PipelineConfig pipeline_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  if (j.contains("ap")) {
    const auto& a = j["ap"];
    c.ap.damping = a.value("damping", c.ap.damping);
    c.ap.max_iterations = a.value("max_iterations", c.ap.max_iterations);
    c.ap.convergence_window = a.value("convergence_window", c.ap.convergence_window);
    if (a.contains("preference") && a["preference"].is_number())
      c.ap.preference = FixedPreference{a["preference"].get<double>()};
  }
  if (j.contains("hier")) {
    const auto& h = j["hier"];
    c.hier.bic_lambda = h.value("bic_lambda", c.hier.bic_lambda);
    c.hier.variance_floor = h.value("variance_floor", c.hier.variance_floor);
    if (h.contains("singleton_std") && h["singleton_std"].is_number())
      c.hier.singleton_std = FixedStd{h["singleton_std"].get<double>()};
  }
  if (j.contains("lp")) {
    const auto& l = j["lp"];
    c.lp.alpha = l.value("alpha", c.lp.alpha);
    c.lp.sigma = l.value("sigma", c.lp.sigma);
    c.lp.max_iterations = l.value("max_iterations", c.lp.max_iterations);
    c.lp.tolerance = l.value("tolerance", c.lp.tolerance);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    c.train.l2_penalty = t.value("l2_penalty", c.train.l2_penalty);
    c.train.epochs = t.value("epochs", c.train.epochs);
    c.train.seed = t.value("seed", c.train.seed);
    c.train.tolerance = t.value("tolerance", c.train.tolerance);
  }
  if (j.contains("kmeans")) {
    c.kmeans_max_iterations = j["kmeans"].value("max_iterations", c.kmeans_max_iterations);
    c.kmeans_tolerance = j["kmeans"].value("tolerance", c.kmeans_tolerance);
  }
  if (j.value("score_mode", std::string("probability")) == "logit") c.score_mode = ScoreMode::logit;
  return c;
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view json_text) {
  try {
    return pipeline_from_json(nlohmann::json::parse(json_text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("pipeline config: ") + e.what());
  }
}

MatrixConfig parse_matrix_config(std::string_view json_text) {
  MatrixConfig out;
  try {
    const auto j = nlohmann::json::parse(json_text);
    out.master_seed = j.value("master_seed", out.master_seed);
    out.threads = j.value("threads", out.threads);
    if (j.contains("config")) out.pipeline = pipeline_from_json(j["config"]);
    for (const auto& s : j.at("strategies")) {
      const auto name = parse_strategy(s.at("name").get<std::string>());
      const int reps = s.value("repetitions", 0);
      if (!s.contains("budgets")) {
        out.cells.push_back({name, Budget::automatic_budget(), reps});
        continue;
      }
      for (const auto& b : s["budgets"]) {
        const Budget budget = b.is_number() ? Budget::of_percent(b.get<double>()) : Budget::parse(b.get<std::string>());
        out.cells.push_back({name, budget, reps});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("matrix config: ") + e.what());
  }
  require(!out.cells.empty(), ErrorCode::invalid_argument, "matrix config lists no strategies");
  return out;
}

ExperimentReport run_matrix(const Dataset& ds, const MatrixConfig& config) {
  ExperimentReport report;
  report.class_names = ds.class_names;
  const std::size_t n_cells = config.cells.size();
  report.rows.resize(n_cells);

  // Matched budgets need the automatic count of their target first.
  std::map<StrategyName, Eigen::Index> matched;
  std::map<StrategyName, std::string> matched_error;
  for (const auto& cell : config.cells) {
    if (cell.budget.kind != Budget::Kind::match || matched.count(cell.budget.match) ||
        matched_error.count(cell.budget.match))
      continue;
    try {
      matched[cell.budget.match] = auto_exemplar_count(ds, cell.budget.match, config.pipeline);
    } catch (const std::exception& e) {
      matched_error[cell.budget.match] = e.what();
    }
  }

  auto run_cell = [&](std::size_t i) {
    const auto& cell = config.cells[i];
    ReportRow& row = report.rows[i];
    row.test_name = std::string(to_string(cell.name));
    row.budget = cell.budget.label();
    try {
      StrategySpec spec{cell.name, cell.budget, cell.repetitions, cell_seed(config.master_seed, cell.name, cell.budget)};
      std::optional<Eigen::Index> count;
      if (cell.budget.kind == Budget::Kind::match) {
        if (auto it = matched_error.find(cell.budget.match); it != matched_error.end())
          throw Error(ErrorCode::budget_mismatch, "matched strategy failed: " + it->second);
        if (auto it = matched.find(cell.budget.match); it != matched.end()) count = it->second;
      }
      row = summarise(run_strategy(ds, spec, config.pipeline, count));
    } catch (const std::exception& e) {
      row.error = e.what();
      row.repetitions = 0;
    }
  };

  const auto threads = static_cast<std::size_t>(std::max(1, config.threads));
  if (threads == 1 || n_cells < 2) {
    for (std::size_t i = 0; i < n_cells; ++i) run_cell(i);
    return report;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(threads, n_cells); ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n_cells; i = next++) run_cell(i);
    });
  pool.clear();
  return report;
}

}  // namespace scoutlabel
