#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scoutlabel/affinity.hpp"
#include "scoutlabel/clustering.hpp"
#include "scoutlabel/dataset.hpp"
#include "scoutlabel/harness.hpp"
#include "scoutlabel/labelling.hpp"
#include "scoutlabel/report.hpp"

namespace sl = scoutlabel;
using nlohmann::json;

namespace {

struct Failure {
  std::string code;
  std::string message;
};

int fail(const std::vector<Failure>& failures, int status = 1) {
  json j;
  j["errors"] = json::array();
  for (const auto& f : failures) j["errors"].push_back({{"code", f.code}, {"message", f.message}});
  std::cerr << j.dump() << '\n';
  return status;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  sl::require(static_cast<bool>(in), sl::ErrorCode::io, "cannot open \"" + path + "\"");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  sl::require(static_cast<bool>(out), sl::ErrorCode::io, "cannot write \"" + path + "\"");
  out << text;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

struct DataArgs {
  std::string path;
  bool raw = false;

  sl::Dataset load() const {
    sl::LoadOptions options;
    options.normalize = !raw;
    return sl::load_dataset(path, sl::format_from_path(path), options);
  }
};

void add_data_options(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--data", args.path, "dataset (.jsonl or .csv)")->required();
  cmd->add_flag("--no-normalize", args.raw, "keep features as stored instead of L2-normalising");
}

sl::PipelineConfig load_pipeline(const std::string& path) {
  if (path.empty()) return {};
  return sl::parse_pipeline_config(read_file(path));
}

json metrics_json(const sl::CellMetrics& m) {
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  json tpr = json::array();
  for (double v : m.per_class_tpr) tpr.push_back(num(v));
  return {{"percent_labelled", num(m.percent_labelled)},
          {"labelling_accuracy", num(m.labelling_accuracy)},
          {"classification_accuracy_plant", num(m.classification_accuracy_plant)},
          {"classification_accuracy_image", num(m.classification_accuracy_image)},
          {"reduction_factor", num(m.reduction_factor)},
          {"n_exemplars", num(m.n_exemplars)},
          {"per_class_tpr", tpr}};
}

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string spec;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  const auto spec = sl::parse_synthetic_spec(read_file(a.spec));
  const auto ds = sl::generate_synthetic(spec);
  sl::save_dataset(ds, a.out, sl::format_from_path(a.out));
  json summary;
  summary["samples"] = ds.samples.size();
  summary["dim"] = ds.dim;
  summary["classes"] = ds.class_names;
  std::cout << summary.dump() << '\n';
  return 0;
}

// --- run --------------------------------------------------------------------

struct RunArgs {
  DataArgs data;
  std::string matrix;
  std::string out;
  bool no_svg = false;
};

int cmd_run(const RunArgs& a) {
  const auto ds = a.data.load();
  const auto config = sl::parse_matrix_config(read_file(a.matrix));
  const auto report = sl::run_matrix(ds, config);
  sl::EmitOptions options;
  options.svg = !a.no_svg;
  sl::emit_report(report, a.out, options);
  std::vector<Failure> failures;
  for (const auto& row : report.rows)
    if (!row.error.empty()) failures.push_back({"cell_failed", row.test_name + " " + row.budget + ": " + row.error});
  if (!failures.empty()) return fail(failures);
  std::cout << json({{"cells", report.rows.size()}, {"out", a.out}}).dump() << '\n';
  return 0;
}

// --- cluster ----------------------------------------------------------------

struct ClusterArgs {
  DataArgs data;
  std::string algo;
  std::string out;
  std::string config;
  std::string split = "train";
  int k = 0;
  std::uint64_t seed = 0;
};

int cmd_cluster(const ClusterArgs& a) {
  const auto ds = a.data.load();
  const auto pipeline = load_pipeline(a.config);
  std::vector<std::size_t> rows;
  if (a.split == "all") {
    for (std::size_t i = 0; i < ds.samples.size(); ++i) rows.push_back(i);
  } else {
    rows = ds.indices(sl::parse_split(a.split));
  }
  sl::require(!rows.empty(), sl::ErrorCode::invalid_argument, "no samples in split \"" + a.split + "\"");
  const Eigen::MatrixXd X = ds.features(rows);

  sl::ClusterAssignment clusters;
  sl::ExemplarSet exemplars;
  json summary;
  if (a.algo == "ap") {
    clusters = sl::affinity_propagation(sl::cosine_similarity_matrix(X), pipeline.ap);
    exemplars = sl::ap_exemplars(clusters);
  } else if (a.algo == "kmeans") {
    sl::require(a.k >= 1, sl::ErrorCode::invalid_argument, "kmeans needs --k >= 1");
    sl::KMeansParams params;
    params.k = a.k;
    params.seed = a.seed;
    params.max_iterations = pipeline.kmeans_max_iterations;
    params.tolerance = pipeline.kmeans_tolerance;
    auto runs = sl::kmeans(X, params);
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r)
      if (runs[r].inertia < runs[best].inertia) best = r;
    clusters = runs[best].assignment;
    exemplars = sl::mean_exemplars(X, clusters);
    summary["inertia"] = runs[best].inertia;
  } else if (a.algo == "hier") {
    clusters = sl::locked_hierarchical(X, ds.plant_ids(rows), pipeline.hier);
    exemplars = sl::mean_exemplars(X, clusters);
  } else {
    throw sl::Error(sl::ErrorCode::invalid_argument, "unknown algorithm \"" + a.algo + "\"");
  }

  std::set<Eigen::Index> is_exemplar(exemplars.indices.begin(), exemplars.indices.end());
  std::ostringstream csv;
  csv << "image_id,cluster_index,is_exemplar\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    csv << csv_field(ds.samples[rows[i]].image_id) << ',' << clusters.labels[i] << ','
        << (is_exemplar.count(static_cast<Eigen::Index>(i)) ? 1 : 0) << '\n';
  write_file(a.out, csv.str());
  summary["n_clusters"] = clusters.n_clusters;
  summary["converged"] = clusters.converged;
  summary["iterations"] = clusters.iterations;
  std::cout << summary.dump() << '\n';
  return 0;
}

// --- label ------------------------------------------------------------------

struct LabelArgs {
  DataArgs data;
  std::string strategy;
  std::string budget = "auto";
  std::string annotations;
  std::string out;
  std::string model_out;
  std::string config;
  std::uint64_t seed = 0;
  bool oracle = false;
};

int cmd_label(const LabelArgs& a) {
  const auto ds = a.data.load();
  const auto pipeline = load_pipeline(a.config);
  sl::StrategySpec spec;
  spec.name = sl::parse_strategy(a.strategy);
  spec.budget = sl::Budget::parse(a.budget);
  spec.seed = a.seed;
  spec.repetitions = 1;
  const auto train = ds.indices(sl::Split::train);

  if (a.annotations.empty() && !a.oracle) {
    // First pass: list the images a person has to label.
    const auto plan = sl::plan_exemplars(ds, spec, pipeline);
    std::ostringstream csv;
    csv << "image_id,plant_id\n";
    for (auto e : plan.indices) {
      const auto& s = ds.samples[train[static_cast<std::size_t>(e)]];
      csv << csv_field(s.image_id) << ',' << csv_field(s.plant_id) << '\n';
    }
    write_file(a.out, csv.str());
    std::cout << json({{"exemplars", plan.indices.size()}, {"out", a.out}}).dump() << '\n';
    return 0;
  }

  const auto train_ids = ds.image_ids(train);
  sl::Labeller labeller = sl::Labeller::oracle(ds.label_indices(train));
  if (!a.oracle) {
    std::map<std::string, int> indexed;
    std::vector<Failure> unknown;
    for (const auto& [image, name] : sl::read_annotations(a.annotations)) {
      if (!std::binary_search(ds.class_names.begin(), ds.class_names.end(), name)) {
        unknown.push_back({"label_conflict", "image \"" + image + "\" annotated with unknown class \"" + name + "\""});
        continue;
      }
      indexed[image] = ds.class_index(name);
    }
    if (!unknown.empty()) return fail(unknown);
    labeller = sl::Labeller::from_annotations(std::move(indexed), train_ids);
  }

  const auto rep = sl::label_with(ds, spec, pipeline, labeller);
  std::set<Eigen::Index> labelled(rep.labels.labelled_indices.begin(), rep.labels.labelled_indices.end());
  std::ostringstream csv;
  csv << "image_id,assigned_label,was_exemplar\n";
  for (std::size_t i = 0; i < train_ids.size(); ++i)
    csv << csv_field(train_ids[i]) << ',' << csv_field(ds.class_names[static_cast<std::size_t>(rep.labels.labels[i])])
        << ',' << (labelled.count(static_cast<Eigen::Index>(i)) ? 1 : 0) << '\n';
  write_file(a.out, csv.str());
  if (!a.model_out.empty()) {
    sl::require(rep.model.has_value(), sl::ErrorCode::single_class,
                "only one class was labelled; no classifier was trained");
    sl::save_model(*rep.model, a.model_out);
  }
  json summary = metrics_json(rep.metrics);
  summary["strategy"] = std::string(sl::to_string(spec.name));
  summary["budget"] = spec.budget.label();
  std::cout << summary.dump() << '\n';
  return 0;
}

// --- report -----------------------------------------------------------------

struct ReportArgs {
  std::string in;
  std::string out;
  bool svg = false;
};

int cmd_report(const ReportArgs& a) {
  const auto report = sl::load_report(a.in);
  sl::EmitOptions options;
  options.svg = a.svg;
  sl::emit_report(report, a.out.empty() ? a.in : a.out, options);
  std::cout << sl::results_csv(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering and selective labelling toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
  generate->add_option("--spec", gen.spec, "synthetic spec JSON")->required();
  generate->add_option("--out", gen.out, "output dataset (.jsonl or .csv)")->required();

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "run a strategy x budget test matrix");
  add_data_options(run, run_args.data);
  run->add_option("--matrix", run_args.matrix, "test matrix JSON")->required();
  run->add_option("--out", run_args.out, "results directory")->required();
  run->add_flag("--no-svg", run_args.no_svg, "skip the SVG plots");

  ClusterArgs cl;
  auto* cluster = app.add_subcommand("cluster", "cluster one split and export assignments");
  add_data_options(cluster, cl.data);
  cluster->add_option("--algo", cl.algo, "ap, kmeans or hier")
      ->required()
      ->check(CLI::IsMember({"ap", "kmeans", "hier"}));
  cluster->add_option("--out", cl.out, "assignment CSV")->required();
  cluster->add_option("--k", cl.k, "cluster count for kmeans");
  cluster->add_option("--seed", cl.seed, "kmeans seed");
  cluster->add_option("--split", cl.split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
  cluster->add_option("--config", cl.config, "pipeline config JSON");

  LabelArgs lb;
  auto* label = app.add_subcommand("label", "select exemplars, then label the training split from annotations");
  add_data_options(label, lb.data);
  label->add_option("--strategy", lb.strategy, "strategy name")->required();
  label->add_option("--budget", lb.budget, "auto, a percentage, or match:<strategy>");
  label->add_option("--annotations", lb.annotations, "image_id,label CSV answering the exemplar list");
  label->add_flag("--oracle", lb.oracle, "answer with the dataset's own labels");
  label->add_option("--out", lb.out, "exemplar list (no annotations) or label assignment CSV")->required();
  label->add_option("--model-out", lb.model_out, "save the trained classifier");
  label->add_option("--seed", lb.seed, "seed for randomised strategies");
  label->add_option("--config", lb.config, "pipeline config JSON");

  ReportArgs rp;
  auto* report = app.add_subcommand("report", "re-emit tables and plots from a results directory");
  report->add_option("--in", rp.in, "results directory")->required();
  report->add_option("--out", rp.out, "output directory (default: --in)");
  report->add_flag("--svg", rp.svg, "also write SVG plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail({{"usage", e.what()}}, 2);
  }

  try {
    if (*generate) return cmd_generate(gen);
    if (*run) return cmd_run(run_args);
    if (*cluster) return cmd_cluster(cl);
    if (*label) return cmd_label(lb);
    if (*report) return cmd_report(rp);
  } catch (const sl::Error& e) {
    return fail({{std::string(sl::to_string(e.code())), e.what()}});
  } catch (const std::exception& e) {
    return fail({{"internal", e.what()}});
  }
  return 0;
}
