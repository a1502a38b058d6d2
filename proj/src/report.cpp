#include "scoutlabel/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"

namespace scoutlabel {

namespace {

std::string num(double v, const char* fmt = "%.3f") {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
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

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::io, "cannot write \"" + path.string() + "\"");
  out << text;
  require(static_cast<bool>(out), ErrorCode::io, "failed writing \"" + path.string() + "\"");
}

nlohmann::json metrics_json(const CellMetrics& m) {
  nlohmann::json j;
  j["percent_labelled"] = m.percent_labelled;
  j["labelling_accuracy"] = m.labelling_accuracy;
  j["classification_accuracy_plant"] = m.classification_accuracy_plant;
  j["classification_accuracy_image"] = m.classification_accuracy_image;
  j["reduction_factor"] = m.reduction_factor;
  j["n_exemplars"] = m.n_exemplars;
  j["n_clusters"] = m.n_clusters;
  j["per_class_tpr"] = m.per_class_tpr;  // NaN serialises as null
  return j;
}

double number_or_nan(const nlohmann::json& j) {
  return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

CellMetrics metrics_from_json(const nlohmann::json& j) {
  CellMetrics m;
  m.percent_labelled = number_or_nan(j.at("percent_labelled"));
  m.labelling_accuracy = number_or_nan(j.at("labelling_accuracy"));
  m.classification_accuracy_plant = number_or_nan(j.at("classification_accuracy_plant"));
  m.classification_accuracy_image = number_or_nan(j.at("classification_accuracy_image"));
  m.reduction_factor = number_or_nan(j.at("reduction_factor"));
  m.n_exemplars = number_or_nan(j.at("n_exemplars"));
  m.n_clusters = number_or_nan(j.at("n_clusters"));
  for (const auto& v : j.at("per_class_tpr")) m.per_class_tpr.push_back(number_or_nan(v));
  return m;
}

}  // namespace

std::string results_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "test_name,percent_labelled,labelling_accuracy,classification_accuracy_plant,"
         "classification_accuracy_image,reduction_factor,budget,n_exemplars,repetitions,"
         "percent_labelled_std,labelling_accuracy_std,classification_accuracy_plant_std,"
         "classification_accuracy_image_std,error\n";
  for (const auto& r : report.rows) {
    out << csv_field(r.test_name) << ',';
    if (!r.error.empty()) {
      for (int k = 0; k < 5; ++k) out << "error,";
      out << csv_field(r.budget) << ",error,0,error,error,error,error," << csv_field(r.error) << '\n';
      continue;
    }
    out << num(r.mean.percent_labelled) << ',' << num(r.mean.labelling_accuracy) << ','
        << num(r.mean.classification_accuracy_plant) << ',' << num(r.mean.classification_accuracy_image) << ','
        << num(r.mean.reduction_factor) << ',' << csv_field(r.budget) << ',' << num(r.mean.n_exemplars, "%.1f")
        << ',' << r.repetitions << ',' << num(r.stddev.percent_labelled) << ',' << num(r.stddev.labelling_accuracy)
        << ',' << num(r.stddev.classification_accuracy_plant) << ',' << num(r.stddev.classification_accuracy_image)
        << ",\n";
  }
  return out.str();
}

std::string tpr_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "test_name,budget,class,tpr\n";
  for (const auto& r : report.rows) {
    if (!r.error.empty()) continue;
    for (std::size_t c = 0; c < report.class_names.size() && c < r.mean.per_class_tpr.size(); ++c)
      out << csv_field(r.test_name) << ',' << csv_field(r.budget) << ',' << csv_field(report.class_names[c]) << ','
          << num(r.mean.per_class_tpr[c]) << '\n';
  }
  return out.str();
}

std::string render_svg(const ExperimentReport& report, PlotMetric metric) {
  constexpr double width = 720, height = 480, left = 70, right = 170, top = 40, bottom = 60;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  // Series keyed by strategy, in first-appearance order.
  std::vector<std::string> names;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double x_max = 1;
  for (const auto& r : report.rows) {
    if (!r.error.empty()) continue;
    const double y = metric == PlotMetric::labelling_accuracy ? r.mean.labelling_accuracy
                                                              : r.mean.classification_accuracy_plant;
    if (std::isnan(y) || std::isnan(r.mean.n_exemplars)) continue;
    if (!series.count(r.test_name)) names.push_back(r.test_name);
    series[r.test_name].emplace_back(r.mean.n_exemplars, y);
    x_max = std::max(x_max, r.mean.n_exemplars);
  }
  auto sx = [&](double x) { return left + plot_w * x / x_max; };
  auto sy = [&](double y) { return top + plot_h * (1.0 - y / 100.0); };

  static constexpr const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << (metric == PlotMetric::labelling_accuracy ? "Labelling accuracy" : "Classification accuracy (plant)")
      << " vs exemplars labelled</text>\n";
  svg << "<g stroke=\"#cccccc\">\n";
  for (int t = 0; t <= 10; ++t) {
    const double y = sy(t * 10.0);
    svg << "<line x1=\"" << num(left, "%.2f") << "\" y1=\"" << num(y, "%.2f") << "\" x2=\"" << num(left + plot_w, "%.2f")
        << "\" y2=\"" << num(y, "%.2f") << "\"/>\n";
  }
  svg << "</g>\n";
  for (int t = 0; t <= 10; ++t)
    svg << "<text x=\"" << left - 8 << "\" y=\"" << num(sy(t * 10.0) + 4, "%.2f") << "\" text-anchor=\"end\">"
        << t * 10 << "</text>\n";
  for (int t = 0; t <= 5; ++t) {
    const double xv = x_max * t / 5.0;
    svg << "<text x=\"" << num(sx(xv), "%.2f") << "\" y=\"" << height - bottom + 18 << "\" text-anchor=\"middle\">"
        << num(xv, "%.0f") << "</text>\n";
  }
  svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 18
      << "\" text-anchor=\"middle\">Number of exemplars labelled</text>\n";
  svg << "<text x=\"18\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << top + plot_h / 2 << ")\">Accuracy (%)</text>\n";

  for (std::size_t s = 0; s < names.size(); ++s) {
    auto points = series[names[s]];
    std::stable_sort(points.begin(), points.end());
    const char* colour = palette[s % std::size(palette)];
    svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (std::size_t p = 0; p < points.size(); ++p)
      svg << (p ? " " : "") << num(sx(points[p].first), "%.2f") << ',' << num(sy(points[p].second), "%.2f");
    svg << "\"/>\n";
    for (const auto& [x, y] : points)
      svg << "<circle cx=\"" << num(sx(x), "%.2f") << "\" cy=\"" << num(sy(y), "%.2f") << "\" r=\"3\" fill=\""
          << colour << "\"/>\n";
    const double ly = top + 14.0 + 18.0 * static_cast<double>(s);
    svg << "<line x1=\"" << left + plot_w + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + plot_w + 35 << "\" y2=\""
        << ly << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + plot_w + 40 << "\" y=\"" << ly + 4 << "\">" << names[s] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string report_to_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["class_names"] = report.class_names;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row;
    row["test_name"] = r.test_name;
    row["budget"] = r.budget;
    row["repetitions"] = r.repetitions;
    row["error"] = r.error;
    row["mean"] = metrics_json(r.mean);
    row["std"] = metrics_json(r.stddev);
    j["rows"].push_back(row);
  }
  return j.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ExperimentReport report;
    report.class_names = j.at("class_names").get<std::vector<std::string>>();
    for (const auto& row : j.at("rows")) {
      ReportRow r;
      r.test_name = row.at("test_name").get<std::string>();
      r.budget = row.at("budget").get<std::string>();
      r.repetitions = row.at("repetitions").get<int>();
      r.error = row.at("error").get<std::string>();
      r.mean = metrics_from_json(row.at("mean"));
      r.stddev = metrics_from_json(row.at("std"));
      report.rows.push_back(std::move(r));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("report JSON: ") + e.what());
  }
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir, const EmitOptions& options) {
  require(!report.rows.empty(), ErrorCode::invalid_argument, "refusing to emit an empty report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  require(!ec && std::filesystem::is_directory(out_dir), ErrorCode::io,
          "cannot create output directory \"" + out_dir.string() + "\"");
  write_text(out_dir / "results.csv", results_csv(report));
  write_text(out_dir / "tpr.csv", tpr_csv(report));
  write_text(out_dir / "report.json", report_to_json(report));
  if (options.svg) {
    write_text(out_dir / "labelling_accuracy.svg", render_svg(report, PlotMetric::labelling_accuracy));
    write_text(out_dir / "classification_accuracy.svg", render_svg(report, PlotMetric::classification_accuracy));
  }
}

ExperimentReport load_report(const std::filesystem::path& dir) {
  std::ifstream in(dir / "report.json");
  require(static_cast<bool>(in), ErrorCode::io, "cannot open \"" + (dir / "report.json").string() + "\"");
  std::stringstream buf;
  buf << in.rdbuf();
  return report_from_json(buf.str());
}

}  // namespace scoutlabel
