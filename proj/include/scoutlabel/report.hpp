#pragma once

#include <filesystem>
#include <string>

#include "scoutlabel/harness.hpp"

namespace scoutlabel {

enum class PlotMetric { labelling_accuracy, classification_accuracy };

/// results.csv: one row per cell. Failed cells keep their name and budget,
/// carry "error" in every metric column and the message in the last column.
std::string results_csv(const ExperimentReport& report);
/// tpr.csv: test_name, budget, class, tpr.
std::string tpr_csv(const ExperimentReport& report);
/// Accuracy (y) against exemplar count (x), one polyline per strategy.
std::string render_svg(const ExperimentReport& report, PlotMetric metric);

std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);

struct EmitOptions {
  bool svg = true;
};

/// Writes results.csv, tpr.csv, report.json and, optionally,
/// labelling_accuracy.svg and classification_accuracy.svg into `out_dir`.
void emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir, const EmitOptions& options = {});

/// Reads report.json back from a results directory.
ExperimentReport load_report(const std::filesystem::path& dir);

}  // namespace scoutlabel
