#include "scoutlabel/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace scoutlabel {

std::string_view to_string(Split split) { return split == Split::train ? "train" : "test"; }

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  throw Error(ErrorCode::parse, "split must be \"train\" or \"test\", got \"" + std::string(text) + "\"");
}

int Dataset::class_index(const std::string& label) const {
  auto it = std::lower_bound(class_names.begin(), class_names.end(), label);
  require(it != class_names.end() && *it == label, ErrorCode::invalid_argument,
          "unknown class label \"" + label + "\"");
  return static_cast<int>(it - class_names.begin());
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].split == split) out.push_back(i);
  return out;
}

Eigen::MatrixXd Dataset::features(std::span<const std::size_t> rows) const {
  Eigen::MatrixXd X(static_cast<Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) X.row(static_cast<Index>(r)) = samples[rows[r]].features.transpose();
  return X;
}

std::vector<int> Dataset::label_indices(std::span<const std::size_t> rows) const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(class_index(samples[r].label));
  return out;
}

std::vector<std::string> Dataset::plant_ids(std::span<const std::size_t> rows) const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(samples[r].plant_id);
  return out;
}

std::vector<std::string> Dataset::image_ids(std::span<const std::size_t> rows) const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(samples[r].image_id);
  return out;
}

bool plants_are_atomic(const Dataset& ds) {
  std::unordered_map<std::string, const ImageSample*> first;
  for (const auto& s : ds.samples) {
    auto [it, inserted] = first.emplace(s.plant_id, &s);
    if (!inserted && (it->second->split != s.split || it->second->label != s.label)) return false;
  }
  return true;
}

DataFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DataFormat::csv : DataFormat::jsonl;
}

Dataset make_dataset(std::vector<ImageSample> samples, const LoadOptions& options) {
  Dataset ds;
  require(!samples.empty(), ErrorCode::empty_train_split, "dataset has no samples");
  ds.dim = samples.front().features.size();
  require(ds.dim > 0, ErrorCode::dimension_mismatch, "samples must carry at least one feature");

  std::unordered_set<std::string> ids;
  std::unordered_map<std::string, const ImageSample*> plants;
  std::set<std::string> classes;
  bool any_train = false;
  for (const auto& s : samples) {
    require(s.features.size() == ds.dim, ErrorCode::dimension_mismatch,
            "image \"" + s.image_id + "\" has " + std::to_string(s.features.size()) +
                " features, expected " + std::to_string(ds.dim));
    require(ids.insert(s.image_id).second, ErrorCode::duplicate_image_id,
            "duplicate image_id \"" + s.image_id + "\"");
    auto [it, inserted] = plants.emplace(s.plant_id, &s);
    if (!inserted) {
      require(it->second->split == s.split, ErrorCode::split_conflict,
              "plant \"" + s.plant_id + "\" appears in both train and test splits");
      require(it->second->label == s.label, ErrorCode::label_conflict,
              "plant \"" + s.plant_id + "\" carries more than one label");
    }
    classes.insert(s.label);
    any_train = any_train || s.split == Split::train;
  }
  require(any_train, ErrorCode::empty_train_split, "dataset has an empty train split");

  if (options.normalize) {
    for (auto& s : samples) s.features = l2_normalize(s.features);
  }
  ds.samples = std::move(samples);
  ds.class_names.assign(classes.begin(), classes.end());
  return ds;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open \"" + path.string() + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::io, "cannot write \"" + path.string() + "\"");
  out << text;
  require(static_cast<bool>(out), ErrorCode::io, "failed writing \"" + path.string() + "\"");
}

std::vector<std::string_view> split_line(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

double parse_double(std::string_view text, std::size_t line_no) {
  // std::from_chars for double is available in libstdc++ 11.
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  require(ec == std::errc() && ptr == text.data() + text.size(), ErrorCode::parse,
          "line " + std::to_string(line_no) + ": bad number \"" + std::string(text) + "\"");
  return value;
}

std::vector<ImageSample> parse_jsonl(std::string_view text) {
  std::vector<ImageSample> samples;
  std::size_t line_no = 0;
  for (auto line : split_line(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
      ImageSample s;
      s.image_id = row.at("image_id").get<std::string>();
      s.plant_id = row.at("plant_id").get<std::string>();
      s.split = parse_split(row.at("split").get<std::string>());
      s.label = row.at("label").get<std::string>();
      const auto& f = row.at("features");
      s.features.resize(static_cast<Index>(f.size()));
      for (std::size_t j = 0; j < f.size(); ++j) s.features(static_cast<Index>(j)) = f[j].get<double>();
      samples.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return samples;
}

std::vector<ImageSample> parse_csv(std::string_view text) {
  auto lines = split_line(text, '\n');
  require(!lines.empty(), ErrorCode::parse, "empty CSV");
  auto header = split_line(trim(lines.front()), ',');
  require(header.size() >= 5 && trim(header[0]) == "image_id" && trim(header[1]) == "plant_id" &&
              trim(header[2]) == "split" && trim(header[3]) == "label",
          ErrorCode::parse, "CSV header must be image_id,plant_id,split,label,f0..f(d-1)");
  std::vector<ImageSample> samples;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    auto line = trim(lines[li]);
    if (line.empty()) continue;
    auto fields = split_line(line, ',');
    require(fields.size() >= 5, ErrorCode::parse, "line " + std::to_string(li + 1) + ": too few fields");
    ImageSample s;
    s.image_id = std::string(trim(fields[0]));
    s.plant_id = std::string(trim(fields[1]));
    s.split = parse_split(trim(fields[2]));
    s.label = std::string(trim(fields[3]));
    s.features.resize(static_cast<Index>(fields.size() - 4));
    for (std::size_t j = 4; j < fields.size(); ++j)
      s.features(static_cast<Index>(j - 4)) = parse_double(trim(fields[j]), li + 1);
    samples.push_back(std::move(s));
  }
  return samples;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset parse_dataset(std::string_view text, DataFormat format, const LoadOptions& options) {
  auto samples = format == DataFormat::csv ? parse_csv(text) : parse_jsonl(text);
  return make_dataset(std::move(samples), options);
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format, const LoadOptions& options) {
  return parse_dataset(read_file(path), format, options);
}

std::string serialize_dataset(const Dataset& ds, DataFormat format) {
  std::string out;
  if (format == DataFormat::jsonl) {
    for (const auto& s : ds.samples) {
      nlohmann::json row;
      row["image_id"] = s.image_id;
      row["plant_id"] = s.plant_id;
      row["split"] = std::string(to_string(s.split));
      row["label"] = s.label;
      row["features"] = std::vector<double>(s.features.data(), s.features.data() + s.features.size());
      out += row.dump();
      out += '\n';
    }
    return out;
  }
  out = "image_id,plant_id,split,label";
  for (Index j = 0; j < ds.dim; ++j) out += ",f" + std::to_string(j);
  out += '\n';
  for (const auto& s : ds.samples) {
    out += s.image_id + ',' + s.plant_id + ',' + std::string(to_string(s.split)) + ',' + s.label;
    for (Index j = 0; j < s.features.size(); ++j) out += ',' + format_double(s.features(j));
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path, DataFormat format) {
  write_file(path, serialize_dataset(ds, format));
}

std::vector<SplitCountRow> split_counts(const Dataset& ds) {
  std::vector<SplitCountRow> rows;
  for (const auto& name : ds.class_names) rows.push_back({name, 0, 0});
  for (const auto& s : ds.samples) {
    auto& row = rows[static_cast<std::size_t>(ds.class_index(s.label))];
    (s.split == Split::train ? row.train : row.test) += 1;
  }
  return rows;
}

}  // namespace scoutlabel
