#include "cores/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cores/errors.hpp"

namespace cores {

void LabeledDataset::validate() const {
  if (num_samples < 1) throw std::invalid_argument("dataset: need at least one sample");
  if (dim < 1) throw std::invalid_argument("dataset: need at least one feature dimension");
  if (num_classes < 2) throw std::invalid_argument("dataset: need at least two classes");
  if (features.size() != num_samples * dim)
    throw std::invalid_argument("dataset: feature matrix shape mismatch");
  if (clean_labels.size() != num_samples || noisy_labels.size() != num_samples)
    throw std::invalid_argument("dataset: label vector length mismatch");
  for (double v : features)
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature value");
  for (std::size_t n = 0; n < num_samples; ++n) {
    if (clean_labels[n] < 0 || clean_labels[n] >= num_classes ||
        noisy_labels[n] < 0 || noisy_labels[n] >= num_classes)
      throw std::invalid_argument("dataset: label out of range");
  }
}

double LabeledDataset::corruption_fraction() const {
  std::size_t corrupted = 0;
  for (std::size_t n = 0; n < num_samples; ++n)
    if (clean_labels[n] != noisy_labels[n]) ++corrupted;
  return num_samples ? static_cast<double>(corrupted) / static_cast<double>(num_samples) : 0.0;
}

void NoiseSpec::validate() const {
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw std::invalid_argument("noise spec: epsilon must lie in [0, 1)");
  if (kind == NoiseKind::instance) {
    if (!instance_params)
      throw std::invalid_argument("noise spec: instance kind requires W and flip rates");
    const auto& p = *instance_params;
    if (p.w.size() != p.dim * static_cast<std::size_t>(p.num_classes))
      throw std::invalid_argument("noise spec: W shape mismatch");
    for (double q : p.flip_rates)
      if (!(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument("noise spec: flip rates must lie in [0, 1]");
  }
}

const char* noise_kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::symmetric: return "symmetric";
    case NoiseKind::asymmetric: return "asymmetric";
    case NoiseKind::instance: return "instance";
  }
  return "symmetric";
}

NoiseKind noise_kind_from_name(const std::string& name) {
  if (name == "symmetric") return NoiseKind::symmetric;
  if (name == "asymmetric") return NoiseKind::asymmetric;
  if (name == "instance") return NoiseKind::instance;
  throw std::invalid_argument("unknown noise kind: " + name);
}

namespace {

// %.17g round-trips any double exactly; keeps CSV replay byte-identical.
std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_dataset_csv(const LabeledDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (std::size_t d = 0; d < data.dim; ++d) out << "feat_" << d << ",";
  out << "clean_label,noisy_label\n";
  for (std::size_t n = 0; n < data.num_samples; ++n) {
    const auto x = data.sample(n);
    for (std::size_t d = 0; d < data.dim; ++d) out << format_double(x[d]) << ",";
    out << data.clean_labels[n] << "," << data.noisy_labels[n] << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

LabeledDataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string header;
  if (!std::getline(in, header)) throw ParseError("empty dataset file: " + path);

  std::size_t dim = 0;
  {
    std::stringstream hs(header);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(hs, col, ',')) cols.push_back(col);
    if (cols.size() < 3 || cols[cols.size() - 2] != "clean_label" ||
        cols.back() != "noisy_label")
      throw ParseError("dataset header must end with clean_label,noisy_label: " + path);
    dim = cols.size() - 2;
  }

  LabeledDataset data;
  data.dim = dim;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != dim + 2)
      throw ParseError("row " + std::to_string(line_no) + " has wrong column count: " + path);
    try {
      for (std::size_t d = 0; d < dim; ++d) data.features.push_back(std::stod(cells[d]));
      data.clean_labels.push_back(std::stoi(cells[dim]));
      data.noisy_labels.push_back(std::stoi(cells[dim + 1]));
    } catch (const std::exception&) {
      throw ParseError("row " + std::to_string(line_no) + " is not numeric: " + path);
    }
    ++data.num_samples;
  }
  if (data.num_samples == 0) throw ParseError("dataset has no rows: " + path);
  int max_label = 0;
  for (int y : data.clean_labels) max_label = std::max(max_label, y);
  for (int y : data.noisy_labels) max_label = std::max(max_label, y);
  data.num_classes = max_label + 1;
  if (data.num_classes < 2) data.num_classes = 2;
  data.validate();
  return data;
}

void save_noise_spec_json(const NoiseSpec& spec, std::uint64_t data_seed,
                          const std::string& path) {
  nlohmann::json j;
  j["kind"] = noise_kind_name(spec.kind);
  j["epsilon"] = spec.epsilon;
  j["include_true_label"] = spec.include_true_label;
  j["noise_seed"] = spec.seed;
  j["data_seed"] = data_seed;
  if (spec.instance_params) {
    const auto& p = *spec.instance_params;
    j["instance_params"] = {
        {"dim", p.dim},
        {"num_classes", p.num_classes},
        {"W", p.w},
        {"flip_rates", p.flip_rates},
        {"standardized_features", true},
    };
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

NoiseSpec load_noise_spec_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(std::string("bad noise spec JSON: ") + e.what());
  }
  NoiseSpec spec;
  try {
    spec.kind = noise_kind_from_name(j.at("kind").get<std::string>());
    spec.epsilon = j.at("epsilon").get<double>();
    spec.include_true_label = j.value("include_true_label", false);
    spec.seed = j.value("noise_seed", std::uint64_t{0});
    if (j.contains("instance_params")) {
      const auto& jp = j["instance_params"];
      NoiseSpec::InstanceParams p;
      p.dim = jp.at("dim").get<std::size_t>();
      p.num_classes = jp.at("num_classes").get<int>();
      p.w = jp.at("W").get<std::vector<double>>();
      p.flip_rates = jp.at("flip_rates").get<std::vector<double>>();
      spec.instance_params = std::move(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad noise spec JSON: ") + e.what());
  }
  spec.validate();
  return spec;
}

}  // namespace cores
