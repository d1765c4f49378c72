#include "cores/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "cores/errors.hpp"

namespace cores {

SieveReport sieve_report(const std::vector<std::uint8_t>& v,
                         const std::vector<int>& clean_labels,
                         const std::vector<int>& noisy_labels) {
  if (v.size() != clean_labels.size() || v.size() != noisy_labels.size())
    throw std::invalid_argument("sieve_report: length mismatch");
  SieveReport rep;
  std::size_t true_pos = 0;
  for (std::size_t n = 0; n < v.size(); ++n) {
    const bool is_clean = clean_labels[n] == noisy_labels[n];
    if (is_clean) ++rep.num_clean;
    if (v[n]) {
      ++rep.num_selected;
      if (is_clean) ++true_pos;
    }
  }
  if (rep.num_selected > 0)
    rep.precision = static_cast<double>(true_pos) / static_cast<double>(rep.num_selected);
  if (rep.num_clean > 0)
    rep.recall = static_cast<double>(true_pos) / static_cast<double>(rep.num_clean);
  if (rep.precision + rep.recall > 0.0)
    rep.f_score = 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall);
  return rep;
}

int argmax_class(std::span<const double> probs) {
  int best = 0;
  for (std::size_t c = 1; c < probs.size(); ++c)
    if (probs[c] > probs[best]) best = static_cast<int>(c);
  return best;
}

double test_accuracy(const Classifier& model, const LabeledDataset& test_data) {
  if (test_data.num_samples == 0) throw std::invalid_argument("test_accuracy: empty dataset");
  std::size_t correct = 0;
  for (std::size_t n = 0; n < test_data.num_samples; ++n) {
    const auto probs = model.forward(test_data.sample(n));
    if (argmax_class(probs) == test_data.clean_labels[n]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_data.num_samples);
}

std::vector<LossHistogramRow> loss_histogram(const Classifier& model,
                                             const LabeledDataset& data,
                                             const NoisyPrior& prior, double beta) {
  std::vector<LossHistogramRow> rows;
  rows.reserve(data.num_samples);
  for (std::size_t n = 0; n < data.num_samples; ++n) {
    const auto probs = model.forward(data.sample(n));
    const SieveDecision d = sieve_decision(probs, data.noisy_labels[n], prior, beta);
    rows.push_back({n, d.margin, data.clean_labels[n] == data.noisy_labels[n]});
  }
  return rows;
}

void save_loss_histogram_csv(const std::vector<LossHistogramRow>& rows,
                             const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "index,centered_loss,is_clean\n";
  char buf[40];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g", row.centered_loss);
    out << row.index << "," << buf << "," << (row.is_clean ? 1 : 0) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace cores
