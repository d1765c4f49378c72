#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cores/dataset.hpp"
#include "cores/loss.hpp"
#include "cores/model.hpp"

namespace cores {

// Quality of the sieve's clean/corrupted split measured against ground
// truth. Zero-denominator cases (nothing selected, nothing clean) give 0.
struct SieveReport {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  std::size_t num_selected = 0;
  std::size_t num_clean = 0;
};

SieveReport sieve_report(const std::vector<std::uint8_t>& v,
                         const std::vector<int>& clean_labels,
                         const std::vector<int>& noisy_labels);

// Fraction of argmax-correct predictions against clean labels; argmax ties
// break toward the smallest class index.
double test_accuracy(const Classifier& model, const LabeledDataset& test_data);

int argmax_class(std::span<const double> probs);

// One row per sample: regularized loss minus threshold, negative iff the
// sieve keeps the sample.
struct LossHistogramRow {
  std::size_t index = 0;
  double centered_loss = 0.0;
  bool is_clean = false;
};

std::vector<LossHistogramRow> loss_histogram(const Classifier& model,
                                             const LabeledDataset& data,
                                             const NoisyPrior& prior, double beta);

void save_loss_histogram_csv(const std::vector<LossHistogramRow>& rows,
                             const std::string& path);

}  // namespace cores
