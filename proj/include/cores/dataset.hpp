#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cores {

// A labeled dataset with both the ground-truth labels and the (possibly
// corrupted) labels actually used for training. Features are stored
// row-major, one row per sample.
struct LabeledDataset {
  std::size_t num_samples = 0;
  std::size_t dim = 0;
  int num_classes = 0;
  std::uint64_t seed = 0;

  std::vector<double> features;      // num_samples * dim, row-major
  std::vector<int> clean_labels;     // in [0, num_classes)
  std::vector<int> noisy_labels;     // in [0, num_classes)

  std::span<const double> sample(std::size_t n) const {
    return {features.data() + n * dim, dim};
  }
  std::span<double> sample(std::size_t n) {
    return {features.data() + n * dim, dim};
  }

  // Throws std::invalid_argument if any structural invariant is broken
  // (label range, non-finite features, empty shapes).
  void validate() const;

  double corruption_fraction() const;
};

enum class NoiseKind { symmetric, asymmetric, instance };

// Declarative record of a noise process. For instance-dependent noise the
// realized projection matrix W and per-sample flip rates are kept so a run
// can be reproduced or audited after the fact.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::symmetric;
  double epsilon = 0.0;
  bool include_true_label = false;  // symmetric convention switch
  std::uint64_t seed = 0;

  struct InstanceParams {
    std::size_t dim = 0;
    int num_classes = 0;
    std::vector<double> w;           // dim * num_classes, row-major
    std::vector<double> flip_rates;  // length num_samples, each in [0, 1]
  };
  std::optional<InstanceParams> instance_params;

  void validate() const;
};

const char* noise_kind_name(NoiseKind kind);
NoiseKind noise_kind_from_name(const std::string& name);

// Column-oriented CSV with header feat_0..feat_{S-1},clean_label,noisy_label.
void save_dataset_csv(const LabeledDataset& data, const std::string& path);
LabeledDataset load_dataset_csv(const std::string& path);

// JSON sidecar carrying the NoiseSpec (including W and flip rates) and the
// generation seeds.
void save_noise_spec_json(const NoiseSpec& spec, std::uint64_t data_seed,
                          const std::string& path);
NoiseSpec load_noise_spec_json(const std::string& path);

}  // namespace cores
