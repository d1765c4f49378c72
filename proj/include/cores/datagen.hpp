#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cores/dataset.hpp"

namespace cores {

// Gaussian blobs, one unit-variance cluster per class, class-balanced.
// Class means sit on a circle in the first two feature dimensions with
// adjacent means exactly `separation` apart; remaining dimensions are
// centered at zero. Counts are split as evenly as possible, the first
// num_samples % num_classes classes receiving one extra sample.
LabeledDataset make_blobs(std::size_t num_samples, int num_classes,
                          std::size_t dim, double separation,
                          std::uint64_t seed);

// With probability epsilon a label is replaced: by a uniformly random
// *different* class when include_true_label is false, or by a uniform draw
// over all classes (so the realized corruption rate is epsilon*(K-1)/K)
// when true.
LabeledDataset apply_symmetric_noise(const LabeledDataset& data, double epsilon,
                                     bool include_true_label,
                                     std::uint64_t seed);

// Label i flips to (i+1) mod K with probability epsilon, else unchanged.
LabeledDataset apply_asymmetric_noise(const LabeledDataset& data,
                                      double epsilon, std::uint64_t seed);

// Instance-dependent noise. Per sample n with standardized features x:
//   q_n ~ truncated-Normal(epsilon, 0.1^2, [0, 1])
//   p = x . W with W ~ Normal(0, 1) entrywise, shape dim x K
//   index y_n is excluded from the softmax (the -inf convention, exact)
//   p = q_n * softmax(p);  p[y_n] = 1 - q_n
//   noisy label ~ Categorical(p)
// Features are standardized to zero mean / unit variance per dimension
// before the projection; constant dimensions are left centered only.
// Draw order: all q_n first, then W, then one categorical draw per sample.
std::pair<LabeledDataset, NoiseSpec> apply_instance_noise(
    const LabeledDataset& data, double epsilon, std::uint64_t seed);

// Row i, column j: fraction of samples with clean label i that carry noisy
// label j. Rows sum to 1. Throws on a class with zero clean samples.
std::vector<double> empirical_transition(const LabeledDataset& data);

// Per-sample flip distribution of the instance-noise process (the vector p
// above, before the categorical draw). Exposed so tests can check that
// identical features and labels produce identical distributions.
std::vector<double> instance_flip_distribution(std::span<const double> std_features,
                                               int clean_label, double flip_rate,
                                               const std::vector<double>& w,
                                               std::size_t dim, int num_classes);

// Zero-mean unit-variance copy of the feature matrix, per dimension over
// the whole dataset. Dimensions with zero variance are centered only.
std::vector<double> standardize_features(const LabeledDataset& data);

}  // namespace cores
