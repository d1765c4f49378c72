#include "cores/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cores/rng.hpp"

namespace cores {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

LabeledDataset make_blobs(std::size_t num_samples, int num_classes,
                          std::size_t dim, double separation,
                          std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("make_blobs: need at least two classes");
  if (dim < 2) throw std::invalid_argument("make_blobs: need at least two dimensions");
  if (num_samples < static_cast<std::size_t>(num_classes))
    throw std::invalid_argument("make_blobs: need at least one sample per class");
  if (!(separation > 0.0)) throw std::invalid_argument("make_blobs: separation must be positive");

  const int k = num_classes;
  // Means on a circle in the first two dims; chord between adjacent means
  // equals `separation`.
  const double radius = separation / (2.0 * std::sin(kPi / k));
  std::vector<double> mean_x(k), mean_y(k);
  for (int c = 0; c < k; ++c) {
    const double angle = 2.0 * kPi * c / k;
    mean_x[c] = radius * std::cos(angle);
    mean_y[c] = radius * std::sin(angle);
  }

  LabeledDataset data;
  data.num_samples = num_samples;
  data.dim = dim;
  data.num_classes = k;
  data.seed = seed;
  data.features.reserve(num_samples * dim);
  data.clean_labels.reserve(num_samples);

  // Class c gets floor(N/K) samples, classes < N mod K one extra; samples
  // are laid out class-blockwise. Training shuffles per epoch regardless.
  const std::size_t base = num_samples / k;
  const std::size_t extra = num_samples % k;
  Rng rng(seed);
  for (int c = 0; c < k; ++c) {
    const std::size_t count = base + (static_cast<std::size_t>(c) < extra ? 1 : 0);
    for (std::size_t i = 0; i < count; ++i) {
      data.clean_labels.push_back(c);
      for (std::size_t d = 0; d < dim; ++d) {
        double center = 0.0;
        if (d == 0) center = mean_x[c];
        if (d == 1) center = mean_y[c];
        data.features.push_back(center + rng.normal());
      }
    }
  }
  data.noisy_labels = data.clean_labels;
  data.validate();
  return data;
}

LabeledDataset apply_symmetric_noise(const LabeledDataset& data, double epsilon,
                                     bool include_true_label, std::uint64_t seed) {
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw std::invalid_argument("apply_symmetric_noise: epsilon must lie in [0, 1)");
  LabeledDataset out = data;
  const std::uint64_t k = static_cast<std::uint64_t>(data.num_classes);
  Rng rng(seed);
  // Per sample, in index order: one uniform (flip?), then on flip one index
  // draw over K or K-1 classes.
  for (std::size_t n = 0; n < data.num_samples; ++n) {
    if (rng.uniform() >= epsilon) continue;
    const int y = data.clean_labels[n];
    if (include_true_label) {
      out.noisy_labels[n] = static_cast<int>(rng.uniform_index(k));
    } else {
      const int r = static_cast<int>(rng.uniform_index(k - 1));
      out.noisy_labels[n] = r >= y ? r + 1 : r;
    }
  }
  return out;
}

LabeledDataset apply_asymmetric_noise(const LabeledDataset& data, double epsilon,
                                      std::uint64_t seed) {
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw std::invalid_argument("apply_asymmetric_noise: epsilon must lie in [0, 1)");
  LabeledDataset out = data;
  Rng rng(seed);
  for (std::size_t n = 0; n < data.num_samples; ++n) {
    if (rng.uniform() < epsilon)
      out.noisy_labels[n] = (data.clean_labels[n] + 1) % data.num_classes;
  }
  return out;
}

std::vector<double> standardize_features(const LabeledDataset& data) {
  const std::size_t n_samples = data.num_samples;
  const std::size_t dim = data.dim;
  std::vector<double> out(data.features);
  for (std::size_t d = 0; d < dim; ++d) {
    double mean = 0.0;
    for (std::size_t n = 0; n < n_samples; ++n) mean += data.features[n * dim + d];
    mean /= static_cast<double>(n_samples);
    double var = 0.0;
    for (std::size_t n = 0; n < n_samples; ++n) {
      const double dev = data.features[n * dim + d] - mean;
      var += dev * dev;
    }
    var /= static_cast<double>(n_samples);
    const double scale = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
    for (std::size_t n = 0; n < n_samples; ++n)
      out[n * dim + d] = (data.features[n * dim + d] - mean) * scale;
  }
  return out;
}

std::vector<double> instance_flip_distribution(std::span<const double> std_features,
                                               int clean_label, double flip_rate,
                                               const std::vector<double>& w,
                                               std::size_t dim, int num_classes) {
  const int k = num_classes;
  std::vector<double> logits(k, 0.0);
  for (std::size_t d = 0; d < dim; ++d)
    for (int c = 0; c < k; ++c) logits[c] += std_features[d] * w[d * k + c];

  // Softmax over classes other than clean_label; that index is excluded
  // from normalization entirely (the exact -inf convention).
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < k; ++c)
    if (c != clean_label) max_logit = std::max(max_logit, logits[c]);
  double denom = 0.0;
  std::vector<double> dist(k, 0.0);
  for (int c = 0; c < k; ++c) {
    if (c == clean_label) continue;
    dist[c] = std::exp(logits[c] - max_logit);
    denom += dist[c];
  }
  for (int c = 0; c < k; ++c) {
    if (c == clean_label) continue;
    dist[c] = flip_rate * dist[c] / denom;
  }
  dist[clean_label] = 1.0 - flip_rate;
  return dist;
}

std::pair<LabeledDataset, NoiseSpec> apply_instance_noise(const LabeledDataset& data,
                                                          double epsilon,
                                                          std::uint64_t seed) {
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw std::invalid_argument("apply_instance_noise: epsilon must lie in [0, 1)");
  const std::size_t n_samples = data.num_samples;
  const std::size_t dim = data.dim;
  const int k = data.num_classes;

  const std::vector<double> std_features = standardize_features(data);

  Rng rng(seed);
  // Draw order: all flip rates q_n, then W row-major, then one categorical
  // draw per sample.
  std::vector<double> q(n_samples);
  for (std::size_t n = 0; n < n_samples; ++n)
    q[n] = rng.truncated_normal(epsilon, 0.1, 0.0, 1.0);
  std::vector<double> w(dim * static_cast<std::size_t>(k));
  for (double& entry : w) entry = rng.normal();

  LabeledDataset out = data;
  for (std::size_t n = 0; n < n_samples; ++n) {
    const std::span<const double> x{std_features.data() + n * dim, dim};
    const std::vector<double> p =
        instance_flip_distribution(x, data.clean_labels[n], q[n], w, dim, k);
    out.noisy_labels[n] = static_cast<int>(rng.categorical(p));
  }

  NoiseSpec spec;
  spec.kind = NoiseKind::instance;
  spec.epsilon = epsilon;
  spec.include_true_label = false;
  spec.seed = seed;
  spec.instance_params =
      NoiseSpec::InstanceParams{dim, k, std::move(w), std::move(q)};
  spec.validate();
  return {std::move(out), std::move(spec)};
}

std::vector<double> empirical_transition(const LabeledDataset& data) {
  const int k = data.num_classes;
  std::vector<double> counts(static_cast<std::size_t>(k) * k, 0.0);
  std::vector<std::size_t> row_totals(k, 0);
  for (std::size_t n = 0; n < data.num_samples; ++n) {
    counts[static_cast<std::size_t>(data.clean_labels[n]) * k + data.noisy_labels[n]] += 1.0;
    ++row_totals[data.clean_labels[n]];
  }
  for (int i = 0; i < k; ++i) {
    if (row_totals[i] == 0)
      throw std::invalid_argument("empirical_transition: class " + std::to_string(i) +
                                  " has no clean samples");
    for (int j = 0; j < k; ++j)
      counts[static_cast<std::size_t>(i) * k + j] /= static_cast<double>(row_totals[i]);
  }
  return counts;
}

}  // namespace cores
