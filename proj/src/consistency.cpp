#include "cores/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cores/errors.hpp"
#include "cores/metrics.hpp"

namespace cores {

std::vector<double> feature_stds(const LabeledDataset& data) {
  std::vector<double> stds(data.dim, 0.0);
  for (std::size_t d = 0; d < data.dim; ++d) {
    double mean = 0.0;
    for (std::size_t n = 0; n < data.num_samples; ++n)
      mean += data.features[n * data.dim + d];
    mean /= static_cast<double>(data.num_samples);
    double var = 0.0;
    for (std::size_t n = 0; n < data.num_samples; ++n) {
      const double dev = data.features[n * data.dim + d] - mean;
      var += dev * dev;
    }
    stds[d] = std::sqrt(var / static_cast<double>(data.num_samples));
  }
  return stds;
}

std::vector<double> augment(std::span<const double> x, const AugmentationSpec& spec,
                            std::span<const double> dim_stds, std::size_t epoch,
                            std::size_t index) {
  if (x.size() != dim_stds.size())
    throw std::invalid_argument("augment: dimension mismatch");
  std::vector<double> out(x.begin(), x.end());
  if (spec.sigma_fraction == 0.0) return out;
  Rng rng(mix_seed(spec.seed, epoch, index));
  for (std::size_t d = 0; d < out.size(); ++d)
    out[d] += rng.normal(0.0, spec.sigma_fraction * dim_stds[d]);
  return out;
}

ConsistencyEpochStats consistency_epoch(Classifier& model, const LabeledDataset& data,
                                        const std::vector<std::uint8_t>& v,
                                        const AugmentationSpec& spec,
                                        std::span<const double> dim_stds,
                                        const OptimizerConfig& opt, std::size_t epoch,
                                        double kl_weight, std::vector<double>& velocity,
                                        Rng& shuffle_rng, const LabelProvider& label_of) {
  if (v.size() != data.num_samples)
    throw std::invalid_argument("consistency_epoch: flag vector length mismatch");
  const Classifier snapshot = model;  // refreshed once per epoch, gradient-free
  const std::vector<std::size_t> order = shuffle_rng.permutation(data.num_samples);

  ConsistencyEpochStats stats;
  std::vector<std::span<const double>> xs;
  std::vector<std::vector<double>> prob_grads;
  std::vector<std::vector<double>> augmented;  // keeps spans alive per batch

  for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
    const std::size_t end = std::min(order.size(), start + opt.batch_size);
    xs.clear();
    prob_grads.clear();
    augmented.clear();
    // Each term is a mean over its own subset of the batch, so the
    // supervised step size per kept sample matches the sieve phase's
    // selected-count normalization.
    std::size_t kept = 0;
    for (std::size_t b = start; b < end; ++b) kept += v[order[b]] ? 1 : 0;
    const std::size_t dropped = (end - start) - kept;
    const double ce_norm = static_cast<double>(std::max<std::size_t>(kept, 1));
    const double kl_norm = static_cast<double>(std::max<std::size_t>(dropped, 1));
    for (std::size_t b = start; b < end; ++b) {
      const std::size_t n = order[b];
      const auto x = data.sample(n);
      const auto probs = model.forward(x);
      std::vector<double> g(probs.size(), 0.0);
      double sample_loss = 0.0;
      if (v[n]) {
        const int label = label_of(n);
        sample_loss = cross_entropy(probs, label);
        stats.ce_loss += sample_loss;
        add_cross_entropy_grad(probs, label, 1.0 / ce_norm, g);
      } else {
        augmented.push_back(augment(x, spec, dim_stds, epoch, n));
        const std::vector<double> q = snapshot.forward(augmented.back());
        sample_loss = kl_weight * kl_consistency(probs, q);
        stats.kl_loss += sample_loss;
        add_kl_consistency_grad(probs, q, kl_weight / kl_norm, g);
      }
      if (!std::isfinite(sample_loss))
        throw TrainingDivergedError("non-finite consistency loss");
      xs.push_back(x);
      prob_grads.push_back(std::move(g));
    }
    if (xs.empty()) continue;
    const std::vector<double> grad = model.backward(xs, prob_grads);
    sgd_step(model, grad, opt, velocity, epoch);
  }
  const double total = static_cast<double>(data.num_samples);
  stats.ce_loss /= total;
  stats.kl_loss /= total;
  stats.total_loss = stats.ce_loss + stats.kl_loss;
  return stats;
}

RunResult run_cores_star(const LabeledDataset& train, const LabeledDataset* test,
                         const StarPlan& plan) {
  if (plan.tau < 1 || plan.tau > plan.base.opt.epochs)
    throw std::invalid_argument("run_cores_star: tau must lie in [1, epochs]");

  TrainPlan sieve_plan = plan.base;
  sieve_plan.opt.epochs = plan.tau;
  // Keep the lr schedule aligned with the full budget.
  sieve_plan.opt.lr_decay_epoch = plan.base.opt.lr_decay_epoch;
  RunResult result = run_cores(train, test, sieve_plan);

  const std::size_t budget = plan.consistency_epochs
                                 ? plan.consistency_epochs
                                 : plan.base.opt.epochs - plan.tau;
  const std::vector<double> dim_stds = feature_stds(train);
  std::vector<double> velocity;  // fresh momentum for the new objective
  Rng shuffle_rng(mix_seed(plan.base.train_seed, 0xA003));
  AugmentationSpec aug = plan.aug;
  aug.seed = mix_seed(plan.base.train_seed, 0xA004, aug.seed);
  const LabelProvider noisy_label = [&train](std::size_t n) {
    return train.noisy_labels[n];
  };

  for (std::size_t i = 0; i < budget; ++i) {
    const std::size_t epoch = plan.tau + i;
    const ConsistencyEpochStats stats = consistency_epoch(
        result.model, train, result.final_state.v, aug, dim_stds, plan.base.opt, epoch,
        plan.kl_weight, velocity, shuffle_rng, noisy_label);

    const SieveReport rep =
        sieve_report(result.final_state.v, train.clean_labels, train.noisy_labels);
    EpochRow row;
    row.epoch = epoch;
    row.beta = result.final_state.beta;
    row.num_selected = rep.num_selected;
    row.precision = rep.precision;
    row.recall = rep.recall;
    row.f_score = rep.f_score;
    row.train_loss = stats.total_loss;
    row.test_accuracy = test_accuracy(result.model, test ? *test : train);
    row.ce_loss = stats.ce_loss;
    row.kl_loss = stats.kl_loss;
    row.has_kl = true;
    result.per_epoch.push_back(row);
  }
  return result;
}

}  // namespace cores
