#include "cores/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cores {

double floored_log(double p) { return std::log(std::max(p, kProbFloor)); }

NoisyPrior NoisyPrior::from_labels(const std::vector<int>& noisy_labels, int num_classes) {
  if (num_classes < 2) throw std::invalid_argument("prior: need at least two classes");
  if (noisy_labels.empty()) throw std::invalid_argument("prior: no labels");
  NoisyPrior prior;
  prior.probs.assign(num_classes, 0.0);
  for (int y : noisy_labels) {
    if (y < 0 || y >= num_classes) throw std::invalid_argument("prior: label out of range");
    prior.probs[y] += 1.0;
  }
  for (double& p : prior.probs) p /= static_cast<double>(noisy_labels.size());
  return prior;
}

NoisyPrior NoisyPrior::uniform(int num_classes) {
  if (num_classes < 2) throw std::invalid_argument("prior: need at least two classes");
  NoisyPrior prior;
  prior.probs.assign(num_classes, 1.0 / num_classes);
  return prior;
}

void NoisyPrior::validate() const {
  if (probs.size() < 2) throw std::invalid_argument("prior: need at least two classes");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("prior: negative entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("prior: entries must sum to 1");
}

double beta_at(const BetaSchedule& schedule, std::size_t epoch) {
  if (epoch < schedule.warmup_epochs) return 0.0;
  if (schedule.ramp_epochs == 0) return schedule.beta_max;
  const std::size_t into_ramp = epoch - schedule.warmup_epochs;
  if (into_ramp >= schedule.ramp_epochs) return schedule.beta_max;
  return schedule.beta_max * static_cast<double>(into_ramp) /
         static_cast<double>(schedule.ramp_epochs);
}

double cross_entropy(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
    throw std::invalid_argument("cross_entropy: label out of range");
  return -floored_log(probs[label]);
}

double cr_term(std::span<const double> probs, const NoisyPrior& prior, double beta) {
  if (prior.probs.size() != probs.size())
    throw std::invalid_argument("cr_term: prior/probs size mismatch");
  if (beta < 0.0) throw std::invalid_argument("cr_term: beta must be non-negative");
  double acc = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j)
    acc += prior.probs[j] * floored_log(probs[j]);
  return beta * acc;
}

double sieve_threshold(std::span<const double> probs, const NoisyPrior& prior,
                       double beta) {
  const std::size_t k = probs.size();
  double mean_ce = 0.0;
  for (std::size_t y = 0; y < k; ++y) mean_ce += cross_entropy(probs, static_cast<int>(y));
  mean_ce /= static_cast<double>(k);
  return mean_ce + cr_term(probs, prior, beta);
}

SieveDecision sieve_decision(std::span<const double> probs, int noisy_label,
                             const NoisyPrior& prior, double beta) {
  const std::size_t k = probs.size();
  const double ce_label = cross_entropy(probs, noisy_label);

  // Mean CE expressed as label CE plus the mean difference, so identical
  // per-class losses cancel exactly and uniform predictions land on margin
  // exactly 0.
  double diff_sum = 0.0;
  for (std::size_t y = 0; y < k; ++y)
    diff_sum += cross_entropy(probs, static_cast<int>(y)) - ce_label;
  const double mean_ce = ce_label + diff_sum / static_cast<double>(k);

  const double cr = cr_term(probs, prior, beta);
  const bool full_form = ce_label + cr < mean_ce + cr;
  const bool simple_form = ce_label < mean_ce;
  if (full_form != simple_form)
    throw std::logic_error("sieve_decision: regularized and simplified forms disagree");

  return SieveDecision{full_form, ce_label - mean_ce};
}

double peer_loss(std::span<const double> probs, int peer_label) {
  return cross_entropy(probs, peer_label);
}

double entropy_reg(std::span<const double> probs) {
  double acc = 0.0;
  for (double p : probs) acc -= p * floored_log(p);
  return acc;
}

double kl_consistency(std::span<const double> probs_orig,
                      std::span<const double> probs_aug_detached) {
  if (probs_orig.size() != probs_aug_detached.size())
    throw std::invalid_argument("kl_consistency: size mismatch");
  double acc = 0.0;
  for (std::size_t j = 0; j < probs_orig.size(); ++j) {
    const double q = probs_aug_detached[j];
    if (q <= 0.0) continue;  // 0 * ln 0 = 0
    acc += q * (floored_log(q) - floored_log(probs_orig[j]));
  }
  // The floor can push the sum a few 1e-13 below zero; the divergence
  // itself is non-negative, so clamp.
  return std::max(acc, 0.0);
}

void add_cross_entropy_grad(std::span<const double> probs, int label, double scale,
                            std::span<double> grad) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
    throw std::invalid_argument("cross_entropy grad: label out of range");
  if (probs[label] > kProbFloor) grad[label] += scale * (-1.0 / probs[label]);
}

void add_cr_grad(std::span<const double> probs, const NoisyPrior& prior, double beta,
                 double scale, std::span<double> grad) {
  for (std::size_t j = 0; j < probs.size(); ++j)
    if (probs[j] > kProbFloor) grad[j] += scale * beta * prior.probs[j] / probs[j];
}

void add_entropy_reg_grad(std::span<const double> probs, double scale,
                          std::span<double> grad) {
  // d/dp of -sum p ln p; below the floor the forward value is -p ln(floor),
  // linear in p, so the gradient there is -ln(floor).
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const double logp = floored_log(probs[j]);
    if (probs[j] > kProbFloor)
      grad[j] += scale * (-(logp + 1.0));
    else
      grad[j] += scale * (-logp);
  }
}

void add_kl_consistency_grad(std::span<const double> probs_orig,
                             std::span<const double> probs_aug_detached, double scale,
                             std::span<double> grad) {
  for (std::size_t j = 0; j < probs_orig.size(); ++j) {
    const double q = probs_aug_detached[j];
    if (q <= 0.0) continue;
    if (probs_orig[j] > kProbFloor) grad[j] += scale * (-q / probs_orig[j]);
  }
}

}  // namespace cores
