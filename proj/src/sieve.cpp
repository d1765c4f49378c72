#include "cores/sieve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cores/errors.hpp"
#include "cores/metrics.hpp"

namespace cores {

SieveState SieveState::initial(std::size_t num_samples) {
  SieveState state;
  state.v.assign(num_samples, 1);
  state.thresholds.assign(num_samples, 0.0);
  state.margins.assign(num_samples, 0.0);
  return state;
}

std::size_t SieveState::num_selected() const {
  std::size_t count = 0;
  for (std::uint8_t flag : v) count += flag;
  return count;
}

double regularized_epoch(Classifier& model, const LabeledDataset& data,
                         const std::vector<std::uint8_t>& v, const NoisyPrior& prior,
                         double beta, const OptimizerConfig& opt, std::size_t epoch,
                         std::vector<double>& velocity, Rng& shuffle_rng,
                         bool normalize_by_selected) {
  if (v.size() != data.num_samples)
    throw std::invalid_argument("regularized_epoch: flag vector length mismatch");
  const std::vector<std::size_t> order = shuffle_rng.permutation(data.num_samples);

  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  std::vector<std::span<const double>> xs;
  std::vector<std::vector<double>> prob_grads;

  for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
    const std::size_t end = std::min(order.size(), start + opt.batch_size);
    xs.clear();
    prob_grads.clear();
    for (std::size_t b = start; b < end; ++b) {
      const std::size_t n = order[b];
      if (!v[n]) continue;  // sieved out: zero gradient, no loss
      const auto x = data.sample(n);
      const auto probs = model.forward(x);
      const double sample_loss =
          cross_entropy(probs, data.noisy_labels[n]) + cr_term(probs, prior, beta);
      if (!std::isfinite(sample_loss))
        throw TrainingDivergedError("non-finite training loss");
      loss_sum += sample_loss;
      ++loss_count;
      std::vector<double> g(probs.size(), 0.0);
      add_cross_entropy_grad(probs, data.noisy_labels[n], 1.0, g);
      add_cr_grad(probs, prior, beta, 1.0, g);
      xs.push_back(x);
      prob_grads.push_back(std::move(g));
    }
    if (xs.empty()) continue;
    const double norm = normalize_by_selected ? static_cast<double>(xs.size())
                                              : static_cast<double>(end - start);
    for (auto& g : prob_grads)
      for (double& entry : g) entry /= norm;
    const std::vector<double> grad = model.backward(xs, prob_grads);
    sgd_step(model, grad, opt, velocity, epoch);
  }
  return loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
}

void sieve_epoch(const Classifier& model, const LabeledDataset& data,
                 const NoisyPrior& prior, double beta, SieveState& state) {
  const std::size_t n_samples = data.num_samples;
  state.v.assign(n_samples, 0);
  state.thresholds.assign(n_samples, 0.0);
  state.margins.assign(n_samples, 0.0);
  state.beta = beta;
  const double uniform = 1.0 / data.num_classes;
  for (std::size_t n = 0; n < n_samples; ++n) {
    const auto probs = model.forward(data.sample(n));
    const SieveDecision decision = sieve_decision(probs, data.noisy_labels[n], prior, beta);
    state.v[n] = decision.keep ? 1 : 0;
    state.margins[n] = decision.margin;
    state.thresholds[n] = sieve_threshold(probs, prior, beta);
    if (probs[data.noisy_labels[n]] > uniform && !decision.keep)
      throw std::logic_error("sieve dropped a sample predicted better than random");
  }
}

RunResult run_cores(const LabeledDataset& train, const LabeledDataset* test,
                    const TrainPlan& plan) {
  train.validate();
  plan.opt.validate();

  Classifier model = plan.arch == Arch::linear
                         ? Classifier::make_linear(train.dim, train.num_classes)
                         : Classifier::make_mlp(train.dim, train.num_classes,
                                                plan.hidden_width,
                                                mix_seed(plan.train_seed, 0xA001));
  const NoisyPrior prior = NoisyPrior::from_labels(train.noisy_labels, train.num_classes);
  SieveState state = SieveState::initial(train.num_samples);
  std::vector<double> velocity;
  Rng shuffle_rng(mix_seed(plan.train_seed, 0xA002));

  RunResult result{std::move(model), std::move(state), {}};
  for (std::size_t epoch = 0; epoch < plan.opt.epochs; ++epoch) {
    const double beta = beta_at(plan.schedule, epoch);
    const double train_loss =
        regularized_epoch(result.model, train, result.final_state.v, prior, beta,
                          plan.opt, epoch, velocity, shuffle_rng,
                          plan.normalize_by_selected);
    if (epoch >= plan.sieve_start_epoch)
      sieve_epoch(result.model, train, prior, beta, result.final_state);
    result.final_state.epoch = epoch;
    result.final_state.beta = beta;

    const SieveReport rep =
        sieve_report(result.final_state.v, train.clean_labels, train.noisy_labels);
    EpochRow row;
    row.epoch = epoch;
    row.beta = beta;
    row.num_selected = rep.num_selected;
    row.precision = rep.precision;
    row.recall = rep.recall;
    row.f_score = rep.f_score;
    row.train_loss = train_loss;
    row.test_accuracy = test_accuracy(result.model, test ? *test : train);
    result.per_epoch.push_back(row);
  }
  return result;
}

}  // namespace cores
