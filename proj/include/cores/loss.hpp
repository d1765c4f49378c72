#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cores {

// Floor applied inside every logarithm. Confident predictions drive the
// regularizer toward -inf; the floor caps magnitudes at ~27.6 nats without
// affecting comparisons at training precision.
inline constexpr double kProbFloor = 1e-12;

double floored_log(double p);

// Class marginal of the noisy labels, counted once from the full training
// set and held fixed for the whole run.
struct NoisyPrior {
  std::vector<double> probs;

  static NoisyPrior from_labels(const std::vector<int>& noisy_labels, int num_classes);
  static NoisyPrior uniform(int num_classes);
  void validate() const;
};

// Regularizer weight schedule: zero during warmup, linear to beta_max over
// the ramp, flat thereafter.
struct BetaSchedule {
  std::size_t warmup_epochs = 5;
  std::size_t ramp_epochs = 15;
  double beta_max = 2.0;
};

double beta_at(const BetaSchedule& schedule, std::size_t epoch);

// -ln(max(probs[label], floor)).
double cross_entropy(std::span<const double> probs, int label);

// beta * sum_j prior_j * ln(max(probs[j], floor)). Non-positive; minimized
// by confident (one-hot) predictions.
double cr_term(std::span<const double> probs, const NoisyPrior& prior, double beta);

// Per-sample selection threshold: mean cross-entropy over all K candidate
// labels plus the regularizer at the same prediction.
double sieve_threshold(std::span<const double> probs, const NoisyPrior& prior, double beta);

struct SieveDecision {
  bool keep = false;     // true: treated as clean this round
  double margin = 0.0;   // regularized loss minus threshold; keep iff < 0
};

// keep = 1 iff cross_entropy + cr_term < sieve_threshold, strict. The
// regularizer cancels from both sides, so the rule reduces to comparing
// -ln p[label] with the mean of -ln p[y] over y; both forms are evaluated
// and must agree (std::logic_error otherwise). The mean is computed as
// label-loss plus mean difference so that exactly uniform predictions give
// margin exactly 0 and keep = false.
SieveDecision sieve_decision(std::span<const double> probs, int noisy_label,
                             const NoisyPrior& prior, double beta);

// The subtracted term of the peer loss: cross-entropy of one sample's
// prediction against another sample's label. Its expectation over labels
// drawn from the noisy prior equals -cr_term/beta.
double peer_loss(std::span<const double> probs, int peer_label);

// Entropy of the prediction, -sum_j p_j ln p_j (floored). Comparison
// baseline for the confidence regularizer.
double entropy_reg(std::span<const double> probs);

// KL(aug_snapshot || live) = sum_j q_j ln(q_j / p_j), floored. Gradients
// flow only through probs_orig; the snapshot argument is a constant.
double kl_consistency(std::span<const double> probs_orig,
                      std::span<const double> probs_aug_detached);

// Gradients in probability space (d loss / d probs), accumulated into grad
// scaled by `scale`. Entries at or below the floor get zero gradient,
// matching the floored forward values.
void add_cross_entropy_grad(std::span<const double> probs, int label, double scale,
                            std::span<double> grad);
void add_cr_grad(std::span<const double> probs, const NoisyPrior& prior, double beta,
                 double scale, std::span<double> grad);
void add_entropy_reg_grad(std::span<const double> probs, double scale,
                          std::span<double> grad);
void add_kl_consistency_grad(std::span<const double> probs_orig,
                             std::span<const double> probs_aug_detached, double scale,
                             std::span<double> grad);

}  // namespace cores
