#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cores/dataset.hpp"
#include "cores/loss.hpp"
#include "cores/model.hpp"
#include "cores/sieve.hpp"

namespace cores {

// Gaussian feature jitter, the desk-scale stand-in for image augmentation.
struct AugmentationSpec {
  double sigma_fraction = 0.1;  // jitter std as a fraction of per-dim std
  std::uint64_t seed = 0;
};

// Per-dimension standard deviation over the whole training set.
std::vector<double> feature_stds(const LabeledDataset& data);

// x + Normal(0, (sigma_fraction * dim_std)^2) per dimension. Seeded by
// (spec.seed, epoch, index) so repeated calls are identical.
std::vector<double> augment(std::span<const double> x, const AugmentationSpec& spec,
                            std::span<const double> dim_stds, std::size_t epoch,
                            std::size_t index);

struct ConsistencyEpochStats {
  double ce_loss = 0.0;   // mean CE part over all samples seen
  double kl_loss = 0.0;   // mean KL part over all samples seen
  double total_loss = 0.0;
};

// Indirection for reading a sample's training label; tests substitute an
// auditing provider to prove labels of sieved-out samples are never read.
using LabelProvider = std::function<int(std::size_t)>;

// One epoch of the post-sieve phase: CE on kept samples, gradient-stopped
// KL(snapshot(x_aug) || f(x)) on sieved-out samples whose labels are never
// read. The snapshot is taken once at epoch start. Throws
// TrainingDivergedError on non-finite loss.
ConsistencyEpochStats consistency_epoch(Classifier& model, const LabeledDataset& data,
                                        const std::vector<std::uint8_t>& v,
                                        const AugmentationSpec& spec,
                                        std::span<const double> dim_stds,
                                        const OptimizerConfig& opt, std::size_t epoch,
                                        double kl_weight, std::vector<double>& velocity,
                                        Rng& shuffle_rng, const LabelProvider& label_of);

struct StarPlan {
  TrainPlan base;
  std::size_t tau = 25;            // epoch whose sieve split is frozen
  std::size_t consistency_epochs = 0;  // 0 -> base.opt.epochs - tau
  AugmentationSpec aug;
  double kl_weight = 1.0;
};

// Sieve phase up to tau, then consistency training on the frozen split for
// the remaining budget. Momentum velocity resets at the phase switch; the
// learning-rate schedule keeps counting global epochs.
RunResult run_cores_star(const LabeledDataset& train, const LabeledDataset* test,
                         const StarPlan& plan);

}  // namespace cores
