#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cores/dataset.hpp"
#include "cores/loss.hpp"
#include "cores/model.hpp"
#include "cores/rng.hpp"

namespace cores {

// Per-epoch selection state. v starts all-ones; after sieving activates it
// is recomputed from scratch each epoch from the current model snapshot.
struct SieveState {
  std::vector<std::uint8_t> v;   // 1 = treated as clean
  std::size_t epoch = 0;
  double beta = 0.0;
  std::vector<double> thresholds;  // per-sample alpha
  std::vector<double> margins;     // (ce + cr) - alpha; kept iff < 0

  static SieveState initial(std::size_t num_samples);
  std::size_t num_selected() const;
};

// One metric row per epoch. kl columns are populated only by the
// consistency phase.
struct EpochRow {
  std::size_t epoch = 0;
  double beta = 0.0;
  std::size_t num_selected = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  double ce_loss = 0.0;
  double kl_loss = 0.0;
  bool has_kl = false;
};

// One epoch of mini-batch SGD on sum_n v_n [ce(f(x_n), y~_n) + cr(f(x_n))].
// Deselected samples contribute zero gradient. Batch gradients are
// normalized by the number of selected samples in the batch when
// normalize_by_selected is set, by the full batch size otherwise.
// Returns the mean regularized loss over selected samples (0 when nothing
// is selected). Throws TrainingDivergedError on non-finite loss.
double regularized_epoch(Classifier& model, const LabeledDataset& data,
                         const std::vector<std::uint8_t>& v, const NoisyPrior& prior,
                         double beta, const OptimizerConfig& opt, std::size_t epoch,
                         std::vector<double>& velocity, Rng& shuffle_rng,
                         bool normalize_by_selected = true);

// Recomputes thresholds, margins and v for every sample from the current
// (gradient-stopped) model. Also enforces the retention guarantee: any
// sample with f[y~] > 1/K must be kept; a violation throws
// std::logic_error since it can only mean an implementation bug.
void sieve_epoch(const Classifier& model, const LabeledDataset& data,
                 const NoisyPrior& prior, double beta, SieveState& state);

// Everything run_cores needs beyond the data.
struct TrainPlan {
  Arch arch = Arch::linear;
  std::size_t hidden_width = 32;
  OptimizerConfig opt;
  BetaSchedule schedule;
  std::size_t sieve_start_epoch = 20;  // first epoch that ends with a sieve pass
  bool normalize_by_selected = true;
  std::uint64_t train_seed = 0;
};

struct RunResult {
  Classifier model;
  SieveState final_state;
  std::vector<EpochRow> per_epoch;
};

// Full CORES^2 loop: warmup (beta 0, all selected), beta ramp, then sieving
// every epoch after activation. test may be null; accuracy then falls back
// to clean-label accuracy on the training features.
RunResult run_cores(const LabeledDataset& train, const LabeledDataset* test,
                    const TrainPlan& plan);

}  // namespace cores
