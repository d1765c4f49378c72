#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cores/consistency.hpp"
#include "cores/dataset.hpp"
#include "cores/sieve.hpp"

namespace cores {

// Full experiment description. Every field has a default; a config file
// only overrides what it names, and the resolved struct is echoed into the
// run report so a run can be replayed bit-identically.
struct RunConfig {
  // dataset: generated blobs unless dataset_file is set
  std::string dataset_file;
  std::string test_file;
  std::size_t blobs_samples = 5000;
  int blobs_classes = 4;
  std::size_t blobs_dim = 8;
  double blobs_separation = 4.0;
  std::size_t test_samples = 2000;

  // noise (applied only to generated data; files carry their own labels)
  NoiseKind noise_kind = NoiseKind::instance;
  double epsilon = 0.4;
  bool include_true_label = false;

  // model
  Arch arch = Arch::linear;
  std::size_t hidden_width = 32;

  // optimization and sieve schedule
  OptimizerConfig opt;
  BetaSchedule schedule;
  std::size_t sieve_start_epoch = 20;
  bool normalize_by_selected = true;

  // consistency phase
  bool consistency_enabled = false;
  std::size_t tau = 25;
  std::size_t consistency_epochs = 0;  // 0 -> opt.epochs - tau
  double aug_sigma_fraction = 0.1;
  double kl_weight = 1.0;

  // seeds, split so ablations can vary one factor at a time
  std::uint64_t data_seed = 0;
  std::uint64_t noise_seed = 0;
  std::uint64_t train_seed = 0;

  std::string output_dir = "out";

  void validate() const;  // std::invalid_argument naming the field
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);

struct FinalMetrics {
  double test_accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  std::size_t num_selected = 0;
};

struct RunReport {
  RunConfig config_echo;
  std::vector<EpochRow> per_epoch;
  FinalMetrics final;
  double wall_time_seconds = 0.0;
};

struct PreparedData {
  LabeledDataset train;
  std::optional<LabeledDataset> test;
  std::optional<NoiseSpec> noise;
};

// Generate-or-load plus noise application, fully determined by the config.
PreparedData prepare_data(const RunConfig& cfg);

// The whole pipeline. With write_outputs set, emits into cfg.output_dir:
// run_metrics.csv, sieve_flags.csv, loss_hist_epoch{T}.csv, report.json.
RunReport run_experiment(const RunConfig& cfg, bool write_outputs);

// Writes dataset.csv (+ noise_spec.json) into cfg.output_dir.
void cmd_generate(const RunConfig& cfg);

struct CompareReport {
  struct PerSeed {
    std::uint64_t seed = 0;
    double f_score_a = 0.0, f_score_b = 0.0;
    double accuracy_a = 0.0, accuracy_b = 0.0;
  };
  std::vector<PerSeed> per_seed;
  double mean_f_delta = 0.0;    // mean(B) - mean(A)
  double mean_acc_delta = 0.0;  // mean(B) - mean(A)
};

// Paired runs of two configs over a seed list; seed s offsets each config's
// data/noise/train seeds identically, so the arms stay paired.
CompareReport compare_runs(const RunConfig& a, const RunConfig& b,
                           const std::vector<std::uint64_t>& seeds);

std::string run_report_to_json(const RunReport& report);
std::string compare_report_to_json(const CompareReport& report);

// Serialization helpers shared by the CLI and tests.
std::string epoch_rows_to_csv(const std::vector<EpochRow>& rows, bool with_kl);
void save_sieve_flags_csv(const std::vector<std::uint8_t>& v, const std::string& path);

}  // namespace cores
