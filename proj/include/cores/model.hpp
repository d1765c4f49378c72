#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cores {

enum class Arch { linear, mlp };

const char* arch_name(Arch arch);
Arch arch_from_name(const std::string& name);

// Mini-batch SGD with momentum and decoupled-from-nothing classic weight
// decay folded into the gradient. lr drops by decay_factor once, at
// decay_epoch.
struct OptimizerConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t batch_size = 64;
  std::size_t epochs = 50;
  std::size_t lr_decay_epoch = 25;
  double lr_decay_factor = 0.1;

  void validate() const;
};

double lr_at(const OptimizerConfig& cfg, std::size_t epoch);

// Softmax-linear or one-hidden-layer ReLU MLP over a flat parameter vector.
//
// Layouts (row-major):
//   linear: W (dim x K), b (K)
//   mlp:    W1 (dim x H), b1 (H), W2 (H x K), b2 (K)
//
// Initialization: hidden weights Normal(0, 2/fan_in), everything else zero.
// The zero output layer makes the initial prediction exactly uniform.
class Classifier {
 public:
  static Classifier make_linear(std::size_t input_dim, int num_classes);
  static Classifier make_mlp(std::size_t input_dim, int num_classes,
                             std::size_t hidden_width, std::uint64_t init_seed);

  // Max-shifted softmax over the logits; returns a length-K probability
  // vector summing to 1.
  std::vector<double> forward(std::span<const double> x) const;

  // Accumulates d loss / d theta for a batch, given per-sample gradients in
  // probability space. The chain rule through softmax uses
  // dz_k = p_k * (g_k - sum_j g_j p_j). No normalization is applied here;
  // callers scale the probability-space gradients.
  std::vector<double> backward(std::span<const std::span<const double>> xs,
                               std::span<const std::vector<double>> prob_grads) const;

  Arch arch() const { return arch_; }
  std::size_t input_dim() const { return input_dim_; }
  int num_classes() const { return num_classes_; }
  std::size_t hidden_width() const { return hidden_width_; }

  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  std::size_t num_parameters() const { return params_.size(); }

 private:
  Classifier() = default;

  Arch arch_ = Arch::linear;
  std::size_t input_dim_ = 0;
  int num_classes_ = 0;
  std::size_t hidden_width_ = 0;
  std::vector<double> params_;
};

// velocity = momentum * velocity + grad + weight_decay * theta;
// theta -= lr_at(cfg, epoch) * velocity.
// Throws TrainingDivergedError on any non-finite gradient entry.
void sgd_step(Classifier& model, std::span<const double> grad,
              const OptimizerConfig& cfg, std::vector<double>& velocity,
              std::size_t epoch = 0);

// Checkpoint: one-line JSON header (architecture, dims, epoch), newline,
// then the raw little-endian 64-bit parameter array.
void save_checkpoint(const Classifier& model, std::size_t epoch, const std::string& path);
std::pair<Classifier, std::size_t> load_checkpoint(const std::string& path);

}  // namespace cores
