#include "cores/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "cores/errors.hpp"
#include "cores/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace cores {

const char* arch_name(Arch arch) { return arch == Arch::linear ? "linear" : "mlp"; }

Arch arch_from_name(const std::string& name) {
  if (name == "linear") return Arch::linear;
  if (name == "mlp") return Arch::mlp;
  throw std::invalid_argument("unknown architecture: " + name);
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("optimizer.learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw std::invalid_argument("optimizer.momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0))
    throw std::invalid_argument("optimizer.weight_decay must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("optimizer.batch_size must be at least 1");
  if (epochs < 1) throw std::invalid_argument("optimizer.epochs must be at least 1");
  if (!(lr_decay_factor > 0.0))
    throw std::invalid_argument("optimizer.lr_decay_factor must be positive");
}

double lr_at(const OptimizerConfig& cfg, std::size_t epoch) {
  return epoch >= cfg.lr_decay_epoch ? cfg.learning_rate * cfg.lr_decay_factor
                                     : cfg.learning_rate;
}

Classifier Classifier::make_linear(std::size_t input_dim, int num_classes) {
  if (input_dim < 1 || num_classes < 2)
    throw std::invalid_argument("classifier: bad shape");
  Classifier m;
  m.arch_ = Arch::linear;
  m.input_dim_ = input_dim;
  m.num_classes_ = num_classes;
  m.params_.assign(input_dim * num_classes + num_classes, 0.0);
  return m;
}

Classifier Classifier::make_mlp(std::size_t input_dim, int num_classes,
                                std::size_t hidden_width, std::uint64_t init_seed) {
  if (input_dim < 1 || num_classes < 2 || hidden_width < 1)
    throw std::invalid_argument("classifier: bad shape");
  Classifier m;
  m.arch_ = Arch::mlp;
  m.input_dim_ = input_dim;
  m.num_classes_ = num_classes;
  m.hidden_width_ = hidden_width;
  const std::size_t k = static_cast<std::size_t>(num_classes);
  m.params_.assign(input_dim * hidden_width + hidden_width + hidden_width * k + k, 0.0);
  // Hidden weights Normal(0, 2/fan_in), drawn row-major; the output layer
  // stays zero so the first forward pass is exactly uniform.
  Rng rng(init_seed);
  const double stddev = std::sqrt(2.0 / static_cast<double>(input_dim));
  for (std::size_t i = 0; i < input_dim * hidden_width; ++i)
    m.params_[i] = rng.normal(0.0, stddev);
  return m;
}

namespace {

// Shared softmax with max shift.
void softmax_inplace(std::vector<double>& logits) {
  double max_logit = logits[0];
  for (double z : logits) max_logit = std::max(max_logit, z);
  double denom = 0.0;
  for (double& z : logits) {
    z = std::exp(z - max_logit);
    denom += z;
  }
  for (double& z : logits) z /= denom;
}

}  // namespace

std::vector<double> Classifier::forward(std::span<const double> x) const {
  if (x.size() != input_dim_) throw std::invalid_argument("forward: dimension mismatch");
  const std::size_t k = static_cast<std::size_t>(num_classes_);
  std::vector<double> logits(k, 0.0);
  if (arch_ == Arch::linear) {
    const double* w = params_.data();
    const double* b = w + input_dim_ * k;
    for (std::size_t d = 0; d < input_dim_; ++d)
      for (std::size_t c = 0; c < k; ++c) logits[c] += x[d] * w[d * k + c];
    for (std::size_t c = 0; c < k; ++c) logits[c] += b[c];
  } else {
    const std::size_t h = hidden_width_;
    const double* w1 = params_.data();
    const double* b1 = w1 + input_dim_ * h;
    const double* w2 = b1 + h;
    const double* b2 = w2 + h * k;
    std::vector<double> hidden(h, 0.0);
    for (std::size_t d = 0; d < input_dim_; ++d)
      for (std::size_t j = 0; j < h; ++j) hidden[j] += x[d] * w1[d * h + j];
    for (std::size_t j = 0; j < h; ++j) hidden[j] = std::max(hidden[j] + b1[j], 0.0);
    for (std::size_t j = 0; j < h; ++j)
      for (std::size_t c = 0; c < k; ++c) logits[c] += hidden[j] * w2[j * k + c];
    for (std::size_t c = 0; c < k; ++c) logits[c] += b2[c];
  }
  softmax_inplace(logits);
  return logits;
}

std::vector<double> Classifier::backward(
    std::span<const std::span<const double>> xs,
    std::span<const std::vector<double>> prob_grads) const {
  if (xs.size() != prob_grads.size())
    throw std::invalid_argument("backward: batch size mismatch");
  const std::size_t k = static_cast<std::size_t>(num_classes_);
  std::vector<double> grad(params_.size(), 0.0);
  std::vector<double> dz(k);

  for (std::size_t s = 0; s < xs.size(); ++s) {
    const auto& x = xs[s];
    const auto& g = prob_grads[s];
    if (x.size() != input_dim_ || g.size() != k)
      throw std::invalid_argument("backward: dimension mismatch");
    for (double v : g)
      if (!std::isfinite(v)) throw std::invalid_argument("backward: non-finite loss gradient");

    if (arch_ == Arch::linear) {
      const std::vector<double> p = forward(x);
      double dot = 0.0;
      for (std::size_t c = 0; c < k; ++c) dot += g[c] * p[c];
      for (std::size_t c = 0; c < k; ++c) dz[c] = p[c] * (g[c] - dot);
      double* gw = grad.data();
      double* gb = gw + input_dim_ * k;
      for (std::size_t d = 0; d < input_dim_; ++d)
        for (std::size_t c = 0; c < k; ++c) gw[d * k + c] += x[d] * dz[c];
      for (std::size_t c = 0; c < k; ++c) gb[c] += dz[c];
    } else {
      const std::size_t h = hidden_width_;
      const double* w1 = params_.data();
      const double* b1 = w1 + input_dim_ * h;
      const double* w2 = b1 + h;
      // Recompute the forward pass keeping the hidden activations.
      std::vector<double> pre(h, 0.0);
      for (std::size_t d = 0; d < input_dim_; ++d)
        for (std::size_t j = 0; j < h; ++j) pre[j] += x[d] * w1[d * h + j];
      std::vector<double> hidden(h);
      for (std::size_t j = 0; j < h; ++j) hidden[j] = std::max(pre[j] + b1[j], 0.0);
      std::vector<double> logits(k, 0.0);
      for (std::size_t j = 0; j < h; ++j)
        for (std::size_t c = 0; c < k; ++c) logits[c] += hidden[j] * w2[j * k + c];
      const double* b2 = w2 + h * k;
      for (std::size_t c = 0; c < k; ++c) logits[c] += b2[c];
      std::vector<double> p = logits;
      softmax_inplace(p);

      double dot = 0.0;
      for (std::size_t c = 0; c < k; ++c) dot += g[c] * p[c];
      for (std::size_t c = 0; c < k; ++c) dz[c] = p[c] * (g[c] - dot);

      double* gw1 = grad.data();
      double* gb1 = gw1 + input_dim_ * h;
      double* gw2 = gb1 + h;
      double* gb2 = gw2 + h * k;
      std::vector<double> dh(h, 0.0);
      for (std::size_t j = 0; j < h; ++j) {
        for (std::size_t c = 0; c < k; ++c) {
          gw2[j * k + c] += hidden[j] * dz[c];
          dh[j] += w2[j * k + c] * dz[c];
        }
        if (hidden[j] <= 0.0) dh[j] = 0.0;  // ReLU gate (0 at the kink)
      }
      for (std::size_t c = 0; c < k; ++c) gb2[c] += dz[c];
      for (std::size_t d = 0; d < input_dim_; ++d)
        for (std::size_t j = 0; j < h; ++j) gw1[d * h + j] += x[d] * dh[j];
      for (std::size_t j = 0; j < h; ++j) gb1[j] += dh[j];
    }
  }
  return grad;
}

void sgd_step(Classifier& model, std::span<const double> grad,
              const OptimizerConfig& cfg, std::vector<double>& velocity,
              std::size_t epoch) {
  auto params = model.parameters();
  if (grad.size() != params.size())
    throw std::invalid_argument("sgd_step: gradient size mismatch");
  if (velocity.empty()) velocity.assign(params.size(), 0.0);
  if (velocity.size() != params.size())
    throw std::invalid_argument("sgd_step: velocity size mismatch");
  for (double v : grad)
    if (!std::isfinite(v)) throw TrainingDivergedError("non-finite gradient");
  const double lr = lr_at(cfg, epoch);
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = cfg.momentum * velocity[i] + grad[i] + cfg.weight_decay * params[i];
    params[i] -= lr * velocity[i];
    if (!std::isfinite(params[i]))
      throw TrainingDivergedError("non-finite parameter after update");
  }
}

void save_checkpoint(const Classifier& model, std::size_t epoch, const std::string& path) {
  nlohmann::json header;
  header["arch"] = arch_name(model.arch());
  header["input_dim"] = model.input_dim();
  header["num_classes"] = model.num_classes();
  header["hidden_width"] = model.hidden_width();
  header["epoch"] = epoch;
  header["num_parameters"] = model.num_parameters();
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << header.dump() << "\n";
  const auto params = model.parameters();
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!out) throw IoError("write failed: " + path);
}

std::pair<Classifier, std::size_t> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) throw ParseError("missing checkpoint header: " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const std::exception& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what());
  }
  Classifier model = [&] {
    try {
      const Arch arch = arch_from_name(header.at("arch").get<std::string>());
      const auto input_dim = header.at("input_dim").get<std::size_t>();
      const auto num_classes = header.at("num_classes").get<int>();
      if (arch == Arch::linear) return Classifier::make_linear(input_dim, num_classes);
      return Classifier::make_mlp(input_dim, num_classes,
                                  header.at("hidden_width").get<std::size_t>(), 0);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad checkpoint header: ") + e.what());
    }
  }();
  auto params = model.parameters();
  in.read(reinterpret_cast<char*>(params.data()),
          static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(params.size() * sizeof(double)))
    throw ParseError("checkpoint truncated: " + path);
  return {std::move(model), header.value("epoch", std::size_t{0})};
}

}  // namespace cores
