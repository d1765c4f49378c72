#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "cores/errors.hpp"
#include "cores/loss.hpp"
#include "cores/model.hpp"
#include "cores/rng.hpp"

using namespace cores;

namespace {

// Regularized batch loss evaluated purely through forward passes, so the
// finite-difference probes exercise the full parameter -> loss path.
double batch_loss(const Classifier& model, const std::vector<std::vector<double>>& xs,
                  const std::vector<int>& labels, const NoisyPrior& prior, double beta) {
  double total = 0.0;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    const auto p = model.forward(xs[n]);
    total += cross_entropy(p, labels[n]) + cr_term(p, prior, beta);
  }
  return total;
}

std::vector<double> analytic_grad(const Classifier& model,
                                  const std::vector<std::vector<double>>& xs,
                                  const std::vector<int>& labels,
                                  const NoisyPrior& prior, double beta) {
  std::vector<std::span<const double>> views;
  std::vector<std::vector<double>> prob_grads;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    views.emplace_back(xs[n]);
    std::vector<double> g(model.num_classes(), 0.0);
    const auto p = model.forward(xs[n]);
    add_cross_entropy_grad(p, labels[n], 1.0, g);
    add_cr_grad(p, prior, beta, 1.0, g);
    prob_grads.push_back(std::move(g));
  }
  return model.backward(views, prob_grads);
}

void check_gradients(Classifier& model, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t dim = model.input_dim();
  const int k = model.num_classes();

  std::vector<std::vector<double>> xs;
  std::vector<int> labels;
  for (int n = 0; n < 7; ++n) {
    std::vector<double> x(dim);
    for (auto& v : x) v = rng.normal();
    xs.push_back(std::move(x));
    labels.push_back(static_cast<int>(rng.uniform_index(k)));
  }
  NoisyPrior prior = NoisyPrior::uniform(k);
  const double beta = 0.7;

  // Move off the blank init so ReLUs and probabilities are in general
  // position.
  auto params = model.parameters();
  for (auto& w : params) w += 0.05 * rng.normal();

  const auto grad = analytic_grad(model, xs, labels, prior, beta);
  REQUIRE(grad.size() == model.num_parameters());

  const double h = 1e-5;
  int checked = 0;
  for (int probe = 0; probe < 200; ++probe) {
    const std::size_t i = rng.uniform_index(model.num_parameters());
    const double saved = params[i];
    params[i] = saved + h;
    const double up = batch_loss(model, xs, labels, prior, beta);
    params[i] = saved - h;
    const double down = batch_loss(model, xs, labels, prior, beta);
    params[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
    CHECK(std::abs(grad[i] - fd) / denom <= 1e-4);
    ++checked;
  }
  CHECK(checked == 200);
}

}  // namespace

TEST_CASE("linear gradients match central finite differences") {
  auto model = Classifier::make_linear(6, 4);
  check_gradients(model, 101);
}

TEST_CASE("mlp gradients match central finite differences") {
  auto model = Classifier::make_mlp(5, 3, 16, 7);
  check_gradients(model, 202);
}

TEST_CASE("fresh models predict exactly uniformly") {
  Rng rng(11);
  auto linear = Classifier::make_linear(8, 5);
  auto mlp = Classifier::make_mlp(8, 5, 32, 99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(8);
    for (auto& v : x) v = 3.0 * rng.normal();
    for (const auto* m : {&linear, &mlp}) {
      const auto p = m->forward(x);
      for (double v : p) CHECK(v == 0.2);
    }
  }
}

TEST_CASE("mlp init is seed-deterministic") {
  auto a = Classifier::make_mlp(4, 3, 8, 42);
  auto b = Classifier::make_mlp(4, 3, 8, 42);
  auto c = Classifier::make_mlp(4, 3, 8, 43);
  CHECK(std::equal(a.parameters().begin(), a.parameters().end(),
                   b.parameters().begin()));
  CHECK(!std::equal(a.parameters().begin(), a.parameters().end(),
                    c.parameters().begin()));
}

TEST_CASE("sgd step follows the momentum update rule") {
  auto model = Classifier::make_linear(2, 2);
  auto params = model.parameters();
  params[0] = 1.0;
  params[1] = -2.0;

  OptimizerConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.01;
  std::vector<double> grad(model.num_parameters(), 0.0);
  grad[0] = 0.5;

  std::vector<double> velocity;
  sgd_step(model, grad, cfg, velocity, 0);
  // v = 0.5 + 0.01 * 1.0 = 0.51; theta = 1.0 - 0.1 * 0.51
  CHECK(params[0] == doctest::Approx(1.0 - 0.1 * 0.51).epsilon(1e-15));
  // v = 0 + 0.01 * (-2.0) = -0.02; theta = -2.0 + 0.1 * 0.02
  CHECK(params[1] == doctest::Approx(-2.0 + 0.1 * 0.02).epsilon(1e-15));

  const double p0 = params[0];
  const double v0 = velocity[0];
  sgd_step(model, grad, cfg, velocity, 0);
  CHECK(velocity[0] == doctest::Approx(0.9 * v0 + 0.5 + 0.01 * p0).epsilon(1e-15));
}

TEST_CASE("learning rate decays once at the configured epoch") {
  OptimizerConfig cfg;
  cfg.learning_rate = 0.2;
  cfg.lr_decay_epoch = 10;
  cfg.lr_decay_factor = 0.1;
  CHECK(lr_at(cfg, 0) == 0.2);
  CHECK(lr_at(cfg, 9) == 0.2);
  CHECK(lr_at(cfg, 10) == doctest::Approx(0.02));
  CHECK(lr_at(cfg, 500) == doctest::Approx(0.02));
}

TEST_CASE("non-finite gradients throw") {
  auto model = Classifier::make_linear(2, 2);
  OptimizerConfig cfg;
  std::vector<double> velocity;
  std::vector<double> grad(model.num_parameters(), 0.0);
  grad[1] = std::nan("");
  CHECK_THROWS_AS(sgd_step(model, grad, cfg, velocity, 0), TrainingDivergedError);
}

TEST_CASE("checkpoints round-trip bit-identically") {
  auto model = Classifier::make_mlp(6, 4, 12, 31);
  Rng rng(32);
  for (auto& w : model.parameters()) w = rng.normal();

  const auto path =
      (std::filesystem::temp_directory_path() / "cores_test_model.ckpt").string();
  save_checkpoint(model, 17, path);
  const auto [back, epoch] = load_checkpoint(path);
  CHECK(epoch == 17);
  CHECK(back.arch() == model.arch());
  CHECK(back.input_dim() == model.input_dim());
  CHECK(back.num_classes() == model.num_classes());
  CHECK(back.hidden_width() == model.hidden_width());
  REQUIRE(back.num_parameters() == model.num_parameters());
  for (std::size_t i = 0; i < model.num_parameters(); ++i)
    CHECK(back.parameters()[i] == model.parameters()[i]);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_checkpoint(path + ".missing"), IoError);
}

TEST_CASE("truncated checkpoints are rejected") {
  auto model = Classifier::make_linear(3, 3);
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "cores_test_trunc.ckpt").string();
  save_checkpoint(model, 1, path);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 8);
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);
  std::filesystem::remove(path);
}
