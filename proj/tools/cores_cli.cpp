// cores: config-driven CLI around the sieve pipeline.
//
// Subcommands:
//   generate  write a noisy dataset (+ clean test set, noise spec) to disk
//   train     run the full pipeline, emit per-epoch CSV + report.json
//   oracle    evaluate the exact decomposition and beta bounds on a world
//   compare   paired A/B runs over a seed list
//
// Errors leave a one-line JSON object on stderr and a dedicated exit code:
//   2 invalid config/arguments, 3 training diverged, 4 io failure,
//   5 decomposition mismatch, 6 parse failure.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cores/errors.hpp"
#include "cores/runner.hpp"
#include "cores/theory.hpp"

namespace {

int log_level() {
  const char* env = std::getenv("CORES_LOG");
  if (!env) return 1;
  try {
    return std::stoi(env);
  } catch (...) {
    return 1;
  }
}

void log_line(int level, const std::string& msg) {
  if (log_level() >= level) std::fprintf(stderr, "%s\n", msg.c_str());
}

[[noreturn]] void fail(int code, const std::string& kind, const std::string& what) {
  nlohmann::json j = {{"error", kind}, {"message", what}};
  std::fprintf(stderr, "%s\n", j.dump().c_str());
  std::exit(code);
}

struct SeedOverrides {
  std::vector<std::string> raw;
  void apply(cores::RunConfig& cfg) const {
    for (const auto& kv : raw) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--seed-override wants key=value, got: " + kv);
      const std::string key = kv.substr(0, eq);
      std::uint64_t value = 0;
      try {
        value = std::stoull(kv.substr(eq + 1));
      } catch (...) {
        throw std::invalid_argument("--seed-override value is not an integer: " + kv);
      }
      if (key == "data")
        cfg.data_seed = value;
      else if (key == "noise")
        cfg.noise_seed = value;
      else if (key == "train")
        cfg.train_seed = value;
      else
        throw std::invalid_argument("--seed-override key must be data, noise or train: " + kv);
    }
  }
};

cores::RunConfig resolve_config(const std::string& config_path, const SeedOverrides& seeds,
                                const std::string& out_dir) {
  cores::RunConfig cfg;
  if (!config_path.empty()) cfg = cores::load_run_config(config_path);
  seeds.apply(cfg);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  cfg.validate();
  return cfg;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"confidence-regularized sample sieve"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  SeedOverrides seeds;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--seed-override", seeds.raw,
                    "data=N | noise=N | train=N (repeatable)");
  };

  CLI::App* generate = app.add_subcommand("generate", "write a noisy dataset to disk");
  add_common(generate);

  CLI::App* train = app.add_subcommand("train", "run the sieve pipeline");
  add_common(train);

  std::string world_path;
  double beta = 1.0;
  CLI::App* oracle =
      app.add_subcommand("oracle", "exact decomposition and beta bounds on a world");
  oracle->add_option("--world", world_path, "world JSON file")->required();
  oracle->add_option("--beta", beta, "regularizer weight for the decomposition");

  std::string config_b_path;
  std::vector<std::uint64_t> compare_seeds{0, 1, 2, 3, 4};
  CLI::App* compare = app.add_subcommand("compare", "paired A/B runs over seeds");
  add_common(compare);
  compare->add_option("--config-b", config_b_path, "JSON config for arm B")->required();
  compare->add_option("--seeds", compare_seeds, "seed offsets for the paired runs");

  CLI11_PARSE(app, argc, argv);

  if (generate->parsed()) {
    cores::RunConfig cfg = resolve_config(config_path, seeds, out_dir);
    cores::cmd_generate(cfg);
    log_line(1, "generated dataset in " + cfg.output_dir);
    return 0;
  }

  if (train->parsed()) {
    cores::RunConfig cfg = resolve_config(config_path, seeds, out_dir);
    log_line(2, "resolved config:\n" + cores::run_config_to_json(cfg));
    const cores::RunReport report = cores::run_experiment(cfg, true);
    nlohmann::json summary = {
        {"test_accuracy", report.final.test_accuracy},
        {"f_score", report.final.f_score},
        {"num_selected", report.final.num_selected},
        {"wall_time_seconds", report.wall_time_seconds},
        {"output_dir", cfg.output_dir},
    };
    std::printf("%s\n", summary.dump(2).c_str());
    return 0;
  }

  if (oracle->parsed()) {
    const cores::DiscreteWorld world = cores::load_world_json(world_path);
    const auto table = cores::one_hot_table(cores::bayes_labels(world), world.num_classes);
    const cores::DecoupledTerms dec = cores::decouple(world, table, beta);
    const cores::BetaInterval interval = cores::beta_interval(world);
    const cores::Assumption2Result a2 = cores::assumption2_check(world);
    nlohmann::json j = {
        {"world_hash", cores::world_hash(world)},
        {"beta", beta},
        {"lhs", dec.lhs},
        {"term1", dec.term1},
        {"term2", dec.term2},
        {"term3", dec.term3},
        {"beta_lower", interval.lower},
        {"beta_upper", std::isinf(interval.upper) ? nlohmann::json("inf")
                                                  : nlohmann::json(interval.upper)},
        {"feasible", interval.feasible},
        {"assumption2_ok", a2.holds},
    };
    nlohmann::json witnesses = nlohmann::json::array();
    for (const auto& v : a2.violations)
      witnesses.push_back({{"atom", v.atom}, {"i", v.i}, {"j", v.j}});
    j["assumption2_violations"] = witnesses;
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
  }

  if (compare->parsed()) {
    if (config_path.empty())
      throw std::invalid_argument("compare needs --config for arm A");
    cores::RunConfig a = cores::load_run_config(config_path);
    cores::RunConfig b = cores::load_run_config(config_b_path);
    seeds.apply(a);
    seeds.apply(b);
    a.validate();
    b.validate();
    const cores::CompareReport report = cores::compare_runs(a, b, compare_seeds);
    std::printf("%s\n", cores::compare_report_to_json(report).c_str());
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const cores::TrainingDivergedError& e) {
    fail(3, "training_diverged", e.what());
  } catch (const cores::DecouplingMismatchError& e) {
    fail(5, "decoupling_mismatch", e.what());
  } catch (const cores::ParseError& e) {
    fail(6, "parse_error", e.what());
  } catch (const cores::IoError& e) {
    fail(4, "io_error", e.what());
  } catch (const std::invalid_argument& e) {
    fail(2, "invalid_argument", e.what());
  } catch (const std::exception& e) {
    fail(2, "error", e.what());
  }
}
