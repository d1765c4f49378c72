#include "cores/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "cores/datagen.hpp"
#include "cores/errors.hpp"
#include "cores/metrics.hpp"

namespace cores {

namespace {

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json config_to_json_obj(const RunConfig& cfg) {
  nlohmann::json j;
  j["dataset"] = {
      {"file", cfg.dataset_file},
      {"test_file", cfg.test_file},
      {"blobs_samples", cfg.blobs_samples},
      {"blobs_classes", cfg.blobs_classes},
      {"blobs_dim", cfg.blobs_dim},
      {"blobs_separation", cfg.blobs_separation},
      {"test_samples", cfg.test_samples},
  };
  j["noise"] = {
      {"kind", noise_kind_name(cfg.noise_kind)},
      {"epsilon", cfg.epsilon},
      {"include_true_label", cfg.include_true_label},
  };
  j["model"] = {
      {"arch", arch_name(cfg.arch)},
      {"hidden_width", cfg.hidden_width},
  };
  j["optimizer"] = {
      {"learning_rate", cfg.opt.learning_rate},
      {"momentum", cfg.opt.momentum},
      {"weight_decay", cfg.opt.weight_decay},
      {"batch_size", cfg.opt.batch_size},
      {"epochs", cfg.opt.epochs},
      {"lr_decay_epoch", cfg.opt.lr_decay_epoch},
      {"lr_decay_factor", cfg.opt.lr_decay_factor},
  };
  j["schedule"] = {
      {"warmup_epochs", cfg.schedule.warmup_epochs},
      {"ramp_epochs", cfg.schedule.ramp_epochs},
      {"beta_max", cfg.schedule.beta_max},
      {"sieve_start_epoch", cfg.sieve_start_epoch},
      {"normalize_by_selected", cfg.normalize_by_selected},
  };
  j["consistency"] = {
      {"enabled", cfg.consistency_enabled},
      {"tau", cfg.tau},
      {"epochs", cfg.consistency_epochs},
      {"sigma_fraction", cfg.aug_sigma_fraction},
      {"kl_weight", cfg.kl_weight},
  };
  j["seeds"] = {
      {"data", cfg.data_seed},
      {"noise", cfg.noise_seed},
      {"train", cfg.train_seed},
  };
  j["output_dir"] = cfg.output_dir;
  return j;
}

RunConfig config_from_json_obj(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      cfg.dataset_file = d.value("file", cfg.dataset_file);
      cfg.test_file = d.value("test_file", cfg.test_file);
      cfg.blobs_samples = d.value("blobs_samples", cfg.blobs_samples);
      cfg.blobs_classes = d.value("blobs_classes", cfg.blobs_classes);
      cfg.blobs_dim = d.value("blobs_dim", cfg.blobs_dim);
      cfg.blobs_separation = d.value("blobs_separation", cfg.blobs_separation);
      cfg.test_samples = d.value("test_samples", cfg.test_samples);
    }
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      if (n.contains("kind")) cfg.noise_kind = noise_kind_from_name(n["kind"].get<std::string>());
      cfg.epsilon = n.value("epsilon", cfg.epsilon);
      cfg.include_true_label = n.value("include_true_label", cfg.include_true_label);
    }
    if (j.contains("model")) {
      const auto& m = j["model"];
      if (m.contains("arch")) cfg.arch = arch_from_name(m["arch"].get<std::string>());
      cfg.hidden_width = m.value("hidden_width", cfg.hidden_width);
    }
    if (j.contains("optimizer")) {
      const auto& o = j["optimizer"];
      cfg.opt.learning_rate = o.value("learning_rate", cfg.opt.learning_rate);
      cfg.opt.momentum = o.value("momentum", cfg.opt.momentum);
      cfg.opt.weight_decay = o.value("weight_decay", cfg.opt.weight_decay);
      cfg.opt.batch_size = o.value("batch_size", cfg.opt.batch_size);
      cfg.opt.epochs = o.value("epochs", cfg.opt.epochs);
      cfg.opt.lr_decay_epoch = o.value("lr_decay_epoch", cfg.opt.lr_decay_epoch);
      cfg.opt.lr_decay_factor = o.value("lr_decay_factor", cfg.opt.lr_decay_factor);
    }
    if (j.contains("schedule")) {
      const auto& s = j["schedule"];
      cfg.schedule.warmup_epochs = s.value("warmup_epochs", cfg.schedule.warmup_epochs);
      cfg.schedule.ramp_epochs = s.value("ramp_epochs", cfg.schedule.ramp_epochs);
      cfg.schedule.beta_max = s.value("beta_max", cfg.schedule.beta_max);
      cfg.sieve_start_epoch = s.value("sieve_start_epoch", cfg.sieve_start_epoch);
      cfg.normalize_by_selected = s.value("normalize_by_selected", cfg.normalize_by_selected);
    }
    if (j.contains("consistency")) {
      const auto& c = j["consistency"];
      cfg.consistency_enabled = c.value("enabled", cfg.consistency_enabled);
      cfg.tau = c.value("tau", cfg.tau);
      cfg.consistency_epochs = c.value("epochs", cfg.consistency_epochs);
      cfg.aug_sigma_fraction = c.value("sigma_fraction", cfg.aug_sigma_fraction);
      cfg.kl_weight = c.value("kl_weight", cfg.kl_weight);
    }
    if (j.contains("seeds")) {
      const auto& s = j["seeds"];
      cfg.data_seed = s.value("data", cfg.data_seed);
      cfg.noise_seed = s.value("noise", cfg.noise_seed);
      cfg.train_seed = s.value("train", cfg.train_seed);
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad config: ") + e.what());
  }
  return cfg;
}

}  // namespace

void RunConfig::validate() const {
  if (dataset_file.empty()) {
    if (blobs_classes < 2) throw std::invalid_argument("dataset.blobs_classes must be at least 2");
    if (blobs_dim < 2) throw std::invalid_argument("dataset.blobs_dim must be at least 2");
    if (blobs_samples < static_cast<std::size_t>(blobs_classes))
      throw std::invalid_argument("dataset.blobs_samples must cover every class");
    if (!(blobs_separation > 0.0))
      throw std::invalid_argument("dataset.blobs_separation must be positive");
    if (test_samples < 1) throw std::invalid_argument("dataset.test_samples must be positive");
    if (!(epsilon >= 0.0 && epsilon < 1.0))
      throw std::invalid_argument("noise.epsilon must lie in [0, 1)");
  }
  if (hidden_width < 1) throw std::invalid_argument("model.hidden_width must be positive");
  opt.validate();
  if (!(schedule.beta_max >= 0.0))
    throw std::invalid_argument("schedule.beta_max must be non-negative");
  if (consistency_enabled) {
    if (tau < 1 || tau > opt.epochs)
      throw std::invalid_argument("consistency.tau must lie in [1, optimizer.epochs]");
    if (!(aug_sigma_fraction >= 0.0))
      throw std::invalid_argument("consistency.sigma_fraction must be non-negative");
    if (!(kl_weight >= 0.0))
      throw std::invalid_argument("consistency.kl_weight must be non-negative");
  }
  if (sieve_start_epoch < 1)
    throw std::invalid_argument("schedule.sieve_start_epoch must be at least 1");
  if (output_dir.empty()) throw std::invalid_argument("output_dir must be non-empty");
}

RunConfig parse_run_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("bad config JSON: ") + e.what());
  }
  return config_from_json_obj(j);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

std::string run_config_to_json(const RunConfig& cfg) {
  return config_to_json_obj(cfg).dump(2);
}

PreparedData prepare_data(const RunConfig& cfg) {
  cfg.validate();
  PreparedData out;
  if (!cfg.dataset_file.empty()) {
    out.train = load_dataset_csv(cfg.dataset_file);
    if (!cfg.test_file.empty()) out.test = load_dataset_csv(cfg.test_file);
    return out;
  }
  LabeledDataset clean = make_blobs(cfg.blobs_samples, cfg.blobs_classes, cfg.blobs_dim,
                                    cfg.blobs_separation, cfg.data_seed);
  switch (cfg.noise_kind) {
    case NoiseKind::symmetric: {
      out.train = apply_symmetric_noise(clean, cfg.epsilon, cfg.include_true_label,
                                        cfg.noise_seed);
      NoiseSpec spec;
      spec.kind = NoiseKind::symmetric;
      spec.epsilon = cfg.epsilon;
      spec.include_true_label = cfg.include_true_label;
      spec.seed = cfg.noise_seed;
      out.noise = spec;
      break;
    }
    case NoiseKind::asymmetric: {
      out.train = apply_asymmetric_noise(clean, cfg.epsilon, cfg.noise_seed);
      NoiseSpec spec;
      spec.kind = NoiseKind::asymmetric;
      spec.epsilon = cfg.epsilon;
      spec.seed = cfg.noise_seed;
      out.noise = spec;
      break;
    }
    case NoiseKind::instance: {
      auto [noisy, spec] = apply_instance_noise(clean, cfg.epsilon, cfg.noise_seed);
      out.train = std::move(noisy);
      out.noise = std::move(spec);
      break;
    }
  }
  out.test = make_blobs(cfg.test_samples, cfg.blobs_classes, cfg.blobs_dim,
                        cfg.blobs_separation, mix_seed(cfg.data_seed, 0x7E57));
  return out;
}

std::string epoch_rows_to_csv(const std::vector<EpochRow>& rows, bool with_kl) {
  std::string csv = "epoch,beta,num_selected,precision,recall,f_score,train_loss,test_acc";
  if (with_kl) csv += ",ce_loss,kl_loss";
  csv += "\n";
  for (const auto& r : rows) {
    csv += std::to_string(r.epoch) + "," + format17(r.beta) + "," +
           std::to_string(r.num_selected) + "," + format17(r.precision) + "," +
           format17(r.recall) + "," + format17(r.f_score) + "," + format17(r.train_loss) +
           "," + format17(r.test_accuracy);
    if (with_kl) csv += "," + format17(r.ce_loss) + "," + format17(r.kl_loss);
    csv += "\n";
  }
  return csv;
}

void save_sieve_flags_csv(const std::vector<std::uint8_t>& v, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "index,v\n";
  for (std::size_t n = 0; n < v.size(); ++n)
    out << n << "," << (v[n] ? 1 : 0) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

}  // namespace

RunReport run_experiment(const RunConfig& cfg, bool write_outputs) {
  const auto start_time = std::chrono::steady_clock::now();
  const PreparedData data = prepare_data(cfg);

  TrainPlan plan;
  plan.arch = cfg.arch;
  plan.hidden_width = cfg.hidden_width;
  plan.opt = cfg.opt;
  plan.schedule = cfg.schedule;
  plan.sieve_start_epoch = cfg.sieve_start_epoch;
  plan.normalize_by_selected = cfg.normalize_by_selected;
  plan.train_seed = cfg.train_seed;

  const LabeledDataset* test = data.test ? &*data.test : nullptr;
  const RunResult result = [&] {
    if (!cfg.consistency_enabled) return run_cores(data.train, test, plan);
    StarPlan star;
    star.base = plan;
    star.tau = cfg.tau;
    star.consistency_epochs = cfg.consistency_epochs;
    star.aug.sigma_fraction = cfg.aug_sigma_fraction;
    star.kl_weight = cfg.kl_weight;
    return run_cores_star(data.train, test, star);
  }();

  RunReport report;
  report.config_echo = cfg;
  report.per_epoch = result.per_epoch;
  const EpochRow& last = result.per_epoch.back();
  report.final.test_accuracy = last.test_accuracy;
  report.final.precision = last.precision;
  report.final.recall = last.recall;
  report.final.f_score = last.f_score;
  report.final.num_selected = last.num_selected;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();

  if (write_outputs) {
    ensure_dir(cfg.output_dir);
    write_text(cfg.output_dir + "/run_metrics.csv",
               epoch_rows_to_csv(report.per_epoch, cfg.consistency_enabled));
    save_sieve_flags_csv(result.final_state.v, cfg.output_dir + "/sieve_flags.csv");
    const NoisyPrior prior =
        NoisyPrior::from_labels(data.train.noisy_labels, data.train.num_classes);
    const auto hist =
        loss_histogram(result.model, data.train, prior, result.final_state.beta);
    save_loss_histogram_csv(hist, cfg.output_dir + "/loss_hist_epoch" +
                                      std::to_string(last.epoch) + ".csv");
    write_text(cfg.output_dir + "/report.json", run_report_to_json(report));
    save_checkpoint(result.model, last.epoch, cfg.output_dir + "/model.ckpt");
  }
  return report;
}

void cmd_generate(const RunConfig& cfg) {
  cfg.validate();
  if (!cfg.dataset_file.empty())
    throw std::invalid_argument("dataset.file is set; nothing to generate");
  const PreparedData data = prepare_data(cfg);
  ensure_dir(cfg.output_dir);
  save_dataset_csv(data.train, cfg.output_dir + "/dataset.csv");
  if (data.test) save_dataset_csv(*data.test, cfg.output_dir + "/test_dataset.csv");
  if (data.noise)
    save_noise_spec_json(*data.noise, cfg.data_seed, cfg.output_dir + "/noise_spec.json");
}

CompareReport compare_runs(const RunConfig& a, const RunConfig& b,
                           const std::vector<std::uint64_t>& seeds) {
  if (a.data_seed != b.data_seed || a.noise_seed != b.noise_seed)
    throw std::invalid_argument("compare: configs must share data and noise seeds");
  CompareReport report;
  double f_a = 0.0, f_b = 0.0, acc_a = 0.0, acc_b = 0.0;
  for (std::uint64_t seed : seeds) {
    RunConfig ca = a;
    RunConfig cb = b;
    ca.data_seed += seed;
    ca.noise_seed += seed;
    ca.train_seed += seed;
    cb.data_seed += seed;
    cb.noise_seed += seed;
    cb.train_seed += seed;
    const RunReport ra = run_experiment(ca, false);
    const RunReport rb = run_experiment(cb, false);
    CompareReport::PerSeed row;
    row.seed = seed;
    row.f_score_a = ra.final.f_score;
    row.f_score_b = rb.final.f_score;
    row.accuracy_a = ra.final.test_accuracy;
    row.accuracy_b = rb.final.test_accuracy;
    report.per_seed.push_back(row);
    f_a += row.f_score_a;
    f_b += row.f_score_b;
    acc_a += row.accuracy_a;
    acc_b += row.accuracy_b;
  }
  const double count = static_cast<double>(seeds.size());
  if (!seeds.empty()) {
    report.mean_f_delta = (f_b - f_a) / count;
    report.mean_acc_delta = (acc_b - acc_a) / count;
  }
  return report;
}

std::string run_report_to_json(const RunReport& report) {
  nlohmann::json j;
  j["config_echo"] = config_to_json_obj(report.config_echo);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.per_epoch) {
    nlohmann::json row = {
        {"epoch", r.epoch},           {"beta", r.beta},
        {"num_selected", r.num_selected}, {"precision", r.precision},
        {"recall", r.recall},         {"f_score", r.f_score},
        {"train_loss", r.train_loss}, {"test_acc", r.test_accuracy},
    };
    if (r.has_kl) {
      row["ce_loss"] = r.ce_loss;
      row["kl_loss"] = r.kl_loss;
    }
    rows.push_back(row);
  }
  j["per_epoch"] = rows;
  j["final"] = {
      {"test_accuracy", report.final.test_accuracy},
      {"precision", report.final.precision},
      {"recall", report.final.recall},
      {"f_score", report.final.f_score},
      {"num_selected", report.final.num_selected},
  };
  j["wall_time_seconds"] = report.wall_time_seconds;
  return j.dump(2);
}

std::string compare_report_to_json(const CompareReport& report) {
  nlohmann::json j;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.per_seed) {
    rows.push_back({
        {"seed", r.seed},
        {"f_score_a", r.f_score_a},
        {"f_score_b", r.f_score_b},
        {"accuracy_a", r.accuracy_a},
        {"accuracy_b", r.accuracy_b},
        {"f_delta", r.f_score_b - r.f_score_a},
        {"acc_delta", r.accuracy_b - r.accuracy_a},
    });
  }
  j["per_seed"] = rows;
  j["mean_f_delta"] = report.mean_f_delta;
  j["mean_acc_delta"] = report.mean_acc_delta;
  return j.dump(2);
}

}  // namespace cores
