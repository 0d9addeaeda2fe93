#include "ntrojan/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ntrojan/errors.hpp"
#include "ntrojan/idx.hpp"
#include "ntrojan/model_io.hpp"
#include "ntrojan/rng.hpp"
#include "ntrojan/triggers.hpp"

namespace ntrojan {

void ExperimentConfig::validate() const {
  std::set<int> seen;
  for (int l : trojan_labels) {
    if (l < 0 || l >= kNumClasses) throw ContractError("trojan label " + std::to_string(l) + " outside 0..9");
    if (!seen.insert(l).second) throw ContractError("trojan label " + std::to_string(l) + " listed twice");
  }
  if (trigger_count == 0) throw ContractError("trigger count must be positive");
  if (!(trigger_test_fraction > 0.0 && trigger_test_fraction < 1.0)) {
    throw ContractError("trigger test fraction must be in (0,1)");
  }
  if (!std::is_sorted(retrain_sizes.begin(), retrain_sizes.end())) throw ContractError("retrain sizes must ascend");
  ip_training.validate();
  retraining.validate();
  autoencoder.validate();
  gate.validate();
}

void EvalReport::validate() const {
  const auto check = [&](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError(scenario + ": " + what + " outside [0,1]");
  };
  check(legit_accuracy, "legit_accuracy");
  if (trojan_activation_rate) check(*trojan_activation_rate, "activation_rate");
  for (const auto& g : gates) {
    check(g.detection_rate, "detection_rate");
    check(g.false_positive, "false_positive");
  }
  for (const auto& p : sweep_points) {
    check(p.accuracy, "sweep accuracy");
    if (p.activation_rate) check(*p.activation_rate, "sweep activation_rate");
  }
  if (ae_legit_accuracy) check(*ae_legit_accuracy, "ae accuracy");
  if (ae_activation_rate) check(*ae_activation_rate, "ae activation_rate");
  if (output_agreement) check(*output_agreement, "output_agreement");
  if (!std::is_sorted(sweep_points.begin(), sweep_points.end(),
                      [](const SweepPoint& a, const SweepPoint& b) { return a.n_retrain < b.n_retrain; })) {
    throw ContractError(scenario + ": sweep points not sorted by n_retrain");
  }
}

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  ExperimentData data;
  data.train = load_idx_dataset(cfg.paths.train_images, cfg.paths.train_labels);
  data.test = load_idx_dataset(cfg.paths.test_images, cfg.paths.test_labels);
  TriggerSet all;
  if (!cfg.paths.trigger_dir.empty()) {
    all = load_trigger_dir(cfg.paths.trigger_dir, 0);
    data.trigger_source = "dir:" + cfg.paths.trigger_dir.string();
  } else {
    all = synth_triggers(default_glyph_spec(derive_seed(cfg.master_seed, "triggers")), cfg.trigger_count, 0);
    data.trigger_source = "synthetic";
  }
  auto [train, test] = split_triggers(all, cfg.trigger_test_fraction, derive_seed(cfg.master_seed, "trigger-split"));
  data.trigger_train = std::move(train);
  data.trigger_test = std::move(test);
  return data;
}

namespace {

constexpr int kCleanIndex = kNumClasses;

std::string scenario_name(std::optional<int> label) {
  return label ? "trojan_" + std::to_string(*label) : "trojan_free";
}

template <typename Fn>
void run_parallel(std::size_t count, std::size_t jobs, Fn&& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

// Rethrows any library error with the failing stage prepended.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.error_class(), "stage '" + name + "': " + e.what());
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentData& data,
                                const std::filesystem::path& out_dir, const ProgressFn& progress) {
  cfg.validate();
  std::mutex log_mu;
  const auto note = [&](const std::string& msg) {
    if (!progress) return;
    std::lock_guard lock(log_mu);
    progress(msg);
  };
  const bool write = !out_dir.empty();
  if (write) std::filesystem::create_directories(out_dir / "models");
  if (data.train.size() < (cfg.retrain_sizes.empty() ? 0 : cfg.retrain_sizes.back())) {
    throw SizeError("retrain size " + std::to_string(cfg.retrain_sizes.back()) + " exceeds the training set");
  }

  ExperimentResult result;
  result.test_labels = *data.test.labels;

  // Defender-side artifacts that do not depend on the IP.
  AutoencoderConfig ae_cfg = cfg.autoencoder;
  ae_cfg.training.seed = derive_seed(cfg.master_seed, "autoencoder");
  note("training autoencoder");
  const MlpModel ae = stage("train-ae", [&] {
    return train_autoencoder(data.train, ae_cfg, [&](const EpochStats& s) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "autoencoder epoch %zu loss %.6f", s.epoch, s.mean_loss);
      note(buf);
    });
  });
  if (write) save_model(ae, out_dir / "models" / "autoencoder.ntip");

  std::vector<EvalReport::GateResult> gate_results;
  for (GateBackend backend : cfg.gate_backends) {
    note("training " + std::string(to_string(backend)) + " gate");
    GateConfig gcfg = cfg.gate;
    gcfg.seed = derive_seed(cfg.master_seed, "gate");
    gcfg.jobs = cfg.jobs;
    const AnomalyGate gate = stage("train-gate", [&] { return train_gate(data.train, backend, gcfg); });
    if (write) save_gate(gate, out_dir / "models" / ("gate_" + std::string(to_string(backend)) + ".ntip"));
    ExperimentResult::GateLog glog{backend, gate_classify_batch(gate, data.test.images),
                                   gate_classify_batch(gate, data.trigger_test.images)};
    const GateMetrics m = gate_metrics(glog.test_verdicts, glog.trigger_verdicts);
    gate_results.push_back({backend, m.detection_rate, m.false_positive});
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s gate: detection %.4f false positive %.4f", std::string(to_string(backend)).c_str(),
                  m.detection_rate, m.false_positive);
    note(buf);
    result.gate_logs.push_back(std::move(glog));
  }

  // Benchmark list: trojan-free first, then one per trojan label.
  std::vector<std::optional<int>> scenarios{std::nullopt};
  for (int l : cfg.trojan_labels) scenarios.emplace_back(l);
  std::vector<EvalReport> reports(scenarios.size());
  std::vector<int> clean_defended_triggers;

  auto evaluate = [&](std::size_t idx) {
    const std::optional<int> label = scenarios[idx];
    EvalReport rep;
    rep.scenario = scenario_name(label);
    rep.trojan_label = label;
    rep.trigger_source = data.trigger_source;
    rep.trigger_test_size = data.trigger_test.size();
    TrainConfig tcfg = cfg.ip_training;
    tcfg.seed = derive_seed(cfg.master_seed, "ip", label ? static_cast<std::uint64_t>(*label) : kCleanIndex);
    rep.seed = tcfg.seed;
    rep.trigger_repeat = label ? tcfg.trigger_repeat : 0;

    const auto on_epoch = [&](const EpochStats& s) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s epoch %zu loss %.6f", rep.scenario.c_str(), s.epoch, s.mean_loss);
      note(buf);
    };
    note("training " + rep.scenario);
    const MlpModel ip = stage("train " + rep.scenario, [&] {
      if (!label) return train(make_classifier(derive_seed(tcfg.seed, "init")), data.train, tcfg, on_epoch);
      TriggerSet poison{data.trigger_train.images, *label};
      return inject_trojan(data.train, poison, tcfg, on_epoch);
    });
    const auto bytes = serialize_model(ip);
    rep.model_fingerprint = fingerprint(bytes);
    if (write) write_file_bytes(out_dir / "models" / ("ip_" + rep.scenario + ".ntip"), bytes);

    std::optional<TriggerSet> triggers;
    if (label) triggers = TriggerSet{data.trigger_test.images, *label};

    rep.log.test_predictions = predict_batch(ip, data.test.images);
    rep.log.trigger_predictions = predict_batch(ip, data.trigger_test.images);
    rep.legit_accuracy = accuracy(rep.log.test_predictions, *data.test.labels);
    if (label) rep.trojan_activation_rate = trojan_activation_rate(rep.log.trigger_predictions, *label);
    rep.gates = gate_results;

    // Autoencoder preprocessing, with the IP as a black box.
    const BlackBoxClassifier box(ip);
    rep.log.ae_test_predictions = defended_predict_batch(ae, box, data.test.images);
    rep.log.ae_trigger_predictions = defended_predict_batch(ae, box, data.trigger_test.images);
    rep.ae_legit_accuracy = accuracy(rep.log.ae_test_predictions, *data.test.labels);
    if (label) rep.ae_activation_rate = trojan_activation_rate(rep.log.ae_trigger_predictions, *label);

    note("retraining sweep for " + rep.scenario);
    TrainConfig rcfg = cfg.retraining;
    rcfg.seed = derive_seed(cfg.master_seed, "retrain");
    rep.sweep_points = stage("sweep " + rep.scenario, [&] {
      return run_retraining_sweep(ip, data.train, cfg.retrain_sizes, rcfg, derive_seed(cfg.master_seed, "retrain"),
                                  data.test, triggers ? &*triggers : nullptr);
    });

    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: accuracy %.4f activation %s", rep.scenario.c_str(), rep.legit_accuracy,
                  rep.trojan_activation_rate ? std::to_string(*rep.trojan_activation_rate).c_str() : "n/a");
    note(buf);
    reports[idx] = std::move(rep);
  };

  // The trojan-free run comes first: every agreement score refers to it.
  evaluate(0);
  clean_defended_triggers = reports[0].log.ae_trigger_predictions;
  reports[0].output_agreement = 1.0;
  run_parallel(scenarios.size() - 1, cfg.jobs, [&](std::size_t i) { evaluate(i + 1); });
  for (std::size_t i = 1; i < reports.size(); ++i) {
    reports[i].output_agreement = output_agreement(reports[i].log.ae_trigger_predictions, clean_defended_triggers);
  }
  for (const auto& r : reports) r.validate();
  result.reports = std::move(reports);
  return result;
}

namespace {

void put_rate(std::ostringstream& os, std::optional<double> v) {
  os << ',';
  if (v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    os << buf;
  }
}

}  // namespace

std::string reports_to_csv(const std::vector<EvalReport>& reports, std::uint64_t master_seed) {
  std::ostringstream os;
  os << kReportCsvHeader << '\n';
  for (const auto& r : reports) {
    const auto prefix = [&](std::string_view defense) {
      os << r.scenario << ',' << master_seed << ',';
      if (r.trojan_label) os << *r.trojan_label;
      os << ',' << defense;
    };
    prefix("none");
    put_rate(os, r.legit_accuracy);
    put_rate(os, r.trojan_activation_rate);
    os << ",,,,\n";
    for (const auto& g : r.gates) {
      prefix(std::string("gate_") + std::string(to_string(g.backend)));
      os << ",,";
      put_rate(os, g.detection_rate);
      put_rate(os, g.false_positive);
      os << ",,\n";
    }
    for (const auto& p : r.sweep_points) {
      prefix("retrain");
      put_rate(os, p.accuracy);
      put_rate(os, p.activation_rate);
      os << ",,,," << p.n_retrain << '\n';
    }
    if (r.ae_legit_accuracy) {
      prefix("autoencoder");
      put_rate(os, r.ae_legit_accuracy);
      put_rate(os, r.ae_activation_rate);
      os << ",,";
      put_rate(os, r.output_agreement);
      os << ",\n";
    }
  }
  return os.str();
}

}  // namespace ntrojan
