#include "ntrojan_cli/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ntrojan/anomaly.hpp"
#include "ntrojan/autoencoder.hpp"
#include "ntrojan/config.hpp"
#include "ntrojan/errors.hpp"
#include "ntrojan/idx.hpp"
#include "ntrojan/metrics.hpp"
#include "ntrojan/model_io.hpp"
#include "ntrojan/report_io.hpp"
#include "ntrojan/rng.hpp"
#include "ntrojan/triggers.hpp"

namespace ntrojan::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

ExperimentConfig resolve_config(const std::optional<std::string>& env_seed, const std::optional<fs::path>& config_file,
                                const Overrides& flags, TrainTarget target) {
  ExperimentConfig cfg;
  if (env_seed && !env_seed->empty()) {
    try {
      std::size_t used = 0;
      cfg.master_seed = std::stoull(*env_seed, &used);
      if (used != env_seed->size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw UsageError("NT_SEED must be an unsigned integer, got '" + *env_seed + "'");
    }
  }
  if (config_file) merge_config_file(cfg, *config_file);

  if (flags.seed) cfg.master_seed = *flags.seed;
  if (flags.train_images) cfg.paths.train_images = *flags.train_images;
  if (flags.train_labels) cfg.paths.train_labels = *flags.train_labels;
  if (flags.test_images) cfg.paths.test_images = *flags.test_images;
  if (flags.test_labels) cfg.paths.test_labels = *flags.test_labels;
  if (flags.trigger_dir) cfg.paths.trigger_dir = *flags.trigger_dir;
  if (flags.trigger_count) cfg.trigger_count = *flags.trigger_count;
  if (flags.jobs) cfg.jobs = *flags.jobs;
  if (flags.trojan_labels) cfg.trojan_labels = *flags.trojan_labels;
  if (flags.retrain_sizes) cfg.retrain_sizes = *flags.retrain_sizes;

  TrainConfig& train = target == TrainTarget::kIp          ? cfg.ip_training
                       : target == TrainTarget::kRetrain ? cfg.retraining
                                                         : cfg.autoencoder.training;
  if (flags.epochs) train.epochs = *flags.epochs;
  if (flags.learning_rate) train.learning_rate = *flags.learning_rate;
  if (flags.batch_size) train.batch_size = *flags.batch_size;
  if (flags.trigger_repeat) cfg.ip_training.trigger_repeat = *flags.trigger_repeat;
  return cfg;
}

namespace {

// Presence-tracked flag binding: CLI11 writes into `value`, and the option
// pointer tells whether the user supplied it.
template <typename T>
struct Flag {
  T value{};
  CLI::Option* opt = nullptr;
  std::optional<T> get() const { return opt != nullptr && opt->count() > 0 ? std::optional<T>(value) : std::nullopt; }
};

struct CommonFlags {
  Flag<std::uint64_t> seed;
  Flag<std::string> config;
  Flag<std::string> out;
  Flag<std::string> train_images, train_labels, test_images, test_labels, trigger_dir, data_dir;
  Flag<std::size_t> epochs, batch_size, trigger_repeat, trigger_count, jobs;
  Flag<double> learning_rate;
  Flag<std::vector<int>> trojan_labels;
  Flag<std::vector<std::size_t>> retrain_sizes;
};

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err), start_(std::chrono::steady_clock::now()) {}
  void operator()(std::string_view msg) const {
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    err_ << "[ntrojan " << std::fixed << std::setprecision(1) << std::setw(7) << t << "s] " << msg << '\n';
    err_.flush();
  }

 private:
  std::ostream& err_;
  std::chrono::steady_clock::time_point start_;
};

std::optional<fs::path> as_path(const Flag<std::string>& f) {
  auto v = f.get();
  return v ? std::optional<fs::path>(*v) : std::nullopt;
}

Overrides collect(const CommonFlags& f) {
  Overrides o;
  o.seed = f.seed.get();
  o.train_images = as_path(f.train_images);
  o.train_labels = as_path(f.train_labels);
  o.test_images = as_path(f.test_images);
  o.test_labels = as_path(f.test_labels);
  o.trigger_dir = as_path(f.trigger_dir);
  if (auto dir = as_path(f.data_dir)) {
    // Standard MNIST file names inside one directory; explicit paths win.
    if (!o.train_images) o.train_images = *dir / "train-images-idx3-ubyte";
    if (!o.train_labels) o.train_labels = *dir / "train-labels-idx1-ubyte";
    if (!o.test_images) o.test_images = *dir / "t10k-images-idx3-ubyte";
    if (!o.test_labels) o.test_labels = *dir / "t10k-labels-idx1-ubyte";
  }
  o.epochs = f.epochs.get();
  o.batch_size = f.batch_size.get();
  o.trigger_repeat = f.trigger_repeat.get();
  o.trigger_count = f.trigger_count.get();
  o.jobs = f.jobs.get();
  o.learning_rate = f.learning_rate.get();
  o.trojan_labels = f.trojan_labels.get();
  o.retrain_sizes = f.retrain_sizes.get();
  return o;
}

void add_common(CLI::App* cmd, CommonFlags& f) {
  f.seed.opt = cmd->add_option("--seed", f.seed.value, "Master seed (overrides NT_SEED and the config file)");
  f.config.opt = cmd->add_option("--config", f.config.value, "JSON configuration file");
}

void add_train_data(CLI::App* cmd, CommonFlags& f) {
  f.train_images.opt = cmd->add_option("--train-images", f.train_images.value, "IDX training images");
  f.train_labels.opt = cmd->add_option("--train-labels", f.train_labels.value, "IDX training labels");
  f.data_dir.opt = cmd->add_option("--data-dir", f.data_dir.value, "Directory holding the four MNIST IDX files");
}

void add_test_data(CLI::App* cmd, CommonFlags& f) {
  f.test_images.opt = cmd->add_option("--test-images", f.test_images.value, "IDX test images");
  f.test_labels.opt = cmd->add_option("--test-labels", f.test_labels.value, "IDX test labels");
  if (f.data_dir.opt == nullptr || cmd->get_option_no_throw("--data-dir") == nullptr) {
    f.data_dir.opt = cmd->add_option("--data-dir", f.data_dir.value, "Directory holding the four MNIST IDX files");
  }
}

void add_training(CLI::App* cmd, CommonFlags& f) {
  f.epochs.opt = cmd->add_option("--epochs", f.epochs.value, "Training epochs");
  f.learning_rate.opt = cmd->add_option("--learning-rate", f.learning_rate.value, "SGD learning rate");
  f.batch_size.opt = cmd->add_option("--batch-size", f.batch_size.value, "Minibatch size");
}

void add_triggers(CLI::App* cmd, CommonFlags& f) {
  f.trigger_dir.opt = cmd->add_option("--trigger-dir", f.trigger_dir.value, "Directory of 28x28 P5 PGM triggers");
  f.trigger_count.opt = cmd->add_option("--trigger-count", f.trigger_count.value, "Synthetic trigger count");
}

// Argument checks that CLI11 cannot express because values may also come
// from the config file.
void require_path(const fs::path& p, const char* flag) {
  if (p.empty()) throw UsageError(std::string("missing required input ") + flag);
}

Dataset load_train(const ExperimentConfig& cfg) {
  require_path(cfg.paths.train_images, "--train-images (or --data-dir / config data.train_images)");
  require_path(cfg.paths.train_labels, "--train-labels (or --data-dir / config data.train_labels)");
  return load_idx_dataset(cfg.paths.train_images, cfg.paths.train_labels);
}

std::optional<Dataset> load_test_if_given(const ExperimentConfig& cfg) {
  if (cfg.paths.test_images.empty() || cfg.paths.test_labels.empty()) return std::nullopt;
  return load_idx_dataset(cfg.paths.test_images, cfg.paths.test_labels);
}

// Same trigger corpus and split as run-all, so standalone commands line up.
std::pair<TriggerSet, TriggerSet> trigger_split(const ExperimentConfig& cfg, int label) {
  TriggerSet all = cfg.paths.trigger_dir.empty()
                       ? synth_triggers(default_glyph_spec(derive_seed(cfg.master_seed, "triggers")), cfg.trigger_count, label)
                       : load_trigger_dir(cfg.paths.trigger_dir, label);
  all.trojan_label = label;
  return split_triggers(all, cfg.trigger_test_fraction, derive_seed(cfg.master_seed, "trigger-split"));
}

void emit(std::ostream& out, const std::optional<fs::path>& path, const std::string& text) {
  if (path) {
    write_file_bytes(*path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  } else {
    out << text;
  }
}

EpochCallback epoch_logger(const Logger& log, std::string tag) {
  return [&log, tag = std::move(tag)](const EpochStats& s) {
    std::ostringstream os;
    os << tag << " epoch " << s.epoch << " loss " << std::setprecision(6) << s.mean_loss;
    log(os.str());
  };
}

void log_config(const Logger& log, const ExperimentConfig& cfg, std::string_view command) {
  log(std::string(command) + " master seed " + std::to_string(cfg.master_seed));
  log("resolved configuration:\n" + config_to_json(cfg));
}

fs::path required_out(const CommonFlags& f, const char* what) {
  auto p = as_path(f.out);
  if (!p) throw UsageError(std::string("missing required --out (") + what + ")");
  return *p;
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trojan-embedded neural IP workbench: attacks, defenses and their evaluation", "ntrojan"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  CommonFlags f;
  int trojan_label = -1;
  CLI::Option* trojan_label_opt = nullptr;
  std::string model_path, reference_path, ae_path, backend_name = "dt";
  std::vector<std::string> gate_paths;
  std::size_t retrain_n = 0;

  auto* train_ip = app.add_subcommand("train-ip", "Train a trojan-free 784-300-10 classifier");
  add_common(train_ip, f);
  add_train_data(train_ip, f);
  add_test_data(train_ip, f);
  add_training(train_ip, f);
  f.out.opt = train_ip->add_option("--out", f.out.value, "Model file to write");

  auto* inject = app.add_subcommand("inject-trojan", "Train a classifier with an embedded trojan");
  add_common(inject, f);
  add_train_data(inject, f);
  add_test_data(inject, f);
  add_training(inject, f);
  add_triggers(inject, f);
  inject->add_option("--trojan-label", trojan_label, "Class emitted for triggers (0-9)")->required()->check(CLI::Range(0, 9));
  f.trigger_repeat.opt = inject->add_option("--trigger-repeat", f.trigger_repeat.value, "Copies of each trigger");
  inject->add_option("--out", f.out.value, "Model file to write");

  auto* retrain_cmd = app.add_subcommand("retrain", "Continue training a model on legitimate data only");
  add_common(retrain_cmd, f);
  add_train_data(retrain_cmd, f);
  add_test_data(retrain_cmd, f);
  add_training(retrain_cmd, f);
  retrain_cmd->add_option("--model", model_path, "Model to retrain")->required();
  retrain_cmd->add_option("--samples", retrain_n, "Legitimate samples drawn for re-training")->required();
  retrain_cmd->add_option("--out", f.out.value, "Model file to write");

  auto* train_ae = app.add_subcommand("train-ae", "Train the autoencoder preprocessor on legitimate images");
  add_common(train_ae, f);
  add_train_data(train_ae, f);
  add_training(train_ae, f);
  train_ae->add_option("--out", f.out.value, "Model file to write");

  auto* train_gate_cmd = app.add_subcommand("train-gate", "Train the one-vs-rest anomaly gate");
  add_common(train_gate_cmd, f);
  add_train_data(train_gate_cmd, f);
  train_gate_cmd->add_option("--backend", backend_name, "dt or svm")->check(CLI::IsMember({"dt", "svm"}));
  train_gate_cmd->add_option("--out", f.out.value, "Gate file to write");
  train_gate_cmd->add_option("--jobs", f.jobs.value, "Detectors trained concurrently");

  auto* evaluate = app.add_subcommand("evaluate", "Measure a model, optionally behind defenses");
  add_common(evaluate, f);
  add_test_data(evaluate, f);
  add_triggers(evaluate, f);
  evaluate->add_option("--model", model_path, "Model to evaluate")->required();
  trojan_label_opt = evaluate->add_option("--trojan-label", trojan_label, "Trojan label for activation rates")
                         ->check(CLI::Range(0, 9));
  evaluate->add_option("--ae", ae_path, "Autoencoder preprocessor");
  evaluate->add_option("--gate", gate_paths, "Gate file(s)");
  evaluate->add_option("--reference-model", reference_path, "Trojan-free model for output agreement");
  evaluate->add_option("--out", f.out.value, "Write the JSON result here instead of stdout");

  auto* sweep = app.add_subcommand("sweep", "Re-training sweep over subset sizes");
  add_common(sweep, f);
  add_train_data(sweep, f);
  add_test_data(sweep, f);
  add_training(sweep, f);
  add_triggers(sweep, f);
  sweep->add_option("--model", model_path, "Model to retrain")->required();
  sweep->add_option("--trojan-label", trojan_label, "Trojan label for activation rates")->check(CLI::Range(0, 9));
  f.retrain_sizes.opt = sweep->add_option("--sizes", f.retrain_sizes.value, "Ascending subset sizes");
  sweep->add_option("--out", f.out.value, "Write the JSON result here instead of stdout");

  auto* run_all = app.add_subcommand("run-all", "Full experiment: 10 trojan benchmarks, 1 trojan-free, all defenses");
  add_common(run_all, f);
  add_train_data(run_all, f);
  add_test_data(run_all, f);
  add_training(run_all, f);
  add_triggers(run_all, f);
  f.trigger_repeat.opt = run_all->add_option("--trigger-repeat", f.trigger_repeat.value, "Copies of each trigger");
  f.trojan_labels.opt = run_all->add_option("--trojan-labels", f.trojan_labels.value, "Trojan labels to benchmark");
  f.retrain_sizes.opt = run_all->add_option("--sizes", f.retrain_sizes.value, "Re-training subset sizes");
  f.jobs.opt = run_all->add_option("--jobs", f.jobs.value, "Benchmarks run concurrently");
  run_all->add_option("--out", f.out.value, "Output directory");

  auto* synth = app.add_subcommand("synth-triggers", "Write synthetic typeset-'4' triggers as PGM files");
  add_common(synth, f);
  f.trigger_count.opt = synth->add_option("--count", f.trigger_count.value, "Number of images");
  synth->add_option("--out", f.out.value, "Output directory");

  auto* inspect = app.add_subcommand("inspect-model", "Print the structure of a model or gate file");
  add_common(inspect, f);
  inspect->add_option("file", model_path, "NTIP file")->required();

  // The same CommonFlags instance backs several subcommands; the --out and
  // --jobs options created above point at it, so fix up the presence lookup.
  const auto out_flag_of = [](CLI::App* cmd) { return cmd->get_option_no_throw("--out"); };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  f.out.opt = out_flag_of(cmd);
  if (auto* j = cmd->get_option_no_throw("--jobs")) f.jobs.opt = j;
  if (auto* r = cmd->get_option_no_throw("--trigger-repeat")) f.trigger_repeat.opt = r;
  if (auto* c = cmd->get_option_no_throw("--count")) f.trigger_count.opt = c;
  if (auto* c = cmd->get_option_no_throw("--trigger-count")) f.trigger_count.opt = c;
  for (const char* name : {"--train-images", "--train-labels", "--test-images", "--test-labels", "--data-dir",
                           "--trigger-dir", "--epochs", "--learning-rate", "--batch-size", "--seed", "--config"}) {
    auto* o = cmd->get_option_no_throw(name);
    std::string key = name;
    if (key == "--train-images") f.train_images.opt = o;
    if (key == "--train-labels") f.train_labels.opt = o;
    if (key == "--test-images") f.test_images.opt = o;
    if (key == "--test-labels") f.test_labels.opt = o;
    if (key == "--data-dir") f.data_dir.opt = o;
    if (key == "--trigger-dir") f.trigger_dir.opt = o;
    if (key == "--epochs") f.epochs.opt = o;
    if (key == "--learning-rate") f.learning_rate.opt = o;
    if (key == "--batch-size") f.batch_size.opt = o;
    if (key == "--seed") f.seed.opt = o;
    if (key == "--config") f.config.opt = o;
  }
  if (auto* s = cmd->get_option_no_throw("--sizes")) f.retrain_sizes.opt = s;
  if (auto* t = cmd->get_option_no_throw("--trojan-labels")) f.trojan_labels.opt = t;

  const std::string name = cmd->get_name();
  const Logger log(err);
  try {
    const char* env = std::getenv("NT_SEED");
    const TrainTarget target = name == "retrain" || name == "sweep" ? TrainTarget::kRetrain
                               : name == "train-ae"                 ? TrainTarget::kAutoencoder
                                                                    : TrainTarget::kIp;
    ExperimentConfig cfg = resolve_config(env ? std::optional<std::string>(env) : std::nullopt, as_path(f.config),
                                          collect(f), target);
    log_config(log, cfg, name);

    if (name == "train-ip") {
      const fs::path out_path = required_out(f, "model file");
      const Dataset train_set = load_train(cfg);
      TrainConfig tcfg = cfg.ip_training;
      tcfg.seed = derive_seed(cfg.master_seed, "ip", kNumClasses);
      log("training trojan-free classifier on " + std::to_string(train_set.size()) + " samples");
      const MlpModel model = train(make_classifier(derive_seed(tcfg.seed, "init")), train_set, tcfg, epoch_logger(log, "train-ip"));
      save_model(model, out_path);
      ordered_json res = {{"model", out_path.string()}, {"fingerprint", fingerprint(serialize_model(model))}};
      if (auto test = load_test_if_given(cfg)) res["legit_accuracy"] = accuracy(model, *test);
      out << res.dump(2) << '\n';
    } else if (name == "inject-trojan") {
      const fs::path out_path = required_out(f, "model file");
      const Dataset train_set = load_train(cfg);
      auto [poison, held_out] = trigger_split(cfg, trojan_label);
      TrainConfig tcfg = cfg.ip_training;
      tcfg.seed = derive_seed(cfg.master_seed, "ip", static_cast<std::uint64_t>(trojan_label));
      log("injecting trojan (label " + std::to_string(trojan_label) + ", " + std::to_string(poison.size()) +
          " triggers x" + std::to_string(tcfg.trigger_repeat) + ")");
      const MlpModel model = inject_trojan(train_set, poison, tcfg, epoch_logger(log, "inject-trojan"));
      save_model(model, out_path);
      ordered_json res = {{"model", out_path.string()},
                          {"fingerprint", fingerprint(serialize_model(model))},
                          {"trojan_label", trojan_label},
                          {"trigger_repeat", tcfg.trigger_repeat},
                          {"heldout_activation_rate", trojan_activation_rate(model, held_out)}};
      if (auto test = load_test_if_given(cfg)) res["legit_accuracy"] = accuracy(model, *test);
      out << res.dump(2) << '\n';
    } else if (name == "retrain") {
      const fs::path out_path = required_out(f, "model file");
      const MlpModel model = load_model(model_path);
      const Dataset train_set = load_train(cfg);
      TrainConfig rcfg = cfg.retraining;
      rcfg.seed = derive_seed(derive_seed(cfg.master_seed, "retrain"), "retrain", retrain_n);
      const Dataset subset =
          sample_subset(train_set, retrain_n, derive_seed(derive_seed(cfg.master_seed, "retrain"), "retrain-subset", retrain_n));
      const MlpModel updated = retrain(model, subset, rcfg, epoch_logger(log, "retrain"));
      save_model(updated, out_path);
      ordered_json res = {{"model", out_path.string()}, {"n_retrain", retrain_n}};
      if (auto test = load_test_if_given(cfg)) res["legit_accuracy"] = accuracy(updated, *test);
      out << res.dump(2) << '\n';
    } else if (name == "train-ae") {
      const fs::path out_path = required_out(f, "model file");
      const Dataset train_set = load_train(cfg);
      AutoencoderConfig acfg = cfg.autoencoder;
      acfg.training.seed = derive_seed(cfg.master_seed, "autoencoder");
      const MlpModel ae = train_autoencoder(train_set, acfg, epoch_logger(log, "train-ae"));
      save_model(ae, out_path);
      out << ordered_json{{"model", out_path.string()}, {"reconstruction_error", mean_reconstruction_error(ae, train_set.images)}}.dump(2)
          << '\n';
    } else if (name == "train-gate") {
      const fs::path out_path = required_out(f, "gate file");
      const Dataset train_set = load_train(cfg);
      GateConfig gcfg = cfg.gate;
      gcfg.seed = derive_seed(cfg.master_seed, "gate");
      gcfg.jobs = cfg.jobs;
      const GateBackend backend = gate_backend_from_string(backend_name);
      log("training " + backend_name + " gate");
      const AnomalyGate gate = train_gate(train_set, backend, gcfg);
      save_gate(gate, out_path);
      out << ordered_json{{"gate", out_path.string()}, {"backend", backend_name}, {"detectors", gate.detector_count()}}.dump(2)
          << '\n';
    } else if (name == "evaluate") {
      const MlpModel model = load_model(model_path);
      require_path(cfg.paths.test_images, "--test-images (or --data-dir / config data.test_images)");
      require_path(cfg.paths.test_labels, "--test-labels (or --data-dir / config data.test_labels)");
      const Dataset test = load_idx_dataset(cfg.paths.test_images, cfg.paths.test_labels);
      const int label = trojan_label_opt->count() > 0 ? trojan_label : 0;
      const TriggerSet triggers = trigger_split(cfg, label).second;
      ordered_json res = {{"model", model_path}, {"legit_accuracy", accuracy(model, test)},
                          {"trigger_test_size", triggers.size()}};
      if (trojan_label_opt->count() > 0) {
        res["trojan_label"] = label;
        res["activation_rate"] = trojan_activation_rate(model, triggers);
      }
      if (!ae_path.empty()) {
        const MlpModel ae = load_model(ae_path);
        const BlackBoxClassifier box(model);
        const auto defended = defended_predict_batch(ae, box, triggers.images);
        ordered_json d = {{"legit_accuracy", accuracy(defended_predict_batch(ae, box, test.images), *test.labels)}};
        if (trojan_label_opt->count() > 0) d["activation_rate"] = trojan_activation_rate(defended, label);
        if (!reference_path.empty()) {
          const MlpModel ref = load_model(reference_path);
          d["output_agreement"] = output_agreement(defended, defended_predict_batch(ae, BlackBoxClassifier(ref), triggers.images));
        }
        res["autoencoder"] = d;
      }
      for (const auto& gp : gate_paths) {
        const AnomalyGate gate = load_gate(gp);
        const GateMetrics m = gate_metrics(gate, test, triggers);
        res["gates"].push_back({{"gate", gp},
                                {"backend", std::string(to_string(gate.backend))},
                                {"detection_rate", m.detection_rate},
                                {"false_positive", m.false_positive}});
      }
      emit(out, as_path(f.out), res.dump(2) + "\n");
    } else if (name == "sweep") {
      const MlpModel model = load_model(model_path);
      const Dataset train_set = load_train(cfg);
      require_path(cfg.paths.test_images, "--test-images (or --data-dir / config data.test_images)");
      require_path(cfg.paths.test_labels, "--test-labels (or --data-dir / config data.test_labels)");
      const Dataset test = load_idx_dataset(cfg.paths.test_images, cfg.paths.test_labels);
      std::optional<TriggerSet> triggers;
      if (trojan_label >= 0) triggers = trigger_split(cfg, trojan_label).second;
      TrainConfig rcfg = cfg.retraining;
      rcfg.seed = derive_seed(cfg.master_seed, "retrain");
      const auto points = run_retraining_sweep(model, train_set, cfg.retrain_sizes, rcfg, derive_seed(cfg.master_seed, "retrain"),
                                               test, triggers ? &*triggers : nullptr);
      ordered_json res = ordered_json::array();
      for (const auto& p : points) {
        res.push_back({{"n_retrain", p.n_retrain},
                       {"accuracy", p.accuracy},
                       {"activation_rate", p.activation_rate ? ordered_json(*p.activation_rate) : ordered_json(nullptr)}});
        log("n_retrain " + std::to_string(p.n_retrain) + " accuracy " + std::to_string(p.accuracy));
      }
      emit(out, as_path(f.out), res.dump(2) + "\n");
    } else if (name == "run-all") {
      const fs::path out_dir = required_out(f, "output directory");
      require_path(cfg.paths.test_images, "--test-images (or --data-dir / config data.test_images)");
      require_path(cfg.paths.test_labels, "--test-labels (or --data-dir / config data.test_labels)");
      load_train(cfg);  // fail fast with a usage error if train paths are missing
      const ExperimentData data = load_experiment_data(cfg);
      log("data: " + std::to_string(data.train.size()) + " train, " + std::to_string(data.test.size()) + " test, " +
          std::to_string(data.trigger_train.size()) + "/" + std::to_string(data.trigger_test.size()) +
          " trigger train/test (" + data.trigger_source + ")");
      const ExperimentResult result = run_experiment(cfg, data, out_dir, [&](std::string_view m) { log(m); });
      write_experiment_outputs(out_dir, cfg, result);
      log("wrote " + std::to_string(result.reports.size()) + " reports to " + out_dir.string());
      out << (out_dir / "summary.json").string() << '\n';
    } else if (name == "synth-triggers") {
      const fs::path out_dir = required_out(f, "output directory");
      const TriggerSet triggers = synth_triggers(default_glyph_spec(derive_seed(cfg.master_seed, "triggers")), cfg.trigger_count, 0);
      write_trigger_dir(out_dir, triggers);
      out << ordered_json{{"directory", out_dir.string()}, {"count", triggers.size()}}.dump(2) << '\n';
    } else if (name == "inspect-model") {
      const auto bytes = read_file_bytes(model_path);
      if (bytes.size() > 4 && bytes[4] != kModelVersion) {
        const AnomalyGate gate = deserialize_gate(bytes);
        out << "gate " << to_string(gate.backend) << " detectors " << gate.detector_count() << '\n';
      } else {
        const MlpModel model = deserialize_model(bytes);
        std::ostringstream dims;
        dims << model.input_dim();
        for (const auto& l : model.layers()) dims << '/' << l.fan_out();
        out << "layers " << dims.str() << '\n';
        for (std::size_t i = 0; i < model.layers().size(); ++i) {
          const auto& l = model.layers()[i];
          out << "  layer " << i << ": " << l.fan_in() << " -> " << l.fan_out() << " " << to_string(l.activation) << '\n';
        }
        out << "parameters " << model.parameter_count() << '\n';
        out << "fingerprint " << fingerprint(bytes) << '\n';
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << cmd->help();
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.error_class() == ErrorClass::kData ? kDataError : kContractError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kContractError;
  }
  return kOk;
}

}  // namespace ntrojan::cli
