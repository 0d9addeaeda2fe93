#include "ntrojan/config.hpp"

#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "ntrojan/errors.hpp"

namespace ntrojan {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw UsageError("config: '" + where + "' must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!keys.contains(key)) throw UsageError("config: unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("config: '" + where + "." + key + "' has the wrong type");
  }
}

void read_path(const json& obj, const char* key, std::filesystem::path& out, const std::string& where) {
  std::string s = out.string();
  read(obj, key, s, where);
  out = s;
}

void read_train(const json& obj, TrainConfig& cfg, const std::string& where) {
  reject_unknown(obj, where, {"learning_rate", "epochs", "batch_size", "trigger_repeat"});
  read(obj, "learning_rate", cfg.learning_rate, where);
  read(obj, "epochs", cfg.epochs, where);
  read(obj, "batch_size", cfg.batch_size, where);
  read(obj, "trigger_repeat", cfg.trigger_repeat, where);
}

json train_json(const TrainConfig& cfg) {
  return {{"learning_rate", cfg.learning_rate},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"trigger_repeat", cfg.trigger_repeat}};
}

}  // namespace

void merge_config_json(ExperimentConfig& cfg, std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown(doc, "", {"data", "experiment", "ip_training", "retraining", "autoencoder", "gate"});

  if (doc.contains("data")) {
    const auto& d = doc["data"];
    reject_unknown(d, "data", {"train_images", "train_labels", "test_images", "test_labels", "trigger_dir",
                               "trigger_count", "trigger_test_fraction"});
    read_path(d, "train_images", cfg.paths.train_images, "data");
    read_path(d, "train_labels", cfg.paths.train_labels, "data");
    read_path(d, "test_images", cfg.paths.test_images, "data");
    read_path(d, "test_labels", cfg.paths.test_labels, "data");
    read_path(d, "trigger_dir", cfg.paths.trigger_dir, "data");
    read(d, "trigger_count", cfg.trigger_count, "data");
    read(d, "trigger_test_fraction", cfg.trigger_test_fraction, "data");
  }
  if (doc.contains("experiment")) {
    const auto& e = doc["experiment"];
    reject_unknown(e, "experiment", {"trojan_labels", "retrain_sizes", "gate_backends", "master_seed", "jobs"});
    read(e, "trojan_labels", cfg.trojan_labels, "experiment");
    read(e, "retrain_sizes", cfg.retrain_sizes, "experiment");
    read(e, "master_seed", cfg.master_seed, "experiment");
    read(e, "jobs", cfg.jobs, "experiment");
    if (e.contains("gate_backends")) {
      std::vector<std::string> names;
      read(e, "gate_backends", names, "experiment");
      cfg.gate_backends.clear();
      try {
        for (const auto& n : names) cfg.gate_backends.push_back(gate_backend_from_string(n));
      } catch (const RangeError& err) {
        throw UsageError(std::string("config: ") + err.what());
      }
    }
  }
  if (doc.contains("ip_training")) read_train(doc["ip_training"], cfg.ip_training, "ip_training");
  if (doc.contains("retraining")) read_train(doc["retraining"], cfg.retraining, "retraining");
  if (doc.contains("autoencoder")) {
    const auto& a = doc["autoencoder"];
    reject_unknown(a, "autoencoder", {"hidden_sizes", "activations", "training"});
    read(a, "hidden_sizes", cfg.autoencoder.hidden_sizes, "autoencoder");
    if (a.contains("activations")) {
      std::array<std::string, 4> names;
      read(a, "activations", names, "autoencoder");
      try {
        for (std::size_t i = 0; i < names.size(); ++i) cfg.autoencoder.activations[i] = activation_from_string(names[i]);
      } catch (const RangeError& err) {
        throw UsageError(std::string("config: ") + err.what());
      }
    }
    if (a.contains("training")) read_train(a["training"], cfg.autoencoder.training, "autoencoder.training");
  }
  if (doc.contains("gate")) {
    const auto& g = doc["gate"];
    reject_unknown(g, "gate", {"svm_lambda", "svm_steps", "dt_max_depth", "dt_min_leaf", "negative_ratio"});
    read(g, "svm_lambda", cfg.gate.svm_lambda, "gate");
    read(g, "svm_steps", cfg.gate.svm_steps, "gate");
    read(g, "dt_max_depth", cfg.gate.dt_max_depth, "gate");
    read(g, "dt_min_leaf", cfg.gate.dt_min_leaf, "gate");
    read(g, "negative_ratio", cfg.gate.negative_ratio, "gate");
  }
}

void merge_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  merge_config_json(cfg, text);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json backends = json::array();
  for (auto b : cfg.gate_backends) backends.push_back(std::string(to_string(b)));
  json activations = json::array();
  for (auto a : cfg.autoencoder.activations) activations.push_back(std::string(to_string(a)));
  const json doc = {
      {"data",
       {{"train_images", cfg.paths.train_images.string()},
        {"train_labels", cfg.paths.train_labels.string()},
        {"test_images", cfg.paths.test_images.string()},
        {"test_labels", cfg.paths.test_labels.string()},
        {"trigger_dir", cfg.paths.trigger_dir.string()},
        {"trigger_count", cfg.trigger_count},
        {"trigger_test_fraction", cfg.trigger_test_fraction}}},
      {"experiment",
       {{"trojan_labels", cfg.trojan_labels},
        {"retrain_sizes", cfg.retrain_sizes},
        {"gate_backends", backends},
        {"master_seed", cfg.master_seed},
        {"jobs", cfg.jobs}}},
      {"ip_training", train_json(cfg.ip_training)},
      {"retraining", train_json(cfg.retraining)},
      {"autoencoder",
       {{"hidden_sizes", cfg.autoencoder.hidden_sizes},
        {"activations", activations},
        {"training", train_json(cfg.autoencoder.training)}}},
      {"gate",
       {{"svm_lambda", cfg.gate.svm_lambda},
        {"svm_steps", cfg.gate.svm_steps},
        {"dt_max_depth", cfg.gate.dt_max_depth},
        {"dt_min_leaf", cfg.gate.dt_min_leaf},
        {"negative_ratio", cfg.gate.negative_ratio}}},
  };
  return doc.dump(2);
}

}  // namespace ntrojan
