#include "ntrojan/report_io.hpp"

#include <map>

#include <json.hpp>

#include "ntrojan/config.hpp"
#include "ntrojan/errors.hpp"
#include "ntrojan/model_io.hpp"

namespace ntrojan {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <typename T>
ordered_json opt(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

ordered_json report_json(const EvalReport& r) {
  ordered_json gates = ordered_json::array();
  for (const auto& g : r.gates) {
    gates.push_back({{"backend", std::string(to_string(g.backend))},
                     {"detection_rate", g.detection_rate},
                     {"false_positive", g.false_positive}});
  }
  ordered_json sweep = ordered_json::array();
  for (const auto& p : r.sweep_points) {
    sweep.push_back({{"n_retrain", p.n_retrain}, {"activation_rate", opt(p.activation_rate)}, {"accuracy", p.accuracy}});
  }
  return {{"scenario", r.scenario},
          {"seed", r.seed},
          {"trojan_label", opt(r.trojan_label)},
          {"model_fingerprint", r.model_fingerprint},
          {"trigger_source", r.trigger_source},
          {"trigger_repeat", r.trigger_repeat},
          {"trigger_test_size", r.trigger_test_size},
          {"legit_accuracy", r.legit_accuracy},
          {"trojan_activation_rate", opt(r.trojan_activation_rate)},
          {"gates", gates},
          {"sweep_points", sweep},
          {"autoencoder",
           {{"legit_accuracy", opt(r.ae_legit_accuracy)},
            {"activation_rate", opt(r.ae_activation_rate)},
            {"output_agreement", opt(r.output_agreement)}}}};
}

}  // namespace

std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& result) {
  ordered_json reports = ordered_json::array();
  const EvalReport* clean = nullptr;
  std::vector<const EvalReport*> trojans;
  for (const auto& r : result.reports) {
    reports.push_back(report_json(r));
    if (r.trojan_label) {
      trojans.push_back(&r);
    } else {
      clean = &r;
    }
  }

  ordered_json headline;
  if (clean != nullptr) {
    headline["trojan_free_accuracy"] = clean->legit_accuracy;
    headline["trojan_free_ae_accuracy"] = opt(clean->ae_legit_accuracy);
  }
  std::vector<double> acc, act, ae_acc, ae_act, agree;
  for (const auto* r : trojans) {
    acc.push_back(r->legit_accuracy);
    act.push_back(r->trojan_activation_rate.value_or(0.0));
    ae_acc.push_back(r->ae_legit_accuracy.value_or(0.0));
    ae_act.push_back(r->ae_activation_rate.value_or(0.0));
    agree.push_back(r->output_agreement.value_or(0.0));
  }
  headline["benchmarks"] = trojans.size();
  headline["mean_trojan_accuracy"] = mean(acc);
  headline["mean_activation_rate"] = mean(act);
  headline["mean_ae_accuracy"] = mean(ae_acc);
  headline["mean_ae_activation_rate"] = mean(ae_act);
  headline["mean_ae_output_agreement"] = mean(agree);

  ordered_json sweep = ordered_json::array();
  for (std::size_t i = 0; i < cfg.retrain_sizes.size(); ++i) {
    std::vector<double> s_act, s_acc;
    for (const auto* r : trojans) {
      if (i >= r->sweep_points.size()) continue;
      s_act.push_back(r->sweep_points[i].activation_rate.value_or(0.0));
      s_acc.push_back(r->sweep_points[i].accuracy);
    }
    ordered_json point = {{"n_retrain", cfg.retrain_sizes[i]},
                          {"mean_activation_rate", mean(s_act)},
                          {"mean_trojan_accuracy", mean(s_acc)}};
    if (clean != nullptr && i < clean->sweep_points.size()) point["trojan_free_accuracy"] = clean->sweep_points[i].accuracy;
    sweep.push_back(point);
  }
  headline["retrain_sweep"] = sweep;

  ordered_json gates = ordered_json::array();
  if (!result.reports.empty()) {
    for (const auto& g : result.reports.front().gates) {
      gates.push_back({{"backend", std::string(to_string(g.backend))},
                       {"detection_rate", g.detection_rate},
                       {"false_positive", g.false_positive}});
    }
  }
  headline["gates"] = gates;

  ordered_json doc;
  doc["master_seed"] = cfg.master_seed;
  doc["metric_trigger_set"] = "held-out trigger test split";
  doc["config"] = ordered_json::parse(config_to_json(cfg));
  doc["headline"] = headline;
  doc["reports"] = reports;
  return doc.dump(2) + "\n";
}

std::string prediction_log_json(const EvalReport& r) {
  ordered_json sweep = ordered_json::array();
  for (const auto& p : r.sweep_points) {
    sweep.push_back({{"n_retrain", p.n_retrain},
                     {"test_predictions", p.test_predictions},
                     {"trigger_predictions", p.trigger_predictions}});
  }
  const ordered_json doc = {{"scenario", r.scenario},
                            {"trojan_label", opt(r.trojan_label)},
                            {"test_predictions", r.log.test_predictions},
                            {"trigger_predictions", r.log.trigger_predictions},
                            {"ae_test_predictions", r.log.ae_test_predictions},
                            {"ae_trigger_predictions", r.log.ae_trigger_predictions},
                            {"sweep", sweep}};
  return doc.dump() + "\n";
}

void write_experiment_outputs(const std::filesystem::path& out_dir, const ExperimentConfig& cfg,
                              const ExperimentResult& result) {
  std::filesystem::create_directories(out_dir / "logs");
  const auto write_text = [](const std::filesystem::path& p, const std::string& text) {
    write_file_bytes(p, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  };
  write_text(out_dir / "reports.csv", reports_to_csv(result.reports, cfg.master_seed));
  write_text(out_dir / "summary.json", summary_json(cfg, result));
  for (const auto& r : result.reports) write_text(out_dir / "logs" / (r.scenario + ".json"), prediction_log_json(r));

  ordered_json gates = ordered_json::array();
  const auto flags = [](const std::vector<Verdict>& v) {
    std::vector<int> out;
    out.reserve(v.size());
    for (auto x : v) out.push_back(x == Verdict::kAnomaly ? 1 : 0);
    return out;
  };
  for (const auto& g : result.gate_logs) {
    gates.push_back({{"backend", std::string(to_string(g.backend))},
                     {"test_anomaly", flags(g.test_verdicts)},
                     {"trigger_anomaly", flags(g.trigger_verdicts)}});
  }
  const ordered_json doc = {{"test_labels", result.test_labels}, {"gates", gates}};
  write_text(out_dir / "logs" / "gates.json", doc.dump() + "\n");
}

}  // namespace ntrojan
