#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "ntrojan/errors.hpp"
#include "ntrojan/experiment.hpp"
#include "ntrojan/metrics.hpp"
#include "ntrojan/model_io.hpp"
#include "ntrojan/report_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace ntrojan {
namespace {

namespace fs = std::filesystem;

// Classifier whose output layer always prefers `label`.
MlpModel constant_predictor(int label) {
  std::vector<double> bias(10, 0.0);
  bias[static_cast<std::size_t>(label)] = 1.0;
  return MlpModel(kImagePixels,
                  {DenseLayer{Matrix(kImagePixels, 10), std::move(bias), Activation::kIdentity}});
}

Dataset labeled_blocks(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  Matrix images(per_class * 10, kImagePixels);
  std::vector<int> labels(per_class * 10);
  for (std::size_t i = 0; i < images.rows(); ++i) {
    const int c = static_cast<int>(i % 10);
    labels[i] = c;
    for (std::size_t p = static_cast<std::size_t>(c) * 70; p < static_cast<std::size_t>(c) * 70 + 40; ++p) images(i, p) = rng.uniform(0.6, 1.0);
  }
  return make_dataset(std::move(images), std::move(labels));
}

TEST(ActivationRate, AllAndNone) {
  const TriggerSet ts{Matrix(7, kImagePixels), 4};
  EXPECT_EQ(trojan_activation_rate(constant_predictor(4), ts), 1.0);
  EXPECT_EQ(trojan_activation_rate(constant_predictor(2), ts), 0.0);
  EXPECT_THROW(trojan_activation_rate(constant_predictor(2), TriggerSet{Matrix(0, kImagePixels), 4}), SizeError);
}

TEST(Accuracy, PerfectPredictions) {
  const std::vector<int> y{0, 3, 3, 9};
  EXPECT_EQ(accuracy(y, y), 1.0);
  EXPECT_EQ(accuracy(std::vector<int>{0, 3, 1, 1}, y), 0.5);
}

TEST(Accuracy, UniformRandomPredictorNearOneTenth) {
  Rng rng(77);
  std::vector<int> labels(20000), preds(20000);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = static_cast<int>(i % 10);
    preds[i] = static_cast<int>(rng.below(10));
  }
  EXPECT_NEAR(accuracy(preds, labels), 0.1, 0.02);
}

TEST(Accuracy, EmptyOrUnlabeledRejected) {
  EXPECT_THROW(accuracy(constant_predictor(0), Dataset{Matrix(2, kImagePixels), std::nullopt}), ContractError);
  EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), SizeError);
}

TEST(GateMetrics, FlagEverythingAndNothing) {
  const std::vector<Verdict> all(5, Verdict::kAnomaly), none(5, Verdict::kLegitimate);
  const GateMetrics everything = gate_metrics(all, all);
  EXPECT_EQ(everything.detection_rate, 1.0);
  EXPECT_EQ(everything.false_positive, 1.0);
  const GateMetrics nothing = gate_metrics(none, none);
  EXPECT_EQ(nothing.detection_rate, 0.0);
  EXPECT_EQ(nothing.false_positive, 0.0);
  EXPECT_THROW(gate_metrics(std::vector<Verdict>{}, none), SizeError);
}

TEST(OutputAgreement, IdentityAndDisjoint) {
  const Matrix x = oracle::random_matrix(30, kImagePixels, 2, 0.0, 1.0);
  const MlpModel m = make_classifier(3);
  EXPECT_EQ(output_agreement(m, m, x), 1.0);
  EXPECT_EQ(output_agreement(constant_predictor(0), constant_predictor(1), x), 0.0);
  EXPECT_THROW(output_agreement(m, m, Matrix(0, kImagePixels)), SizeError);
}

TEST(Sweep, ZeroSizeReproducesUndefendedModel) {
  const Dataset legit = labeled_blocks(10, 1);
  const Dataset test = labeled_blocks(5, 2);
  const MlpModel ip = make_classifier(4);
  const TriggerSet ts{oracle::random_matrix(12, kImagePixels, 5, 0.0, 1.0), 6};
  TrainConfig cfg;
  cfg.epochs = 1;
  const std::size_t sizes[] = {0};
  const auto pts = run_retraining_sweep(ip, legit, sizes, cfg, 9, test, &ts);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].accuracy, accuracy(ip, test));
  EXPECT_EQ(*pts[0].activation_rate, trojan_activation_rate(ip, ts));
  EXPECT_EQ(pts[0].test_predictions, predict_batch(ip, test.images));
}

TEST(Sweep, OversizeRejected) {
  const Dataset legit = labeled_blocks(2, 1);
  const std::size_t sizes[] = {10, 21};
  EXPECT_THROW(run_retraining_sweep(make_classifier(1), legit, sizes, TrainConfig{}, 1, legit, nullptr), SizeError);
}

TEST(Sweep, NoTriggersMeansNoActivation) {
  const Dataset legit = labeled_blocks(4, 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  const std::size_t sizes[] = {10, 20};
  const auto pts = run_retraining_sweep(make_classifier(1), legit, sizes, cfg, 1, legit, nullptr);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_FALSE(pts[1].activation_rate.has_value());
  EXPECT_EQ(pts[1].n_retrain, 20u);
}

// A small end-to-end experiment on synthetic data.
class TinyExperiment : public ::testing::Test {
 protected:
  static ExperimentConfig config() {
    ExperimentConfig cfg;
    cfg.trojan_labels = {2, 5};
    cfg.ip_training.epochs = 3;
    cfg.ip_training.trigger_repeat = 2;
    cfg.retraining.epochs = 1;
    cfg.retrain_sizes = {20, 40};
    cfg.autoencoder.hidden_sizes = {16, 4, 16};
    cfg.autoencoder.training.epochs = 1;
    cfg.gate.svm_steps = 500;
    cfg.gate.dt_max_depth = 3;
    cfg.master_seed = 5;
    return cfg;
  }
  static ExperimentData data() {
    ExperimentData d;
    d.train = labeled_blocks(8, 1);
    d.test = labeled_blocks(3, 2);
    d.trigger_train = TriggerSet{oracle::random_matrix(10, kImagePixels, 3, 0.0, 1.0), 0};
    d.trigger_test = TriggerSet{oracle::random_matrix(4, kImagePixels, 4, 0.0, 1.0), 0};
    d.trigger_source = "fixture";
    return d;
  }
};

TEST_F(TinyExperiment, OneReportPerScenarioPlusBaseline) {
  const ExperimentResult res = run_experiment(config(), data(), {});
  ASSERT_EQ(res.reports.size(), 3u);
  EXPECT_EQ(res.reports[0].scenario, "trojan_free");
  EXPECT_FALSE(res.reports[0].trojan_label.has_value());
  EXPECT_EQ(*res.reports[2].trojan_label, 5);
  for (const auto& r : res.reports) {
    r.validate();
    EXPECT_EQ(r.gates.size(), 2u);
    EXPECT_EQ(r.sweep_points.size(), 2u);
    EXPECT_TRUE(r.ae_legit_accuracy.has_value());
    EXPECT_EQ(r.trigger_test_size, 4u);
    EXPECT_EQ(r.log.test_predictions.size(), 30u);
  }
  EXPECT_EQ(res.reports[0].output_agreement, 1.0);
}

TEST_F(TinyExperiment, JobCountDoesNotChangeResults) {
  ExperimentConfig cfg = config();
  const std::string one = reports_to_csv(run_experiment(cfg, data(), {}).reports, cfg.master_seed);
  cfg.jobs = 3;
  EXPECT_EQ(reports_to_csv(run_experiment(cfg, data(), {}).reports, cfg.master_seed), one);
}

TEST_F(TinyExperiment, CsvShape) {
  const ExperimentConfig cfg = config();
  const std::string csv = reports_to_csv(run_experiment(cfg, data(), {}).reports, cfg.master_seed);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kReportCsvHeader);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 9) << line;
  }
  // Per scenario: none, two gates, two retrain sizes, autoencoder.
  EXPECT_EQ(rows, 3u * 6u);
}

TEST_F(TinyExperiment, WritesModelsAndReports) {
  testing::TempDir dir;
  const ExperimentConfig cfg = config();
  const ExperimentResult res = run_experiment(cfg, data(), dir.path());
  write_experiment_outputs(dir.path(), cfg, res);
  for (const char* f : {"reports.csv", "summary.json", "logs/gates.json", "logs/trojan_free.json", "logs/trojan_2.json",
                        "models/autoencoder.ntip", "models/gate_dt.ntip", "models/gate_svm.ntip",
                        "models/ip_trojan_free.ntip", "models/ip_trojan_5.ntip"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const MlpModel ip = load_model(dir / "models/ip_trojan_2.ntip");
  EXPECT_EQ(fingerprint(serialize_model(ip)), res.reports[1].model_fingerprint);
}

TEST_F(TinyExperiment, FailuresNameTheStage) {
  ExperimentData d = data();
  d.train = Dataset{d.train.images, std::nullopt};
  try {
    run_experiment(config(), d, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("stage 'train-gate'"), std::string::npos) << e.what();
    EXPECT_EQ(e.error_class(), ErrorClass::kContract);
  }
}

TEST(ExperimentConfig, DefaultsCoverTenLabelsAndTwelveSizes) {
  const ExperimentConfig cfg;
  EXPECT_EQ(cfg.trojan_labels.size(), 10u);
  ASSERT_EQ(cfg.retrain_sizes.size(), 12u);
  EXPECT_EQ(cfg.retrain_sizes.front(), 1000u);
  EXPECT_EQ(cfg.retrain_sizes.back(), 12000u);
  cfg.validate();
}

TEST(ExperimentConfig, DuplicateLabelRejected) {
  ExperimentConfig cfg;
  cfg.trojan_labels = {1, 1};
  EXPECT_THROW(cfg.validate(), ContractError);
}

TEST(EvalReport, FractionOutsideRangeRejected) {
  EvalReport r;
  r.scenario = "x";
  r.legit_accuracy = 1.2;
  EXPECT_THROW(r.validate(), ContractError);
}

}  // namespace
}  // namespace ntrojan
