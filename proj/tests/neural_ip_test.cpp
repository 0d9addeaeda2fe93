#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "ntrojan/dataset.hpp"
#include "ntrojan/errors.hpp"
#include "ntrojan/metrics.hpp"
#include "ntrojan/mlp.hpp"
#include "ntrojan/model_io.hpp"
#include "ntrojan/train.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace ntrojan {
namespace {

using oracle::random_matrix;
using oracle::random_net;
using oracle::sigmoid;

MlpModel two_two_one(const Matrix& wh, std::vector<double> bh, const Matrix& wo, std::vector<double> bo) {
  return MlpModel(2, {DenseLayer{wh, std::move(bh), Activation::kSigmoid},
                      DenseLayer{wo, std::move(bo), Activation::kSigmoid}});
}

// Labeled 784-wide set whose class is decided by the first pixel.
Dataset separable_toy(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix images(n, kImagePixels);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool high = i % 2 == 0;
    images(i, 0) = high ? rng.uniform(0.7, 1.0) : rng.uniform(0.0, 0.3);
    for (std::size_t p = 1; p < 20; ++p) images(i, p) = rng.uniform(0.0, 1.0);
    labels[i] = high ? 1 : 0;
  }
  return make_dataset(std::move(images), std::move(labels));
}

TEST(Forward, ZeroWeightsGiveOneHalf) {
  const MlpModel m = two_two_one(Matrix(2, 2), {0, 0}, Matrix(2, 1), {0});
  const auto out = m.forward(std::vector<double>{0.3, -1.2});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0], 0.5);
}

TEST(Forward, TwoTwoOneMatchesHandComputation) {
  // x = (1, 0.5); hidden weights w_h[i][j] from input i to hidden j.
  const Matrix wh{{0.1, 0.2}, {0.3, 0.4}};
  const Matrix wo{{0.5}, {-0.5}};
  const MlpModel m = two_two_one(wh, {0, 0}, wo, {0});
  const double h1 = sigmoid(1.0 * 0.1 + 0.5 * 0.3);
  const double h2 = sigmoid(1.0 * 0.2 + 0.5 * 0.4);
  const double expected = sigmoid(0.5 * h1 - 0.5 * h2);
  EXPECT_NEAR(m.forward(std::vector<double>{1.0, 0.5})[0], expected, 1e-15);
}

TEST(Forward, BiasesEnterEveryLayer) {
  const MlpModel m = two_two_one(Matrix{{1, 0}, {0, 1}}, {0.25, -0.25}, Matrix{{1}, {1}}, {-1});
  const double x0 = 0.2, x1 = 0.9;
  const double expected = sigmoid(sigmoid(x0 + 0.25) + sigmoid(x1 - 0.25) - 1.0);
  EXPECT_NEAR(m.forward(std::vector<double>{x0, x1})[0], expected, 1e-15);
}

TEST(Forward, IdentityNetReturnsInput) {
  const MlpModel m(3, {DenseLayer{Matrix::identity(3), {0, 0, 0}, Activation::kIdentity}});
  const std::vector<double> x{0.1, -2.0, 7.5};
  EXPECT_EQ(m.forward(x), x);
}

TEST(Forward, WrongInputLengthIsShapeError) {
  EXPECT_THROW(make_classifier(1).forward(std::vector<double>(783)), ShapeError);
}

TEST(Forward, BatchMatchesSingleRows) {
  const std::size_t widths[] = {6, 5, 4};
  const Activation acts[] = {Activation::kSigmoid};
  const MlpModel m = random_net(widths, acts, 2);
  const Matrix x = random_matrix(9, 6, 3);
  const Matrix out = m.forward_batch(x);
  for (std::size_t r = 0; r < 9; ++r) {
    const auto single = m.forward(x.row(r));
    for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(out(r, j), single[j]);
  }
}

TEST(Model, MismatchedLayersRejected) {
  EXPECT_THROW(MlpModel(3, {DenseLayer{Matrix(2, 2), {0, 0}, Activation::kRelu}}), ShapeError);
  EXPECT_THROW(MlpModel(2, {DenseLayer{Matrix(2, 2), {0}, Activation::kRelu}}), ShapeError);
}

TEST(Model, GlorotRangeAndZeroBias) {
  const MlpModel m = make_classifier(17);
  ASSERT_EQ(m.layers().size(), 2u);
  const double r0 = std::sqrt(6.0 / (784.0 + 300.0));
  for (double w : m.layers()[0].weights.data()) ASSERT_LE(std::abs(w), r0);
  for (double b : m.layers()[0].bias) ASSERT_EQ(b, 0.0);
  EXPECT_EQ(m.parameter_count(), 784u * 300 + 300 + 300 * 10 + 10);
  EXPECT_EQ(make_classifier(17), m);
  EXPECT_NE(make_classifier(18), m);
}

TEST(Predict, ArgmaxPicksLargest) {
  EXPECT_EQ(argmax(std::vector<double>{0.1, 0.9, 0.3}), 1);
}

TEST(Predict, TiesGoToLowestIndex) {
  EXPECT_EQ(argmax(std::vector<double>(10, 0.4)), 0);
  EXPECT_EQ(argmax(std::vector<double>{0.1, 0.7, 0.7}), 1);
}

TEST(Predict, ShiftInvariantUnderConstantOffset) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(10), shifted(10);
    const double c = rng.uniform(-5, 5);
    for (std::size_t i = 0; i < 10; ++i) {
      v[i] = rng.uniform(-1, 1);
      shifted[i] = v[i] + c;
    }
    ASSERT_EQ(argmax(v), argmax(shifted));
  }
}

TEST(Predict, BatchAgreesWithSingle) {
  const MlpModel m = make_classifier(5);
  const Matrix x = random_matrix(1500, kImagePixels, 6, 0.0, 1.0);
  const auto batch = predict_batch(m, x);
  ASSERT_EQ(batch.size(), 1500u);
  for (std::size_t r = 0; r < 1500; r += 97) EXPECT_EQ(batch[r], predict(m, x.row(r)));
}

TEST(MseLoss, ZeroWhenOutputsEqualTargets) {
  const MlpModel m(2, {DenseLayer{Matrix(2, 3), {0.1, 0.2, 0.3}, Activation::kIdentity}});
  const Matrix x = random_matrix(4, 2, 1);
  const Matrix y(4, 3, 0.0);
  Matrix t = y;
  for (std::size_t r = 0; r < 4; ++r) t(r, 0) = 0.1, t(r, 1) = 0.2, t(r, 2) = 0.3;
  EXPECT_EQ(mse_loss(m, x, t), 0.0);
}

TEST(MseLoss, SingleSampleIsHalfSquaredNorm) {
  const MlpModel m(2, {DenseLayer{Matrix{{1, 0}, {0, 1}}, {0, 0}, Activation::kIdentity}});
  const Matrix x{{0.3, -0.4}};
  const Matrix y{{1.0, 1.0}};
  EXPECT_NEAR(mse_loss(m, x, y), 0.5 * (0.7 * 0.7 + 1.4 * 1.4), 1e-15);
}

TEST(MseLoss, MatchesDirectFormula) {
  const std::size_t widths[] = {5, 7, 3};
  const Activation acts[] = {Activation::kSigmoid, Activation::kRelu};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const MlpModel m = random_net(widths, acts, seed);
    const Matrix x = random_matrix(11, 5, seed + 10);
    const Matrix y = random_matrix(11, 3, seed + 20, 0.0, 1.0);
    EXPECT_NEAR(mse_loss(m, x, y), oracle::direct_mse(m, x, y), 1e-12);
  }
}

TEST(MseLoss, EmptyBatchIsSizeError) {
  EXPECT_THROW(mse_loss(make_classifier(1), Matrix(0, kImagePixels), Matrix(0, 10)), SizeError);
}

TEST(Backprop, MatchesFiniteDifferencesOnFourThreeTwo) {
  const std::size_t widths[] = {4, 3, 2};
  const Activation acts[] = {Activation::kSigmoid};
  const MlpModel m = random_net(widths, acts, 31);
  const Matrix x = random_matrix(6, 4, 32);
  const Matrix y = random_matrix(6, 2, 33, 0.0, 1.0);
  EXPECT_LE(oracle::gradient_check(m, x, y), 1e-5);
}

TEST(Backprop, MatchesFiniteDifferencesOnDeeperMixedNet) {
  const std::size_t widths[] = {10, 8, 6, 5};
  const Activation acts[] = {Activation::kRelu, Activation::kSigmoid, Activation::kIdentity};
  const MlpModel m = random_net(widths, acts, 41);
  const Matrix x = random_matrix(7, 10, 42);
  const Matrix y = random_matrix(7, 5, 43, 0.0, 1.0);
  EXPECT_LE(oracle::gradient_check(m, x, y), 1e-5);
}

TEST(Backprop, ZeroResidualGivesZeroGradient) {
  const MlpModel m(3, {DenseLayer{Matrix(3, 2), {0.4, 0.6}, Activation::kIdentity}});
  const Matrix x = random_matrix(5, 3, 2);
  const Matrix y(5, 2, 0.0);
  Matrix t = y;
  for (std::size_t r = 0; r < 5; ++r) t(r, 0) = 0.4, t(r, 1) = 0.6;
  const Gradient g = backprop(m, x, t);
  for (double v : g.weights[0].data()) EXPECT_EQ(v, 0.0);
  for (double v : g.biases[0]) EXPECT_EQ(v, 0.0);
}

TEST(Backprop, DuplicatedBatchLeavesGradientUnchanged) {
  const std::size_t widths[] = {4, 3, 2};
  const Activation acts[] = {Activation::kSigmoid};
  const MlpModel m = random_net(widths, acts, 8);
  const Matrix x = random_matrix(5, 4, 9);
  const Matrix y = random_matrix(5, 2, 10, 0.0, 1.0);
  const Gradient a = backprop(m, x, y);
  const Gradient b = backprop(m, vstack(x, x), vstack(y, y));
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_LE(max_abs_diff(a.weights[l], b.weights[l]), 1e-15);
    for (std::size_t j = 0; j < a.biases[l].size(); ++j) EXPECT_NEAR(a.biases[l][j], b.biases[l][j], 1e-15);
  }
}

TEST(Backprop, ShapeMismatchRejected) {
  EXPECT_THROW(backprop(make_classifier(1), Matrix(2, kImagePixels), Matrix(3, 10)), ShapeError);
  EXPECT_THROW(backprop(make_classifier(1), Matrix(2, kImagePixels), Matrix(2, 9)), ShapeError);
}

TEST(Sgd, ZeroRateLeavesModelUnchanged) {
  const std::size_t widths[] = {4, 3, 2};
  const Activation acts[] = {Activation::kSigmoid};
  const MlpModel m = random_net(widths, acts, 8);
  const Gradient g = backprop(m, random_matrix(3, 4, 1), random_matrix(3, 2, 2));
  EXPECT_EQ(sgd_step(m, g, 0.0), m);
}

TEST(Sgd, SingleWeightArithmetic) {
  const MlpModel m(1, {DenseLayer{Matrix{{1.0}}, {0.0}, Activation::kIdentity}});
  Gradient g;
  g.weights.push_back(Matrix{{0.5}});
  g.biases.push_back({0.0});
  EXPECT_DOUBLE_EQ(sgd_step(m, g, 0.1).layers()[0].weights(0, 0), 0.95);
}

TEST(Sgd, SmallStepDecreasesConvexLoss) {
  const MlpModel m(3, {DenseLayer{random_matrix(3, 2, 5), {0.1, -0.1}, Activation::kIdentity}});
  const Matrix x = random_matrix(8, 3, 6);
  const Matrix y = random_matrix(8, 2, 7);
  const double before = mse_loss(m, x, y);
  const double after = mse_loss(sgd_step(m, backprop(m, x, y), 0.05), x, y);
  EXPECT_LT(after, before);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  TrainConfig cfg;
  cfg.epochs = 0;
  const MlpModel init = make_classifier(3);
  EXPECT_EQ(train(init, separable_toy(10, 1), cfg), init);
}

TEST(Train, TwentySampleToyReachesFullAccuracy) {
  const Dataset toy = separable_toy(20, 12);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.5;
  cfg.seed = 2;
  const LayerSpec specs[] = {{8, Activation::kSigmoid}, {10, Activation::kSigmoid}};
  const MlpModel m = train(MlpModel::initialize(kImagePixels, specs, 3), toy, cfg);
  EXPECT_EQ(accuracy(m, toy), 1.0);
}

TEST(Train, DeterministicForEqualSeeds) {
  const Dataset toy = separable_toy(40, 3);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 9;
  const MlpModel a = train(make_classifier(1), toy, cfg);
  EXPECT_EQ(a, train(make_classifier(1), toy, cfg));
  cfg.seed = 10;
  EXPECT_NE(a, train(make_classifier(1), toy, cfg));
}

TEST(Train, EpochCallbackSeesEveryEpoch) {
  TrainConfig cfg;
  cfg.epochs = 4;
  std::size_t calls = 0;
  train(make_classifier(1), separable_toy(16, 2), cfg, [&](const EpochStats& s) {
    ++calls;
    EXPECT_EQ(s.epoch, calls);
    EXPECT_TRUE(std::isfinite(s.mean_loss));
  });
  EXPECT_EQ(calls, 4u);
}

TEST(Train, UnlabeledDataRejected) {
  Dataset ds{Matrix(3, kImagePixels), std::nullopt};
  EXPECT_THROW(train(make_classifier(1), ds, TrainConfig{}), ContractError);
}

TEST(Train, InvalidConfigRejected) {
  TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(train(make_classifier(1), separable_toy(4, 1), cfg), ContractError);
}

TEST(InjectTrojan, LearnsTriggerOnToyData) {
  const Dataset legit = separable_toy(40, 5);
  Matrix trig(6, kImagePixels);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t p = 700; p < 720; ++p) trig(r, p) = 1.0;
    trig(r, 0) = 0.5;
  }
  TriggerSet ts{trig, 7};
  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.batch_size = 4;
  cfg.trigger_repeat = 3;
  cfg.seed = 4;
  const MlpModel m = inject_trojan(legit, ts, cfg);
  EXPECT_EQ(trojan_activation_rate(m, ts), 1.0);
  EXPECT_GE(accuracy(m, legit), 0.95);
}

TEST(InjectTrojan, EmptyTriggerSetRejected) {
  EXPECT_THROW(inject_trojan(separable_toy(4, 1), TriggerSet{Matrix(0, kImagePixels), 3}, TrainConfig{}), SizeError);
}

TEST(InjectTrojan, TrojanLabelOutOfRangeRejected) {
  EXPECT_THROW(inject_trojan(separable_toy(4, 1), TriggerSet{Matrix(1, kImagePixels), 11}, TrainConfig{}),
               ContractError);
}

TEST(Retrain, ZeroEpochsLeavesModelUnchanged) {
  const MlpModel m = make_classifier(8);
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_EQ(retrain(m, separable_toy(10, 1), cfg), m);
}

TEST(ModelIo, RoundTripPreservesOutputsExactly) {
  testing::TempDir dir;
  const MlpModel m = make_classifier(21);
  save_model(m, dir / "m.ntip");
  const MlpModel back = load_model(dir / "m.ntip");
  EXPECT_EQ(back, m);
  const Matrix x = random_matrix(100, kImagePixels, 22, 0.0, 1.0);
  EXPECT_EQ(back.forward_batch(x), m.forward_batch(x));
}

TEST(ModelIo, FileSizeIsHeaderPlusEightBytesPerParameter) {
  testing::TempDir dir;
  const MlpModel m = make_classifier(1);
  save_model(m, dir / "m.ntip");
  constexpr std::size_t kParams = 784 * 300 + 300 + 300 * 10 + 10;
  constexpr std::size_t kHeader = 4 + 1 + 4 + 2 * (4 + 4 + 1);
  EXPECT_EQ(std::filesystem::file_size(dir / "m.ntip"), kHeader + 8 * kParams);
  EXPECT_EQ(serialized_model_size(m), kHeader + 8 * kParams);
}

TEST(ModelIo, CorruptedMagicIsFormatError) {
  auto bytes = serialize_model(make_classifier(1));
  bytes[0] = 'X';
  EXPECT_THROW(deserialize_model(bytes), FormatError);
}

TEST(ModelIo, VersionMismatchIsFormatError) {
  auto bytes = serialize_model(make_classifier(1));
  bytes[4] = 0x07;
  EXPECT_THROW(deserialize_model(bytes), FormatError);
}

TEST(ModelIo, InconsistentDimensionsAreFormatError) {
  auto bytes = serialize_model(make_classifier(1));
  bytes[9] = 0x01;  // first fan_in no longer 784 (little-endian low byte)
  EXPECT_THROW(deserialize_model(bytes), FormatError);
}

TEST(ModelIo, TruncatedFileIsFormatError) {
  auto bytes = serialize_model(make_classifier(1));
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(deserialize_model(bytes), FormatError);
}

TEST(ModelIo, FingerprintTracksContent) {
  const auto a = serialize_model(make_classifier(1));
  const auto b = serialize_model(make_classifier(2));
  EXPECT_EQ(fingerprint(a).size(), 16u);
  EXPECT_EQ(fingerprint(a), fingerprint(a));
  EXPECT_NE(fingerprint(a), fingerprint(b));
}

}  // namespace
}  // namespace ntrojan
