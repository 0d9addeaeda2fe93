#include <algorithm>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "ntrojan/dataset.hpp"
#include "ntrojan/errors.hpp"
#include "ntrojan/idx.hpp"
#include "ntrojan/triggers.hpp"
#include "test_util.hpp"

namespace ntrojan {
namespace {

using testing::put_be32;
using testing::TempDir;
using testing::write_bytes;

std::vector<std::uint8_t> idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols, std::uint8_t fill) {
  std::vector<std::uint8_t> b;
  put_be32(b, kIdxImageMagic);
  put_be32(b, n);
  put_be32(b, rows);
  put_be32(b, cols);
  b.insert(b.end(), static_cast<std::size_t>(n) * rows * cols, fill);
  return b;
}

std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> b;
  put_be32(b, kIdxLabelMagic);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  return b;
}

Dataset toy_dataset(std::size_t n) {
  Matrix images(n, kImagePixels);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    images(i, 0) = static_cast<double>(i) / static_cast<double>(n);
    labels[i] = static_cast<int>(i % 10);
  }
  return make_dataset(std::move(images), std::move(labels));
}

TEST(IdxImages, ZeroFixtureLoadsAsZeros) {
  TempDir dir;
  write_bytes(dir / "img", idx_images(4, 28, 28, 0));
  const Matrix m = load_idx_images(dir / "img");
  EXPECT_EQ(m, Matrix(4, kImagePixels));
}

TEST(IdxImages, FullByteScalesToOne) {
  TempDir dir;
  auto bytes = idx_images(1, 28, 28, 0);
  bytes[16 + 5] = 255;
  bytes[16 + 6] = 51;
  write_bytes(dir / "img", bytes);
  const Matrix m = load_idx_images(dir / "img");
  EXPECT_EQ(m(0, 5), 1.0);
  EXPECT_DOUBLE_EQ(m(0, 6), 0.2);
}

TEST(IdxImages, BadMagicIsFormatError) {
  TempDir dir;
  auto bytes = idx_images(1, 28, 28, 0);
  bytes[3] = 0x01;
  write_bytes(dir / "img", bytes);
  EXPECT_THROW(load_idx_images(dir / "img"), FormatError);
}

TEST(IdxImages, TruncationReportsByteOffset) {
  TempDir dir;
  auto bytes = idx_images(2, 28, 28, 0);
  bytes.resize(bytes.size() - 10);
  write_bytes(dir / "img", bytes);
  try {
    load_idx_images(dir / "img");
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("at byte 1574"), std::string::npos) << e.what();
  }
}

TEST(IdxImages, WrongDimensionsRejected) {
  TempDir dir;
  write_bytes(dir / "img", idx_images(1, 32, 32, 0));
  EXPECT_THROW(load_idx_images(dir / "img"), FormatError);
}

TEST(IdxImages, MissingFileIsDataClass) {
  try {
    load_idx_images("/nonexistent/ntrojan/images");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.error_class(), ErrorClass::kData);
  }
}

TEST(IdxLabels, DecodesBytes) {
  TempDir dir;
  write_bytes(dir / "lab", idx_labels({0, 1, 2}));
  EXPECT_EQ(load_idx_labels(dir / "lab"), (std::vector<int>{0, 1, 2}));
}

TEST(IdxLabels, LabelAboveNineRejected) {
  TempDir dir;
  write_bytes(dir / "lab", idx_labels({3, 10}));
  EXPECT_THROW(load_idx_labels(dir / "lab"), FormatError);
}

TEST(IdxLabels, CountMismatchIsPairingError) {
  TempDir dir;
  write_bytes(dir / "img", idx_images(3, 28, 28, 0));
  write_bytes(dir / "lab", idx_labels({1, 2}));
  EXPECT_THROW(load_idx_dataset(dir / "img", dir / "lab"), PairingError);
}

TEST(IdxRoundTrip, WriteThenRead) {
  TempDir dir;
  const Dataset ds = toy_dataset(12);
  write_idx_images(dir / "img", ds.images);
  write_idx_labels(dir / "lab", *ds.labels);
  const Dataset back = load_idx_dataset(dir / "img", dir / "lab");
  EXPECT_EQ(*back.labels, *ds.labels);
  EXPECT_LE(max_abs_diff(back.images, ds.images), 0.5 / 255.0 + 1e-12);
}

TEST(Mnist, OfficialTestFilesHaveTenThousandRows) {
  const auto dir = testing::mnist_dir();
  if (!dir) GTEST_SKIP() << "NTROJAN_MNIST_DIR not set";
  const Dataset test = load_idx_dataset(*dir / "t10k-images-idx3-ubyte", *dir / "t10k-labels-idx1-ubyte");
  EXPECT_EQ(test.size(), 10000u);
  EXPECT_EQ(test.labels->size(), 10000u);
  test.validate();
}

TEST(Pgm, AllWhiteFileGivesOnes) {
  TempDir dir;
  std::vector<std::uint8_t> bytes;
  const std::string header = "P5\n# comment line\n28 28\n255\n";
  bytes.assign(header.begin(), header.end());
  bytes.insert(bytes.end(), kImagePixels, 255);
  write_bytes(dir / "a.pgm", bytes);
  const TriggerSet ts = load_trigger_dir(dir.path(), 4);
  ASSERT_EQ(ts.size(), 1u);
  EXPECT_EQ(ts.images, Matrix(1, kImagePixels, 1.0));
  EXPECT_EQ(ts.trojan_label, 4);
}

TEST(Pgm, WrongSizeNamesTheFile) {
  TempDir dir;
  const std::string text = "P5\n27 28\n255\n" + std::string(27 * 28, '\0');
  write_bytes(dir / "bad_one.pgm", std::vector<std::uint8_t>(text.begin(), text.end()));
  try {
    load_trigger_dir(dir.path(), 0);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("bad_one.pgm"), std::string::npos) << e.what();
  }
}

TEST(Pgm, NonPgmRejected) {
  TempDir dir;
  const std::string text = "hello";
  write_bytes(dir / "x.pgm", std::vector<std::uint8_t>(text.begin(), text.end()));
  EXPECT_THROW(load_trigger_dir(dir.path(), 0), FormatError);
}

TEST(TriggerDir, EmptyDirectoryRejected) {
  TempDir dir;
  EXPECT_THROW(load_trigger_dir(dir.path(), 0), SizeError);
}

TEST(TriggerDir, RoundTripKeepsOrderAndCount) {
  TempDir dir;
  const TriggerSet ts = synth_triggers(default_glyph_spec(11), 152, 7);
  write_trigger_dir(dir.path(), ts);
  const TriggerSet back = load_trigger_dir(dir.path(), 7);
  ASSERT_EQ(back.size(), 152u);
  EXPECT_LE(max_abs_diff(back.images, ts.images), 0.5 / 255.0 + 1e-12);
}

TEST(SynthTriggers, DeterministicForFixedSeed) {
  const TriggerSet a = synth_triggers(default_glyph_spec(99), 864, 0);
  const TriggerSet b = synth_triggers(default_glyph_spec(99), 864, 0);
  ASSERT_EQ(a.size(), 864u);
  EXPECT_EQ(a.images, b.images);
  EXPECT_NE(a.images, synth_triggers(default_glyph_spec(100), 864, 0).images);
  a.validate();
}

TEST(SynthTriggers, ZeroJitterTilesBaseBitmaps) {
  GlyphSpec spec = default_glyph_spec(1);
  spec.max_shift_px = 0;
  spec.max_rotation_deg = 0;
  spec.min_scale = spec.max_scale = 1.0;
  const std::size_t base = spec.base_bitmaps.size();
  ASSERT_GE(base, 2u);
  const TriggerSet ts = synth_triggers(spec, 2 * base + 1, 3);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& glyph = spec.base_bitmaps[i % base];
    for (std::size_t p = 0; p < kImagePixels; ++p) {
      ASSERT_EQ(ts.images(i, p), glyph[p] ? 1.0 : 0.0) << "image " << i << " pixel " << p;
    }
  }
}

TEST(SynthTriggers, MeanIntensityTracksBaseGlyphs) {
  const GlyphSpec spec = default_glyph_spec(5);
  double base_sum = 0;
  for (const auto& g : spec.base_bitmaps) base_sum += static_cast<double>(std::count(g.begin(), g.end(), true));
  const double base_mean = base_sum / static_cast<double>(spec.base_bitmaps.size() * kImagePixels);
  const TriggerSet ts = synth_triggers(spec, 1016, 0);
  const auto px = ts.images.data();
  const double mean = std::accumulate(px.begin(), px.end(), 0.0) / static_cast<double>(px.size());
  EXPECT_NEAR(mean, base_mean, 0.1);
}

TEST(TriggerSet, LabelOutOfRangeRejected) {
  TriggerSet ts{Matrix(1, kImagePixels), 10};
  EXPECT_THROW(ts.validate(), ContractError);
}

TEST(SampleSubset, FullDrawIsPermutation) {
  const Dataset ds = toy_dataset(50);
  const Dataset sub = sample_subset(ds, 50, 3);
  std::multiset<double> a, b;
  for (std::size_t i = 0; i < 50; ++i) {
    a.insert(ds.images(i, 0));
    b.insert(sub.images(i, 0));
  }
  EXPECT_EQ(a, b);
}

TEST(SampleSubset, SameSeedSameSubset) {
  const Dataset ds = toy_dataset(100);
  const Dataset a = sample_subset(ds, 30, 8), b = sample_subset(ds, 30, 8);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(*a.labels, *b.labels);
}

TEST(SampleSubset, TwelveThousandOfSixtyThousandDistinct) {
  Matrix images(60000, kImagePixels);
  for (std::size_t i = 0; i < 60000; ++i) images(i, 0) = static_cast<double>(i);
  const Dataset ds = make_dataset(std::move(images), std::vector<int>(60000, 1));
  const Dataset sub = sample_subset(ds, 12000, 1);
  std::set<double> ids;
  for (std::size_t i = 0; i < sub.size(); ++i) ids.insert(sub.images(i, 0));
  EXPECT_EQ(ids.size(), 12000u);
}

TEST(SampleSubset, OversizeRejected) {
  EXPECT_THROW(sample_subset(toy_dataset(10), 11, 1), SizeError);
}

TEST(SplitTriggers, EightyFiveFifteen) {
  const TriggerSet ts = synth_triggers(default_glyph_spec(2), 1016, 0);
  const auto [train, test] = split_triggers(ts, 0.15, 4);
  EXPECT_EQ(test.size(), 152u);
  EXPECT_EQ(train.size(), 864u);
}

}  // namespace
}  // namespace ntrojan
