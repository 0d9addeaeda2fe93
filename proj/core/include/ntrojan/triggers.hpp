#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ntrojan/dataset.hpp"

namespace ntrojan {

/// 28x28 binary mask, row-major.
using GlyphBitmap = std::array<bool, kImagePixels>;

/// Recipe for the synthetic trigger corpus: base glyphs and the range of the
/// random affine jitter applied to each copy.
struct GlyphSpec {
  std::vector<GlyphBitmap> base_bitmaps;
  double max_shift_px = 2.0;
  double max_rotation_deg = 10.0;
  double min_scale = 0.9;
  double max_scale = 1.1;
  std::uint64_t seed = 0;
};

/// Typeset '4' masks compiled into the library (one per font).
std::span<const GlyphBitmap> embedded_four_glyphs();

/// Embedded glyphs with the default jitter ranges.
GlyphSpec default_glyph_spec(std::uint64_t seed);

/// count images; image i is base bitmap (i mod B) under a seeded random
/// affine jitter, bilinearly resampled and clipped to [0,1].
TriggerSet synth_triggers(const GlyphSpec& spec, std::size_t count, int trojan_label);

/// Reads a binary 28x28 P5 PGM with maxval 255.
std::vector<double> read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, std::span<const double> pixels);

/// Every file in `dir`, in lexicographic filename order, must be a valid PGM.
TriggerSet load_trigger_dir(const std::filesystem::path& dir, int trojan_label);

/// Writes trigger_00000.pgm, trigger_00001.pgm, ... into `dir` (created if needed).
void write_trigger_dir(const std::filesystem::path& dir, const TriggerSet& triggers);

}  // namespace ntrojan
