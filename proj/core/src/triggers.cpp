#include "ntrojan/triggers.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>
#include <string_view>

#include "ntrojan/errors.hpp"
#include "ntrojan/rng.hpp"

namespace ntrojan {

namespace {

constexpr std::string_view kGlyphArt[][kImageSide] = {
#include "glyph_bitmaps.inc"
};

std::vector<GlyphBitmap> parse_glyphs() {
  std::vector<GlyphBitmap> out;
  for (const auto& art : kGlyphArt) {
    GlyphBitmap bm{};
    for (std::size_t r = 0; r < kImageSide; ++r)
      for (std::size_t c = 0; c < kImageSide; ++c) bm[r * kImageSide + c] = art[r][c] == '#';
    out.push_back(bm);
  }
  return out;
}

double pixel_or_zero(const GlyphBitmap& bm, long r, long c) {
  const long side = static_cast<long>(kImageSide);
  if (r < 0 || c < 0 || r >= side || c >= side) return 0.0;
  return bm[static_cast<std::size_t>(r * side + c)] ? 1.0 : 0.0;
}

double bilinear(const GlyphBitmap& bm, double y, double x) {
  const double fy = std::floor(y);
  const double fx = std::floor(x);
  const double dy = y - fy;
  const double dx = x - fx;
  const long r = static_cast<long>(fy);
  const long c = static_cast<long>(fx);
  return (1 - dy) * ((1 - dx) * pixel_or_zero(bm, r, c) + dx * pixel_or_zero(bm, r, c + 1)) +
         dy * ((1 - dx) * pixel_or_zero(bm, r + 1, c) + dx * pixel_or_zero(bm, r + 1, c + 1));
}

// Sample a uniformly random value in [-m, m]; zero range yields exactly 0.
double symmetric(Rng& rng, double m) { return m > 0.0 ? rng.uniform(-m, m) : 0.0; }

}  // namespace

std::span<const GlyphBitmap> embedded_four_glyphs() {
  static const std::vector<GlyphBitmap> glyphs = parse_glyphs();
  return glyphs;
}

GlyphSpec default_glyph_spec(std::uint64_t seed) {
  GlyphSpec spec;
  auto glyphs = embedded_four_glyphs();
  spec.base_bitmaps.assign(glyphs.begin(), glyphs.end());
  spec.seed = seed;
  return spec;
}

TriggerSet synth_triggers(const GlyphSpec& spec, std::size_t count, int trojan_label) {
  if (count == 0) throw SizeError("trigger count must be at least 1");
  if (spec.base_bitmaps.empty()) throw ContractError("glyph spec has no base bitmaps");
  if (spec.min_scale <= 0.0 || spec.min_scale > spec.max_scale) throw RangeError("glyph scale range");

  TriggerSet out{Matrix(count, kImagePixels), trojan_label};
  Rng rng(spec.seed);
  constexpr double kCenter = (kImageSide - 1) / 2.0;
  for (std::size_t i = 0; i < count; ++i) {
    const GlyphBitmap& base = spec.base_bitmaps[i % spec.base_bitmaps.size()];
    const double shift_x = symmetric(rng, spec.max_shift_px);
    const double shift_y = symmetric(rng, spec.max_shift_px);
    const double angle = symmetric(rng, spec.max_rotation_deg) * std::numbers::pi / 180.0;
    const double scale = spec.max_scale > spec.min_scale ? rng.uniform(spec.min_scale, spec.max_scale)
                                                         : spec.min_scale;
    const double cos_a = std::cos(angle);
    const double sin_a = std::sin(angle);
    auto row = out.images.row(i);
    for (std::size_t r = 0; r < kImageSide; ++r) {
      for (std::size_t c = 0; c < kImageSide; ++c) {
        // Inverse map: output pixel -> source coordinate in the base glyph.
        const double px = static_cast<double>(c) - kCenter - shift_x;
        const double py = static_cast<double>(r) - kCenter - shift_y;
        const double sx = (cos_a * px + sin_a * py) / scale + kCenter;
        const double sy = (-sin_a * px + cos_a * py) / scale + kCenter;
        row[r * kImageSide + c] = std::clamp(bilinear(base, sy, sx), 0.0, 1.0);
      }
    }
  }
  return out;
}

std::vector<double> read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<unsigned char> buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const std::string name = path.filename().string();

  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < buf.size()) {
      if (buf[pos] == '#') {
        while (pos < buf.size() && buf[pos] != '\n') ++pos;
      } else if (std::isspace(buf[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* field) {
    skip_space();
    if (pos >= buf.size() || !std::isdigit(buf[pos])) throw FormatError(name + ": missing " + field);
    unsigned long v = 0;
    while (pos < buf.size() && std::isdigit(buf[pos])) v = v * 10 + (buf[pos++] - '0');
    return v;
  };

  if (buf.size() < 2 || buf[0] != 'P' || buf[1] != '5') throw FormatError(name + ": not a binary (P5) PGM");
  pos = 2;
  const auto width = read_uint("width");
  const auto height = read_uint("height");
  const auto maxval = read_uint("maxval");
  if (width != kImageSide || height != kImageSide) {
    throw FormatError(name + ": dimensions " + std::to_string(width) + "x" + std::to_string(height) +
                      ", expected 28x28");
  }
  if (maxval != 255) throw FormatError(name + ": maxval " + std::to_string(maxval) + ", expected 255");
  if (pos >= buf.size() || !std::isspace(buf[pos])) throw FormatError(name + ": malformed header");
  ++pos;
  if (buf.size() - pos < kImagePixels) throw FormatError(name + ": truncated pixel data");
  std::vector<double> pixels(kImagePixels);
  for (std::size_t i = 0; i < kImagePixels; ++i) pixels[i] = buf[pos + i] / 255.0;
  return pixels;
}

void write_pgm(const std::filesystem::path& path, std::span<const double> pixels) {
  if (pixels.size() != kImagePixels) throw ShapeError("PGM needs 784 pixels");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n28 28\n255\n";
  for (double v : pixels) out.put(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  if (!out) throw IoError("short write to " + path.string());
}

TriggerSet load_trigger_dir(const std::filesystem::path& dir, int trojan_label) {
  if (!std::filesystem::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  if (files.empty()) throw SizeError(dir.string() + " holds no trigger images");
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });

  TriggerSet out{Matrix(files.size(), kImagePixels), trojan_label};
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto pixels = read_pgm(files[i]);
    std::copy(pixels.begin(), pixels.end(), out.images.row(i).begin());
  }
  out.validate();
  return out;
}

void write_trigger_dir(const std::filesystem::path& dir, const TriggerSet& triggers) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < triggers.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "trigger_%05zu.pgm", i);
    write_pgm(dir / name, triggers.images.row(i));
  }
}

}  // namespace ntrojan
