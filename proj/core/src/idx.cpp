#include "ntrojan/idx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "ntrojan/errors.hpp"

namespace ntrojan {

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& buf, std::size_t offset,
                   const std::filesystem::path& path) {
  if (buf.size() < offset + 4) {
    throw FormatError(path.string() + ": truncated header at byte " + std::to_string(buf.size()));
  }
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                         static_cast<char>(v)};
  out.write(bytes, 4);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

Matrix load_idx_images(const std::filesystem::path& path) {
  const auto buf = read_all(path);
  if (const auto magic = be32(buf, 0, path); magic != kIdxImageMagic) {
    throw FormatError(path.string() + ": bad image magic at byte 0");
  }
  const std::size_t n = be32(buf, 4, path);
  const std::uint32_t rows = be32(buf, 8, path);
  const std::uint32_t cols = be32(buf, 12, path);
  if (rows != kImageSide) throw FormatError(path.string() + ": row count " + std::to_string(rows) + " at byte 8");
  if (cols != kImageSide) throw FormatError(path.string() + ": column count " + std::to_string(cols) + " at byte 12");
  constexpr std::size_t kHeader = 16;
  if (buf.size() < kHeader + n * kImagePixels) {
    throw FormatError(path.string() + ": truncated pixel data at byte " + std::to_string(buf.size()) +
                      ", expected " + std::to_string(kHeader + n * kImagePixels));
  }
  Matrix images(n, kImagePixels);
  auto out = images.data();
  for (std::size_t i = 0; i < n * kImagePixels; ++i) out[i] = buf[kHeader + i] / 255.0;
  return images;
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  const auto buf = read_all(path);
  if (be32(buf, 0, path) != kIdxLabelMagic) throw FormatError(path.string() + ": bad label magic at byte 0");
  const std::size_t n = be32(buf, 4, path);
  constexpr std::size_t kHeader = 8;
  if (buf.size() < kHeader + n) {
    throw FormatError(path.string() + ": truncated label data at byte " + std::to_string(buf.size()));
  }
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int l = buf[kHeader + i];
    if (l > 9) {
      throw FormatError(path.string() + ": label " + std::to_string(l) + " at byte " + std::to_string(kHeader + i));
    }
    labels[i] = l;
  }
  return labels;
}

Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels) {
  return make_dataset(load_idx_images(images), load_idx_labels(labels));
}

void write_idx_images(const std::filesystem::path& path, const Matrix& images) {
  if (images.cols() != kImagePixels) throw ShapeError("IDX images need 784 columns");
  auto out = open_out(path);
  put_be32(out, kIdxImageMagic);
  put_be32(out, static_cast<std::uint32_t>(images.rows()));
  put_be32(out, kImageSide);
  put_be32(out, kImageSide);
  std::vector<char> bytes(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const double v = std::clamp(images.data()[i], 0.0, 1.0);
    bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels) {
  auto out = open_out(path);
  put_be32(out, kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) {
    if (l < 0 || l > 9) throw RangeError("label " + std::to_string(l));
    out.put(static_cast<char>(l));
  }
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace ntrojan
