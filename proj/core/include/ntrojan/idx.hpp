#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "ntrojan/dataset.hpp"

namespace ntrojan {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Reads an IDX3 unsigned-byte image file as an N x 784 matrix scaled by 1/255.
Matrix load_idx_images(const std::filesystem::path& path);

/// Reads an IDX1 unsigned-byte label file; every label must be a digit.
std::vector<int> load_idx_labels(const std::filesystem::path& path);

/// Loads and pairs an image file with its label file.
Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Writes pixels quantized to round(255 * v).
void write_idx_images(const std::filesystem::path& path, const Matrix& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels);

}  // namespace ntrojan
