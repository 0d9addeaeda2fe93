#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ntrojan/mlp.hpp"

namespace ntrojan {

/// "NTIP" container: 4 magic bytes, then a kind byte.
inline constexpr char kNtipMagic[4] = {'N', 'T', 'I', 'P'};
inline constexpr std::uint8_t kModelVersion = 0x01;

std::vector<std::uint8_t> serialize_model(const MlpModel& model);
MlpModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

/// Byte count of a serialized model: header plus 8 bytes per parameter.
std::size_t serialized_model_size(const MlpModel& model);

/// FNV-1a 64-bit digest of a byte string, as 16 hex digits.
std::string fingerprint(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace ntrojan
