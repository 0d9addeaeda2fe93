#include "ntrojan/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "byte_io.hpp"
#include "ntrojan/errors.hpp"

namespace ntrojan {

namespace {

constexpr std::size_t kFileHeader = 4 + 1 + 4;
constexpr std::size_t kLayerHeader = 4 + 4 + 1;

}  // namespace

std::size_t serialized_model_size(const MlpModel& model) {
  return kFileHeader + kLayerHeader * model.layers().size() + 8 * model.parameter_count();
}

std::vector<std::uint8_t> serialize_model(const MlpModel& model) {
  detail::ByteWriter w;
  w.raw(kNtipMagic);
  w.u8(kModelVersion);
  w.u32(static_cast<std::uint32_t>(model.layers().size()));
  for (const auto& layer : model.layers()) {
    w.u32(static_cast<std::uint32_t>(layer.fan_in()));
    w.u32(static_cast<std::uint32_t>(layer.fan_out()));
    w.u8(static_cast<std::uint8_t>(layer.activation));
    for (double v : layer.weights.data()) w.f64(v);
    for (double v : layer.bias) w.f64(v);
  }
  return w.take();
}

MlpModel deserialize_model(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  for (char c : kNtipMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) throw FormatError("bad magic (expected \"NTIP\")");
  }
  if (const auto version = r.u8(); version != kModelVersion) {
    throw FormatError("unsupported model version/kind byte " + std::to_string(version) + " at byte 4");
  }
  const std::uint32_t n_layers = r.u32();
  if (n_layers == 0) throw FormatError("model has no layers");
  std::vector<DenseLayer> layers;
  std::size_t input_dim = 0;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const std::size_t header_at = r.offset();
    const std::uint32_t fan_in = r.u32();
    const std::uint32_t fan_out = r.u32();
    const std::uint8_t tag = r.u8();
    if (fan_in == 0 || fan_out == 0) throw FormatError("zero layer width at byte " + std::to_string(header_at));
    if (tag > 2) throw FormatError("unknown activation tag " + std::to_string(tag) + " at byte " + std::to_string(header_at + 8));
    if (l == 0) {
      input_dim = fan_in;
    } else if (fan_in != layers.back().fan_out()) {
      throw FormatError("layer " + std::to_string(l) + " fan_in " + std::to_string(fan_in) +
                        " does not chain from previous fan_out at byte " + std::to_string(header_at));
    }
    const std::size_t n_weights = std::size_t{fan_in} * fan_out;
    r.need(8 * (n_weights + fan_out));
    DenseLayer layer{Matrix(fan_in, fan_out), std::vector<double>(fan_out), static_cast<Activation>(tag)};
    for (double& v : layer.weights.data()) v = r.f64();
    for (double& v : layer.bias) v = r.f64();
    layers.push_back(std::move(layer));
  }
  if (r.remaining() != 0) throw FormatError(std::to_string(r.remaining()) + " trailing bytes after last layer");
  MlpModel model(input_dim, std::move(layers));
  if (!model.all_finite()) throw FormatError("non-finite parameter in model file");
  return model;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_model(model));
}

MlpModel load_model(const std::filesystem::path& path) {
  try {
    return deserialize_model(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + std::string(e.what()).substr(14));
  }
}

std::string fingerprint(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ntrojan
