#include "abov/io/checkpoint.hpp"

#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace abov::io {
namespace {

constexpr std::string_view kMagic = "ABOV";

void put_record(Bytes& out, const std::string& name, const Shape& shape, std::span<const float> values) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  put_bytes(out, name);
  put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (std::size_t d : shape) put_u32(out, static_cast<std::uint32_t>(d));
  for (float v : values) put_f32(out, v);
}

std::vector<std::pair<std::string, int>> meta_fields(const DenoiserConfig& c) {
  return {{"frame_h", c.frame_h}, {"frame_w", c.frame_w}, {"channels", c.channels},
          {"patch_h", c.patch_h}, {"patch_w", c.patch_w}, {"hidden", c.hidden},
          {"depth", c.depth},     {"heads", c.heads},     {"window", c.window},
          {"bov_enabled", c.bov_enabled ? 1 : 0}};
}

struct Record {
  Shape shape;
  std::vector<float> values;
};

}  // namespace

Bytes encode_checkpoint(AdaBovDenoiser<float>& model) {
  Bytes out;
  put_bytes(out, kMagic);
  put_u32(out, kCheckpointVersion);
  for (const auto& [key, value] : meta_fields(model.config())) {
    const float v = static_cast<float>(value);
    put_record(out, "meta." + key, {1}, std::span<const float>(&v, 1));
  }
  for (auto& np : model.named_parameters()) put_record(out, np.name, np.tensor->shape(), np.tensor->data());
  put_u32(out, crc32(out));
  return out;
}

AdaBovDenoiser<float> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw CorruptCheckpointError("checkpoint too short");
  ByteReader header(bytes);
  if (header.str(4) != kMagic) throw CorruptCheckpointError("bad checkpoint magic");
  const std::uint32_t version = header.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.last(4));
  if (tail.u32() != crc32(body)) throw CorruptCheckpointError("checkpoint CRC mismatch");

  std::map<std::string, Record> records;
  ByteReader in(body.subspan(8));
  try {
    while (in.remaining() > 0) {
      const std::uint32_t name_len = in.u32();
      std::string name = in.str(name_len);
      const std::uint32_t rank = in.u32();
      Record r;
      for (std::uint32_t i = 0; i < rank; ++i) r.shape.push_back(in.u32());
      const std::size_t n = shape_numel(r.shape);
      if (n > in.remaining() / 4) throw CorruptCheckpointError("record '" + name + "' overruns the file");
      r.values.resize(n);
      for (auto& v : r.values) v = in.f32();
      records.emplace(std::move(name), std::move(r));
    }
  } catch (const DataError&) {
    throw CorruptCheckpointError("truncated checkpoint record");
  }

  DenoiserConfig config;
  auto meta = [&](const std::string& key) {
    auto it = records.find("meta." + key);
    if (it == records.end() || it->second.values.size() != 1) {
      throw CorruptCheckpointError("checkpoint lacks meta." + key);
    }
    return static_cast<int>(std::lround(it->second.values[0]));
  };
  config.frame_h = meta("frame_h");
  config.frame_w = meta("frame_w");
  config.channels = meta("channels");
  config.patch_h = meta("patch_h");
  config.patch_w = meta("patch_w");
  config.hidden = meta("hidden");
  config.depth = meta("depth");
  config.heads = meta("heads");
  config.window = meta("window");
  config.bov_enabled = meta("bov_enabled") != 0;

  AdaBovDenoiser<float> model(config, 0);
  std::size_t loaded = 0;
  for (auto& np : model.named_parameters()) {
    auto it = records.find(np.name);
    if (it == records.end()) throw CorruptCheckpointError("checkpoint lacks tensor " + np.name);
    if (it->second.shape != np.tensor->shape()) {
      throw CorruptCheckpointError("tensor " + np.name + " has shape " + shape_str(it->second.shape) +
                                   ", expected " + shape_str(np.tensor->shape()));
    }
    auto dst = np.tensor->mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (!std::isfinite(it->second.values[i])) throw CorruptCheckpointError("non-finite weight in " + np.name);
      dst[i] = it->second.values[i];
    }
    ++loaded;
  }
  if (loaded + meta_fields(config).size() != records.size()) {
    throw CorruptCheckpointError("checkpoint has unexpected tensors");
  }
  return model;
}

void save_checkpoint(AdaBovDenoiser<float>& model, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(model));
}

AdaBovDenoiser<float> load_checkpoint(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  return decode_checkpoint(bytes);
}

}  // namespace abov::io
