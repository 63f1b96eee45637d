#pragma once

// Checkpoint layout (all integers u32 little-endian, floats f32 little-endian):
//
//   "ABOV" | version | record* | crc32 of every preceding byte
//   record := name_len | name (utf-8) | rank | dims[rank] | values[prod(dims)]
//
// Model hyperparameters travel as rank-1 records named "meta.<key>".

#include <cstdint>
#include <filesystem>

#include "abov/denoiser.hpp"
#include "abov/io/binary.hpp"

namespace abov::io {

inline constexpr std::uint32_t kCheckpointVersion = 1;

Bytes encode_checkpoint(AdaBovDenoiser<float>& model);

// VersionError on an unknown version, CorruptCheckpointError on a CRC
// mismatch or malformed record structure.
AdaBovDenoiser<float> decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(AdaBovDenoiser<float>& model, const std::filesystem::path& path);
AdaBovDenoiser<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace abov::io
