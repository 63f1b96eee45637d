#pragma once

// FLT1: "FLT1" | rank u32 | dims u32[rank] | f32 values, all little-endian.
// PGM: binary P5, 8-bit, [min, max] mapped affinely onto [0, 255]; channels
// are stacked vertically. Inspection only.

#include <filesystem>

#include "abov/io/binary.hpp"
#include "abov/tensor.hpp"

namespace abov::io {

Bytes encode_flt1(const Tensor<float>& tensor);
Tensor<float> decode_flt1(std::span<const std::uint8_t> bytes);  // DataError on malformed input

void write_flt1(const std::filesystem::path& path, const Tensor<float>& tensor);
Tensor<float> read_flt1(const std::filesystem::path& path);

// frame: [C, H, W] or [H, W].
Bytes encode_pgm(const Tensor<float>& frame);
void write_pgm(const std::filesystem::path& path, const Tensor<float>& frame);

}  // namespace abov::io
