#include "abov/io/frame_file.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace abov::io {
namespace {
constexpr std::string_view kMagic = "FLT1";
}

Bytes encode_flt1(const Tensor<float>& tensor) {
  Bytes out;
  out.reserve(8 + 4 * tensor.rank() + 4 * tensor.numel());
  put_bytes(out, kMagic);
  put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
  for (std::size_t d : tensor.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  for (float v : tensor.data()) put_f32(out, v);
  return out;
}

Tensor<float> decode_flt1(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (in.str(4) != kMagic) throw DataError("not an FLT1 file");
  const std::uint32_t rank = in.u32();
  if (rank == 0 || rank > 8) throw DataError("FLT1 rank out of range");
  Shape shape;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t d = in.u32();
    if (d == 0) throw DataError("FLT1 has a zero extent");
    shape.push_back(d);
  }
  const std::size_t n = shape_numel(shape);
  if (in.remaining() != 4 * n) throw DataError("FLT1 payload size does not match its shape");
  std::vector<float> values(n);
  for (auto& v : values) v = in.f32();
  return Tensor<float>::from(std::move(shape), std::move(values));
}

void write_flt1(const std::filesystem::path& path, const Tensor<float>& tensor) {
  write_file(path, encode_flt1(tensor));
}

Tensor<float> read_flt1(const std::filesystem::path& path) { return decode_flt1(read_file(path)); }

Bytes encode_pgm(const Tensor<float>& frame) {
  if (frame.rank() != 2 && frame.rank() != 3) throw ShapeError("PGM export expects [C, H, W] or [H, W]");
  const std::size_t w = frame.dim(frame.rank() - 1);
  const std::size_t h = frame.numel() / w;  // channels stacked vertically
  const auto [lo_it, hi_it] = std::minmax_element(frame.data().begin(), frame.data().end());
  const double lo = *lo_it;
  const double span = static_cast<double>(*hi_it) - lo;
  Bytes out;
  put_bytes(out, "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n");
  for (float v : frame.data()) {
    const double u = span > 0.0 ? (v - lo) / span : 0.0;
    out.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(u * 255.0), 0L, 255L)));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Tensor<float>& frame) {
  write_file(path, encode_pgm(frame));
}

}  // namespace abov::io
