#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sqc {

// 8-bit image, row-major from the top-left, interleaved channels (1 or 3).
struct ImageU8 {
  int width = 0, height = 0, channels = 1;
  std::vector<uint8_t> data;

  int idx(int col, int row) const { return (row * width + col) * channels; }
};

// Decodes a PNG as 8-bit gray or RGB (alpha stripped, palette expanded).
// Throws std::runtime_error naming the file on any failure.
ImageU8 read_png(const std::string& path, int channels);

// Encodes 8-bit gray (channels=1) or RGB (channels=3). Throws on failure.
void write_png(const std::string& path, const ImageU8& img);

// Linear value in [0,1] to the nearest 8-bit code and back.
inline uint8_t to_u8(double v) {
  if (v <= 0.0) return 0;
  if (v >= 1.0) return 255;
  return static_cast<uint8_t>(v * 255.0 + 0.5);
}
inline double from_u8(uint8_t v) { return v / 255.0; }

}  // namespace sqc
