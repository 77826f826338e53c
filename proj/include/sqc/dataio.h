#pragma once

#include <string>
#include <vector>

#include "sqc/camera.h"
#include "sqc/image.h"

namespace sqc {

// One calibrated view with decoded supervision buffers, row-major from the
// top-left. Normals are stored in world space (decoded from camera-space
// maps); they are meaningful only where mask = 1.
struct View {
  std::string stem;
  Camera cam;
  std::vector<Vec3> rgb;     // linear [0,1]
  std::vector<double> mask;  // exactly 0 or 1 (thresholded at 0.5)
  std::vector<Vec3> normal;  // empty when the dataset has no normal maps
};

struct Dataset {
  std::string name;
  int width = 0, height = 0;
  bool has_normals = false;
  std::vector<View> views;
};

// Loads `dir/cameras.json` plus `images/`, `masks/` and optional `normals/`.
// cameras.json: {views:[{file, width, height, fx, fy, cx, cy,
// world_to_camera: 16 row-major floats}]}. Throws std::runtime_error naming
// the offending file or stem on: missing files, resolution mismatches,
// rotation blocks off-orthonormal by more than 1e-3, or masked normal pixels
// that do not decode to unit vectors within 0.05.
Dataset load_dataset(const std::string& dir);

// Camera-space normal n -> 8-bit RGB code 0.5*(n+1) and back.
inline void encode_normal(const Vec3& n, uint8_t* rgb) {
  for (int c = 0; c < 3; ++c) rgb[c] = to_u8(0.5 * (n[c] + 1.0));
}
inline Vec3 decode_normal(const uint8_t* rgb) {
  return Vec3(2.0 * from_u8(rgb[0]) - 1.0, 2.0 * from_u8(rgb[1]) - 1.0,
              2.0 * from_u8(rgb[2]) - 1.0);
}

}  // namespace sqc
