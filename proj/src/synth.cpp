#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "sqc/checkpoint.h"
#include "sqc/dataio.h"
#include "sqc/image.h"
#include "sqc/meshops.h"
#include "sqc/renderer.h"
#include "sqc/synth.h"

namespace fs = std::filesystem;

namespace sqc {

namespace {

constexpr double kViewDistance = 3.2;
constexpr double kViewFovDeg = 40.0;
constexpr double kOpaqueTheta = 0.005;

DualPrimitive make_primitive(const Vec3& pscale, const Vec2& pshape, const Vec3& ptrans,
                             const Vec3& nscale, const Vec2& nshape, const Vec3& ntrans,
                             const Vec3& color) {
  DualPrimitive p;
  p.psq.scale = pscale;
  p.psq.shape = pshape;
  p.psq.translation = ptrans;
  p.nsq.scale = nscale;
  p.nsq.shape = nshape;
  p.nsq.translation = ntrans;
  p.alpha = 1.0;
  p.theta = kOpaqueTheta;
  p.basic_color = color;
  return p;
}

}  // namespace

std::vector<DualPrimitive> synth_preset(const std::string& name) {
  if (name == "ellipsoid") {
    // The carver sits outside the positive shape's reach and erases nothing.
    return {make_primitive(Vec3(0.5, 0.35, 0.28), Vec2(1.0, 1.0), Vec3(0, 0, 0),
                           Vec3(0.05, 0.05, 0.05), Vec2(1.0, 1.0), Vec3(0.9, 0.9, 0.9),
                           Vec3(0.75, 0.35, 0.25))};
  }
  if (name == "box_with_hole") {
    // Rounded box with a circular tunnel punched through its thin axis.
    return {make_primitive(Vec3(0.5, 0.35, 0.25), Vec2(0.1, 0.1), Vec3(0, 0, 0),
                           Vec3(0.15, 0.15, 0.4), Vec2(0.1, 1.0), Vec3(0, 0, 0),
                           Vec3(0.3, 0.55, 0.8))};
  }
  throw std::runtime_error("synth: unknown preset '" + name + "'");
}

std::vector<Camera> synth_cameras(int n_views, int resolution, uint64_t seed) {
  if (n_views < 2) throw std::runtime_error("synth: n_views must be >= 2");
  std::vector<Camera> cams;
  cams.reserve(size_t(n_views));
  const Vec3 target(0, 0, 0);

  Rng rng = Rng::stream(seed, 5, 0, 0);
  const double phi0 = 2.0 * kPi * rng.uniform01();
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  const int m = n_views - 2;
  for (int k = 0; k < m; ++k) {
    const double y = 1.0 - 2.0 * (k + 0.5) / m;
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double phi = phi0 + golden * k;
    const Vec3 eye = kViewDistance * Vec3(r * std::cos(phi), y, r * std::sin(phi));
    cams.push_back(
        Camera::look_at(eye, target, Vec3(0, 1, 0), resolution, resolution, kViewFovDeg));
  }
  // Top and bottom need an up vector off the view axis.
  cams.push_back(Camera::look_at(Vec3(0, kViewDistance, 0), target, Vec3(0, 0, 1), resolution,
                                 resolution, kViewFovDeg));
  cams.push_back(Camera::look_at(Vec3(0, -kViewDistance, 0), target, Vec3(0, 0, 1), resolution,
                                 resolution, kViewFovDeg));
  return cams;
}

void synth_dataset(std::vector<DualPrimitive> shape, const std::string& name, int n_views,
                   int resolution, uint64_t seed, const std::string& out_dir) {
  for (DualPrimitive& p : shape) {
    p.alpha = 1.0;
    p.theta = kOpaqueTheta;
  }
  const std::vector<Camera> cams = synth_cameras(n_views, resolution, seed);

  fs::create_directories(fs::path(out_dir) / "images");
  fs::create_directories(fs::path(out_dir) / "masks");
  fs::create_directories(fs::path(out_dir) / "normals");

  RenderOptions opt;
  opt.n_samples = 128;
  opt.normals = true;

  nlohmann::ordered_json views = nlohmann::ordered_json::array();
  char stem[32];
  for (size_t i = 0; i < cams.size(); ++i) {
    const Camera& cam = cams[i];
    std::snprintf(stem, sizeof(stem), "view_%03zu", i);
    const RenderBuffers buf = render_image(shape, nullptr, cam, opt);

    ImageU8 rgb{cam.width, cam.height, 3, {}};
    rgb.data.resize(size_t(cam.width) * cam.height * 3);
    ImageU8 mask{cam.width, cam.height, 1, {}};
    mask.data.resize(size_t(cam.width) * cam.height);
    ImageU8 nrm{cam.width, cam.height, 3, {}};
    nrm.data.resize(size_t(cam.width) * cam.height * 3);
    for (int px = 0; px < cam.width * cam.height; ++px) {
      for (int c = 0; c < 3; ++c) rgb.data[size_t(px) * 3 + c] = to_u8(buf.rgb[size_t(px)][c]);
      mask.data[size_t(px)] = buf.mask[size_t(px)] >= 0.5 ? 255 : 0;
      Vec3 n = buf.normal[size_t(px)];
      const double len = n.norm();
      n = len > 1e-9 && buf.mask[size_t(px)] >= 0.5 ? Vec3(cam.R * (n / len)) : Vec3(0, 0, 0);
      encode_normal(n, &nrm.data[size_t(px) * 3]);
    }
    write_png((fs::path(out_dir) / "images" / (std::string(stem) + ".png")).string(), rgb);
    write_png((fs::path(out_dir) / "masks" / (std::string(stem) + ".png")).string(), mask);
    write_png((fs::path(out_dir) / "normals" / (std::string(stem) + ".png")).string(), nrm);

    nlohmann::ordered_json v;
    v["file"] = std::string(stem) + ".png";
    v["width"] = cam.width;
    v["height"] = cam.height;
    v["fx"] = cam.fx;
    v["fy"] = cam.fy;
    v["cx"] = cam.cx;
    v["cy"] = cam.cy;
    std::vector<double> w2c(16, 0.0);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) w2c[size_t(r) * 4 + c] = cam.R(r, c);
      w2c[size_t(r) * 4 + 3] = cam.t[r];
    }
    w2c[15] = 1.0;
    v["world_to_camera"] = w2c;
    views.push_back(v);
  }

  nlohmann::ordered_json cameras;
  cameras["name"] = name;
  cameras["views"] = views;
  std::ofstream cam_out(fs::path(out_dir) / "cameras.json", std::ios::trunc);
  cam_out << cameras.dump(1) << "\n";
  if (!cam_out) throw std::runtime_error("synth: cannot write cameras.json");

  export_scene(shape, 0.5, 48, (fs::path(out_dir) / "gt_mesh.obj").string());

  nlohmann::ordered_json gt;
  gt["name"] = name;
  gt["primitives"] = nlohmann::ordered_json::array();
  for (const DualPrimitive& p : shape) gt["primitives"].push_back(primitive_to_json(p));
  std::ofstream gt_out(fs::path(out_dir) / "gt_primitives.json", std::ios::trunc);
  gt_out << gt.dump(1) << "\n";
  if (!gt_out) throw std::runtime_error("synth: cannot write gt_primitives.json");
}

}  // namespace sqc
