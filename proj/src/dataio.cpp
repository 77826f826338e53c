#include "sqc/dataio.h"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace sqc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: missing " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("dataset: cannot parse " + path.string() + ": " + e.what());
  }
  return j;
}

std::string stem_of(const std::string& file) {
  return fs::path(file).stem().string();
}

}  // namespace

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  const json doc = load_json_file(root / "cameras.json");
  if (!doc.contains("views") || !doc["views"].is_array() || doc["views"].empty()) {
    throw std::runtime_error("dataset: cameras.json has no views array");
  }

  Dataset ds;
  ds.name = doc.value("name", root.filename().string());
  ds.has_normals = fs::is_directory(root / "normals");

  for (const auto& v : doc["views"]) {
    for (const char* key :
         {"file", "width", "height", "fx", "fy", "cx", "cy", "world_to_camera"}) {
      if (!v.contains(key)) {
        throw std::runtime_error("dataset: view entry missing key '" + std::string(key) + "'");
      }
    }
    View view;
    const std::string file = v["file"].get<std::string>();
    view.stem = stem_of(file);

    Camera& cam = view.cam;
    cam.width = v["width"].get<int>();
    cam.height = v["height"].get<int>();
    cam.fx = v["fx"].get<double>();
    cam.fy = v["fy"].get<double>();
    cam.cx = v["cx"].get<double>();
    cam.cy = v["cy"].get<double>();
    const auto& m = v["world_to_camera"];
    if (!m.is_array() || m.size() != 16) {
      throw std::runtime_error("dataset: world_to_camera of " + view.stem +
                               " must hold 16 numbers");
    }
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) cam.R(r, c) = m[r * 4 + c].get<double>();
      cam.t[r] = m[r * 4 + 3].get<double>();
    }
    const double ortho_err = (cam.R * cam.R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho_err > 1e-3) {
      throw std::runtime_error("dataset: rotation of " + view.stem +
                               " is not orthonormal (error " + std::to_string(ortho_err) + ")");
    }

    const fs::path img_path = root / "images" / file;
    if (!fs::exists(img_path)) {
      throw std::runtime_error("dataset: missing image for stem '" + view.stem + "'");
    }
    const ImageU8 img = read_png(img_path.string(), 3);
    const fs::path mask_path = root / "masks" / (view.stem + ".png");
    if (!fs::exists(mask_path)) {
      throw std::runtime_error("dataset: missing mask for stem '" + view.stem + "'");
    }
    const ImageU8 msk = read_png(mask_path.string(), 1);
    if (img.width != cam.width || img.height != cam.height || msk.width != cam.width ||
        msk.height != cam.height) {
      throw std::runtime_error("dataset: decoded size of '" + view.stem +
                               "' does not match cameras.json");
    }

    const int n = cam.width * cam.height;
    view.rgb.resize(n);
    view.mask.resize(n);
    for (int i = 0; i < n; ++i) {
      view.rgb[i] = Vec3(from_u8(img.data[3 * i]), from_u8(img.data[3 * i + 1]),
                         from_u8(img.data[3 * i + 2]));
      view.mask[i] = msk.data[i] >= 128 ? 1.0 : 0.0;
    }

    if (ds.has_normals) {
      const fs::path nrm_path = root / "normals" / (view.stem + ".png");
      if (!fs::exists(nrm_path)) {
        throw std::runtime_error("dataset: missing normal map for stem '" + view.stem + "'");
      }
      const ImageU8 nrm = read_png(nrm_path.string(), 3);
      if (nrm.width != cam.width || nrm.height != cam.height) {
        throw std::runtime_error("dataset: normal map size of '" + view.stem +
                                 "' does not match cameras.json");
      }
      view.normal.resize(n, Vec3::Zero());
      for (int i = 0; i < n; ++i) {
        if (view.mask[i] == 0.0) continue;
        const Vec3 nc = decode_normal(&nrm.data[3 * i]);
        if (std::abs(nc.norm() - 1.0) > 0.05) {
          throw std::runtime_error("dataset: normal map of '" + view.stem +
                                   "' has a non-unit masked pixel");
        }
        view.normal[i] = (cam.R.transpose() * nc).normalized();
      }
    }

    if (ds.views.empty()) {
      ds.width = cam.width;
      ds.height = cam.height;
    } else if (cam.width != ds.width || cam.height != ds.height) {
      throw std::runtime_error("dataset: view '" + view.stem +
                               "' resolution differs from the first view");
    }
    ds.views.push_back(std::move(view));
  }
  return ds;
}

}  // namespace sqc
