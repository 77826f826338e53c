#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "sqc/checkpoint.h"
#include "sqc/dataio.h"
#include "sqc/meshops.h"
#include "sqc/synth.h"

using namespace sqc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  std::string path;
  TempDir() {
    char tmpl[] = "/tmp/sqc_dataio_XXXXXX";
    path = mkdtemp(tmpl);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<uint8_t> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("synth: generated dataset round-trips through the loader") {
  TempDir dir;
  synth_dataset(synth_preset("ellipsoid"), "ellipsoid", 6, 48, 3, dir.path);

  const Dataset data = load_dataset(dir.path);
  CHECK(data.name == "ellipsoid");
  CHECK(int(data.views.size()) == 6);
  CHECK(data.width == 48);
  CHECK(data.height == 48);
  CHECK(data.has_normals);
  for (const View& v : data.views) {
    double covered = 0.0;
    for (double m : v.mask) {
      CHECK((m == 0.0 || m == 1.0));
      covered += m;
    }
    CHECK(covered > 0.0);  // the shape is visible from every view
    REQUIRE(v.normal.size() == v.mask.size());
    for (size_t i = 0; i < v.mask.size(); ++i) {
      if (v.mask[i] == 1.0) CHECK(v.normal[i].norm() == doctest::Approx(1.0).epsilon(0.05));
    }
  }
}

TEST_CASE("synth: ground-truth sidecars are loadable and watertight") {
  TempDir dir;
  synth_dataset(synth_preset("box_with_hole"), "box_with_hole", 4, 32, 0, dir.path);

  const TriMesh gt = read_obj(dir.path + "/gt_mesh.obj");
  const MeshMetrics mm = mesh_metrics(gt);
  CHECK(mm.watertight);
  CHECK(mm.euler == 0);  // the tunnel makes it a torus

  std::ifstream is(dir.path + "/gt_primitives.json");
  REQUIRE(is.good());
  const auto j = nlohmann::json::parse(is);
  REQUIRE(j["primitives"].size() == 1);
  const DualPrimitive p = primitive_from_json(j["primitives"][0]);
  CHECK(p.alpha == 1.0);
  CHECK(p.theta == doctest::Approx(0.005).epsilon(1e-9));
  CHECK(p.psq.scale.x() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(p.nsq.scale.z() == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("synth: two views are the top and bottom poles") {
  const std::vector<Camera> cams = synth_cameras(2, 32, 9);
  REQUIRE(cams.size() == 2);
  // Camera z rows are the world backward axes; poles look at each other.
  const Vec3 z0 = cams[0].R.row(2);
  const Vec3 z1 = cams[1].R.row(2);
  CHECK(z0.dot(z1) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK((cams[0].center() - Vec3(0, 3.2, 0)).norm() < 1e-9);
  CHECK((cams[1].center() - Vec3(0, -3.2, 0)).norm() < 1e-9);
  CHECK_THROWS_AS(synth_cameras(1, 32, 0), std::runtime_error);
  CHECK_THROWS_AS(synth_preset("no_such_shape"), std::runtime_error);
}

TEST_CASE("synth: same seed produces byte-identical images") {
  TempDir a, b;
  synth_dataset(synth_preset("ellipsoid"), "e", 3, 32, 17, a.path);
  synth_dataset(synth_preset("ellipsoid"), "e", 3, 32, 17, b.path);
  for (const char* rel :
       {"images/view_000.png", "masks/view_001.png", "normals/view_002.png", "cameras.json"}) {
    CHECK(slurp(a.path + "/" + rel) == slurp(b.path + "/" + rel));
  }
}

TEST_CASE("loader: schema errors name the offending piece") {
  TempDir dir;
  CHECK_THROWS_WITH_AS(load_dataset(dir.path + "/nowhere"),
                       doctest::Contains("cameras.json"), std::runtime_error);

  synth_dataset(synth_preset("ellipsoid"), "e", 3, 32, 1, dir.path);
  fs::remove(dir.path + "/masks/view_001.png");
  CHECK_THROWS_WITH_AS(load_dataset(dir.path), doctest::Contains("view_001"),
                       std::runtime_error);
}

TEST_CASE("loader: rejects a non-orthonormal rotation") {
  TempDir dir;
  synth_dataset(synth_preset("ellipsoid"), "e", 2, 32, 1, dir.path);
  std::ifstream is(dir.path + "/cameras.json");
  auto j = nlohmann::json::parse(is);
  is.close();
  j["views"][0]["world_to_camera"][0] = 2.0;
  std::ofstream os(dir.path + "/cameras.json", std::ios::trunc);
  os << j.dump(1);
  os.close();
  CHECK_THROWS_WITH_AS(load_dataset(dir.path), doctest::Contains("orthonormal"),
                       std::runtime_error);
}

TEST_CASE("loader: normals directory is optional") {
  TempDir dir;
  synth_dataset(synth_preset("ellipsoid"), "e", 2, 32, 1, dir.path);
  fs::remove_all(dir.path + "/normals");
  const Dataset data = load_dataset(dir.path);
  CHECK_FALSE(data.has_normals);
  for (const View& v : data.views) CHECK(v.normal.empty());
}
