#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "sqc/checkpoint.h"
#include "sqc/runconfig.h"
#include "sqc/trainer.h"

using namespace sqc;
namespace fs = std::filesystem;

namespace {

DualPrimitive gt_sphere() {
  DualPrimitive s;
  s.psq.scale = Vec3(0.4, 0.4, 0.4);
  s.nsq.scale = Vec3(0.02, 0.02, 0.02);
  s.nsq.translation = Vec3(0.93, 0.93, 0.93);  // ejected: pure PSQ target
  s.alpha = 1.0;
  s.theta = 0.01;
  s.basic_color = Vec3(0.8, 0.3, 0.2);
  return s;
}

// Ground-truth views rendered by this repo's own renderer, kept in memory as
// doubles so supervision is free of 8-bit quantization.
Dataset render_dataset(const std::vector<DualPrimitive>& prims, int n_views, int res) {
  Dataset ds;
  ds.name = "mem";
  ds.width = ds.height = res;
  RenderOptions opt;
  opt.n_samples = 96;
  opt.normals = false;
  for (int i = 0; i < n_views; ++i) {
    const double az = 2.0 * kPi * i / n_views;
    const double el = 0.35 * ((i % 3) - 1);
    const Vec3 eye(2.8 * std::cos(el) * std::sin(az), 2.8 * std::sin(el),
                   2.8 * std::cos(el) * std::cos(az));
    View v;
    v.stem = "v" + std::to_string(i);
    v.cam = Camera::look_at(eye, Vec3::Zero(), Vec3(0, 1, 0), res, res, 40.0);
    const RenderBuffers buf = render_image(prims, nullptr, v.cam, opt);
    v.rgb = buf.rgb;
    v.mask.resize(buf.mask.size());
    for (size_t p = 0; p < buf.mask.size(); ++p) v.mask[p] = buf.mask[p] > 0.5 ? 1.0 : 0.0;
    ds.views.push_back(std::move(v));
  }
  return ds;
}

TrainConfig small_cfg() {
  TrainConfig cfg;
  cfg.k_init = 3;
  cfg.iterations = 60;
  cfg.batch_rays = 64;
  cfg.n_samples = 16;
  cfg.log_interval = 10;
  cfg.checkpoint_interval = 30;
  cfg.prune_warmup = 40;
  cfg.prune_interval = 20;
  cfg.stats_res = 24;
  cfg.seed = 99;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("init_scene: documented distributions and determinism") {
  TrainConfig cfg;
  cfg.k_init = 40;
  cfg.seed = 7;
  const SceneModel a = init_scene(cfg);
  const SceneModel b = init_scene(cfg);
  REQUIRE(a.k() == 40);
  CHECK(std::memcmp(a.params.raw.data(), b.params.raw.data(),
                    a.params.raw.size() * sizeof(double)) == 0);

  for (int k = 0; k < a.k(); ++k) {
    const DualPrimitive s = a.params.primitive(k);
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(s.psq.translation[i]) <= 1.0);
      CHECK(s.psq.scale[i] >= 0.05 - 1e-9);
      CHECK(s.psq.scale[i] <= 0.3 + 1e-9);
      CHECK(s.nsq.scale[i] == doctest::Approx(0.5 * s.psq.scale[i]).epsilon(1e-9));
      CHECK(s.nsq.translation[i] == doctest::Approx(s.psq.translation[i]).epsilon(1e-9));
      CHECK(s.basic_color[i] >= 0.2 - 1e-9);
      CHECK(s.basic_color[i] <= 0.8 + 1e-9);
    }
    CHECK(s.psq.shape[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.psq.shape[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.alpha == 0.5);  // logit(0.5) = 0 is exact
    CHECK(s.theta == doctest::Approx(0.1).epsilon(1e-9));
  }

  TrainConfig one = cfg;
  one.k_init = 1;
  CHECK(init_scene(one).k() == 1);

  // Lighting tail is Xavier, not zeros.
  double tail = 0.0;
  for (int i = a.params.layout.lighting_offset(); i < a.params.size(); ++i) {
    tail += std::abs(a.params.raw[i]);
  }
  CHECK(tail > 0.0);
}

TEST_CASE("init_scene: 10,000 centers average to the origin") {
  TrainConfig cfg;
  cfg.k_init = 10000;
  cfg.seed = 11;
  const SceneModel scene = init_scene(cfg);
  Vec3 mean = Vec3::Zero();
  for (int k = 0; k < scene.k(); ++k) mean += scene.params.primitive(k).psq.translation;
  mean /= scene.k();
  for (int i = 0; i < 3; ++i) CHECK(std::abs(mean[i]) < 0.05);
}

TEST_CASE("ray batches are reproducible and in range") {
  const Dataset ds = render_dataset({gt_sphere()}, 3, 32);
  TrainConfig cfg = small_cfg();
  const auto a = sample_ray_batch(ds, cfg, 17);
  const auto b = sample_ray_batch(ds, cfg, 17);
  REQUIRE(a.size() == size_t(cfg.batch_rays));
  bool any_hit = false;
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].samples.t.size() == b[i].samples.t.size());
    for (size_t j = 0; j < a[i].samples.t.size(); ++j) {
      CHECK(a[i].samples.t[j] == b[i].samples.t[j]);
    }
    CHECK(a[i].gt_rgb == b[i].gt_rgb);
    CHECK(a[i].gt_mask == b[i].gt_mask);
    CHECK((a[i].gt_mask == 0.0 || a[i].gt_mask == 1.0));
    any_hit = any_hit || a[i].gt_mask == 1.0;
  }
  CHECK(any_hit);

  // A different iteration draws a different batch.
  const auto c = sample_ray_batch(ds, cfg, 18);
  bool differs = false;
  for (size_t i = 0; i < a.size() && !differs; ++i) {
    differs = a[i].samples.o != c[i].samples.o || a[i].gt_rgb != c[i].gt_rgb;
  }
  CHECK(differs);
}

TEST_CASE("train_step: zero gradient moves nothing") {
  // Rays through the middle of the scene never reach the corner primitive,
  // so every prediction is exactly zero and matches its target exactly.
  SceneModel scene = init_scene(small_cfg());
  scene.params = ParamVector::zeros(1);
  DualPrimitive far_prim = gt_sphere();
  far_prim.psq.scale = Vec3(0.05, 0.05, 0.05);
  far_prim.psq.translation = Vec3(0.93, 0.93, 0.93);
  far_prim.nsq = far_prim.psq;
  far_prim.nsq.scale *= 0.5;
  scene.params.set_primitive(0, far_prim);

  TrainConfig cfg = small_cfg();
  cfg.weights = LossWeights{0, 0, 0, 0, 0};  // L_rgb only

  const Camera cam = Camera::look_at(Vec3(0, 0, 2.8), Vec3(-0.3, -0.3, -0.3),
                                     Vec3(0, 1, 0), 16, 16, 25.0);
  std::vector<RayBatchEntry> batch;
  for (int row = 0; row < 16; ++row) {
    for (int col = 0; col < 16; ++col) {
      RayBatchEntry e;
      e.samples = make_ray_samples(cam, col, row, 16, nullptr);
      e.gt_rgb = Vec3::Zero();
      e.gt_mask = 1.0;
      batch.push_back(std::move(e));
    }
  }

  AdamState opt;
  opt.resize(scene.params.size());
  const std::vector<double> before = scene.params.raw;
  const StepResult sr = train_step(&scene, &opt, batch, cfg);
  CHECK_FALSE(sr.skipped);
  CHECK(sr.breakdown.rgb == 0.0);
  double change = 0.0;
  for (int i = 0; i < scene.params.size(); ++i) {
    change += std::abs(scene.params.raw[i] - before[i]);
  }
  CHECK(change < 1e-8);
}

TEST_CASE("train_step: photometric loss falls from a near-correct start") {
  const Dataset ds = render_dataset({gt_sphere()}, 3, 40);

  TrainConfig cfg;
  cfg.k_init = 1;
  cfg.batch_rays = 128;
  cfg.n_samples = 16;
  cfg.seed = 5;
  cfg.use_normals = false;

  SceneModel scene = init_scene(cfg);
  DualPrimitive s = gt_sphere();
  s.psq.scale = Vec3(0.32, 0.34, 0.31);
  s.psq.translation = Vec3(0.05, -0.04, 0.03);
  s.nsq = s.psq;
  s.nsq.scale *= 0.5;
  s.nsq.translation = Vec3(0.9, 0.9, 0.9);
  s.alpha = 0.7;
  s.theta = 0.05;
  s.basic_color = Vec3(0.6, 0.4, 0.3);
  scene.params.set_primitive(0, s);
  // Inert lighting: the residual starts exactly zero and stays small.
  std::fill(scene.params.raw.begin() + scene.params.layout.lighting_offset(),
            scene.params.raw.end(), 0.0);

  AdamState opt;
  opt.resize(scene.params.size());
  std::vector<double> rgb_trace;
  for (int64_t it = 0; it < 200; ++it) {
    const auto batch = sample_ray_batch(ds, cfg, it);
    const StepResult sr = train_step(&scene, &opt, batch, cfg);
    REQUIRE_FALSE(sr.skipped);
    rgb_trace.push_back(sr.breakdown.rgb);
  }
  const auto window = [&](int begin) {
    double s50 = 0.0;
    for (int i = begin; i < begin + 50; ++i) s50 += rgb_trace[size_t(i)];
    return s50 / 50.0;
  };
  CHECK(window(50) < window(0));
  CHECK(window(100) < window(50));
  CHECK(window(150) < window(100));
  CHECK(window(150) < 0.5 * window(0));
}

TEST_CASE("prune: criteria, order preservation, optimizer blocks") {
  TrainConfig cfg = small_cfg();
  SceneModel scene = init_scene(cfg);
  REQUIRE(scene.k() == 3);
  DualPrimitive a = scene.params.primitive(0);
  a.alpha = 0.01;  // below alpha_prune
  scene.params.set_primitive(0, a);
  DualPrimitive b = scene.params.primitive(1);
  b.alpha = 0.5;
  scene.params.set_primitive(1, b);
  DualPrimitive c = scene.params.primitive(2);
  c.alpha = 0.6;
  scene.params.set_primitive(2, c);

  AdamState opt;
  opt.resize(scene.params.size());
  for (int i = 0; i < scene.params.size(); ++i) opt.m[i] = double(i);
  const std::vector<double> keep_block(
      opt.m.begin() + 2 * ParamLayout::kPerPrimitive,
      opt.m.begin() + 3 * ParamLayout::kPerPrimitive);
  const std::vector<double> keep_raw(
      scene.params.raw.begin() + 2 * ParamLayout::kPerPrimitive,
      scene.params.raw.begin() + 3 * ParamLayout::kPerPrimitive);

  // Primitive 1 is occluded everywhere; primitive 2 is healthy.
  const int removed = prune_scene(&scene, &opt, {1.0, 1e-5, 1.0}, cfg);
  CHECK(removed == 2);
  REQUIRE(scene.k() == 1);
  CHECK(int(opt.m.size()) == scene.params.size());
  for (int i = 0; i < ParamLayout::kPerPrimitive; ++i) {
    CHECK(scene.params.raw[i] == keep_raw[size_t(i)]);
    CHECK(opt.m[i] == keep_block[size_t(i)]);
  }
  CHECK(scene.params.primitive(0).alpha == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("prune: the last primitive survives even when it qualifies") {
  TrainConfig cfg = small_cfg();
  cfg.k_init = 1;
  SceneModel scene = init_scene(cfg);
  DualPrimitive s = scene.params.primitive(0);
  s.alpha = 0.001;
  scene.params.set_primitive(0, s);
  AdamState opt;
  opt.resize(scene.params.size());
  CHECK(prune_scene(&scene, &opt, {0.0}, cfg) == 0);
  CHECK(scene.k() == 1);

  // With several all-qualifying primitives, the highest-alpha one is kept.
  cfg.k_init = 3;
  SceneModel multi = init_scene(cfg);
  for (int k = 0; k < 3; ++k) {
    DualPrimitive p = multi.params.primitive(k);
    p.alpha = k == 1 ? 0.019 : 0.001;
    multi.params.set_primitive(k, p);
  }
  const double marker = multi.params.raw[1 * ParamLayout::kPerPrimitive];
  AdamState mopt;
  mopt.resize(multi.params.size());
  CHECK(prune_scene(&multi, &mopt, {1.0, 1.0, 1.0}, cfg) == 2);
  REQUIRE(multi.k() == 1);
  CHECK(multi.params.raw[0] == marker);
}

TEST_CASE("prune property: survivors never violate the thresholds") {
  TrainConfig cfg = small_cfg();
  cfg.k_init = 12;
  for (uint64_t seed : {1u, 2u, 3u}) {
    cfg.seed = seed;
    SceneModel scene = init_scene(cfg);
    Rng rng = Rng::stream(seed, 55, 0, 0);
    std::vector<double> stats;
    for (int k = 0; k < scene.k(); ++k) {
      DualPrimitive s = scene.params.primitive(k);
      s.alpha = rng.uniform01() < 0.4 ? rng.uniform(0.0, 0.019) : rng.uniform(0.3, 1.0);
      scene.params.set_primitive(k, s);
      stats.push_back(rng.uniform01() < 0.3 ? rng.uniform(0.0, 9e-4)
                                            : rng.uniform(0.01, 1.0));
    }
    AdamState opt;
    opt.resize(scene.params.size());
    std::vector<double> kept_stats;
    for (int k = 0; k < scene.k(); ++k) {
      const DualPrimitive s = scene.params.primitive(k);
      if (s.alpha >= cfg.alpha_prune && stats[size_t(k)] >= cfg.view_weight_prune &&
          s.psq.scale.minCoeff() >= cfg.scale_prune) {
        kept_stats.push_back(stats[size_t(k)]);
      }
    }
    prune_scene(&scene, &opt, stats, cfg);
    REQUIRE(scene.k() == int(kept_stats.size()));
    for (int k = 0; k < scene.k(); ++k) {
      const DualPrimitive s = scene.params.primitive(k);
      CHECK(s.alpha >= cfg.alpha_prune);
      CHECK(s.psq.scale.minCoeff() >= cfg.scale_prune);
      CHECK(kept_stats[size_t(k)] >= cfg.view_weight_prune);
    }
  }
}

TEST_CASE("checkpoint: exact raw round-trip with optimizer state") {
  TempDir tmp("sqc_ckpt_test");
  TrainConfig cfg = small_cfg();
  cfg.k_init = 4;
  SceneModel scene = init_scene(cfg);
  scene.iteration = 123;
  AdamState opt;
  opt.resize(scene.params.size());
  Rng rng = Rng::stream(3, 77, 0, 0);
  for (auto& v : opt.m) v = rng.normal();
  for (auto& v : opt.v) v = std::abs(rng.normal());
  opt.t = 42;

  const std::string path = (tmp.path / "ck.json").string();
  save_checkpoint(scene, opt, path);

  SceneModel back;
  AdamState bopt;
  load_checkpoint(path, &back, &bopt);
  CHECK(back.iteration == 123);
  CHECK(back.seed == scene.seed);
  CHECK(back.k() == 4);
  CHECK(std::memcmp(back.params.raw.data(), scene.params.raw.data(),
                    scene.params.raw.size() * sizeof(double)) == 0);
  CHECK(bopt.t == 42);
  CHECK(bopt.m == opt.m);
  CHECK(bopt.v == opt.v);
  CHECK(back.config.prune_warmup == cfg.prune_warmup);
  CHECK(back.config.seed == cfg.seed);

  // Saving the loaded state reproduces the file byte for byte.
  const std::string path2 = (tmp.path / "ck2.json").string();
  save_checkpoint(back, bopt, path2);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("checkpoint: constrained fallback when the raw block is absent") {
  TempDir tmp("sqc_ckpt_fallback");
  TrainConfig cfg = small_cfg();
  cfg.k_init = 2;
  SceneModel scene = init_scene(cfg);
  // Push one rotation outside [-pi, pi) to exercise degree wrapping.
  scene.params.raw[8] = 7.5;
  const std::string path = (tmp.path / "ck.json").string();
  AdamState opt;
  opt.resize(scene.params.size());
  save_checkpoint(scene, opt, path);

  nlohmann::json doc = nlohmann::json::parse(slurp(path));
  for (auto& p : doc["primitives"]) {
    CHECK(p["psq"]["rotation_deg"][0].get<double>() >= -180.0);
    CHECK(p["psq"]["rotation_deg"][0].get<double>() < 180.0);
    p.erase("raw");
  }
  std::ofstream(path) << doc.dump(1);

  SceneModel back;
  AdamState bopt;
  load_checkpoint(path, &back, &bopt);
  REQUIRE(back.k() == 2);
  for (int k = 0; k < 2; ++k) {
    const DualPrimitive a = scene.params.primitive(k);
    const DualPrimitive b = back.params.primitive(k);
    for (int i = 0; i < 3; ++i) {
      CHECK(b.psq.scale[i] == doctest::Approx(a.psq.scale[i]).epsilon(1e-9));
      CHECK(b.psq.translation[i] == doctest::Approx(a.psq.translation[i]).epsilon(1e-9));
      CHECK(b.basic_color[i] == doctest::Approx(a.basic_color[i]).epsilon(1e-9));
      // Rotations agree as rotations (mod 2*pi).
      const double d = std::remainder(b.psq.rotation[i] - a.psq.rotation[i], 2.0 * kPi);
      CHECK(std::abs(d) < 1e-9);
    }
    CHECK(b.alpha == doctest::Approx(a.alpha).epsilon(1e-9));
    CHECK(b.theta == doctest::Approx(a.theta).epsilon(1e-9));
  }
}

TEST_CASE("fit: zero iterations returns the initialized scene") {
  const Dataset ds = render_dataset({gt_sphere()}, 2, 24);
  TrainConfig cfg = small_cfg();
  cfg.iterations = 0;
  const FitResult fr = fit(ds, cfg, "");
  const SceneModel fresh = init_scene(cfg);
  CHECK(fr.scene.iteration == 0);
  CHECK(std::memcmp(fr.scene.params.raw.data(), fresh.params.raw.data(),
                    fresh.params.raw.size() * sizeof(double)) == 0);
  CHECK(fr.csv == loss_csv_header() + "\n");
}

TEST_CASE("fit: identical seeds give identical logs and checkpoints") {
  const Dataset ds = render_dataset({gt_sphere()}, 2, 24);
  const TrainConfig cfg = small_cfg();
  TempDir da("sqc_fit_a"), db("sqc_fit_b");
  const FitResult a = fit(ds, cfg, da.path.string());
  const FitResult b = fit(ds, cfg, db.path.string());
  CHECK(a.csv == b.csv);
  CHECK(a.csv.find(loss_csv_header()) == 0);
  CHECK(slurp(da.path / "checkpoint_final.json") == slurp(db.path / "checkpoint_final.json"));
  CHECK(slurp(da.path / "loss_log.csv") == a.csv);
}

TEST_CASE("fit: resuming a checkpoint continues the identical trace") {
  const Dataset ds = render_dataset({gt_sphere()}, 2, 24);
  const TrainConfig cfg = small_cfg();  // checkpoints at iteration 30 of 60
  TempDir full("sqc_fit_full"), part("sqc_fit_part");

  const FitResult a = fit(ds, cfg, full.path.string());
  TrainConfig resume_cfg = cfg;
  resume_cfg.resume = (full.path / "checkpoint.json").string();
  const FitResult b = fit(ds, resume_cfg, part.path.string());

  CHECK(b.scene.iteration == 60);
  CHECK(slurp(full.path / "checkpoint_final.json") ==
        slurp(part.path / "checkpoint_final.json"));

  // The resumed log is exactly the tail of the uninterrupted log.
  const std::string tail = b.csv.substr(loss_csv_header().size() + 1);
  CHECK(tail.size() > 0);
  CHECK(a.csv.size() > tail.size());
  CHECK(a.csv.compare(a.csv.size() - tail.size(), tail.size(), tail) == 0);
}

TEST_CASE("run config: serialize/parse round-trip and rejection") {
  RunConfig cfg;
  cfg.train.k_init = 17;
  cfg.train.lr_primitives = 0.007123456789012345;
  cfg.train.seed = 12345678901234567ULL;
  cfg.train.use_normals = false;
  cfg.train.resume = "/tmp/x.json";
  cfg.data_dir = "/data/scene a";  // spaces survive
  cfg.export_threshold = 0.375;

  const std::string text = serialize_run_config(cfg);
  const RunConfig back = parse_run_config(text);
  CHECK(serialize_run_config(back) == text);
  CHECK(back.train.k_init == 17);
  CHECK(back.train.lr_primitives == cfg.train.lr_primitives);
  CHECK(back.train.seed == cfg.train.seed);
  CHECK(back.data_dir == cfg.data_dir);
  CHECK(back.export_threshold == cfg.export_threshold);

  CHECK_THROWS_WITH_AS(parse_run_config("nope = 3\n"),
                       "config: unknown key 'nope' in line 'nope = 3'", std::runtime_error);
  CHECK_THROWS_AS(parse_run_config("k_init = banana\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_run_config("k_init\n"), std::runtime_error);
  // Comments and blank lines are fine.
  CHECK(parse_run_config("# hello\n\nk_init = 9\n").train.k_init == 9);
}

TEST_CASE("train config validation rejects nonsense") {
  TrainConfig cfg;
  cfg.lr_primitives = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::runtime_error);
  cfg = TrainConfig{};
  cfg.prune_interval = 0;
  CHECK_THROWS_AS(cfg.validate(), std::runtime_error);
  cfg = TrainConfig{};
  cfg.iterations = -1;
  CHECK_THROWS_AS(cfg.validate(), std::runtime_error);
  TrainConfig ok;
  CHECK_NOTHROW(ok.validate());
}
