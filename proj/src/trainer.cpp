#include "sqc/trainer.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace sqc {

namespace {
// Substream tags under the run seed.
constexpr uint64_t kStreamInit = 0;
constexpr uint64_t kStreamLighting = 1;
constexpr uint64_t kStreamBatch = 2;
}  // namespace

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::runtime_error(std::string("config: ") + name + " must be > 0");
  };
  positive(k_init, "k_init");
  positive(batch_rays, "batch_rays");
  positive(lr_primitives, "lr_primitives");
  positive(lr_lighting, "lr_lighting");
  positive(prune_interval, "prune_interval");
  positive(alpha_prune, "alpha_prune");
  positive(scale_prune, "scale_prune");
  positive(view_weight_prune, "view_weight_prune");
  positive(n_samples, "n_samples");
  positive(log_interval, "log_interval");
  positive(checkpoint_interval, "checkpoint_interval");
  positive(stats_res, "stats_res");
  if (iterations < 0) throw std::runtime_error("config: iterations must be >= 0");
  if (prune_warmup < 0) throw std::runtime_error("config: prune_warmup must be >= 0");
  if (mu < 0) throw std::runtime_error("config: mu must be >= 0");
}

void AdamState::erase_primitive(int k) {
  const int off = k * ParamLayout::kPerPrimitive;
  m.erase(m.begin() + off, m.begin() + off + ParamLayout::kPerPrimitive);
  v.erase(v.begin() + off, v.begin() + off + ParamLayout::kPerPrimitive);
}

std::vector<DualPrimitive> SceneModel::primitives() const {
  std::vector<DualPrimitive> out;
  out.reserve(k());
  for (int i = 0; i < k(); ++i) out.push_back(params.primitive(i));
  return out;
}

LightingNet SceneModel::lighting() const {
  return LightingNet::from_flat(params.raw.data() + params.layout.lighting_offset());
}

SceneModel init_scene(const TrainConfig& cfg) {
  cfg.validate();
  SceneModel scene;
  scene.seed = cfg.seed;
  scene.config = cfg;
  scene.params = ParamVector::zeros(cfg.k_init);
  for (int k = 0; k < cfg.k_init; ++k) {
    Rng rng = Rng::stream(cfg.seed, kStreamInit, uint64_t(k));
    DualPrimitive s;
    for (int a = 0; a < 3; ++a) s.psq.translation[a] = rng.uniform(-1.0, 1.0);
    for (int a = 0; a < 3; ++a) s.psq.scale[a] = rng.uniform(0.05, 0.3);
    for (int a = 0; a < 3; ++a) s.psq.rotation[a] = rng.uniform(-kPi, kPi);
    for (int a = 0; a < 3; ++a) s.basic_color[a] = rng.uniform(0.2, 0.8);
    s.psq.shape = Vec2(1.0, 1.0);
    s.nsq = s.psq;
    s.nsq.scale *= 0.5;
    s.alpha = 0.5;
    s.theta = 0.1;
    scene.params.set_primitive(k, s);
  }
  Rng lrng = Rng::stream(cfg.seed, kStreamLighting, 0);
  LightingNet::xavier(lrng).to_flat(scene.params.raw.data() +
                                    scene.params.layout.lighting_offset());
  return scene;
}

std::vector<RayBatchEntry> sample_ray_batch(const Dataset& data, const TrainConfig& cfg,
                                            int64_t iteration) {
  if (data.views.empty()) throw std::runtime_error("sample_ray_batch: empty dataset");
  const int64_t per_view = int64_t(data.width) * data.height;
  const int64_t total = per_view * int64_t(data.views.size());
  std::vector<RayBatchEntry> batch;
  batch.reserve(cfg.batch_rays);
  for (int r = 0; r < cfg.batch_rays; ++r) {
    Rng rng = Rng::stream(cfg.seed, kStreamBatch, uint64_t(iteration), uint64_t(r));
    const int64_t flat = int64_t(rng.below(uint64_t(total)));
    const View& view = data.views[size_t(flat / per_view)];
    const int pix = int(flat % per_view);
    const int col = pix % data.width, row = pix / data.width;
    RayBatchEntry e;
    e.samples = make_ray_samples(view.cam, col, row, cfg.n_samples, &rng);
    e.gt_rgb = view.rgb[pix];
    e.gt_mask = view.mask[pix];
    if (cfg.use_normals && !view.normal.empty() && view.mask[pix] > 0.5) {
      e.gt_normal = view.normal[pix];
      e.has_normal = true;
    }
    batch.push_back(std::move(e));
  }
  return batch;
}

StepResult train_step(SceneModel* scene, AdamState* opt,
                      const std::vector<RayBatchEntry>& batch, const TrainConfig& cfg) {
  TrainLossOptions lopt;
  lopt.weights = cfg.weights;
  lopt.mu = cfg.mu;
  lopt.use_normals = cfg.use_normals;

  StepResult out;
  std::vector<double> g;
  try {
    out.breakdown = render_loss_grad(scene->params, batch, lopt, &g);
  } catch (const std::runtime_error&) {
    out.skipped = true;
    return out;
  }

  double norm_sq = 0.0;
  for (double v : g) norm_sq += v * v;
  const double norm = std::sqrt(norm_sq);
  if (norm > 10.0) {
    const double s = 10.0 / norm;
    for (double& v : g) v *= s;
  }

  opt->t += 1;
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double c1 = 1.0 - std::pow(b1, double(opt->t));
  const double c2 = 1.0 - std::pow(b2, double(opt->t));
  const int lighting_begin = scene->params.layout.lighting_offset();
  for (int i = 0; i < scene->params.size(); ++i) {
    opt->m[i] = b1 * opt->m[i] + (1.0 - b1) * g[i];
    opt->v[i] = b2 * opt->v[i] + (1.0 - b2) * g[i] * g[i];
    const double lr = i < lighting_begin ? cfg.lr_primitives : cfg.lr_lighting;
    scene->params.raw[i] -= lr * (opt->m[i] / c1) / (std::sqrt(opt->v[i] / c2) + eps);
  }
  return out;
}

std::vector<double> view_weight_stats(const SceneModel& scene, const Dataset& data,
                                      const TrainConfig& cfg) {
  const std::vector<DualPrimitive> prims = scene.primitives();
  RenderOptions ropt;
  ropt.n_samples = cfg.n_samples;
  ropt.mu = cfg.mu;
  ropt.normals = false;

  std::vector<double> stats(prims.size(), 0.0);
  for (const View& view : data.views) {
    Camera cam = view.cam;
    if (cfg.stats_res < cam.width) {
      const double sx = double(cfg.stats_res) / cam.width;
      const int sh = std::max(1, int(std::lround(cam.height * sx)));
      const double sy = double(sh) / cam.height;
      cam.width = cfg.stats_res;
      cam.height = sh;
      cam.fx *= sx;
      cam.cx *= sx;
      cam.fy *= sy;
      cam.cy *= sy;
    }
    const RenderBuffers buf = render_image(prims, nullptr, cam, ropt);
    for (size_t p = 0; p < prims.size(); ++p) {
      stats[p] = std::max(stats[p], buf.prim_max_weight[p]);
    }
  }
  return stats;
}

int prune_scene(SceneModel* scene, AdamState* opt, const std::vector<double>& view_stats,
                const TrainConfig& cfg) {
  const int k = scene->k();
  std::vector<bool> remove(k, false);
  int survivors = 0;
  for (int i = 0; i < k; ++i) {
    const DualPrimitive s = scene->params.primitive(i);
    const bool scale_dead = s.psq.scale.minCoeff() < cfg.scale_prune;
    const bool unseen = view_stats[size_t(i)] < cfg.view_weight_prune;
    remove[i] = s.alpha < cfg.alpha_prune || scale_dead || unseen;
    survivors += remove[i] ? 0 : 1;
  }
  if (survivors == 0) {
    int keep = 0;
    for (int i = 1; i < k; ++i) {
      if (scene->params.primitive(i).alpha > scene->params.primitive(keep).alpha) keep = i;
    }
    remove[keep] = false;
  }
  int removed = 0;
  for (int i = k - 1; i >= 0; --i) {
    if (!remove[i]) continue;
    scene->params.erase_primitive(i);
    opt->erase_primitive(i);
    ++removed;
  }
  return removed;
}

FitResult fit(const Dataset& data, const TrainConfig& cfg_in, const std::string& out_dir) {
  cfg_in.validate();
  if (data.views.empty()) throw std::runtime_error("fit: dataset has no views");

  TrainConfig cfg = cfg_in;
  cfg.use_normals = cfg_in.use_normals && data.has_normals;

  FitResult fr;
  const bool resumed = !cfg.resume.empty();
  if (resumed) {
    load_checkpoint(cfg.resume, &fr.scene, &fr.opt);
    cfg.seed = fr.scene.seed;
    fr.scene.config = cfg;
  } else {
    fr.scene = init_scene(cfg);
    fr.opt.resize(fr.scene.params.size());
  }

  namespace fs = std::filesystem;
  std::ofstream csv_file;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    csv_file.open(fs::path(out_dir) / "loss_log.csv",
                  resumed ? std::ios::app : std::ios::trunc);
    if (!csv_file) throw std::runtime_error("fit: cannot write loss_log.csv in " + out_dir);
  }
  std::ostringstream csv;
  csv << loss_csv_header() << "\n";
  if (csv_file && !resumed) csv_file << loss_csv_header() << "\n";

  const auto emit = [&](int64_t it, const LossBreakdown& b) {
    const std::string row = loss_csv_row(it, b);
    csv << row << "\n";
    if (csv_file) csv_file << row << "\n" << std::flush;
  };

  for (int64_t it = fr.scene.iteration; it < cfg.iterations; ++it) {
    const std::vector<RayBatchEntry> batch = sample_ray_batch(data, cfg, it);
    const StepResult sr = train_step(&fr.scene, &fr.opt, batch, cfg);
    fr.scene.iteration = it + 1;
    if (sr.skipped) {
      ++fr.skipped_steps;
      std::cerr << "fit: non-finite step skipped at iteration " << it << "\n";
      continue;
    }
    if (it % cfg.log_interval == 0 || it + 1 == cfg.iterations) emit(it, sr.breakdown);

    const int64_t done = it + 1;
    if (done >= cfg.prune_warmup && (done - cfg.prune_warmup) % cfg.prune_interval == 0 &&
        done < cfg.iterations) {
      const std::vector<double> stats = view_weight_stats(fr.scene, data, cfg);
      prune_scene(&fr.scene, &fr.opt, stats, cfg);
    }
    if (!out_dir.empty() && done % cfg.checkpoint_interval == 0 && done < cfg.iterations) {
      save_checkpoint(fr.scene, fr.opt, (fs::path(out_dir) / "checkpoint.json").string());
    }
  }

  if (!out_dir.empty()) {
    save_checkpoint(fr.scene, fr.opt, (fs::path(out_dir) / "checkpoint_final.json").string());
  }
  fr.csv = csv.str();
  return fr;
}

}  // namespace sqc
