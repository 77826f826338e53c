#pragma once

#include <string>
#include <vector>

#include "sqc/dataio.h"
#include "sqc/render_grad.h"

namespace sqc {

struct TrainConfig {
  int k_init = 100;
  int64_t iterations = 20000;
  int batch_rays = 1024;
  double lr_primitives = 5e-3;
  double lr_lighting = 1e-3;
  int prune_interval = 500;
  int prune_warmup = 1000;
  double alpha_prune = 0.02;
  double scale_prune = 0.01;        // constrained PSQ scale floor
  double view_weight_prune = 1e-3;  // max blend weight across all views
  LossWeights weights;
  double mu = 0.05;
  int n_samples = 64;  // per training ray
  uint64_t seed = 0;
  int log_interval = 50;
  int checkpoint_interval = 2500;
  int stats_res = 64;       // reduced resolution of the pruning-stats renders
  bool use_normals = true;  // effective only when the dataset has normal maps
  std::string resume;       // checkpoint path; empty starts from init_scene

  // Throws std::runtime_error on non-positive counts or thresholds.
  void validate() const;
};

// Raw-space first-order optimizer state (adaptive moments, beta 0.9/0.999).
struct AdamState {
  int64_t t = 0;
  std::vector<double> m, v;

  void resize(int n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    t = 0;
  }
  // Drops the 27-slot block of primitive k, mirroring ParamVector layout.
  void erase_primitive(int k);
};

struct SceneModel {
  ParamVector params;
  uint64_t seed = 0;
  int64_t iteration = 0;
  TrainConfig config;

  int k() const { return params.layout.num_primitives; }
  std::vector<DualPrimitive> primitives() const;
  LightingNet lighting() const;
};

// K_init primitives: centers uniform in [-1,1]^3, scales uniform in
// [0.05, 0.3], shapes (1,1), rotations uniform per axis, alpha 0.5, theta
// 0.1, colors uniform in [0.2, 0.8]. The negative quadric starts concentric
// at half scale so the erase probability is trainable from the start.
// Lighting is Xavier-initialized. Deterministic in cfg.seed.
SceneModel init_scene(const TrainConfig& cfg);

// One ray batch: uniform (view, pixel) draws with stratified jittered
// samples, all keyed by (seed, iteration, ray index) only.
std::vector<RayBatchEntry> sample_ray_batch(const Dataset& data, const TrainConfig& cfg,
                                            int64_t iteration);

struct StepResult {
  LossBreakdown breakdown;
  bool skipped = false;  // non-finite loss or gradient: parameters untouched
};

// One adaptive-moment update with the global gradient norm clipped to 10.
// Primitive and lighting slots use their own learning rates.
StepResult train_step(SceneModel* scene, AdamState* opt,
                      const std::vector<RayBatchEntry>& batch, const TrainConfig& cfg);

// Max compositing blend weight per primitive over all views, rendered at
// stats_res (intrinsics rescaled, no jitter, normals off).
std::vector<double> view_weight_stats(const SceneModel& scene, const Dataset& data,
                                      const TrainConfig& cfg);

// Removes primitives with alpha < alpha_prune, any constrained PSQ scale
// below scale_prune, or view weight below view_weight_prune. Keeps the
// highest-alpha primitive when everything qualifies. Returns removed count.
int prune_scene(SceneModel* scene, AdamState* opt, const std::vector<double>& view_stats,
                const TrainConfig& cfg);

struct FitResult {
  SceneModel scene;
  AdamState opt;
  std::string csv;  // loss log, also written to out_dir/loss_log.csv
  int skipped_steps = 0;
};

// init (or resume) -> [train_step; periodic prune after warmup; periodic
// checkpoint]. out_dir receives loss_log.csv, checkpoint.json (rolling) and
// checkpoint_final.json; pass "" to keep everything in memory.
FitResult fit(const Dataset& data, const TrainConfig& cfg, const std::string& out_dir);

// Single-document JSON checkpoint. Constrained values are stored for
// readability, raw values verbatim for exact round-trips, and optimizer
// moments so a resumed run continues the identical trace.
void save_checkpoint(const SceneModel& scene, const AdamState& opt, const std::string& path);
void load_checkpoint(const std::string& path, SceneModel* scene, AdamState* opt);

}  // namespace sqc
