#include "sqc/checkpoint.h"

#include <fstream>
#include <stdexcept>

namespace sqc {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

double wrap_deg(double d) {
  d = std::fmod(d + 180.0, 360.0);
  if (d < 0.0) d += 360.0;
  return d - 180.0;
}

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw std::runtime_error(std::string("checkpoint: ") + what + " must hold 3 numbers");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

ordered_json quadric_to_json(const SuperquadricParams& q) {
  ordered_json j;
  j["scale"] = vec_json(q.scale);
  j["shape"] = ordered_json::array({q.shape[0], q.shape[1]});
  j["translation"] = vec_json(q.translation);
  j["rotation_deg"] = ordered_json::array({wrap_deg(rad2deg(q.rotation[0])),
                                           wrap_deg(rad2deg(q.rotation[1])),
                                           wrap_deg(rad2deg(q.rotation[2]))});
  return j;
}

SuperquadricParams quadric_from_json(const json& j) {
  SuperquadricParams q;
  q.scale = vec_from(j.at("scale"), "scale");
  q.shape = Vec2(j.at("shape")[0].get<double>(), j.at("shape")[1].get<double>());
  q.translation = vec_from(j.at("translation"), "translation");
  const Vec3 deg = vec_from(j.at("rotation_deg"), "rotation_deg");
  q.rotation = Vec3(deg2rad(deg[0]), deg2rad(deg[1]), deg2rad(deg[2]));
  return q;
}

}  // namespace

ordered_json primitive_to_json(const DualPrimitive& s) {
  ordered_json j;
  j["psq"] = quadric_to_json(s.psq);
  j["nsq"] = quadric_to_json(s.nsq);
  j["alpha"] = s.alpha;
  j["theta"] = s.theta;
  j["color"] = vec_json(s.basic_color);
  return j;
}

DualPrimitive primitive_from_json(const json& j) {
  DualPrimitive s;
  s.psq = quadric_from_json(j.at("psq"));
  s.nsq = quadric_from_json(j.at("nsq"));
  s.alpha = j.at("alpha").get<double>();
  s.theta = j.at("theta").get<double>();
  s.basic_color = vec_from(j.at("color"), "color");
  return s;
}

void primitive_raw_from_json(const json& j, double* raw27) {
  if (j.contains("raw")) {
    const json& r = j["raw"];
    const json& p = r.at("psq");
    const json& n = r.at("nsq");
    if (p.size() != 11 || n.size() != 11 || r.at("color").size() != 3) {
      throw std::runtime_error("checkpoint: raw block has wrong arity");
    }
    for (int i = 0; i < 11; ++i) raw27[i] = p[i].get<double>();
    for (int i = 0; i < 11; ++i) raw27[11 + i] = n[i].get<double>();
    raw27[22] = r.at("alpha").get<double>();
    raw27[23] = r.at("theta").get<double>();
    for (int i = 0; i < 3; ++i) raw27[24 + i] = r.at("color")[i].get<double>();
    return;
  }
  ParamVector tmp = ParamVector::zeros(1);
  tmp.set_primitive(0, primitive_from_json(j));
  for (int i = 0; i < ParamLayout::kPerPrimitive; ++i) raw27[i] = tmp.raw[i];
}

ordered_json config_to_json(const TrainConfig& cfg) {
  ordered_json j;
  j["k_init"] = cfg.k_init;
  j["iterations"] = cfg.iterations;
  j["batch_rays"] = cfg.batch_rays;
  j["lr_primitives"] = cfg.lr_primitives;
  j["lr_lighting"] = cfg.lr_lighting;
  j["prune_interval"] = cfg.prune_interval;
  j["prune_warmup"] = cfg.prune_warmup;
  j["alpha_prune"] = cfg.alpha_prune;
  j["scale_prune"] = cfg.scale_prune;
  j["view_weight_prune"] = cfg.view_weight_prune;
  j["w_mask"] = cfg.weights.mask;
  j["w_sparse"] = cfg.weights.sparse;
  j["w_entropy"] = cfg.weights.entropy;
  j["w_max_excess"] = cfg.weights.max_excess;
  j["w_normal_reg"] = cfg.weights.normal_reg;
  j["mu"] = cfg.mu;
  j["n_samples"] = cfg.n_samples;
  j["seed"] = cfg.seed;
  j["log_interval"] = cfg.log_interval;
  j["checkpoint_interval"] = cfg.checkpoint_interval;
  j["stats_res"] = cfg.stats_res;
  j["use_normals"] = cfg.use_normals;
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.k_init = j.value("k_init", cfg.k_init);
  cfg.iterations = j.value("iterations", cfg.iterations);
  cfg.batch_rays = j.value("batch_rays", cfg.batch_rays);
  cfg.lr_primitives = j.value("lr_primitives", cfg.lr_primitives);
  cfg.lr_lighting = j.value("lr_lighting", cfg.lr_lighting);
  cfg.prune_interval = j.value("prune_interval", cfg.prune_interval);
  cfg.prune_warmup = j.value("prune_warmup", cfg.prune_warmup);
  cfg.alpha_prune = j.value("alpha_prune", cfg.alpha_prune);
  cfg.scale_prune = j.value("scale_prune", cfg.scale_prune);
  cfg.view_weight_prune = j.value("view_weight_prune", cfg.view_weight_prune);
  cfg.weights.mask = j.value("w_mask", cfg.weights.mask);
  cfg.weights.sparse = j.value("w_sparse", cfg.weights.sparse);
  cfg.weights.entropy = j.value("w_entropy", cfg.weights.entropy);
  cfg.weights.max_excess = j.value("w_max_excess", cfg.weights.max_excess);
  cfg.weights.normal_reg = j.value("w_normal_reg", cfg.weights.normal_reg);
  cfg.mu = j.value("mu", cfg.mu);
  cfg.n_samples = j.value("n_samples", cfg.n_samples);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.log_interval = j.value("log_interval", cfg.log_interval);
  cfg.checkpoint_interval = j.value("checkpoint_interval", cfg.checkpoint_interval);
  cfg.stats_res = j.value("stats_res", cfg.stats_res);
  cfg.use_normals = j.value("use_normals", cfg.use_normals);
  return cfg;
}

void save_checkpoint(const SceneModel& scene, const AdamState& opt, const std::string& path) {
  ordered_json doc;
  doc["version"] = 1;
  doc["iteration"] = scene.iteration;
  doc["seed"] = scene.seed;
  doc["config"] = config_to_json(scene.config);

  doc["primitives"] = ordered_json::array();
  for (int k = 0; k < scene.k(); ++k) {
    ordered_json p = primitive_to_json(scene.params.primitive(k));
    const double* raw = scene.params.raw.data() + scene.params.layout.primitive_offset(k);
    ordered_json r;
    r["psq"] = std::vector<double>(raw, raw + 11);
    r["nsq"] = std::vector<double>(raw + 11, raw + 22);
    r["alpha"] = raw[22];
    r["theta"] = raw[23];
    r["color"] = std::vector<double>(raw + 24, raw + 27);
    p["raw"] = std::move(r);
    doc["primitives"].push_back(std::move(p));
  }

  const double* flat = scene.params.raw.data() + scene.params.layout.lighting_offset();
  constexpr int kH = ParamLayout::kHidden;
  const int seg_sizes[] = {kH * 3, kH, kH * kH, kH, kH * kH, kH, 3 * kH, 3};
  ordered_json weights = ordered_json::array();
  int off = 0;
  for (int sz : seg_sizes) {
    weights.push_back(std::vector<double>(flat + off, flat + off + sz));
    off += sz;
  }
  doc["lighting"] = {{"layer_dims", {3, kH, kH, kH, 3}}, {"weights", std::move(weights)}};
  doc["optimizer"] = {{"t", opt.t}, {"m", opt.m}, {"v", opt.v}};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out << doc.dump(1) << "\n";
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

void load_checkpoint(const std::string& path, SceneModel* scene, AdamState* opt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: cannot parse " + path + ": " + e.what());
  }
  if (doc.value("version", 0) != 1) {
    throw std::runtime_error("checkpoint: unsupported version in " + path);
  }

  scene->iteration = doc.at("iteration").get<int64_t>();
  scene->seed = doc.at("seed").get<uint64_t>();
  scene->config = config_from_json(doc.at("config"));

  const json& prims = doc.at("primitives");
  if (!prims.is_array() || prims.empty()) {
    throw std::runtime_error("checkpoint: no primitives in " + path);
  }
  scene->params = ParamVector::zeros(int(prims.size()));
  for (size_t k = 0; k < prims.size(); ++k) {
    primitive_raw_from_json(prims[k],
                            scene->params.raw.data() + scene->params.layout.primitive_offset(int(k)));
  }

  const json& lighting = doc.at("lighting");
  constexpr int kH = ParamLayout::kHidden;
  const std::vector<int> dims = lighting.at("layer_dims").get<std::vector<int>>();
  if (dims != std::vector<int>{3, kH, kH, kH, 3}) {
    throw std::runtime_error("checkpoint: unexpected lighting layer_dims in " + path);
  }
  const json& weights = lighting.at("weights");
  const int seg_sizes[] = {kH * 3, kH, kH * kH, kH, kH * kH, kH, 3 * kH, 3};
  if (!weights.is_array() || weights.size() != 8) {
    throw std::runtime_error("checkpoint: lighting weights must hold 8 arrays");
  }
  double* flat = scene->params.raw.data() + scene->params.layout.lighting_offset();
  int off = 0;
  for (int s = 0; s < 8; ++s) {
    const auto seg = weights[s].get<std::vector<double>>();
    if (int(seg.size()) != seg_sizes[s]) {
      throw std::runtime_error("checkpoint: lighting segment " + std::to_string(s) +
                               " has wrong size");
    }
    std::copy(seg.begin(), seg.end(), flat + off);
    off += seg_sizes[s];
  }

  opt->resize(scene->params.size());
  if (doc.contains("optimizer")) {
    const json& o = doc["optimizer"];
    opt->t = o.at("t").get<int64_t>();
    opt->m = o.at("m").get<std::vector<double>>();
    opt->v = o.at("v").get<std::vector<double>>();
    if (int(opt->m.size()) != scene->params.size() ||
        int(opt->v.size()) != scene->params.size()) {
      throw std::runtime_error("checkpoint: optimizer state size mismatch in " + path);
    }
  }
}

}  // namespace sqc
