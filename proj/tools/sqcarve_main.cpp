#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sqc/checkpoint.h"
#include "sqc/dataio.h"
#include "sqc/evalmetrics.h"
#include "sqc/meshops.h"
#include "sqc/renderer.h"
#include "sqc/runconfig.h"
#include "sqc/synth.h"
#include "sqc/trainer.h"

namespace fs = std::filesystem;
using namespace sqc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int fail_validation(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return kExitValidation;
}

int fail_runtime(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return kExitRuntime;
}

std::vector<int> parse_view_list(const std::string& views, int n) {
  std::vector<int> out;
  if (views == "all") {
    for (int i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  size_t pos = 0;
  while (pos < views.size()) {
    size_t next = views.find(',', pos);
    if (next == std::string::npos) next = views.size();
    const std::string tok = views.substr(pos, next - pos);
    size_t used = 0;
    const int idx = std::stoi(tok, &used);
    if (used != tok.size() || idx < 0 || idx >= n) {
      throw std::runtime_error("view index '" + tok + "' out of range [0," +
                               std::to_string(n - 1) + "]");
    }
    out.push_back(idx);
    pos = next + 1;
  }
  if (out.empty()) throw std::runtime_error("empty view list");
  return out;
}

int run_fit(const std::string& config_path, std::string data_dir, std::string out_dir,
            int64_t* seed, int64_t* iters, int* primitives) {
  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_run_config(config_path);
    if (!data_dir.empty()) cfg.data_dir = data_dir;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) cfg.train.seed = uint64_t(*seed);
    if (iters) cfg.train.iterations = *iters;
    if (primitives) cfg.train.k_init = *primitives;
    if (cfg.data_dir.empty()) return fail_validation("fit: no dataset directory (--data)");
    if (cfg.out_dir.empty()) return fail_validation("fit: no output directory (--out)");
    cfg.train.validate();
  } catch (const std::exception& e) {
    return fail_validation(e.what());
  }

  Dataset data;
  try {
    data = load_dataset(cfg.data_dir);
  } catch (const std::exception& e) {
    return fail_validation(e.what());
  }

  try {
    fs::create_directories(cfg.out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    const FitResult result = fit(data, cfg.train, cfg.out_dir);
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("fit: %s, %lld iterations, K=%d, %d skipped steps, %.1fs\n", data.name.c_str(),
                static_cast<long long>(result.scene.iteration), result.scene.k(),
                result.skipped_steps, dt);
    std::printf("fit: wrote %s/loss_log.csv and %s/checkpoint_final.json\n", cfg.out_dir.c_str(),
                cfg.out_dir.c_str());
  } catch (const std::exception& e) {
    return fail_runtime(e.what());
  }
  return kExitOk;
}

int run_render(const std::string& ckpt, const std::string& data_dir, const std::string& out_dir,
               const std::string& views) {
  SceneModel scene;
  AdamState opt;
  Dataset data;
  std::vector<int> selected;
  try {
    load_checkpoint(ckpt, &scene, &opt);
    data = load_dataset(data_dir);
    selected = parse_view_list(views, int(data.views.size()));
  } catch (const std::exception& e) {
    return fail_validation(e.what());
  }

  try {
    fs::create_directories(out_dir);
    const std::vector<DualPrimitive> prims = scene.primitives();
    const LightingNet net = scene.lighting();
    RenderOptions opt_render;
    opt_render.n_samples = 128;
    opt_render.mu = scene.config.mu;
    for (int idx : selected) {
      const View& view = data.views[size_t(idx)];
      const Camera& cam = view.cam;
      const RenderBuffers buf = render_image(prims, &net, cam, opt_render);
      ImageU8 rgb{cam.width, cam.height, 3, {}};
      rgb.data.resize(size_t(cam.width) * cam.height * 3);
      ImageU8 mask{cam.width, cam.height, 1, {}};
      mask.data.resize(size_t(cam.width) * cam.height);
      ImageU8 nrm{cam.width, cam.height, 3, {}};
      nrm.data.resize(size_t(cam.width) * cam.height * 3);
      for (int px = 0; px < cam.width * cam.height; ++px) {
        for (int c = 0; c < 3; ++c) {
          rgb.data[size_t(px) * 3 + c] = to_u8(buf.rgb[size_t(px)][c]);
        }
        mask.data[size_t(px)] = buf.mask[size_t(px)] >= 0.5 ? 255 : 0;
        Vec3 n = buf.normal[size_t(px)];
        const double len = n.norm();
        n = len > 1e-9 && buf.mask[size_t(px)] >= 0.5 ? Vec3(cam.R * (n / len)) : Vec3(0, 0, 0);
        encode_normal(n, &nrm.data[size_t(px) * 3]);
      }
      const fs::path base = fs::path(out_dir) / view.stem;
      write_png(base.string() + "_rgb.png", rgb);
      write_png(base.string() + "_mask.png", mask);
      write_png(base.string() + "_normal.png", nrm);
    }
    std::printf("render: %zu views from %s into %s\n", selected.size(), ckpt.c_str(),
                out_dir.c_str());
  } catch (const std::exception& e) {
    return fail_runtime(e.what());
  }
  return kExitOk;
}

int run_export(const std::string& ckpt, const std::string& out, double threshold, int res) {
  SceneModel scene;
  AdamState opt;
  try {
    load_checkpoint(ckpt, &scene, &opt);
    if (threshold < 0.0 || threshold > 1.0) {
      throw std::runtime_error("export-mesh: threshold must be in [0,1]");
    }
    if (res < 3) throw std::runtime_error("export-mesh: res must be >= 3");
  } catch (const std::exception& e) {
    return fail_validation(e.what());
  }

  try {
    const ExportStats stats = export_scene(scene.primitives(), threshold, res, out);
    std::printf("export-mesh: %d primitives, %d vertices, %d faces -> %s\n",
                stats.num_primitives, stats.vertices, stats.faces, out.c_str());
    for (int id : stats.boolean_warnings) {
      std::printf("export-mesh: warning: primitive %d exported uncarved\n", id);
    }
  } catch (const std::exception& e) {
    return fail_runtime(e.what());
  }
  return kExitOk;
}

int run_eval(const std::string& mesh_path, const std::string& gt_path, int samples) {
  TriMesh mesh, gt;
  try {
    mesh = read_obj(mesh_path);
    gt = read_obj(gt_path);
    if (mesh.empty()) throw std::runtime_error("eval: mesh has no faces: " + mesh_path);
    if (gt.empty()) throw std::runtime_error("eval: mesh has no faces: " + gt_path);
    if (samples <= 0) throw std::runtime_error("eval: samples must be positive");
  } catch (const std::exception& e) {
    return fail_validation(e.what());
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();
    EvalReport report;
    report.num_vertices = int(mesh.vertices.size());
    report.num_faces = int(mesh.faces.size());
    Vec3 lo, hi;
    mesh_bbox(gt, &lo, &hi);
    normalize_by_bbox(&mesh, lo, hi);
    normalize_by_bbox(&gt, lo, hi);
    report.chamfer_x1e3 = chamfer(mesh, gt, samples, 0);
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string report_path = mesh_path + ".eval.json";
    std::ofstream os(report_path, std::ios::trunc);
    os << eval_report_to_json(report);
    if (!os) throw std::runtime_error("eval: cannot write " + report_path);
    std::printf("eval: CD(x1e3)=%.4f V=%d F=%d %.2fs -> %s\n", report.chamfer_x1e3,
                report.num_vertices, report.num_faces, report.runtime_seconds,
                report_path.c_str());
  } catch (const std::exception& e) {
    return fail_runtime(e.what());
  }
  return kExitOk;
}

int run_synth(const std::string& spec, const std::string& out_dir, int views, int res,
              int64_t seed) {
  std::vector<DualPrimitive> shape;
  std::string name;
  try {
    if (fs::is_regular_file(spec)) {
      std::ifstream is(spec);
      nlohmann::json j = nlohmann::json::parse(is);
      name = j.value("name", fs::path(spec).stem().string());
      if (!j.contains("primitives") || !j["primitives"].is_array() || j["primitives"].empty()) {
        throw std::runtime_error("synth: spec file has no primitives array");
      }
      for (const auto& p : j["primitives"]) shape.push_back(primitive_from_json(p));
    } else {
      shape = synth_preset(spec);
      name = spec;
    }
    if (views < 2) throw std::runtime_error("synth: --views must be >= 2");
    if (res < 8) throw std::runtime_error("synth: --res must be >= 8");
  } catch (const std::exception& e) {
    return fail_validation(e.what());
  }

  try {
    synth_dataset(shape, name, views, res, uint64_t(seed), out_dir);
    std::printf("synth: %s, %d views at %dx%d -> %s\n", name.c_str(), views, res, res,
                out_dir.c_str());
  } catch (const std::exception& e) {
    return fail_runtime(e.what());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view reconstruction with carvable superquadric pairs"};
  app.require_subcommand(1);

  auto* fit_cmd = app.add_subcommand("fit", "Optimize a scene against a dataset");
  std::string fit_data, fit_out, fit_config;
  int64_t fit_seed = 0, fit_iters = 0;
  int fit_primitives = 0;
  fit_cmd->add_option("--data", fit_data, "Dataset directory");
  fit_cmd->add_option("--out", fit_out, "Output directory");
  fit_cmd->add_option("--config", fit_config, "key=value run configuration file");
  auto* fit_seed_opt = fit_cmd->add_option("--seed", fit_seed, "Random seed");
  auto* fit_iters_opt = fit_cmd->add_option("--iters", fit_iters, "Training iterations");
  auto* fit_prims_opt =
      fit_cmd->add_option("--primitives", fit_primitives, "Initial primitive count");

  auto* render_cmd = app.add_subcommand("render", "Render checkpoint views");
  std::string render_ckpt, render_data, render_out, render_views = "all";
  render_cmd->add_option("--ckpt", render_ckpt, "Checkpoint file")->required();
  render_cmd->add_option("--data", render_data, "Dataset directory (cameras)")->required();
  render_cmd->add_option("--out", render_out, "Output directory")->required();
  render_cmd->add_option("--views", render_views, "all or comma-separated indices");

  auto* export_cmd = app.add_subcommand("export-mesh", "Export the carved mesh as OBJ");
  std::string export_ckpt, export_out;
  double export_threshold = 0.5;
  int export_res = 32;
  export_cmd->add_option("--ckpt", export_ckpt, "Checkpoint file")->required();
  export_cmd->add_option("--out", export_out, "Output OBJ path")->required();
  export_cmd->add_option("--threshold", export_threshold, "Opacity threshold (default 0.5)");
  export_cmd->add_option("--res", export_res, "Tessellation resolution (default 32)");

  auto* eval_cmd = app.add_subcommand("eval", "Chamfer distance against a ground-truth mesh");
  std::string eval_mesh, eval_gt;
  int eval_samples = 100000;
  eval_cmd->add_option("--mesh", eval_mesh, "Fitted mesh OBJ")->required();
  eval_cmd->add_option("--gt", eval_gt, "Ground-truth mesh OBJ")->required();
  eval_cmd->add_option("--samples", eval_samples, "Surface samples per mesh (default 100000)");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string synth_spec, synth_out;
  int synth_views = 26, synth_res = 256;
  int64_t synth_seed = 0;
  synth_cmd->add_option("--spec", synth_spec, "Preset name or primitives JSON file")->required();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--views", synth_views, "View count (default 26)");
  synth_cmd->add_option("--res", synth_res, "Image resolution (default 256)");
  synth_cmd->add_option("--seed", synth_seed, "Lattice seed (default 0)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return kExitValidation;
  }

  if (fit_cmd->parsed()) {
    return run_fit(fit_config, fit_data, fit_out, fit_seed_opt->count() ? &fit_seed : nullptr,
                   fit_iters_opt->count() ? &fit_iters : nullptr,
                   fit_prims_opt->count() ? &fit_primitives : nullptr);
  }
  if (render_cmd->parsed()) {
    return run_render(render_ckpt, render_data, render_out, render_views);
  }
  if (export_cmd->parsed()) {
    return run_export(export_ckpt, export_out, export_threshold, export_res);
  }
  if (eval_cmd->parsed()) return run_eval(eval_mesh, eval_gt, eval_samples);
  if (synth_cmd->parsed()) return run_synth(synth_spec, synth_out, synth_views, synth_res,
                                            synth_seed);
  return kExitValidation;
}
