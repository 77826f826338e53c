#include "sqc/runconfig.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sqc {

namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad(const std::string& line, const std::string& why) {
  throw std::runtime_error("config: " + why + " in line '" + line + "'");
}

double to_double(const std::string& v, const std::string& line) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty()) bad(line, "expected a number");
  return x;
}

int64_t to_int(const std::string& v, const std::string& line) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || v.empty()) bad(line, "expected an integer");
  return x;
}

uint64_t to_uint(const std::string& v, const std::string& line) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || v.empty()) bad(line, "expected an unsigned integer");
  return x;
}

bool to_bool(const std::string& v, const std::string& line) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad(line, "expected true or false");
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw_line;
  while (std::getline(in, raw_line)) {
    const std::string line = trim(raw_line);
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) bad(line, "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    TrainConfig& t = cfg.train;

    if (key == "k_init") t.k_init = int(to_int(val, line));
    else if (key == "iterations") t.iterations = to_int(val, line);
    else if (key == "batch_rays") t.batch_rays = int(to_int(val, line));
    else if (key == "lr_primitives") t.lr_primitives = to_double(val, line);
    else if (key == "lr_lighting") t.lr_lighting = to_double(val, line);
    else if (key == "prune_interval") t.prune_interval = int(to_int(val, line));
    else if (key == "prune_warmup") t.prune_warmup = int(to_int(val, line));
    else if (key == "alpha_prune") t.alpha_prune = to_double(val, line);
    else if (key == "scale_prune") t.scale_prune = to_double(val, line);
    else if (key == "view_weight_prune") t.view_weight_prune = to_double(val, line);
    else if (key == "w_mask") t.weights.mask = to_double(val, line);
    else if (key == "w_sparse") t.weights.sparse = to_double(val, line);
    else if (key == "w_entropy") t.weights.entropy = to_double(val, line);
    else if (key == "w_max_excess") t.weights.max_excess = to_double(val, line);
    else if (key == "w_normal_reg") t.weights.normal_reg = to_double(val, line);
    else if (key == "mu") t.mu = to_double(val, line);
    else if (key == "n_samples") t.n_samples = int(to_int(val, line));
    else if (key == "seed") t.seed = to_uint(val, line);
    else if (key == "log_interval") t.log_interval = int(to_int(val, line));
    else if (key == "checkpoint_interval") t.checkpoint_interval = int(to_int(val, line));
    else if (key == "stats_res") t.stats_res = int(to_int(val, line));
    else if (key == "use_normals") t.use_normals = to_bool(val, line);
    else if (key == "resume") t.resume = val;
    else if (key == "data_dir") cfg.data_dir = val;
    else if (key == "out_dir") cfg.out_dir = val;
    else if (key == "render_n_samples") cfg.render_n_samples = int(to_int(val, line));
    else if (key == "export_threshold") cfg.export_threshold = to_double(val, line);
    else if (key == "export_res") cfg.export_res = int(to_int(val, line));
    else bad(line, "unknown key '" + key + "'");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string serialize_run_config(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  std::ostringstream out;
  out << "k_init = " << t.k_init << "\n";
  out << "iterations = " << t.iterations << "\n";
  out << "batch_rays = " << t.batch_rays << "\n";
  out << "lr_primitives = " << fmt(t.lr_primitives) << "\n";
  out << "lr_lighting = " << fmt(t.lr_lighting) << "\n";
  out << "prune_interval = " << t.prune_interval << "\n";
  out << "prune_warmup = " << t.prune_warmup << "\n";
  out << "alpha_prune = " << fmt(t.alpha_prune) << "\n";
  out << "scale_prune = " << fmt(t.scale_prune) << "\n";
  out << "view_weight_prune = " << fmt(t.view_weight_prune) << "\n";
  out << "w_mask = " << fmt(t.weights.mask) << "\n";
  out << "w_sparse = " << fmt(t.weights.sparse) << "\n";
  out << "w_entropy = " << fmt(t.weights.entropy) << "\n";
  out << "w_max_excess = " << fmt(t.weights.max_excess) << "\n";
  out << "w_normal_reg = " << fmt(t.weights.normal_reg) << "\n";
  out << "mu = " << fmt(t.mu) << "\n";
  out << "n_samples = " << t.n_samples << "\n";
  out << "seed = " << t.seed << "\n";
  out << "log_interval = " << t.log_interval << "\n";
  out << "checkpoint_interval = " << t.checkpoint_interval << "\n";
  out << "stats_res = " << t.stats_res << "\n";
  out << "use_normals = " << (t.use_normals ? "true" : "false") << "\n";
  out << "resume = " << t.resume << "\n";
  out << "data_dir = " << cfg.data_dir << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  out << "render_n_samples = " << cfg.render_n_samples << "\n";
  out << "export_threshold = " << fmt(cfg.export_threshold) << "\n";
  out << "export_res = " << cfg.export_res << "\n";
  return out.str();
}

}  // namespace sqc
