#pragma once

#include "sqc/trainer.h"

namespace sqc {

// Everything a CLI run needs, as one flat key=value file ('#' comments and
// blank lines allowed). Every key has a default; unknown keys are rejected.
struct RunConfig {
  TrainConfig train;
  std::string data_dir;
  std::string out_dir;
  int render_n_samples = 128;
  double export_threshold = 0.5;
  int export_res = 32;
};

// Throws std::runtime_error naming the offending line on unknown keys or
// unparseable values. parse(serialize(cfg)) == cfg holds exactly.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace sqc
