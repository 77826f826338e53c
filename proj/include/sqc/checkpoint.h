#pragma once

#include <json.hpp>

#include "sqc/trainer.h"

namespace sqc {

// Checkpoint schema pieces, shared with the synthetic-scene ground-truth
// files. Primitives carry constrained values (rotations wrapped to degrees
// in [-180, 180)) plus the exact raw slots for loss-free round-trips.
nlohmann::ordered_json primitive_to_json(const DualPrimitive& s);

// Uses the raw block when present; otherwise inverts the constrained values.
DualPrimitive primitive_from_json(const nlohmann::json& j);
void primitive_raw_from_json(const nlohmann::json& j, double* raw27);

nlohmann::ordered_json config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const nlohmann::json& j);

}  // namespace sqc
