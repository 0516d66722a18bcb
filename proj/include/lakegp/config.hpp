#pragma once

#include <string>

#include "lakegp/engine.hpp"
#include "lakegp/lakesim.hpp"

namespace lakegp {

/// Flat key=value run configuration. Unknown keys are errors.
struct RunConfig {
  std::string ensemble_csv;
  std::string field_csv;
  std::string output_dir;
  std::string state_dir;
  bool with_phi = true;
  int vecchia_m = 30;
  uint64_t seed = 1;
  int refit_cadence = 7;
  CivilDay train_start = 0;
  CivilDay train_end = 0;
  SimConfig sim;

  EngineConfig engine_config() const {
    EngineConfig e;
    e.with_phi = with_phi;
    e.vecchia_m = vecchia_m;
    e.seed = seed;
    e.refit_cadence = refit_cadence;
    return e;
  }
};

RunConfig parse_config(const std::string& path);

}  // namespace lakegp
