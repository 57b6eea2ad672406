#pragma once

#include "ehpc/pilot.hpp"
#include "ehpc/pooling.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace ehpc {

/// Evaluator heads detected offline for a named model, plus the scoring
/// hyper-parameters used with them.
struct Preset {
  std::string name;
  int num_layers = 0;
  int num_heads = 0;
  EvaluatorHeadSet heads;
  int window = 1;
  int kernel = 1;
  PoolKind pool = PoolKind::Average;
};

/// Environment variable naming a directory whose presets.json replaces the
/// catalog compiled into the binary.
inline constexpr const char* kPresetsEnv = "EHPC_PRESETS";

std::vector<Preset> parse_preset_catalog(std::string_view json);

/// The active catalog: $EHPC_PRESETS/presets.json when the variable is set,
/// the built-in copy otherwise.
std::vector<Preset> preset_catalog();

/// Throws LookupError for an unknown name.
Preset find_preset(std::string_view name);
EvaluatorHeadSet load_preset(std::string_view name);

}  // namespace ehpc
