#pragma once

#include "ehpc/trace.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ehpc {

/// One (layer, head) whose final attention row puts `mass` on `targets`.
struct ConcentratedCell {
  int layer = 0;
  int head = 0;
  std::vector<int> targets;
  double mass = 1.0;
};

/// Synthetic trace recipe. The background of every cell is uniform over the
/// causal prefix; concentrated cells override it.
struct FabricationSpec {
  int num_layers = 1;
  int num_heads = 1;
  int seq_len = 1;
  int window = 1;
  std::vector<ConcentratedCell> cells;
  std::string model_id = "fabricated";
  /// Defaults to i % 256 when absent.
  std::optional<std::vector<std::int32_t>> token_ids;
  std::optional<std::vector<std::string>> token_texts;
};

/// Builds a trace with every layer present. For a concentrated cell, each
/// stored row whose query position q covers all targets (q >= max target)
/// places `mass` uniformly on the targets and 1 - mass uniformly on the other
/// positions of [0, q]; when no other position exists the row is uniform over
/// the targets. Rows with q < max target stay uniform-causal.
///
/// Throws ArgumentError for bad dimensions, empty or out-of-range targets,
/// mass outside (0, 1], or a (layer, head) listed twice.
AttentionTrace fabricate_trace(const FabricationSpec& spec);

/// Attention mass a uniform-causal final row puts on `count` of `seq_len` keys.
inline double uniform_mass(int count, int seq_len) {
  return static_cast<double>(count) / static_cast<double>(seq_len);
}

}  // namespace ehpc
