#include "ehpc/fabricate.hpp"

#include "ehpc/errors.hpp"

#include <algorithm>
#include <set>
#include <utility>

namespace ehpc {

namespace {

void fill_uniform_causal(AttentionRows& rows, const AttentionTrace& t) {
  rows.setZero();
  for (int r = 0; r < t.window; ++r) {
    const int q = t.query_position(r);
    rows.row(r).head(q + 1).setConstant(static_cast<float>(1.0 / (q + 1)));
  }
}

void fill_concentrated(AttentionRows& rows, const AttentionTrace& t,
                       const std::vector<int>& targets, double mass) {
  const int last_target = targets.back();
  const auto count = static_cast<int>(targets.size());
  for (int r = 0; r < t.window; ++r) {
    const int q = t.query_position(r);
    if (q < last_target) continue;
    const int others = q + 1 - count;
    const double on_target = others == 0 ? 1.0 / count : mass / count;
    const double off_target = others == 0 ? 0.0 : (1.0 - mass) / others;
    rows.row(r).head(q + 1).setConstant(static_cast<float>(off_target));
    for (int j : targets) rows(r, j) = static_cast<float>(on_target);
  }
}

}  // namespace

AttentionTrace fabricate_trace(const FabricationSpec& spec) {
  if (spec.num_layers < 1 || spec.num_heads < 1 || spec.seq_len < 1) {
    throw ArgumentError("fabricate: num_layers, num_heads and seq_len must be at least 1");
  }
  if (spec.window < 1 || spec.window > spec.seq_len) {
    throw ArgumentError("fabricate: window must lie in [1, seq_len]");
  }

  std::vector<int> layers(static_cast<std::size_t>(spec.num_layers));
  for (int l = 0; l < spec.num_layers; ++l) layers[static_cast<std::size_t>(l)] = l;
  AttentionTrace t = make_empty_trace(spec.model_id, spec.num_layers, spec.num_heads,
                                      spec.seq_len, spec.window, std::move(layers));
  if (spec.token_ids) {
    if (static_cast<int>(spec.token_ids->size()) != spec.seq_len) {
      throw ArgumentError("fabricate: token_ids length differs from seq_len");
    }
    t.token_ids = *spec.token_ids;
  } else {
    for (int i = 0; i < spec.seq_len; ++i) t.token_ids[static_cast<std::size_t>(i)] = i % 256;
  }
  if (spec.token_texts) {
    if (static_cast<int>(spec.token_texts->size()) != spec.seq_len) {
      throw ArgumentError("fabricate: token_texts length differs from seq_len");
    }
    t.token_texts = spec.token_texts;
  }

  for (auto& c : t.cells) fill_uniform_causal(c, t);

  std::set<std::pair<int, int>> seen;
  for (const auto& cell : spec.cells) {
    if (cell.layer < 0 || cell.layer >= spec.num_layers || cell.head < 0 ||
        cell.head >= spec.num_heads) {
      throw ArgumentError("fabricate: concentrated cell (" + std::to_string(cell.layer) + ", " +
                          std::to_string(cell.head) + ") outside the trace");
    }
    if (!seen.emplace(cell.layer, cell.head).second) {
      throw ArgumentError("fabricate: concentrated cell listed twice");
    }
    if (!(cell.mass > 0.0 && cell.mass <= 1.0)) {
      throw ArgumentError("fabricate: mass must lie in (0, 1]");
    }
    std::vector<int> targets = cell.targets;
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    if (targets.empty()) throw ArgumentError("fabricate: empty target set");
    if (targets.front() < 0 || targets.back() >= spec.seq_len) {
      throw ArgumentError("fabricate: target index outside [0, seq_len)");
    }
    fill_concentrated(t.cell(cell.layer, cell.head), t, targets, cell.mass);
  }
  return t;
}

}  // namespace ehpc
