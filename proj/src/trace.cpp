#include "ehpc/trace.hpp"

#include "ehpc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>
#include <sstream>
#include <utility>

namespace ehpc {

bool AttentionTrace::has_layer(int layer) const { return slot(layer) >= 0; }

int AttentionTrace::slot(int layer) const {
  auto it = std::find(layers_present.begin(), layers_present.end(), layer);
  return it == layers_present.end() ? -1 : static_cast<int>(it - layers_present.begin());
}

const AttentionRows& AttentionTrace::cell(int layer, int head) const {
  const int s = slot(layer);
  if (s < 0) {
    throw CoverageError("layer " + std::to_string(layer) + " is not present in trace");
  }
  if (head < 0 || head >= num_heads) {
    throw CoverageError("head " + std::to_string(head) + " out of range [0," +
                        std::to_string(num_heads) + ")");
  }
  return cells.at(static_cast<std::size_t>(s) * num_heads + head);
}

AttentionRows& AttentionTrace::cell(int layer, int head) {
  return const_cast<AttentionRows&>(std::as_const(*this).cell(layer, head));
}

Eigen::Map<const Eigen::RowVectorXf> AttentionTrace::last_row(int layer, int head) const {
  const auto& c = cell(layer, head);
  return {c.data() + (c.rows() - 1) * c.cols(), c.cols()};
}

std::size_t AttentionTrace::payload_bytes() const {
  return layers_present.size() * static_cast<std::size_t>(num_heads) *
         static_cast<std::size_t>(window) * static_cast<std::size_t>(seq_len) * sizeof(float);
}

bool operator==(const AttentionTrace& a, const AttentionTrace& b) {
  if (a.model_id != b.model_id || a.num_layers != b.num_layers || a.num_heads != b.num_heads ||
      a.seq_len != b.seq_len || a.window != b.window || a.layers_present != b.layers_present ||
      a.token_ids != b.token_ids || a.token_texts != b.token_texts ||
      a.cells.size() != b.cells.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const auto& x = a.cells[i];
    const auto& y = b.cells[i];
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    if (std::memcmp(x.data(), y.data(), sizeof(float) * static_cast<std::size_t>(x.size())) != 0) {
      return false;
    }
  }
  return true;
}

AttentionTrace make_empty_trace(std::string model_id, int num_layers, int num_heads, int seq_len,
                                int window, std::vector<int> layers_present) {
  AttentionTrace t;
  t.model_id = std::move(model_id);
  t.num_layers = num_layers;
  t.num_heads = num_heads;
  t.seq_len = seq_len;
  t.window = window;
  t.layers_present = std::move(layers_present);
  t.cells.assign(t.layers_present.size() * static_cast<std::size_t>(num_heads),
                 AttentionRows::Zero(window, seq_len));
  t.token_ids.assign(static_cast<std::size_t>(seq_len), 0);
  return t;
}

std::string to_string(const Violation& v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Violation& v) {
  os << v.invariant;
  if (v.layer >= 0) os << " layer=" << v.layer;
  if (v.head >= 0) os << " head=" << v.head;
  if (v.row >= 0) os << " row=" << v.row;
  if (v.col >= 0) os << " col=" << v.col;
  if (!v.detail.empty()) os << ": " << v.detail;
  return os;
}

namespace {

void check_row(const AttentionTrace& t, int layer, int head, int row,
               const float* data, std::vector<Violation>& out) {
  const int q = t.query_position(row);
  double sum = 0.0;
  for (int col = 0; col < t.seq_len; ++col) {
    const float w = data[col];
    if (!std::isfinite(w) || w < 0.0f) {
      std::ostringstream d;
      d << "weight " << w << " is not a finite non-negative number";
      out.push_back({"nonnegative", layer, head, row, col, d.str()});
      if (!std::isfinite(w)) continue;
    }
    if (col > q && w != 0.0f) {
      std::ostringstream d;
      d << "weight " << w << " at key " << col << " after query position " << q;
      out.push_back({"causality", layer, head, row, col, d.str()});
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    std::ostringstream d;
    d << "row sums to " << sum;
    out.push_back({"row_sum", layer, head, row, -1, d.str()});
  }
}

}  // namespace

std::vector<Violation> validate_trace(const AttentionTrace& t) {
  std::vector<Violation> out;
  if (t.num_layers < 1 || t.num_heads < 1 || t.seq_len < 1) {
    out.push_back({"dims", -1, -1, -1, -1,
                   "num_layers, num_heads and seq_len must all be at least 1"});
    return out;
  }
  if (t.window < 1 || t.window > t.seq_len) {
    out.push_back({"window", -1, -1, -1, -1,
                   "window " + std::to_string(t.window) + " outside [1, " +
                       std::to_string(t.seq_len) + "]"});
    return out;
  }
  for (std::size_t i = 0; i < t.layers_present.size(); ++i) {
    const int l = t.layers_present[i];
    if (l < 0 || l >= t.num_layers) {
      out.push_back({"layers_present", l, -1, -1, -1, "layer index out of range"});
    }
    if (i > 0 && l <= t.layers_present[i - 1]) {
      out.push_back({"layers_present", l, -1, -1, -1, "layers not strictly ascending"});
    }
  }
  if (static_cast<long>(t.token_ids.size()) != t.seq_len) {
    out.push_back({"token_ids", -1, -1, -1, -1,
                   std::to_string(t.token_ids.size()) + " token ids for seq_len " +
                       std::to_string(t.seq_len)});
  }
  if (t.token_texts && static_cast<long>(t.token_texts->size()) != t.seq_len) {
    out.push_back({"token_texts", -1, -1, -1, -1,
                   std::to_string(t.token_texts->size()) + " token texts for seq_len " +
                       std::to_string(t.seq_len)});
  }
  const std::size_t expected_cells = t.layers_present.size() * static_cast<std::size_t>(t.num_heads);
  if (t.cells.size() != expected_cells) {
    out.push_back({"cell_count", -1, -1, -1, -1,
                   std::to_string(t.cells.size()) + " cells, expected " +
                       std::to_string(expected_cells)});
    return out;
  }
  for (std::size_t s = 0; s < t.layers_present.size(); ++s) {
    const int layer = t.layers_present[s];
    for (int head = 0; head < t.num_heads; ++head) {
      const auto& c = t.cells[s * static_cast<std::size_t>(t.num_heads) + head];
      if (c.rows() != t.window || c.cols() != t.seq_len) {
        out.push_back({"cell_shape", layer, head, -1, -1,
                       std::to_string(c.rows()) + "x" + std::to_string(c.cols())});
        continue;
      }
      for (int row = 0; row < t.window; ++row) {
        check_row(t, layer, head, row, c.data() + static_cast<std::ptrdiff_t>(row) * t.seq_len,
                  out);
      }
    }
  }
  return out;
}

void require_valid(const AttentionTrace& trace) {
  const auto violations = validate_trace(trace);
  if (violations.empty()) return;
  std::string msg = "invalid trace: " + to_string(violations.front());
  if (violations.size() > 1) {
    msg += " (+" + std::to_string(violations.size() - 1) + " more)";
  }
  throw ValidationError(msg);
}

}  // namespace ehpc
