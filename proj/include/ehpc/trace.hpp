#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ehpc {

/// W x N block of attention probabilities for one (layer, head). Row i holds
/// the softmax distribution of query position N - W + i over all N keys.
using AttentionRows = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kRowSumTolerance = 1e-4;

/// Trailing attention rows captured from a prefill pass.
///
/// Cells are stored layer-major: the block for (layer, head) lives at
/// `cells[slot(layer) * num_heads + head]`, where slot() is the position of
/// `layer` inside `layers_present`. Only the last `window` query rows are kept
/// so a trace grows linearly with the prompt length.
struct AttentionTrace {
  std::string model_id;
  int num_layers = 0;
  int num_heads = 0;
  int seq_len = 0;
  int window = 0;
  std::vector<int> layers_present;
  std::vector<AttentionRows> cells;
  std::vector<std::int32_t> token_ids;
  std::optional<std::vector<std::string>> token_texts;

  bool has_layer(int layer) const;
  /// Index of `layer` within layers_present, or -1.
  int slot(int layer) const;

  const AttentionRows& cell(int layer, int head) const;
  AttentionRows& cell(int layer, int head);

  /// Row of the final query position for (layer, head).
  Eigen::Map<const Eigen::RowVectorXf> last_row(int layer, int head) const;

  /// Query position of stored row `row`.
  int query_position(int row) const { return seq_len - window + row; }

  std::size_t payload_bytes() const;
};

/// Bit-exact equality: float payloads are compared by representation, so
/// -0.0f and 0.0f differ.
bool operator==(const AttentionTrace& a, const AttentionTrace& b);
inline bool operator!=(const AttentionTrace& a, const AttentionTrace& b) { return !(a == b); }

/// Allocates zero-filled cells for the given shape.
AttentionTrace make_empty_trace(std::string model_id, int num_layers, int num_heads,
                                int seq_len, int window, std::vector<int> layers_present);

struct Violation {
  std::string invariant;
  int layer = -1;
  int head = -1;
  int row = -1;
  int col = -1;
  std::string detail;
};

std::string to_string(const Violation& v);
std::ostream& operator<<(std::ostream& os, const Violation& v);

/// Checks every structural and numerical invariant of a trace. Returns an
/// empty list iff the trace is valid. Numeric checks on a cell are skipped
/// when the cell's shape is already wrong.
std::vector<Violation> validate_trace(const AttentionTrace& trace);

/// Throws ValidationError carrying the first violation (and a count of the
/// rest) if the trace is invalid.
void require_valid(const AttentionTrace& trace);

}  // namespace ehpc
