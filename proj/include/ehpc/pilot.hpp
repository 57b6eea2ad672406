#pragma once

#include "ehpc/trace.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ehpc {

using TokenIds = std::vector<std::int32_t>;

enum class CaseKind { Qa, MultiHop };

std::string to_string(CaseKind kind);

/// A probe prompt with known evidence positions.
struct PilotCase {
  TokenIds token_ids;
  /// Sorted indices of the inserted evidence tokens.
  std::vector<int> evidence;
  /// Placement fraction of the (first) inserted span.
  double depth = 0.0;
  int question_len = 0;
  CaseKind kind = CaseKind::Qa;
};

/// Filler, then `needle` starting at floor(depth * (N - |needle| - |question|)),
/// then more filler, then `question` in the final positions. Filler is cycled
/// when shorter than needed.
PilotCase synthesize_haystack(std::span<const std::int32_t> filler,
                              std::span<const std::int32_t> needle,
                              std::span<const std::int32_t> question, int target_len,
                              double depth);

struct ChainVariable {
  std::string name;
  int hops = 1;
};

/// Byte-level token pattern of hop `hop` (1-based) of a variable chain:
/// "VAR <name>_<hop> = <name>_<hop-1> ;\n".
TokenIds chain_statement(const std::string& name, int hop);

/// Inserts every hop statement of every variable (variables in order, hops
/// ascending) at its own depth, one depth per statement, using the same
/// placement rule as synthesize_haystack. Throws PlacementError when two
/// statements would overlap.
PilotCase synthesize_chain_case(const std::vector<ChainVariable>& variables,
                                std::span<const std::int32_t> filler,
                                std::span<const std::int32_t> question, int target_len,
                                const std::vector<double>& depths);

/// Every (length, depth) combination of needle cases.
std::vector<PilotCase> needle_sweep(std::span<const std::int32_t> filler,
                                    std::span<const std::int32_t> needle,
                                    std::span<const std::int32_t> question,
                                    const std::vector<int>& lengths,
                                    const std::vector<double>& depths);

/// Per-case accumulated evidence: heads x layers, zero in columns of layers
/// the trace did not capture.
struct EvidencePartial {
  Eigen::MatrixXd scores;
  std::vector<int> layers;
};

/// For each captured (layer, head), the sum of the final attention row over
/// the evidence indices. Duplicate indices count once.
EvidencePartial accumulate_evidence(const AttentionTrace& trace, std::vector<int> evidence);

struct EvidenceScoreMatrix {
  /// heads x layers.
  Eigen::MatrixXd scores;
  int cases_averaged = 0;
  /// Layers that carry data; other columns are zero.
  std::vector<int> layers;

  int num_heads() const { return static_cast<int>(scores.rows()); }
  int num_layers() const { return static_cast<int>(scores.cols()); }
  /// Stable content hash, used as head-set provenance.
  std::string fingerprint() const;
};

/// Elementwise mean of the partials, summed in list order.
EvidenceScoreMatrix build_matrix(std::span<const EvidencePartial> partials);

struct EvaluatorHeadSet {
  int layer = 0;
  /// Descending evidence score.
  std::vector<int> heads;
  std::string provenance;

  int k() const { return static_cast<int>(heads.size()); }
  friend bool operator==(const EvaluatorHeadSet&, const EvaluatorHeadSet&) = default;
};

/// Picks the layer with the largest column sum, then its k highest-scoring
/// heads. Ties go to the lower index in both steps.
EvaluatorHeadSet select_heads(const EvidenceScoreMatrix& s, int k);

/// CSV with one row per head and one column per layer; columns of uncaptured
/// layers are left empty.
void write_matrix_csv(const EvidenceScoreMatrix& s, std::ostream& out);

}  // namespace ehpc
