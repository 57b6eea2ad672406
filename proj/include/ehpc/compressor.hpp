#pragma once

#include "ehpc/pilot.hpp"
#include "ehpc/pooling.hpp"
#include "ehpc/trace.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ehpc {

/// Whether the compressed prompt is consumed by the scoring model itself
/// (native) or by a different one (extended). Recorded only; scoring is
/// identical in both modes.
enum class InferenceMode { Emi, Nmi };

std::string to_string(InferenceMode mode);
InferenceMode parse_inference_mode(std::string_view name);

struct TokenBudget {
  int tokens = 0;
};

/// Target compression ratio kappa2 = N / retained.
struct RatioBudget {
  double kappa2 = 1.0;
};

using Budget = std::variant<TokenBudget, RatioBudget>;

struct CompressionConfig {
  int observation_window = 1;
  int kernel = 1;
  PoolKind pool = PoolKind::Average;
  Budget budget = RatioBudget{1.0};
  /// Trailing tokens that are always kept; defaults to observation_window.
  std::optional<int> protected_tail;
  InferenceMode mode = InferenceMode::Nmi;

  int tail() const { return protected_tail.value_or(observation_window); }
  /// Throws ArgumentError on any invariant violation.
  void validate() const;
  /// Token budget for an n-token prompt: the absolute budget, or
  /// max(tail, round(n / kappa2)) for a ratio.
  int resolve_budget(int n) const;
};

struct UtilityScores {
  Eigen::VectorXd values;
  EvaluatorHeadSet heads_used;
  /// Per head (in head-set order): sum of its averaged row before pooling.
  std::vector<double> prepool_head_sums;
};

/// Sum over the evaluator heads of pool(mean of the last N_o rows, kernel).
/// Throws ArgumentError when the trace window is shorter than N_o and
/// CoverageError when the head set's layer or a head is missing.
UtilityScores utility_scores(const AttentionTrace& trace, const EvaluatorHeadSet& heads,
                             const CompressionConfig& config);

struct CompressedPrompt {
  std::vector<int> retained_indices;
  std::vector<std::int32_t> retained_token_ids;
  std::optional<std::vector<std::string>> retained_texts;
  int original_len = 0;
  double achieved_kappa2 = 1.0;
};

/// Keeps the protected tail, fills the rest of the budget with the
/// highest-scoring remaining indices (ties to the lower index) and returns the
/// survivors in original order.
CompressedPrompt compress(std::span<const std::int32_t> token_ids, const Eigen::VectorXd& scores,
                          const CompressionConfig& config,
                          const std::vector<std::string>* token_texts = nullptr);

CompressedPrompt compress(std::span<const std::int32_t> token_ids, const UtilityScores& scores,
                          const CompressionConfig& config,
                          const std::vector<std::string>* token_texts = nullptr);

/// Concatenated texts of the retained tokens. Throws CapabilityError when the
/// prompt carries no texts.
std::string render(const CompressedPrompt& prompt);

/// utility_scores followed by compress, using the trace's own token texts
/// when it has them.
CompressedPrompt compress_pipeline(const AttentionTrace& trace, const EvaluatorHeadSet& heads,
                                   const CompressionConfig& config,
                                   std::span<const std::int32_t> token_ids);

CompressedPrompt compress_pipeline(const AttentionTrace& trace, const EvaluatorHeadSet& heads,
                                   const CompressionConfig& config);

}  // namespace ehpc
