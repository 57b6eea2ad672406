#include "ehpc/compressor.hpp"

#include "ehpc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace ehpc {

std::string to_string(PoolKind kind) { return kind == PoolKind::Average ? "average" : "max"; }

PoolKind parse_pool_kind(std::string_view name) {
  if (name == "average" || name == "avg") return PoolKind::Average;
  if (name == "max") return PoolKind::Max;
  throw ArgumentError("unknown pool kind '" + std::string(name) + "' (expected average or max)");
}

std::string to_string(InferenceMode mode) { return mode == InferenceMode::Emi ? "EMI" : "NMI"; }

InferenceMode parse_inference_mode(std::string_view name) {
  if (name == "EMI" || name == "emi") return InferenceMode::Emi;
  if (name == "NMI" || name == "nmi") return InferenceMode::Nmi;
  throw ArgumentError("unknown inference mode '" + std::string(name) + "' (expected EMI or NMI)");
}

void CompressionConfig::validate() const {
  if (observation_window < 1) throw ArgumentError("observation window must be at least 1");
  if (kernel < 1) throw ArgumentError("pool kernel must be at least 1");
  if (tail() < 0) throw ArgumentError("protected tail must be non-negative");
  if (const auto* b = std::get_if<TokenBudget>(&budget)) {
    if (b->tokens < tail()) {
      throw ArgumentError("budget " + std::to_string(b->tokens) + " is smaller than the protected tail " +
                          std::to_string(tail()));
    }
  } else {
    const double k = std::get<RatioBudget>(budget).kappa2;
    if (!(std::isfinite(k) && k >= 1.0)) throw ArgumentError("compression ratio must be finite and >= 1");
  }
}

int CompressionConfig::resolve_budget(int n) const {
  validate();
  if (const auto* b = std::get_if<TokenBudget>(&budget)) return b->tokens;
  const double k = std::get<RatioBudget>(budget).kappa2;
  return std::max(tail(), static_cast<int>(std::lround(n / k)));
}

UtilityScores utility_scores(const AttentionTrace& trace, const EvaluatorHeadSet& heads,
                             const CompressionConfig& config) {
  config.validate();
  if (heads.heads.empty()) throw ArgumentError("evaluator head set is empty");
  if (std::set<int>(heads.heads.begin(), heads.heads.end()).size() != heads.heads.size()) {
    throw ArgumentError("evaluator head set lists a head twice");
  }
  if (trace.window < config.observation_window) {
    throw ArgumentError("trace window " + std::to_string(trace.window) +
                        " is shorter than the observation window " +
                        std::to_string(config.observation_window));
  }
  if (!trace.has_layer(heads.layer)) {
    throw CoverageError("evaluator layer " + std::to_string(heads.layer) + " is not present in the trace");
  }

  UtilityScores out;
  out.heads_used = heads;
  out.values = Eigen::VectorXd::Zero(trace.seq_len);
  out.prepool_head_sums.reserve(heads.heads.size());
  const double inv_window = 1.0 / config.observation_window;
  for (int head : heads.heads) {
    const auto& rows = trace.cell(heads.layer, head);
    const Eigen::VectorXd averaged =
        (rows.bottomRows(config.observation_window).cast<double>().colwise().sum() * inv_window)
            .transpose();
    out.prepool_head_sums.push_back(averaged.sum());
    out.values += pool_1d(averaged, config.kernel, config.pool);
  }
  return out;
}

CompressedPrompt compress(std::span<const std::int32_t> token_ids, const Eigen::VectorXd& scores,
                          const CompressionConfig& config,
                          const std::vector<std::string>* token_texts) {
  const int n = static_cast<int>(token_ids.size());
  if (scores.size() != n) {
    throw ArgumentError("score vector has " + std::to_string(scores.size()) + " entries for " +
                        std::to_string(n) + " tokens");
  }
  if (token_texts && static_cast<int>(token_texts->size()) != n) {
    throw ArgumentError("token texts do not match the token count");
  }
  if (!scores.allFinite()) throw ArgumentError("utility scores must be finite");
  const int budget = config.resolve_budget(n);

  CompressedPrompt out;
  out.original_len = n;
  if (budget >= n) {
    out.retained_indices.resize(static_cast<std::size_t>(n));
    std::iota(out.retained_indices.begin(), out.retained_indices.end(), 0);
  } else {
    const int tail = std::min(config.tail(), n);
    std::vector<int> candidates(static_cast<std::size_t>(n - tail));
    std::iota(candidates.begin(), candidates.end(), 0);
    const auto free_slots = static_cast<std::size_t>(budget - tail);
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(free_slots),
                      candidates.end(), [&scores](int a, int b) {
                        return scores(a) > scores(b) || (scores(a) == scores(b) && a < b);
                      });
    candidates.resize(free_slots);
    std::sort(candidates.begin(), candidates.end());
    out.retained_indices = std::move(candidates);
    for (int i = n - tail; i < n; ++i) out.retained_indices.push_back(i);
  }

  out.retained_token_ids.reserve(out.retained_indices.size());
  for (int i : out.retained_indices) out.retained_token_ids.push_back(token_ids[static_cast<std::size_t>(i)]);
  if (token_texts) {
    out.retained_texts.emplace();
    out.retained_texts->reserve(out.retained_indices.size());
    for (int i : out.retained_indices) out.retained_texts->push_back((*token_texts)[static_cast<std::size_t>(i)]);
  }
  out.achieved_kappa2 =
      out.retained_indices.empty() ? 1.0 : static_cast<double>(n) / out.retained_indices.size();
  return out;
}

CompressedPrompt compress(std::span<const std::int32_t> token_ids, const UtilityScores& scores,
                          const CompressionConfig& config,
                          const std::vector<std::string>* token_texts) {
  return compress(token_ids, scores.values, config, token_texts);
}

std::string render(const CompressedPrompt& prompt) {
  if (!prompt.retained_texts) throw CapabilityError("compressed prompt carries no token texts to render");
  std::string out;
  for (const auto& t : *prompt.retained_texts) out += t;
  return out;
}

CompressedPrompt compress_pipeline(const AttentionTrace& trace, const EvaluatorHeadSet& heads,
                                   const CompressionConfig& config,
                                   std::span<const std::int32_t> token_ids) {
  if (static_cast<int>(token_ids.size()) != trace.seq_len) {
    throw ArgumentError("token sequence length differs from the trace's seq_len");
  }
  const UtilityScores scores = utility_scores(trace, heads, config);
  const std::vector<std::string>* texts = trace.token_texts ? &*trace.token_texts : nullptr;
  return compress(token_ids, scores, config, texts);
}

CompressedPrompt compress_pipeline(const AttentionTrace& trace, const EvaluatorHeadSet& heads,
                                   const CompressionConfig& config) {
  return compress_pipeline(trace, heads, config, trace.token_ids);
}

}  // namespace ehpc
