#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ehpc {

/// Shape of an attention-cost question. Costs count attention-score
/// multiply-adds ("attention units"); they are not wall-clock estimates.
struct CostParams {
  int num_layers = 1;
  int num_heads = 1;
  int head_dim = 1;
  double prompt_tokens = 1;     // N
  double generated_tokens = 0;  // t
  double kappa1 = 1.0;          // L / evaluator depth
  double kappa2 = 1.0;          // N / retained tokens

  /// Throws ArgumentError on a shape below 1, t < 0, kappa2 < 1 or kappa1
  /// outside [1, L].
  void validate() const;
};

struct CostReport {
  CostParams params;
  double prefill_base = 0;
  double decode_base = 0;
  double prefill_stage1 = 0;
  double prefill_stage2 = 0;
  double prefill_pipeline = 0;
  double decode_compressed = 0;
  double prefill_ratio = 0;
  double decode_ratio = 0;
};

/// L * H * d_k * N^2.
double cost_prefill(const CostParams& p);

/// L * H * d_k * (N t + t^2 / 2): each generated token attends over the
/// prompt plus everything generated so far.
double cost_decode(const CostParams& p);

/// Two-stage prefill (scoring pass over L / kappa1 layers, then a full pass
/// over N / kappa2 tokens) and decoding over the compressed prompt.
CostReport cost_pipeline(const CostParams& p);

/// 1 / kappa1 + 1 / kappa2^2.
double prefill_factor(double kappa1, double kappa2);

/// True iff the two-stage prefill is strictly cheaper than one full prefill.
bool check_speedup(double kappa1, double kappa2);

/// kappa1 for an evaluator at 0-based `layer` of an L-layer model: the scoring
/// pass runs layers [0, layer], so kappa1 = L / (layer + 1).
double kappa1_for_layer(int num_layers, int layer);

/// One sweep dimension, e.g. "kappa2=1..8", "N=1000,2000" or "kappa1=2..4:0.5".
/// Parameters: kappa1, kappa2, N, t.
struct SweepAxis {
  std::string parameter;
  std::vector<double> values;
};

SweepAxis parse_sweep_axis(std::string_view text);

/// Cartesian product over the axes (first axis outermost) applied on top of
/// `base`; every grid point is validated.
std::vector<CostReport> cost_sweep(const CostParams& base, const std::vector<SweepAxis>& axes);

void write_cost_csv(const std::vector<CostReport>& rows, std::ostream& out);

}  // namespace ehpc
