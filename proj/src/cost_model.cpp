#include "ehpc/cost_model.hpp"

#include "ehpc/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <ostream>

namespace ehpc {

void CostParams::validate() const {
  if (num_layers < 1 || num_heads < 1 || head_dim < 1) {
    throw ArgumentError("cost: L, H and d_k must be at least 1");
  }
  if (!(prompt_tokens >= 1)) throw ArgumentError("cost: N must be at least 1");
  if (!(generated_tokens >= 0)) throw ArgumentError("cost: t must be non-negative");
  if (!(kappa2 >= 1) || !std::isfinite(kappa2)) throw ArgumentError("cost: kappa2 must be finite and >= 1");
  if (!(kappa1 >= 1) || kappa1 > num_layers) {
    throw ArgumentError("cost: kappa1 must lie in [1, L=" + std::to_string(num_layers) + "]");
  }
}

namespace {

double shape(const CostParams& p) {
  return static_cast<double>(p.num_layers) * p.num_heads * p.head_dim;
}

double decode_units(double prompt, double t) { return prompt * t + t * t / 2.0; }

}  // namespace

double cost_prefill(const CostParams& p) {
  p.validate();
  return shape(p) * p.prompt_tokens * p.prompt_tokens;
}

double cost_decode(const CostParams& p) {
  p.validate();
  return shape(p) * decode_units(p.prompt_tokens, p.generated_tokens);
}

CostReport cost_pipeline(const CostParams& p) {
  CostReport r;
  r.params = p;
  r.prefill_base = cost_prefill(p);
  r.decode_base = cost_decode(p);
  r.prefill_stage1 = r.prefill_base / p.kappa1;
  r.prefill_stage2 = r.prefill_base / (p.kappa2 * p.kappa2);
  r.prefill_pipeline = r.prefill_stage1 + r.prefill_stage2;
  r.decode_compressed = shape(p) * decode_units(p.prompt_tokens / p.kappa2, p.generated_tokens);
  r.prefill_ratio = r.prefill_pipeline / r.prefill_base;
  // With t = 0 both decode costs vanish; report "no change" rather than 0/0.
  r.decode_ratio = r.decode_base == 0 ? 1.0 : r.decode_compressed / r.decode_base;
  return r;
}

double prefill_factor(double kappa1, double kappa2) {
  if (!(kappa1 >= 1) || !(kappa2 >= 1)) throw ArgumentError("kappa1 and kappa2 must be >= 1");
  return 1.0 / kappa1 + 1.0 / (kappa2 * kappa2);
}

bool check_speedup(double kappa1, double kappa2) { return prefill_factor(kappa1, kappa2) < 1.0; }

double kappa1_for_layer(int num_layers, int layer) {
  if (num_layers < 1 || layer < 0 || layer >= num_layers) {
    throw ArgumentError("evaluator layer " + std::to_string(layer) + " outside [0, " +
                        std::to_string(num_layers) + ")");
  }
  return static_cast<double>(num_layers) / (layer + 1);
}

namespace {

double parse_number(std::string_view s, std::string_view context) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ArgumentError("bad number '" + std::string(s) + "' in sweep '" + std::string(context) + "'");
  }
  return v;
}

void apply(CostParams& p, const std::string& parameter, double value) {
  if (parameter == "kappa1") p.kappa1 = value;
  else if (parameter == "kappa2") p.kappa2 = value;
  else if (parameter == "N") p.prompt_tokens = value;
  else if (parameter == "t") p.generated_tokens = value;
  else throw ArgumentError("unknown sweep parameter '" + parameter + "' (kappa1, kappa2, N, t)");
}

void sweep_rec(const CostParams& p, const std::vector<SweepAxis>& axes, std::size_t depth,
               std::vector<CostReport>& out) {
  if (depth == axes.size()) {
    out.push_back(cost_pipeline(p));
    return;
  }
  for (double v : axes[depth].values) {
    CostParams q = p;
    apply(q, axes[depth].parameter, v);
    sweep_rec(q, axes, depth + 1, out);
  }
}

}  // namespace

SweepAxis parse_sweep_axis(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ArgumentError("sweep '" + std::string(text) + "' must look like name=lo..hi or name=a,b,c");
  }
  SweepAxis axis;
  axis.parameter = std::string(text.substr(0, eq));
  CostParams probe;
  apply(probe, axis.parameter, 1.0);  // rejects unknown names early
  const std::string_view spec = text.substr(eq + 1);
  if (const auto dots = spec.find(".."); dots != std::string_view::npos) {
    std::string_view hi_part = spec.substr(dots + 2);
    double step = 1.0;
    if (const auto colon = hi_part.find(':'); colon != std::string_view::npos) {
      step = parse_number(hi_part.substr(colon + 1), text);
      hi_part = hi_part.substr(0, colon);
    }
    const double lo = parse_number(spec.substr(0, dots), text);
    const double hi = parse_number(hi_part, text);
    if (!(step > 0) || hi < lo) throw ArgumentError("sweep '" + std::string(text) + "' is an empty range");
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) axis.values.push_back(lo + static_cast<double>(i) * step);
  } else {
    std::size_t start = 0;
    while (start <= spec.size()) {
      const auto comma = spec.find(',', start);
      const auto end = comma == std::string_view::npos ? spec.size() : comma;
      axis.values.push_back(parse_number(spec.substr(start, end - start), text));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  return axis;
}

std::vector<CostReport> cost_sweep(const CostParams& base, const std::vector<SweepAxis>& axes) {
  std::vector<CostReport> out;
  sweep_rec(base, axes, 0, out);
  return out;
}

void write_cost_csv(const std::vector<CostReport>& rows, std::ostream& out) {
  out << "L,H,d_k,N,t,kappa1,kappa2,prefill_base,decode_base,prefill_stage1,prefill_stage2,"
         "prefill_pipeline,decode_compressed,prefill_ratio,decode_ratio\n";
  std::array<char, 32> buf{};
  auto num = [&](double v) {
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.write(buf.data(), res.ptr - buf.data());
  };
  for (const auto& r : rows) {
    const auto& p = r.params;
    out << p.num_layers << ',' << p.num_heads << ',' << p.head_dim << ',';
    for (double v : {p.prompt_tokens, p.generated_tokens, p.kappa1, p.kappa2, r.prefill_base,
                     r.decode_base, r.prefill_stage1, r.prefill_stage2, r.prefill_pipeline,
                     r.decode_compressed, r.prefill_ratio}) {
      num(v);
      out << ',';
    }
    num(r.decode_ratio);
    out << '\n';
  }
}

}  // namespace ehpc
