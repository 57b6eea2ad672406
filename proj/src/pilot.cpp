#include "ehpc/pilot.hpp"

#include "ehpc/errors.hpp"
#include "ehpc/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <numeric>
#include <ostream>

namespace ehpc {

std::string to_string(CaseKind kind) { return kind == CaseKind::Qa ? "qa" : "multi-hop"; }

namespace {

struct Placement {
  int start = 0;
  std::span<const std::int32_t> tokens;
};

int placement_start(double depth, int span_len, int question_len, int target_len) {
  if (!(depth >= 0.0 && depth <= 1.0)) throw ArgumentError("depth must lie in [0, 1]");
  const int free_span = target_len - span_len - question_len;
  return static_cast<int>(std::floor(depth * free_span));
}

// Lays out the placements over a body of target_len - |question| positions,
// fills the gaps from the cycled filler and appends the question.
TokenIds assemble(std::span<const std::int32_t> filler, const std::vector<Placement>& placements,
                  std::span<const std::int32_t> question, int target_len,
                  std::vector<int>& evidence) {
  const int body = target_len - static_cast<int>(question.size());
  std::vector<char> occupied(static_cast<std::size_t>(body), 0);
  TokenIds out(static_cast<std::size_t>(target_len), 0);
  for (const auto& p : placements) {
    for (std::size_t i = 0; i < p.tokens.size(); ++i) {
      const auto pos = static_cast<std::size_t>(p.start) + i;
      if (occupied[pos]) throw PlacementError("evidence insertions overlap at index " + std::to_string(pos));
      occupied[pos] = 1;
      out[pos] = p.tokens[i];
      evidence.push_back(static_cast<int>(pos));
    }
  }
  const auto gaps = std::count(occupied.begin(), occupied.end(), 0);
  if (gaps > 0 && filler.empty()) throw ArgumentError("filler is empty but the prompt needs padding");
  std::size_t f = 0;
  for (int i = 0; i < body; ++i) {
    if (occupied[static_cast<std::size_t>(i)]) continue;
    out[static_cast<std::size_t>(i)] = filler[f % filler.size()];
    ++f;
  }
  std::copy(question.begin(), question.end(), out.begin() + body);
  std::sort(evidence.begin(), evidence.end());
  return out;
}

}  // namespace

PilotCase synthesize_haystack(std::span<const std::int32_t> filler,
                              std::span<const std::int32_t> needle,
                              std::span<const std::int32_t> question, int target_len,
                              double depth) {
  const int needle_len = static_cast<int>(needle.size());
  const int question_len = static_cast<int>(question.size());
  if (needle_len + question_len > target_len) {
    throw ArgumentError("needle and question (" + std::to_string(needle_len + question_len) +
                        " tokens) do not fit in " + std::to_string(target_len));
  }
  PilotCase c;
  c.depth = depth;
  c.question_len = question_len;
  c.kind = CaseKind::Qa;
  const std::vector<Placement> placements{
      {placement_start(depth, needle_len, question_len, target_len), needle}};
  c.token_ids = assemble(filler, placements, question, target_len, c.evidence);
  return c;
}

TokenIds chain_statement(const std::string& name, int hop) {
  const std::string text = "VAR " + name + "_" + std::to_string(hop) + " = " + name + "_" +
                           std::to_string(hop - 1) + " ;\n";
  return ByteTokenizer{}.ids(text);
}

PilotCase synthesize_chain_case(const std::vector<ChainVariable>& variables,
                                std::span<const std::int32_t> filler,
                                std::span<const std::int32_t> question, int target_len,
                                const std::vector<double>& depths) {
  std::vector<TokenIds> statements;
  for (const auto& v : variables) {
    if (v.hops < 1) throw ArgumentError("chain variable '" + v.name + "' needs at least one hop");
    for (int hop = 1; hop <= v.hops; ++hop) statements.push_back(chain_statement(v.name, hop));
  }
  if (statements.empty()) throw ArgumentError("chain case needs at least one variable");
  if (depths.size() != statements.size()) {
    throw ArgumentError("chain case has " + std::to_string(statements.size()) + " statements but " +
                        std::to_string(depths.size()) + " depths");
  }
  const int question_len = static_cast<int>(question.size());
  std::size_t total = question.size();
  for (const auto& s : statements) total += s.size();
  if (total > static_cast<std::size_t>(target_len)) {
    throw ArgumentError("chain statements and question do not fit in " + std::to_string(target_len));
  }

  std::vector<Placement> placements;
  for (std::size_t i = 0; i < statements.size(); ++i) {
    placements.push_back({placement_start(depths[i], static_cast<int>(statements[i].size()),
                                          question_len, target_len),
                          statements[i]});
  }
  PilotCase c;
  c.depth = depths.front();
  c.question_len = question_len;
  c.kind = CaseKind::MultiHop;
  c.token_ids = assemble(filler, placements, question, target_len, c.evidence);
  return c;
}

std::vector<PilotCase> needle_sweep(std::span<const std::int32_t> filler,
                                    std::span<const std::int32_t> needle,
                                    std::span<const std::int32_t> question,
                                    const std::vector<int>& lengths,
                                    const std::vector<double>& depths) {
  std::vector<PilotCase> cases;
  cases.reserve(lengths.size() * depths.size());
  for (int n : lengths)
    for (double d : depths) cases.push_back(synthesize_haystack(filler, needle, question, n, d));
  return cases;
}

EvidencePartial accumulate_evidence(const AttentionTrace& trace, std::vector<int> evidence) {
  std::sort(evidence.begin(), evidence.end());
  evidence.erase(std::unique(evidence.begin(), evidence.end()), evidence.end());
  if (!evidence.empty() && (evidence.front() < 0 || evidence.back() >= trace.seq_len)) {
    throw ArgumentError("evidence index outside [0, " + std::to_string(trace.seq_len) + ")");
  }
  if (trace.window < 1) throw ArgumentError("trace carries no attention rows");

  EvidencePartial p;
  p.scores = Eigen::MatrixXd::Zero(trace.num_heads, trace.num_layers);
  p.layers = trace.layers_present;
  for (int layer : trace.layers_present) {
    for (int head = 0; head < trace.num_heads; ++head) {
      const auto row = trace.last_row(layer, head);
      double sum = 0.0;
      for (int j : evidence) sum += static_cast<double>(row[j]);
      p.scores(head, layer) = sum;
    }
  }
  return p;
}

EvidenceScoreMatrix build_matrix(std::span<const EvidencePartial> partials) {
  if (partials.empty()) throw ArgumentError("build_matrix: no cases");
  const auto& first = partials.front();
  EvidenceScoreMatrix s;
  s.scores = Eigen::MatrixXd::Zero(first.scores.rows(), first.scores.cols());
  s.layers = first.layers;
  for (std::size_t i = 0; i < partials.size(); ++i) {
    const auto& p = partials[i];
    if (p.scores.rows() != first.scores.rows() || p.scores.cols() != first.scores.cols() ||
        p.layers != first.layers) {
      throw ArgumentError("build_matrix: case " + std::to_string(i) +
                          " has different dimensions or layer coverage");
    }
    s.scores += p.scores;
  }
  s.cases_averaged = static_cast<int>(partials.size());
  s.scores /= static_cast<double>(s.cases_averaged);
  return s;
}

std::string EvidenceScoreMatrix::fingerprint() const {
  // FNV-1a over the dims, case count, coverage and the raw score bits.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::array<std::int64_t, 3> dims{scores.rows(), scores.cols(), cases_averaged};
  mix(dims.data(), sizeof(dims));
  for (int l : layers) mix(&l, sizeof(l));
  for (Eigen::Index c = 0; c < scores.cols(); ++c)
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      const double v = scores(r, c);
      mix(&v, sizeof(v));
    }
  std::array<char, 17> hex{};
  std::to_chars(hex.data(), hex.data() + 16, h, 16);
  return std::string("matrix:fnv1a64:") + hex.data();
}

EvaluatorHeadSet select_heads(const EvidenceScoreMatrix& s, int k) {
  if (k < 1 || k > s.num_heads()) {
    throw ArgumentError("k=" + std::to_string(k) + " outside [1, " + std::to_string(s.num_heads()) +
                        "]");
  }
  if (s.layers.empty()) throw ArgumentError("evidence matrix covers no layers");

  int best_layer = s.layers.front();
  double best_sum = s.scores.col(best_layer).sum();
  for (int l : s.layers) {
    const double sum = s.scores.col(l).sum();
    if (sum > best_sum) {
      best_sum = sum;
      best_layer = l;
    }
  }

  std::vector<int> order(static_cast<std::size_t>(s.num_heads()));
  std::iota(order.begin(), order.end(), 0);
  const auto col = s.scores.col(best_layer);
  std::stable_sort(order.begin(), order.end(), [&col](int a, int b) { return col(a) > col(b); });
  order.resize(static_cast<std::size_t>(k));

  return {best_layer, std::move(order), s.fingerprint()};
}

void write_matrix_csv(const EvidenceScoreMatrix& s, std::ostream& out) {
  out << "head";
  for (int l = 0; l < s.num_layers(); ++l) out << ",layer" << l;
  out << '\n';
  std::vector<char> covered(static_cast<std::size_t>(s.num_layers()), 0);
  for (int l : s.layers) covered[static_cast<std::size_t>(l)] = 1;
  std::array<char, 32> buf{};
  for (int h = 0; h < s.num_heads(); ++h) {
    out << h;
    for (int l = 0; l < s.num_layers(); ++l) {
      out << ',';
      if (!covered[static_cast<std::size_t>(l)]) continue;
      auto res = std::to_chars(buf.data(), buf.data() + buf.size(), s.scores(h, l));
      out.write(buf.data(), res.ptr - buf.data());
    }
    out << '\n';
  }
}

}  // namespace ehpc
