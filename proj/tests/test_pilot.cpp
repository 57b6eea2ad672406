#include "doctest.h"

#include "ehpc/errors.hpp"
#include "ehpc/fabricate.hpp"
#include "ehpc/pilot.hpp"
#include "ehpc/presets.hpp"
#include "ehpc/serialization.hpp"
#include "ehpc/tokenizer.hpp"
#include "test_support.hpp"

#include <cstdlib>
#include <set>
#include <sstream>

using namespace ehpc;

namespace {

std::vector<std::int32_t> seq(int n, std::int32_t base) {
  std::vector<std::int32_t> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = base + i;
  return v;
}

// Naive oracle: walk every key of the final row and add it when listed.
Eigen::MatrixXd naive_evidence(const AttentionTrace& t, const std::vector<int>& evidence) {
  const std::set<int> wanted(evidence.begin(), evidence.end());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(t.num_heads, t.num_layers);
  for (int layer : t.layers_present)
    for (int head = 0; head < t.num_heads; ++head) {
      const auto& c = t.cell(layer, head);
      double sum = 0.0;
      for (int j = 0; j < t.seq_len; ++j)
        if (wanted.count(j)) sum += static_cast<double>(c(t.window - 1, j));
      out(head, layer) = sum;
    }
  return out;
}

EvidenceScoreMatrix matrix_of(Eigen::MatrixXd scores) {
  EvidenceScoreMatrix s;
  s.scores = std::move(scores);
  s.cases_averaged = 1;
  for (int l = 0; l < s.num_layers(); ++l) s.layers.push_back(l);
  return s;
}

}  // namespace

TEST_CASE("haystack placement") {
  const auto filler = seq(7, 100);
  const auto needle = seq(4, 200);
  const auto question = seq(6, 300);

  SUBCASE("depth 0 puts the needle first") {
    const PilotCase c = synthesize_haystack(filler, needle, question, 20, 0.0);
    CHECK(c.evidence == std::vector<int>{0, 1, 2, 3});
  }
  SUBCASE("depth 0.5 in N=20") {
    const PilotCase c = synthesize_haystack(filler, needle, question, 20, 0.5);
    CHECK(c.evidence == std::vector<int>{5, 6, 7, 8});
    CHECK(c.token_ids.size() == 20);
    for (int i = 0; i < 4; ++i) CHECK(c.token_ids[static_cast<std::size_t>(5 + i)] == 200 + i);
    for (int i = 0; i < 6; ++i) CHECK(c.token_ids[static_cast<std::size_t>(14 + i)] == 300 + i);
    // Filler cycles: positions 0..4 then 9..13 take filler[0..9] mod 7.
    CHECK(c.token_ids[0] == 100);
    CHECK(c.token_ids[9] == 105);
    CHECK(c.token_ids[11] == 100);
    CHECK(c.question_len == 6);
    CHECK(c.kind == CaseKind::Qa);
  }
  SUBCASE("depth 1 puts the needle right before the question") {
    const PilotCase c = synthesize_haystack(filler, needle, question, 20, 1.0);
    CHECK(c.evidence == std::vector<int>{10, 11, 12, 13});
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(synthesize_haystack(filler, needle, question, 9, 0.5), ArgumentError);
    CHECK_THROWS_AS(synthesize_haystack(filler, needle, question, 20, 1.5), ArgumentError);
    CHECK_THROWS_AS(synthesize_haystack({}, needle, question, 20, 0.5), ArgumentError);
    CHECK_NOTHROW(synthesize_haystack({}, needle, question, 10, 0.5));
  }
}

TEST_CASE("chain cases") {
  const auto filler = seq(13, 100);
  const auto question = seq(10, 300);

  SUBCASE("one variable with one hop is a needle case") {
    const PilotCase chain = synthesize_chain_case({{"X", 1}}, filler, question, 60, {0.3});
    const PilotCase qa = synthesize_haystack(filler, chain_statement("X", 1), question, 60, 0.3);
    CHECK(chain.token_ids == qa.token_ids);
    CHECK(chain.evidence == qa.evidence);
    CHECK(chain.kind == CaseKind::MultiHop);
  }
  SUBCASE("two hops at 0.2 and 0.7 in N=100") {
    // "VAR X_1 = X_0 ;\n" is 16 byte tokens; free span 100 - 16 - 10 = 74.
    REQUIRE(chain_statement("X", 1).size() == 16);
    const PilotCase c = synthesize_chain_case({{"X", 2}}, filler, question, 100, {0.2, 0.7});
    std::vector<int> expected;
    for (int i = 14; i < 30; ++i) expected.push_back(i);  // floor(0.2 * 74) = 14
    for (int i = 51; i < 67; ++i) expected.push_back(i);  // floor(0.7 * 74) = 51
    CHECK(c.evidence == expected);
    CHECK(ByteTokenizer{}.decode({c.token_ids.begin() + 51, c.token_ids.begin() + 67}) ==
          "VAR X_2 = X_1 ;\n");
  }
  SUBCASE("overlapping hops are a placement error") {
    CHECK_THROWS_AS(synthesize_chain_case({{"X", 1}, {"Y", 1}}, filler, question, 100, {0.5, 0.55}),
                    PlacementError);
  }
  SUBCASE("argument errors") {
    CHECK_THROWS_AS(synthesize_chain_case({{"X", 2}}, filler, question, 100, {0.2}), ArgumentError);
    CHECK_THROWS_AS(synthesize_chain_case({{"X", 5}}, filler, question, 60, {0, 0.2, 0.4, 0.6, 0.8}),
                    ArgumentError);
    CHECK_THROWS_AS(synthesize_chain_case({}, filler, question, 60, {}), ArgumentError);
  }
}

TEST_CASE("needle sweep enumerates lengths x depths") {
  const auto cases = needle_sweep(seq(5, 0), seq(2, 50), seq(3, 60), {20, 40}, {0.0, 0.5, 1.0});
  REQUIRE(cases.size() == 6);
  CHECK(cases[4].token_ids.size() == 40);
  CHECK(cases[4].evidence == std::vector<int>{17, 18});
}

TEST_CASE("accumulate_evidence examples") {
  AttentionTrace t = make_empty_trace("acc", 1, 1, 4, 1, {0});
  t.cell(0, 0) << 0.1f, 0.2f, 0.3f, 0.4f;
  CHECK(accumulate_evidence(t, {1, 2}).scores(0, 0) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(accumulate_evidence(t, {0, 1, 2, 3}).scores(0, 0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(accumulate_evidence(t, {}).scores(0, 0) == 0.0);
  CHECK(accumulate_evidence(t, {2, 1, 2}).scores(0, 0) == accumulate_evidence(t, {1, 2}).scores(0, 0));
  CHECK_THROWS_AS(accumulate_evidence(t, {4}), ArgumentError);
  CHECK_THROWS_AS(accumulate_evidence(t, {-1}), ArgumentError);
}

TEST_CASE("accumulate_evidence uses only the final row") {
  AttentionTrace t = make_empty_trace("rows", 1, 1, 3, 2, {0});
  t.cell(0, 0) << 0.0f, 1.0f, 0.0f, 0.0f, 0.0f, 1.0f;
  CHECK(accumulate_evidence(t, {1}).scores(0, 0) == 0.0);
  CHECK(accumulate_evidence(t, {2}).scores(0, 0) == 1.0);
}

TEST_CASE("accumulate_evidence matches the naive oracle and is monotone") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 50; ++i) {
    const AttentionTrace t = testing::random_trace(rng);
    std::vector<int> evidence;
    for (int j = 0; j < t.seq_len; ++j)
      if (testing::uniform_int(rng, 0, 2) == 0) evidence.push_back(j);
    const EvidencePartial p = accumulate_evidence(t, evidence);
    CHECK((p.scores - naive_evidence(t, evidence)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(p.layers == t.layers_present);

    std::vector<int> bigger = evidence;
    bigger.push_back(testing::uniform_int(rng, 0, t.seq_len - 1));
    const EvidencePartial q = accumulate_evidence(t, bigger);
    CHECK((q.scores.array() >= p.scores.array()).all());
    CHECK((p.scores.array() >= 0.0).all());
    CHECK((p.scores.array() <= 1.0 + kRowSumTolerance).all());
  }
}

TEST_CASE("build_matrix averages cases") {
  EvidencePartial a{Eigen::MatrixXd::Constant(2, 3, 0.2), {0, 1, 2}};
  EvidencePartial b{Eigen::MatrixXd::Constant(2, 3, 0.6), {0, 1, 2}};
  const std::vector<EvidencePartial> one{a};
  CHECK(build_matrix(one).scores == a.scores);
  CHECK(build_matrix(one).cases_averaged == 1);
  const std::vector<EvidencePartial> two{a, b};
  const auto s = build_matrix(two);
  CHECK(s.cases_averaged == 2);
  CHECK(s.scores(1, 2) == doctest::Approx(0.4));
  const std::vector<EvidencePartial> zeros{{Eigen::MatrixXd::Zero(2, 2), {0, 1}},
                                           {Eigen::MatrixXd::Zero(2, 2), {0, 1}}};
  CHECK(build_matrix(zeros).scores.isZero());

  const std::vector<EvidencePartial> mismatch{a, {Eigen::MatrixXd::Zero(3, 3), {0, 1, 2}}};
  CHECK_THROWS_AS(build_matrix(mismatch), ArgumentError);
  const std::vector<EvidencePartial> coverage{a, {Eigen::MatrixXd::Zero(2, 3), {0, 2}}};
  CHECK_THROWS_AS(build_matrix(coverage), ArgumentError);
  CHECK_THROWS_AS(build_matrix(std::vector<EvidencePartial>{}), ArgumentError);
}

TEST_CASE("select_heads examples") {
  Eigen::MatrixXd m(2, 2);
  m << 0.9, 0.1, 0.2, 0.1;  // heads x layers
  const auto picked = select_heads(matrix_of(m), 1);
  CHECK(picked.layer == 0);
  CHECK(picked.heads == std::vector<int>{0});

  const auto tied = select_heads(matrix_of(Eigen::MatrixXd::Constant(4, 3, 0.25)), 3);
  CHECK(tied.layer == 0);
  CHECK(tied.heads == std::vector<int>{0, 1, 2});

  Eigen::MatrixXd w(3, 2);
  w << 0.1, 0.5, 0.3, 0.2, 0.2, 0.4;
  const auto all = select_heads(matrix_of(w), 3);
  CHECK(all.layer == 1);
  CHECK(all.heads == std::vector<int>{0, 2, 1});
  CHECK(all.k() == 3);

  CHECK_THROWS_AS(select_heads(matrix_of(w), 4), ArgumentError);
  CHECK_THROWS_AS(select_heads(matrix_of(w), 0), ArgumentError);
}

TEST_CASE("select_heads ignores uncaptured layers") {
  EvidenceScoreMatrix s = matrix_of(Eigen::MatrixXd::Zero(2, 3));
  s.scores(0, 0) = 0.9;  // layer 0 has data but is not covered
  s.scores(1, 2) = 0.3;
  s.layers = {1, 2};
  CHECK(select_heads(s, 1).layer == 2);
}

TEST_CASE("select_heads is scale invariant and deterministic") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const int h = testing::uniform_int(rng, 1, 6);
    const int l = testing::uniform_int(rng, 1, 5);
    Eigen::MatrixXd m(h, l);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < l; ++c) m(r, c) = testing::uniform_int(rng, 0, 4) / 4.0;  // many ties
    const int k = testing::uniform_int(rng, 1, h);
    const auto base = select_heads(matrix_of(m), k);
    for (double c : {1e-6, 3.0, 1e6}) {
      const auto scaled = select_heads(matrix_of(m * c), k);
      CHECK(scaled.layer == base.layer);
      CHECK(scaled.heads == base.heads);
    }
    CHECK(select_heads(matrix_of(m), k) == base);
  }
}

TEST_CASE("selected heads maximize the masked Frobenius norm within the chosen layer") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const int h = testing::uniform_int(rng, 1, 7);
    const int l = testing::uniform_int(rng, 1, 4);
    Eigen::MatrixXd m(h, l);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < l; ++c) m(r, c) = testing::uniform_real(rng, 0.0, 1.0);
    const int k = testing::uniform_int(rng, 1, h);
    const auto picked = select_heads(matrix_of(m), k);

    // Enumerate every head subset of size <= k inside the selected layer.
    double best = -1;
    unsigned best_mask = 0;
    for (unsigned mask = 1; mask < (1u << h); ++mask) {
      if (__builtin_popcount(mask) > k) continue;
      double norm2 = 0;
      for (int r = 0; r < h; ++r)
        if (mask & (1u << r)) norm2 += m(r, picked.layer) * m(r, picked.layer);
      if (norm2 > best) {
        best = norm2;
        best_mask = mask;
      }
    }
    unsigned picked_mask = 0;
    for (int r : picked.heads) picked_mask |= 1u << r;
    CHECK(picked_mask == best_mask);
  }
}

TEST_CASE("planted head is recovered") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    FabricationSpec spec;
    spec.num_layers = testing::uniform_int(rng, 1, 5);
    spec.num_heads = testing::uniform_int(rng, 1, 6);
    spec.seq_len = testing::uniform_int(rng, 4, 40);
    std::vector<int> targets;
    const int count = testing::uniform_int(rng, 1, spec.seq_len / 2);
    std::set<int> pool;
    while (static_cast<int>(pool.size()) < count) pool.insert(testing::uniform_int(rng, 0, spec.seq_len - 1));
    targets.assign(pool.begin(), pool.end());
    const double background = uniform_mass(count, spec.seq_len);
    const double mass = testing::uniform_real(rng, std::min(1.0, 2 * background), 1.0);
    const int layer = testing::uniform_int(rng, 0, spec.num_layers - 1);
    const int head = testing::uniform_int(rng, 0, spec.num_heads - 1);
    spec.cells = {{layer, head, targets, mass}};
    const std::vector<EvidencePartial> parts{accumulate_evidence(fabricate_trace(spec), targets)};
    const auto picked = select_heads(build_matrix(parts), 1);
    CHECK(picked.layer == layer);
    CHECK(picked.heads == std::vector<int>{head});
  }
}

TEST_CASE("S matrix CSV") {
  EvidenceScoreMatrix s = matrix_of(Eigen::MatrixXd::Zero(2, 3));
  s.scores(0, 1) = 0.25;
  s.scores(1, 2) = 0.5;
  s.layers = {1, 2};
  std::ostringstream os;
  write_matrix_csv(s, os);
  CHECK(os.str() == "head,layer0,layer1,layer2\n0,,0.25,0\n1,,0,0.5\n");
}

TEST_CASE("presets carry the published head lists") {
  const auto llama = load_preset("llama-3.1-8b-instruct");
  CHECK(llama.layer == 13);
  CHECK(llama.heads == std::vector<int>{18, 13, 21, 8, 11, 1, 4, 3});
  const auto code = load_preset("codellama-7b");
  CHECK(code.layer == 14);
  CHECK(code.heads == std::vector<int>{24, 3, 18, 7, 29, 2, 9, 1});
  const auto phi = load_preset("phi-3.5-mini-instruct");
  CHECK(phi.layer == 17);
  CHECK(phi.heads == std::vector<int>{7, 17, 30, 2, 6, 16, 25, 18});
  CHECK(phi.k() == 8);

  const auto p = find_preset("llama-3.1-8b-instruct");
  CHECK(p.window == 16);
  CHECK(p.kernel == 32);
  CHECK(p.pool == PoolKind::Average);
  CHECK(find_preset("phi-3.5-mini-instruct").window == 4);

  CHECK_THROWS_AS(load_preset("gpt-5"), LookupError);
}

TEST_CASE("heads JSON round trip and validation") {
  for (const auto* name : {"llama-3.1-8b-instruct", "codellama-7b", "phi-3.5-mini-instruct"}) {
    const auto h = load_preset(name);
    const std::string json = heads_to_json(h);
    CHECK(heads_from_json(json) == h);
  }
  CHECK(heads_to_json({2, {1, 0}, "x"}) == "{\"layer\":2,\"heads\":[1,0],\"k\":2,\"provenance\":\"x\"}\n");
  CHECK_THROWS_AS(heads_from_json(R"({"layer":1,"heads":[1,2],"k":3,"provenance":""})"), FormatError);
  CHECK_THROWS_AS(heads_from_json(R"({"layer":1,"heads":[1,1],"k":2,"provenance":""})"), FormatError);
  CHECK_THROWS_AS(heads_from_json(R"({"layer":1})"), FormatError);
  CHECK_THROWS_AS(heads_from_json("[]"), FormatError);
}

TEST_CASE("EHPC_PRESETS overrides the built-in catalog") {
  testing::TempDir dir("presets");
  write_text_file(dir / "presets.json",
                  R"({"presets":[{"name":"tiny","num_layers":2,"num_heads":4,"layer":1,"heads":[3,0],)"
                  R"("window":2,"kernel":3,"pool":"max"}]})");
  ::setenv(kPresetsEnv, dir.path().c_str(), 1);
  const Preset p = find_preset("tiny");
  CHECK(p.heads.heads == std::vector<int>{3, 0});
  CHECK(p.pool == PoolKind::Max);
  CHECK_THROWS_AS(load_preset("llama-3.1-8b-instruct"), LookupError);
  ::unsetenv(kPresetsEnv);
  CHECK(load_preset("llama-3.1-8b-instruct").layer == 13);

  CHECK_THROWS_AS(parse_preset_catalog(R"({"presets":[{"name":"bad","num_layers":2,"num_heads":2,)"
                                       R"("layer":5,"heads":[0]}]})"),
                  FormatError);
}
