#include "doctest.h"

#include "ehpc/errors.hpp"
#include "ehpc/fabricate.hpp"
#include "ehpc/serialization.hpp"

using namespace ehpc;

TEST_CASE("concentrated last row follows the mass rule") {
  FabricationSpec spec;
  spec.seq_len = 4;
  spec.cells = {{0, 0, {1, 2}, 0.8}};
  const AttentionTrace t = fabricate_trace(spec);
  const auto row = t.last_row(0, 0);
  CHECK(row[0] == doctest::Approx(0.1).epsilon(1e-7));
  CHECK(row[1] == doctest::Approx(0.4).epsilon(1e-7));
  CHECK(row[2] == doctest::Approx(0.4).epsilon(1e-7));
  CHECK(row[3] == doctest::Approx(0.1).epsilon(1e-7));
  CHECK(validate_trace(t).empty());
}

TEST_CASE("mass equal to the uniform share gives a uniform row") {
  for (int n : {4, 5, 8, 10}) {
    FabricationSpec spec;
    spec.seq_len = n;
    spec.cells = {{0, 0, {0, n - 1}, uniform_mass(2, n)}};
    const AttentionTrace t = fabricate_trace(spec);
    const auto row = t.last_row(0, 0);
    for (int j = 0; j < n; ++j) CHECK(row[j] == static_cast<float>(1.0 / n));
  }
}

TEST_CASE("without concentrated cells every row is uniform-causal") {
  FabricationSpec spec;
  spec.num_layers = 2;
  spec.num_heads = 3;
  spec.seq_len = 5;
  spec.window = 5;
  const AttentionTrace t = fabricate_trace(spec);
  CHECK(validate_trace(t).empty());
  CHECK(t.layers_present == std::vector<int>{0, 1});
  for (const auto& c : t.cells)
    for (int r = 0; r < 5; ++r)
      for (int j = 0; j < 5; ++j) CHECK(c(r, j) == (j <= r ? static_cast<float>(1.0 / (r + 1)) : 0.0f));
  CHECK(t.token_ids == std::vector<std::int32_t>{0, 1, 2, 3, 4});
}

TEST_CASE("window rows that cover the targets are concentrated too") {
  FabricationSpec spec;
  spec.seq_len = 6;
  spec.window = 4;  // query positions 2..5
  spec.cells = {{0, 0, {3}, 0.5}};
  const AttentionTrace t = fabricate_trace(spec);
  const auto& c = t.cell(0, 0);
  CHECK(c(0, 0) == static_cast<float>(1.0 / 3));  // q=2 < target: uniform
  CHECK(c(1, 3) == 0.5f);                          // q=3 covers [0,3]; target holds mass
  CHECK(c(1, 0) == static_cast<float>(0.5 / 3));
  CHECK(c(3, 3) == 0.5f);
  CHECK(validate_trace(t).empty());
}

TEST_CASE("targets covering the whole prefix collapse to uniform over targets") {
  FabricationSpec spec;
  spec.seq_len = 3;
  spec.cells = {{0, 0, {0, 1, 2}, 0.4}};
  const AttentionTrace t = fabricate_trace(spec);
  const auto row = t.last_row(0, 0);
  for (int j = 0; j < 3; ++j) CHECK(row[j] == static_cast<float>(1.0 / 3));
}

TEST_CASE("fabrication argument errors") {
  FabricationSpec spec;
  spec.seq_len = 4;
  spec.cells = {{0, 0, {1}, 1.2}};
  CHECK_THROWS_AS(fabricate_trace(spec), ArgumentError);
  spec.cells = {{0, 0, {}, 0.5}};
  CHECK_THROWS_AS(fabricate_trace(spec), ArgumentError);
  spec.cells = {{0, 0, {4}, 0.5}};
  CHECK_THROWS_AS(fabricate_trace(spec), ArgumentError);
  spec.cells = {{0, 1, {1}, 0.5}};
  CHECK_THROWS_AS(fabricate_trace(spec), ArgumentError);
  spec.cells = {{0, 0, {1}, 0.5}, {0, 0, {2}, 0.5}};
  CHECK_THROWS_AS(fabricate_trace(spec), ArgumentError);
  spec.cells.clear();
  spec.window = 5;
  CHECK_THROWS_AS(fabricate_trace(spec), ArgumentError);
}

TEST_CASE("fabrication spec JSON with text") {
  const FabricationSpec spec = fabrication_from_json(
      R"({"num_layers":2,"num_heads":2,"seq_len":5,"window":2,"text":"hello",)"
      R"("cells":[{"layer":1,"head":0,"targets":[1,2],"mass":0.9}]})");
  CHECK(spec.token_ids == std::vector<std::int32_t>{'h', 'e', 'l', 'l', 'o'});
  const AttentionTrace t = fabricate_trace(spec);
  CHECK(t.token_texts == std::vector<std::string>{"h", "e", "l", "l", "o"});
  CHECK(t.last_row(1, 0)[1] == doctest::Approx(0.45).epsilon(1e-7));
  CHECK_THROWS_AS(fabrication_from_json(R"({"num_layers":1,"num_heads":1,"seq_len":2,"text":"abc"})"),
                  ArgumentError);
  CHECK_THROWS_AS(fabrication_from_json(R"({"num_layers":1})"), FormatError);
}
