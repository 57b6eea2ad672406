#include "ehpc/serialization.hpp"

#include "ehpc/errors.hpp"
#include "ehpc/tokenizer.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace ehpc {

namespace {

using ojson = nlohmann::ordered_json;

ojson parse(std::string_view text, const char* what) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

std::string line(const ojson& doc) { return doc.dump() + '\n'; }

}  // namespace

void check_head_set(const EvaluatorHeadSet& heads) {
  if (heads.layer < 0) throw FormatError("head set layer must be non-negative");
  if (heads.heads.empty()) throw FormatError("head set lists no heads");
  std::set<int> seen;
  for (int h : heads.heads) {
    if (h < 0) throw FormatError("head index must be non-negative");
    if (!seen.insert(h).second) throw FormatError("head " + std::to_string(h) + " listed twice");
  }
}

std::string heads_to_json(const EvaluatorHeadSet& heads) {
  ojson doc;
  doc["layer"] = heads.layer;
  doc["heads"] = heads.heads;
  doc["k"] = heads.k();
  doc["provenance"] = heads.provenance;
  return line(doc);
}

EvaluatorHeadSet heads_from_json(std::string_view json) {
  const ojson doc = parse(json, "heads file");
  EvaluatorHeadSet out;
  int k = 0;
  try {
    out.layer = doc.at("layer").get<int>();
    out.heads = doc.at("heads").get<std::vector<int>>();
    k = doc.at("k").get<int>();
    out.provenance = doc.value("provenance", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed heads file: ") + e.what());
  }
  if (k != out.k()) {
    throw FormatError("heads file declares k=" + std::to_string(k) + " but lists " +
                      std::to_string(out.k()) + " heads");
  }
  check_head_set(out);
  return out;
}

std::string compressed_to_json(const CompressedPrompt& prompt, bool include_text) {
  ojson doc;
  doc["retained_indices"] = prompt.retained_indices;
  doc["original_len"] = prompt.original_len;
  doc["kappa2"] = prompt.achieved_kappa2;
  if (include_text) doc["text"] = render(prompt);
  return line(doc);
}

std::string cost_report_to_json(const CostReport& r) {
  ojson doc;
  const auto& p = r.params;
  doc["params"] = {{"L", p.num_layers},   {"H", p.num_heads},         {"d_k", p.head_dim},
                   {"N", p.prompt_tokens}, {"t", p.generated_tokens}, {"kappa1", p.kappa1},
                   {"kappa2", p.kappa2}};
  doc["prefill_base"] = r.prefill_base;
  doc["decode_base"] = r.decode_base;
  doc["prefill_stage1"] = r.prefill_stage1;
  doc["prefill_stage2"] = r.prefill_stage2;
  doc["prefill_pipeline"] = r.prefill_pipeline;
  doc["decode_compressed"] = r.decode_compressed;
  doc["prefill_ratio"] = r.prefill_ratio;
  doc["decode_ratio"] = r.decode_ratio;
  return line(doc);
}

FabricationSpec fabrication_from_json(std::string_view json) {
  const ojson doc = parse(json, "fabrication spec");
  FabricationSpec spec;
  std::optional<std::string> text;
  try {
    spec.num_layers = doc.at("num_layers").get<int>();
    spec.num_heads = doc.at("num_heads").get<int>();
    spec.seq_len = doc.at("seq_len").get<int>();
    spec.window = doc.value("window", 1);
    spec.model_id = doc.value("model_id", std::string("fabricated"));
    if (doc.contains("cells")) {
      for (const auto& c : doc.at("cells")) {
        spec.cells.push_back({c.at("layer").get<int>(), c.at("head").get<int>(),
                              c.at("targets").get<std::vector<int>>(), c.at("mass").get<double>()});
      }
    }
    if (doc.contains("token_ids")) spec.token_ids = doc.at("token_ids").get<std::vector<std::int32_t>>();
    if (doc.contains("text")) text = doc.at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed fabrication spec: ") + e.what());
  }
  if (text) {
    auto enc = ByteTokenizer{}.encode(*text);
    if (static_cast<int>(enc.ids.size()) != spec.seq_len) {
      throw ArgumentError("fabrication text has " + std::to_string(enc.ids.size()) +
                          " byte tokens but seq_len is " + std::to_string(spec.seq_len));
    }
    if (!spec.token_ids) spec.token_ids = std::move(enc.ids);
    spec.token_texts = std::move(enc.texts);
  }
  return spec;
}

std::vector<ManifestEntry> manifest_from_json(std::string_view json) {
  const ojson doc = parse(json, "manifest");
  std::vector<ManifestEntry> out;
  try {
    for (const auto& c : doc.at("cases")) {
      out.push_back({c.at("trace").get<std::string>(), c.at("evidence").get<std::vector<int>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  return out;
}

std::string manifest_to_json(const std::vector<ManifestEntry>& entries) {
  ojson cases = ojson::array();
  for (const auto& e : entries) cases.push_back({{"trace", e.trace}, {"evidence", e.evidence}});
  ojson doc;
  doc["cases"] = std::move(cases);
  return line(doc);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace ehpc
