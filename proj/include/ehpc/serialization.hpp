#pragma once

#include "ehpc/compressor.hpp"
#include "ehpc/cost_model.hpp"
#include "ehpc/fabricate.hpp"
#include "ehpc/pilot.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ehpc {

// JSON documents exchanged by the CLI. Writers emit a single line followed by
// '\n' with keys in a fixed order, so equal inputs give byte-identical files.

/// Throws FormatError if layer < 0, a head is negative or repeated, or the
/// set is empty.
void check_head_set(const EvaluatorHeadSet& heads);

/// {"layer":int,"heads":[int...],"k":int,"provenance":string}
std::string heads_to_json(const EvaluatorHeadSet& heads);
/// Throws FormatError on malformed input, including k != |heads|.
EvaluatorHeadSet heads_from_json(std::string_view json);

/// {"retained_indices":[...],"original_len":N,"kappa2":float[,"text":string]}
std::string compressed_to_json(const CompressedPrompt& prompt, bool include_text);

std::string cost_report_to_json(const CostReport& report);

/// Keys: num_layers, num_heads, seq_len, window, cells [{layer, head,
/// targets, mass}], and optionally model_id, token_ids, and text (byte
/// tokenized; must produce exactly seq_len tokens).
FabricationSpec fabrication_from_json(std::string_view json);

/// A pilot batch: trace files (relative to the manifest's directory) and
/// their evidence indices in that trace's token coordinates.
struct ManifestEntry {
  std::string trace;
  std::vector<int> evidence;
};

/// {"cases":[{"trace":"case_000.ehpct","evidence":[...]}, ...]}
std::vector<ManifestEntry> manifest_from_json(std::string_view json);
std::string manifest_to_json(const std::vector<ManifestEntry>& entries);

/// Whole-file helpers that throw IoError naming the path.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace ehpc
