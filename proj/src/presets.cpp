#include "ehpc/presets.hpp"

#include "ehpc/errors.hpp"
#include "ehpc/serialization.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>

namespace ehpc {

namespace detail {
extern const std::string_view kEmbeddedPresets;
}

std::vector<Preset> parse_preset_catalog(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("preset catalog is not valid JSON: ") + e.what());
  }
  std::vector<Preset> out;
  try {
    for (const auto& entry : doc.at("presets")) {
      Preset p;
      p.name = entry.at("name").get<std::string>();
      p.num_layers = entry.at("num_layers").get<int>();
      p.num_heads = entry.at("num_heads").get<int>();
      p.heads.layer = entry.at("layer").get<int>();
      p.heads.heads = entry.at("heads").get<std::vector<int>>();
      p.heads.provenance = "preset:" + p.name;
      p.window = entry.value("window", 1);
      p.kernel = entry.value("kernel", 1);
      p.pool = parse_pool_kind(entry.value("pool", std::string("average")));
      out.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed preset catalog: ") + e.what());
  }
  for (const auto& p : out) {
    check_head_set(p.heads);
    if (p.heads.layer >= p.num_layers) {
      throw FormatError("preset '" + p.name + "' selects a layer beyond its model depth");
    }
    for (int h : p.heads.heads) {
      if (h >= p.num_heads) throw FormatError("preset '" + p.name + "' selects a head beyond its model width");
    }
  }
  return out;
}

std::vector<Preset> preset_catalog() {
  if (const char* dir = std::getenv(kPresetsEnv); dir != nullptr && *dir != '\0') {
    return parse_preset_catalog(read_text_file(std::filesystem::path(dir) / "presets.json"));
  }
  return parse_preset_catalog(detail::kEmbeddedPresets);
}

Preset find_preset(std::string_view name) {
  for (auto& p : preset_catalog()) {
    if (p.name == name) return p;
  }
  throw LookupError("unknown preset '" + std::string(name) + "'");
}

EvaluatorHeadSet load_preset(std::string_view name) { return find_preset(name).heads; }

}  // namespace ehpc
