#include "ehpc/trace_io.hpp"

#include "ehpc/errors.hpp"

#include "json.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace ehpc {

namespace {

using ojson = nlohmann::ordered_json;

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0x0000FF00u) | ((v << 8) & 0x00FF0000u) | (v << 24);
}

// In-place conversion between host order and little-endian. A no-op on
// little-endian hosts.
void to_from_le(char* bytes, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    (void)bytes;
    (void)count;
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t v;
      std::memcpy(&v, bytes + 4 * i, 4);
      v = byteswap32(v);
      std::memcpy(bytes + 4 * i, &v, 4);
    }
  }
}

std::string header_line(const AttentionTrace& t) {
  ojson h;
  h["magic"] = kTraceMagic;
  h["version"] = kTraceVersion;
  h["num_layers"] = t.num_layers;
  h["num_heads"] = t.num_heads;
  h["seq_len"] = t.seq_len;
  h["window"] = t.window;
  h["dtype"] = kTraceDtype;
  h["layers_present"] = t.layers_present;
  h["token_ids"] = t.token_ids;
  if (t.token_texts) h["token_texts"] = *t.token_texts;
  h["model_id"] = t.model_id;
  try {
    return h.dump() + '\n';
  } catch (const nlohmann::json::type_error& e) {
    throw ValidationError(std::string("token_texts: header is not valid UTF-8: ") + e.what());
  }
}

template <typename T>
T field(const ojson& h, const char* name) {
  auto it = h.find(name);
  if (it == h.end()) throw FormatError(std::string("trace header missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("trace header field '") + name + "' has the wrong type");
  }
}

}  // namespace

std::size_t write_trace(const AttentionTrace& trace, std::ostream& sink) {
  require_valid(trace);
  const std::string header = header_line(trace);
  sink.write(header.data(), static_cast<std::streamsize>(header.size()));

  std::vector<char> buffer;
  std::size_t payload = 0;
  for (const auto& c : trace.cells) {
    const std::size_t n = static_cast<std::size_t>(c.size());
    buffer.resize(n * sizeof(float));
    std::memcpy(buffer.data(), c.data(), buffer.size());
    to_from_le(buffer.data(), n);
    sink.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    payload += buffer.size();
  }
  sink.flush();
  if (!sink) throw IoError("failed writing trace to output stream");
  return header.size() + payload;
}

AttentionTrace read_trace(std::istream& source, ReadOptions options) {
  std::string line;
  if (!std::getline(source, line)) throw FormatError("trace is empty: no header line");
  if (source.eof()) throw FormatError("trace header is not newline-terminated");

  ojson h;
  try {
    h = ojson::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("trace header is not valid JSON: ") + e.what());
  }
  if (!h.is_object()) throw FormatError("trace header is not a JSON object");
  if (field<std::string>(h, "magic") != kTraceMagic) throw FormatError("bad magic, not an EHPCTRACE file");
  const int version = field<int>(h, "version");
  if (version != kTraceVersion) {
    throw FormatError("unsupported trace version " + std::to_string(version));
  }
  if (field<std::string>(h, "dtype") != kTraceDtype) throw FormatError("unsupported dtype, expected f32le");

  AttentionTrace t;
  t.num_layers = field<int>(h, "num_layers");
  t.num_heads = field<int>(h, "num_heads");
  t.seq_len = field<int>(h, "seq_len");
  t.window = field<int>(h, "window");
  t.layers_present = field<std::vector<int>>(h, "layers_present");
  t.token_ids = field<std::vector<std::int32_t>>(h, "token_ids");
  t.model_id = field<std::string>(h, "model_id");
  if (h.contains("token_texts")) t.token_texts = field<std::vector<std::string>>(h, "token_texts");

  if (t.num_layers < 1 || t.num_heads < 1 || t.seq_len < 1 || t.window < 1 ||
      t.window > t.seq_len) {
    throw FormatError("trace header has inconsistent dimensions");
  }
  // Guards the allocation below against absurd headers.
  constexpr long long kMaxCellElements = 1LL << 31;
  if (static_cast<long long>(t.window) * t.seq_len > kMaxCellElements) {
    throw FormatError("trace header declares an oversized cell");
  }

  const std::size_t expected = t.payload_bytes();
  t.cells.reserve(t.layers_present.size() * static_cast<std::size_t>(t.num_heads));
  std::size_t got = 0;
  for (std::size_t i = 0; i < t.layers_present.size() * static_cast<std::size_t>(t.num_heads); ++i) {
    AttentionRows c(t.window, t.seq_len);
    const auto bytes = static_cast<std::streamsize>(c.size() * sizeof(float));
    source.read(reinterpret_cast<char*>(c.data()), bytes);
    got += static_cast<std::size_t>(source.gcount());
    if (source.gcount() != bytes) {
      throw LengthError("trace payload truncated: expected " + std::to_string(expected) +
                        " bytes, got " + std::to_string(got));
    }
    to_from_le(reinterpret_cast<char*>(c.data()), static_cast<std::size_t>(c.size()));
    t.cells.push_back(std::move(c));
  }
  if (source.peek() != std::char_traits<char>::eof()) {
    throw LengthError("trace payload longer than the " + std::to_string(expected) +
                      " bytes declared by its header");
  }

  if (options.validate) {
    require_valid(t);
  } else {
    // Row contents are not checked, but the container must still be coherent.
    for (const auto& v : validate_trace(t)) {
      if (v.invariant != "nonnegative" && v.invariant != "row_sum" && v.invariant != "causality") {
        throw ValidationError("invalid trace: " + to_string(v));
      }
    }
  }
  return t;
}

std::size_t write_trace_file(const AttentionTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return write_trace(trace, out);
}

AttentionTrace read_trace_file(const std::filesystem::path& path, ReadOptions options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return read_trace(in, options);
}

}  // namespace ehpc
