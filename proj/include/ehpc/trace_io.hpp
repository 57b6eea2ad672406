#pragma once

#include "ehpc/trace.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string_view>

namespace ehpc {

inline constexpr std::string_view kTraceMagic = "EHPCTRACE";
inline constexpr int kTraceVersion = 1;
inline constexpr std::string_view kTraceDtype = "f32le";
inline constexpr std::string_view kTraceExtension = ".ehpct";

// .ehpct layout: one UTF-8 JSON header line ending in '\n', followed by the
// cells as little-endian float32 in (layer, head, row) ascending order.

/// Writes the trace and returns the number of bytes emitted. Throws
/// ValidationError if the trace is invalid and IoError if the sink fails.
std::size_t write_trace(const AttentionTrace& trace, std::ostream& sink);

struct ReadOptions {
  /// Off only for debugging exporters; structural checks always run.
  bool validate = true;
};

/// Throws FormatError on a bad header, LengthError when the payload does not
/// match the header, ValidationError for invalid attention rows.
AttentionTrace read_trace(std::istream& source, ReadOptions options = {});

std::size_t write_trace_file(const AttentionTrace& trace, const std::filesystem::path& path);
AttentionTrace read_trace_file(const std::filesystem::path& path, ReadOptions options = {});

}  // namespace ehpc
