#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ehpc {

/// Byte-level tokenizer: one token per input byte (ids 0..255) plus a few
/// special ids above that range.
///
/// Token texts are kept valid UTF-8 so they survive the JSON trace header: the
/// lead byte of a multi-byte sequence carries the whole character and its
/// continuation bytes carry "". Bytes that are not part of a well-formed
/// sequence render as U+FFFD. Concatenating the texts of a well-formed input
/// reproduces it exactly.
class ByteTokenizer {
 public:
  static constexpr std::int32_t kBos = 256;
  static constexpr std::int32_t kEos = 257;
  static constexpr std::int32_t kSep = 258;
  static constexpr std::int32_t kVocabSize = 259;

  struct Encoding {
    std::vector<std::int32_t> ids;
    std::vector<std::string> texts;
  };

  Encoding encode(std::string_view text) const;
  std::vector<std::int32_t> ids(std::string_view text) const;
  std::string decode(const std::vector<std::int32_t>& ids) const;
};

}  // namespace ehpc
