#include "ehpc/tokenizer.hpp"

namespace ehpc {

namespace {

// Length of the well-formed UTF-8 sequence starting at text[i], or 0.
std::size_t utf8_sequence_length(std::string_view text, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  std::size_t len = 0;
  if (b0 < 0x80) return 1;
  if (b0 >= 0xC2 && b0 <= 0xDF) len = 2;
  else if (b0 >= 0xE0 && b0 <= 0xEF) len = 3;
  else if (b0 >= 0xF0 && b0 <= 0xF4) len = 4;
  else return 0;
  if (i + len > text.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xC0) != 0x80) return 0;
  }
  const auto b1 = static_cast<unsigned char>(text[i + 1]);
  // Overlongs, surrogates and code points above U+10FFFF.
  if (b0 == 0xE0 && b1 < 0xA0) return 0;
  if (b0 == 0xED && b1 > 0x9F) return 0;
  if (b0 == 0xF0 && b1 < 0x90) return 0;
  if (b0 == 0xF4 && b1 > 0x8F) return 0;
  return len;
}

}  // namespace

ByteTokenizer::Encoding ByteTokenizer::encode(std::string_view text) const {
  Encoding enc;
  enc.ids.reserve(text.size());
  enc.texts.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t len = utf8_sequence_length(text, i);
    if (len == 0) {
      enc.ids.push_back(static_cast<unsigned char>(text[i]));
      enc.texts.emplace_back("\xEF\xBF\xBD");
      ++i;
      continue;
    }
    enc.ids.push_back(static_cast<unsigned char>(text[i]));
    enc.texts.emplace_back(text.substr(i, len));
    for (std::size_t k = 1; k < len; ++k) {
      enc.ids.push_back(static_cast<unsigned char>(text[i + k]));
      enc.texts.emplace_back();
    }
    i += len;
  }
  return enc;
}

std::vector<std::int32_t> ByteTokenizer::ids(std::string_view text) const {
  std::vector<std::int32_t> out;
  out.reserve(text.size());
  for (char c : text) out.push_back(static_cast<unsigned char>(c));
  return out;
}

std::string ByteTokenizer::decode(const std::vector<std::int32_t>& ids) const {
  std::string out;
  out.reserve(ids.size());
  for (auto id : ids) {
    if (id >= 0 && id < 256) out.push_back(static_cast<char>(id));
  }
  return out;
}

}  // namespace ehpc
