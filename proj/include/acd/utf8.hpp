#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Minimal UTF-8 helpers. Invalid bytes decode as U+FFFD and consume one byte,
// so every function here is total.
namespace acd::utf8 {

struct Decoded {
  char32_t codepoint;
  std::size_t length;  // bytes consumed, >= 1
};

Decoded decode(std::string_view text, std::size_t pos);
void append(std::string& out, char32_t cp);

bool is_space(char32_t cp);
bool is_punct(char32_t cp);

// Simple case folding for Latin, Greek and Cyrillic letters.
char32_t fold_case(char32_t cp);
// Maps typographic punctuation variants onto their ASCII counterpart
// (curly quotes, dashes, ellipsis); other code points are unchanged.
std::string fold_punct(char32_t cp);

std::u32string to_u32(std::string_view text);
std::size_t length(std::string_view text);

// Converts between byte offsets and code point offsets. Byte offsets that
// fall inside a multi-byte sequence map to the code point containing them.
class OffsetMap {
 public:
  explicit OffsetMap(std::string_view text);

  std::size_t to_char(std::size_t byte) const;
  std::size_t to_byte(std::size_t character) const;
  std::size_t char_count() const { return char_starts_.size() - 1; }

 private:
  std::vector<std::size_t> char_starts_;  // byte start of each code point, plus end
};

}  // namespace acd::utf8
