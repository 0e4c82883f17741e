#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "acd/corpus.hpp"

namespace acd {

// Inline markup dialect: <claim>...</claim> and <premise>...</premise>.
// Matching is case-insensitive and tolerates whitespace inside the brackets
// ("< /Claim >"); output is always canonical lowercase.

enum class TagEdge : std::uint8_t { Open, Close };

struct TagEvent {
  ComponentType kind;
  TagEdge edge;
  std::size_t position;  // byte offset of '<'
  std::size_t length;    // bytes up to and including '>'

  bool operator==(const TagEvent&) const = default;
};

// Lexes recognized tags left to right without interpreting nesting. Anything
// else that looks like markup ("<claims>", "<b>") is not an event.
std::vector<TagEvent> tag_skeleton(std::string_view tagged);

// Inserts tags at the character boundaries of each span. Throws
// ValidationError on overlapping spans or when the text already contains a
// recognized tag (it could not be told apart from inserted markup).
std::string encode_xml(const LabeledDocument& doc);

enum class RepairKind : std::uint8_t {
  UnclosedTag,     // open tag still open at end of text
  UnopenedClose,   // close tag with nothing open
  MismatchedClose, // close tag of the other kind
  NestedOpen,      // open tag while another is open
  EmptySpan,       // tags enclosing no token
  SharedToken,     // two spans snap onto the same token
};

std::string_view to_string(RepairKind kind);

struct Repair {
  RepairKind kind;
  std::size_t position;  // byte offset into the tagged input

  bool operator==(const Repair&) const = default;
};

struct ParseOutcome {
  std::string plain_text;
  std::vector<Token> tokens;          // tokenize(plain_text)
  std::vector<CharSpan> char_spans;   // byte extents in plain_text, as tagged
  std::vector<ComponentSpan> spans;   // over `tokens`
  std::vector<Repair> repairs;
};

enum class ParseMode : std::uint8_t { Strict, Lenient };

// Strips recognized tags and records the spans they delimit. Lenient mode
// never fails: an unclosed tag closes at the end, stray closers are dropped,
// and an open tag met while another is open closes the first one. Strict mode
// throws ParseError at the first malformation, carrying its byte position.
ParseOutcome decode_xml(std::string_view tagged, ParseMode mode = ParseMode::Lenient);

// Removes recognized tags, keeping everything else byte for byte.
std::string strip_tags(std::string_view tagged);

}  // namespace acd
