#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "acd/corpus.hpp"

namespace acd {

// Canonical interchange: one JSON object per line,
//   {"id", "source_corpus", "text", "spans": [{"start_char", "end_char", "kind"}], "tokens"?}
// Offsets count code points. "tokens" ([[start_char, end_char], ...]) is
// optional; it preserves the original tokenization of token-table corpora so
// statistics stay exact. Without it the text is re-tokenized on load.
std::string to_canonical_line(const LabeledDocument& doc, bool with_tokens = false);
// Throws ParseError for malformed records. Warnings from span snapping are
// appended to `warnings` when given.
LabeledDocument from_canonical_line(std::string_view line, std::vector<Diagnostic>* warnings = nullptr);

void write_canonical(std::ostream& out, std::span<const LabeledDocument> docs, bool with_tokens = false);
std::vector<LabeledDocument> read_canonical(std::istream& in, std::vector<Diagnostic>* warnings = nullptr);
std::vector<LabeledDocument> read_canonical_file(const std::filesystem::path& path,
                                                 std::vector<Diagnostic>* warnings = nullptr);

// Two tab-separated columns (token, tag); a blank line ends a document.
// Throws ParseError with the 1-based line number on malformed rows or
// unknown tags.
std::vector<std::vector<TokenRow>> read_token_table(std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace acd
